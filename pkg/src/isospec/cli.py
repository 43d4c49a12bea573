"""Command-line interface.

Subcommands: validate, spectrum, transform, verify, example. Exit codes:
0 = pass, 1 = domain failure (validation/verification/admissibility),
2 = usage or I/O problems. All numeric artifacts are written with fixed
17-significant-digit formatting so identical runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import serialize
from .errors import IsospecError
from .model import (Grid, GridPotential, Problem, builtin_problem, load_problem,
                    potential_to_csv_rows, problem_to_json_obj, validate_problem)
from .ode import integrate_ivp
from .spectrum import ScanOptions, scan_spectrum
from .transform import build_perturbation, solve_kernel, transform_problem
from .verify import (check_isospectral, compare_spectra, residual_endpoint,
                     residual_goursat, residual_representation,
                     residual_transformed_eigen, residual_wave_equation)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings shared by the subcommands."""

    grid_nodes: int = 401
    lambda_min: float = -10.0
    lambda_max: float = 30.0
    tol: float = 1e-10
    rank_tol: float = 1e-6
    out_dir: str = "isospec-out"
    fmt: str = "json"

    def __post_init__(self):
        if self.grid_nodes < 5 or self.grid_nodes % 2 == 0:
            raise ValueError("--grid must be odd and >= 5 (Simpson alignment)")
        if not (np.isfinite(self.lambda_min) and np.isfinite(self.lambda_max)
                and self.lambda_min < self.lambda_max):
            raise ValueError("lambda window must be finite with --min < --max")
        if self.tol <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")

    def scan_options(self) -> ScanOptions:
        return ScanOptions(tol=min(self.tol, 1e-8), rank_tol=self.rank_tol,
                           grid_nodes=self.grid_nodes)


def _config(args) -> RunConfig:
    return RunConfig(
        grid_nodes=args.grid,
        lambda_min=args.lam_min,
        lambda_max=args.lam_max,
        tol=args.tol,
        rank_tol=args.rank_tol,
        out_dir=args.out,
        fmt=args.format,
    )


def _load_perturbation_file(path: str) -> list[dict]:
    with open(path) as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise ValueError("perturbation file must hold a JSON list of {k, i, c} entries")
    return entries


def _ensure_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def cmd_validate(args) -> int:
    problem = load_problem(args.problem)
    report = validate_problem(problem)
    print(report)
    return EXIT_OK if report.all_passed else EXIT_DOMAIN


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    problem = load_problem(args.problem)
    report = scan_spectrum(problem, cfg.lambda_min, cfg.lambda_max, cfg.scan_options())
    obj = report.to_json_obj()
    if cfg.fmt == "csv":
        print("lambda,multiplicity,residual")
        for row in obj:
            print(",".join(serialize.format_float(row[k]) if k != "multiplicity" else str(row[k])
                           for k in ("lambda", "multiplicity", "residual")))
    else:
        sys.stdout.write(serialize.dumps_json(obj))
    if args.out:
        out = _ensure_out(cfg)
        serialize.write_json(os.path.join(out, "spectrum.json"), obj)
        for k, pair in enumerate(report.pairs):
            for l in range(pair.multiplicity):
                rows = np.column_stack([report.grid.nodes, pair.phis[:, :, l]])
                header = ["x"] + [f"c{j + 1}" for j in range(problem.n)]
                serialize.write_csv(os.path.join(out, f"eigenfunction_k{k}_l{l + 1}.csv"),
                                    header, rows)
        if args.dump_path is not None:
            path = integrate_ivp(problem.potential, args.dump_path,
                                 problem.left.B.T, -problem.left.A.T, report.grid)
            n = problem.n
            rows = np.column_stack([report.grid.nodes,
                                    path.Y.reshape(report.grid.n, n * n),
                                    path.Yp.reshape(report.grid.n, n * n)])
            header = (["x"] + [f"y{i + 1}{j + 1}" for i in range(n) for j in range(n)]
                      + [f"yp{i + 1}{j + 1}" for i in range(n) for j in range(n)])
            serialize.write_csv(os.path.join(out, "path.csv"), header, rows)
    return EXIT_OK


def _run_transform(problem: Problem, entries: list[dict], cfg: RunConfig):
    report = scan_spectrum(problem, cfg.lambda_min, cfg.lambda_max, cfg.scan_options())
    pert = build_perturbation(report, entries)
    new_problem, result = transform_problem(problem, pert)
    return report, pert, new_problem, result


def cmd_transform(args) -> int:
    cfg = _config(args)
    problem = load_problem(args.problem)
    entries = _load_perturbation_file(args.perturbation)
    report, pert, new_problem, result = _run_transform(problem, entries, cfg)
    out = _ensure_out(cfg)

    q = result.q
    if not isinstance(q, GridPotential):
        q = GridPotential(report.grid, q.evaluate_many(report.grid.nodes))
    header, rows = potential_to_csv_rows(q)
    serialize.write_csv(os.path.join(out, "q_potential.csv"), header, rows)
    serialize.write_json(os.path.join(out, "boundary.json"), {
        "Atilde": result.atilde.tolist(),
        "AtildeRight": result.catilde.tolist(),
        "K00": result.k00.tolist(),
        "Kpipi": result.kpipi.tolist(),
    })
    serialize.write_json(os.path.join(out, "kernel_diagnostics.json"), result.diagnostics)
    for entry, psi in zip(pert.entries, result.psis):
        rows = np.column_stack([report.grid.nodes, psi.values])
        header = ["x"] + [f"c{j + 1}" for j in range(problem.n)]
        serialize.write_csv(os.path.join(out, f"psi_k{entry.k}_i{entry.i}.csv"), header, rows)
    print(f"wrote transform artifacts to {out} (kernel rank {pert.rank})")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    shift_tol = args.shift_tol
    failures = 0

    if args.pipeline:
        problem = load_problem(args.problem_a)
        entries = _load_perturbation_file(args.problem_b)
        report, pert, new_problem, result = _run_transform(problem, entries, cfg)
        kernel = solve_kernel(pert)
        new_report = scan_spectrum(new_problem, cfg.lambda_min, cfg.lambda_max, cfg.scan_options())
        iso = compare_spectra(report, new_report, shift_tol)
        reports = [residual_wave_equation(kernel, problem.potential, result.q)]
        reports += residual_goursat(kernel, problem, pert)
        for psi in result.psis:
            reports.append(residual_transformed_eigen(result, new_problem, psi.lam, psi))
        reports.append(residual_endpoint(kernel, pert, result.psis))
        reports.append(residual_representation(kernel, result.psis))
        print(f"[{'pass' if iso.passed else 'FAIL'}] isospectral: "
              f"max shift {iso.max_shift:.3e} (tolerance {shift_tol:.0e}), "
              f"multiplicities {'match' if iso.multiplicity_match else 'DIFFER'}")
        failures += 0 if iso.passed else 1
        for rep in reports:
            ok = rep.passed
            if rep.extras and "boundary_tolerance" in rep.extras:
                btol = rep.extras["boundary_tolerance"]
                ok = ok and rep.extras["boundary_left"] <= btol and rep.extras["boundary_right"] <= btol
            print(f"[{'pass' if ok else 'FAIL'}] {rep.name}: "
                  f"max residual {rep.max_residual:.3e} (tolerance {rep.tolerance:.0e})")
            failures += 0 if ok else 1
    else:
        pa = load_problem(args.problem_a)
        pb = load_problem(args.problem_b)
        iso = check_isospectral(pa, pb, (cfg.lambda_min, cfg.lambda_max),
                                shift_tol, cfg.scan_options())
        sys.stdout.write(serialize.dumps_json(iso.to_json_obj()))
        failures += 0 if iso.passed else 1

    if args.out:
        _ensure_out(cfg)
    return EXIT_OK if failures == 0 else EXIT_DOMAIN


def cmd_example(args) -> int:
    problem = builtin_problem(args.name)
    if args.perturbation:
        if args.name == "paper-example-2x2":
            # rank-one selection mixing both branches of the double eigenvalue
            obj = [{"k": 1, "i": 1, "c": 1.0, "theta": [-2.0, -1.0]}]
        else:
            obj = [{"k": 0, "i": 1, "c": 1.0}]
        sys.stdout.write(serialize.dumps_json(obj))
    else:
        sys.stdout.write(serialize.dumps_json(problem_to_json_obj(problem)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isospec",
                                 description="Vectorial Sturm-Liouville spectra and "
                                             "isospectral transforms on [0, pi].")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, window=(-10.0, 30.0)):
        p.add_argument("--grid", type=int, default=401, help="x-grid node count (odd, >= 5)")
        p.add_argument("--min", dest="lam_min", type=float, default=window[0],
                       help="lambda window lower edge")
        p.add_argument("--max", dest="lam_max", type=float, default=window[1],
                       help="lambda window upper edge")
        p.add_argument("--tol", type=float, default=1e-10, help="eigenvalue refinement tolerance")
        p.add_argument("--rank-tol", dest="rank_tol", type=float, default=1e-6,
                       help="relative rank threshold for multiplicities")
        p.add_argument("--out", default="", help="output directory for artifacts")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="stdout summary format")

    p = sub.add_parser("validate", help="check the structural hypotheses of a problem file")
    p.add_argument("problem")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("spectrum", help="scan eigenvalues with multiplicities")
    p.add_argument("problem")
    common(p)
    p.add_argument("--dump-path", type=float, default=None, metavar="LAMBDA",
                   help="also write the matrix solution path at this lambda as CSV")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("transform", help="construct the isospectral problem for a perturbation")
    p.add_argument("problem")
    p.add_argument("perturbation", help="JSON list of {k, i, c[, theta]} entries")
    common(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("verify", help="isospectrality of two problems, or --pipeline residual suite")
    p.add_argument("problem_a", help="problem file")
    p.add_argument("problem_b", help="second problem file, or perturbation file with --pipeline")
    p.add_argument("--pipeline", action="store_true",
                   help="treat arguments as (problem, perturbation) and verify the whole transform")
    p.add_argument("--shift-tol", dest="shift_tol", type=float, default=1e-4,
                   help="maximum allowed eigenvalue shift")
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("example", help="print a builtin problem as JSON")
    p.add_argument("name")
    p.add_argument("--perturbation", action="store_true",
                   help="print a matching sample perturbation instead")
    p.set_defaults(fn=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IsospecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
