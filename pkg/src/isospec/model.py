"""Problem definitions: grids, matrix potentials, boundary pairs.

The eigenvalue problem is

    -phi'' + P(x) phi = lambda phi,   0 <= x <= pi,
    B phi'(0) + A phi(0) = 0,         cB phi'(pi) + cA phi(pi) = 0,

with P(x) a continuous symmetric N x N matrix and the boundary pairs
satisfying B A^T = A B^T and rank [A, B] = N (self-adjointness). A problem is
the tuple (P, A, B, cA, cB); ``cA``/``cB`` are the right-endpoint matrices.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DimensionMismatch, OutOfDomain, UnknownName

SYMMETRY_RTOL = 1e-12
RANK_RTOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, pi] with n >= 3 nodes."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = _readonly(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("grid needs at least 3 nodes")
        ulp = 32 * np.spacing(np.pi)
        if abs(nodes[0]) > ulp or abs(nodes[-1] - np.pi) > ulp:
            raise ValueError("grid must span [0, pi] exactly")
        d = np.diff(nodes)
        if np.any(d <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        h = np.pi / (nodes.size - 1)
        if np.max(np.abs(d - h)) > ulp:
            raise ValueError("grid must be uniform")

    @classmethod
    def uniform(cls, n: int) -> "Grid":
        return cls(np.linspace(0.0, np.pi, n))

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def h(self) -> float:
        return np.pi / (self.nodes.size - 1)

    def same_nodes(self, other: "Grid") -> bool:
        return self.n == other.n  # uniform grids on [0, pi] coincide iff sizes match

    def index_of(self, x: float) -> int | None:
        """Node index of x if x is a node (within 1 ulp scale), else None."""
        i = int(round(x / self.h))
        if 0 <= i < self.n and abs(self.nodes[i] - x) <= 32 * np.spacing(np.pi):
            return i
        return None


class MatrixPotential:
    """Continuous symmetric N x N matrix-valued function on [0, pi].

    Subclasses implement ``evaluate_many``; symmetry of returned samples is
    enforced by symmetrizing (M + M^T)/2 after interpolation.
    """

    dimension: int
    symmetry_defect: float = 0.0

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x: float) -> np.ndarray:
        self._check_domain(np.asarray([x]))
        return self.evaluate_many(np.asarray([x], dtype=float))[0]

    def __call__(self, x: float) -> np.ndarray:
        return self.evaluate(x)

    @staticmethod
    def _check_domain(xs: np.ndarray) -> None:
        if np.any(xs < -1e-12) or np.any(xs > np.pi + 1e-12):
            raise OutOfDomain("potential evaluated outside [0, pi]")


class ConstantDiagonalPotential(MatrixPotential):
    """P(x) = diag(values), constant in x."""

    def __init__(self, values: Sequence[float]):
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        if vals.ndim != 1:
            raise DimensionMismatch("constant-diagonal potential takes a vector")
        self.values = _readonly(vals)
        self.dimension = vals.size
        self._mat = _readonly(np.diag(vals))

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        self._check_domain(xs)
        return np.broadcast_to(self._mat, (len(xs), self.dimension, self.dimension))

    def to_json_obj(self):
        return {"kind": "constant-diagonal", "values": self.values.tolist()}


class CallablePotential(MatrixPotential):
    """Closed-form potential backed by a python callable x -> N x N array."""

    def __init__(self, fn: Callable[[float], np.ndarray], dimension: int, name: str = ""):
        self.fn = fn
        self.dimension = dimension
        self.name = name

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        self._check_domain(xs)
        out = np.empty((len(xs), self.dimension, self.dimension))
        for i, x in enumerate(xs):
            m = np.asarray(self.fn(float(x)), dtype=float)
            out[i] = 0.5 * (m + m.T)
        return out

    def to_json_obj(self):
        if not self.name:
            raise ValueError("anonymous callable potential cannot be serialized")
        return {"kind": "builtin", "name": self.name}


class GridPotential(MatrixPotential):
    """Symmetric samples on a uniform grid with C^2 piecewise-cubic interpolation.

    Node evaluation returns the stored (symmetrized) sample exactly; between
    nodes a cubic spline per entry is used and the result symmetrized.
    """

    def __init__(self, grid: Grid, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
            raise DimensionMismatch("grid potential samples must be (n, N, N)")
        if samples.shape[0] != grid.n:
            raise DimensionMismatch("sample count does not match grid")
        scale = 1.0 + np.max(np.abs(samples))
        defect = float(np.max(np.abs(samples - samples.transpose(0, 2, 1))))
        self.symmetry_defect = defect / scale
        self.grid = grid
        self.samples = _readonly(0.5 * (samples + samples.transpose(0, 2, 1)))
        self.dimension = samples.shape[1]
        self._spline = CubicSpline(grid.nodes, self.samples, axis=0)

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        self._check_domain(xs)
        xs = np.asarray(xs, dtype=float)
        out = self._spline(np.clip(xs, 0.0, np.pi))
        out = 0.5 * (out + out.transpose(0, 2, 1))
        # exact node lookup beats spline round-off
        idx = np.round(xs / self.grid.h).astype(int)
        on_node = (np.abs(idx * self.grid.h - xs) <= 32 * np.spacing(np.pi)) & (idx >= 0) & (idx < self.grid.n)
        if np.any(on_node):
            out[on_node] = self.samples[idx[on_node]]
        return out

    def to_json_obj(self):
        return {
            "kind": "grid",
            "x": self.grid.nodes.tolist(),
            "samples": self.samples.tolist(),
        }


@dataclass(frozen=True)
class BoundaryPair:
    """Pair (A, B) of N x N matrices defining B phi' + A phi = 0."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _readonly(self.A)
        B = _readonly(self.B)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise DimensionMismatch("boundary pair matrices must be square and equally sized")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def symmetry_defect(self) -> float:
        """max-entry norm of B A^T - A B^T (zero for self-adjoint pairs)."""
        return float(np.max(np.abs(self.B @ self.A.T - self.A @ self.B.T)))

    def rank_ratio(self) -> float:
        """sigma_N / sigma_1 of the N x 2N block [A, B]."""
        s = np.linalg.svd(np.hstack([self.A, self.B]), compute_uv=False)
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0


@dataclass(frozen=True)
class Problem:
    """Self-adjoint eigenvalue problem (P, A, B, cA, cB) on [0, pi]."""

    potential: MatrixPotential
    left: BoundaryPair
    right: BoundaryPair

    def __post_init__(self):
        n = self.potential.dimension
        if self.left.n != n or self.right.n != n:
            raise DimensionMismatch(
                f"boundary pairs are {self.left.n}x{self.left.n}/{self.right.n}x{self.right.n} "
                f"but the potential is {n}x{n}"
            )

    @property
    def n(self) -> int:
        return self.potential.dimension


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    defect: float
    threshold: float

    def to_json_obj(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "defect": float(self.defect),
            "threshold": float(self.threshold),
        }


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_obj(self):
        return {"passed": self.all_passed, "checks": [c.to_json_obj() for c in self.checks]}

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}: defect={c.defect:.3e} (threshold {c.threshold:.3e})")
        lines.append("result: " + ("all checks passed" if self.all_passed else "violations found"))
        return "\n".join(lines)


def validate_problem(p: Problem) -> ValidationReport:
    """Check the structural hypotheses of a problem.

    Reports symmetry of the potential samples, B A^T = A B^T for both
    boundary pairs, and the two rank conditions. Violations are reported,
    not raised; only inconsistent dimensions raise ``DimensionMismatch``
    (at Problem construction).
    """
    checks = []
    checks.append(
        Check("potential symmetry", p.potential.symmetry_defect <= SYMMETRY_RTOL,
              p.potential.symmetry_defect, SYMMETRY_RTOL)
    )
    for label, pair in (("left", p.left), ("right", p.right)):
        scale = 1.0 + np.linalg.norm(pair.A, 2) * np.linalg.norm(pair.B, 2)
        defect = pair.symmetry_defect()
        checks.append(
            Check(f"{label} pair B*A^T = A*B^T", defect <= SYMMETRY_RTOL * scale, defect, SYMMETRY_RTOL * scale)
        )
    for label, pair in (("left", p.left), ("right", p.right)):
        ratio = pair.rank_ratio()
        checks.append(Check(f"{label} pair rank [A, B] = N", ratio > RANK_RTOL, ratio, RANK_RTOL))
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# builtin catalog

def _dirichlet_pair(n: int) -> BoundaryPair:
    return BoundaryPair(np.eye(n), np.zeros((n, n)))


_BUILTINS: dict[str, Callable[[], Problem]] = {}


def register_builtin(name: str, factory: Callable[[], Problem]) -> None:
    """Extend the builtin catalog (user problems)."""
    _BUILTINS[name] = factory


def builtin_problem(name: str) -> Problem:
    """Construct a catalog problem by name.

    Known names: ``paper-example-2x2`` (P = diag(-3, 0), Dirichlet both ends,
    eigenvalue 1 has multiplicity 2), ``scalar-zero`` (N=1, P = 0, Dirichlet)
    and ``free-2x2`` (N=2, P = 0, Dirichlet), plus anything registered via
    :func:`register_builtin`.
    """
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise UnknownName(f"unknown builtin problem {name!r}; known: {sorted(_BUILTINS)}") from None


register_builtin(
    "paper-example-2x2",
    lambda: Problem(ConstantDiagonalPotential([-3.0, 0.0]), _dirichlet_pair(2), _dirichlet_pair(2)),
)
register_builtin(
    "scalar-zero",
    lambda: Problem(ConstantDiagonalPotential([0.0]), _dirichlet_pair(1), _dirichlet_pair(1)),
)
register_builtin(
    "free-2x2",
    lambda: Problem(ConstantDiagonalPotential([0.0, 0.0]), _dirichlet_pair(2), _dirichlet_pair(2)),
)


# ---------------------------------------------------------------------------
# serialization

def _upper_triangle_header(n: int) -> list[str]:
    return [f"p{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]


def potential_to_csv_rows(pot: GridPotential) -> tuple[list[str], np.ndarray]:
    """CSV form of a grid potential: columns x, p11, p12, ..., pNN.

    Columns list the upper triangle in row-major order; the lower triangle is
    mirrored on load.
    """
    n = pot.dimension
    iu = np.triu_indices(n)
    rows = np.column_stack([pot.grid.nodes] + [pot.samples[:, i, j] for i, j in zip(*iu)])
    return ["x"] + _upper_triangle_header(n), rows


def load_potential_csv(path: str) -> GridPotential:
    """Load a grid potential from the x, p11, ..., pNN CSV format."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row])
    k = len(header) - 1
    n_dim = int(round((np.sqrt(8 * k + 1) - 1) / 2))
    if n_dim * (n_dim + 1) // 2 != k:
        raise DimensionMismatch(f"{k} potential columns do not form an upper triangle")
    grid = Grid(data[:, 0])
    samples = np.empty((grid.n, n_dim, n_dim))
    col = 1
    for i in range(n_dim):
        for j in range(i, n_dim):
            samples[:, i, j] = data[:, col]
            samples[:, j, i] = data[:, col]
            col += 1
    return GridPotential(grid, samples)


def potential_from_json_obj(obj: dict, base_dir: str = ".") -> MatrixPotential:
    kind = obj.get("kind")
    if kind == "constant-diagonal":
        return ConstantDiagonalPotential(obj["values"])
    if kind == "builtin":
        return builtin_problem(obj["name"]).potential
    if kind == "grid":
        if "path" in obj:
            return load_potential_csv(os.path.join(base_dir, obj["path"]))
        return GridPotential(Grid(np.asarray(obj["x"], dtype=float)), np.asarray(obj["samples"], dtype=float))
    raise DimensionMismatch(f"unknown potential kind {kind!r}")


def problem_to_json_obj(p: Problem) -> dict:
    return {
        "n": p.n,
        "potential": p.potential.to_json_obj(),
        "left": {"A": p.left.A.tolist(), "B": p.left.B.tolist()},
        "right": {"A": p.right.A.tolist(), "B": p.right.B.tolist()},
    }


def problem_from_json_obj(obj: dict, base_dir: str = ".") -> Problem:
    pot = potential_from_json_obj(obj["potential"], base_dir)
    n = int(obj["n"])
    if pot.dimension != n:
        raise DimensionMismatch(f"declared n={n} but potential is {pot.dimension}x{pot.dimension}")

    def pair(d):
        return BoundaryPair(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float))

    return Problem(pot, pair(obj["left"]), pair(obj["right"]))


def load_problem(path: str) -> Problem:
    with open(path) as f:
        obj = json.load(f)
    return problem_from_json_obj(obj, base_dir=os.path.dirname(os.path.abspath(path)))
