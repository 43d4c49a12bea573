"""Characteristic matrix, eigenvalue scan, and eigenspace bases.

lambda is an eigenvalue iff W(lambda) = cB Y'(pi; lambda) + cA Y(pi; lambda)
is singular, where Y solves the matrix IVP with Y(0) = B^T, Y'(0) = -A^T.
Multiplicity equals the nullity of W. Roots are located as minima of
sigma_min(W(lambda)): determinant sign changes miss even-multiplicity
eigenvalues, which are exactly the interesting case here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import NotAnEigenvalue, WindowTooCoarse
from .model import Grid, Problem
from .ode import integrate_final_batch, integrate_ivp, potential_tables
from .quadrature import integral

#: default relative threshold deciding rank deficiency of W
DEFAULT_RANK_TOL = 1e-6


@dataclass(frozen=True)
class ScanOptions:
    """Knobs for :func:`scan_spectrum`."""

    resolution: float = 0.05        # lambda spacing of the sigma_min scan
    tol: float = 1e-10              # refinement tolerance on each eigenvalue
    rank_tol: float = DEFAULT_RANK_TOL
    grid_nodes: int = 401           # x-grid for the IVP integration
    oracle_nodes: int = 201         # finite-difference oracle resolution
    use_oracle: bool = True         # seed/validate the scan with the oracle

    def to_json_obj(self):
        return {
            "resolution": self.resolution,
            "tol": self.tol,
            "rank_tol": self.rank_tol,
            "grid_nodes": self.grid_nodes,
            "oracle_nodes": self.oracle_nodes,
            "use_oracle": self.use_oracle,
        }


@dataclass(frozen=True)
class SampledVectorFunction:
    """Vector-valued function sampled on a grid, with derivative samples."""

    grid: Grid
    values: np.ndarray               # (n, N)
    derivs: np.ndarray | None = None  # (n, N)
    lam: float | None = None


@dataclass(frozen=True)
class Eigenpair:
    """One eigenvalue with an L2-orthogonal basis of its eigenspace.

    thetas holds null vectors of W(lambda_k) as columns; phis[:, :, l] samples
    the eigenfunction Y(x; lambda_k) theta_l. norms_sq are the squared L2
    norms of those eigenfunctions.
    """

    lam: float
    multiplicity: int
    thetas: np.ndarray       # (N, m)
    phis: np.ndarray         # (n, N, m)
    phi_derivs: np.ndarray   # (n, N, m)
    norms_sq: np.ndarray     # (m,)
    residual: float          # sigma_min(W) / local W scale at lam
    grid: Grid

    def eigenfunction(self, l: int) -> SampledVectorFunction:
        return SampledVectorFunction(self.grid, self.phis[:, :, l],
                                     self.phi_derivs[:, :, l], self.lam)


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues found in a window, ascending, with multiplicities."""

    problem: Problem
    grid: Grid
    window: tuple[float, float]
    options: ScanOptions
    pairs: tuple[Eigenpair, ...] = field(default_factory=tuple)

    @property
    def sigma_sequence(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, nondecreasing."""
        return np.array([p.lam for p in self.pairs for _ in range(p.multiplicity)])

    def pair_index(self, lam: float, tol: float = 1e-3) -> int:
        """Index of the eigenpair whose eigenvalue is closest to lam (within tol)."""
        if not self.pairs:
            raise IndexError("empty spectrum report")
        lams = np.array([p.lam for p in self.pairs])
        k = int(np.argmin(np.abs(lams - lam)))
        if abs(lams[k] - lam) > tol:
            raise IndexError(f"no eigenvalue within {tol} of {lam}")
        return k

    def to_json_obj(self):
        return [
            {"lambda": p.lam, "multiplicity": p.multiplicity, "residual": p.residual}
            for p in self.pairs
        ]


def characteristic_matrix(p: Problem, lam: float, grid: Grid,
                          tables=None) -> np.ndarray:
    """W(lambda) = cB Y'(pi) + cA Y(pi) with Y(0) = B^T, Y'(0) = -A^T."""
    y_pi, yp_pi = integrate_final_batch(p.potential, [lam], p.left.B.T, -p.left.A.T, grid, tables)
    return p.right.B @ yp_pi[0] + p.right.A @ y_pi[0]


def _char_batch(p: Problem, lams: np.ndarray, grid: Grid, tables) -> np.ndarray:
    y_pi, yp_pi = integrate_final_batch(p.potential, lams, p.left.B.T, -p.left.A.T, grid, tables)
    return p.right.B @ yp_pi + p.right.A @ y_pi


def _sigma_batch(p, lams, grid, tables):
    w = _char_batch(p, np.asarray(lams, dtype=float), grid, tables)
    s = np.linalg.svd(w, compute_uv=False)
    return s[:, -1], s[:, 0]


# ---------------------------------------------------------------------------
# finite-difference oracle

def fd_oracle_eigenvalues(p: Problem, n_nodes: int = 201) -> np.ndarray:
    """Independent O(h^2) eigenvalue estimates from a finite-difference matrix.

    Second-order central differences in the interior; the boundary conditions
    are imposed as equation rows with one-sided O(h^2) derivative stencils,
    giving a generalized eigenproblem L u = lambda M u with a singular mass
    matrix (boundary rows carry no lambda).
    """
    n_dim = p.n
    grid = Grid.uniform(n_nodes)
    h = grid.h
    ps = p.potential.evaluate_many(grid.nodes)
    size = n_nodes * n_dim
    L = np.zeros((size, size))
    M = np.zeros((size, size))
    eye = np.eye(n_dim)

    def block(i, j):
        return slice(i * n_dim, (i + 1) * n_dim), slice(j * n_dim, (j + 1) * n_dim)

    for i in range(1, n_nodes - 1):
        L[block(i, i - 1)] = -eye / h**2
        L[block(i, i)] = 2 * eye / h**2 + ps[i]
        L[block(i, i + 1)] = -eye / h**2
        M[block(i, i)] = eye
    A, B = p.left.A, p.left.B
    L[block(0, 0)] = A - 1.5 * B / h
    L[block(0, 1)] = 2.0 * B / h
    L[block(0, 2)] = -0.5 * B / h
    cA, cB = p.right.A, p.right.B
    m = n_nodes - 1
    L[block(m, m)] = cA + 1.5 * cB / h
    L[block(m, m - 1)] = -2.0 * cB / h
    L[block(m, m - 2)] = 0.5 * cB / h

    w = scipy.linalg.eig(L, M, right=False)
    w = w[np.isfinite(w)]
    w = w[np.abs(w.imag) <= 1e-6 * (1.0 + np.abs(w.real))].real
    return np.sort(w)


def _cluster(values: np.ndarray, tol_fn) -> list[float]:
    """Representatives of groups of near-equal sorted values."""
    reps: list[float] = []
    for v in values:
        if reps and abs(v - reps[-1]) <= tol_fn(v):
            continue
        reps.append(float(v))
    return reps


# ---------------------------------------------------------------------------
# refinement

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_refine(fun, a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized golden-section minimization over a batch of brackets.

    fun maps a vector of lambdas to a vector of objective values. Robust for
    the V-shaped sigma_min profiles near eigenvalues (no smoothness needed).
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1 = fun(x1)
    f2 = fun(x2)
    max_iter = int(np.ceil(np.log(max(np.max(b - a), tol) / tol) / -np.log(_INV_PHI))) + 2
    for _ in range(max_iter):
        if np.max(b - a) <= tol:
            break
        left = f1 < f2
        b[left] = x2[left]
        x2[left] = x1[left]
        f2[left] = f1[left]
        x1[left] = b[left] - _INV_PHI * (b[left] - a[left])
        right = ~left
        a[right] = x1[right]
        x1[right] = x2[right]
        f1[right] = f2[right]
        x2[right] = a[right] + _INV_PHI * (b[right] - a[right])
        new = np.where(left, x1, x2)
        fnew = fun(new)
        f1 = np.where(left, fnew, f1)
        f2 = np.where(left, f2, fnew)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# eigenspace basis

def eigenbasis(p: Problem, lam_k: float, grid: Grid, rank_tol: float = DEFAULT_RANK_TOL,
               scale: float | None = None, tables=None) -> Eigenpair:
    """Eigenpair at a refined eigenvalue lam_k.

    A null-space basis v_1..v_m of W(lam_k) comes from the SVD; the matrix
    V = int_0^pi (Y V_k)^T (Y V_k) dx is diagonalized by an orthogonal U and
    theta_l are the columns of V_k U, which makes the eigenfunctions
    Y theta_l mutually L2-orthogonal.

    The rank decision compares singular values against rank_tol times a local
    scale of W. sigma_1(W(lam_k)) itself vanishes at full-multiplicity
    eigenvalues, so the scale is taken as max of sigma_1 at lam_k and at
    lam_k +/- 0.25 unless the caller supplies one.
    """
    if tables is None:
        tables = potential_tables(p.potential, grid)
    w = characteristic_matrix(p, lam_k, grid, tables)
    _, svals, vt = np.linalg.svd(w)
    if scale is None:
        probes = [lam_k - 0.25, lam_k + 0.25]
        _, s1 = _sigma_batch(p, probes, grid, tables)
        scale = max(float(svals[0]), float(np.max(s1)))
    thresh = rank_tol * scale
    m = int(np.sum(svals <= thresh))
    if m == 0:
        raise NotAnEigenvalue(
            f"sigma_min(W({lam_k})) = {svals[-1]:.3e} exceeds {thresh:.3e}; not an eigenvalue"
        )
    v_k = vt[-m:][::-1].T                    # (N, m), most-null direction first
    path = integrate_ivp(p.potential, lam_k, p.left.B.T, -p.left.A.T, grid, tables)
    z = path.Y @ v_k                         # (n, N, m)
    gram = integral(np.einsum("qni,qnj->qij", z, z), grid.h)
    d, u = np.linalg.eigh(gram)
    thetas = v_k @ u
    phis = path.Y @ thetas
    phi_derivs = path.Yp @ thetas
    return Eigenpair(float(lam_k), m, thetas, phis, phi_derivs,
                     np.maximum(d, 0.0), float(svals[-1] / scale), grid)


# ---------------------------------------------------------------------------
# spectrum scan

def scan_spectrum(p: Problem, lambda_min: float, lambda_max: float,
                  opts: ScanOptions = ScanOptions()) -> SpectrumReport:
    """All eigenvalues in [lambda_min, lambda_max] with multiplicities.

    sigma_min(W) is sampled on a lambda grid, local minima are bracketed and
    refined by golden-section minimization to opts.tol, and each survivor is
    accepted iff sigma_min falls below rank_tol times the local scale of W.
    The finite-difference oracle (when enabled) tightens the scan resolution
    from its minimal eigenvalue gap and guards against skipped roots.

    Raises
    ------
    WindowTooCoarse
        If two accepted eigenvalues are closer than one scan cell, the oracle
        predicts more interior eigenvalues than were found, or the oracle gap
        is below the resolvable scale. With use_oracle=False there is no
        independent eigenvalue count, so distinct eigenvalues closer than the
        scan resolution can be silently merged; keep the oracle on unless the
        spacing of the spectrum is known.
    """
    if not lambda_min < lambda_max:
        raise ValueError("need lambda_min < lambda_max")
    grid = Grid.uniform(opts.grid_nodes)
    tables = potential_tables(p.potential, grid)

    oracle_vals = None
    resolution = opts.resolution
    if opts.use_oracle:
        h_o = np.pi / (opts.oracle_nodes - 1)
        all_oracle = fd_oracle_eigenvalues(p, opts.oracle_nodes)
        oracle_vals = all_oracle[(all_oracle >= lambda_min) & (all_oracle <= lambda_max)]
        cluster_tol = lambda v: max(1e-3, h_o**2 * (1.0 + v * v))
        reps = _cluster(oracle_vals, cluster_tol)
        if len(reps) >= 2:
            gap = float(np.min(np.diff(reps)))
            floor = max(1e-4, 16 * opts.tol)
            if gap / 3.0 < floor:
                raise WindowTooCoarse(
                    f"oracle eigenvalue gap {gap:.3e} is below the resolvable scale"
                )
            resolution = min(resolution, gap / 3.0)

    n_samples = int(np.ceil((lambda_max - lambda_min) / resolution)) + 1
    lams = np.linspace(lambda_min, lambda_max, max(n_samples, 3))
    cell = lams[1] - lams[0]
    smin = np.empty_like(lams)
    s1 = np.empty_like(lams)
    for lo in range(0, lams.size, 4096):
        sl = slice(lo, min(lo + 4096, lams.size))
        smin[sl], s1[sl] = _sigma_batch(p, lams[sl], grid, tables)

    interior = np.where((smin[1:-1] <= smin[:-2]) & (smin[1:-1] <= smin[2:]))[0] + 1
    brackets = [(lams[i - 1], lams[i + 1], max(s1[i - 1], s1[i], s1[i + 1])) for i in interior]
    if smin[0] < smin[1]:
        brackets.append((lams[0], lams[1], max(s1[0], s1[1])))
    if smin[-1] < smin[-2]:
        brackets.append((lams[-2], lams[-1], max(s1[-2], s1[-1])))

    if oracle_vals is not None:
        covered = [0.5 * (a + b) for a, b, _ in brackets]
        for rep in _cluster(oracle_vals, lambda v: max(1e-3, (np.pi / (opts.oracle_nodes - 1))**2 * (1 + v * v))):
            if not any(abs(rep - c) <= 2 * cell for c in covered):
                a = max(lambda_min, rep - cell)
                b = min(lambda_max, rep + cell)
                i = int(np.clip(round((rep - lambda_min) / cell), 0, lams.size - 1))
                brackets.append((a, b, s1[i]))

    found: list[tuple[float, float]] = []   # (lambda, scale)
    if brackets:
        a = np.array([b[0] for b in brackets])
        b = np.array([b[1] for b in brackets])
        bscale = np.array([b[2] for b in brackets])
        roots = _golden_refine(lambda xs: _sigma_batch(p, xs, grid, tables)[0], a, b, opts.tol)
        rmin, r1 = _sigma_batch(p, roots, grid, tables)
        for lam, sm, sx, sc in zip(roots, rmin, r1, bscale):
            scale = max(sx, sc)
            if scale > 0 and sm <= opts.rank_tol * scale:
                found.append((float(lam), float(scale)))

    found.sort()
    merged: list[tuple[float, float]] = []
    for lam, sc in found:
        merge_tol = max(100 * opts.tol, 1e-8) * (1.0 + abs(lam))
        if merged and lam - merged[-1][0] <= merge_tol:
            merged[-1] = (merged[-1][0], max(merged[-1][1], sc))
            continue
        merged.append((lam, sc))

    for (la, _), (lb, _) in zip(merged, merged[1:]):
        if lb - la < cell:
            raise WindowTooCoarse(
                f"eigenvalues {la:.6g} and {lb:.6g} lie inside one scan cell "
                f"({cell:.3g}); decrease ScanOptions.resolution"
            )

    pairs = [eigenbasis(p, lam, grid, opts.rank_tol, scale=sc, tables=tables) for lam, sc in merged]

    if oracle_vals is not None:
        h_o = np.pi / (opts.oracle_nodes - 1)
        margin = lambda v: cell + 0.1 + 2 * h_o**2 * (1.0 + v * v)
        interior_count = int(np.sum([(v - lambda_min) > margin(v) and (lambda_max - v) > margin(v)
                                     for v in oracle_vals]))
        if interior_count > sum(q.multiplicity for q in pairs):
            raise WindowTooCoarse(
                f"finite-difference oracle predicts {interior_count} interior eigenvalues "
                f"but the scan found {sum(q.multiplicity for q in pairs)}; "
                "decrease ScanOptions.resolution"
            )

    return SpectrumReport(p, grid, (float(lambda_min), float(lambda_max)), replace(opts), tuple(pairs))
