"""Finite-rank transformation kernels and isospectral problem construction.

Given eigenpairs (lambda_j, phi_j) of a base problem and coefficients c_j with
1 + c_j ||phi_j||^2 > 0, the degenerate kernel

    F(x, y) = sum_j c_j phi_j(x) phi_j^T(y)

defines the integral equation K(x,y) + F(x,y) + int_0^x K(x,t) F(t,y) dt = 0
on 0 <= y < x <= pi. Because F has finite rank M, the solution is closed-form
linear algebra: with Phi(x) = [phi_1 .. phi_M], C = diag(c_j) and the running
Gram G(x) = int_0^x Phi^T Phi dt,

    K(x, y) = A(x) Phi^T(y),      A(x) = -Phi(x) C (I + G(x) C)^{-1}.

The transformed problem (Q, Atilde, B, cAtilde, cB) with

    Q = P + 2 d/dx K(x,x),  Atilde = A - B K(0,0),  cAtilde = cA - cB K(pi,pi)

has the same eigenvalue sequence as the base problem, and phi maps to the
transformed eigenfunction psi = phi + int_0^x K(x,t) phi(t) dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConditionViolated, GridMismatch, IndexOutOfRange,
                     NotAnEigenvalue, SingularResolvent)
from .model import BoundaryPair, Grid, GridPotential, MatrixPotential, Problem
from .ode import integrate_ivp, potential_tables
from .quadrature import integral, running_integral
from .spectrum import (SampledVectorFunction, SpectrumReport,
                       characteristic_matrix)

#: relative resolvent singularity threshold for I + G(x) C
RESOLVENT_TOL = 1e-12
#: allowed relative L2 cross-talk between selections inside one eigenspace
ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class PerturbationEntry:
    """One selected eigenfunction: eigenvalue index k, branch i (1-based), weight c.

    ``theta`` optionally overrides the stored branch with the eigenfunction
    Y(x; lambda_k) theta for an explicit null vector theta, which is how a
    specific direction inside a degenerate eigenspace (where the orthogonal
    basis is not unique) is selected. The eigenfunction is used unnormalized,
    so c is interpreted relative to its norm.
    """

    k: int
    i: int
    c: float
    theta: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Perturbation:
    """Validated finite-rank perturbation resolved against a spectrum report."""

    entries: tuple[PerturbationEntry, ...]
    source: SpectrumReport
    lambdas: np.ndarray    # (M,)
    thetas: np.ndarray     # (N, M)
    coeffs: np.ndarray     # (M,)
    norms_sq: np.ndarray   # (M,)
    phis: np.ndarray       # (n, N, M) on the source grid
    phi_derivs: np.ndarray

    @property
    def rank(self) -> int:
        return self.coeffs.size

    @property
    def grid(self) -> Grid:
        return self.source.grid


def _normalize_entries(entries) -> list[PerturbationEntry]:
    out = []
    for e in entries:
        if isinstance(e, PerturbationEntry):
            out.append(e)
        elif isinstance(e, dict):
            theta = e.get("theta")
            out.append(PerturbationEntry(int(e["k"]), int(e["i"]), float(e["c"]),
                                         tuple(float(t) for t in theta) if theta is not None else None))
        else:
            k, i, c = e
            out.append(PerturbationEntry(int(k), int(i), float(c)))
    return out


def build_perturbation(report: SpectrumReport, entries) -> Perturbation:
    """Resolve and validate perturbation entries against a spectrum report.

    Each entry addresses eigenvalue index k (position in the report) and
    branch i in 1..m_k; the positivity condition 1 + c ||phi||^2 > 0 is
    checked against the stored norms. Entries carrying an explicit theta are
    validated to lie in the null space of W(lambda_k) and, within one
    eigenspace, to stay L2-orthogonal to the other selections.

    Raises
    ------
    IndexOutOfRange
        Bad k or i, or duplicate (k, i).
    ConditionViolated
        Some 1 + c ||phi||^2 <= 0 (message carries the margin), or
        non-orthogonal same-eigenspace selections.
    """
    entries = _normalize_entries(entries)
    seen = set()
    for e in entries:
        if not 0 <= e.k < len(report.pairs):
            raise IndexOutOfRange(f"eigenvalue index k={e.k} outside 0..{len(report.pairs) - 1}")
        if not 1 <= e.i <= report.pairs[e.k].multiplicity:
            raise IndexOutOfRange(
                f"branch i={e.i} outside 1..{report.pairs[e.k].multiplicity} for k={e.k}"
            )
        if (e.k, e.i) in seen:
            raise IndexOutOfRange(f"duplicate entry (k={e.k}, i={e.i})")
        seen.add((e.k, e.i))

    grid = report.grid
    n_dim = report.problem.n
    m = len(entries)
    lambdas = np.empty(m)
    coeffs = np.empty(m)
    norms_sq = np.empty(m)
    thetas = np.empty((n_dim, m))
    phis = np.empty((grid.n, n_dim, m))
    phi_derivs = np.empty((grid.n, n_dim, m))

    tables = None
    for j, e in enumerate(entries):
        pair = report.pairs[e.k]
        lambdas[j] = pair.lam
        coeffs[j] = e.c
        if e.theta is None:
            thetas[:, j] = pair.thetas[:, e.i - 1]
            phis[:, :, j] = pair.phis[:, :, e.i - 1]
            phi_derivs[:, :, j] = pair.phi_derivs[:, :, e.i - 1]
            norms_sq[j] = pair.norms_sq[e.i - 1]
        else:
            theta = np.asarray(e.theta, dtype=float)
            if theta.shape != (n_dim,):
                raise IndexOutOfRange(f"theta for entry (k={e.k}, i={e.i}) must have length {n_dim}")
            if tables is None:
                tables = potential_tables(report.problem.potential, grid)
            w = characteristic_matrix(report.problem, pair.lam, grid, tables)
            scale = max(np.linalg.norm(w, 2), pair.residual + 1.0) * np.linalg.norm(theta)
            if np.linalg.norm(w @ theta) > 1e-5 * scale:
                raise NotAnEigenvalue(
                    f"theta for entry (k={e.k}, i={e.i}) is not a null vector of W({pair.lam:.6g})"
                )
            path = integrate_ivp(report.problem.potential, pair.lam,
                                 report.problem.left.B.T, -report.problem.left.A.T, grid, tables)
            thetas[:, j] = theta
            phis[:, :, j] = path.Y @ theta
            phi_derivs[:, :, j] = path.Yp @ theta
            norms_sq[j] = integral(np.einsum("qn,qn->q", phis[:, :, j], phis[:, :, j]), grid.h)

    for j, e in enumerate(entries):
        margin = 1.0 + coeffs[j] * norms_sq[j]
        if margin <= 0.0:
            raise ConditionViolated(
                f"entry (k={e.k}, i={e.i}, c={e.c}): 1 + c*||phi||^2 = {margin:.6g} <= 0 "
                f"(||phi||^2 = {norms_sq[j]:.6g})"
            )

    # selections sharing an eigenspace must stay mutually L2-orthogonal
    for j in range(m):
        for l in range(j + 1, m):
            if entries[j].k != entries[l].k:
                continue
            ip = integral(np.einsum("qn,qn->q", phis[:, :, j], phis[:, :, l]), grid.h)
            if abs(ip) > ORTHO_TOL * np.sqrt(norms_sq[j] * norms_sq[l]):
                raise ConditionViolated(
                    f"entries (k={entries[j].k}, i={entries[j].i}) and "
                    f"(k={entries[l].k}, i={entries[l].i}) select non-orthogonal "
                    f"eigenfunctions of the same eigenspace (inner product {ip:.3e})"
                )

    return Perturbation(tuple(entries), report, lambdas, thetas, coeffs, norms_sq, phis, phi_derivs)


@dataclass(frozen=True)
class KernelField:
    """Solved degenerate kernel K(x, y) = A(x) Phi^T(y) for y <= x (0 above)."""

    grid: Grid
    lambdas: np.ndarray     # (M,)
    thetas: np.ndarray      # (N, M)
    coeffs: np.ndarray      # (M,)
    phi: np.ndarray         # (n, N, M)
    dphi: np.ndarray        # (n, N, M)
    a: np.ndarray           # (n, N, M) coefficient functions a_j(x)
    da: np.ndarray          # (n, N, M) their derivatives
    gram: np.ndarray        # (n, M, M) running Gram G(x)
    resolvent: np.ndarray   # (n, M, M) (I + G(x) C)^{-1}

    @property
    def rank(self) -> int:
        return self.coeffs.size

    def kernel_at(self, i: int, j: int) -> np.ndarray:
        """K(x_i, y_j) (zero above the diagonal)."""
        if j > i:
            return np.zeros((self.phi.shape[1],) * 2)
        return self.a[i] @ self.phi[j].T

    def kernel_matrix(self) -> np.ndarray:
        """All node pairs, shape (n, n, N, N), upper triangle y > x zeroed."""
        k = np.einsum("iam,jbm->ijab", self.a, self.phi)
        iy, ix = np.meshgrid(np.arange(self.grid.n), np.arange(self.grid.n), indexing="ij")
        k[iy < ix] = 0.0
        return k

    def diagonal(self) -> np.ndarray:
        """K(x, x) samples, (n, N, N)."""
        return np.einsum("qam,qbm->qab", self.a, self.phi)

    def diagonal_derivative(self) -> np.ndarray:
        """d/dx K(x, x) = A'(x) Phi^T(x) + A(x) Phi'^T(x), (n, N, N)."""
        return (np.einsum("qam,qbm->qab", self.da, self.phi)
                + np.einsum("qam,qbm->qab", self.a, self.dphi))

    @property
    def k00(self) -> np.ndarray:
        return self.a[0] @ self.phi[0].T

    @property
    def kpipi(self) -> np.ndarray:
        return self.a[-1] @ self.phi[-1].T


def _empty_kernel(grid: Grid, n_dim: int) -> KernelField:
    z = np.zeros((grid.n, n_dim, 0))
    zm = np.zeros((grid.n, 0, 0))
    return KernelField(grid, np.zeros(0), np.zeros((n_dim, 0)), np.zeros(0),
                       z, z, z, z, zm, zm)


def solve_kernel(pert: Perturbation, grid: Grid | None = None) -> KernelField:
    """Solve the kernel integral equation in closed degenerate form.

    The coefficient block A(x) = -Phi(x) C (I + G(x) C)^{-1} is evaluated at
    every node, together with its analytic derivative

        A'(x) = -Phi'(x) C R(x) - A(x) G'(x) C R(x),   R = (I + G C)^{-1},

    where G'(x) = Phi^T(x) Phi(x) needs no quadrature. The running Gram uses
    composite Simpson with 4th-order end cells, so all later identities close
    at quadrature accuracy.

    Raises
    ------
    SingularResolvent
        If I + G(x) C is numerically singular at some node (outside the
        uniqueness regime).
    """
    src_grid = pert.grid
    if grid is None or grid.same_nodes(src_grid):
        grid = src_grid
        phi, dphi = pert.phis, pert.phi_derivs
    else:
        # resample the selected eigenfunctions by re-integrating on the new grid
        problem = pert.source.problem
        tables = potential_tables(problem.potential, grid)
        phi = np.empty((grid.n, problem.n, pert.rank))
        dphi = np.empty_like(phi)
        for j, lam in enumerate(pert.lambdas):
            path = integrate_ivp(problem.potential, lam, problem.left.B.T,
                                 -problem.left.A.T, grid, tables)
            phi[:, :, j] = path.Y @ pert.thetas[:, j]
            dphi[:, :, j] = path.Yp @ pert.thetas[:, j]

    m = pert.rank
    if m == 0:
        return _empty_kernel(grid, pert.source.problem.n)
    c = pert.coeffs
    gram = running_integral(np.einsum("qni,qnj->qij", phi, phi), grid.h)
    res_mat = np.eye(m) + gram * c[None, None, :]
    # det(I + G(0)C) = 1; in the uniqueness regime the determinant never
    # reaches zero, so a non-positive value at any node flags a crossing even
    # when no node lands exactly on the singularity
    dets = np.linalg.det(res_mat)
    sv = np.linalg.svd(res_mat, compute_uv=False)
    bad = (dets <= RESOLVENT_TOL) | (sv[:, -1] <= RESOLVENT_TOL * np.maximum(sv[:, 0], 1.0))
    if np.any(bad):
        q = int(np.argmax(bad))
        raise SingularResolvent(
            f"I + G(x)C is singular on [0, x] for x = {grid.nodes[q]:.6g} "
            f"(det = {dets[q]:.3e}, sigma_min = {sv[q, -1]:.3e})"
        )
    resolvent = np.linalg.inv(res_mat)
    phi_c = phi * c[None, None, :]
    a = -phi_c @ resolvent
    gp = np.einsum("qni,qnj->qij", phi, phi)
    da = -(dphi * c[None, None, :]) @ resolvent - a @ ((gp * c[None, None, :]) @ resolvent)
    return KernelField(grid, pert.lambdas.copy(), pert.thetas.copy(), c.copy(),
                       phi, dphi, a, da, gram, resolvent)


def potential_q(pert: Perturbation, kernel: KernelField, base: MatrixPotential) -> MatrixPotential:
    """Transformed potential Q(x) = P(x) + 2 d/dx K(x, x), sampled on the kernel grid.

    The diagonal derivative is analytic (no differencing of K samples, which
    would amplify quadrature noise into the spectrum re-scan). Samples are
    symmetrized; the pre-symmetrization defect is recorded on the result.
    """
    if kernel.rank == 0:
        return base
    grid = kernel.grid
    q = base.evaluate_many(grid.nodes) + 2.0 * kernel.diagonal_derivative()
    return GridPotential(grid, q)


def boundary_matrices(kernel: KernelField, p: Problem) -> tuple[np.ndarray, np.ndarray]:
    """(Atilde, cAtilde) = (A - B K(0,0), cA - cB K(pi,pi)).

    K(0,0) and K(pi,pi) are taken from the solved kernel representation. With
    Dirichlet data (B = cB = 0) both matrices are returned unchanged.
    """
    if kernel.rank == 0:
        return p.left.A.copy(), p.right.A.copy()
    atilde = p.left.A - p.left.B @ kernel.k00
    catilde = p.right.A - p.right.B @ kernel.kpipi
    return atilde, catilde


def transform_eigenfunction(kernel: KernelField, phi: SampledVectorFunction,
                            lam: float | None = None) -> SampledVectorFunction:
    """psi(x) = phi(x) + int_0^x K(x, t) phi(t) dt via the running quadrature.

    With the degenerate representation this is phi + A(x) w(x) where
    w(x) = int_0^x Phi^T phi dt; the derivative samples come along analytically
    as phi' + A'(x) w(x) + A(x) Phi^T(x) phi(x). psi(0) = phi(0) exactly.
    """
    if not kernel.grid.same_nodes(phi.grid):
        raise GridMismatch("eigenfunction is not sampled on the kernel grid")
    lam = phi.lam if lam is None else float(lam)
    if kernel.rank == 0:
        return SampledVectorFunction(phi.grid, phi.values.copy(),
                                     None if phi.derivs is None else phi.derivs.copy(), lam)
    w = running_integral(np.einsum("qnm,qn->qm", kernel.phi, phi.values), kernel.grid.h)
    psi = phi.values + np.einsum("qnm,qm->qn", kernel.a, w)
    dpsi = None
    if phi.derivs is not None:
        pointwise = np.einsum("qnm,qn->qm", kernel.phi, phi.values)
        dpsi = (phi.derivs + np.einsum("qnm,qm->qn", kernel.da, w)
                + np.einsum("qnm,qm->qn", kernel.a, pointwise))
    return SampledVectorFunction(phi.grid, psi, dpsi, lam)


@dataclass(frozen=True)
class TransformResult:
    """Transformed potential, boundary matrices, and diagnostics."""

    q: MatrixPotential
    atilde: np.ndarray
    catilde: np.ndarray
    k00: np.ndarray
    kpipi: np.ndarray
    psis: tuple[SampledVectorFunction, ...]
    diagnostics: dict

    def to_json_obj(self):
        return {
            "Atilde": self.atilde.tolist(),
            "AtildeRight": self.catilde.tolist(),
            "K00": self.k00.tolist(),
            "Kpipi": self.kpipi.tolist(),
            "diagnostics": self.diagnostics,
        }


def transform_problem(p: Problem, pert: Perturbation, grid: Grid | None = None
                      ) -> tuple[Problem, TransformResult]:
    """Compose kernel solve, potential, boundary matrices and eigenfunction maps.

    Returns the isospectral problem (Q, Atilde, B, cAtilde, cB) and a
    TransformResult carrying the transformed eigenfunctions of the selected
    branches plus numerical diagnostics. An empty perturbation returns the
    problem unchanged.
    """
    kernel = solve_kernel(pert, grid)
    q = potential_q(pert, kernel, p.potential)
    atilde, catilde = boundary_matrices(kernel, p)
    psis = []
    for j in range(kernel.rank):
        phi_j = SampledVectorFunction(kernel.grid, kernel.phi[:, :, j],
                                      kernel.dphi[:, :, j], float(kernel.lambdas[j]))
        psis.append(transform_eigenfunction(kernel, phi_j))

    new_problem = Problem(q, BoundaryPair(atilde, p.left.B), BoundaryPair(catilde, p.right.B))

    diag = {
        "rank": kernel.rank,
        "q_presymmetrization_defect": float(getattr(q, "symmetry_defect", 0.0)),
        "selfadjoint_defect_left": float(np.max(np.abs(p.left.B @ atilde.T - atilde @ p.left.B.T))),
        "selfadjoint_defect_right": float(np.max(np.abs(p.right.B @ catilde.T - catilde @ p.right.B.T))),
    }
    if kernel.rank:
        sv = np.linalg.svd(np.eye(kernel.rank) + kernel.gram * kernel.coeffs[None, None, :],
                           compute_uv=False)
        diag["resolvent_min_sigma"] = float(sv[:, -1].min())
        diag["resolvent_max_cond"] = float((sv[:, 0] / sv[:, -1]).max())
        gpi = kernel.gram[-1]
        off = gpi - np.diag(np.diag(gpi))
        diag["final_gram_offdiagonal_max"] = float(np.max(np.abs(off))) if kernel.rank > 1 else 0.0
        # the boundary formulas use K(0,0) from the solved kernel; the opposite
        # sign convention is surfaced here so a mismatch is visible, not guessed
        b = p.left.B
        alt = p.left.A + b @ kernel.k00
        diag["atilde_alternative_sign_gap"] = float(np.max(np.abs(alt - atilde)))
    return new_problem, TransformResult(q, atilde, catilde, kernel.k00, kernel.kpipi,
                                        tuple(psis), diag)
