"""Fixed-step integration of the matrix initial value problem.

    -Y'' + P(x) Y = lambda Y,   Y(0), Y'(0) prescribed N x N matrices.

A classical 4th-order one-step scheme on the first-order system (Y, Y') with
step h taken from the grid. Eigenfunction data is smooth, so no adaptivity:
fixed grids keep downstream quadrature and kernel algebra node-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteState, OutOfDomain
from .model import Grid, MatrixPotential


def potential_tables(pot: MatrixPotential, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Potential samples at the nodes and at the half-steps, (n,N,N), (n-1,N,N)."""
    p_nodes = np.ascontiguousarray(pot.evaluate_many(grid.nodes))
    p_half = np.ascontiguousarray(pot.evaluate_many(0.5 * (grid.nodes[:-1] + grid.nodes[1:])))
    return p_nodes, p_half


@dataclass(frozen=True)
class MatrixSolutionPath:
    """Y and Y' sampled at the grid nodes for one spectral parameter."""

    grid: Grid
    lam: float
    Y: np.ndarray       # (n, N, N)
    Yp: np.ndarray      # (n, N, N)
    potential: MatrixPotential

    @property
    def n(self) -> int:
        return self.Y.shape[1]


def _rk4(p_nodes, p_half, lam, y0, yp0, h, keep_path):
    """Shared stepping kernel; lam may be scalar or a batch vector.

    Batched shapes: lam (L,), y (L, N, N); scalar: y (N, N).
    """
    lam = np.asarray(lam, dtype=float)
    batched = lam.ndim == 1
    lam_b = lam[:, None, None] if batched else lam
    y = np.array(y0, dtype=float)
    v = np.array(yp0, dtype=float)
    if batched:
        y = np.broadcast_to(y, (lam.size,) + y0.shape).copy()
        v = np.broadcast_to(v, (lam.size,) + yp0.shape).copy()
    steps = p_nodes.shape[0] - 1
    ys = vs = None
    if keep_path:
        ys = np.empty((steps + 1,) + y.shape)
        vs = np.empty((steps + 1,) + v.shape)
        ys[0], vs[0] = y, v

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            p0, pm, p1 = p_nodes[i], p_half[i], p_nodes[i + 1]
            k1y = v
            k1v = p0 @ y - lam_b * y
            y2 = y + (h / 2) * k1y
            k2y = v + (h / 2) * k1v
            k2v = pm @ y2 - lam_b * y2
            y3 = y + (h / 2) * k2y
            k3y = v + (h / 2) * k2v
            k3v = pm @ y3 - lam_b * y3
            y4 = y + h * k3y
            k4y = v + h * k3v
            k4v = p1 @ y4 - lam_b * y4
            y = y + (h / 6) * (k1y + 2 * k2y + 2 * k3y + k4y)
            v = v + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v)
            if keep_path:
                ys[i + 1], vs[i + 1] = y, v

    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v))):
        raise NonFiniteState("integration overflowed; check lambda window and grid scaling")
    return (ys, vs) if keep_path else (y, v)


def integrate_ivp(pot: MatrixPotential, lam: float, y0: np.ndarray, yp0: np.ndarray,
                  grid: Grid, tables: tuple[np.ndarray, np.ndarray] | None = None) -> MatrixSolutionPath:
    """Integrate -Y'' + P Y = lam Y from x=0 to pi on the grid.

    Parameters
    ----------
    pot : MatrixPotential
    lam : float
        Real spectral parameter.
    y0, yp0 : (N, N) arrays
        Initial Y(0) and Y'(0).
    grid : Grid
    tables : optional precomputed output of :func:`potential_tables`.

    Returns
    -------
    MatrixSolutionPath with Y, Y' at every node; global error O(h^4) for C^2
    potentials. Deterministic for fixed inputs.
    """
    y0 = np.asarray(y0, dtype=float)
    yp0 = np.asarray(yp0, dtype=float)
    if y0.shape != (pot.dimension, pot.dimension) or yp0.shape != y0.shape:
        raise ValueError("initial data must be N x N matching the potential")
    if tables is None:
        tables = potential_tables(pot, grid)
    ys, vs = _rk4(tables[0], tables[1], float(lam), y0, yp0, grid.h, keep_path=True)
    return MatrixSolutionPath(grid, float(lam), ys, vs, pot)


def integrate_final_batch(pot: MatrixPotential, lams: np.ndarray, y0: np.ndarray, yp0: np.ndarray,
                          grid: Grid, tables: tuple[np.ndarray, np.ndarray] | None = None):
    """Endpoint (Y(pi), Y'(pi)) for a batch of lambda values, shape (L, N, N) each."""
    if tables is None:
        tables = potential_tables(pot, grid)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    return _rk4(tables[0], tables[1], lams, np.asarray(y0, float), np.asarray(yp0, float),
                grid.h, keep_path=False)


def _hermite(fa, da, fb, db, h, s):
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * fa + (s3 - 2 * s2 + s) * h * da
            + (-2 * s3 + 3 * s2) * fb + (s3 - s2) * h * db)


def evaluate_path(path: MatrixSolutionPath, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense evaluation (Y(x), Y'(x)); exact at nodes, O(h^4) in between.

    Cubic Hermite in each cell: Y from (Y, Y') node data, Y' from (Y', Y'')
    with Y'' = (P - lam) Y taken from the differential equation.
    """
    if x < -1e-12 or x > np.pi + 1e-12:
        raise OutOfDomain(f"x={x} outside [0, pi]")
    grid = path.grid
    i = grid.index_of(x)
    if i is not None:
        return path.Y[i].copy(), path.Yp[i].copy()
    x = min(max(x, 0.0), np.pi)
    h = grid.h
    i = min(int(x / h), grid.n - 2)
    s = (x - grid.nodes[i]) / h
    ya, yb = path.Y[i], path.Y[i + 1]
    da, db = path.Yp[i], path.Yp[i + 1]
    pa = path.potential.evaluate(grid.nodes[i])
    pb = path.potential.evaluate(grid.nodes[i + 1])
    dda = pa @ ya - path.lam * ya
    ddb = pb @ yb - path.lam * yb
    return _hermite(ya, da, yb, db, h, s), _hermite(da, dda, db, ddb, h, s)
