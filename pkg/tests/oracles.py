"""Closed-form oracles used by the tests.

Everything here is written directly from the analytic solutions of the
constant-diagonal Dirichlet problems and stays independent of the code paths
it checks: quadratures appear only where the quantity being tested is itself
defined through the package's running quadrature.
"""

import numpy as np

import isospec as iso


def dirichlet_spectrum(diag_values, lo, hi):
    """Eigenvalues of -phi'' + diag(p) phi = lambda phi with Dirichlet ends.

    Each channel contributes p_i + n^2 for n >= 1; returned sorted with
    multiplicity.
    """
    vals = []
    for p in diag_values:
        n = 1
        while p + n * n <= hi:
            if p + n * n >= lo:
                vals.append(p + n * n)
            n += 1
    return np.sort(np.array(vals))


def mixed_phi(x):
    """The rank-one eigenfunction (sin 2x, sin x) at the double eigenvalue 1."""
    return np.stack([np.sin(2 * x), np.sin(x)], axis=-1)


def mixed_denominator(x):
    """1 + int_0^x (sin^2 t + sin^2 2t) dt in closed form."""
    return 1.0 + x - np.sin(2 * x) / 4 - np.sin(4 * x) / 8


def mixed_q(x):
    """Transformed potential for phi0 = (sin 2x, sin x), c = 1, in closed form.

    Q = diag(-3, 0) - 2 d/dx [ phi0 phi0^T / D ] with D the closed-form
    denominator; the product rule is carried out by hand.
    """
    s1, c1, s2, c2 = np.sin(x), np.cos(x), np.sin(2 * x), np.cos(2 * x)
    m = np.array([[s2 * s2, s2 * s1], [s1 * s2, s1 * s1]])
    mp = np.array([[4 * s2 * c2, 2 * c2 * s1 + s2 * c1],
                   [2 * c2 * s1 + s2 * c1, 2 * s1 * c1]])
    d = mixed_denominator(x)
    dp = s1 * s1 + s2 * s2
    return np.diag([-3.0, 0.0]) - 2.0 * (mp / d - m * dp / d / d)


def diagonal_q22(x):
    """Q_22 for phi0 = (0, sin x), c = 1: d/dx( -2 sin^2 x / (1 + int sin^2) )."""
    d = 1.0 + x / 2 - np.sin(2 * x) / 4
    dp = np.sin(x) ** 2
    f = -2.0 * np.sin(x) ** 2
    fp = -2.0 * np.sin(2 * x)
    return (fp * d - f * dp) / d / d


def scalar_q(x):
    """Scalar transformed potential for P = 0, c = 1 on sin x (same formula)."""
    return diagonal_q22(x)


def mixed_perturbation(report, c=1.0):
    """The worked rank-one selection: theta = (-2, -1) makes Y(x;1) theta = (sin 2x, sin x)."""
    k = report.pair_index(1.0)
    return iso.build_perturbation(report, [{"k": k, "i": 1, "c": c, "theta": [-2.0, -1.0]}])


def diagonal_perturbation(report, c=1.0):
    """Selection theta = (0, 1) giving the diagonal transformed potential."""
    k = report.pair_index(1.0)
    return iso.build_perturbation(report, [{"k": k, "i": 1, "c": c, "theta": [0.0, 1.0]}])
