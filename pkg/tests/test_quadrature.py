import numpy as np
import pytest

from isospec.quadrature import integral, running_integral


def test_running_integral_zero_at_origin():
    xs = np.linspace(0, np.pi, 101)
    out = running_integral(np.sin(xs), xs[1] - xs[0])
    assert out[0] == 0.0


def test_exact_for_cubics_at_every_node():
    # Simpson pairs and the 3/8 / first-cell closures all integrate cubics exactly
    xs = np.linspace(0, np.pi, 41)
    f = 2 * xs**3 - xs**2 + 3 * xs - 1
    exact = 0.5 * xs**4 - xs**3 / 3 + 1.5 * xs**2 - xs
    out = running_integral(f, xs[1] - xs[0])
    assert np.max(np.abs(out - exact)) < 1e-12


@pytest.mark.parametrize("n,bound", [(401, 2e-9), (801, 2e-10)])
def test_fourth_order_at_all_nodes(n, bound):
    # measured 7.5e-10 at n=401 for this integrand; bound leaves ~3x headroom
    xs = np.linspace(0, np.pi, n)
    f = np.sin(xs) ** 2 + np.sin(2 * xs) ** 2
    exact = xs - np.sin(2 * xs) / 4 - np.sin(4 * xs) / 8
    out = running_integral(f, xs[1] - xs[0])
    assert np.max(np.abs(out - exact)) < bound


def test_trapezoid_end_rule_variant_is_third_order_at_odd_nodes():
    xs = np.linspace(0, np.pi, 401)
    f = np.sin(xs) ** 2 + np.sin(2 * xs) ** 2
    exact = xs - np.sin(2 * xs) / 4 - np.sin(4 * xs) / 8
    out = running_integral(f, xs[1] - xs[0], end_rule="trap")
    err = np.abs(out - exact)
    assert err[::2].max() < 2e-9          # even prefixes identical to default
    assert 1e-8 < err[1::2].max() < 1e-6  # odd prefixes lose an order


def test_vector_valued_integrands_ride_along():
    xs = np.linspace(0, np.pi, 81)
    f = np.stack([np.cos(xs), np.sin(xs)], axis=-1)
    out = running_integral(f, xs[1] - xs[0])
    assert out.shape == f.shape
    assert np.allclose(out[:, 0], np.sin(xs), atol=1e-9)
    assert np.allclose(out[:, 1], 1 - np.cos(xs), atol=1e-9)


def test_full_integral_matches_last_prefix():
    xs = np.linspace(0, np.pi, 201)
    f = np.exp(-xs)
    assert integral(f, xs[1] - xs[0]) == running_integral(f, xs[1] - xs[0])[-1]


def test_unknown_end_rule_rejected():
    with pytest.raises(ValueError):
        running_integral(np.zeros(11), 0.1, end_rule="midpoint")
