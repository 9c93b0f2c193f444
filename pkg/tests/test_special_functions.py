import math

import numpy as np
import pytest
from scipy.special import eval_genlaguerre

from heis_besov import special_functions as sf

x, w = np.polynomial.hermite.hermgauss(80)
W = w * np.exp(x * x)  # plain quadrature weights for int f dx


def test_hermite_low_orders():
    assert sf.hermite(0, 0.0) == pytest.approx(math.pi**-0.25)
    t = np.linspace(-3, 3, 11)
    assert np.allclose(sf.hermite(1, t), math.sqrt(2) * t * math.pi**-0.25 * np.exp(-t * t / 2))


def test_hermite_orthonormal():
    tab = sf.hermite_table(20, x)
    G = (tab * W) @ tab.T
    assert np.allclose(G, np.eye(21), atol=1e-10)


def test_rescaled_orthonormal_and_unit_scaling():
    lam = 3.7
    tab = np.array([sf.hermite_rescaled(k, lam, x / math.sqrt(lam)) for k in range(8)])
    G = (tab * W / math.sqrt(lam)) @ tab.T
    assert np.allclose(G, np.eye(8), atol=1e-10)
    assert np.allclose(sf.hermite_rescaled(5, 1.0, x), sf.hermite(5, x))
    assert np.allclose(sf.hermite_rescaled(5, -1.0, x), sf.hermite(5, x))
    with pytest.raises(ValueError):
        sf.hermite_rescaled(1, 0.0, x)
    with pytest.raises(ValueError):
        sf.hermite(4, x, M=3)


def test_laguerre():
    u = np.linspace(0, 5, 7)
    assert np.allclose(sf.laguerre(0, 2, u), 1.0)
    assert np.allclose(sf.laguerre(1, 0, u), 1 - u)
    assert np.allclose(sf.laguerre(1, 3, u), 4 - u)
    for k, a in [(5, 0), (7, 2), (12, 1)]:
        assert np.allclose(sf.laguerre(k, a, u), eval_genlaguerre(k, a, u))
        assert np.allclose(sf.laguerre_direct(k, a, u), eval_genlaguerre(k, a, u))


def test_kernel_closed_form_vs_quadrature():
    pts = np.array([[0.3, -0.2], [0.0, 0.0], [0.7, 0.4], [-0.5, 0.9]])
    for lam in (0.5, -1.3, 2.0):
        for m, l in [(0, 0), (1, 0), (0, 2), (3, 1), (4, 4)]:
            a = sf.wigner_kernel(m, l, lam, pts[:, 0], pts[:, 1])
            b = sf.wigner_kernel_quadrature(m, l, lam, pts[:, 0], pts[:, 1])
            assert np.allclose(a, b, atol=1e-10), (lam, m, l)


def test_kernel_at_identity_and_radial_sum():
    assert sf.wigner_kernel(0, 0, 1.7, 0.0, 0.0) == pytest.approx(1.0)
    # n = 1: the diagonal kernel K_{k,k} equals e^{-|lam| r^2} L_k(2 |lam| r^2)
    r = np.linspace(0, 2, 9)
    lam = 0.8
    for k in range(5):
        got = sf.wigner_kernel(k, k, lam, r, 0 * r)
        u = 2 * lam * r * r
        assert np.allclose(got, np.exp(-u / 2) * eval_genlaguerre(k, 0, u))
