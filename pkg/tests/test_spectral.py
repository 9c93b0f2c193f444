import math

import numpy as np
import pytest

from heis_besov import group_core as gc
from heis_besov import heat_flow as hf
from heis_besov import littlewood_paley as lp
from heis_besov import spectral as sp

SG = sp.SpatialGrid(1, 4.0, 5.0, 48, 48)
FG = sp.FrequencyGrid.for_spatial(SG, 24, K_max=5)


def packet(P, centre=(0.0, 0.0, 0.0), a=1.5, b=0.5, omega=3.0):
    # Gaussian times cos(omega z) in left-translated coordinates; the modulation keeps
    # the energy away from lambda = 0, where any finite M under-resolves the field
    d = gc.multiply(gc.inverse(np.asarray(centre, dtype=float)), P)
    return np.exp(-a * (d[..., 0] ** 2 + d[..., 1] ** 2) - b * d[..., 2] ** 2) * np.cos(omega * d[..., 2])


@pytest.fixture(scope="module")
def fields():
    f = sp.SpatialField.from_function(SG, packet)
    g = sp.SpatialField.from_function(SG, lambda P: packet(P, (0.2, -0.1, 0.1), 2.0, 0.6, 3.0))
    return f, g, sp.forward_transform(f, FG), sp.forward_transform(g, FG)


def test_roundtrip_and_plancherel(fields):
    f, _, F, _ = fields
    back = sp.inverse_transform(F, SG, real=True)
    assert np.max(np.abs(back.values - f.values)) / np.max(np.abs(f.values)) < 1e-3
    assert sp.plancherel_norm(F) == pytest.approx(sp.l2_norm_squared(f), rel=1e-4)
    assert sp.is_hermitian(F, 1e-8)


def test_zero_field():
    Z = sp.forward_transform(sp.SpatialField(SG, np.zeros(SG.shape)), FG)
    assert np.all(Z.coeff == 0)
    assert np.all(sp.inverse_transform(Z, SG).values == 0)


def test_heat_multiplier_inverts_to_gaveau():
    t = 0.5
    grid = sp.FrequencyGrid.build(1, 64, 6, lam_min=2.0**-20, lam_max=128.0)
    P = hf.heat_multiplier(grid, t, hf.PAM_SCALE)
    assert P.diagonal
    pts = np.array([[0.0, 0.0, 0.0], [0.3, -0.2, 0.1], [0.5, 0.5, -0.4]])
    got = sp.inverse_transform_points(P, pts).real
    # the deficit is the |m| > M tail at small |lambda| and shrinks like 1/M
    assert np.allclose(got, hf.gaveau_kernel(t, pts), rtol=5e-3)
    norms = [sp.plancherel_norm(hf.heat_multiplier(FG, s)) for s in (0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_dirac_surrogate_diagonal():
    grid = sp.FrequencyGrid.build(1, 4, K_max=1, lam_min=0.25, lam_max=2.0, nodes_per_panel=2)
    idx = np.arange(grid.n_m)
    errs = []
    for eps, N in [(0.12, 48), (0.08, 64)]:
        f = sp.SpatialField.from_function(
            sp.SpatialGrid(1, 1.0, 1.0, N, N),
            lambda P: np.exp(-(P[..., 0] ** 2 + P[..., 1] ** 2 + P[..., 2] ** 2) / eps**2) / (math.pi**1.5 * eps**3))
        F = sp.forward_transform(f, grid, warn=False, masked=False)
        off = F.coeff.copy()
        off[idx, idx] = 0
        assert np.max(np.abs(off)) < 1e-12
        errs.append(np.max(np.abs(F.coeff[idx, idx] - 1.0)))
    # O(width^2) approach to the identity field
    assert errs[1] < 0.6 * errs[0] and errs[1] < 0.15


def test_convolution_theorem(fields):
    f, _, F, G = fields
    pts = np.array([[0.1, 0.0, 0.0], [0.3, -0.2, 0.4], [0.0, 0.0, -0.5]])
    P = SG.points()
    # (f * g)(p) = int f(q) g(q^{-1} p) dq
    direct = np.array([(f.values * packet(gc.multiply(gc.inverse(P), p), (0.2, -0.1, 0.1), 2.0, 0.6, 3.0)).sum()
                       * SG.cell_volume for p in pts])
    got = sp.inverse_transform_points(sp.spectral_multiply(F, G), pts).real
    assert np.max(np.abs(got - direct)) / np.max(np.abs(direct)) < 1e-2


def test_algebra_identities(fields):
    _, _, F, G = fields
    D = sp.dirac(FG)
    assert np.allclose(sp.spectral_multiply(F, D).coeff, F.coeff)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, FG.n_m, FG.n_lam))
    A, B = sp.SpectralField.from_diagonal(FG, a), sp.SpectralField.from_diagonal(FG, b)
    assert np.allclose(sp.spectral_multiply(A, B).diag(), a * b)
    with pytest.raises(ValueError):
        sp.spectral_multiply(F, sp.SpectralField.zeros(sp.FrequencyGrid.build(1, 16, 3)))


def test_laplacian_powers(fields):
    _, _, F, _ = fields
    assert np.allclose(sp.laplacian_multiplier(F, 0.0).coeff, F.coeff)
    back = sp.laplacian_multiplier(sp.laplacian_multiplier(F, 1.0), -1.0)
    assert np.allclose(back.coeff, F.coeff)
    # the heat multiplier is e^{-s t (-Delta)^hat}; at m = 0 the Laplacian symbol is -4|lam|
    lap = sp.laplacian_multiplier(sp.dirac(FG), 1, signed=True).diag()
    assert np.allclose(lap[0], -4 * np.abs(FG.lam))
    with pytest.raises(ValueError):
        sp.laplacian_multiplier(F, 0.5, signed=True)


def test_dhat():
    d, d0 = sp.dhat_metrics(((2,), (1,), 0.7), ((2,), (1,), 0.7))
    assert d == 0.0
    assert sp.dhat_metrics(((0,), (0,), -1.5), ((0,), (0,), -1.5))[1] == pytest.approx(1.5)


def test_frequency_operators(fields):
    f, _, F, _ = fields
    const = sp.SpectralField.from_diagonal(FG, np.ones((FG.n_m, FG.n_lam)))
    interior = FG.abs_m < FG.M
    assert np.allclose(sp.delta_hat(const).diag()[interior], 0.0)
    P = SG.points()
    v2f = sp.SpatialField(SG, (P[..., 0] ** 2 + P[..., 1] ** 2) * f.values)
    lhs = sp.forward_transform(v2f, FG).coeff
    rhs = -sp.delta_hat(F).coeff
    keep = (FG.abs_m < FG.M - 2)[:, None] & (FG.abs_m < FG.M - 2)[None, :]
    assert np.max(np.abs(lhs - rhs)[keep]) < 5e-3 * np.max(np.abs(lhs))
    zf = sp.SpatialField(SG, -1j * P[..., 2] * f.values)
    lhs = sp.forward_transform(zf, FG).coeff
    rhs = sp.dlambda_hat(F).coeff
    # second-order differences on Gauss-Legendre nodes limit this to about 1%
    assert np.max(np.abs(lhs - rhs)[keep]) < 2e-2 * np.max(np.abs(lhs))


def test_theta_multiplier():
    assert np.allclose(sp.theta_multiplier(lambda x: np.ones_like(x), FG).coeff, sp.dirac(FG).coeff)
    ball = sp.theta_multiplier(sp.ball_indicator_profile, FG).diag()
    assert np.array_equal(ball.real == 1, FG.gauge < 1)


def test_theta_dilation_covariance():
    # g_tau(q) = tau^{n+1} g_1(delta_{sqrt tau} q) for the annulus profile chi(x/4) - chi(x)
    grid = sp.FrequencyGrid.build(1, 32, 5, lam_min=2.0**-10, lam_max=64.0)
    rng = np.random.default_rng(1)
    q = rng.uniform(-0.8, 0.8, (12, 3))

    def prof(x):
        return lp.chi(x / 4) - lp.chi(x)

    g1 = sp.theta_multiplier(prof, grid)
    for tau in (2.0, 4.0):
        gt = sp.inverse_transform_points(sp.theta_multiplier(lambda x: prof(x / tau), grid), q).real
        ref = tau**2 * sp.inverse_transform_points(g1, gc.dilate(np.sqrt(tau), q)).real
        assert np.max(np.abs(gt)) > 1e-3
        assert np.max(np.abs(gt - ref)) <= 1e-3 * np.max(np.abs(gt))
