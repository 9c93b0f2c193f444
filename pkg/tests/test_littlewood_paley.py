import math

import numpy as np
import pytest

from heis_besov import littlewood_paley as lp
from heis_besov import spectral as sp
from heis_besov.group_core import Weight

SG = sp.SpatialGrid(1, 4.0, 5.0, 32, 32)
FG = sp.FrequencyGrid.for_spatial(SG, 16, K_max=4)
POU = lp.build_partition(FG, 4)


def packet(P):
    return np.exp(-1.5 * (P[..., 0] ** 2 + P[..., 1] ** 2) - 0.8 * P[..., 2] ** 2) * np.cos(3 * P[..., 2])


def test_chi_partition_and_supports():
    x = np.linspace(0, 40, 4001)
    total = sum(lp.chi_k(x, k, 4) for k in range(-1, 5))
    assert np.allclose(total, 1.0)
    assert np.all(lp.chi_tilde(x[x >= 4 / 3]) == 0)
    c = lp.chi(x)
    assert np.all(c[(x <= 0.75) | (x >= 8 / 3)] == 0)
    assert np.all(c >= 0) and np.all(c <= 1)
    s = lp.smooth_step(x)
    assert np.all(np.diff(s) <= 0)


def test_pou_on_grid():
    s = POU.phi.sum(axis=0)
    assert np.allclose(s[POU.resolved()], 1.0)
    M = POU.multiplier(2)
    assert M.diagonal


def test_grid_too_coarse():
    with pytest.raises(ValueError):
        lp.build_partition(sp.FrequencyGrid.build(1, 4, 2), 9)
    with pytest.raises(ValueError):
        lp.build_partition(FG, 4, sp.SpatialGrid(1, 4.0, 4.0, 8, 8))


def test_blocks_sum_to_field():
    f = sp.SpatialField.from_function(SG, packet)
    exact = lp.decompose(f, POU)
    assert np.allclose(exact.total().values, f.values)
    spec = lp.decompose(f, POU, absorb_residual=False)
    err = np.max(np.abs(spec.total().values - f.values)) / np.max(np.abs(f.values))
    assert err < 1e-2


def test_disjoint_blocks():
    for j in range(0, 4):
        F = sp.SpectralField.from_diagonal(FG, POU.phi[j + 1])
        for k in POU.ks:
            B = lp.block_spectral(F, POU, k)
            if abs(k - j) >= 2:
                assert np.all(B.coeff == 0)
    # partial sums telescope
    F = sp.SpectralField.from_diagonal(FG, np.ones((FG.n_m, FG.n_lam)))
    S = lp.partial_sum_spectral(F, POU, 3)
    ref = sum(lp.block_spectral(F, POU, k).coeff for k in (-1, 0, 1, 2))
    assert np.allclose(S.coeff, ref)


def test_besov_norms():
    zero = sp.SpatialField(SG, np.zeros(SG.shape))
    assert lp.besov_norm(zero, lp.BesovParams(0.5), POU) == 0.0
    with pytest.raises(ValueError):
        lp.BesovParams(0.5, alpha=0.5)
    f = sp.SpatialField.from_function(SG, packet)
    params = lp.BesovParams(0.5, 2.0, math.inf, Weight.exponential(0.1))
    blocks = lp.decompose(f, POU)
    val = lp.besov_norm(f, params, POU, blocks=blocks)
    rows = lp.besov_table(blocks, params)
    assert val == pytest.approx(max(a * b for _, a, b in rows))
    # gamma larger weighs high blocks more
    assert lp.besov_norm(f, lp.BesovParams(1.0), POU, blocks=blocks) >= lp.besov_norm(f, lp.BesovParams(0.0), POU,
                                                                                      blocks=blocks)


def test_weighted_lp():
    one = sp.SpatialField(SG, np.ones(SG.shape))
    vol = (2 * SG.L) ** 2 * 2 * SG.Lz
    assert lp.weighted_lp(one, 2.0) == pytest.approx(math.sqrt(vol))
    assert lp.weighted_lp(one, math.inf, Weight.exponential(0.0)) == pytest.approx(1.0)
    w = Weight.exponential(0.5)
    expect = np.max(w(SG.points()))
    assert lp.weighted_lp(one, math.inf, w) == pytest.approx(expect)


def test_saturated_field_is_extremal():
    kappa = 0.7
    F = lp.saturated_field(POU, kappa)
    # every weighted block norm 2^{kappa k} ||sigma_k f|| sits near 1
    lo = lp.besov_norm_l2(F, kappa, POU, beta=2.0) / math.sqrt(len(POU.ks))
    hi = lp.besov_norm_l2(F, kappa, POU)
    assert 0.8 < lo <= hi < 1.25
    # a larger regularity index sees growth, a smaller one decay
    assert lp.besov_norm_l2(F, kappa + 0.5, POU) > 2 * hi


def test_bernstein_trivial_case_and_support_error():
    tau = 4.0
    F = sp.SpectralField.from_diagonal(FG, lp.chi_tilde(FG.gauge / (tau / 2)) * (FG.gauge < tau))
    for w in (Weight.exponential(0.5), Weight.polynomial(1.0)):
        assert lp.bernstein_check(F, tau, 0, 2.0, 2.0, w, SG) == pytest.approx(1.0)
        assert lp.bernstein_check(F, tau, 1, 2.0, 2.0, w, SG) < 4.0
    wide = sp.SpectralField.from_diagonal(FG, np.ones((FG.n_m, FG.n_lam)))
    with pytest.raises(ValueError):
        lp.bernstein_check(wide, tau, 0, 2.0, 2.0, Weight.exponential(0.1), SG)
