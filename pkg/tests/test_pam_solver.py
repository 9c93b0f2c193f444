import math

import numpy as np
import pytest
from scipy import integrate

from heis_besov import heat_flow as hf
from heis_besov import littlewood_paley as lp
from heis_besov import pam_solver as pam
from heis_besov import spectral as sp
from heis_besov import stochastics as st

SG = sp.SpatialGrid(1, 3.0, 3.0, 16, 16)
FG = sp.FrequencyGrid.for_spatial(SG, 6, K_max=3)
POU = lp.build_partition(FG, 3, SG)
P = SG.points()
U0 = sp.SpatialField(SG, np.exp(-(P[..., 0] ** 2 + P[..., 1] ** 2) - P[..., 2] ** 2 / 2))


def w_fn(t):
    return 0.3 * t**2 + 0.2 * np.sin(3 * t)


def zero_path(level, horizon=0.5):
    prm = st.NoiseParams.dyadic(0.5, 0.75, horizon, level)
    return st.NoisePath(prm, FG, np.zeros((len(prm.times), FG.n_m, FG.n_m, FG.n_lam), dtype=complex))


def test_config_validation_and_roundtrip():
    c = pam.SolverConfig(horizon=0.5, n_max=3)
    assert pam.SolverConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError, match="vartheta"):
        pam.SolverConfig(vartheta=0.6, gamma=0.35)
    with pytest.raises(ValueError):
        pam.SolverConfig(product="bogus")
    with pytest.raises(ValueError):
        pam.SolverConfig.from_dict({"bogus": 1})
    assert c.weight(0.5).nu == pytest.approx(c.nu + 0.5 * c.b)


def test_hypothesis_check():
    r = pam.hypothesis_check(0.7, 0.35, 0.5, 0.75)
    assert r.feasible and r.window == (0.25, 0.5) and not r.tiny
    t = pam.hypothesis_check(0.5, 0.009, 0.99, 0.995)
    assert t.tiny
    bad = pam.hypothesis_check(0.7, 0.35, 0.5, 0.4)
    assert not bad.feasible
    assert "(zeta, alpha) admissible" in bad.violated()
    assert "gamma > (n+1)/2 - alpha" in bad.violated()
    assert "vartheta < 1 - zeta/2" in pam.hypothesis_check(0.8, 0.35, 0.5, 0.75).violated()


def test_dspace_norm():
    cfg = pam.SolverConfig(horizon=0.5, n_max=2)
    F = sp.forward_transform(U0, FG, warn=False)
    ts = cfg.times
    assert pam.dspace_norm([F] * len(ts), ts, SG, POU, cfg) == 0.0
    u = [F * t for t in ts]
    got = pam.dspace_norm(u, ts, SG, POU, cfg)
    expect = max((t - s) ** (1 - cfg.theta) * pam.weighted_besov(F, t, SG, POU, cfg)
                 for i, t in enumerate(ts) for s in ts[:i])
    assert got == pytest.approx(expect, rel=1e-10)


def test_young_integral():
    cfg = pam.SolverConfig(horizon=0.5, n_max=6, product="pointwise")
    zero = pam.young_integral(lambda i: U0, zero_path(6), 0.5, 6, SG, POU, cfg)
    assert np.all(zero.values == 0)
    ts = cfg.times
    sig = pam.ScalarSignal(ts, w_fn(ts))
    got = pam.young_integral(lambda i: U0, sig, 0.5, 6, SG, POU, cfg, spectral=True)
    e = np.zeros((1, 3))
    F0 = sp.forward_transform(U0, FG, warn=False)
    heat_at_e = lambda s: sp.inverse_transform_points(hf.semigroup_spectral(F0, 0.5 - s), e).real[0]  # noqa: E731
    # scalar oracle: int_0^t (P_{t-s} u0)(e) w'(s) ds
    ref = integrate.quad(lambda s: heat_at_e(s) * (0.6 * s + 0.6 * math.cos(3 * s)), 0, 0.5, epsrel=1e-10)[0]
    val = sp.inverse_transform_points(got, e).real[0]
    assert val == pytest.approx(ref, rel=2e-2)
    with pytest.raises(ValueError):
        pam.young_integral(lambda i: U0, sig, 0.5, 7, SG, POU, cfg)
    with pytest.raises(ValueError):
        pam.young_integral(lambda i: U0, sig, 0.3, 2, SG, POU, cfg)


def test_phi_is_affine():
    cfg = pam.SolverConfig(horizon=0.5, n_max=2)
    path = st.sample_noise(st.NoiseParams.dyadic(0.5, 0.75, 0.5, 2, seed=5), FG)
    rng = np.random.default_rng(0)
    n = len(cfg.times)
    v1 = [sp.SpatialField(SG, U0.values * (1 + 0.1 * rng.normal())) for _ in range(n)]
    v2 = [sp.SpatialField(SG, U0.values * np.cos(P[..., 0] * k)) for k in range(n)]
    a = 0.3
    mix = [sp.SpatialField(SG, a * x.values + (1 - a) * y.values) for x, y in zip(v1, v2)]
    lhs = pam.phi_map(mix, U0, path, POU, cfg)
    r1, r2 = pam.phi_map(v1, U0, path, POU, cfg), pam.phi_map(v2, U0, path, POU, cfg)
    for L, A, B in zip(lhs, r1, r2):
        assert np.allclose(L.coeff, a * A.coeff + (1 - a) * B.coeff, atol=1e-12)


def test_zero_and_scalar_noise():
    cfg = pam.SolverConfig(horizon=0.5, n_max=3, product="pointwise")
    s = pam.picard_solve(U0, zero_path(3), POU, cfg)
    F0 = sp.forward_transform(U0, FG, warn=False)
    for t, F in zip(s.times, s.fields):
        assert np.allclose(F.coeff, hf.semigroup_spectral(F0, t).coeff, atol=1e-12)
    assert s.iterations[0] <= 2
    c1 = pam.SolverConfig(horizon=0.5, n_max=6, product="pointwise")
    ts = c1.times
    s1 = pam.picard_solve(U0, pam.ScalarSignal(ts, w_fn(ts)), POU, c1)
    err = max(np.max(np.abs(F.coeff - math.exp(w_fn(t)) * hf.semigroup_spectral(F0, t).coeff))
              / np.max(np.abs(hf.semigroup_spectral(F0, t).coeff)) for t, F in zip(ts, s1.fields))
    assert err <= 1e-3


def test_horizon_and_contraction_errors():
    cfg = pam.SolverConfig(horizon=0.5, n_max=3, product="pointwise")
    ts = cfg.times
    with pytest.raises(pam.HorizonError):
        pam.picard_solve(U0, pam.ScalarSignal(ts, 1e6 * ts), POU, cfg)
    loose = pam.SolverConfig(horizon=0.5, n_max=3, product="pointwise", tau_C=1e-9)
    with pytest.raises(pam.NonContractionError) as info:
        pam.picard_solve(U0, pam.ScalarSignal(ts, 40.0 * ts), POU, loose)
    assert info.value.factor >= 1.0 or info.value.factor > 0.5
    with pytest.raises(ValueError):
        pam.picard_solve(U0, zero_path(4), POU, cfg)


def test_sub_horizon():
    cfg = pam.SolverConfig(horizon=0.5)
    assert pam.sub_horizon(0.5, cfg) == 0.5
    tau = pam.sub_horizon(100.0, cfg)
    assert tau == pytest.approx((cfg.tau_C / 2 * 100.0) ** (-1 / (cfg.epsilon + cfg.delta)))
