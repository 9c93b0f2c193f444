import math

import numpy as np
import pytest

from heis_besov import heat_flow as hf
from heis_besov import littlewood_paley as lp
from heis_besov import spectral as sp
from heis_besov.group_core import dilate

PTS = np.array([[0.3, -0.2, 0.1], [0.5, 0.5, -0.4], [1.0, 0.0, 0.8]])


def packet(P):
    # modulated so the spectral route sees no energy near lambda = 0
    return np.exp(-1.5 * (P[..., 0] ** 2 + P[..., 1] ** 2) - 0.3 * P[..., 2] ** 2) * np.cos(4 * P[..., 2])


def test_value_at_identity():
    for t in (0.1, 0.5, 1.0):
        assert hf.gaveau_kernel(t, np.zeros(3)) == pytest.approx(1 / (16 * t * t), rel=1e-10)
        assert hf.gaveau_kernel(t, np.zeros(3), method="quad") == pytest.approx(1 / (16 * t * t), rel=1e-10)
    with pytest.raises(ValueError):
        hf.gaveau_kernel(0.0, np.zeros(3))
    with pytest.raises(ValueError):
        hf.gaveau_kernel(0.5, np.zeros(3), method="bogus")


def test_fixed_vs_quad_and_scaling():
    t = 0.4
    assert np.allclose(hf.gaveau_kernel(t, PTS), hf.gaveau_kernel(t, PTS, method="quad"), rtol=1e-8)
    c = 2.5
    lhs = hf.gaveau_kernel(t, dilate(math.sqrt(c), PTS))
    assert np.allclose(lhs, c**-2 * hf.gaveau_kernel(t / c, PTS), rtol=1e-10)


def test_mass_and_generator_scale():
    r, w = hf._heat_rule(0.3, 1, hf.PAM_SCALE)
    assert w.sum() == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(hf.heat_kernel(0.25, PTS, generator_scale=1.0), hf.gaveau_kernel(0.5, PTS))


def test_spectral_synthesis_matches_closed_form():
    grid = sp.FrequencyGrid.build(1, 8, 6, lam_min=2.0**-20, lam_max=128.0)
    for t in (0.25, 1.0):
        a = hf.gaveau_kernel(t, PTS)
        b = hf.spectral_heat_kernel(t, PTS, grid, generator_scale=0.5)
        assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-4


def test_semigroup_routes_agree():
    sg = sp.SpatialGrid(1, 4.0, 6.0, 48, 64)
    fg = sp.FrequencyGrid.for_spatial(sg, 24, K_max=5)
    f = sp.SpatialField.from_function(sg, packet)
    assert hf.semigroup_apply(f, 0.0, grid=fg) is f
    t = 0.1
    F = sp.forward_transform(f, fg)
    pts = PTS[:2]
    spectral = sp.inverse_transform_points(hf.semigroup_spectral(F, t), pts).real
    direct = hf.heat_convolve_points(packet, t, pts)
    assert np.max(np.abs(spectral - direct)) / np.max(np.abs(direct)) < 1e-4
    assert np.allclose(hf.heat_convolve_points(packet, 0.0, pts), packet(pts))
    with pytest.raises(ValueError):
        hf.semigroup_apply(f, -1.0)
    with pytest.raises(ValueError):
        hf.semigroup_apply(packet, 0.1, route="gaveau")


def test_green_kernel_routes_and_homogeneity():
    p = np.array([[0.5, 0.0, 0.0], [0.3, 0.4, 0.5]])
    e = np.zeros(3)
    for a in (0.5, 1.0, 1.5):
        assert np.allclose(hf.green_kernel(a, p, e), hf.green_kernel_lambda(a, p, e), rtol=1e-8)
    # G_alpha(delta_c p, delta_c q) = c^{2 alpha - 4} G_alpha(p, q), n = 1
    a, c = 0.75, 1.7
    q = np.array([0.1, -0.2, 0.3])
    lhs = hf.green_kernel_lambda(a, dilate(c, p[:1]), dilate(c, q))
    assert lhs == pytest.approx(c ** (2 * a - 4) * hf.green_kernel_lambda(a, p[:1], q), rel=1e-8)
    # closed form at alpha = n = 1: (8 pi)^{-1} |q|_h^{-2}
    z = np.array([[0.0, 0.0, 1.0]])
    assert hf.green_kernel(1.0, z, e) == pytest.approx(1 / (8 * math.pi), rel=1e-8)


def test_green_kernel_errors():
    with pytest.raises(ValueError):
        hf.green_kernel(2.0, np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        hf.green_kernel(0.5, np.ones(3), np.ones(3))


def test_green_spectral_route():
    # the m-sum of (2m+1)^{-alpha} converges absolutely only for alpha > 1
    a = 1.25
    grid = sp.FrequencyGrid.build(1, 32, 8, lam_min=2.0**-14, lam_max=64.0)
    p = np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 0.5]])
    spec = sp.inverse_transform_points(sp.laplacian_multiplier(sp.dirac(grid), -a), p).real
    assert np.allclose(spec, hf.green_kernel(a, p, np.zeros(3)), rtol=0.05)
    sg = sp.SpatialGrid(1, 2.0, 2.0, 8, 8)
    field = hf.green_spectral(sp.FrequencyGrid.for_spatial(sg, 8, K_max=2), sg, a)
    assert field.values.shape == sg.shape


def test_smoothing_continuity_case():
    sg = sp.SpatialGrid(1, 4.0, 5.0, 32, 32)
    fg = sp.FrequencyGrid.for_spatial(sg, 16, K_max=4)
    pou = lp.build_partition(fg, 4)
    f = sp.SpatialField.from_function(sg, packet)
    norm = lambda F, g: lp.besov_norm_l2(F, g, pou, sgrid=sg)  # noqa: E731
    rows = hf.smoothing_check(f, 0.5, 0.5, [0.01, 0.1, 1.0], norm, fg)
    assert np.all(rows[:, 1] <= 1.0 + 1e-12)
    assert np.all(np.diff(rows[:, 1]) <= 0)
    tr = hf.time_regularity_check(f, 0.5, 0.25, [0.01, 0.1, 1.0], norm, fg)
    assert np.all(np.isfinite(tr[:, 1])) and np.max(tr[:, 1]) < 10
