import math

import numpy as np
import pytest

from heis_besov import littlewood_paley as lp
from heis_besov import paraproduct as pp
from heis_besov import spectral as sp
from heis_besov.group_core import Weight


def bump(P, a=1.0, c=(0.0, 0.0, 0.0)):
    x, y, z = P[..., 0] - c[0], P[..., 1] - c[1], P[..., 2] - c[2]
    return np.exp(-a * (x * x + y * y) - 0.6 * z * z) * np.cos(2 * z)


def setup(N, M, K):
    sg = sp.SpatialGrid(1, 4.0, 5.0, N, N)
    fg = sp.FrequencyGrid.for_spatial(sg, M, K_max=K)
    return sg, fg, lp.build_partition(fg, K)


def test_exact_sum_small_grid():
    sg, fg, pou = setup(8, 4, 1)
    f = sp.SpatialField.from_function(sg, bump)
    g = sp.SpatialField.from_function(sg, lambda P: bump(P, 2.0, (0.3, 0.0, 0.2)))
    r = pp.decompose(f, g, pou)
    assert np.max(np.abs(r.total().values - f.values * g.values)) < 1e-10


def test_index_constraints():
    sg = sp.SpatialGrid(1, 1.0, 1.0, 4, 4)
    rng = np.random.default_rng(3)
    ks = [-1, 0, 1, 2, 3]
    zeros = np.zeros(sg.shape)
    fv = rng.normal(size=sg.shape)
    gv = rng.normal(size=sg.shape)
    j, k = 0, 3
    fb = lp.BlockDecomposition(ks, [sp.SpatialField(sg, fv if i == j else zeros) for i in ks])
    gb = lp.BlockDecomposition(ks, [sp.SpatialField(sg, gv if i == k else zeros) for i in ks])
    f, g = sp.SpatialField(sg, fv), sp.SpatialField(sg, gv)
    r = pp.decompose(f, g, f_blocks=fb, g_blocks=gb)
    assert np.all(r.resonant.values == 0)
    assert np.all(r.high_low.values == 0)
    assert np.allclose(r.low_high.values, fv * gv)


def test_retention_windows():
    lo, hi = pp.retention_windows(3, "low_high")
    assert lo == pytest.approx(0.1875 * 8) and hi == pytest.approx(32 / 3 * 8)
    assert pp.retention_windows(2, "resonant")[0] == 0.0
    pou = lp.PartitionOfUnity(sp.FrequencyGrid.build(1, 8, 4), 4)
    assert pp.retained_blocks(-1, "resonant", pou)[0] == -1
    assert 4 in pp.retained_blocks(4, "high_low", pou)


def test_support_rule_and_truncation():
    # on 16^3 the top block aliases about 1% outside its window; 24^3 is clean
    sg, fg, pou = setup(24, 12, 3)
    f = sp.SpatialField.from_function(sg, bump)
    g = sp.SpatialField.from_function(sg, lambda P: bump(P, 2.0, (0.3, 0.0, 0.2)))
    rows = pp.support_check(f, g, pou)
    assert rows and all(r["ok"] for r in rows)
    assert max(r["outside_fraction"] for r in rows) <= 1e-2
    t = pp.decompose(f, g, pou, truncate=True)
    assert np.all(np.isfinite(t.total().values))


def test_product_estimate_refinement():
    ratios = []
    for N, M in [(16, 8), (24, 12)]:
        sg, fg, pou = setup(N, M, 3)
        f = sp.SpatialField.from_function(sg, bump)
        g = sp.SpatialField.from_function(sg, lambda P: bump(P, 2.0, (0.3, 0.0, 0.2)))
        w = Weight.exponential(0.1)
        ratios.append(pp.product_estimate_check(f, g, pou, 0.6, -0.3, w, w))
    assert all(math.isfinite(r) and r > 0 for r in ratios)
    assert 0.5 < ratios[1] / ratios[0] < 2.0
    with pytest.raises(ValueError):
        pp.product_estimate_check(f, g, pou, 0.2, -0.3, w, w)


def test_grid_mismatch():
    a = sp.SpatialField(sp.SpatialGrid(1, 1.0, 1.0, 4, 4), np.zeros((4, 4, 4)))
    b = sp.SpatialField(sp.SpatialGrid(1, 2.0, 1.0, 4, 4), np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        pp.decompose(a, b)
