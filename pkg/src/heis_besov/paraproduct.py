"""Bony decomposition f g = f<g + f.g + f>g on block decompositions.

    f<g = sum_k S_{k-1} f  sigma_k g        (S_{k-1} = sum_{j < k-1} sigma_j)
    f.g = sum_{|j-k| <= 1} sigma_j f sigma_k g
    f>g = g<f

Before truncation the three sums partition the index set {(j, k)}, so they
add up to the pointwise product exactly.  Truncation keeps, for each
summand, only the output blocks that meet its predicted frequency window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .group_core import Weight
from .littlewood_paley import (BesovParams, BlockDecomposition, PartitionOfUnity, besov_norm,
                               block_window, combine, decompose as lp_decompose, weighted_lp)
from .spectral import (FrequencyGrid, SpatialField, SpectralField, forward_transform,
                       inverse_transform)

# Frequency windows in units of 2^k for the gauge |lam|(2|m|+n).  The
# annulus is the conservative [1/4, 4] x [3/4, 8/3]; the ball radius for
# resonant terms has the same upper bound.  See retention_windows().
ANNULUS = (0.25 * 0.75, 4.0 * 8.0 / 3.0)
BALL = 4.0 * 8.0 / 3.0


@dataclass
class ParaproductResult:
    low_high: SpatialField
    resonant: SpatialField
    high_low: SpatialField

    def total(self) -> SpatialField:
        return self.low_high + self.resonant + self.high_low


def _lows(blocks: BlockDecomposition) -> list[np.ndarray]:
    """S_{k-1} values for each k in blocks.ks (sum over j < k-1)."""
    vals = [b.values for b in blocks.blocks]
    out, acc = [], np.zeros_like(vals[0])
    ks = blocks.ks
    for i, k in enumerate(ks):
        # acc holds sum_{j < k-1}
        out.append(acc.copy())
        j = i - 1  # index of block k-1 joins the low part for level k+1
        if j >= 0:
            acc = acc + vals[j]
    return out


def terms(f_blocks: BlockDecomposition, g_blocks: BlockDecomposition) -> dict[str, list[np.ndarray]]:
    """Per-level summands: S_{k-1}f sigma_k g, sigma_k f S_{k-1}g and the resonant pieces."""
    fv = [b.values for b in f_blocks.blocks]
    gv = [b.values for b in g_blocks.blocks]
    lf, lg = _lows(f_blocks), _lows(g_blocks)
    nk = len(fv)
    lh = [lf[i] * gv[i] for i in range(nk)]
    hl = [fv[i] * lg[i] for i in range(nk)]
    res = []
    for i in range(nk):
        acc = np.zeros_like(fv[i] * gv[i])
        for j in (i - 1, i, i + 1):
            if 0 <= j < nk:
                acc = acc + fv[j] * gv[i]
        res.append(acc)
    return {"low_high": lh, "resonant": res, "high_low": hl}


def retention_windows(k: int, kind: str) -> tuple[float, float]:
    """Gauge interval where the level-k summand of the given kind is retained."""
    if kind == "resonant":
        return 0.0, BALL * 2.0**k
    return ANNULUS[0] * 2.0**k, ANNULUS[1] * 2.0**k


def retained_blocks(k: int, kind: str, pou: PartitionOfUnity) -> list[int]:
    lo, hi = retention_windows(k, kind)
    keep = []
    for j in pou.ks:
        a, b = block_window(j)
        if j == pou.K_max:
            b = math.inf
        if a < hi and b > lo:
            keep.append(j)
    return keep


def decompose(f: SpatialField, g: SpatialField, pou: PartitionOfUnity | None = None,
              truncate: bool = False, f_blocks: BlockDecomposition | None = None,
              g_blocks: BlockDecomposition | None = None) -> ParaproductResult:
    """Three-term decomposition of f g.

    Without ``truncate`` the result is exact on the grid.  With it, every
    level-k summand is projected on the output blocks retained by its window.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    fb = f_blocks or lp_decompose(f, pou)
    gb = g_blocks or lp_decompose(g, pou)
    tm = terms(fb, gb)
    out = {}
    for kind, lst in tm.items():
        if not truncate:
            out[kind] = SpatialField(f.grid, sum(lst))
            continue
        acc = None
        for k, val in zip(fb.ks, lst):
            F = forward_transform(SpatialField(f.grid, val), pou.grid, warn=False)
            keep = retained_blocks(k, kind, pou)
            w = pou.phi[[j + 1 for j in keep]].sum(axis=0)
            P = SpectralField(F.grid, w[None, :, :] * F.coeff)
            acc = P if acc is None else acc + P
        out[kind] = inverse_transform(acc, f.grid, real=np.isrealobj(f.values))
    return ParaproductResult(out["low_high"], out["resonant"], out["high_low"])


def support_profile(val: SpatialField, grid: FrequencyGrid, pou: PartitionOfUnity) -> np.ndarray:
    """Plancherel energy of a field in each output block, localized in the column index."""
    F = forward_transform(val, grid, warn=False)
    w = grid.weights
    e = np.sum(np.abs(F.coeff) ** 2, axis=0)  # (n_m, n_lam), by second index l
    return np.array([np.sum(pou.phi[k + 1] ** 2 * e * w) for k in pou.ks])


def support_check(f: SpatialField, g: SpatialField, pou: PartitionOfUnity, rel_tol: float = 1e-2,
                  f_blocks: BlockDecomposition | None = None,
                  g_blocks: BlockDecomposition | None = None) -> list[dict]:
    """For each level-k summand: energy fraction outside its retained blocks.

    Blocks are purely spectral here (no residual folded into the top one),
    since the support rule concerns spectrally localized factors.
    """
    fb = f_blocks or lp_decompose(f, pou, absorb_residual=False)
    gb = g_blocks or lp_decompose(g, pou, absorb_residual=False)
    rows = []
    for kind, lst in terms(fb, gb).items():
        for k, val in zip(fb.ks, lst):
            prof = support_profile(SpatialField(f.grid, val), pou.grid, pou)
            tot = prof.sum()
            if tot <= 0:
                continue
            keep = retained_blocks(k, kind, pou)
            inside = sum(prof[j + 1] for j in keep)
            frac = float(max(tot - inside, 0.0) / tot)
            rows.append({"kind": kind, "k": k, "outside_fraction": frac, "ok": frac <= rel_tol})
    return rows


def product_estimate_check(f: SpatialField, g: SpatialField, pou: PartitionOfUnity,
                           kappa1: float, kappa2: float, w1: Weight, w2: Weight,
                           alpha1: float = math.inf, alpha2: float = math.inf,
                           beta: float = math.inf) -> float:
    """||f g||_{kappa2, w1 w2} / (||f||_{kappa1, w1} ||g||_{kappa2, w2}), 1/alpha = 1/alpha1 + 1/alpha2."""
    if not (kappa1 > 0 > kappa2 and kappa1 > abs(kappa2)):
        raise ValueError("need kappa1 > 0 > kappa2 with kappa1 > |kappa2|")
    alpha = 1.0 / (1.0 / alpha1 + 1.0 / alpha2) if (alpha1, alpha2) != (math.inf, math.inf) else math.inf
    pts = f.grid.points()
    wprod = w1(pts) * w2(pts)
    blocks = lp_decompose(f * g, pou)
    norms = np.array([weighted_lp(b, alpha, wprod) for b in blocks.blocks])
    num = combine(norms, blocks.ks, kappa2, beta)
    nf = besov_norm(f, BesovParams(kappa1, alpha1, beta, w1), pou)
    ng = besov_norm(g, BesovParams(kappa2, alpha2, beta, w2), pou)
    return num / (nf * ng)
