"""Dyadic partition of unity on the frequency grid, blocks sigma_k, partial
sums S_k, weighted Besov norms and the Bernstein checker.

The partition is built from a C^inf decreasing step psi with psi = 1 on
[0, A] and psi = 0 on [B, inf):
    chi_tilde = psi,  chi(x) = psi(x/2) - psi(x),  chi_k = chi(./2^k).
With A = 0.8 and B = 1.3 we get supp chi_tilde in [0, 4/3) and
supp chi in (3/4, 8/3), as required.  The top block K_max is
1 - psi(./2^{K_max}), which absorbs everything above the last scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .group_core import Weight, weight_eval
from .spectral import (FrequencyGrid, SpatialField, SpatialGrid, SpectralField,
                       forward_transform, get_plan, inverse_transform)

STEP_A = 0.8
STEP_B = 1.3


def _e(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def smooth_step(x) -> np.ndarray:
    """psi(x): 1 for x <= A, 0 for x >= B, C^inf and decreasing in between."""
    s = (STEP_B - np.asarray(x, dtype=float)) / (STEP_B - STEP_A)
    a, b = _e(s), _e(1.0 - s)
    return a / (a + b)


def chi_tilde(x) -> np.ndarray:
    return smooth_step(np.abs(x))


def chi(x) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    return smooth_step(x / 2) - smooth_step(x)


def chi_k(x, k: int, K_max: int | None = None) -> np.ndarray:
    """chi_{-1} = chi_tilde, chi_k = chi(./2^k); the top block closes the sum."""
    x = np.abs(np.asarray(x, dtype=float))
    if k == -1:
        return chi_tilde(x)
    if K_max is not None and k == K_max:
        return 1.0 - smooth_step(x / 2.0**k)
    return chi(x / 2.0**k)


def block_window(k: int) -> tuple[float, float]:
    """Support of block k in the gauge |lam|(2|m|+n)."""
    if k == -1:
        return 0.0, 4.0 / 3.0
    return 0.75 * 2.0**k, 8.0 / 3.0 * 2.0**k


@dataclass(frozen=True)
class PartitionOfUnity:
    grid: FrequencyGrid
    K_max: int

    def __post_init__(self) -> None:
        if self.K_max < 0:
            raise ValueError("K_max must be >= 0")

    @cached_property
    def phi(self) -> np.ndarray:
        """phi[k+1, m, lam] = chi_k(|lam|(2|m|+n)), k = -1..K_max."""
        g = self.grid.gauge
        return np.stack([chi_k(g, k, self.K_max) for k in self.ks])

    @property
    def ks(self) -> range:
        return range(-1, self.K_max + 1)

    def multiplier(self, k: int) -> SpectralField:
        return SpectralField.from_diagonal(self.grid, self.phi[k + 1])

    def resolved(self, sgrid: SpatialGrid | None = None) -> np.ndarray:
        """Diagonal nodes below the top resolved scale (and resolved by sgrid if given)."""
        ok = self.grid.gauge < 8.0 / 3.0 * 2.0**self.K_max
        if sgrid is not None:
            plan = get_plan(sgrid, self.grid)
            idx = np.arange(self.grid.n_m)
            ok &= plan.mask[idx, idx]
        return ok


def build_partition(grid: FrequencyGrid, K_max: int, sgrid: SpatialGrid | None = None) -> PartitionOfUnity:
    """Partition for blocks k = -1..K_max; checks the grid reaches scale 2^{K_max}."""
    top = np.max(grid.gauge)
    if top < 0.75 * 2.0**K_max:
        raise ValueError(f"frequency grid too coarse for K_max={K_max}: max gauge {top:.3g}")
    if sgrid is not None and sgrid.horizontal_limit < 0.75 * 2.0**K_max:
        raise ValueError(f"spatial grid too coarse for K_max={K_max}")
    return PartitionOfUnity(grid, K_max)


def block_spectral(F: SpectralField, pou: PartitionOfUnity, k: int) -> SpectralField:
    """F . phi_k, i.e. F(m, l, lam) phi_k(l, l, lam): a function of the sub-Laplacian."""
    return SpectralField(F.grid, pou.phi[k + 1][None, :, :] * F.coeff, F.diagonal)


def partial_sum_spectral(F: SpectralField, pou: PartitionOfUnity, k: int) -> SpectralField:
    """S_k F = sum_{i < k} sigma_i F."""
    w = pou.phi[: max(k + 1, 0)].sum(axis=0) if k > -1 else np.zeros_like(pou.phi[0])
    return SpectralField(F.grid, w[None, :, :] * F.coeff, F.diagonal)


@dataclass
class BlockDecomposition:
    ks: list[int]
    blocks: list  # SpatialField or SpectralField

    def total(self):
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = out + b
        return out

    def __getitem__(self, k: int):
        return self.blocks[self.ks.index(k)]


def block(f, pou: PartitionOfUnity, k: int, sgrid: SpatialGrid | None = None):
    """sigma_k f for a SpectralField (spectral output) or SpatialField (spatial output)."""
    if isinstance(f, SpectralField):
        return block_spectral(f, pou, k)
    F = forward_transform(f, pou.grid)
    return inverse_transform(block_spectral(F, pou, k), f.grid, real=np.isrealobj(f.values))


def decompose(f, pou: PartitionOfUnity, sgrid: SpatialGrid | None = None,
              absorb_residual: bool = True) -> BlockDecomposition:
    """All blocks k = -1..K_max.

    Spectral input gives spectral blocks.  Spatial input gives spatial
    blocks; with ``absorb_residual`` the top block is f minus the others,
    so the blocks add up to f exactly on the grid.
    """
    ks = list(pou.ks)
    if isinstance(f, SpectralField):
        return BlockDecomposition(ks, [block_spectral(f, pou, k) for k in ks])
    F = forward_transform(f, pou.grid)
    real = np.isrealobj(f.values)
    blocks = [inverse_transform(block_spectral(F, pou, k), f.grid, real=real) for k in ks[:-1]]
    if absorb_residual:
        rest = f.values - sum(b.values for b in blocks)
        blocks.append(SpatialField(f.grid, rest))
    else:
        blocks.append(inverse_transform(block_spectral(F, pou, ks[-1]), f.grid, real=real))
    return BlockDecomposition(ks, blocks)


def spatial_blocks(F: SpectralField, pou: PartitionOfUnity, sgrid: SpatialGrid,
                   real: bool | None = None) -> BlockDecomposition:
    ks = list(pou.ks)
    return BlockDecomposition(ks, [inverse_transform(block_spectral(F, pou, k), sgrid, real=real) for k in ks])


@dataclass(frozen=True)
class BesovParams:
    gamma: float
    alpha: float = 2.0
    beta: float = math.inf
    weight: Weight = field(default_factory=lambda: Weight.exponential(0.0))

    def __post_init__(self) -> None:
        if self.alpha < 1 or self.beta < 1:
            raise ValueError("Besov exponents alpha, beta must be >= 1")


def weighted_lp(f: SpatialField, alpha: float, weight: Weight | np.ndarray | None = None) -> float:
    """(int |f|^alpha w^alpha)^{1/alpha}; alpha = inf gives the grid max of |f| w."""
    if weight is None:
        w = 1.0
    elif isinstance(weight, Weight):
        w = weight_eval(weight, f.grid.points())
    else:
        w = weight
    a = np.abs(f.values) * w
    if math.isinf(alpha):
        return float(np.max(a))
    m = float(np.max(a))
    if m == 0:
        return 0.0
    return float(m * (np.sum((a / m) ** alpha) * f.grid.cell_volume) ** (1.0 / alpha))


def block_norms(blocks: BlockDecomposition, alpha: float, weight: Weight | None) -> np.ndarray:
    if not blocks.blocks:
        return np.zeros(0)
    w = None
    if weight is not None:
        w = weight_eval(weight, blocks.blocks[0].grid.points())
    return np.array([weighted_lp(b, alpha, w) for b in blocks.blocks])


def combine(norms: np.ndarray, ks, gamma: float, beta: float) -> float:
    terms = 2.0 ** (gamma * np.asarray(ks, dtype=float)) * np.asarray(norms)
    if math.isinf(beta):
        return float(np.max(terms))
    return float(np.sum(terms**beta) ** (1.0 / beta))


def besov_norm(f, params: BesovParams, pou: PartitionOfUnity, sgrid: SpatialGrid | None = None,
               blocks: BlockDecomposition | None = None) -> float:
    """l^beta over k of 2^{gamma k} ||sigma_k f||_{L^alpha_w}."""
    if blocks is None:
        if isinstance(f, SpectralField):
            if sgrid is None:
                raise ValueError("spectral input needs a spatial grid for the L^alpha norms")
            blocks = spatial_blocks(f, pou, sgrid)
        else:
            blocks = decompose(f, pou)
    norms = block_norms(blocks, params.alpha, params.weight)
    val = combine(norms, blocks.ks, params.gamma, params.beta)
    if not math.isfinite(val):
        raise ValueError("Besov norm is not finite")
    return val


def besov_table(blocks: BlockDecomposition, params: BesovParams) -> list[tuple[int, float, float]]:
    """Rows (k, 2^{gamma k}, block norm) for CSV output."""
    norms = block_norms(blocks, params.alpha, params.weight)
    return [(k, 2.0 ** (params.gamma * k), float(v)) for k, v in zip(blocks.ks, norms)]


def bernstein_check(F: SpectralField, tau: float, k: int, alpha: float, beta: float,
                    weight: Weight, sgrid: SpatialGrid, tol: float = 0.0) -> float:
    """||Delta^k f||_{L^alpha_w} / (tau^{k + (n+1)(1/beta - 1/alpha)} ||f||_{L^beta_w}).

    Requires supp F within {|lam|(2|l|+n) < tau} (second index, see laplacian_multiplier).
    """
    g = F.grid
    outside = np.abs(F.coeff) * (g.gauge >= tau)[None, :, :]
    if np.max(outside, initial=0.0) > tol * max(np.max(np.abs(F.coeff)), 1e-300):
        raise ValueError("field is not band-limited to the requested scale")
    from .spectral import laplacian_multiplier
    f = inverse_transform(F, sgrid)
    dk = inverse_transform(laplacian_multiplier(F, k, signed=True), sgrid) if k else f
    n = g.n
    num = weighted_lp(dk, alpha, weight)
    den = tau ** (k + (n + 1) * (1.0 / beta - 1.0 / alpha)) * weighted_lp(f, beta, weight)
    return num / den


def besov_norm_l2(F: SpectralField, gamma: float, pou: PartitionOfUnity, beta: float = math.inf,
                  sgrid: SpatialGrid | None = None) -> float:
    """Unweighted B^gamma_{2,beta} norm with block L^2 norms taken by Plancherel.

    With ``sgrid`` the cells that grid cannot resolve are dropped, matching
    what a spatial evaluation would see.
    """
    g = F.grid
    c = F.coeff
    if sgrid is not None:
        from .spectral import resolution_mask
        c = c * resolution_mask(sgrid, g)
    e = np.sum(np.abs(c[None] * pou.phi[:, None, :, :]) ** 2 * g.weights, axis=(1, 2, 3))
    return combine(np.sqrt(e), list(pou.ks), gamma, beta)


def saturated_field(pou: PartitionOfUnity, kappa: float, sgrid: SpatialGrid | None = None) -> SpectralField:
    """Diagonal field built from one unit-L^2 window per block, scaled by 2^{-kappa k}.

    Neighbouring windows overlap, so ||sigma_k f||_{L^2} is comparable to
    (not equal to) 2^{-kappa k}: the field is extremal in B^kappa_{2,inf}.
    """
    g = pou.grid
    diag_mask = np.ones((g.n_m, g.n_lam))
    if sgrid is not None:
        from .spectral import resolution_mask
        m = resolution_mask(sgrid, g)
        diag_mask = m[np.arange(g.n_m), np.arange(g.n_m)]
    d = np.zeros((g.n_m, g.n_lam))
    for k in pou.ks:
        pk = pou.phi[k + 1] * diag_mask
        nk = math.sqrt(float(np.sum(g.weights * pk**2)))
        if nk > 0:
            d += pk * 2.0 ** (-kappa * k) / nk
    return SpectralField.from_diagonal(g, d)


def bernstein_table(fields: dict, ks, exponents, weights: dict, sgrid: SpatialGrid) -> dict:
    """Ratios of ``bernstein_check`` for band-limited fields {tau: F}, sharing the inversions.

    Returns {(weight name, alpha, beta, k): [ratio per tau]}.
    """
    from .spectral import laplacian_multiplier
    out: dict = {}
    wvals = {name: weight_eval(w, sgrid.points()) for name, w in weights.items()}
    for tau, F in fields.items():
        g = F.grid
        if np.any(np.abs(F.coeff) * (g.gauge >= tau)[None, :, :] > 0):
            raise ValueError("field is not band-limited to the requested scale")
        f = inverse_transform(F, sgrid)
        for k in ks:
            dk = inverse_transform(laplacian_multiplier(F, k, signed=True), sgrid) if k else f
            for name, w in wvals.items():
                for alpha, beta in exponents:
                    num = weighted_lp(dk, alpha, w)
                    den = tau ** (k + (g.n + 1) * (1.0 / beta - 1.0 / alpha)) * weighted_lp(f, beta, w)
                    out.setdefault((name, alpha, beta, k), []).append(num / den)
    return out
