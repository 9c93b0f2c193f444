"""Mild-form parabolic Anderson model du = Delta u dt / 2 + u dV on a time grid.

The mild map is
    Phi(v)_t = P_t u0 + int_0^t P_{t-r}(v_r dV_r),
with the Young integral realized by left-point Riemann sums on the dyadic
time grid of the noise path.  Heat flow, products and norms act on spectral
fields; the spatial grid is used for pointwise products and weighted norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .group_core import Weight, weight_eval
from .heat_flow import PAM_SCALE, semigroup_spectral
from .littlewood_paley import PartitionOfUnity, combine
from .paraproduct import decompose as paraproduct_decompose
from .spectral import (SpatialField, SpatialGrid, SpectralField,
                       forward_transform, inverse_transform, inverse_transform_batch)
from .stochastics import admissible


class NonContractionError(RuntimeError):
    def __init__(self, factor: float, iteration: int):
        super().__init__(f"Picard map is not contracting: measured factor {factor:.4g} at iteration {iteration}")
        self.factor = factor
        self.iteration = iteration


class HorizonError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    horizon: float = 1.0
    n_max: int = 5
    theta: float = 0.5
    vartheta: float = 0.7
    gamma: float = 0.35
    kappa: float = 0.5
    nu: float = 0.1
    b: float = 0.1
    eta: float = 0.5
    max_iter: int = 40
    tol: float = 1e-10
    besov_alpha: float = 2.0
    besov_beta: float = math.inf
    product: str = "paraproduct"
    tau_C: float = 1.0
    epsilon: float = 0.05
    delta: float = 0.05
    noise_a: float = 1.0
    noise_rho_b: float = 4.0
    generator_scale: float = PAM_SCALE

    def __post_init__(self) -> None:
        for msg, ok in self.violations():
            if not ok:
                raise ValueError(f"solver config violates {msg}")

    def violations(self) -> list[tuple[str, bool]]:
        return [
            ("horizon > 0", self.horizon > 0),
            ("0 <= n_max <= 11", 0 <= self.n_max <= 11),
            ("0 < gamma < 1", 0 < self.gamma < 1),
            ("vartheta > (1 + gamma)/2", self.vartheta > (1 + self.gamma) / 2),
            ("vartheta < 1", self.vartheta < 1),
            ("theta + vartheta > 1", self.theta + self.vartheta > 1),
            ("0 < theta <= 1", 0 < self.theta <= 1),
            ("gamma < kappa < 1", self.gamma < self.kappa < 1),
            ("nu >= 0 and b >= 0", self.nu >= 0 and self.b >= 0),
            ("0 < eta < 1", 0 < self.eta < 1),
            ("max_iter >= 1", self.max_iter >= 1),
            ("product in {paraproduct, pointwise}", self.product in ("paraproduct", "pointwise")),
            ("epsilon, delta > 0", self.epsilon > 0 and self.delta > 0),
        ]

    def weight(self, t: float) -> Weight:
        """w_t(q) = exp(-(nu + b t) |q|_*^eta)."""
        return Weight.exponential(self.nu + self.b * t, self.eta)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, 2**self.n_max + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["besov_beta"] = "inf" if math.isinf(self.besov_beta) else self.besov_beta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        if d.get("besov_beta") == "inf":
            d["besov_beta"] = math.inf
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ScalarSignal:
    """Space-constant noise V_t(q) = w(t)."""

    times: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) != len(self.w):
            raise ValueError("signal and time grid differ in length")


@dataclass
class SolverState:
    times: np.ndarray
    fields: list[SpectralField]
    spatial: list[SpatialField]
    iterations: list[int] = field(default_factory=list)
    dnorms: list[list[float]] = field(default_factory=list)
    factors: list[list[float]] = field(default_factory=list)
    segments: list[tuple[int, int]] = field(default_factory=list)
    tau: float = math.nan
    noise_norm: float = math.nan

    @property
    def p(self) -> int:
        return int(sum(self.iterations))

    def log(self) -> dict:
        return {"iterations": self.iterations, "segments": self.segments, "tau": self.tau,
                "noise_holder_norm": self.noise_norm, "dspace_norms": self.dnorms,
                "contraction_factors": self.factors}


class _Context:
    """Grids, partition and noise increments shared by all Phi evaluations."""

    def __init__(self, sgrid: SpatialGrid, pou: PartitionOfUnity, noise, config: SolverConfig):
        self.sgrid, self.pou, self.grid, self.noise, self.cfg = sgrid, pou, pou.grid, noise, config
        self.times = np.asarray(noise.times if isinstance(noise, ScalarSignal) else noise.params.times)
        self._dv: dict[int, SpatialField] = {}
        self._wts: dict[float, np.ndarray] = {}

    def weight_values(self, t: float) -> np.ndarray:
        if t not in self._wts:
            self._wts[t] = weight_eval(self.cfg.weight(t), self.sgrid.points())
        return self._wts[t]

    def dv_spatial(self, i: int, j: int) -> SpatialField:
        key = i * 100000 + j
        if key not in self._dv:
            F = SpectralField(self.grid, self.noise.values[j] - self.noise.values[i])
            self._dv[key] = inverse_transform(F, self.sgrid, real=True)
        return self._dv[key]

    def product(self, v: SpatialField, V: SpectralField, i: int, j: int) -> SpectralField:
        """Spectral field of v * dV_{t_i t_j}."""
        if isinstance(self.noise, ScalarSignal):
            return V * float(self.noise.w[j] - self.noise.w[i])
        if not np.any(self.noise.values[j] - self.noise.values[i]):
            return SpectralField.zeros(self.grid)
        dv = self.dv_spatial(i, j)
        if self.cfg.product == "pointwise":
            prod = SpatialField(self.sgrid, v.values * dv.values)
        else:
            prod = paraproduct_decompose(v, dv, self.pou, truncate=True).total()
        return forward_transform(prod, self.grid, warn=False)


def _check_level(times: np.ndarray, i_end: int, level: int, i_start: int = 0) -> int:
    span = i_end - i_start
    if span % (2**level) != 0:
        raise ValueError(f"level {level} exceeds the noise-path resolution on this interval")
    return span // 2**level


def _mild(ctx: _Context, v: list[SpatialField], V: list[SpectralField], start: SpectralField,
          i0: int, i1: int) -> list[SpectralField]:
    """Phi on nodes i0..i1 with initial spectral datum ``start`` at t_{i0}."""
    t = ctx.times
    s = ctx.cfg.generator_scale
    out = [start]
    acc = start
    for i in range(i0, i1):
        g = ctx.product(v[i - i0], V[i - i0], i, i + 1)
        acc = semigroup_spectral(acc + g, t[i + 1] - t[i], s)
        out.append(acc)
    return out


def _spatial(ctx: _Context, fields: list[SpectralField]) -> list[SpatialField]:
    if not fields:
        return []
    vals = inverse_transform_batch(np.stack([F.coeff for F in fields]), ctx.grid, ctx.sgrid, real=True)
    return [SpatialField(ctx.sgrid, v) for v in vals]


def young_integral(v, path, t: float, level: int, sgrid: SpatialGrid, pou: PartitionOfUnity,
                   config: SolverConfig | None = None, spectral: bool = False):
    """sum_j P_{t - r_j}(v_{r_j} dV_{r_j r_{j+1}}) over the level-n dyadic partition of [0, t].

    ``v`` is a list of SpatialFields at the path's time nodes, or a callable
    of the node index.
    """
    cfg = config or SolverConfig()
    ctx = _Context(sgrid, pou, path, cfg)
    i_end = int(np.argmin(np.abs(ctx.times - t)))
    if abs(ctx.times[i_end] - t) > 1e-12 * max(1.0, t):
        raise ValueError(f"time {t} is not a node of the noise path")
    step = _check_level(ctx.times, i_end, level)
    get = v if callable(v) else (lambda i: v[i])
    acc = SpectralField.zeros(pou.grid)
    for a in range(0, i_end, step):
        b = a + step
        va = get(a)
        Va = forward_transform(va, pou.grid, warn=False)
        g = ctx.product(va, Va, a, b)
        acc = acc + semigroup_spectral(g, ctx.times[i_end] - ctx.times[a], cfg.generator_scale)
    if spectral:
        return acc
    return inverse_transform(acc, sgrid, real=True)


def _block_norm_table(ctx: _Context, fields: list[SpectralField]) -> np.ndarray:
    """Spatial blocks sigma_k u_t for every field: array (T, K+2, *shape)."""
    phi = ctx.pou.phi
    stack = np.stack([F.coeff for F in fields])
    coeffs = (stack[:, None] * phi[None, :, None, :, :]).reshape((-1,) + stack.shape[1:])
    vals = inverse_transform_batch(coeffs, ctx.grid, ctx.sgrid, real=True)
    return vals.reshape((len(fields), phi.shape[0]) + ctx.sgrid.shape)


def _norms(ctx: _Context, blocks: np.ndarray, t: float) -> np.ndarray:
    """Weighted L^alpha norms of blocks (..., K+2, *shape) under w_t."""
    w = ctx.weight_values(t)
    a = ctx.cfg.besov_alpha
    ax = tuple(range(-len(ctx.sgrid.shape), 0))
    x = np.abs(blocks) * w
    if math.isinf(a):
        return x.max(axis=ax)
    return (np.sum(x**a, axis=ax) * ctx.sgrid.cell_volume) ** (1 / a)


def _combine_rows(ctx: _Context, norms: np.ndarray) -> np.ndarray:
    ks = np.asarray(list(ctx.pou.ks), dtype=float)
    terms = 2.0 ** (ctx.cfg.kappa * ks) * norms
    b = ctx.cfg.besov_beta
    if math.isinf(b):
        return terms.max(axis=-1)
    return np.sum(terms**b, axis=-1) ** (1 / b)


def _weighted_norm(ctx: _Context, blocks: np.ndarray, t: float) -> float:
    return float(_combine_rows(ctx, _norms(ctx, blocks, t)))


def _dspace_from_blocks(ctx: _Context, blocks: np.ndarray, times: np.ndarray) -> float:
    best = 0.0
    for j in range(1, len(times)):
        vals = _combine_rows(ctx, _norms(ctx, blocks[j][None] - blocks[:j], times[j]))
        best = max(best, float(np.max(vals / (times[j] - times[:j]) ** ctx.cfg.theta)))
    return best


def dspace_norm(u: list[SpectralField], times, sgrid: SpatialGrid, pou: PartitionOfUnity,
                config: SolverConfig) -> float:
    """max over grid pairs s < t of ||u_t - u_s||_{B^{kappa, w_t}} / (t - s)^theta."""
    ctx = _Context.__new__(_Context)
    ctx.sgrid, ctx.pou, ctx.grid, ctx.cfg = sgrid, pou, pou.grid, config
    ctx._wts = {}
    return _dspace_from_blocks(ctx, _block_norm_table(ctx, u), np.asarray(times))


def weighted_besov(F: SpectralField, t: float, sgrid: SpatialGrid, pou: PartitionOfUnity,
                   config: SolverConfig) -> float:
    """||f||_{B^{kappa, w_t}_{alpha, beta}}."""
    ctx = _Context.__new__(_Context)
    ctx.sgrid, ctx.pou, ctx.grid, ctx.cfg = sgrid, pou, pou.grid, config
    ctx._wts = {}
    return _weighted_norm(ctx, _block_norm_table(ctx, [F])[0], t)


def noise_holder_norm(ctx: _Context) -> float:
    """max over dyadic gaps h = t_{i+2^l} - t_i of ||dV||_{A_a^{-gamma}} / h^vartheta."""
    if isinstance(ctx.noise, ScalarSignal):
        w, t = ctx.noise.w, ctx.times
        best = 0.0
        for l in range(int(round(math.log2(len(t) - 1))) + 1):
            st = 2**l
            d = np.abs(w[st:] - w[:-st]) / (t[st:] - t[:-st]) ** ctx.cfg.vartheta
            best = max(best, float(d.max()))
        return best
    cfg = ctx.cfg
    rho = weight_eval(Weight.polynomial(cfg.noise_rho_b, form="decay"), ctx.sgrid.points())
    p = 2 * cfg.noise_a
    vol = ctx.sgrid.cell_volume
    vals = ctx.noise.values
    blocks = _block_norm_table(ctx, [SpectralField(ctx.grid, v) for v in vals])
    t = ctx.times
    nlev = int(round(math.log2(len(t) - 1)))
    best = 0.0
    for l in range(nlev + 1):
        st = 2**l
        for i in range(0, len(t) - st, st):
            norms = (np.sum((np.abs(blocks[i + st] - blocks[i]) * rho) ** p, axis=(1, 2, 3)) * vol) ** (1 / p)
            val = combine(norms, list(ctx.pou.ks), -cfg.gamma, p)
            best = max(best, val / (t[i + st] - t[i]) ** cfg.vartheta)
    return best


def sub_horizon(noise_norm: float, config: SolverConfig) -> float:
    """tau = (C/2 ||W||)^{-1/(epsilon + delta)}, capped at the horizon."""
    base = 0.5 * config.tau_C * noise_norm
    if base <= 0:
        return config.horizon
    return min(config.horizon, base ** (-1.0 / (config.epsilon + config.delta)))


def picard_solve(u0: SpatialField, path, pou: PartitionOfUnity, config: SolverConfig,
                 check_contraction: bool = True) -> SolverState:
    """Picard iteration on sub-horizons of length tau, patched to the full horizon."""
    sgrid = u0.grid
    ctx = _Context(sgrid, pou, path, config)
    t = ctx.times
    if not np.allclose(t, config.times, rtol=0, atol=1e-12):
        raise ValueError("noise-path time grid must equal the solver time grid")
    wn = noise_holder_norm(ctx)
    tau = sub_horizon(wn, config)
    dt = t[1] - t[0]
    steps = 2 ** int(math.floor(math.log2(max(tau / dt, 1e-300)))) if tau >= dt else 0
    if steps < 1:
        raise HorizonError(f"sub-horizon tau = {tau:.3g} is below the grid step {dt:.3g}")
    N = len(t) - 1
    steps = min(steps, N)
    state = SolverState(t, [], [], tau=steps * dt, noise_norm=wn)
    U0 = forward_transform(u0, pou.grid, warn=False)
    fields, spatial = [U0], [u0]
    for i0 in range(0, N, steps):
        i1 = min(i0 + steps, N)
        seg_t = t[i0:i1 + 1]
        start_F, start_u = fields[-1], spatial[-1]
        V = [start_F] * (i1 - i0)
        v = [start_u] * (i1 - i0)
        prev_blocks = _block_norm_table(ctx, [start_F] * (i1 - i0 + 1))
        dn, fac = [], []
        it = 0
        while it < config.max_iter:
            it += 1
            new = _mild(ctx, v, V, start_F, i0, i1)
            blocks = _block_norm_table(ctx, new)
            d = _dspace_from_blocks(ctx, blocks - prev_blocks, seg_t)
            if dn and dn[-1] > 0:
                fac.append(d / dn[-1])
                if check_contraction and fac[-1] >= 1.0 and d > config.tol:
                    raise NonContractionError(fac[-1], it)
            dn.append(d)
            V = new[:-1]
            v = [start_u] + _spatial(ctx, new[1:-1])
            prev_blocks = blocks
            if d < config.tol:
                break
        state.iterations.append(it)
        state.dnorms.append(dn)
        state.factors.append(fac)
        state.segments.append((i0, i1))
        fields.extend(new[1:])
        spatial.extend(_spatial(ctx, new[1:]))
    state.fields, state.spatial = fields, spatial
    return state


def phi_map(v: list[SpatialField], u0: SpatialField, path, pou: PartitionOfUnity,
            config: SolverConfig) -> list[SpectralField]:
    """Phi(v) on the whole time grid (v given at every node)."""
    ctx = _Context(u0.grid, pou, path, config)
    V = [forward_transform(x, pou.grid, warn=False) for x in v]
    U0 = forward_transform(u0, pou.grid, warn=False)
    return _mild(ctx, v[:-1], V[:-1], U0, 0, len(ctx.times) - 1)


@dataclass
class HypothesisReport:
    admissible: bool
    checks: dict[str, bool]
    window: tuple[float, float]
    feasible: bool
    tiny: bool

    def violated(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "checks": self.checks, "gamma_window": list(self.window),
                "feasible": self.feasible, "window_tiny": self.tiny}


def hypothesis_check(vartheta: float, gamma: float, zeta: float, alpha: float, n: int = 1,
                     tiny: float = 0.05) -> HypothesisReport:
    """Exponent chain vartheta < 1 - zeta/2, gamma > (n+1)/2 - alpha, 2 vartheta > 1 + gamma.

    The gamma window is ((n+1)/2 - alpha, 1 - zeta) intersected with (0, 1);
    it is non-empty exactly for admissible (zeta, alpha).
    """
    adm = admissible(zeta, alpha, n)
    checks = {
        "vartheta < 1 - zeta/2": vartheta < 1 - zeta / 2,
        "gamma > (n+1)/2 - alpha": gamma > (n + 1) / 2 - alpha,
        "2 vartheta > 1 + gamma": 2 * vartheta > 1 + gamma,
        "0 < gamma < 1": 0 < gamma < 1,
        "(zeta, alpha) admissible": adm,
    }
    lo = max(0.0, (n + 1) / 2 - alpha)
    hi = min(1.0, 1.0 - zeta)
    feasible = adm and hi > lo and all(checks.values())
    return HypothesisReport(adm, checks, (lo, hi), feasible, adm and (hi - lo) < tiny)


def young_level_differences(v, path, t: float, levels, sgrid: SpatialGrid, pou: PartitionOfUnity,
                            config: SolverConfig | None = None) -> dict:
    """Norms of I^n - I^{n-1} on [0, t] in B^{kappa, w_t}.

    ``total`` holds ||I^n - I^{n-1}||; ``local`` holds the largest single
    refinement term [P_{t-c}(v_c .) - P_{t-a}(v_a .)] dV_{cb} over the coarse
    intervals [a, b] with midpoint c, the quantity bounded by (t/2^n)^{1+eps}.
    """
    cfg = config or SolverConfig()
    ctx = _Context(sgrid, pou, path, cfg)
    i_end = int(np.argmin(np.abs(ctx.times - t)))
    get = v if callable(v) else (lambda i: v[i])
    cache: dict[int, SpectralField] = {}

    def V(i: int) -> SpectralField:
        if i not in cache:
            cache[i] = forward_transform(get(i), pou.grid, warn=False)
        return cache[i]

    def heat(F: SpectralField, a: int) -> SpectralField:
        return semigroup_spectral(F, ctx.times[i_end] - ctx.times[a], cfg.generator_scale)

    total, local, hs = [], [], []
    for n in levels:
        step = _check_level(ctx.times, i_end, n)
        if step % 1 or step < 1:
            raise ValueError(f"level {n} exceeds the noise-path resolution")
        terms = []
        for a in range(0, i_end, 2 * step):
            c, b = a + step, a + 2 * step
            fine = heat(ctx.product(get(c), V(c), c, b), c)
            coarse = heat(ctx.product(get(a), V(a), c, b), a)
            terms.append(fine - coarse)
        blocks = _block_norm_table(ctx, terms)
        norms = _combine_rows(ctx, _norms(ctx, blocks, t))
        total.append(_weighted_norm(ctx, blocks.sum(axis=0), t))
        local.append(float(np.max(norms)))
        hs.append(ctx.times[i_end] * 2.0**-n)
    hs = np.array(hs)
    fit = lambda y: float(np.polyfit(np.log(hs), np.log(y), 1)[0])
    return {"levels": list(levels), "h": hs.tolist(), "total": total, "local": local,
            "total_exponent": fit(total), "local_exponent": fit(local)}
