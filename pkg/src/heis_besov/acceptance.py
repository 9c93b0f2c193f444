"""The acceptance suite: twelve property checks with derived oracles.

Each check returns a CheckResult; ``run_suite`` runs a selection and writes
nothing itself, so the CLI and the tests share one implementation.
"""
from __future__ import annotations

import hashlib
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from . import heat_flow, littlewood_paley as lp, paraproduct as pp, parallel, stochastics as st
from . import pam_solver as pam
from .group_core import Weight
from .serialization import canonical_json, to_hbsf
from .spectral import (FrequencyGrid, SpatialField, SpatialGrid, SpectralField, forward_transform,
                       inverse_transform, l2_norm_squared, plancherel_norm)

# (a, b, omega, centre, phase): exp(-a |v - c_v|^2 - b (z - c_z)^2) cos(omega (z - c_z) + phase)
PROFILES = [
    (2.0, 0.5, 4.0, (0.0, 0.0, 0.0), 0.0),
    (1.5, 0.5, 3.0, (0.3, -0.2, 0.1), 0.0),
    (2.5, 0.7, 5.0, (-0.2, 0.2, 0.0), 0.0),
    (2.0, 0.6, 3.5, (0.2, 0.3, -0.3), 0.7),
    (3.0, 0.6, 4.5, (0.0, -0.3, 0.2), 1.3),
]


def gabor(sgrid: SpatialGrid, a: float, b: float, omega: float, centre=(0.0, 0.0, 0.0),
          phase: float = 0.0) -> SpatialField:
    P = sgrid.points()
    x, y, z = P[..., 0] - centre[0], P[..., 1] - centre[1], P[..., 2] - centre[2]
    return SpatialField(sgrid, np.exp(-a * (x * x + y * y) - b * z * z) * np.cos(omega * z + phase))


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": bool(self.passed), "metrics": self.metrics}

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}"


@dataclass(frozen=True)
class SuiteConfig:
    """Desk-scale defaults; ``quick`` shrinks Monte-Carlo sample counts only."""

    L: float = 4.0
    N: int = 64
    M: int = 32
    K_max: int = 6
    seed: int = 2024
    mc_samples: int = 10_000
    variance_samples: int = 1000
    holder_paths: int = 6


class _Desk:
    """Shared desk-scale grids and transforms (built lazily)."""

    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self.sgrid = SpatialGrid(1, cfg.L, cfg.L, cfg.N, cfg.N)
        self.fgrid = FrequencyGrid.for_spatial(self.sgrid, cfg.M, K_max=cfg.K_max)
        self._fields: list | None = None

    @property
    def fields(self) -> list[tuple[SpatialField, SpectralField]]:
        if self._fields is None:
            out = []
            for a, b, w, c, ph in PROFILES:
                f = gabor(self.sgrid, a, b, w, c, ph)
                out.append((f, forward_transform(f, self.fgrid, warn=False)))
            self._fields = out
        return self._fields

    @property
    def pou(self) -> lp.PartitionOfUnity:
        return lp.build_partition(self.fgrid, self.cfg.K_max, self.sgrid)


def check_roundtrip(d: _Desk) -> CheckResult:
    errs = []
    for f, F in d.fields:
        g = inverse_transform(F, d.sgrid)
        errs.append(float(np.max(np.abs(g.values - f.values)) / np.max(np.abs(f.values))))
    return CheckResult(1, "Fourier roundtrip (5 Gaussian wave packets, sup-rel <= 1e-3)",
                       max(errs) <= 1e-3, {"errors": errs, "tolerance": 1e-3,
                                           "lambda_nodes": d.fgrid.n_lam, "M": d.cfg.M})


def check_plancherel(d: _Desk) -> CheckResult:
    errs = []
    for f, F in d.fields:
        lhs = l2_norm_squared(f)
        errs.append(abs(plancherel_norm(F) - lhs) / lhs)
    return CheckResult(2, "Plancherel identity (rel <= 1e-4)", max(errs) <= 1e-4,
                       {"errors": errs, "tolerance": 1e-4})


def check_heat(seed: int) -> CheckResult:
    grid = FrequencyGrid.build(1, 8, 6, lam_min=2.0**-20, lam_max=128.0, nodes_per_panel=8)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-1.5, 1.5, 20), rng.uniform(-1.5, 1.5, 20), rng.uniform(-2, 2, 20)])
    errs = {}
    for t in (0.25, 0.5, 1.0):
        a = heat_flow.gaveau_kernel(t, pts)
        # spectral kernel of e^{s t' Delta} with 2 s t' = t
        b = heat_flow.spectral_heat_kernel(t, pts, grid, generator_scale=0.5)
        errs[t] = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    closed = {}
    for t in (0.1, 0.5, 1.0):
        v = float(heat_flow.gaveau_kernel(t, np.zeros(3), method="quad"))
        closed[t] = abs(v - 1 / (16 * t * t)) * 16 * t * t
    ok = max(errs.values()) <= 1e-4 and max(closed.values()) <= 1e-6
    return CheckResult(3, "heat kernel: integral form vs spectral synthesis (<= 1e-4), p_t(e) = 1/(16t^2) (<= 1e-6)",
                       ok, {"synthesis_errors": errs, "identity_errors": closed, "lambda_nodes": grid.n_lam})


def check_partition(d: _Desk) -> CheckResult:
    pou = d.pou
    res = pou.resolved(d.sgrid)
    s = pou.phi.sum(axis=0)
    sum_err = float(np.max(np.abs(s[res] - 1.0)))
    f, F = d.fields[0]
    blocks = lp.spatial_blocks(F, pou, d.sgrid, real=True)
    rec = float(np.max(np.abs(blocks.total().values - f.values)) / np.max(np.abs(f.values)))
    return CheckResult(4, "partition of unity (sum err <= 1e-12, block reconstruction <= 1e-3)",
                       sum_err <= 1e-12 and rec <= 1e-3, {"sum_error": sum_err, "reconstruction_error": rec})


def check_bernstein(d: _Desk) -> CheckResult:
    g = d.fgrid.gauge
    taus = [1, 2, 4, 8, 16]
    fields = {tau: SpectralField.from_diagonal(d.fgrid, lp.chi(2.6 * g / tau)) for tau in taus}
    weights = {"exponential": Weight.exponential(0.5, 0.5), "polynomial": Weight.polynomial(1.0, 1.0)}
    tab = lp.bernstein_table(fields, [0, 1, 2], [(math.inf, 2.0), (4.0, 2.0)], weights, d.sgrid)
    spread = {f"{k[0]} alpha={k[1]} beta={k[2]} k={k[3]}": max(v) / min(v) for k, v in tab.items()}
    return CheckResult(5, "Bernstein ratio tables (max/min over tau <= 4)", max(spread.values()) <= 4.0,
                       {"spread": spread, "taus": taus,
                        "ratios": {f"{k[0]} alpha={k[1]} beta={k[2]} k={k[3]}": v for k, v in tab.items()}})


def check_smoothing(d: _Desk) -> CheckResult:
    pou = d.pou
    ts = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
    s = heat_flow.PAM_SCALE

    def norm(F, gam):
        return lp.besov_norm_l2(F, gam, pou, sgrid=d.sgrid)

    out, ok = {}, True
    for kap, kap_p in ((0.0, 0.5), (0.0, 1.0)):
        f = lp.saturated_field(pou, kap, d.sgrid)
        base = norm(f, kap)
        r = [t ** ((kap_p - kap) / 2) * norm(heat_flow.semigroup_spectral(f, t, s), kap_p) / base for t in ts]
        out[f"smoothing {kap}->{kap_p}"] = max(r) / min(r)
    for gam in (0.25, 0.5):
        kap = 0.5
        f = lp.saturated_field(pou, kap, d.sgrid)
        base = norm(f, kap)
        r = [norm(f - heat_flow.semigroup_spectral(f, t, s), kap - 2 * gam) / (t**gam * base) for t in ts]
        out[f"time regularity gamma={gam}"] = max(r) / min(r)
    ok = max(out.values()) <= 8.0
    return CheckResult(6, "heat smoothing and time regularity (max/min <= 8 over t in [1e-2, 1])", ok,
                       {"spread": out, "ts": ts})


def check_paraproduct(seed: int) -> CheckResult:
    sg8 = SpatialGrid(1, 2.0, 2.0, 8, 8)
    fg8 = FrequencyGrid.for_spatial(sg8, 4, K_max=1)
    pou8 = lp.build_partition(fg8, 1, sg8)
    rng = np.random.default_rng(seed)
    a = SpatialField(sg8, rng.standard_normal(sg8.shape))
    b = SpatialField(sg8, rng.standard_normal(sg8.shape))
    r = pp.decompose(a, b, pou8)
    brute = np.array([[[a.values[i, j, k] * b.values[i, j, k] for k in range(8)] for j in range(8)]
                      for i in range(8)])
    ident = float(np.max(np.abs(r.total().values - brute)))
    sg = SpatialGrid(1, 4.0, 4.0, 32, 32)
    fg = FrequencyGrid.for_spatial(sg, 16, K_max=4)
    pou = lp.build_partition(fg, 4, sg)
    f = gabor(sg, 1.5, 0.5, 3.0)
    g = gabor(sg, 1.0, 0.5, 1.5, (0.3, 0.0, 0.2), 0.5)
    rows = pp.support_check(f, g, pou, rel_tol=1e-2)
    worst = max(x["outside_fraction"] for x in rows)
    return CheckResult(7, "paraproduct identity (8^3, <= 1e-10) and support rule (outside energy <= 1e-2)",
                       ident <= 1e-10 and all(x["ok"] for x in rows),
                       {"identity_error": ident, "worst_outside_fraction": worst, "rows": rows})


def check_noise_covariance(cfg: SuiteConfig) -> CheckResult:
    sg = SpatialGrid(1, 4.0, 4.0, 32, 32)
    fg = FrequencyGrid.for_spatial(sg, 8, K_max=4)
    phis = [gabor(sg, 2.0, 0.5, 3.0), gabor(sg, 2.0, 0.5, 3.0, (0.3, 0.0, 0.0)),
            gabor(sg, 1.5, 0.5, 2.5, (0.0, 0.2, 0.3), 0.4)]
    Ph = [forward_transform(p, fg, warn=False) for p in phis]
    times = (0.0, 0.5, 1.0)
    configs = [(0, 0, 1.0, 1.0), (0, 1, 1.0, 0.5), (1, 2, 0.5, 0.5)]
    N = cfg.mc_samples
    vals = np.empty((N, len(Ph), len(times)))
    for i in range(N):
        path = st.sample_noise(st.NoiseParams(0.5, 0.75, 1.0, cfg.seed + i, times), fg)
        for a, P in enumerate(Ph):
            for ti in (1, 2):
                vals[i, a, ti] = st.pairing(path.values[ti], P)
    rows = []
    for a, b, t, s in configs:
        prod = vals[:, a, times.index(t)] * vals[:, b, times.index(s)]
        mean, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(N))
        oracle = st.covariance_oracle(Ph[a], Ph[b], 0.75, 0.5, 1.0, t, s)
        rows.append({"phi": a, "psi": b, "t": t, "s": s, "mc": mean, "se": se, "oracle": oracle,
                     "z": abs(mean - oracle) / se})
    K = 6
    vg = FrequencyGrid.build(1, 16, K, lam_min=2.0**-8, lam_max=2.6 * 2**K)
    vpou = lp.build_partition(vg, K)
    mc, se = st.block_variance_mc(st.NoiseParams(0.5, 0.75, 1.0, cfg.seed, times), vg, vpou, 0.5, 1.0,
                                  cfg.variance_samples)
    ks = np.arange(0, K)
    slope = st.fit_exponent(ks, mc[ks + 1])
    target = 1 + 1 - 2 * 0.75
    ok = all(r["z"] <= 3 for r in rows) and abs(slope - target) <= 0.15
    return CheckResult(8, "noise covariance (MC within 3 SE, N=1e4) and block-variance exponent (+-0.15)", ok,
                       {"configs": rows, "samples": N, "variance_slope": slope, "target_slope": target,
                        "block_variance": mc.tolist(), "block_variance_se": se.tolist(),
                        "block_variance_exact": st.block_variance_exact(vg, vpou, 0.75, 0.5, 1.0, 0.5).tolist()})


def check_noise_holder(cfg: SuiteConfig) -> CheckResult:
    sg = SpatialGrid(1, 4.0, 4.0, 32, 32)
    fg = FrequencyGrid.for_spatial(sg, 16, K_max=5)
    pou = lp.build_partition(fg, 5, sg)
    zeta, alpha = 0.5, 0.75
    paths = [st.sample_noise(st.NoiseParams.dyadic(zeta, alpha, 1.0, 6, seed=cfg.seed + 7 + i), fg)
             for i in range(cfg.holder_paths)]
    gaps = [2.0**-i for i in range(7)]
    slope, norms = st.holder_fit(paths, pou, sg, 1.0, 0.5, Weight.polynomial(4.0, form="decay"), gaps)
    thr = 1 - zeta / 2 - 0.05
    return CheckResult(9, "noise Hoelder exponent (>= 1 - zeta/2 - 0.05)", slope >= thr,
                       {"slope": slope, "threshold": thr, "gaps": gaps, "norms": norms.tolist()})


def _pam_setup():
    sg = SpatialGrid(1, 3.0, 3.0, 16, 16)
    fg = FrequencyGrid.for_spatial(sg, 6, K_max=3)
    pou = lp.build_partition(fg, 3, sg)
    P = sg.points()
    u0 = SpatialField(sg, np.exp(-(P[..., 0] ** 2 + P[..., 1] ** 2) - P[..., 2] ** 2 / 2))
    return sg, fg, pou, u0


def check_pam(cfg: SuiteConfig) -> CheckResult:
    sg, fg, pou, u0 = _pam_setup()
    U0 = forward_transform(u0, fg, warn=False)
    m = {}
    c0 = pam.SolverConfig(horizon=0.5, n_max=4, product="pointwise")
    prm = st.NoiseParams.dyadic(0.5, 0.75, 0.5, 4, seed=cfg.seed)
    zero = st.NoisePath(prm, fg, np.zeros((len(prm.times), fg.n_m, fg.n_m, fg.n_lam), dtype=complex))
    s0 = pam.picard_solve(u0, zero, pou, c0)
    ref = [inverse_transform(heat_flow.semigroup_spectral(U0, t, c0.generator_scale), sg, real=True)
           for t in c0.times]
    m["zero_noise_error"] = max(float(np.max(np.abs(a.values - b.values))) for a, b in
                                zip(s0.spatial[1:], ref[1:])) / float(np.max(np.abs(u0.values)))
    c1 = pam.SolverConfig(horizon=0.5, n_max=6, product="pointwise")
    ts = c1.times
    w_fn = lambda t: 0.3 * t**2 + 0.2 * np.sin(3 * t)
    s1 = pam.picard_solve(u0, pam.ScalarSignal(ts, w_fn(ts)), pou, c1)
    # scalar oracle: c' = c w'(t), c(0) = 1, solved independently of the closed form
    ode = solve_ivp(lambda t, c: c * (0.6 * t + 0.6 * np.cos(3 * t)), (0, ts[-1]), [1.0], t_eval=ts,
                    rtol=1e-12, atol=1e-14)
    err = 0.0
    for i, t in enumerate(ts):
        refc = ode.y[0, i] * heat_flow.semigroup_spectral(U0, t, c1.generator_scale).coeff
        err = max(err, float(np.max(np.abs(s1.fields[i].coeff - refc)) / np.max(np.abs(refc))))
    m["constant_noise_error"] = err
    c2 = pam.SolverConfig(horizon=0.5, n_max=4)
    path = st.sample_noise(st.NoiseParams.dyadic(0.5, 0.75, 0.5, 4, seed=cfg.seed + 1), fg)
    s2 = pam.picard_solve(u0, path, pou, c2)
    first = s2.factors[0]
    m["contraction_factor"] = max(first) if first else 0.0
    m["contraction_factors"] = first
    m["sub_horizon"] = s2.tau
    c3 = pam.SolverConfig(horizon=0.5, n_max=7, product="pointwise")
    path3 = st.sample_noise(st.NoiseParams.dyadic(0.5, 0.75, 0.5, 7, seed=cfg.seed + 2), fg)
    lev = pam.young_level_differences(lambda i: u0, path3, 0.5, range(3, 8), sg, pou, c3)
    m["young_levels"] = lev
    ok = (m["zero_noise_error"] <= 1e-8 and err <= 1e-3 and m["contraction_factor"] < 0.5
          and lev["local_exponent"] >= 1.0)
    return CheckResult(10, "PAM oracles (zero noise, constant noise, contraction < 1/2, Young levels)", ok, m)


def admissibility_lattice() -> list[tuple[Fraction, Fraction]]:
    zetas = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)]
    alphas = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1), Fraction(5, 4)]
    return [(z, a) for z in zetas for a in alphas]


def check_admissibility() -> CheckResult:
    rows, ok = [], True
    for z, a in admissibility_lattice():
        truth = (0 < z < 1) and (Fraction(1) - (1 - z) < a < Fraction(1))
        got = st.admissible(float(z), float(a), 1)
        ok &= got == truth
        rows.append({"zeta": float(z), "alpha": float(a), "expected": truth, "got": got})
    return CheckResult(11, "admissibility truth table (20-point lattice)", ok, {"rows": rows})


def determinism_artifacts(threads: int, seed: int) -> dict[str, str]:
    """SHA-256 of probe artifacts computed with a given worker count."""
    prev = parallel._threads
    parallel.set_threads(threads)
    try:
        sg, fg, pou, u0 = _pam_setup()
        path = st.sample_noise(st.NoiseParams.dyadic(0.5, 0.75, 0.5, 3, seed=seed), fg)
        F = forward_transform(u0, fg, warn=False)
        state = pam.picard_solve(u0, path, pou, pam.SolverConfig(horizon=0.5, n_max=3, product="pointwise"))
        arts = {
            "noise.hbsf": to_hbsf(path.values, {"seed": seed}),
            "transform.hbsf": to_hbsf(F.coeff),
            "inverse.hbsf": to_hbsf(inverse_transform(F, sg).values),
            "solution.hbsf": to_hbsf(state.spatial[-1].values),
            "log.json": canonical_json(state.log()).encode(),
        }
    finally:
        parallel.set_threads(prev)
    return {k: hashlib.sha256(v).hexdigest() for k, v in arts.items()}


def check_determinism(seed: int, threads=(1, 4)) -> CheckResult:
    a = determinism_artifacts(threads[0], seed)
    b = determinism_artifacts(threads[1], seed)
    return CheckResult(12, f"determinism across thread counts {threads}", a == b,
                       {"hashes": a, "mismatched": sorted(k for k in a if a[k] != b[k])})


CHECKS = {
    1: lambda d, c: check_roundtrip(d),
    2: lambda d, c: check_plancherel(d),
    3: lambda d, c: check_heat(c.seed),
    4: lambda d, c: check_partition(d),
    5: lambda d, c: check_bernstein(d),
    6: lambda d, c: check_smoothing(d),
    7: lambda d, c: check_paraproduct(c.seed),
    8: lambda d, c: check_noise_covariance(c),
    9: lambda d, c: check_noise_holder(c),
    10: lambda d, c: check_pam(c),
    11: lambda d, c: check_admissibility(),
    12: lambda d, c: check_determinism(c.seed),
}


def run_suite(cfg: SuiteConfig | None = None, ids=None, log=None) -> list[CheckResult]:
    cfg = cfg or SuiteConfig()
    desk = _Desk(cfg)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        warnings.simplefilter("ignore", UserWarning)
        for i in ids or sorted(CHECKS):
            t0 = time.perf_counter()
            r = CHECKS[i](desk, cfg)
            if log is not None:
                log(f"{r.line()}  ({time.perf_counter() - t0:.1f} s)")
            out.append(r)
    return out


def report(results: list[CheckResult], cfg: SuiteConfig) -> dict:
    return {"passed": all(r.passed for r in results), "config": cfg.__dict__,
            "checks": [r.to_dict() for r in results]}
