"""Heat kernel (closed-form integral and spectral synthesis), heat semigroup,
Green kernels and the smoothing / time-regularity checkers.

Time conventions.  The closed-form kernel p_t below is the kernel of
e^{t Delta / 2}; on the Fourier side it is the multiplier
e^{-2 t |lam| (2|m| + n)}.  ``generator_scale`` s selects the semigroup
e^{s t Delta}, with multiplier e^{-4 s t |lam| (2|m| + n)}: s = 1/2 is the
PAM semigroup, s = 1 is the e^{t Delta} convention of the analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .group_core import homogeneous_norm, inverse, multiply
from .spectral import (FrequencyGrid, SpatialField, SpatialGrid, SpectralField,
                       forward_transform, inverse_transform, laplacian_multiplier)

PAM_SCALE = 0.5
ANALYSIS_SCALE = 1.0


@dataclass(frozen=True)
class HeatParams:
    t: float
    route: str = "spectral"
    generator_scale: float = PAM_SCALE

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if self.route not in ("spectral", "gaveau"):
            raise ValueError("route must be 'spectral' or 'gaveau'")
        if self.generator_scale <= 0:
            raise ValueError("generator_scale must be positive")


def _vz(q) -> tuple[np.ndarray, np.ndarray, int]:
    q = np.asarray(q, dtype=float)
    n = (q.shape[-1] - 1) // 2
    return np.sum(q[..., :-1] ** 2, axis=-1), q[..., -1], n


def _envelope(lam: np.ndarray, v2: np.ndarray, t: float, n: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    small = lam < 1e-8
    ls = np.where(small, 1.0, lam)
    # 2l / sinh 2l written with e^{-2l} to avoid overflow at large l
    ratio = np.where(small, 1.0, 4 * ls * np.exp(-2 * ls) / -np.expm1(-4 * ls))
    lcoth = np.where(small, 0.5, ls / np.tanh(2 * ls))
    return ratio**n * np.exp(-lcoth * v2 / t)


def gaveau_kernel(t: float, q, method: str = "fixed", rtol: float = 1e-12) -> np.ndarray:
    """p_t(q) = (2 pi t)^{-(n+1)} int e^{i lam z/t} (2lam/sinh 2lam)^n e^{-(lam/t)|v|^2 coth 2lam} dlam.

    ``method="quad"`` uses adaptive QUADPACK (Fourier weight for z != 0);
    ``method="fixed"`` uses composite Gauss-Legendre panels sized to the
    oscillation and is vectorized over points.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    v2, z, n = _vz(q)
    pref = 2.0 * (2 * math.pi * t) ** (-(n + 1))
    if method == "quad":
        flat_v, flat_z = np.ravel(v2), np.ravel(z)
        out = np.empty(flat_v.shape)
        for i, (a, c) in enumerate(zip(flat_v, flat_z)):
            f = lambda lam, a=a: _envelope(lam, a, t, n)
            if c == 0:
                val = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=rtol, limit=400)[0]
            else:
                val = integrate.quad(f, 0, np.inf, weight="cos", wvar=abs(c) / t, limlst=200)[0]
            out[i] = pref * val
        return out.reshape(np.shape(v2))
    if method != "fixed":
        raise ValueError("method must be 'fixed' or 'quad'")
    cut = 20.0 + 3.0 * n
    zmax = float(np.max(np.abs(z), initial=0.0)) / t
    panels = max(8, int(math.ceil(cut * zmax / 4.0)) + 8)
    x, w = leggauss(24)
    e = np.linspace(0.0, cut, panels + 1)
    lam = (0.5 * (e[1:, None] - e[:-1, None]) * x + 0.5 * (e[1:, None] + e[:-1, None])).ravel()
    wl = (0.5 * (e[1:, None] - e[:-1, None]) * w).ravel()
    fv, fz = np.ravel(v2), np.ravel(z)
    out = np.empty(fv.shape)
    step = max(1, int(2e6 // lam.size))
    for a in range(0, fv.size, step):
        sl = slice(a, a + step)
        env = _envelope(lam[None, :], fv[sl, None], t, n)
        out[sl] = pref * np.sum(wl * env * np.cos(lam[None, :] * fz[sl, None] / t), axis=1)
    return out.reshape(np.shape(v2))


def heat_kernel(t: float, q, generator_scale: float = PAM_SCALE, method: str = "fixed") -> np.ndarray:
    """Kernel of e^{s t Delta}: the closed-form kernel at time 2 s t."""
    return gaveau_kernel(2.0 * generator_scale * t, q, method=method)


def heat_multiplier(grid: FrequencyGrid, t: float, generator_scale: float = PAM_SCALE) -> SpectralField:
    """Diagonal field e^{-4 s t |lam| (2|m| + n)}."""
    return SpectralField.from_diagonal(grid, np.exp(-4.0 * generator_scale * t * grid.gauge))


def spectral_heat_kernel(t: float, points, grid: FrequencyGrid,
                         generator_scale: float = PAM_SCALE) -> np.ndarray:
    """Heat kernel from the inversion formula applied to the heat multiplier.

    The sum over m is done in closed form with the Laguerre generating
    function sum_m w^m L_m(u) = e^{-uw/(1-w)} / (1-w), giving per lambda
    exp(-|lam||v|^2 coth a) / (2 sinh a)^n with a = 4 s t |lam|; the lambda
    integral uses the grid quadrature.
    """
    v2, z, n = _vz(points)
    if n != grid.n:
        raise ValueError("dimension mismatch")
    a = 4.0 * generator_scale * t * np.abs(grid.lam)
    lam = np.abs(grid.lam)
    fv, fz = np.ravel(v2), np.ravel(z)
    vals = np.exp(-lam[None, :] * fv[:, None] / np.tanh(a)[None, :]) / (2 * np.sinh(a)[None, :]) ** n
    out = np.sum(grid.weights * vals * np.cos(grid.lam[None, :] * fz[:, None]), axis=1)
    return out.reshape(np.shape(v2))


def semigroup_spectral(F: SpectralField, t: float, generator_scale: float = PAM_SCALE) -> SpectralField:
    mult = np.exp(-4.0 * generator_scale * t * F.grid.gauge)
    return SpectralField(F.grid, F.coeff * mult[None, :, :], F.diagonal)


def _heat_rule(t: float, n: int, generator_scale: float, nodes_v: int = 32,
               nodes_z: int = 128) -> tuple[np.ndarray, np.ndarray]:
    # the z-marginal decays like exp(-pi |z| / (4 t)), hence the long z range
    tt = 2.0 * generator_scale * t
    R, Z = 6.5 * math.sqrt(tt), 30.0 * tt
    xv, wv = leggauss(nodes_v)
    xz, wz = leggauss(nodes_z)
    axes = [R * xv] * (2 * n) + [Z * xz]
    wts = [R * wv] * (2 * n) + [Z * wz]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 * n + 1)
    w = np.ones(pts.shape[0])
    for k, wk in enumerate(np.meshgrid(*wts, indexing="ij")):
        w = w * wk.ravel()
    # the kernel depends on (|v|^2, |z|) only: evaluate on the distinct pairs
    v2 = np.round(np.sum(pts[:, :-1] ** 2, axis=1), 14)
    uv, iv = np.unique(v2, return_inverse=True)
    uz, iz = np.unique(np.round(np.abs(pts[:, -1]), 14), return_inverse=True)
    q = np.zeros((uv.size, uz.size, 2 * n + 1))
    q[..., 0] = np.sqrt(uv)[:, None]
    q[..., -1] = uz[None, :]
    ker = gaveau_kernel(tt, q)
    return pts, w * ker[iv, iz]


def heat_convolve_points(fn: Callable[[np.ndarray], np.ndarray], t: float, points,
                         n: int = 1, generator_scale: float = PAM_SCALE, nodes_v: int = 32,
                         nodes_z: int = 128) -> np.ndarray:
    """(f * p)(p0) = int f(p0 r^{-1}) p(r) dr for a callable f, by tensor Gauss-Legendre in r.

    The rule covers |v| <= 6.5 sqrt(2st) and |z| <= 60 s t; raise the node
    counts when f oscillates on that range.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2 * n + 1)
    if t == 0:
        return np.asarray(fn(flat)).reshape(pts.shape[:-1])
    r, w = _heat_rule(t, n, generator_scale, nodes_v, nodes_z)
    rinv = inverse(r)
    out = np.empty(flat.shape[0])
    for i, p0 in enumerate(flat):
        out[i] = np.dot(w, fn(multiply(p0[None, :], rinv)))
    return out.reshape(pts.shape[:-1])


def semigroup_apply(f, t: float, route: str = "spectral", grid: FrequencyGrid | None = None,
                    generator_scale: float = PAM_SCALE, target: SpatialGrid | None = None) -> SpatialField:
    """Apply e^{s t Delta}.

    route="spectral": f is a SpatialField; multiply its transform and invert.
    route="gaveau": convolve with the closed-form kernel; f is either a
    callable (evaluated exactly) with ``target`` giving the output grid, or
    a SpatialField (direct grid convolution, small grids only).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if route == "spectral":
        if not isinstance(f, SpatialField):
            raise TypeError("spectral route needs a SpatialField")
        if t == 0:
            return f
        g = grid or FrequencyGrid.for_spatial(f.grid)
        return inverse_transform(semigroup_spectral(forward_transform(f, g), t, generator_scale), f.grid)
    if route != "gaveau":
        raise ValueError("route must be 'spectral' or 'gaveau'")
    if callable(f) and not isinstance(f, SpatialField):
        if target is None:
            raise ValueError("callable input needs a target grid")
        return SpatialField(target, heat_convolve_points(f, t, target.points(), target.n, generator_scale))
    sg = f.grid
    if t == 0:
        return f
    pts = sg.points().reshape(-1, 2 * sg.n + 1)
    if pts.shape[0] > 20000:
        raise ValueError("direct grid convolution is limited to small grids")
    out = np.empty(pts.shape[0])
    vals = f.values.ravel()
    for i, p0 in enumerate(pts):
        ker = heat_kernel(t, multiply(inverse(pts), p0[None, :]), generator_scale)
        out[i] = np.dot(ker, vals) * sg.cell_volume
    return SpatialField(sg, out.reshape(sg.shape))


def green_kernel(alpha: float, p, q, generator_scale: float = ANALYSIS_SCALE,
                 nodes: int = 160) -> np.ndarray:
    """G_alpha(p, q) = Gamma(alpha)^{-1} int_0^inf t^{alpha-1} k_t(q^{-1} p) dt.

    k_t is the kernel of e^{s t Delta}; with the default s = 1 this is the
    kernel of (-Delta)^{-alpha}.  The t-integral is split at
    t* = |q^{-1}p|_h^2 and mapped by t = t* e^u; both halves use
    Gauss-Legendre in u.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = (p.shape[-1] - 1) // 2
    if not 0 < alpha < n + 1:
        raise ValueError(f"alpha must lie in (0, {n + 1})")
    r = multiply(inverse(q), p)
    rr = np.atleast_2d(np.broadcast_to(r, np.broadcast_shapes(p.shape, q.shape))).reshape(-1, 2 * n + 1)
    ts = homogeneous_norm(rr) ** 2
    if np.any(ts == 0):
        raise ValueError("green kernel is singular at p = q")
    # u in [-U1, 0] and [0, U2]; below t* the kernel carries exp(-c e^u), so
    # a short window suffices and keeps z/t (hence the lambda panel count) bounded
    U1 = min(40.0 / alpha, 6.0)
    U2 = 40.0 / (n + 1 - alpha)
    xg, wg = leggauss(nodes)
    out = np.empty(rr.shape[0])
    for i, (pt, tstar) in enumerate(zip(rr, ts)):
        total = 0.0
        for lo, hi in ((-U1, 0.0), (0.0, U2)):
            # geometric sub-panels keep the integrand well sampled
            e = np.linspace(lo, hi, 9)
            u = (0.5 * (e[1:, None] - e[:-1, None]) * xg + 0.5 * (e[1:, None] + e[:-1, None])).ravel()
            du = (0.5 * (e[1:, None] - e[:-1, None]) * wg).ravel()
            tt = tstar * np.exp(u)
            # p_t(q) = t^{-(n+1)} p_1(delta_{1/sqrt t} q), one vectorized call per half
            T = 2.0 * generator_scale * tt
            scaled = np.repeat(pt[None, :], tt.size, axis=0)
            scaled[:, :-1] /= np.sqrt(T)[:, None]
            scaled[:, -1] /= T
            k = T ** (-(n + 1)) * gaveau_kernel(1.0, scaled)
            total += np.sum(du * tt**alpha * k)
        out[i] = total / gamma_fn(alpha)
    return out.reshape(np.broadcast_shapes(p.shape, q.shape)[:-1])


def green_kernel_lambda(alpha: float, p, q, generator_scale: float = ANALYSIS_SCALE) -> np.ndarray:
    """Independent route: the t-integral done analytically inside the lambda integral.

    G = Gamma(n+1-alpha) / (Gamma(alpha) (2 pi)^{n+1}) (2s)^{-alpha}
        int (2lam/sinh 2lam)^n (lam |v|^2 coth 2lam - i lam z)^{-(n+1-alpha)} dlam.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = (p.shape[-1] - 1) // 2
    r = np.atleast_2d(multiply(inverse(q), p)).reshape(-1, 2 * n + 1)
    v2 = np.sum(r[:, :-1] ** 2, axis=1)
    z = r[:, -1]
    beta = n + 1 - alpha
    if n == 1 and alpha == 1:
        # beta = 1: the lambda integrand loses its small-lambda mass as v -> 0,
        # so use the closed-form fundamental solution instead
        return (1.0 / (8 * math.pi * generator_scale) / np.sqrt(v2**2 + z**2)).reshape(
            np.broadcast_shapes(p.shape, q.shape)[:-1])
    c = gamma_fn(beta) / (gamma_fn(alpha) * (2 * math.pi) ** (n + 1)) * (2 * generator_scale) ** (-alpha)
    out = np.empty(r.shape[0])
    for i in range(r.shape[0]):
        def f(lam: float, i=i) -> float:
            if lam == 0:
                return 0.0
            rat = 2 * lam / math.sinh(2 * lam) if lam > 1e-8 else 1.0
            base = complex(lam * v2[i] / math.tanh(2 * lam) if lam > 1e-8 else 0.5 * v2[i], -lam * z[i])
            return 2.0 * (rat**n * base ** (-beta)).real
        out[i] = c * integrate.quad(f, 0, 60, limit=400, epsabs=0, epsrel=1e-11)[0]
    return out.reshape(np.broadcast_shapes(p.shape, q.shape)[:-1])


def green_spectral(grid: FrequencyGrid, sgrid: SpatialGrid, alpha: float) -> SpatialField:
    """Spectral route for G_alpha(., e): inverse transform of (4|lam|(2|m|+n))^{-alpha} on the diagonal."""
    from .spectral import dirac
    return inverse_transform(laplacian_multiplier(dirac(grid), -alpha), sgrid)


# ---------------------------------------------------------------------------
# smoothing checkers


def smoothing_check(f: SpatialField, kappa: float, kappa_p: float, ts, besov_norm_fn,
                    grid: FrequencyGrid, generator_scale: float = PAM_SCALE) -> np.ndarray:
    """Rows (t, t^{(kappa'-kappa)/2} ||P_t f||_{kappa'} / ||f||_kappa).

    ``besov_norm_fn(F_hat, gamma)`` computes the Besov norm of a spectral
    field at regularity gamma; the caller fixes weights and exponents.
    """
    F = forward_transform(f, grid)
    base = besov_norm_fn(F, kappa)
    rows = []
    for t in ts:
        val = besov_norm_fn(semigroup_spectral(F, t, generator_scale), kappa_p)
        rows.append((t, t ** ((kappa_p - kappa) / 2) * val / base))
    return np.array(rows)


def time_regularity_check(f: SpatialField, kappa: float, gam: float, ts, besov_norm_fn,
                          grid: FrequencyGrid, generator_scale: float = PAM_SCALE) -> np.ndarray:
    """Rows (t, ||(Id - P_t) f||_{kappa - 2 gamma} / (t^gamma ||f||_kappa))."""
    F = forward_transform(f, grid)
    base = besov_norm_fn(F, kappa)
    rows = []
    for t in ts:
        d = F - semigroup_spectral(F, t, generator_scale)
        rows.append((t, besov_norm_fn(d, kappa - 2 * gam) / (t**gam * base)))
    return np.array(rows)
