"""Hermite functions, Laguerre polynomials and the Fourier kernels K_{m,l,lambda}.

Hermite functions come from the normalized three-term recurrence
    Phi_{k+1} = sqrt(2/(k+1)) x Phi_k - sqrt(k/(k+1)) Phi_{k-1},
which is C^k Phi_0 with C = -d/dx + x and avoids factorials entirely.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_hermite


def _as_multi(k) -> tuple[int, ...]:
    if np.isscalar(k):
        return (int(k),)
    return tuple(int(v) for v in k)


def hermite_table(M: int, x) -> np.ndarray:
    """Phi_0..Phi_M at x (one dimension); result has shape (M+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.empty((M + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if M >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, M):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _hermite_poly_table(M: int, x: np.ndarray) -> np.ndarray:
    # normalized polynomial parts h_k with Phi_k = h_k e^{-x^2/2}
    out = np.empty((M + 1,) + x.shape)
    out[0] = np.pi**-0.25
    if M >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, M):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite(k, x, M: int | None = None) -> np.ndarray:
    """Phi_k(x) for a multi-index k; x has trailing axis n (or is scalar-like for n=1)."""
    k = _as_multi(k)
    if M is not None and sum(k) > M:
        raise ValueError(f"|k| = {sum(k)} exceeds the truncation M = {M}")
    if any(v < 0 for v in k):
        raise ValueError("Hermite index must be non-negative")
    x = np.asarray(x, dtype=float)
    if len(k) == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return hermite_table(k[0], x)[k[0]]
    if x.shape[-1] != len(k):
        raise ValueError("x trailing axis must match the multi-index length")
    val = np.ones(x.shape[:-1])
    for j, kj in enumerate(k):
        val = val * hermite_table(kj, x[..., j])[kj]
    return val


def hermite_rescaled(k, lam: float, x, M: int | None = None) -> np.ndarray:
    """Phi_k^lambda(x) = |lambda|^{n/4} Phi_k(sqrt|lambda| x)."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    k = _as_multi(k)
    a = abs(lam)
    return a ** (len(k) / 4.0) * hermite(k, np.sqrt(a) * np.asarray(x, dtype=float), M)


class HermiteBasis:
    """Rescaled Hermite functions of one variable up to degree M, cached per lambda."""

    def __init__(self, n: int, M: int):
        if n < 1 or M < 0:
            raise ValueError("need n >= 1 and M >= 0")
        self.n, self.M = n, M
        self._cache: dict[tuple[float, bytes], np.ndarray] = {}

    def table(self, lam: float, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=float)
        key = (float(lam), x.tobytes())
        if key not in self._cache:
            a = abs(lam)
            self._cache[key] = a**0.25 * hermite_table(self.M, np.sqrt(a) * x)
        return self._cache[key]


def laguerre(k: int, alpha: float, x) -> np.ndarray:
    """Generalized Laguerre polynomial L_k^alpha(x) by the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev
    cur = 1.0 + alpha - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


def laguerre_direct(k: int, alpha: int, x) -> np.ndarray:
    """L_k^alpha(x) = sum_j (-1)^j C(k+alpha, k-j) x^j / j!  (reference summation)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j in range(k + 1):
        logc = gammaln(k + alpha + 1) - gammaln(k - j + 1) - gammaln(alpha + j + 1) - gammaln(j + 1)
        total = total + (-1) ** j * np.exp(logc) * x**j
    return total


def laguerre_function_table(L: int, d: int, u) -> np.ndarray:
    """Normalized Laguerre functions for l = 0..L at fixed order d:

        sqrt(l!/(l+d)!) u^{d/2} e^{-u/2} L_l^d(u),

    which are bounded by 1 and computed without overflow.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((L + 1,) + u.shape)
    with np.errstate(divide="ignore"):
        logu = np.where(u > 0, np.log(np.where(u > 0, u, 1.0)), -np.inf)
    if d == 0:
        out[0] = np.exp(-0.5 * u)
    else:
        out[0] = np.exp(0.5 * d * logu - 0.5 * u - 0.5 * gammaln(d + 1))
    if L >= 1:
        out[1] = (1.0 + d - u) * out[0] * np.sqrt(1.0 / (1.0 + d))
    for l in range(1, L):
        a = np.sqrt((l + 1) / (l + 1 + d)) / (l + 1)
        b = (l + d) * np.sqrt((l + 1) * l / ((l + 1 + d) * (l + d))) / (l + 1)
        out[l + 1] = a * (2 * l + 1 + d - u) * out[l] - b * out[l - 1]
    return out


def kernel_radial_table(M: int, u) -> np.ndarray:
    """Signed radial parts A[m, l, ...] of the one-dimensional kernels at lambda = +-1.

    With u = 2|lambda| r^2 and theta = arg(x + i y),
        K_{m,l,lambda}(x, y) = A[m, l](u) exp(i sgn(lambda) (m - l) theta).
    """
    u = np.asarray(u, dtype=float)
    A = np.empty((M + 1, M + 1) + u.shape)
    for d in range(M + 1):
        tab = laguerre_function_table(M - d, d, u)
        idx = np.arange(M + 1 - d)
        A[idx + d, idx] = tab
        if d:
            A[idx, idx + d] = (-1) ** d * tab
    return A


def wigner_kernel(m, l, lam: float, x, y) -> np.ndarray:
    """K_{m,l,lambda}(x, y) in closed Laguerre form (product over coordinates).

    x, y carry a trailing axis of length n (it may be omitted when n = 1).
    """
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    m, l = _as_multi(m), _as_multi(l)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(m) == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x, y = x[..., None], y[..., None]
    s = np.sign(lam)
    val = np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), dtype=complex)
    for j, (mj, lj) in enumerate(zip(m, l)):
        xj, yj = x[..., j], y[..., j]
        u = 2.0 * abs(lam) * (xj * xj + yj * yj)
        d = abs(mj - lj)
        rad = laguerre_function_table(min(mj, lj), d, u)[min(mj, lj)]
        if lj > mj:
            rad = (-1) ** d * rad
        phase = np.exp(1j * s * (mj - lj) * np.arctan2(yj, xj))
        val = val * rad * phase
    return val


def wigner_kernel_quadrature(m, l, lam: float, x, y, nodes: int | None = None) -> np.ndarray:
    """K_{m,l,lambda}(x, y) from its xi-integral by Gauss-Hermite quadrature.

    After xi -> s / sqrt|lambda| the integrand is e^{-a^2} e^{-s^2} times a
    polynomial in s times e^{2 i sgn(lambda) b s}, with a = sqrt|lambda| x and
    b = sqrt|lambda| y, so Gauss-Hermite nodes are the natural rule.
    """
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    m, l = _as_multi(m), _as_multi(l)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(m) == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x, y = x[..., None], y[..., None]
    r = np.sqrt(abs(lam))
    s_sign = np.sign(lam)
    val = np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), dtype=complex)
    for j, (mj, lj) in enumerate(zip(m, l)):
        a = r * x[..., j]
        b = r * y[..., j]
        N = nodes or int(mj + lj + 40 + 6 * np.ceil(np.max(np.abs(b), initial=0.0)) ** 2)
        s, w = _gh(N)
        sa = s + a[..., None]
        sb = s - a[..., None]
        hm = _hermite_poly_table(mj, sa)[mj]
        hl = _hermite_poly_table(lj, sb)[lj]
        osc = np.exp(2j * s_sign * b[..., None] * s)
        val = val * np.exp(-a * a) * np.sum(w * hm * hl * osc, axis=-1)
    return val


@lru_cache(maxsize=32)
def _gh(N: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_hermite(N)
