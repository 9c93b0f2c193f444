"""Truncated frequency space, projective Fourier transform and spectral calculus.

Coefficients live on (m, l, lambda) with multi-indices |m|, |l| <= M and a
symmetric lambda grid.  Quadrature weights carry the Plancherel density
c_n |lambda|^n with c_n = 2^{n-1} / pi^{n+1}.

Spatial transforms are implemented for n = 1.  They exploit
K_{m,l,lambda}(x, y) = A_{m,l}(2|lambda| r^2) e^{i sgn(lambda)(m-l) theta}:
grid points are grouped into classes of equal radius, so the radial
factors are evaluated once per class and the angular factors once per grid.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .parallel import pmap
from .special_functions import kernel_radial_table


def plancherel_constant(n: int) -> float:
    return 2.0 ** (n - 1) / math.pi ** (n + 1)


def multi_indices(n: int, M: int) -> np.ndarray:
    """All m in N^n with |m| <= M, ordered by |m| then lexicographically."""
    out = [m for m in itertools.product(range(M + 1), repeat=n) if sum(m) <= M]
    out.sort(key=lambda m: (sum(m), m))
    return np.array(out, dtype=int).reshape(-1, n)


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric lambda grid on [-lam_max, -lam_min] U [lam_min, lam_max] and |m| <= M.

    Positive nodes are Gauss-Legendre points on dyadic panels
    [lam_min 2^j, lam_min 2^{j+1}], each split further so no sub-panel is
    wider than ``max_panel_width``.
    """

    n: int = 1
    M: int = 32
    lam_min: float = 2.0**-8
    lam_max: float = 2.0**8 * 8 / 3
    nodes_per_panel: int = 8
    max_panel_width: float = math.inf

    def __post_init__(self) -> None:
        if self.n < 1 or self.M < 0:
            raise ValueError("need n >= 1 and M >= 0")
        if not 0 < self.lam_min < self.lam_max:
            raise ValueError("need 0 < lam_min < lam_max")
        if self.nodes_per_panel < 1 or not self.max_panel_width > 0:
            raise ValueError("invalid panel parameters")

    @classmethod
    def build(cls, n: int = 1, M: int = 32, K_max: int = 6, lam_min: float | None = None,
              lam_max: float | None = None, nodes_per_panel: int = 8,
              max_panel_width: float = math.inf) -> "FrequencyGrid":
        lo = 2.0 ** (-K_max - 2) if lam_min is None else lam_min
        hi = 2.0 ** (K_max + 2) * 8 / 3 if lam_max is None else lam_max
        return cls(n, M, float(lo), float(hi), nodes_per_panel, float(max_panel_width))

    @cached_property
    def panel_edges(self) -> np.ndarray:
        edges = [self.lam_min]
        while edges[-1] * 2 < self.lam_max * (1 - 1e-12):
            edges.append(edges[-1] * 2)
        edges.append(self.lam_max)
        fine = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, math.ceil((b - a) / self.max_panel_width - 1e-12))
            fine.extend(a + (b - a) * np.arange(1, k + 1) / k)
        return np.array(fine)

    @cached_property
    def _positive(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = leggauss(self.nodes_per_panel)
        e = self.panel_edges
        a, b = e[:-1, None], e[1:, None]
        nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        weights = (0.5 * (b - a) * w).ravel()
        return nodes, weights

    @cached_property
    def lam(self) -> np.ndarray:
        p, _ = self._positive
        return np.concatenate([-p[::-1], p])

    @cached_property
    def dlam(self) -> np.ndarray:
        _, w = self._positive
        return np.concatenate([w[::-1], w])

    @cached_property
    def weights(self) -> np.ndarray:
        """Plancherel quadrature weights c_n |lambda|^n dlambda."""
        return plancherel_constant(self.n) * np.abs(self.lam) ** self.n * self.dlam

    @property
    def n_lam(self) -> int:
        return self.lam.size

    @property
    def n_pos(self) -> int:
        return self.lam.size // 2

    @cached_property
    def multi(self) -> np.ndarray:
        return multi_indices(self.n, self.M)

    @cached_property
    def abs_m(self) -> np.ndarray:
        return self.multi.sum(axis=1)

    @property
    def n_m(self) -> int:
        return self.multi.shape[0]

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(m): i for i, m in enumerate(self.multi)}

    @cached_property
    def shifts(self) -> tuple[np.ndarray, np.ndarray]:
        """plus[j, i] / minus[j, i]: index of m_i +- e_j, or -1 outside the truncation."""
        plus = -np.ones((self.n, self.n_m), dtype=int)
        minus = -np.ones((self.n, self.n_m), dtype=int)
        for i, m in enumerate(self.multi):
            for j in range(self.n):
                e = np.zeros(self.n, dtype=int)
                e[j] = 1
                plus[j, i] = self.index.get(tuple(m + e), -1)
                minus[j, i] = self.index.get(tuple(m - e), -1)
        return plus, minus

    @cached_property
    def gauge(self) -> np.ndarray:
        """|lambda| (2|m| + n) per multi-index m, shape (n_m, n_lam)."""
        return np.abs(self.lam)[None, :] * (2 * self.abs_m[:, None] + self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "M": self.M, "lam_min": self.lam_min, "lam_max": self.lam_max,
                "nodes_per_panel": self.nodes_per_panel,
                "max_panel_width": None if math.isinf(self.max_panel_width) else self.max_panel_width}

    @classmethod
    def for_spatial(cls, sgrid: "SpatialGrid", M: int = 32, K_max: int = 6,
                    lam_min: float | None = None, nodes_per_panel: int = 8) -> "FrequencyGrid":
        """Grid whose lambda range stops at the z-Nyquist limit of ``sgrid``.

        Panels are narrow enough that e^{i lam z} is integrated accurately
        over |z| <= Lz.
        """
        hi = min(2.0 ** (K_max + 2) * 8 / 3, math.pi / sgrid.hz)
        return cls.build(sgrid.n, M, K_max, lam_min=lam_min, lam_max=hi,
                         nodes_per_panel=nodes_per_panel, max_panel_width=5.0 / sgrid.Lz)

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyGrid":
        w = d.get("max_panel_width")
        return cls(int(d["n"]), int(d["M"]), float(d["lam_min"]), float(d["lam_max"]),
                   int(d.get("nodes_per_panel", 8)), math.inf if w is None else float(w))


@dataclass(frozen=True)
class SpatialGrid:
    """Cell-centred grid on [-L, L]^{2n} x [-Lz, Lz] with N points per horizontal axis."""

    n: int = 1
    L: float = 4.0
    Lz: float = 4.0
    N: int = 64
    Nz: int = 64

    def __post_init__(self) -> None:
        if self.L <= 0 or self.Lz <= 0 or self.N < 1 or self.Nz < 1:
            raise ValueError("grid extents and sizes must be positive")

    @property
    def h(self) -> float:
        return 2 * self.L / self.N

    @property
    def hz(self) -> float:
        return 2 * self.Lz / self.Nz

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def z(self) -> np.ndarray:
        return -self.Lz + (np.arange(self.Nz) + 0.5) * self.hz

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * (2 * self.n) + (self.Nz,)

    @property
    def cell_volume(self) -> float:
        return self.h ** (2 * self.n) * self.hz

    @property
    def horizontal_limit(self) -> float:
        """Largest resolvable |lambda|(2m+1): (pi / (2h))^2."""
        return (math.pi / (2 * self.h)) ** 2

    def points(self) -> np.ndarray:
        axes = [self.x] * (2 * self.n) + [self.z]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "Lz": self.Lz, "N": self.N, "Nz": self.Nz}

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialGrid":
        return cls(int(d.get("n", 1)), float(d["L"]), float(d["Lz"]), int(d["N"]), int(d["Nz"]))


@dataclass(frozen=True, eq=False)
class SpatialField:
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("spatial field has non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: SpatialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "SpatialField":
        return cls(grid, fn(grid.points()))

    def integral(self) -> complex | float:
        return self.values.sum() * self.grid.cell_volume

    def real(self) -> "SpatialField":
        return SpatialField(self.grid, np.real(self.values).copy())

    def __add__(self, other: "SpatialField") -> "SpatialField":
        return SpatialField(self.grid, self.values + other.values)

    def __sub__(self, other: "SpatialField") -> "SpatialField":
        return SpatialField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "SpatialField":
        if isinstance(c, SpatialField):
            return SpatialField(self.grid, self.values * c.values)
        return SpatialField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: FrequencyGrid
    coeff: np.ndarray
    diagonal: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coeff, dtype=complex)
        g = self.grid
        if c.shape != (g.n_m, g.n_m, g.n_lam):
            raise ValueError(f"coefficient shape {c.shape} does not match the frequency grid")
        if not np.all(np.isfinite(c)):
            raise ValueError("spectral field has non-finite coefficients")
        if self.diagonal:
            off = c.copy()
            idx = np.arange(g.n_m)
            off[idx, idx] = 0
            if np.any(off != 0):
                raise ValueError("diagonal field has nonzero off-diagonal entries")
        object.__setattr__(self, "coeff", c)

    @classmethod
    def zeros(cls, grid: FrequencyGrid) -> "SpectralField":
        return cls(grid, np.zeros((grid.n_m, grid.n_m, grid.n_lam), dtype=complex), True)

    @classmethod
    def from_diagonal(cls, grid: FrequencyGrid, diag: np.ndarray) -> "SpectralField":
        """diag has shape (n_m, n_lam)."""
        c = np.zeros((grid.n_m, grid.n_m, grid.n_lam), dtype=complex)
        idx = np.arange(grid.n_m)
        c[idx, idx] = diag
        return cls(grid, c, True)

    def diag(self) -> np.ndarray:
        idx = np.arange(self.grid.n_m)
        return self.coeff[idx, idx]

    def _same(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ValueError("frequency grid mismatch")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._same(other)
        return SpectralField(self.grid, self.coeff + other.coeff, self.diagonal and other.diagonal)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._same(other)
        return SpectralField(self.grid, self.coeff - other.coeff, self.diagonal and other.diagonal)

    def __mul__(self, c) -> "SpectralField":
        return SpectralField(self.grid, self.coeff * c, self.diagonal)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# transform plans (n = 1)

class TransformPlan:
    """Precomputed geometry for transforms between one spatial and one frequency grid."""

    def __init__(self, sgrid: SpatialGrid, fgrid: FrequencyGrid, cache_bytes: float = 4e8):
        if sgrid.n != 1 or fgrid.n != 1:
            raise NotImplementedError("spatial transforms are implemented for n = 1 only")
        self.sgrid, self.fgrid = sgrid, fgrid
        M = fgrid.M
        X, Y = np.meshgrid(sgrid.x, sgrid.x, indexing="ij")
        r2 = (X * X + Y * Y).ravel()
        key = np.round(r2 / (sgrid.h * sgrid.h) * 4).astype(np.int64)
        uniq, cls = np.unique(key, return_inverse=True)
        self.cls = cls
        self.r2 = np.bincount(cls, weights=r2) / np.bincount(cls)
        self.n_cls = uniq.size
        self.csum = sp.csr_matrix((np.ones(r2.size), (cls, np.arange(r2.size))),
                                  shape=(self.n_cls, r2.size))
        theta = np.arctan2(Y, X).ravel()
        d = np.arange(-M, M + 1)
        self.phase = np.exp(1j * d[:, None] * theta[None, :])  # e^{i d theta}
        lam = fgrid.lam
        self.ez_fwd = np.exp(-1j * np.outer(sgrid.z, lam)) * sgrid.hz  # (Nz, Nlam)
        self.ez_inv = np.exp(1j * np.outer(lam, sgrid.z)) * fgrid.weights[:, None]
        mx = np.maximum.outer(np.arange(M + 1), np.arange(M + 1))
        self.mask = ((np.abs(lam)[None, None, :] * (2 * mx[:, :, None] + 1) <= sgrid.horizontal_limit)
                     & (np.abs(lam) <= math.pi / sgrid.hz)[None, None, :])
        # largest m resolved at each node (-1 when none)
        lim = np.where(np.abs(lam) <= math.pi / sgrid.hz, sgrid.horizontal_limit / np.abs(lam), 0.0)
        self.m_res = np.clip(np.floor((lim - 1) / 2).astype(int), -1, M)
        sizes = (self.m_res[fgrid.n_pos:] + 1) ** 2 * self.n_cls * 8
        self._cache_ok = float(np.sum(sizes)) <= cache_bytes
        self._radial: dict[tuple[int, int], np.ndarray] = {}
        self._pair_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def radial(self, j: int, Mj: int) -> np.ndarray:
        """A[m, l, class] for m, l <= Mj at lambda node j (depends on |lambda| only)."""
        g = self.fgrid
        p = j - g.n_pos if j >= g.n_pos else g.n_pos - 1 - j
        key = (p, Mj)
        if key in self._radial:
            return self._radial[key]
        A = kernel_radial_table(Mj, 2.0 * abs(g.lam[j]) * self.r2)
        if self._cache_ok:
            self._radial[key] = A
        return A

    def _pairs(self, Mj: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if Mj in self._pair_cache:
            return self._pair_cache[Mj]
        mm, ll = np.meshgrid(np.arange(Mj + 1), np.arange(Mj + 1), indexing="ij")
        dindex = mm - ll + self.fgrid.M
        order = np.argsort(dindex.ravel(), kind="stable")
        starts = np.searchsorted(dindex.ravel()[order], np.arange(self.fgrid.M - Mj, self.fgrid.M + Mj + 1))
        self._pair_cache[Mj] = (dindex, order, starts)
        return dindex, order, starts

    def forward_node(self, gj: np.ndarray, j: int, Mj: int | None = None) -> np.ndarray:
        """Coefficients F[m, l] (m, l <= Mj) at node j from g_j(x, y) = int e^{-i lam z} f dz."""
        M = self.fgrid.M
        Mj = M if Mj is None else Mj
        sgn = np.sign(self.fgrid.lam[j])
        ph = self.phase if sgn < 0 else self.phase[::-1]  # conj(e^{i sgn d theta})
        ph = ph[M - Mj : M + Mj + 1]
        G = (self.csum @ (ph * gj[None, :]).T).T * self.sgrid.h**2  # (2Mj+1, n_cls)
        A = self.radial(j, Mj)
        dindex, _, _ = self._pairs(Mj)
        return np.einsum("mlr,mlr->ml", A, G[dindex - (M - Mj)])

    def inverse_node(self, F: np.ndarray, j: int, Mj: int | None = None) -> np.ndarray:
        """sum_{m,l <= Mj} K_{m,l,lam_j}(x, y) F[..., m, l] on the horizontal grid."""
        M = self.fgrid.M
        Mj = M if Mj is None else Mj
        sgn = np.sign(self.fgrid.lam[j])
        A = self.radial(j, Mj)
        _, order, starts = self._pairs(Mj)
        lead = F.shape[:-2]
        T = (A * F[..., : Mj + 1, : Mj + 1, None]).reshape(lead + ((Mj + 1) ** 2, -1))[..., order, :]
        H = np.add.reduceat(T, starts, axis=-2)  # (..., 2Mj+1, n_cls)
        ph = self.phase if sgn > 0 else self.phase[::-1]
        ph = ph[M - Mj : M + Mj + 1]
        return np.einsum("dp,...dp->...p", ph, H[..., self.cls])


@lru_cache(maxsize=8)
def get_plan(sgrid: SpatialGrid, fgrid: FrequencyGrid) -> TransformPlan:
    return TransformPlan(sgrid, fgrid)


def _chunks(n: int, size: int) -> list[range]:
    return [range(a, min(n, a + size)) for a in range(0, n, size)]


def resolution_mask(sgrid: SpatialGrid, fgrid: FrequencyGrid) -> np.ndarray:
    """Cells (m, l, lam) the spatial grid resolves: |lam|(2 max(m,l)+1) <= (pi/2h)^2, |lam| <= pi/hz."""
    return get_plan(sgrid, fgrid).mask


def forward_transform(f: SpatialField, grid: FrequencyGrid, warn: bool = True,
                      masked: bool = True) -> SpectralField:
    """f_hat(m, l, lam) = int conj(e^{i lam z} K_{m,l,lam}(q)) f(q) dq by grid quadrature.

    With ``masked`` the cells the spatial grid cannot resolve are set to
    zero; otherwise they hold aliased values.
    """
    plan = get_plan(f.grid, grid)
    v = f.values
    if warn:
        vmax = np.max(np.abs(v))
        edge = max(np.max(np.abs(v[[0, -1]])), np.max(np.abs(v[:, [0, -1]])),
                   np.max(np.abs(v[..., [0, -1]])))
        if vmax > 0 and edge > 1e-6 * vmax:
            warnings.warn(f"field mass at the box boundary: {edge / vmax:.2e} of max", stacklevel=2)
    g = v.reshape(-1, f.grid.Nz) @ plan.ez_fwd  # (Nxy, Nlam)
    out = np.empty((grid.n_m, grid.n_m, grid.n_lam), dtype=complex)

    out[:] = 0

    def work(rng: range) -> None:
        for j in rng:
            Mj = int(plan.m_res[j]) if masked else grid.M
            if Mj >= 0:
                out[: Mj + 1, : Mj + 1, j] = plan.forward_node(g[:, j], j, Mj)

    pmap(work, _chunks(grid.n_lam, 8))
    if masked:
        out *= plan.mask
    return SpectralField(grid, out)


def inverse_transform(F: SpectralField, target: SpatialGrid, real: bool | None = None,
                      masked: bool = True) -> SpatialField:
    """f(q) = c_n sum_{m,l} int e^{i lam z} K_{m,l,lam}(q) F(m,l,lam) |lam|^n dlam.

    ``real=None`` returns a real field when F is Hermitian in lambda.
    With ``masked`` unresolvable cells are dropped before synthesis.
    """
    if real is None:
        real = is_hermitian(F)
    vals = inverse_transform_batch(F.coeff[None], F.grid, target, real=real, masked=masked)[0]
    return SpatialField(target, vals)


def inverse_transform_batch(coeffs: np.ndarray, grid: FrequencyGrid, target: SpatialGrid,
                            real: bool = False, masked: bool = True, batch: int = 16) -> np.ndarray:
    """Inverse transforms of a stack of coefficient arrays (B, n_m, n_m, n_lam)."""
    plan = get_plan(target, grid)
    coeffs = np.asarray(coeffs)
    B = coeffs.shape[0]
    out = np.empty((B,) + target.shape, dtype=float if real else complex)
    for b0 in range(0, B, batch):
        c = coeffs[b0:b0 + batch]
        if masked:
            c = c * plan.mask
        g = np.zeros((c.shape[0], grid.n_lam, target.N * target.N), dtype=complex)

        def work(rng: range) -> None:
            for j in rng:
                Mj = int(plan.m_res[j]) if masked else grid.M
                if Mj >= 0:
                    g[:, j] = plan.inverse_node(c[..., j], j, Mj)

        pmap(work, _chunks(grid.n_lam, 8))
        vals = np.matmul(g.transpose(0, 2, 1), plan.ez_inv).reshape((c.shape[0],) + target.shape)
        out[b0:b0 + batch] = vals.real if real else vals
    return out


def inverse_transform_points(F: SpectralField, points: np.ndarray) -> np.ndarray:
    """Evaluate the inversion formula at arbitrary points of shape (..., 3)."""
    grid = F.grid
    if grid.n != 1:
        raise NotImplementedError("point evaluation is implemented for n = 1 only")
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 3)
    M = grid.M
    r2 = flat[:, 0] ** 2 + flat[:, 1] ** 2
    theta = np.arctan2(flat[:, 1], flat[:, 0])
    d = np.arange(M + 1)[:, None] - np.arange(M + 1)[None, :]
    out = np.zeros(flat.shape[0], dtype=complex)
    for j, lam in enumerate(grid.lam):
        A = kernel_radial_table(M, 2 * abs(lam) * r2)  # (M+1, M+1, P)
        K = A * np.exp(1j * np.sign(lam) * d[:, :, None] * theta[None, None, :])
        out += grid.weights[j] * np.exp(1j * lam * flat[:, 2]) * np.einsum("mlp,ml->p", K, F.coeff[:, :, j])
    return out.reshape(pts.shape[:-1])


def is_hermitian(F: SpectralField, tol: float = 1e-10) -> bool:
    c = F.coeff
    scale = max(np.max(np.abs(c)), 1e-300)
    return bool(np.max(np.abs(c - np.conj(c[:, :, ::-1]))) <= tol * scale)


def plancherel_norm(F: SpectralField) -> float:
    """c_n sum_{m,l} int |F|^2 |lam|^n dlam (the squared L^2 norm)."""
    return float(np.sum(np.abs(F.coeff) ** 2 * F.grid.weights))


def l2_norm_squared(f: SpatialField) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume)


def spectral_multiply(F: SpectralField, G: SpectralField) -> SpectralField:
    """(F . G)(m, l, lam) = sum_j F(m, j, lam) G(j, l, lam)."""
    F._same(G)
    if F.diagonal and G.diagonal:
        return SpectralField.from_diagonal(F.grid, F.diag() * G.diag())
    if G.diagonal:
        return SpectralField(F.grid, F.coeff * G.diag()[None, :, :], F.diagonal)
    if F.diagonal:
        return SpectralField(F.grid, F.diag()[:, None, :] * G.coeff, G.diagonal)
    return SpectralField(F.grid, np.einsum("mjk,jlk->mlk", F.coeff, G.coeff))


def dirac(grid: FrequencyGrid) -> SpectralField:
    return SpectralField.from_diagonal(grid, np.ones((grid.n_m, grid.n_lam)))


def laplacian_multiplier(F: SpectralField, power: float, signed: bool = False) -> SpectralField:
    """Scale by (4|lam|(2|l|+n))^power, or by (-4|lam|(2|l|+n))^N when ``signed``.

    With the transform convention used here the left-invariant sub-Laplacian
    acts on the second index l (F . D with D diagonal), so every function
    of Delta is a right factor in the convolution algebra.
    """
    g = F.grid
    base = 4.0 * g.gauge
    if signed:
        if float(power) != int(power):
            raise ValueError("signed Laplacian powers must be integers")
        mult = (-base) ** int(power)
    else:
        mult = base ** float(power)
    return SpectralField(g, F.coeff * mult[None, :, :], F.diagonal)


def dhat_metrics(w1: tuple, w2: tuple) -> tuple[float, float]:
    """(d_hat(w1, w2), d_hat_0(w1)) for points w = (m, l, lam) of the frequency space."""
    m1, l1, a1 = np.atleast_1d(w1[0]), np.atleast_1d(w1[1]), float(w1[2])
    m2, l2, a2 = np.atleast_1d(w2[0]), np.atleast_1d(w2[1]), float(w2[2])
    n = m1.size
    d = (np.sum(np.abs(a1 * (m1 + l1) - a2 * (m2 + l2)))
         + np.sum(np.abs((m1 - l1) - (m2 - l2))) + n * abs(a1 - a2))
    d0 = abs(a1) * (np.sum(np.abs(m1 + l1)) + n) + np.sum(np.abs(m1 - l1))
    return float(d), float(d0)


def _shifted(c: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # c[idx_m, idx_l] with -1 meaning zero (index outside the truncation)
    out = c[np.clip(idx, 0, None)][:, np.clip(idx, 0, None)]
    out[idx < 0] = 0
    out[:, idx < 0] = 0
    return out


def _shift_terms(F: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    g = F.grid
    plus, minus = g.shifts
    up = np.zeros_like(F.coeff)
    down = np.zeros_like(F.coeff)
    for j in range(g.n):
        mj = g.multi[:, j].astype(float)
        cu = np.sqrt(np.outer(mj + 1, mj + 1))[:, :, None]
        cd = np.sqrt(np.outer(mj, mj))[:, :, None]
        up += cu * _shifted(F.coeff, plus[j])
        down += cd * _shifted(F.coeff, minus[j])
    return up, down


def delta_hat(F: SpectralField) -> SpectralField:
    """The frequency-side Laplace-type operator, with FT(|v|^2 f) = -delta_hat(FT f)."""
    g = F.grid
    up, down = _shift_terms(F)
    s = (g.abs_m[:, None] + g.abs_m[None, :] + g.n)[:, :, None]
    inv = 1.0 / (2.0 * np.abs(g.lam))[None, None, :]
    return SpectralField(g, inv * (-s * F.coeff + up + down), F.diagonal)


def dlambda_hat(F: SpectralField) -> SpectralField:
    """The frequency-side lambda derivative, with FT(-i z f) = dlambda_hat(FT f).

    The lambda derivative uses second-order differences on each half-line.
    """
    g = F.grid
    up, down = _shift_terms(F)
    lam = g.lam
    P = g.n_pos
    d = np.empty_like(F.coeff)
    d[:, :, :P] = np.gradient(F.coeff[:, :, :P], lam[:P], axis=2, edge_order=2)
    d[:, :, P:] = np.gradient(F.coeff[:, :, P:], lam[P:], axis=2, edge_order=2)
    inv = 1.0 / (2.0 * lam)[None, None, :]
    return SpectralField(g, d + inv * (g.n * F.coeff + down - up), F.diagonal)


def theta_multiplier(profile: Callable[[np.ndarray], np.ndarray], grid: FrequencyGrid,
                     vector: bool = False) -> SpectralField:
    """Diagonal field profile(|lam| R(m, m)), R(m, m) = (2 m_j + 1)_j.

    By default the profile receives the scalar |lam| (2|m| + n); with
    ``vector=True`` it receives the n-vector |lam| R(m, m) on a trailing axis.
    """
    if vector:
        R = (2 * grid.multi + 1).astype(float)
        arg = np.abs(grid.lam)[None, :, None] * R[:, None, :]
    else:
        arg = grid.gauge
    vals = np.asarray(profile(arg), dtype=float)
    return SpectralField.from_diagonal(grid, vals)


def ball_indicator_profile(x: np.ndarray) -> np.ndarray:
    """1 on [0, 1), used to describe the ball B_1 in frequency space."""
    return (np.asarray(x) < 1).astype(float)
