"""Gaussian noise W^{zeta,alpha}: time covariance c_G |t|^{-zeta}, spatial
covariance (-Delta)^{-2 alpha}, synthesized in frequency space.

Each cell (m, l, lam > 0) carries an independent complex Gaussian process
a X(t) with
    E[(X_t - X_s)^2] = 2 c_G (t-s)^{2-zeta} / ((1-zeta)(2-zeta))
and a = (4|lam|(2|l|+n))^{-alpha} / sqrt(W_lam), W_lam being the Plancherel
quadrature weight; cells at -lam are complex conjugates, so spatial fields
are real.  Then E[V_t(phi) V_s(psi)] = C(t, s) <phi, (-Delta)^{-2 alpha} psi>.

Random streams are Philox generators keyed by (seed, positive lambda-node
index); within a node the cells are drawn in a fixed order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .group_core import Weight, multiply
from .heat_flow import green_kernel_lambda
from .littlewood_paley import (PartitionOfUnity, block_norms, block_spectral, combine,
                               spatial_blocks)
from .parallel import pmap
from .spectral import (FrequencyGrid, SpatialField, SpatialGrid, SpectralField,
                       inverse_transform)


def admissible(zeta: float, alpha: float, n: int = 1) -> bool:
    """zeta in (0,1) and (n+1)/2 - (1-zeta) < alpha < (n+1)/2."""
    if not 0.0 < zeta < 1.0:
        return False
    return (n + 1) / 2 - (1 - zeta) < alpha < (n + 1) / 2


def increment_variance(zeta: float, c_gamma: float, dt) -> np.ndarray:
    """int int_{[s,t]^2} c_G |u-v|^{-zeta} du dv for t - s = dt."""
    dt = np.abs(np.asarray(dt, dtype=float))
    return 2.0 * c_gamma * dt ** (2 - zeta) / ((1 - zeta) * (2 - zeta))


def time_covariance(zeta: float, c_gamma: float, t, s) -> np.ndarray:
    """E[X_t X_s] for the integrated process X_0 = 0."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    return 0.5 * (increment_variance(zeta, c_gamma, t) + increment_variance(zeta, c_gamma, s)
                  - increment_variance(zeta, c_gamma, t - s))


@dataclass(frozen=True)
class NoiseParams:
    zeta: float
    alpha: float
    c_gamma: float = 1.0
    seed: int = 0
    times: tuple[float, ...] = (0.0, 1.0)
    research_mode: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.zeta < 1:
            raise ValueError("zeta must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.c_gamma <= 0:
            raise ValueError("c_gamma must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must start at 0 and increase strictly")
        if t.size > 2049:
            raise ValueError("time grids are limited to 2048 steps (Cholesky synthesis)")

    @classmethod
    def dyadic(cls, zeta: float, alpha: float, horizon: float, level: int, **kw) -> "NoiseParams":
        return cls(zeta, alpha, times=tuple(np.linspace(0.0, horizon, 2**level + 1)), **kw)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """V_t in frequency space at every time node (V_0 = 0)."""

    params: NoiseParams
    grid: FrequencyGrid
    values: np.ndarray  # (T, n_m, n_m, n_lam) complex

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.params.times)

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a node of the noise path")
        return i

    def V(self, t: float) -> SpectralField:
        return SpectralField(self.grid, self.values[self.index(t)])

    def increment(self, s: float, t: float) -> SpectralField:
        return SpectralField(self.grid, self.values[self.index(t)] - self.values[self.index(s)])

    def spatial(self, t: float, sgrid: SpatialGrid) -> SpatialField:
        return inverse_transform(self.V(t), sgrid, real=True)


def cell_amplitude(grid: FrequencyGrid, alpha: float) -> np.ndarray:
    """a[l, lam] = (4|lam|(2|l|+n))^{-alpha} / sqrt(W_lam)."""
    return (4.0 * grid.gauge) ** (-alpha) / np.sqrt(grid.weights)[None, :]


def _cholesky(params: NoiseParams) -> np.ndarray:
    t = np.asarray(params.times[1:], dtype=float)
    C = time_covariance(params.zeta, params.c_gamma, t[:, None], t[None, :])
    return np.linalg.cholesky(C)


def sample_noise(params: NoiseParams, grid: FrequencyGrid, n: int | None = None) -> NoisePath:
    """Draw one noise path on the frequency grid.

    Refuses non-admissible (zeta, alpha) unless ``research_mode`` is set.
    """
    nn = grid.n if n is None else n
    if not params.research_mode and not admissible(params.zeta, params.alpha, nn):
        raise ValueError(f"(zeta, alpha) = ({params.zeta}, {params.alpha}) is not admissible for n = {nn}")
    L = _cholesky(params)
    T = L.shape[0]
    amp = cell_amplitude(grid, params.alpha)  # (n_m, n_lam)
    P = grid.n_pos
    out = np.zeros((T + 1, grid.n_m, grid.n_m, grid.n_lam), dtype=complex)

    def work(p: int) -> None:
        j = P + p
        rng = np.random.Generator(np.random.Philox(key=[params.seed, p]))
        z = rng.standard_normal((T, grid.n_m, grid.n_m, 2))
        x = np.tensordot(L, z, axes=(1, 0))
        cell = (x[..., 0] + 1j * x[..., 1]) / math.sqrt(2.0)
        vals = cell * amp[None, None, :, j]
        out[1:, :, :, j] = vals
        out[1:, :, :, P - 1 - p] = np.conj(vals)

    pmap(work, range(P))
    return NoisePath(params, grid, out)


def pairing(F: SpectralField | np.ndarray, Phi: SpectralField) -> float:
    """int f phi dmu for real f, phi via Plancherel: sum W F conj(Phi)."""
    c = F.coeff if isinstance(F, SpectralField) else F
    return float(np.real(np.sum(c * np.conj(Phi.coeff) * Phi.grid.weights)))


def covariance_oracle(Phi: SpectralField, Psi: SpectralField, alpha: float, zeta: float,
                      c_gamma: float, t: float, s: float) -> float:
    """C(t, s) <phi, (-Delta)^{-2 alpha} psi> by spectral quadrature."""
    g = Phi.grid
    mult = (4.0 * g.gauge) ** (-2 * alpha)
    spatial = float(np.real(np.sum(np.conj(Phi.coeff) * Psi.coeff * mult[None, :, :] * g.weights)))
    return float(time_covariance(zeta, c_gamma, t, s)) * spatial


def spatial_covariance_green(phi, psi, alpha: float, qgrid: SpatialGrid, rho_max: float = 3.6,
                             nodes: tuple[int, int, int] = (16, 10, 10)) -> float:
    """<phi, (-Delta)^{-2 alpha} psi> = int int G_{2 alpha}(p, q) phi(p) psi(q) by direct quadrature (n = 1).

    With G(p, q) = g(q^{-1} p) the double integral is int g(r) A(r) dr,
    A(r) = int phi(q r) psi(q) dq.  g is homogeneous of degree 4 alpha - 4
    and depends on s = |v|^2 / |r|_h^2 only, so in the coordinates
    v = rho sqrt(s) (cos th, sin th), z = +-rho^2 (1 - s), where
    dr = rho^3 drho ds dth, the singularity at r = e disappears.
    ``phi`` and ``psi`` are callables on points; A uses grid sums on ``qgrid``.
    """
    if not 0 < 2 * alpha < 2:
        raise ValueError("need 0 < 2 alpha < n + 1 = 2")
    nr, ns, nt = nodes
    xr, wr = leggauss(nr)
    rho, wr = rho_max * (xr + 1) / 2, wr * rho_max / 2
    xs, ws = leggauss(ns)
    s, ws = (xs + 1) / 2, ws / 2
    th = 2 * math.pi * np.arange(nt) / nt
    h = green_kernel_lambda(2 * alpha, np.column_stack([np.sqrt(s), 0 * s, 1 - s]), np.zeros(3))
    RHO, S, TH, SG = np.meshgrid(rho, s, th, [1.0, -1.0], indexing="ij")
    w = np.einsum("i,j->ij", wr * rho ** (4 * alpha - 1), ws * h)[:, :, None, None] * (2 * math.pi / nt)
    w = np.broadcast_to(w, RHO.shape).ravel()
    R = np.stack([RHO * np.sqrt(S) * np.cos(TH), RHO * np.sqrt(S) * np.sin(TH), SG * RHO**2 * (1 - S)],
                 axis=-1).reshape(-1, 3)
    Q = qgrid.points().reshape(-1, 3)
    pq = psi(Q) * qgrid.cell_volume
    A = np.concatenate([phi(multiply(Q[None], R[i:i + 64, None])) @ pq for i in range(0, len(R), 64)])
    return float(np.dot(w, A))


def block_noise(path: NoisePath, pou: PartitionOfUnity, k: int, t: float, sgrid: SpatialGrid,
                s: float | None = None) -> SpatialField:
    """sigma_k V_t (or sigma_k dV_{st} when s is given) on a spatial grid."""
    if k > pou.K_max:
        raise ValueError("block index exceeds K_max")
    F = path.V(t) if s is None else path.increment(s, t)
    return inverse_transform(block_spectral(F, pou, k), sgrid, real=True)


def block_at_identity(F: SpectralField | np.ndarray, grid: FrequencyGrid, pou: PartitionOfUnity) -> np.ndarray:
    """sigma_k f(e) for every k: K_{m,l,lam}(e) = delta_{ml}, so only the diagonal enters."""
    c = F.coeff if isinstance(F, SpectralField) else F
    d = c[np.arange(grid.n_m), np.arange(grid.n_m)]  # (n_m, n_lam)
    return np.real(np.einsum("kml,ml,l->k", pou.phi, d, grid.weights))


def block_variance_exact(grid: FrequencyGrid, pou: PartitionOfUnity, alpha: float, zeta: float,
                         c_gamma: float, dt: float) -> np.ndarray:
    """E|sigma_k dV_{st}(e)|^2 for each k from the cell variances."""
    amp2 = cell_amplitude(grid, alpha) ** 2
    var = increment_variance(zeta, c_gamma, dt)
    # each positive node and its conjugate partner contribute W^2 a^2 var / 2 apiece
    return np.array([float(var * np.sum(grid.weights**2 * pou.phi[k + 1] ** 2 * amp2)) for k in pou.ks])


def block_variance_mc(params: NoiseParams, grid: FrequencyGrid, pou: PartitionOfUnity, s: float, t: float,
                      samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo E|sigma_k dV_{st}(e)|^2 and its standard error, seeds seed..seed+samples-1."""
    vals = np.empty((samples, len(pou.ks)))
    for i in range(samples):
        p = replace(params, seed=params.seed + i)
        path = sample_noise(p, grid)
        vals[i] = block_at_identity(path.increment(s, t), grid, pou)
    sq = vals**2
    return sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(samples)


def fit_exponent(x, y) -> float:
    """Least-squares slope of log2 y against x."""
    x = np.asarray(x, dtype=float)
    ly = np.log2(np.asarray(y, dtype=float))
    return float(np.polyfit(x, ly, 1)[0])


def noise_besov_norm(F: SpectralField, pou: PartitionOfUnity, sgrid: SpatialGrid, a: float,
                     gamma: float, rho: Weight) -> float:
    """||f||_{A_a^{-gamma}} = ||f||_{B^{-gamma, rho}_{2a, 2a}}."""
    if not np.any(F.coeff):
        return 0.0
    blocks = spatial_blocks(F, pou, sgrid, real=True)
    norms = block_norms(blocks, 2 * a, rho)
    return combine(norms, blocks.ks, -gamma, 2 * a)


def holder_fit(paths: list[NoisePath], pou: PartitionOfUnity, sgrid: SpatialGrid, a: float, gamma: float,
               rho: Weight, gaps: list[float], s: float = 0.0) -> tuple[float, np.ndarray]:
    """Fitted exponent of (E ||dV_{s,s+h}||_A^{2a})^{1/(2a)} against h, averaging over paths."""
    norms = np.array([[noise_besov_norm(p.increment(s, s + h), pou, sgrid, a, gamma, rho) for h in gaps]
                      for p in paths])
    mean = np.mean(norms ** (2 * a), axis=0) ** (1 / (2 * a))
    slope = float(np.polyfit(np.log(gaps), np.log(mean), 1)[0])
    return slope, mean
