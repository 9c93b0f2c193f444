"""Heisenberg group arithmetic, dilations, norms and weights.

Points of H^n are stored as arrays whose last axis has length 2n+1,
ordered (x_1..x_n, y_1..y_n, z).  Every function accepts a single point
or a stack of points and broadcasts over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _split(q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    q = np.asarray(q, dtype=float)
    d = q.shape[-1]
    if d < 3 or d % 2 == 0:
        raise ValueError(f"last axis must have length 2n+1, got {d}")
    n = (d - 1) // 2
    return q[..., :n], q[..., n : 2 * n], q[..., 2 * n], n


@dataclass(frozen=True)
class GroupPoint:
    """A point (x, y, z) of H^n."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    z: float

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y) or len(self.x) == 0:
            raise ValueError("x and y must be non-empty and of equal length")
        vals = np.array([*self.x, *self.y, self.z], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("GroupPoint entries must be finite")

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def from_array(cls, a) -> "GroupPoint":
        x, y, z, _ = _split(np.asarray(a, dtype=float))
        return cls(tuple(map(float, x)), tuple(map(float, y)), float(z))

    @classmethod
    def identity(cls, n: int = 1) -> "GroupPoint":
        return cls((0.0,) * n, (0.0,) * n, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([*self.x, *self.y, self.z], dtype=float)

    def __mul__(self, other: "GroupPoint") -> "GroupPoint":
        return multiply(self, other)


def _arr(q) -> np.ndarray:
    return q.as_array() if isinstance(q, GroupPoint) else np.asarray(q, dtype=float)


def _wrap(a: np.ndarray, like) -> GroupPoint | np.ndarray:
    return GroupPoint.from_array(a) if isinstance(like, GroupPoint) else a


def symplectic(p, q) -> np.ndarray:
    """omega((x,y),(x',y')) = sum_i x'_i y_i - x_i y'_i."""
    x, y, _, _ = _split(_arr(p))
    xp, yp, _, _ = _split(_arr(q))
    return np.sum(xp * y - x * yp, axis=-1)


def multiply(p, q):
    """Group law (x+x', y+y', z+z'+2 omega)."""
    a, b = _arr(p), _arr(q)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("dimension mismatch between group points")
    out = a + b
    out[..., -1] = a[..., -1] + b[..., -1] + 2.0 * symplectic(a, b)
    return _wrap(out, p)


def inverse(q):
    return _wrap(-_arr(q), q)


def dilate(lam: float, q):
    """delta_lam(x, y, z) = (lam x, lam y, lam^2 z)."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    a = _arr(q).copy()
    a[..., :-1] *= lam
    a[..., -1] *= lam * lam
    return _wrap(a, q)


def homogeneous_norm(q) -> np.ndarray:
    """|q|_h = (|x|^2 + |y|^2 + |z|)^{1/2}."""
    a = _arr(q)
    return np.sqrt(np.sum(a[..., :-1] ** 2, axis=-1) + np.abs(a[..., -1]))


def cc_distance(p, q) -> np.ndarray:
    """Surrogate for the Carnot-Caratheodory distance: |p^{-1} q|_h."""
    return homogeneous_norm(multiply(inverse(_arr(p)), _arr(q)))


def star_norm(q) -> np.ndarray:
    """|q|_* = sqrt(1 + d_cc(e, q)^2) with the surrogate d_cc."""
    a = _arr(q)
    return np.sqrt(1.0 + np.sum(a[..., :-1] ** 2, axis=-1) + np.abs(a[..., -1]))


@dataclass(frozen=True)
class Weight:
    """Exponential weight exp(-nu |q|_*^eta) or polynomial weight.

    The polynomial kind has two forms: ``form="bernstein"`` gives
    c (1 + |q|_*^b), ``form="decay"`` gives |q|_*^{-b}.
    """

    kind: str = "exponential"
    nu: float = 0.0
    eta: float = 0.5
    b: float = 0.0
    c: float = 1.0
    form: str = "bernstein"

    def __post_init__(self) -> None:
        if self.kind == "exponential":
            if not 0.0 < self.eta < 1.0:
                raise ValueError("exponential weight requires 0 < eta < 1")
        elif self.kind == "polynomial":
            if not self.c > 0:
                raise ValueError("polynomial weight requires c > 0")
            if self.form not in ("bernstein", "decay"):
                raise ValueError("polynomial form must be 'bernstein' or 'decay'")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def exponential(cls, nu: float, eta: float = 0.5) -> "Weight":
        return cls(kind="exponential", nu=nu, eta=eta)

    @classmethod
    def polynomial(cls, b: float, c: float = 1.0, form: str = "bernstein") -> "Weight":
        return cls(kind="polynomial", b=b, c=c, form=form)

    def __call__(self, q) -> np.ndarray:
        return weight_eval(self, q)

    def to_dict(self) -> dict:
        if self.kind == "exponential":
            return {"kind": self.kind, "nu": self.nu, "eta": self.eta}
        return {"kind": self.kind, "b": self.b, "c": self.c, "form": self.form}


def weight_eval(w: Weight, q) -> np.ndarray:
    s = star_norm(q)
    if w.kind == "exponential":
        return np.exp(-w.nu * s**w.eta)
    if w.form == "bernstein":
        return w.c * (1.0 + s**w.b)
    return s ** (-w.b)
