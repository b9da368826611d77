"""Grids, fields and closed-form objects of the homogeneous Allen-Cahn equation."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import BadInput, NonMonotonePositions

SQRT2 = np.sqrt(2.0)
# squared L2 norm of the front derivative, 2*sqrt(2)/3
NORM_UPRIME2 = 2.0 * SQRT2 / 3.0


class Orientation(enum.Enum):
    UP = 1
    DOWN = -1

    @property
    def sign(self) -> int:
        return self.value

    def flip(self) -> "Orientation":
        return Orientation.DOWN if self is Orientation.UP else Orientation.UP

    @classmethod
    def parse(cls, s) -> "Orientation":
        if isinstance(s, Orientation):
            return s
        key = str(s).strip().lower()
        if key in ("up", "+", "+1", "1"):
            return cls.UP
        if key in ("down", "-", "-1"):
            return cls.DOWN
        raise BadInput(f"unknown orientation {s!r}")


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh on [x_min, x_max] with n nodes; dx is derived."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise BadInput("grid endpoints must be finite")
        if not self.x_min < self.x_max:
            raise BadInput("need x_min < x_max")
        if int(self.n) != self.n or self.n < 3:
            raise BadInput("need at least 3 nodes")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.dx

    @classmethod
    def with_spacing(cls, x_min, x_max, dx):
        n = int(round((x_max - x_min) / dx)) + 1
        return cls(float(x_min), float(x_max), n)


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise BadInput(f"field length {v.shape} does not match grid ({self.grid.n})")
        if not np.all(np.isfinite(v)):
            raise BadInput("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def x(self):
        return self.grid.x


def heteroclinic(orientation, x, phi=0.0):
    """Front profile +-tanh(sqrt(2)(x - phi)/2)."""
    o = Orientation.parse(orientation)
    return o.sign * np.tanh((np.asarray(x, dtype=float) - phi) / SQRT2)


def heteroclinic_deriv(orientation, x, phi=0.0):
    o = Orientation.parse(orientation)
    z = (np.asarray(x, dtype=float) - phi) / SQRT2
    return o.sign * (SQRT2 / 2.0) * sech2(z)


def sech2(z):
    # overflow-free sech^2 via exp(-2|z|)
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


def log_weight_Wh(y):
    """log W_h(y); -inf at y = 0."""
    a = SQRT2 * np.abs(np.asarray(y, dtype=float))
    e = np.exp(-a)
    with np.errstate(divide="ignore"):
        return np.log(4.0) + 2.0 * np.log(-np.expm1(-a)) - a - 4.0 * np.log1p(e)


def weight_Wh(y):
    """W_h = u^2 (1 - u^2) for the centered up-front; takes values in [0, 1/4]."""
    u = np.tanh(np.asarray(y, dtype=float) / SQRT2)
    return u * u * sech2(np.asarray(y, dtype=float) / SQRT2)


def hamiltonian(u, p):
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    return 0.5 * p * p + 0.5 * u * u - 0.25 * u ** 4


def multifront_profile(grid: Grid1D, positions, first=Orientation.UP,
                       steepness=SQRT2 / 2.0, base_offset=0.0) -> Field:
    """Alternating superposition of tanh fronts at the given positions.

    Front j (0-based) carries sign (+1 for UP) * (-1)**j.  With steepness
    sqrt(2)/2 every factor is an exact heteroclinic.
    """
    pos = np.asarray(positions, dtype=float).ravel()
    if pos.size > 1 and np.any(np.diff(pos) <= 0):
        raise NonMonotonePositions("front positions must be strictly increasing")
    if steepness <= 0:
        raise BadInput("steepness must be positive")
    s0 = Orientation.parse(first).sign
    x = grid.x
    u = np.full_like(x, float(base_offset))
    for j, p in enumerate(pos):
        u += s0 * (-1) ** j * np.tanh(steepness * (x - p))
    return Field(grid, u)


def alternating_orientations(first, n):
    o = Orientation.parse(first)
    out = []
    for _ in range(n):
        out.append(o)
        o = o.flip()
    return out
