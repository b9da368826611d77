"""Heterogeneity catalog F(U, V, x), topographies H(x) and background states."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad_vec
from scipy.interpolate import CubicSpline

from .core import SQRT2, Field, Grid1D
from .errors import (BadInput, ExtrapolationWarning, UnboundedForcing,
                     UnboundedTopographyWarning)

LOG2 = math.log(2.0)


def _log_sech(a):
    a = np.abs(a)
    return -a + LOG2 - np.log1p(np.exp(-2.0 * a))


def _signed_log(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(v), np.log(np.abs(v))


# ---------------------------------------------------------------- topographies

class Topography:
    """Base class: subclasses provide dh, d2h, d3h (and h where closed)."""

    localized = True
    period = None

    def h(self, x):
        raise NotImplementedError

    def dh(self, x):
        raise NotImplementedError

    def d2h(self, x):
        raise NotImplementedError

    def d3h(self, x):
        raise NotImplementedError

    def log_dh(self, x):
        """(sign, log|H'|); overridden where H' underflows in the tails."""
        return _signed_log(self.dh(x))

    def log_d2h(self, x):
        return _signed_log(self.d2h(x))

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ExpHill(Topography):
    """H(x) = sign / cosh^2(sqrt(2) mu x / 2)."""

    mu: float
    sign: int = 1

    def __post_init__(self):
        if not self.mu > 0:
            raise BadInput("ExpHill needs mu > 0")
        if self.sign not in (1, -1):
            raise BadInput("sign must be +1 or -1")

    @property
    def b(self):
        return SQRT2 * self.mu / 2.0

    def _a(self, x):
        return self.b * np.asarray(x, dtype=float)

    def h(self, x):
        return self.sign * np.exp(2.0 * _log_sech(self._a(x)))

    def dh(self, x):
        a = self._a(x)
        return -2.0 * self.b * self.sign * np.exp(2.0 * _log_sech(a)) * np.tanh(a)

    def d2h(self, x):
        a = self._a(x)
        t = np.tanh(a)
        return 2.0 * self.b ** 2 * self.sign * np.exp(2.0 * _log_sech(a)) * (3.0 * t * t - 1.0)

    def d3h(self, x):
        a = self._a(x)
        t = np.tanh(a)
        return 8.0 * self.b ** 3 * self.sign * np.exp(2.0 * _log_sech(a)) * t * (2.0 - 3.0 * t * t)

    def log_dh(self, x):
        a = self._a(x)
        s = -self.sign * np.sign(a)
        with np.errstate(divide="ignore"):
            lg = math.log(2.0 * self.b) + 2.0 * _log_sech(a) + np.log(np.abs(np.tanh(a)))
        return s, lg

    def log_d2h(self, x):
        a = self._a(x)
        t = np.tanh(a)
        c = 3.0 * t * t - 1.0
        with np.errstate(divide="ignore"):
            lg = math.log(2.0 * self.b ** 2) + 2.0 * _log_sech(a) + np.log(np.abs(c))
        return self.sign * np.sign(c), lg

    def spec(self):
        return f"exp:{self.mu!r}" + ("" if self.sign == 1 else ":-1")


@dataclass(frozen=True)
class AlgHill(Topography):
    """H(x) = sign * (1 + x^2)^(-(p-1)/2); any real p is accepted."""

    p: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise BadInput("sign must be +1 or -1")
        if self.p <= -1:
            warnings.warn(f"AlgHill p = {self.p}: H'' is unbounded, theory not valid",
                          UnboundedTopographyWarning, stacklevel=3)
        elif self.p <= 0:
            warnings.warn(f"AlgHill p = {self.p}: H' is unbounded",
                          UnboundedTopographyWarning, stacklevel=3)

    def h(self, x):
        x = np.asarray(x, dtype=float)
        return self.sign * (1.0 + x * x) ** (-(self.p - 1.0) / 2.0)

    def dh(self, x):
        x = np.asarray(x, dtype=float)
        return -self.sign * (self.p - 1.0) * x * (1.0 + x * x) ** (-(self.p + 1.0) / 2.0)

    def d2h(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        return -self.sign * (p - 1.0) * (1.0 - p * x * x) * (1.0 + x * x) ** (-(p + 3.0) / 2.0)

    def d3h(self, x):
        x = np.asarray(x, dtype=float)
        p = self.p
        return (-self.sign * (p - 1.0) * (p + 1.0) * x * (p * x * x - 3.0)
                * (1.0 + x * x) ** (-(p + 5.0) / 2.0))

    def spec(self):
        return f"alg:{self.p!r}" + ("" if self.sign == 1 else ":-1")


@dataclass(frozen=True)
class Sinusoid(Topography):
    """H(x) = amplitude * sin(k x)."""

    amplitude: float
    k: float
    localized = False

    def __post_init__(self):
        if self.k == 0:
            raise BadInput("Sinusoid needs k != 0")

    @property
    def period(self):
        return 2.0 * math.pi / abs(self.k)

    def h(self, x):
        return self.amplitude * np.sin(self.k * np.asarray(x, dtype=float))

    def dh(self, x):
        return self.amplitude * self.k * np.cos(self.k * np.asarray(x, dtype=float))

    def d2h(self, x):
        return -self.amplitude * self.k ** 2 * np.sin(self.k * np.asarray(x, dtype=float))

    def d3h(self, x):
        return -self.amplitude * self.k ** 3 * np.cos(self.k * np.asarray(x, dtype=float))

    def spec(self):
        return f"sin:{self.amplitude!r}:{self.k!r}"


@dataclass(frozen=True)
class Mixed(Topography):
    """H = loc + delta * per."""

    loc: Topography
    per: Topography
    delta: float

    def h(self, x):
        return self.loc.h(x) + self.delta * self.per.h(x)

    def dh(self, x):
        return self.loc.dh(x) + self.delta * self.per.dh(x)

    def d2h(self, x):
        return self.loc.d2h(x) + self.delta * self.per.d2h(x)

    def d3h(self, x):
        return self.loc.d3h(x) + self.delta * self.per.d3h(x)

    def spec(self):
        return f"mixed:{self.loc.spec()};{self.per.spec()};{self.delta!r}"


class Tabulated(Topography):
    """Topography given by samples of H' (and optionally H'') on a grid.

    H' is interpolated by a cubic spline.  H'' comes from the supplied samples
    or from centered differences of H'.  Outside the table H' is held at its
    edge value (H'' = H''' = 0 there) and an ExtrapolationWarning is issued once.
    """

    localized = False

    def __init__(self, x, dh, d2h=None, source=None):
        x = np.asarray(x, dtype=float)
        dh = np.asarray(dh, dtype=float)
        if x.ndim != 1 or x.size < 4 or dh.shape != x.shape:
            raise BadInput("Tabulated needs at least 4 matching samples")
        if np.any(np.diff(x) <= 0):
            raise BadInput("Tabulated x must be strictly increasing")
        fd = np.gradient(dh, x, edge_order=2)
        if d2h is None:
            d2h = fd
        else:
            d2h = np.asarray(d2h, dtype=float)
            if d2h.shape != x.shape:
                raise BadInput("H'' samples do not match the grid")
            if np.max(np.abs(d2h - fd)) > 1e-4 * (1.0 + np.max(np.abs(d2h))):
                raise BadInput("tabulated H'' inconsistent with the derivative of H'")
        self.x_tab = x
        self.dh_tab = dh
        self.d2h_tab = d2h
        self._dh = CubicSpline(x, dh)
        self._d2h = CubicSpline(x, d2h)
        self._d3h = self._d2h.derivative()
        self.source = source
        self._warned = False

    def _clip(self, x):
        x = np.asarray(x, dtype=float)
        out = (x < self.x_tab[0]) | (x > self.x_tab[-1])
        if np.any(out) and not self._warned:
            self._warned = True
            warnings.warn("tabulated topography evaluated outside its table; "
                          "H' held at the edge value", ExtrapolationWarning, stacklevel=3)
        return np.clip(x, self.x_tab[0], self.x_tab[-1]), out

    def dh(self, x):
        xc, _ = self._clip(x)
        return self._dh(xc)

    def d2h(self, x):
        xc, out = self._clip(x)
        return np.where(out, 0.0, self._d2h(xc))

    def d3h(self, x):
        xc, out = self._clip(x)
        return np.where(out, 0.0, self._d3h(xc))

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise BadInput(f"{path}: empty table")
        try:
            data = np.array([[float(c) for c in r[:2]] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise BadInput(f"{path}: {exc}") from None
        return cls(data[:, 0], data[:, 1], source=str(path))

    def spec(self):
        return f"table:{self.source}" if self.source else "table:<inline>"


# -------------------------------------------------------------------- forcings

class Forcing:
    """F(U, V, x) without the factor eps."""

    is_topographic = False

    def eval(self, u, v, x):
        raise NotImplementedError

    def partials(self, u, v, x):
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Forcing):
    def eval(self, u, v, x):
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(v), np.asarray(x)).shape)

    def partials(self, u, v, x):
        z = self.eval(u, v, x)
        return z, z.copy(), z.copy()

    def spec(self):
        return "zero"


def _zero_fn(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Canonical(Forcing):
    """F = f1(x) U + f2(x) V + f3(x); missing derivatives use central differences."""

    f1: Callable = _zero_fn
    f2: Callable = _zero_fn
    f3: Callable = _zero_fn
    df1: Optional[Callable] = None
    df2: Optional[Callable] = None
    df3: Optional[Callable] = None
    label: Optional[str] = None

    @staticmethod
    def _d(f, df, x):
        if df is not None:
            return df(x)
        x = np.asarray(x, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(x))
        return (f(x + h) - f(x - h)) / (2.0 * h)

    def eval(self, u, v, x):
        return self.f1(x) * u + self.f2(x) * v + self.f3(x)

    def partials(self, u, v, x):
        fx = (self._d(self.f1, self.df1, x) * u + self._d(self.f2, self.df2, x) * v
              + self._d(self.f3, self.df3, x))
        shape = np.broadcast(np.asarray(u), np.asarray(v), np.asarray(x)).shape
        return (np.broadcast_to(self.f1(x), shape).astype(float),
                np.broadcast_to(self.f2(x), shape).astype(float), fx)

    def spec(self):
        return self.label or "canonical:<callables>"


@dataclass(frozen=True)
class CosSinTriple(Forcing):
    """f1 = a1 cos kx, f2 = a2 sin kx, f3 = a3 sin kx."""

    alpha1: float
    alpha2: float
    alpha3: float
    k: float

    def __post_init__(self):
        if self.k == 0:
            raise BadInput("CosSinTriple needs k != 0")

    def eval(self, u, v, x):
        kx = self.k * np.asarray(x, dtype=float)
        c, s = np.cos(kx), np.sin(kx)
        return self.alpha1 * c * u + self.alpha2 * s * v + self.alpha3 * s

    def partials(self, u, v, x):
        kx = self.k * np.asarray(x, dtype=float)
        c, s = np.cos(kx), np.sin(kx)
        shape = np.broadcast(np.asarray(u), np.asarray(v), kx).shape
        fu = np.broadcast_to(self.alpha1 * c, shape).astype(float)
        fv = np.broadcast_to(self.alpha2 * s, shape).astype(float)
        fx = self.k * (-self.alpha1 * s * u + self.alpha2 * c * v + self.alpha3 * c)
        return fu, fv, np.broadcast_to(fx, shape).astype(float)

    @property
    def antisymmetric(self):
        return self.alpha3 == 0

    def spec(self):
        return f"triple:{self.alpha1!r},{self.alpha2!r},{self.alpha3!r},{self.k!r}"


@dataclass(frozen=True)
class TopographyDriven(Forcing):
    """F = H'(x) V + H''(x) U."""

    topo: Topography
    is_topographic = True

    def eval(self, u, v, x):
        return self.topo.dh(x) * v + self.topo.d2h(x) * u

    def partials(self, u, v, x):
        shape = np.broadcast(np.asarray(u), np.asarray(v), np.asarray(x)).shape
        fu = np.broadcast_to(self.topo.d2h(x), shape).astype(float)
        fv = np.broadcast_to(self.topo.dh(x), shape).astype(float)
        fx = self.topo.d2h(x) * v + self.topo.d3h(x) * u
        return fu, fv, np.broadcast_to(fx, shape).astype(float)

    def spec(self):
        return "topo:" + self.topo.spec()


def eval_forcing(f: Forcing, u, v, x):
    return f.eval(u, v, x)


def forcing_partials(f: Forcing, u, v, x):
    return f.partials(u, v, x)


# ------------------------------------------------------------------- parsing

def parse_topography(text: str) -> Topography:
    """Parse 'exp:MU[:SIGN]', 'alg:P[:SIGN]', 'sin:A:K', 'table:PATH' or
    'mixed:LOC;PER;DELTA'."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    try:
        if head == "mixed":
            parts = rest.split(";")
            if len(parts) != 3:
                raise BadInput("mixed needs LOC;PER;DELTA")
            return Mixed(parse_topography(parts[0]), parse_topography(parts[1]), float(parts[2]))
        if head == "table":
            return Tabulated.from_csv(rest)
        args = [float(a) for a in rest.split(":")] if rest else []
        if head == "exp":
            return ExpHill(args[0], int(args[1]) if len(args) > 1 else 1)
        if head == "alg":
            return AlgHill(args[0], int(args[1]) if len(args) > 1 else 1)
        if head == "sin":
            return Sinusoid(args[0], args[1])
    except (IndexError, ValueError) as exc:
        raise BadInput(f"cannot parse topography {text!r}: {exc}") from None
    raise BadInput(f"unknown topography {text!r}")


def _scaled_sin(a, k, x):
    return a * np.sin(k * np.asarray(x, dtype=float))


def _scaled_cos(a, k, x):
    return a * np.cos(k * np.asarray(x, dtype=float))


def parse_forcing(text: str) -> Forcing:
    """'zero', 'triple:A1,A2,A3,K', 'f1sin:A:K' (F = A sin(Kx) U),
    'topo:<topography>' or a bare topography."""
    text = text.strip()
    if text.lower() == "zero":
        return Zero()
    head, _, rest = text.partition(":")
    if head.lower() == "f1sin":
        try:
            a, k = (float(v) for v in rest.split(":"))
        except ValueError:
            raise BadInput(f"cannot parse {text!r}") from None
        return Canonical(f1=partial(_scaled_sin, a, k), df1=partial(_scaled_cos, a * k, k),
                         label=f"f1sin:{a!r}:{k!r}")
    if head.lower() == "triple":
        try:
            a1, a2, a3, k = (float(a) for a in rest.split(","))
        except ValueError:
            raise BadInput(f"cannot parse triple {text!r}") from None
        return CosSinTriple(a1, a2, a3, k)
    if head.lower() == "topo":
        return TopographyDriven(parse_topography(rest))
    return TopographyDriven(parse_topography(text))


# ----------------------------------------------------------- background states

# kernel exp(-sqrt2 s) < 1e-14 beyond this distance
KERNEL_CUTOFF = math.log(1e14) / SQRT2


def background_state(sign: int, f: Forcing, eps: float, grid: Grid1D,
                     bound: float = 1e6, order: str = "first") -> Field:
    """Zero-front state u_+- on the grid.

    order='first' returns +-1 + eps*u1 with u1 the exponential-kernel
    convolution of F(+-1, 0, .).  order='exact' refines that field by Newton's
    method on the discretized stationary PDE (Neumann boundaries), which keeps
    all orders in eps.
    """
    if sign not in (1, -1):
        raise BadInput("sign must be +1 or -1")
    if not 0 <= eps < 1:
        raise BadInput("eps must lie in [0, 1)")
    x = grid.x
    base = float(sign) * np.ones_like(x)
    if isinstance(f, Zero) or eps == 0:
        return Field(grid, base)

    probe = np.linspace(x[0] - KERNEL_CUTOFF, x[-1] + KERNEL_CUTOFF,
                        max(2001, 20 * grid.n))
    gmax = np.max(np.abs(f.eval(float(sign), 0.0, probe)))
    if not np.isfinite(gmax) or gmax > bound:
        raise UnboundedForcing(f"|F(+-1,0,x)| reaches {gmax:.3g} > {bound:g} on the window")

    def g(z):
        return f.eval(float(sign), 0.0, z)

    def integrand(s):
        return (g(x + s) + g(x - s)) * np.exp(-SQRT2 * s)

    conv, _ = quad_vec(integrand, 0.0, KERNEL_CUTOFF, epsabs=1e-13, epsrel=1e-11,
                       norm="max", points=np.arange(1.0, KERNEL_CUTOFF, 1.0))
    u = base + eps / (2.0 * SQRT2) * conv
    if order == "first":
        return Field(grid, u)
    if order == "exact":
        from .pde import steady_state_newton
        return steady_state_newton(Field(grid, u), f, eps)
    raise BadInput(f"unknown order {order!r}")
