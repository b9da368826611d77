"""Melnikov functions R(phi), R'(phi), closed forms and tail asymptotics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .core import SQRT2, Orientation, log_weight_Wh, weight_Wh, sech2
from .errors import (BadInput, DivergentIntegral, QuadratureNotConverged,
                     RootNotBracketed)
from .forcing import (AlgHill, CosSinTriple, ExpHill, Forcing, Mixed, Sinusoid,
                      TopographyDriven, Zero)


# ----------------------------------------------------------------- backends

@dataclass(frozen=True)
class Quadrature:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    half_width: float = 40.0

    def __post_init__(self):
        if self.half_width < 20:
            raise BadInput("quadrature half_width must be >= 20")


@dataclass(frozen=True)
class PeriodicClosed:
    """R_up/down = 16(A +- B) sin(k (phi + shift))."""

    A: float
    B: float
    k: float
    shift: float = 0.0


@dataclass(frozen=True)
class SolHillClosed:
    """S_exp(psi; 1) closed form (ExpHill with mu = 1)."""


def periodic_closed_constants(alpha1, alpha2, alpha3, k):
    """Constants (A, B) with R_up = 16(A+B) sin(k phi), R_down = 16(A-B) sin(k phi)."""
    if k == 0:
        raise BadInput("k must be nonzero")
    den = 3.0 * math.sinh(k * math.pi / SQRT2)
    a16 = k * math.pi * (-3.0 * alpha1 * k + alpha2 * (2.0 + k * k)) / den
    b16 = k * math.pi * 3.0 * SQRT2 * alpha3 / den
    return a16 / 16.0, b16 / 16.0


# odd Taylor coefficients of S_exp(psi; 1) at 0 (psi^1 ... psi^11)
_SOLHILL_SERIES = (8 / 105, -4 / 105, 13 / 2475, -4309 / 9459450,
                   631 / 20638800, -2213 / 1272348000)
_SERIES_CUT = 0.5


def _solhill_pos(psi):
    # psi > 0, written in q = exp(-psi) so that large psi does not overflow
    q = np.exp(-psi)
    num = ((3 * psi - 13) + 2 * (27 * psi - 47) * q + 126 * psi * q ** 2
           + 2 * (27 * psi + 47) * q ** 3 + (3 * psi + 13) * q ** 4)
    return -16.0 * q * num / (3.0 * (1.0 - q) ** 6)


def solhill_closed(psi):
    """S_exp(psi; 1).  Odd in psi; a Taylor branch is used for |psi| <= 0.5
    where the closed form loses digits to cancellation."""
    psi = np.asarray(psi)
    a = np.abs(psi)
    small = a <= _SERIES_CUT
    out = np.zeros(psi.shape, dtype=np.result_type(psi, float))
    if np.any(small):
        z = psi[small]
        z2 = z * z
        acc = np.zeros_like(z)
        for c in reversed(_SOLHILL_SERIES):
            acc = acc * z2 + c
        out[small] = z * acc
    big = ~small
    if np.any(big):
        z = psi[big]
        sgn = np.where(np.real(z) < 0, -1.0, 1.0)
        out[big] = sgn * _solhill_pos(sgn * z)
    return out if out.ndim else out[()]


def solhill_closed_deriv(psi):
    """dS/dpsi by complex-step differentiation of the closed form."""
    h = 1e-30
    return np.imag(solhill_closed(np.asarray(psi, dtype=complex) + 1j * h)) / h


# ---------------------------------------------------------------- evaluator

def _topo_window_centered(topo):
    # localized pieces sit at x = 0, so the integration window must cover it
    if isinstance(topo, (ExpHill, AlgHill)):
        return True
    if isinstance(topo, Mixed):
        return True
    return False


class MelnikovFn:
    """Evaluator for R_orientation(phi) and R'(phi).

    The Quadrature backend integrates in the weight frame for general forcing.
    For topographic forcing it integrates H'(x) W_h(x - phi) in the x-frame
    with a per-phi log scaling, so far-tail values do not underflow.
    """

    def __init__(self, forcing: Forcing, orientation=Orientation.UP, backend=None):
        self.forcing = forcing
        self.orientation = Orientation.parse(orientation)
        if backend is None:
            backend = _auto_backend(forcing)
        if isinstance(backend, PeriodicClosed) and not isinstance(forcing, (CosSinTriple, Zero)):
            if not (isinstance(forcing, TopographyDriven) and isinstance(forcing.topo, Sinusoid)):
                raise BadInput("PeriodicClosed backend needs a periodic triple forcing")
        if isinstance(backend, SolHillClosed):
            ok = (isinstance(forcing, TopographyDriven) and isinstance(forcing.topo, ExpHill)
                  and forcing.topo.mu == 1.0)
            if not ok:
                raise BadInput("SolHillClosed backend needs TopographyDriven(ExpHill(mu=1))")
        self.backend = backend

    @classmethod
    def closed_for(cls, forcing, orientation=Orientation.UP):
        """Closed-form evaluator when one exists, else the quadrature one."""
        return cls(forcing, orientation, _auto_backend(forcing))

    # -- public API
    def __call__(self, phi):
        return self.value(phi)

    def value(self, phi):
        return self._eval(phi)[0]

    def deriv(self, phi):
        return self._eval(phi)[1]

    def both(self, phi):
        return self._eval(phi)

    def log_both(self, phi):
        """(sign R, log|R|, sign R', log|R'|), robust to underflow in the tails."""
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if isinstance(self.backend, Quadrature) and isinstance(self.forcing, TopographyDriven):
            return self._topo_quad(phi, log=True)
        r, d = self._eval(phi)
        r = np.atleast_1d(r)
        d = np.atleast_1d(d)
        with np.errstate(divide="ignore"):
            return np.sign(r), np.log(np.abs(r)), np.sign(d), np.log(np.abs(d))

    @property
    def period(self):
        if isinstance(self.forcing, CosSinTriple):
            return 2 * math.pi / abs(self.forcing.k)
        if isinstance(self.forcing, TopographyDriven):
            return self.forcing.topo.period
        return None

    # -- dispatch
    def _eval(self, phi):
        phi_arr = np.asarray(phi, dtype=float)
        scalar = phi_arr.ndim == 0
        p = np.atleast_1d(phi_arr)
        b = self.backend
        if isinstance(self.forcing, Zero):
            r = np.zeros_like(p)
            d = np.zeros_like(p)
        elif isinstance(b, PeriodicClosed):
            c = 16.0 * (b.A + self.orientation.sign * b.B)
            r = c * np.sin(b.k * (p + b.shift))
            d = c * b.k * np.cos(b.k * (p + b.shift))
        elif isinstance(b, SolHillClosed):
            psi = SQRT2 * p
            r = solhill_closed(psi)
            d = SQRT2 * solhill_closed_deriv(psi)
        elif isinstance(self.forcing, TopographyDriven):
            r, d = self._topo_quad(p, log=False)
        else:
            r, d = self._weight_frame_quad(p)
        if scalar:
            return float(r[0]), float(d[0])
        return r.reshape(phi_arr.shape), d.reshape(phi_arr.shape)

    def _check(self, info, err, scale):
        b = self.backend
        if info.status != 0 and np.max(err) > 1e3 * (b.abs_tol + b.rel_tol * scale):
            raise QuadratureNotConverged(f"Melnikov quadrature: {info.message} (err {err:.2e})")

    def _weight_frame_quad(self, p):
        b = self.backend
        s = self.orientation.sign
        f = self.forcing
        hw = b.half_width
        n = p.size

        def integrand(y):
            uh = s * np.tanh(y / SQRT2)
            vh = s * (SQRT2 / 2.0) * sech2(y / SQRT2)
            x = y + p
            fval = f.eval(uh, vh, x)
            _, _, fx = f.partials(uh, vh, x)
            return np.concatenate([fval * vh, fx * vh])

        res, err, info = quad_vec(integrand, -hw, hw, epsabs=b.abs_tol, epsrel=b.rel_tol,
                                  norm="max", points=np.arange(-hw + 4, hw, 4.0),
                                  full_output=True, limit=20000)
        self._check(info, err, np.max(np.abs(res)) if res.size else 0.0)
        return res[:n], res[n:]

    def _topo_quad(self, p, log):
        b = self.backend
        topo = self.forcing.topo
        hw = b.half_width
        if _topo_window_centered(topo):
            lo = np.minimum(p, 0.0) - hw
            hi = np.maximum(p, 0.0) + hw
        else:
            lo = p - hw
            hi = p + hw
        width = hi - lo

        # per-phi log scale from a coarse sample of the integrands
        m = max(801, int(np.max(width) / 0.25) + 1)
        t = np.linspace(0.0, 1.0, m)
        xs = lo[:, None] + t[None, :] * width[:, None]
        lw = log_weight_Wh(xs - p[:, None])
        _, l1 = topo.log_dh(xs)
        _, l2 = topo.log_d2h(xs)
        c1 = np.max(np.where(np.isfinite(l1 + lw), l1 + lw, -np.inf), axis=1)
        c2 = np.max(np.where(np.isfinite(l2 + lw), l2 + lw, -np.inf), axis=1)
        c1 = np.where(np.isfinite(c1), c1, 0.0)
        c2 = np.where(np.isfinite(c2), c2, 0.0)
        if not log:
            c1 = np.zeros_like(c1)
            c2 = np.zeros_like(c2)
        n = p.size

        def integrand(tt):
            x = lo + tt * width
            lw_ = log_weight_Wh(x - p)
            s1, l1_ = topo.log_dh(x)
            s2, l2_ = topo.log_d2h(x)
            with np.errstate(invalid="ignore"):
                v1 = np.where(s1 == 0, 0.0, s1 * np.exp(l1_ + lw_ - c1))
                v2 = np.where(s2 == 0, 0.0, s2 * np.exp(l2_ + lw_ - c2))
            return np.concatenate([v1 * width, v2 * width])

        # seed the adaptive mesh at the weight peak and the hill center
        pts = set(np.linspace(0.0, 1.0, 33)[1:-1])
        if n <= 16:
            for lo_i, w_i, p_i in zip(lo, width, p):
                for xc in (p_i, 0.0):
                    tc = (xc - lo_i) / w_i
                    if 0.0 < tc < 1.0:
                        pts.add(tc)
        res, err, info = quad_vec(integrand, 0.0, 1.0, epsabs=b.abs_tol, epsrel=b.rel_tol,
                                  norm="max", points=sorted(pts), full_output=True,
                                  limit=20000)
        self._check(info, err, np.max(np.abs(res)))
        r, d = res[:n], res[n:]
        if not log:
            return r, d
        with np.errstate(divide="ignore"):
            return np.sign(r), np.log(np.abs(r)) + c1, np.sign(d), np.log(np.abs(d)) + c2


def _auto_backend(forcing):
    if isinstance(forcing, CosSinTriple):
        A, B = periodic_closed_constants(forcing.alpha1, forcing.alpha2,
                                         forcing.alpha3, forcing.k)
        return PeriodicClosed(A, B, forcing.k)
    if isinstance(forcing, TopographyDriven) and isinstance(forcing.topo, Sinusoid):
        return _sinusoid_backend(forcing.topo)
    return Quadrature()


def _sinusoid_backend(topo: Sinusoid) -> PeriodicClosed:
    # H = a sin kx equals the cos/sin triple (-a k^2, -a k, 0) after a quarter
    # period shift, which gives R = 2 pi a k^2 (1 - k^2) cos(k phi) / (3 sinh(pi k / sqrt2))
    a, k = topo.amplitude, topo.k
    a16 = 2.0 * math.pi * a * k * k * (1.0 - k * k) / (3.0 * math.sinh(math.pi * k / SQRT2))
    return PeriodicClosed(a16 / 16.0, 0.0, k, math.pi / (2.0 * k))


def melnikov(fn: MelnikovFn, phi):
    return fn.value(phi)


def melnikov_deriv(fn: MelnikovFn, phi):
    return fn.deriv(phi)


# ------------------------------------------------------------ tail models

@dataclass(frozen=True)
class ExponentialTail:
    mu: float
    h_plus: float
    h_minus: float
    w_plus: Optional[float]
    w_minus: Optional[float]
    hhat_plus: Optional[float] = None
    hhat_minus: Optional[float] = None


@dataclass(frozen=True)
class AlgebraicTail:
    p: float
    htilde_plus: float
    htilde_minus: float

    def limit_constant(self, side=+1):
        h = self.htilde_plus if side > 0 else self.htilde_minus
        return (2.0 ** ((self.p + 3.0) / 2.0) / 3.0) * h


def weight_moment(mu, side=+1):
    """w_+-(mu) = int exp(-+ mu sqrt2 y) W_h(y) dy, finite for 0 < mu < 1."""
    if not 0 < mu < 1:
        raise DivergentIntegral(f"w(mu) diverges for mu = {mu}")
    s = float(side)

    def f(y):
        return math.exp(-s * mu * SQRT2 * y + float(log_weight_Wh(y))) if y != 0 else 0.0

    # the integrand decays like exp(-(1-mu) sqrt2 |y|) on the growing side
    L = 60.0 / ((1.0 - mu) * SQRT2) + 40.0
    v1, e1 = quad(f, -L, 0.0, epsabs=0, epsrel=1e-12, limit=500)
    v2, e2 = quad(f, 0.0, L, epsabs=0, epsrel=1e-12, limit=500)
    return v1 + v2


def tail_constants_exponential(topo, mu=None) -> ExponentialTail:
    if not isinstance(topo, ExpHill):
        raise BadInput("exponential tail constants are available for ExpHill")
    mu = topo.mu if mu is None else mu
    hp = -4.0 * SQRT2 * mu * topo.sign
    hm = 4.0 * SQRT2 * mu * topo.sign
    if 0 < mu < 1:
        return ExponentialTail(mu, hp, hm, weight_moment(mu, +1), weight_moment(mu, -1))
    if mu > 1:
        def g(z, s):
            return math.exp(s * SQRT2 * z) * float(topo.dh(z))
        L = 60.0 / ((mu - 1.0) * SQRT2) + 20.0
        hhp = 4.0 * quad(g, -L, L, args=(1.0,), epsrel=1e-12, limit=500, points=[0.0])[0]
        hhm = 4.0 * quad(g, -L, L, args=(-1.0,), epsrel=1e-12, limit=500, points=[0.0])[0]
        return ExponentialTail(mu, hp, hm, None, None, hhp, hhm)
    return ExponentialTail(mu, hp, hm, None, None)


def tail_constants_algebraic(topo, p=None) -> AlgebraicTail:
    if not isinstance(topo, AlgHill):
        raise BadInput("algebraic tail constants are available for AlgHill")
    p = topo.p if p is None else p
    return AlgebraicTail(p, (1.0 - p) * topo.sign, -(1.0 - p) * topo.sign)


# -------------------------------------------------------------- zero scans

class ZeroList(list):
    """List of (phi_star, R'(phi_star)); `degenerate` marks R identically zero."""

    degenerate = False


def melnikov_zero_scan(fn: MelnikovFn, phi_min, phi_max, n=1201, tol=1e-10):
    if n < 2:
        raise BadInput("need n >= 2")
    phis = np.linspace(phi_min, phi_max, n)
    r = np.atleast_1d(fn.value(phis))
    out = ZeroList()
    scale = np.max(np.abs(r))
    if scale < 1e-14:
        out.degenerate = True
        return out
    zeros = []
    f = lambda t: float(fn.value(t))
    for i in range(n - 1):
        a, b = phis[i], phis[i + 1]
        ra, rb = r[i], r[i + 1]
        if ra == 0.0:
            zeros.append(a)
        elif ra * rb < 0:
            fa, fb = f(a), f(b)
            if fa == 0.0 or fb == 0.0 or fa * fb > 0:
                # sign change at roundoff level: keep the smaller endpoint
                zeros.append(a if abs(fa) <= abs(fb) else b)
            else:
                zeros.append(brentq(f, a, b, xtol=1e-14, rtol=1e-15, maxiter=200))
    if r[-1] == 0.0:
        zeros.append(phis[-1])
    zeros = [z for i, z in enumerate(zeros) if i == 0 or abs(z - zeros[i - 1]) > 1e-8]
    for z in zeros:
        val, der = fn.both(z)
        if der != 0 and abs(val) > 0:
            z2 = z - val / der
            v2, d2 = fn.both(z2)
            if abs(v2) <= abs(val):
                z, val, der = z2, v2, d2
        if abs(val) > tol * max(1.0, scale):
            continue
        out.append((float(z), float(der)))
    return out


def pitchfork_mu(lo=0.5, hi=0.9, xtol=1e-9):
    """mu at which R'(0) of the ExpHill family changes sign."""
    def rp0(mu):
        topo = ExpHill(mu)
        # R'(0) = int H''(y) W_h(y) dy, even integrand
        f = lambda y: float(topo.d2h(y) * weight_Wh(y))
        L = 40.0 + 40.0 / mu
        return 2.0 * quad(f, 0.0, L, epsabs=1e-15, epsrel=1e-13, limit=500)[0]

    a, b = rp0(lo), rp0(hi)
    if a * b > 0:
        raise RootNotBracketed(f"R'(0) has the same sign at mu = {lo} and {hi}")
    return brentq(rp0, lo, hi, xtol=xtol)


# --------------------------------------------------------------- caching

class CachedMelnikov:
    """Memoized R, R' on a fine phi grid with cubic Hermite interpolation.

    Blocks of `block` grid cells are computed on demand.  Closed-form backends
    bypass the cache.
    """

    def __init__(self, fn: MelnikovFn, h=1e-3, block=1000):
        self.fn = fn
        self.h = h
        self.block = block
        self._blocks = {}
        self.bypass = not isinstance(fn.backend, Quadrature) or isinstance(fn.forcing, Zero)

    @property
    def forcing(self):
        return self.fn.forcing

    @property
    def orientation(self):
        return self.fn.orientation

    @property
    def backend(self):
        return self.fn.backend

    def _spline(self, key):
        sp = self._blocks.get(key)
        if sp is None:
            x = (key * self.block + np.arange(self.block + 1)) * self.h
            r, d = self.fn.both(x)
            sp = CubicHermiteSpline(x, r, d)
            self._blocks[key] = sp
        return sp

    def both(self, phi):
        if self.bypass:
            return self.fn.both(phi)
        phi_arr = np.asarray(phi, dtype=float)
        flat = np.atleast_1d(phi_arr).ravel()
        keys = np.floor(flat / (self.h * self.block)).astype(np.int64)
        r = np.empty_like(flat)
        d = np.empty_like(flat)
        for key in np.unique(keys):
            sel = keys == key
            sp = self._spline(int(key))
            r[sel] = sp(flat[sel])
            d[sel] = sp(flat[sel], 1)
        if phi_arr.ndim == 0:
            return float(r[0]), float(d[0])
        return r.reshape(phi_arr.shape), d.reshape(phi_arr.shape)

    def value(self, phi):
        return self.both(phi)[0]

    def deriv(self, phi):
        return self.both(phi)[1]

    __call__ = value

    def log_both(self, phi):
        return self.fn.log_both(phi)


def write_melnikov_csv(path, phi, r, rp):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "R", "Rprime"])
        for row in zip(np.ravel(phi), np.ravel(r), np.ravel(rp)):
            w.writerow([repr(float(v)) for v in row])
