"""First-order expansion of the manifolds of the background states and the
lobe geometry of their sections on a fixed-x plane."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import SQRT2, Orientation, sech2
from .errors import BadInput, OutsideValidityWindow
from .forcing import Forcing, Zero

TAIL = 40.0
_GX, _GW = np.polynomial.legendre.leggauss(16)


class B0Choice(Enum):
    BOUNDED_LEFT = "left"
    BOUNDED_RIGHT = "right"


class Which(Enum):
    WU_MINUS = "Wu_minus"
    WS_MINUS = "Ws_minus"
    WU_PLUS = "Wu_plus"
    WS_PLUS = "Ws_plus"

    @classmethod
    def parse(cls, v):
        if isinstance(v, cls):
            return v
        for w in cls:
            if w.value.lower() == str(v).lower():
                return w
        raise BadInput(f"unknown manifold {v!r}")

    @property
    def base(self):
        # Wu(M-) and Ws(M+) follow the up front, the others the down front
        return Orientation.UP if self in (Which.WU_MINUS, Which.WS_PLUS) else Orientation.DOWN

    @property
    def b0(self):
        return B0Choice.BOUNDED_LEFT if self in (Which.WU_MINUS, Which.WU_PLUS) \
            else B0Choice.BOUNDED_RIGHT


def _v(s):
    return 0.75 * s + SQRT2 / 2 * np.sinh(SQRT2 * s) + SQRT2 / 16 * np.sinh(2 * SQRT2 * s)


def psi_b(x, phi, orientation=Orientation.UP):
    """Bounded solution u_h'; (sqrt2/2) sech^2 for the up front."""
    o = Orientation.parse(orientation)
    return o.sign * SQRT2 / 2 * sech2((np.asarray(x, dtype=float) - phi) / SQRT2)


def psi_b_x(x, phi, orientation=Orientation.UP):
    o = Orientation.parse(orientation)
    s = (np.asarray(x, dtype=float) - phi) / SQRT2
    return -o.sign * np.tanh(s) * sech2(s)


def psi_u(x, phi, orientation=Orientation.UP):
    """Unbounded solution v Psi_b with unit Wronskian."""
    s = np.asarray(x, dtype=float) - phi
    return _v(s) * psi_b(x, phi, orientation)


def psi_u_x(x, phi, orientation=Orientation.UP):
    s = np.asarray(x, dtype=float) - phi
    return _v(s) * psi_b_x(x, phi, orientation) + 1.0 / psi_b(x, phi, orientation)


def _gl(f, a, b, panels):
    """Composite Gauss-Legendre of f over [a_i, b_i] for arrays a, b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    e = np.linspace(0.0, 1.0, panels + 1)
    t = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * (e[1:, None] - e[:-1, None]) * _GX).ravel()
    w = (0.5 * (e[1:, None] - e[:-1, None]) * _GW).ravel()
    z = a[:, None] + (b - a)[:, None] * t[None, :]
    return (f(z) * w[None, :]).sum(axis=1) * (b - a)


def _panels(a, b):
    return int(min(400, max(16, math.ceil(np.max(np.abs(np.asarray(b) - np.asarray(a))) * 3))))


@dataclass
class Expansion1:
    phi: float
    orientation: Orientation
    b0: B0Choice
    B_minus: float
    B_plus: float
    x: np.ndarray
    A: np.ndarray
    B: np.ndarray


def _forcing_on_base(f, phi, o):
    def F(z):
        s = (z - phi) / SQRT2
        u = o.sign * np.tanh(s)
        p = o.sign * SQRT2 / 2 * sech2(s)
        return f.eval(u, p, z)
    return F


def _AB(f: Forcing, phi, o, b0, x):
    """A(x; phi), B(x; phi) for vectors phi and x (same shape)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), phi.shape)
    if isinstance(f, Zero):
        z = np.zeros_like(phi)
        return z, z.copy(), z.copy()
    P = phi[:, None]

    def F(z):
        s = (z - P) / SQRT2
        u = o.sign * np.tanh(s)
        p = o.sign * SQRT2 / 2 * sech2(s)
        return f.eval(u, p, z)

    def Fb(z):
        return F(z) * o.sign * SQRT2 / 2 * sech2((z - P) / SQRT2)

    def Fu(z):
        return Fb(z) * _v(z - P)

    A = _gl(Fu, phi, x, _panels(phi, x))
    total = _gl(Fb, phi - TAIL, phi + TAIL, _panels(phi - TAIL, phi + TAIL))
    if b0 is B0Choice.BOUNDED_LEFT:
        B = -_gl(Fb, phi - TAIL, x, _panels(phi - TAIL, x))
    else:
        B = _gl(Fb, x, phi + TAIL, _panels(x, phi + TAIL))
    return A, B, total


def validity_half_width(eps):
    return abs(math.log(eps)) / (2 * SQRT2) + 1.0 if eps > 0 else math.inf


def _in_window(x, phi, b0, eps):
    w = validity_half_width(eps)
    s = np.asarray(x, dtype=float) - phi
    return s <= w if b0 is B0Choice.BOUNDED_LEFT else -s <= w


def expansion(f: Forcing, phi, orientation, b0, x) -> Expansion1:
    o = Orientation.parse(orientation)
    b0 = B0Choice(b0) if not isinstance(b0, B0Choice) else b0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A, B, total = _AB(f, np.full_like(x, phi), o, b0, x)
    total = float(total[0]) if np.ndim(total) else float(total)
    if b0 is B0Choice.BOUNDED_LEFT:
        bm, bp = 0.0, -total
    else:
        bm, bp = total, 0.0
    return Expansion1(float(phi), o, b0, bm, bp, x, A, B)


def first_order_correction(f: Forcing, phi, orientation, b0_choice, x, eps=None):
    """u1 and u1_x at x for the front centered at phi."""
    o = Orientation.parse(orientation)
    b0 = B0Choice(b0_choice) if not isinstance(b0_choice, B0Choice) else b0_choice
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if eps is not None and not np.all(_in_window(x, phi, b0, eps)):
        warnings.warn("x lies outside the validity window of the first-order expansion",
                      OutsideValidityWindow, stacklevel=2)
    A, B, _ = _AB(f, np.full_like(x, phi), o, b0, x)
    u1 = A * psi_b(x, phi, o) + B * psi_u(x, phi, o)
    u1x = A * psi_b_x(x, phi, o) + B * psi_u_x(x, phi, o)
    return u1, u1x


@dataclass
class ManifoldSection:
    curve: np.ndarray
    phi: np.ndarray
    which: Which
    section_x: float
    eps: float
    forcing: Forcing
    in_window: np.ndarray

    def point(self, phi):
        return section_points(self.forcing, self.eps, self.which, self.section_x, phi)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "u", "p", "in_window"])
            for ph, (u, p), ok in zip(self.phi, self.curve, self.in_window):
                w.writerow([repr(float(ph)), repr(float(u)), repr(float(p)), int(ok)])


def section_points(f, eps, which, section_x, phi):
    which = Which.parse(which)
    o, b0 = which.base, which.b0
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    x0 = np.full_like(phi, section_x)
    s = (x0 - phi) / SQRT2
    uh = o.sign * np.tanh(s)
    ph = o.sign * SQRT2 / 2 * sech2(s)
    if eps == 0 or isinstance(f, Zero):
        return np.column_stack([uh, ph])
    A, B, _ = _AB(f, phi, o, b0, x0)
    u1 = A * psi_b(x0, phi, o) + B * psi_u(x0, phi, o)
    u1x = A * psi_b_x(x0, phi, o) + B * psi_u_x(x0, phi, o)
    return np.column_stack([uh + eps * u1, ph + eps * u1x])


def manifold_section(f: Forcing, eps, which, section_x=0.0, phi_range=(-5.0, 5.0),
                     n=1001) -> ManifoldSection:
    which = Which.parse(which)
    if n < 2:
        raise BadInput("need at least two samples")
    phi = np.linspace(phi_range[0], phi_range[1], n)
    pts = section_points(f, eps, which, section_x, phi)
    return ManifoldSection(pts, phi, which, float(section_x), float(eps), f,
                           _in_window(section_x, phi, which.b0, eps))


def _segment_hits(P, Q):
    out = []
    q = Q[:-1]
    s = Q[1:] - q
    for i in range(len(P) - 1):
        p = P[i]
        r = P[i + 1] - p
        den = r[0] * s[:, 1] - r[1] * s[:, 0]
        with np.errstate(all="ignore"):
            t = ((q[:, 0] - p[0]) * s[:, 1] - (q[:, 1] - p[1]) * s[:, 0]) / den
            u = ((q[:, 0] - p[0]) * r[1] - (q[:, 1] - p[1]) * r[0]) / den
        for j in np.nonzero((t >= 0) & (t < 1) & (u >= 0) & (u < 1))[0]:
            out.append((i, int(j), float(t[j]), float(u[j])))
    return out


def lobe_intersections(a: ManifoldSection, b: ManifoldSection, newton_tol=1e-12):
    """Transverse intersections of two section curves as (phi_a, phi_b, point)."""
    if a.section_x != b.section_x or a.eps != b.eps:
        raise BadInput("sections must share section_x and eps")
    hits = _segment_hits(a.curve, b.curve)
    out = []
    for i, j, t, u in hits:
        x = np.array([a.phi[i] + t * (a.phi[i + 1] - a.phi[i]),
                      b.phi[j] + u * (b.phi[j + 1] - b.phi[j])])
        for _ in range(30):
            h = 1e-6
            pa = a.point(np.array([x[0], x[0] + h, x[0] - h]))
            pb = b.point(np.array([x[1], x[1] + h, x[1] - h]))
            r = pa[0] - pb[0]
            J = np.column_stack([(pa[1] - pa[2]) / (2 * h), -(pb[1] - pb[2]) / (2 * h)])
            try:
                dx = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                break
            x = x + dx
            if np.max(np.abs(dx)) < newton_tol:
                break
        pt = a.point(np.array([x[0]]))[0]
        if any(abs(x[0] - o[0]) < 1e-7 and abs(x[1] - o[1]) < 1e-7 for o in out):
            continue
        out.append((float(x[0]), float(x[1]), pt))
    return out


def _count(family, p, eps, section_x, phi_range, n):
    f = family(p)
    a = manifold_section(f, eps, Which.WU_MINUS, section_x, phi_range, n)
    b = manifold_section(f, eps, Which.WS_MINUS, section_x, phi_range, n)
    return lobe_intersections(a, b)


def bifurcation_scan(family, eps, params, section_x=0.0, phi_range=(-5.0, 5.0), n=601,
                     bisect_tol=1e-5):
    """Parameter values where the Wu/Ws(M-) intersection count changes.

    `family` maps the parameter to a Forcing; `params` is a monotone grid.
    A 0 -> 2 change is a saddle-node.  A 2 -> 4 change is a pitchfork when the
    new pair is born on top of an existing intersection, else a saddle-node.
    """
    params = np.asarray(params, dtype=float)
    d = np.diff(params)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise BadInput("parameter grid must be monotone")
    hits = [_count(family, p, eps, section_x, phi_range, n) for p in params]
    out = []
    for k in range(len(params) - 1):
        c0, c1 = len(hits[k]), len(hits[k + 1])
        if c0 == c1:
            continue
        a, b = params[k], params[k + 1]
        ha, hb = hits[k], hits[k + 1]
        while abs(b - a) > bisect_tol:
            m = 0.5 * (a + b)
            hm = _count(family, m, eps, section_x, phi_range, n)
            if len(hm) == c0:
                a, ha = m, hm
            else:
                b, hb = m, hm
        label = _label(ha, hb)
        # counts from the grid; near a tangency the polyline may resolve
        # only one of the two new crossings
        out.append({"param": 0.5 * (a + b), "count_before": c0, "count_after": c1,
                    "label": label})
    return out


def _label(before, after):
    if len(after) <= len(before):
        return "reverse"
    if not before:
        return "SN"
    old = np.array([[h[0], h[1]] for h in before])
    new = np.array([[h[0], h[1]] for h in after])
    # points of `after` without a partner in `before`
    dist_new = [np.min(np.hypot(*(old - q).T)) for q in new]
    order = np.argsort(dist_new)[::-1]
    fresh = new[order[:len(after) - len(before)]]
    mid = fresh.mean(axis=0)
    spread = np.max(np.hypot(*(fresh - mid).T)) + 1e-12
    near = np.min(np.hypot(*(old - mid).T))
    return "PF" if near < 3 * spread + 1e-3 else "SN"
