"""Reduced N-front interaction ODE: rhs, potential, Jacobian and integration."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .core import NORM_UPRIME2, SQRT2, Orientation, alternating_orientations
from .errors import BadInput, NonMonotonePositions, StepSizeUnderflow
from .forcing import Zero
from .melnikov import CachedMelnikov, MelnikovFn, PeriodicClosed, SolHillClosed

C_NORM = 1.0 / NORM_UPRIME2


@dataclass(frozen=True)
class FrontState:
    positions: np.ndarray
    first: Orientation = Orientation.UP
    eps: float = 0.1

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.positions, dtype=float)).copy()
        if p.ndim != 1 or p.size < 1:
            raise BadInput("need at least one front")
        if np.any(np.diff(p) <= 0):
            raise NonMonotonePositions("front positions must be strictly increasing")
        if not 0 <= self.eps < 1:
            raise BadInput("eps must lie in [0, 1)")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "first", Orientation.parse(self.first))

    @property
    def n(self):
        return self.positions.size

    @property
    def orientations(self):
        return alternating_orientations(self.first, self.n)

    def with_positions(self, p):
        return FrontState(p, self.first, self.eps)


@dataclass(frozen=True)
class AnchorScheme:
    """phi_j = p_j |log eps| / sqrt2 + ell_j."""

    p: np.ndarray
    ell: np.ndarray

    @classmethod
    def from_positions(cls, positions, eps, p):
        scale = abs(math.log(eps)) / SQRT2
        p = np.asarray(p, dtype=float)
        return cls(p, np.asarray(positions, dtype=float) - p * scale)

    def positions(self, eps):
        return self.p * abs(math.log(eps)) / SQRT2 + self.ell


@dataclass
class FrontTrajectory:
    times: list
    positions: list
    first: Orientation
    eps: float
    events: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    def states(self):
        return [FrontState(p, self.first, self.eps) for p in self.positions]

    @property
    def final(self):
        return FrontState(self.positions[-1], self.first, self.eps)

    def to_csv(self, path):
        nmax = max(len(p) for p in self.positions)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"phi_{j + 1}" for j in range(nmax)])
            for t, p in zip(self.times, self.positions):
                row = [repr(float(t))] + [repr(float(v)) for v in p]
                w.writerow(row + [""] * (nmax - len(p)))

    def events_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "kind", "i", "j"])
            for ev in self.events:
                i, j = (list(ev["indices"]) + ["", ""])[:2]
                w.writerow([repr(float(ev["time"])), ev["kind"], i, j])


def _pick(s: FrontState, mel_up, mel_down):
    return [mel_up if o is Orientation.UP else mel_down for o in s.orientations]


def _melnikov_by_region(s, mel_up, mel_down):
    """R_j(phi_j) and R'_j(phi_j) using the orientation of each front."""
    ors = np.array([o.sign for o in s.orientations])
    p = s.positions
    r = np.empty_like(p)
    d = np.empty_like(p)
    for sign, mel in ((1, mel_up), (-1, mel_down)):
        sel = ors == sign
        if np.any(sel):
            rr, dd = mel.both(p[sel])
            r[sel] = rr
            d[sel] = dd
    return r, d


def interaction_terms(positions):
    """e^{-sqrt2 (phi_{j+1} - phi_j)} for each neighbouring pair."""
    return np.exp(-SQRT2 * np.diff(positions))


def nfront_rhs(s: FrontState, mel_up, mel_down=None):
    """d phi_j / dt of the reduced N-front system."""
    mel_down = mel_up if mel_down is None else mel_down
    r, _ = _melnikov_by_region(s, mel_up, mel_down)
    e = interaction_terms(s.positions)
    push = np.zeros(s.n)
    # outer fronts have no neighbour: exact zero contribution
    push[:-1] += e
    push[1:] -= e
    return C_NORM * (-s.eps * r + 16.0 * push)


def jacobian(s: FrontState, mel_up, mel_down=None):
    mel_down = mel_up if mel_down is None else mel_down
    _, d = _melnikov_by_region(s, mel_up, mel_down)
    e = 16.0 * SQRT2 * interaction_terms(s.positions)
    J = np.diag(-s.eps * d)
    for j in range(s.n - 1):
        J[j, j] += e[j]
        J[j, j + 1] -= e[j]
        J[j + 1, j] -= e[j]
        J[j + 1, j + 1] += e[j]
    return C_NORM * J


def melnikov_antiderivative(mel, phi):
    """int_0^phi R(s) ds for closed-form, cached or quadrature evaluators."""
    if isinstance(mel.forcing, Zero):
        return 0.0
    b = mel.backend
    if isinstance(b, PeriodicClosed):
        c = 16.0 * (b.A + mel.orientation.sign * b.B)
        return c * (math.cos(b.k * b.shift) - math.cos(b.k * (phi + b.shift))) / b.k
    if isinstance(mel, CachedMelnikov) and not mel.bypass:
        width = mel.h * mel.block
        lo, hi = (0.0, phi) if phi >= 0 else (phi, 0.0)
        total = 0.0
        key = math.floor(lo / width)
        while key * width < hi:
            a = max(lo, key * width)
            bb = min(hi, (key + 1) * width)
            total += float(mel._spline(key).integrate(a, bb))
            key += 1
        return total if phi >= 0 else -total
    v, _ = quad(lambda t: float(mel.value(t)), 0.0, phi, epsabs=1e-13, epsrel=1e-11, limit=200)
    return v


def nfront_potential(s: FrontState, mel_up, mel_down=None):
    """Potential V with rhs = -grad V."""
    mel_down = mel_up if mel_down is None else mel_down
    forcing_part = sum(melnikov_antiderivative(m, p)
                       for m, p in zip(_pick(s, mel_up, mel_down), s.positions))
    inter = np.sum(interaction_terms(s.positions))
    return C_NORM * (s.eps * forcing_part - 8.0 * SQRT2 * inter)


def rescaled_rhs_topographic(psi, S, eps):
    """d psi_j / d tau with psi = sqrt2 phi and tau = sqrt2 t / |u'|^2."""
    psi = np.asarray(psi, dtype=float)
    r = np.atleast_1d(S.value(psi / SQRT2))
    e = np.exp(-np.diff(psi))
    push = np.zeros(psi.size)
    push[:-1] += e
    push[1:] -= e
    return -eps * r + 16.0 * push


# ------------------------------------------------------------- integration

@dataclass
class Controls:
    atol: float = 1e-10
    rtol: float = 1e-8
    delta_min: float = 2.0
    merge: bool = False
    h0: float | None = None
    h_max: float = np.inf
    max_steps: int = 2_000_000
    domain: tuple | None = None
    record_every: float = 0.0
    track_energy: bool = False


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(f, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def integrate(s0: FrontState, t_end, mel_up, mel_down=None, controls: Controls | None = None):
    """Dormand-Prince RK45 with PI step control.

    Stops with a TooClose event when a separation drops below delta_min; with
    merge=True the colliding pair is deleted and integration resumes.
    LeftDomain events stop the run when a front crosses controls.domain.
    """
    if t_end <= 0:
        raise BadInput("t_end must be positive")
    ctl = controls or Controls()
    mel_down = mel_up if mel_down is None else mel_down
    first = s0.first
    eps = s0.eps
    y = s0.positions.copy()
    t = 0.0
    traj = FrontTrajectory([0.0], [y.copy()], first, eps)

    def rhs(p):
        return nfront_rhs(_raw_state(p, first, eps), mel_up, mel_down)

    def energy(p):
        return nfront_potential(_raw_state(p, first, eps), mel_up, mel_down)

    if ctl.track_energy:
        traj.energies.append(energy(y))

    def too_close(p):
        if p.size < 2:
            return None
        d = np.diff(p)
        j = int(np.argmin(d))
        return j if d[j] < ctl.delta_min else None

    j = too_close(y)
    if j is not None:
        traj.events.append({"time": 0.0, "kind": "TooClose", "indices": (j, j + 1)})
        if not ctl.merge:
            return traj

    k1 = rhs(y)
    h = ctl.h0 or _initial_step(rhs, y, k1, ctl)
    err_prev = 1.0
    last_rec = 0.0
    steps = 0
    while t < t_end:
        steps += 1
        if steps > ctl.max_steps:
            raise StepSizeUnderflow(f"exceeded {ctl.max_steps} steps at t = {t:g}")
        h = min(h, t_end - t, ctl.h_max)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step size {h:g} underflow at t = {t:g}")
        y_new, err, k_last = _dp_step(rhs, y, h, k1)
        sc = ctl.atol + ctl.rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / sc) ** 2))) if y.size else 0.0
        if en <= 1.0 and np.all(np.diff(y_new) > 0):
            t += h
            y = y_new
            k1 = k_last
            # PI controller (Gustafsson): exponents 0.7/5 and 0.4/5
            fac = 0.9 * max(en, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            err_prev = max(en, 1e-4)
            if ctl.record_every <= 0 or t - last_rec >= ctl.record_every or t >= t_end:
                traj.times.append(t)
                traj.positions.append(y.copy())
                last_rec = t
                if ctl.track_energy:
                    traj.energies.append(energy(y))
            if ctl.domain is not None and (y[0] < ctl.domain[0] or y[-1] > ctl.domain[1]):
                idx = tuple(int(i) for i in np.nonzero((y < ctl.domain[0]) | (y > ctl.domain[1]))[0])
                traj.events.append({"time": t, "kind": "LeftDomain", "indices": idx})
                _ensure_recorded(traj, t, y, ctl, energy)
                return traj
            j = too_close(y)
            if j is not None:
                traj.events.append({"time": t, "kind": "TooClose", "indices": (j, j + 1)})
                _ensure_recorded(traj, t, y, ctl, energy)
                if not ctl.merge:
                    return traj
                y = np.delete(y, [j, j + 1])
                traj.events[-1]["merged"] = True
                if y.size == 0:
                    return traj
                traj.times.append(t)
                traj.positions.append(y.copy())
                if ctl.track_energy:
                    traj.energies.append(energy(y))
                k1 = rhs(y)
                err_prev = 1.0
        elif en <= 1.0 or not np.isfinite(en):
            # fronts crossed within the step
            h *= 0.5
        else:
            h *= max(0.2, 0.9 * en ** (-1 / 5))
    return traj


def _ensure_recorded(traj, t, y, ctl, energy):
    if traj.times[-1] != t:
        traj.times.append(t)
        traj.positions.append(y.copy())
        if ctl.track_energy:
            traj.energies.append(energy(y))


def _raw_state(p, first, eps):
    # bypass validation inside the stepper; ordering is checked on acceptance
    s = object.__new__(FrontState)
    object.__setattr__(s, "positions", p)
    object.__setattr__(s, "first", first)
    object.__setattr__(s, "eps", eps)
    return s


def _initial_step(f, y, f0, ctl):
    sc = ctl.atol + ctl.rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * f0
    d2 = np.sqrt(np.mean(((f(y1) - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)
