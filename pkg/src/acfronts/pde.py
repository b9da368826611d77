"""Method-of-lines integration of U_t = U_xx + U - U^3 + eps F, front
tracking, linear spectra and the homogeneous Evans function."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigvals, solve_banded
from scipy.sparse.linalg import eigs, spsolve

from .core import SQRT2, Field, Grid1D, Orientation
from .errors import BadInput, NaNDetected, NotConverged, OnBranchCut
from .forcing import Forcing, Zero

PIN_SPEED = 1e-5
PIN_FRAMES = 50


# ------------------------------------------------------------ discretization

def _ux(u, dx):
    ux = np.empty_like(u)
    ux[1:-1] = (u[2:] - u[:-2]) / (2 * dx)
    ux[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx)
    ux[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dx)
    return ux


def _uxx(u, dx):
    # mirrored ghost nodes give homogeneous Neumann conditions
    out = np.empty_like(u)
    out[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
    out[0] = 2 * (u[1] - u[0])
    out[-1] = 2 * (u[-2] - u[-1])
    return out / (dx * dx)


def _reaction(u, x, dx, forcing, eps):
    r = u - u ** 3
    if eps != 0 and not isinstance(forcing, Zero):
        r = r + eps * forcing.eval(u, _ux(u, dx), x)
    return r


def semidiscretize(u, forcing: Forcing, eps, grid: Grid1D | None = None) -> Field:
    """Time derivative of the semi-discrete system."""
    if isinstance(u, Field):
        grid, vals = u.grid, u.values
    else:
        if grid is None:
            raise BadInput("a raw array needs its grid")
        vals = np.asarray(u, dtype=float)
    if grid.n < 3:
        raise BadInput("need at least 3 grid points")
    return Field(grid, _uxx(vals, grid.dx) + _reaction(vals, grid.x, grid.dx, forcing, eps))


def linearization(u: Field, forcing: Forcing, eps):
    """Sparse Jacobian of the semi-discrete rhs at u."""
    g = u.grid
    n, dx = g.n, g.dx
    main = -2.0 * np.ones(n) / dx ** 2
    up = np.ones(n - 1) / dx ** 2
    lo = np.ones(n - 1) / dx ** 2
    up[0] = 2.0 / dx ** 2
    lo[-1] = 2.0 / dx ** 2
    L = sp.diags([lo, main, up], [-1, 0, 1], format="lil")
    diag = 1.0 - 3.0 * u.values ** 2
    if eps != 0 and not isinstance(forcing, Zero):
        fu, fv, _ = forcing.partials(u.values, _ux(u.values, dx), g.x)
        diag = diag + eps * fu
        c = eps * fv / (2 * dx)
        for i in range(1, n - 1):
            L[i, i + 1] += c[i]
            L[i, i - 1] -= c[i]
        L[0, 0] += -3 * c[0]
        L[0, 1] += 4 * c[0]
        L[0, 2] += -c[0]
        L[n - 1, n - 1] += 3 * c[-1]
        L[n - 1, n - 2] += -4 * c[-1]
        L[n - 1, n - 3] += c[-1]
    L = L.tocsc() + sp.diags(diag, 0, format="csc")
    return L.tocsc()


def steady_state_newton(u0: Field, forcing: Forcing, eps, tol=1e-11, maxit=30) -> Field:
    """Newton iteration on the discretized stationary problem."""
    u = u0.values.copy()
    g = u0.grid
    for _ in range(maxit):
        F = semidiscretize(Field(g, u), forcing, eps).values
        if np.max(np.abs(F)) < tol:
            return Field(g, u)
        J = linearization(Field(g, u), forcing, eps)
        du = spsolve(J, -F)
        if not np.all(np.isfinite(du)):
            raise NotConverged("singular linearization in steady-state Newton")
        u = u + du
    F = semidiscretize(Field(g, u), forcing, eps).values
    if np.max(np.abs(F)) < 1e3 * tol:
        return Field(g, u)
    raise NotConverged(f"steady-state Newton stalled at |rhs| = {np.max(np.abs(F)):.2e}")


# ------------------------------------------------------------ run types

@dataclass(frozen=True)
class ExplicitRK4:
    name = "rk4"


@dataclass(frozen=True)
class ImexTheta:
    theta: float = 0.5

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise BadInput("theta must lie in [0.5, 1]")


@dataclass
class PdeRunConfig:
    grid: Grid1D
    forcing: Forcing
    eps: float
    t_end: float
    ic: Field
    dt: float | None = None
    scheme: object = field(default_factory=ImexTheta)
    output_every: float = 1.0
    snapshot_every: float | None = None
    stop_when_settled: bool = False

    def __post_init__(self):
        if self.t_end <= 0:
            raise BadInput("t_end must be positive")
        if self.ic.grid != self.grid:
            raise BadInput("initial field lives on a different grid")
        if isinstance(self.scheme, ExplicitRK4):
            dt = self.resolved_dt()
            if dt * 2.0 / self.grid.dx ** 2 >= 1.0 and self.dt is None:
                raise BadInput("auto dt violates the explicit stability bound")

    def resolved_dt(self):
        if self.dt is not None:
            return float(self.dt)
        if isinstance(self.scheme, ExplicitRK4):
            return 0.2 * self.grid.dx ** 2
        return 0.1

    def to_dict(self):
        return {"x_min": self.grid.x_min, "x_max": self.grid.x_max, "n": self.grid.n,
                "forcing": self.forcing.spec(), "eps": self.eps, "t_end": self.t_end,
                "dt": self.resolved_dt(),
                "scheme": "rk4" if isinstance(self.scheme, ExplicitRK4)
                else f"imex:{self.scheme.theta}",
                "output_every": self.output_every}


@dataclass
class FrontTrack:
    id: int
    orientation: Orientation
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    alive: bool = True

    def speed(self):
        t = np.asarray(self.times)
        p = np.asarray(self.positions)
        if len(t) < 2:
            return np.zeros(0)
        return np.diff(p) / np.diff(t)


@dataclass
class PdeRunResult:
    config: PdeRunConfig
    times: np.ndarray
    snapshots: list
    snapshot_times: list
    tracks: list
    events: list
    final: Field

    def fronts_at_end(self):
        return [tr for tr in self.tracks if tr.alive]

    def annihilations(self):
        return [e for e in self.events if e["kind"] == "annihilation"]

    def pinned(self):
        return [e for e in self.events if e["kind"] == "pinned"]

    def max_final_speed(self, frames=PIN_FRAMES):
        v = [np.max(np.abs(tr.speed()[-frames:])) for tr in self.fronts_at_end()
             if len(tr.times) > 1]
        return max(v) if v else 0.0

    def track_array(self):
        """(times, positions) with NaN where a track is dead."""
        t = self.times
        P = np.full((len(t), len(self.tracks)), np.nan)
        for j, tr in enumerate(self.tracks):
            idx = np.searchsorted(t, tr.times)
            P[idx, j] = tr.positions
        return t, P

    def write(self, outdir):
        os.makedirs(os.path.join(outdir, "snapshots"), exist_ok=True)
        t, P = self.track_array()
        with open(os.path.join(outdir, "tracks.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["t"]
            for j, tr in enumerate(self.tracks):
                head += [f"phi_{j + 1}", f"orient_{j + 1}"]
            w.writerow(head)
            for i, ti in enumerate(t):
                row = [repr(float(ti))]
                for j, tr in enumerate(self.tracks):
                    row += ["" if np.isnan(P[i, j]) else repr(float(P[i, j])),
                            tr.orientation.name.lower()]
                w.writerow(row)
        with open(os.path.join(outdir, "events.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "kind", "i", "j"])
            for e in self.events:
                w.writerow([repr(e["t"]), e["kind"], e.get("i", ""), e.get("j", "")])
        x = self.config.grid.x
        for k, (ts, snap) in enumerate(zip(self.snapshot_times, self.snapshots)):
            np.savetxt(os.path.join(outdir, "snapshots", f"frame_{k:05d}.csv"),
                       np.column_stack([x, snap]), delimiter=",", header=f"x,u  t={ts!r}",
                       comments="")


# ------------------------------------------------------------ tracking

def track_fronts(u: Field):
    """Zero crossings with linear interpolation; clusters closer than 3 dx
    collapse to one front (odd size) or vanish (even size)."""
    x, v = u.grid.x, u.values
    s = np.sign(v)
    # exact zeros take the sign of the right neighbour
    for i in np.nonzero(s == 0)[0][::-1]:
        s[i] = s[i + 1] if i + 1 < len(s) else (s[i - 1] if i > 0 else 1.0)
    idx = np.nonzero(s[:-1] != s[1:])[0]
    raw = []
    for i in idx:
        a, b = v[i], v[i + 1]
        pos = x[i] + (x[i + 1] - x[i]) * a / (a - b) if a != b else 0.5 * (x[i] + x[i + 1])
        raw.append((pos, Orientation.UP if b > a else Orientation.DOWN))
    out = []
    k = 0
    gap = 3 * u.grid.dx
    while k < len(raw):
        j = k
        while j + 1 < len(raw) and raw[j + 1][0] - raw[j][0] < gap:
            j += 1
        size = j - k + 1
        if size % 2 == 1:
            out.append((float(np.mean([r[0] for r in raw[k:j + 1]])), raw[k][1]))
        k = j + 1
    return out


class _Tracker:
    def __init__(self, x_min=-math.inf, x_max=math.inf):
        self.x_min, self.x_max = x_min, x_max
        self.tracks = []
        self.active = []
        self.events = []

    def update(self, t, fronts):
        if not self.tracks:
            for pos, o in fronts:
                tr = FrontTrack(len(self.tracks), o, [t], [pos])
                self.tracks.append(tr)
                self.active.append(tr)
            return
        old = self.active
        used = [False] * len(old)
        new_active = []
        start = 0
        for pos, o in fronts:
            best, bd = None, math.inf
            for j in range(start, len(old)):
                if not used[j] and old[j].orientation == o:
                    d = abs(old[j].positions[-1] - pos)
                    if d < bd:
                        best, bd = j, d
            if best is None:
                tr = FrontTrack(len(self.tracks), o)
                self.tracks.append(tr)
                self.events.append({"t": t, "kind": "spawn", "i": tr.id})
            else:
                used[best] = True
                start = best + 1
                tr = old[best]
            tr.times.append(t)
            tr.positions.append(pos)
            new_active.append(tr)
        dead = [tr for j, tr in enumerate(old) if not used[j]]
        for tr in dead:
            tr.alive = False
        self._classify(t, dead)
        self.active = new_active

    def _classify(self, t, dead):
        # a vanished pair annihilated if the fronts were closer to each other
        # than to a boundary; anything else left through the boundary
        wall = lambda tr: min(tr.positions[-1] - self.x_min, self.x_max - tr.positions[-1])
        i = 0
        while i < len(dead):
            a = dead[i]
            if i + 1 < len(dead):
                b = dead[i + 1]
                gap = b.positions[-1] - a.positions[-1]
                if a.orientation != b.orientation and gap < min(wall(a), wall(b)):
                    self.events.append({"t": t, "kind": "annihilation", "i": a.id, "j": b.id})
                    i += 2
                    continue
            self.events.append({"t": t, "kind": "exit", "i": a.id})
            i += 1


def _pinned_events(tracks):
    ev = []
    for tr in tracks:
        if not tr.alive:
            continue
        v = np.abs(tr.speed())
        if len(v) < PIN_FRAMES:
            continue
        ok = v < PIN_SPEED
        run = 0
        for i, flag in enumerate(ok):
            run = run + 1 if flag else 0
            if run == PIN_FRAMES:
                ev.append({"t": tr.times[i + 1 - PIN_FRAMES], "kind": "pinned", "i": tr.id,
                           "position": tr.positions[i + 1 - PIN_FRAMES]})
                break
    return ev


# ------------------------------------------------------------ time stepping

def run(cfg: PdeRunConfig) -> PdeRunResult:
    g = cfg.grid
    x, dx = g.x, g.dx
    u = cfg.ic.values.astype(float).copy()
    dt = cfg.resolved_dt()
    forcing, eps = cfg.forcing, cfg.eps
    n_steps = int(math.ceil(cfg.t_end / dt - 1e-9))
    out_stride = max(1, int(round(cfg.output_every / dt)))
    snap_every = cfg.snapshot_every if cfg.snapshot_every is not None else cfg.output_every
    snap_stride = max(1, int(round(snap_every / dt)))

    if isinstance(cfg.scheme, ImexTheta):
        th = cfg.scheme.theta
        r = dt / dx ** 2
        n = g.n
        ab = np.zeros((3, n))
        ab[1] = 1 + 2 * th * r
        ab[0, 1:] = -th * r
        ab[2, :-1] = -th * r
        ab[0, 1] = -2 * th * r
        ab[2, n - 2] = -2 * th * r

        def step(u):
            rhs = u + (1 - th) * dt * _uxx(u, dx) + dt * _reaction(u, x, dx, forcing, eps)
            return solve_banded((1, 1), ab, rhs, check_finite=False)
    else:
        def f(u):
            return _uxx(u, dx) + _reaction(u, x, dx, forcing, eps)

        def step(u):
            k1 = f(u)
            k2 = f(u + 0.5 * dt * k1)
            k3 = f(u + 0.5 * dt * k2)
            k4 = f(u + dt * k3)
            return u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    tracker = _Tracker(g.x_min, g.x_max)
    times = [0.0]
    snaps, snap_t = [u.copy()], [0.0]
    tracker.update(0.0, track_fronts(Field(g, u)))
    for k in range(1, n_steps + 1):
        u = step(u)
        t = k * dt
        if k % out_stride == 0 or k == n_steps:
            if not np.all(np.isfinite(u)):
                raise NaNDetected(t)
            times.append(t)
            tracker.update(t, track_fronts(Field(g, u)))
            if k % snap_stride == 0 or k == n_steps:
                snaps.append(u.copy())
                snap_t.append(t)
            if cfg.stop_when_settled and _settled(tracker, u, g, forcing, eps):
                if snap_t[-1] != t:
                    snaps.append(u.copy())
                    snap_t.append(t)
                break
    events = tracker.events + _pinned_events(tracker.tracks)
    events.sort(key=lambda e: e["t"])
    return PdeRunResult(cfg, np.array(times), snaps, snap_t, tracker.tracks, events, Field(g, u))


def _settled(tracker, u, g, forcing, eps):
    act = tracker.active
    if act:
        return all(len(tr.times) > PIN_FRAMES and np.all(np.abs(tr.speed()[-PIN_FRAMES:]) < PIN_SPEED)
                   for tr in act)
    return np.max(np.abs(semidiscretize(Field(g, u), forcing, eps).values)) < 1e-8


def multifront_ic(grid: Grid1D, terms, offset=0.0, steepness=1.0):
    """sum_j s_j tanh(steepness_j (x - c_j)) + offset, with terms = [(s, c), ...]."""
    x = grid.x
    u = np.full_like(x, float(offset))
    for item in terms:
        s, c = item[0], item[1]
        a = item[2] if len(item) > 2 else steepness
        u += s * np.tanh(a * (x - c))
    return Field(grid, u)


# ------------------------------------------------------------ spectra

def discrete_spectrum(steady: Field, forcing: Forcing, eps, count=4, shift=0.1, check_tol=1e-8):
    """`count` eigenvalues of the linearization nearest `shift`."""
    if check_tol is not None:
        res = np.max(np.abs(semidiscretize(steady, forcing, eps).values))
        if res > check_tol:
            raise NotConverged(f"state is not stationary (|rhs| = {res:.2e})")
    L = linearization(steady, forcing, eps)
    n = steady.grid.n
    if n <= 2000:
        ev = eigvals(L.toarray())
    else:
        try:
            ev = eigs(L, k=count, sigma=shift, which="LM", return_eigenvectors=False,
                      tol=1e-12, maxiter=5000)
        except Exception as exc:  # ARPACK reports non-convergence by exception
            raise NotConverged(str(exc)) from None
    ev = np.asarray(ev, dtype=complex)
    ev = ev[np.argsort(np.abs(ev - shift))][:count]
    return list(ev)


@dataclass(frozen=True)
class EvansValue:
    closed: complex
    jost: complex


def _nu(lam):
    lam = complex(lam)
    if lam.imag == 0 and lam.real <= -2:
        raise OnBranchCut(f"lambda = {lam.real} lies on the branch cut (-inf, -2]")
    return np.sqrt(2 + lam)


def evans_closed(lam):
    nu = _nu(lam)
    lam = complex(lam)
    return 4.0 / 9.0 * lam * (3 + 2 * lam) * nu


def jost_wronskian(lam, X=40.0):
    """Wronskian at x = 0 of the Jost solutions f_pm ~ exp(-+nu x) of
    v'' + (1 - 3 u_up^2) v = lambda v, integrated numerically."""
    nu = _nu(lam)

    def rhs(x, y):
        w, wp = y
        return [wp, 2 * nu * wp - 3.0 / np.cosh(x / SQRT2) ** 2 * w]

    sol = solve_ivp(rhs, (X, 0.0), [1.0 + 0j, 0j], method="DOP853", rtol=1e-13, atol=1e-15)
    w0, wp0 = sol.y[0, -1], sol.y[1, -1]
    f0, fp0 = w0, wp0 - nu * w0
    # the potential is even, so f_-(x) = f_+(-x)
    return -2.0 * f0 * fp0


def evans_homogeneous(lam) -> EvansValue:
    """Closed-form Evans function and the Jost-Wronskian oracle, scaled by
    the non-vanishing factor (4/9)(nu + sqrt2)^2 (nu + 1/sqrt2)^2."""
    nu = _nu(lam)
    closed = evans_closed(lam)
    W = jost_wronskian(lam)
    return EvansValue(complex(closed),
                      complex(W * 4.0 / 9.0 * (nu + SQRT2) ** 2 * (nu + 1 / SQRT2) ** 2))


def write_config(path, cfg: PdeRunConfig):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
