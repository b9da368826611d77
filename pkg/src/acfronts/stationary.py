"""Stationary one-, two- and N-front patterns of the reduced front ODE."""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import interp1d
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, fsolve

from .core import NORM_UPRIME2, SQRT2, Orientation
from .errors import (BadInput, ConditionNotSatisfied, MuOutOfValidity,
                     NewtonDiverged, NumericFailure, SeparationTooSmall,
                     SignConditionFailed)
from .forcing import AlgHill, ExpHill, Topography, TopographyDriven
from .frontdyn import C_NORM, FrontState, jacobian, nfront_rhs
from .melnikov import MelnikovFn, melnikov_zero_scan

LOG16 = math.log(16.0)


@dataclass
class StationaryFront:
    positions: np.ndarray
    first: Orientation
    eps: float
    kind: dict
    eigenvalues: np.ndarray
    newton_residual: float
    seed: str = ""

    @property
    def n(self):
        return len(self.positions)

    @property
    def psi(self):
        return SQRT2 * np.asarray(self.positions)

    @property
    def max_real_eigenvalue(self):
        return float(np.max(np.real(self.eigenvalues)))

    @property
    def stable(self):
        return bool(np.all(np.real(self.eigenvalues) < 0))

    def to_dict(self):
        ev = np.asarray(self.eigenvalues, dtype=complex)
        return {
            "kind": _jsonable(self.kind),
            "positions": [float(p) for p in self.positions],
            "first": self.first.name.lower(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "residual": float(self.newton_residual),
            "seed": self.seed,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_report(path, fronts):
    with open(path, "w") as fh:
        json.dump([f.to_dict() for f in fronts], fh, indent=2)


def symmetric_eigenvalues(J):
    """Eigenvalues of the symmetric tridiagonal Jacobian by bisection, which
    keeps tiny eigenvalues of graded matrices accurate."""
    J = np.asarray(J, dtype=float)
    if J.shape[0] == 1:
        return J[0].copy()
    return eigh_tridiagonal(np.diag(J).copy(), np.diag(J, 1).copy(), lapack_driver="stebz")[0]


def _eigs(s: FrontState, mel_up, mel_down):
    J = jacobian(s, mel_up, mel_down)
    if np.allclose(J, J.T, rtol=0, atol=0):
        return symmetric_eigenvalues(J).astype(complex)
    return np.linalg.eigvals(J)


# ------------------------------------------------------------ generic Newton

def _rhs_scale(s, mel_up, mel_down):
    from .frontdyn import _melnikov_by_region, interaction_terms
    r, d = _melnikov_by_region(s, mel_up, mel_down)
    e = interaction_terms(s.positions)
    # R carries a rounding floor of about |R'| |phi| machine-eps; 1e-4 keeps
    # tol = 1e-12 just above it
    floor = 1e-4 * np.max(np.abs(d) * (1.0 + np.abs(s.positions)))
    return C_NORM * (s.eps * (np.max(np.abs(r)) + floor) + 16.0 * (np.max(e) if e.size else 0.0))


def newton_nfront(s0: FrontState, mel_up, mel_down=None, tol=1e-12, maxit=50):
    """Damped Newton on the reduced-ODE rhs.  Returns (state, relative residual)."""
    mel_down = mel_up if mel_down is None else mel_down
    s = s0
    f = nfront_rhs(s, mel_up, mel_down)
    nrm = np.max(np.abs(f))
    for _ in range(maxit):
        scale = _rhs_scale(s, mel_up, mel_down)
        if nrm <= tol * max(scale, 1e-300):
            return s, nrm / max(scale, 1e-300)
        J = jacobian(s, mel_up, mel_down)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise NewtonDiverged("singular Jacobian") from None
        alpha = 1.0
        while alpha > 1e-6:
            p = s.positions + alpha * step
            if np.all(np.diff(p) > 0):
                trial = s.with_positions(p)
                f_new = nfront_rhs(trial, mel_up, mel_down)
                n_new = np.max(np.abs(f_new))
                if n_new < nrm or n_new <= tol * scale:
                    break
            alpha *= 0.5
        else:
            break
        s, f, nrm = trial, f_new, n_new
    scale = _rhs_scale(s, mel_up, mel_down)
    if nrm <= 1e3 * tol * scale:
        return s, nrm / scale
    raise NewtonDiverged(f"no convergence (|rhs| = {nrm:.2e}, scale {scale:.2e})")


# ------------------------------------------------------------- one front

class FrontList(list):
    degenerate = False


def one_front_find(R: MelnikovFn, phi_range=(-10.0, 10.0), eps=0.1, n=2001):
    """Zeros of R with eigenvalue eps*lambda~ = -eps (3 sqrt2 / 4) R'(phi*)."""
    zeros = melnikov_zero_scan(R, phi_range[0], phi_range[1], n)
    out = FrontList()
    out.degenerate = zeros.degenerate
    for z, d in zeros:
        lam = -eps * C_NORM * d
        out.append(StationaryFront(np.array([z]), R.orientation, eps,
                                   {"type": "OneFront", "phi_star": z, "Rprime": d},
                                   np.array([lam], dtype=complex), 0.0, "melnikov zero scan"))
    return out


# ------------------------------------------------------------- two fronts

def two_front_solve(R_up, R_down, eps, seed, tol=1e-12):
    phi_up, phi_down = seed
    if not phi_up < phi_down:
        raise BadInput("seed needs phi_up < phi_down")
    s0 = FrontState([phi_up, phi_down], Orientation.UP, eps)
    s, res = newton_nfront(s0, R_up, R_down, tol=tol)
    return StationaryFront(s.positions, Orientation.UP, eps, {"type": "TwoFrontCondition"},
                           _eigs(s, R_up, R_down), res, f"seed ({phi_up:g}, {phi_down:g})")


@dataclass(frozen=True)
class TwoFrontStability:
    lambda_bar1: float
    lambda_bar2: float
    gamma_plus_1: float
    gamma_plus_2: float
    discriminant_D: float
    eps: float

    @property
    def lambda1(self):
        return self.eps * self.lambda_bar1

    @property
    def lambda2(self):
        return self.eps * self.lambda_bar2


def two_front_eigenvalues(phi_up, phi_down, R_up, R_down, eps, tol=1e-6):
    """Closed-form eigenvalue pair of a stationary two-front.

    gamma_+ is the down-front amplitude relative to the up-front one; its sign
    pairing follows the eigenvalue ordering (lambda_1 takes -sqrt(D)).
    """
    ru, dru = R_up.both(phi_up)
    rd, drd = R_down.both(phi_down)
    e = math.exp(-SQRT2 * (phi_down - phi_up))
    target = 16.0 * e / eps
    sc = max(abs(ru), abs(rd), target, 1e-300)
    if abs(ru - target) > tol * sc or abs(rd + target) > tol * sc:
        raise ConditionNotSatisfied(
            f"two-front condition violated: R_up = {ru:.3e}, -R_down = {-rd:.3e}, "
            f"16 e^(-sqrt2 D)/eps = {target:.3e}")
    eL = e / eps  # exp(-sqrt2 (ell_up + ell_down))
    D = (dru - drd) ** 2 + 2048.0 * eL * eL
    sq = math.sqrt(D)
    base = 16.0 * SQRT2 * eL - 0.5 * (dru + drd)
    lb1 = (base - 0.5 * sq) / NORM_UPRIME2
    lb2 = (base + 0.5 * sq) / NORM_UPRIME2
    pref = -SQRT2 / 64.0 / eL
    g1 = pref * (dru - drd - sq)
    g2 = pref * (dru - drd + sq)
    return TwoFrontStability(lb1, lb2, g1, g2, D, eps)


# ------------------------------------------------------ localized patterns

def mu_star(N):
    if N < 2:
        raise BadInput("mu*(N) needs N >= 2")
    return 1.0 - 2.0 ** (-1.0 / (N - 1))


def nu_sequence(mu, N):
    """nu_1 = 0 (front at a zero), nu_{j+1} = (1 + nu_j) / (1 - mu)."""
    nus = [0.0]
    for _ in range(N - 1):
        nus.append((1.0 + nus[-1]) / (1.0 - mu))
    return nus


def nu_N(mu, N):
    return ((1.0 - mu) ** (-(N - 1)) - 1.0) / mu


@dataclass
class LocalizedSeedPlan:
    mu_or_p: float
    decay: str
    nu: float | None = None
    nu1: float | None = None
    nu2: float | None = None
    nu_chain: list = field(default_factory=list)
    theta2: float | None = None
    mu_star_N: float | None = None
    ell: list = field(default_factory=list)


def _decay_info(topo):
    if isinstance(topo, ExpHill):
        return "exponential", topo.mu
    if isinstance(topo, AlgHill):
        return "algebraic", topo.p
    return "unknown", None


class _SFun:
    """S(psi) = R(psi / sqrt2) with log-domain values and tail tables."""

    def __init__(self, mel: MelnikovFn):
        self.mel = mel
        self._tables = {}

    def log(self, psi):
        sR, lR, sD, lD = self.mel.log_both(np.asarray(psi, dtype=float) / SQRT2)
        return sR, lR, sD, lD - 0.5 * math.log(2.0)

    def value(self, psi):
        r, d = self.mel.both(np.asarray(psi, dtype=float) / SQRT2)
        return r, d / SQRT2

    def tail_table(self, side, edge, span=4000.0):
        key = (side, round(edge, 9))
        if key not in self._tables:
            off = np.concatenate([np.geomspace(1e-3, 2.0, 40), np.linspace(2.5, 60.0, 116),
                                  np.geomspace(62.0, span, 90)])
            psi = edge + side * off
            vals = []
            for chunk in np.array_split(psi, 8):
                s, l, _, _ = self.log(chunk)
                vals.append((s, l))
            sg = np.concatenate([v[0] for v in vals])
            lg = np.concatenate([v[1] for v in vals])
            self._tables[key] = (psi, sg, lg)
        return self._tables[key]


def _tail_logabs(sf, side, edge):
    psi, sg, lg = sf.tail_table(side, edge)
    want = 1.0 if side < 0 else -1.0
    ok = (sg == want) & np.isfinite(lg)
    if not np.all(ok[5:]):
        raise SignConditionFailed(
            f"S does not keep the required sign on the {'left' if side < 0 else 'right'} tail")
    order = np.argsort(psi[ok])
    return interp1d(psi[ok][order], lg[ok][order], kind="cubic", bounds_error=False,
                    fill_value="extrapolate")


def _chain(sf, eps, start, count, side, edge):
    """Place `count` tail fronts beyond `start` by the leading-order balance
    log(eps |S(psi_j)|) = log 16 - |psi_j - psi_prev|, one level at a time."""
    if count == 0:
        return []
    lg = _tail_logabs(sf, side, edge)
    out = []
    prev = start
    for _ in range(count):
        lo = max(prev, edge) if side > 0 else min(prev, edge)

        def g(x):
            return math.log(eps) + float(lg(x)) - LOG16 + abs(x - prev)

        a = lo + side * 1e-3
        b = a
        step = 1.0
        while g(b) < 0:
            b = a + side * step
            step *= 2.0
            if step > 1e5:
                raise SignConditionFailed("tail balance has no root")
        x = brentq(g, min(a, b), max(a, b), xtol=1e-10)
        out.append(x)
        prev = x
    return out


def _core_pair(sf, eps, edge_left, edge_right):
    """Kind-1 core: left-tail psi_a and right-tail psi_b with
    eps S(psi_a) = -eps S(psi_b) = 16 e^{-(psi_b - psi_a)}."""
    lgl = _tail_logabs(sf, -1, edge_left)
    lgr = _tail_logabs(sf, +1, edge_right)

    def F(v):
        a, b = v
        return [math.log(eps) + float(lgl(a)) - LOG16 + (b - a),
                math.log(eps) + float(lgr(b)) - LOG16 + (b - a)]

    L = abs(math.log(eps))
    sol, info, ier, msg = fsolve(F, [edge_left - L / 2, edge_right + L / 2], full_output=True)
    if ier != 1:
        raise SignConditionFailed(f"kind-1 core balance not solved: {msg}")
    return sol


class _LocalizedSystem:
    """Telescoped stationarity equations in log form.

    Fronts left of the pivot use left partial sums C_j, fronts right of it
    right partial sums D_j, so that every sum adds same-signed tail terms.
    With a near-zero pivot m the unknown for that front is its offset delta
    from the zero psi*, and its equation is S_m + C_{m-1} + D_{m+1} = 0.
    Without a pivot (kind 1) the split is after front L.
    """

    def __init__(self, sf, eps, N, m=None, L=None, zero=None):
        self.sf, self.eps, self.N, self.m, self.L = sf, eps, N, m, L
        if m is not None:
            self.psi_star = zero
            _, d = sf.value(zero + np.array([-1e-3, 0.0, 1e-3]))
            self.dS = float(d[1])
            self.d2S = float((d[2] - d[0]) / 2e-3)

    def psi(self, z):
        p = np.array(z, dtype=float)
        if self.m is not None:
            p[self.m] = self.psi_star + z[self.m]
        return p

    def _S(self, z):
        p = self.psi(z)
        sS, lS, sD, lD = self.sf.log(p)
        sS, lS, sD, lD = (np.array(a, dtype=float) for a in (sS, lS, sD, lD))
        m = self.m
        if m is not None and abs(z[m]) < 1e-5:
            dlt = z[m]
            v = self.dS * dlt + 0.5 * self.d2S * dlt * dlt
            dv = self.dS + self.d2S * dlt
            with np.errstate(divide="ignore"):
                sS[m], lS[m] = np.sign(v), np.log(abs(v))
                sD[m], lD[m] = np.sign(dv), np.log(abs(dv))
        return p, sS, lS, sD, lD

    def split(self):
        if self.m is not None:
            return list(range(self.m)), list(range(self.m + 1, self.N))
        return list(range(self.L + 1)), list(range(self.L + 1, self.N))

    def feasible(self, p, sS):
        left, right = self.split()
        if np.any(np.diff(p) <= 0):
            return False
        return all(sS[i] > 0 for i in left) and all(sS[i] < 0 for i in right)

    def residual(self, z, want_jac=True):
        p, sS, lS, sD, lD = self._S(z)
        if not self.feasible(p, sS):
            return None, None, p
        N, eps = self.N, self.eps
        le = math.log(eps)
        G = np.zeros(N)
        J = np.zeros((N, N))
        left, right = self.split()
        dS = sD * np.exp(lD)
        # left partial sums: eps C_j = 16 e^{-Delta_j}
        logC = {}
        for j in left:
            idx = left[:left.index(j) + 1]
            lc = np.logaddexp.reduce(lS[idx])
            logC[j] = lc
            if j + 1 < N:
                G[j] = le + lc - LOG16 + (p[j + 1] - p[j])
                for i in idx:
                    J[j, i] = sD[i] * math.exp(lD[i] - lc)
                J[j, j] -= 1.0
                J[j, j + 1] += 1.0
        # right partial sums: -eps D_j = 16 e^{-Delta_{j-1}}
        logD = {}
        for j in right:
            idx = right[right.index(j):]
            ld = np.logaddexp.reduce(lS[idx])
            logD[j] = ld
            if j - 1 >= 0:
                G[j] = le + ld - LOG16 + (p[j] - p[j - 1])
                for i in idx:
                    # d log(-D_j) / d psi_i = S'_i / D_j and D_j < 0
                    J[j, i] = -sD[i] * math.exp(lD[i] - ld)
                J[j, j] += 1.0
                J[j, j - 1] -= 1.0
        m = self.m
        if m is not None:
            parts = [lS[m]]
            if m - 1 in logC:
                parts.append(logC[m - 1])
            if m + 1 in logD:
                parts.append(logD[m + 1])
            lscale = np.logaddexp.reduce(np.array(parts))
            val = sS[m] * math.exp(lS[m] - lscale) if np.isfinite(lS[m]) else 0.0
            if m - 1 in logC:
                val += math.exp(logC[m - 1] - lscale)
            if m + 1 in logD:
                val -= math.exp(logD[m + 1] - lscale)
            G[m] = val
            for i in range(N):
                if np.isfinite(lD[i]):
                    J[m, i] = sD[i] * math.exp(lD[i] - lscale)
        else:
            # kind-1 core: split after L; rows L and L+1 already hold the
            # C_L and D_{L+1} balances with the same Delta_L
            pass
        return G, J, p

    def solve(self, z0, tol=1e-11, maxit=60):
        z = np.array(z0, dtype=float)
        G, J, p = self.residual(z)
        if G is None:
            raise NewtonDiverged("seed violates the tail sign structure")
        nrm = np.max(np.abs(G))
        for it in range(maxit):
            if nrm < tol:
                return z, nrm
            try:
                step = np.linalg.solve(J, -G)
            except np.linalg.LinAlgError:
                raise NewtonDiverged("singular Jacobian") from None
            alpha = 1.0
            accepted = False
            while alpha > 1e-8:
                zt = z + alpha * step
                Gt, Jt, pt = self.residual(zt)
                if Gt is not None:
                    nt = np.max(np.abs(Gt))
                    if nt < nrm * (1 - 1e-4 * alpha) or nt < tol:
                        accepted = True
                        break
                alpha *= 0.5
            if not accepted:
                if nrm < 1e-9:
                    return z, nrm
                raise NewtonDiverged(f"line search failed at residual {nrm:.2e}")
            z, G, J, nrm = zt, Gt, Jt, nt
        if nrm < 1e-9:
            return z, nrm
        raise NewtonDiverged(f"no convergence (residual {nrm:.2e})")


def _zeros_psi(mel, scan_range, n):
    zs = melnikov_zero_scan(mel, scan_range[0], scan_range[1], n)
    return [SQRT2 * z for z, _ in zs], [d / SQRT2 for _, d in zs]


def localized_seed(kind, N, mel: MelnikovFn, eps, zero_psi=None, index=None, n_left=None,
                   sf=None, zeros=None):
    """Leading-order seed for a localized stationary N-front pattern.

    kind 1: n_left fronts in the left tail and N - n_left in the right tail;
    kind 2: front 1 at the zero psi*; kind 3: front N at psi*; kind 4: front
    `index` (1-based, 1 < index < N) at psi*.  Returns (plan, psi positions).
    """
    if N < 2:
        raise BadInput("localized seeds need N >= 2")
    topo = mel.forcing.topo if isinstance(mel.forcing, TopographyDriven) else None
    decay, par = _decay_info(topo)
    plan = LocalizedSeedPlan(par, decay)
    if decay == "exponential":
        mu = par
        plan.mu_star_N = mu_star(N)
        if mu < 1:
            plan.nu = 1.0 / (2.0 - mu)
            plan.nu1 = mu / (1.0 - mu)
            plan.nu2 = 1.0 / (1.0 - mu)
            plan.nu_chain = nu_sequence(mu, N)
        if mu >= plan.mu_star_N:
            warnings.warn(f"mu = {mu} >= mu*({N}) = {plan.mu_star_N:.5f}: seeds outside the "
                          "validity bound of the asymptotic construction", MuOutOfValidity,
                          stacklevel=2)
    elif decay == "algebraic":
        le = abs(math.log(eps))
        plan.theta2 = 1.0 / (le + par * math.log(le))
    sf = sf or _SFun(mel)
    if zeros is None:
        zeros, _ = _zeros_psi(mel, (-20.0, 20.0), 4001)
    edge_l = min(zeros) if zeros else 0.0
    edge_r = max(zeros) if zeros else 0.0
    if kind == 1:
        if n_left is None or not 1 <= n_left <= N - 1:
            raise BadInput("kind 1 needs 1 <= n_left <= N-1")
        a, b = _core_pair(sf, eps, edge_l, edge_r)
        left = _chain(sf, eps, a, n_left - 1, -1, edge_l)[::-1]
        right = _chain(sf, eps, b, N - n_left - 1, +1, edge_r)
        psi = np.array(left + [a, b] + right)
    else:
        if zero_psi is None:
            raise BadInput(f"kind {kind} needs a zero of S")
        m = {2: 1, 3: N}.get(kind, index)
        if m is None or not 1 <= m <= N or (kind == 4 and not 1 < m < N):
            raise BadInput("bad pivot index")
        left = _chain(sf, eps, zero_psi, m - 1, -1, edge_l)[::-1]
        right = _chain(sf, eps, zero_psi, N - m, +1, edge_r)
        psi = np.array(left + [zero_psi] + right)
    if plan.nu_chain:
        # ell offsets: seed minus the leading-order nu |log eps| positions
        Le = abs(math.log(eps))
        mu = par
        if kind == 1:
            nl = n_left
            pred = np.zeros(N)
            nu_l = nu_r = plan.nu
            pred[nl - 1], pred[nl] = -nu_l * Le, nu_r * Le
            for j in range(nl - 2, -1, -1):
                nu_l = (1 + nu_l) / (1 - mu)
                pred[j] = -nu_l * Le
            for j in range(nl + 1, N):
                nu_r = (1 + nu_r) / (1 - mu)
                pred[j] = nu_r * Le
        else:
            pred = np.array([zero_psi + np.sign(j - (m - 1)) * plan.nu_chain[abs(j - (m - 1))] * Le
                             for j in range(N)])
        plan.ell = [float(v) for v in np.abs(psi - pred)]
    return plan, psi / SQRT2


def enumerate_stationary_localized(topo_or_mel, eps, N, scan_range=(-20.0, 20.0), n_scan=4001,
                                   collect_errors=None):
    """All kind 1-4 stationary N-front patterns over a localized topography."""
    mel = topo_or_mel if isinstance(topo_or_mel, MelnikovFn) else \
        MelnikovFn(TopographyDriven(topo_or_mel))
    if not isinstance(mel.forcing, TopographyDriven):
        raise BadInput("localized enumeration needs a topographic forcing")
    if N < 1:
        raise BadInput("N must be positive")
    if N == 1:
        return one_front_find(mel, scan_range, eps, n_scan)
    errors = collect_errors if collect_errors is not None else []
    sf = _SFun(mel)
    zeros, dzeros = _zeros_psi(mel, (scan_range[0] / SQRT2, scan_range[1] / SQRT2), n_scan)
    edge_l = min(zeros) if zeros else 0.0
    edge_r = max(zeros) if zeros else 0.0
    L = abs(math.log(eps))
    # sign conditions on the tails (h_+ < 0 on the right, h_- > 0 on the left)
    s_tail = sf.log(np.array([edge_l - 2 * L, edge_r + 2 * L]))[0]
    left_ok = s_tail[0] > 0
    right_ok = s_tail[1] < 0
    topo = mel.forcing.topo
    decay, par = _decay_info(topo)
    if decay == "exponential" and par >= mu_star(N):
        warnings.warn(f"mu = {par} >= mu*({N}) = {mu_star(N):.5f}; counting critical points "
                      "of the leading-order ODE anyway", MuOutOfValidity, stacklevel=2)

    jobs = []
    for nl in range(1, N):
        jobs.append(("kind1", None, nl))
    for zi, z in enumerate(zeros):
        for m in range(1, N + 1):
            jobs.append(("zero", zi, m))

    found = []
    for kind, zi, arg in jobs:
        try:
            if kind == "kind1":
                if not (left_ok and right_ok):
                    raise SignConditionFailed("kind 1 needs h_+ < 0 < h_-")
                a, b = _core_pair(sf, eps, edge_l, edge_r)
                left = _chain(sf, eps, a, arg - 1, -1, edge_l)[::-1]
                right = _chain(sf, eps, b, N - arg - 1, +1, edge_r)
                z0 = np.array(left + [a, b] + right)
                sys_ = _LocalizedSystem(sf, eps, N, L=arg - 1)
                label = {"type": "LocalizedKind", "kind": 1,
                         "extension": f"{arg} left / {N - arg} right"}
            else:
                m = arg
                if m > 1 and not left_ok:
                    raise SignConditionFailed("fronts left of the zero need h_- > 0")
                if m < N and not right_ok:
                    raise SignConditionFailed("fronts right of the zero need h_+ < 0")
                zs = zeros[zi]
                left = _chain(sf, eps, zs, m - 1, -1, edge_l)[::-1]
                right = _chain(sf, eps, zs, N - m, +1, edge_r)
                sys_ = _LocalizedSystem(sf, eps, N, m=m - 1, zero=zs)
                # offset from the leading-order balance at the pivot
                el = math.exp(-(zs - left[-1])) if left else 0.0
                er = math.exp(-(right[0] - zs)) if right else 0.0
                delta = 16.0 * (er - el) / eps / sys_.dS
                delta = float(np.clip(delta, -1e-6, 1e-6))
                z0 = np.array(left + [delta] + right)
                k = 2 if m == 1 else (3 if m == N else 4)
                label = {"type": "LocalizedKind", "kind": k, "zero_psi": zs, "pivot": m,
                         "extension": f"{m - 1} left / {N - m} right"}
            z, res = sys_.solve(z0)
        except NumericFailure as exc:
            errors.append((kind, zi, arg, str(exc)))
            continue
        psi = sys_.psi(z)
        if sys_.m is not None:
            label["delta"] = float(z[sys_.m])
            # a pivot that slid off its zero is some other pattern, not this kind
            others = [abs(w - zeros[zi]) for w in zeros if w != zeros[zi]]
            others += [abs(w - zeros[zi]) for j, w in enumerate(psi) if j != sys_.m]
            if abs(z[sys_.m]) > 0.5 * min(others):
                errors.append((kind, zi, arg, f"pivot left the zero (delta = {z[sys_.m]:.3g})"))
                continue
        phi = psi / SQRT2
        s = FrontState(phi, Orientation.UP, eps)
        ev = _eigs(s, mel, mel)
        found.append(StationaryFront(phi, Orientation.UP, eps, label, ev, float(res),
                                     f"{kind}:{zi}:{arg}"))
    out = _dedupe(found, 1e-6 * L)
    for f in out:
        if not f.max_real_eigenvalue > 0:
            errors.append(("instability", f.seed, None, "no positive eigenvalue found"))
    return out


def _dedupe(items, tol):
    out = []
    for f in sorted(items, key=lambda f: tuple(f.positions)):
        if any(len(g.positions) == len(f.positions) and
               np.max(np.abs(g.positions - f.positions)) < tol for g in out):
            continue
        out.append(f)
    return out


# -------------------------------------------------------- periodic patterns

def enumerate_stationary_periodic(mel: MelnikovFn, eps, N, gaps, start=0, tol=1e-12,
                                  mel_down=None):
    """Stationary N-fronts near (psi*_{i_j} + n_j Y) for every zero index tuple.

    `gaps` are the period counts n_{j+1} - n_j.  Raises SeparationTooSmall if
    some seeded separation has rho = Delta psi / |log eps| < 1.
    """
    mel_down = mel if mel_down is None else mel_down
    period = mel.period
    if period is None:
        raise BadInput("periodic enumeration needs a periodic forcing")
    gaps = list(gaps)
    if len(gaps) != N - 1:
        raise BadInput("need N-1 gaps")
    off = 0.1234567 * period
    zu = melnikov_zero_scan(mel, off, off + period, 2001)
    zd = zu if mel_down is mel else melnikov_zero_scan(mel_down, off, off + period, 2001)
    if not zu or not zd:
        return []
    n_pos = np.concatenate([[start], start + np.cumsum(gaps)])
    L = abs(math.log(eps))
    out = []
    K = len(zu)
    for idx in itertools.product(range(K), repeat=N):
        zlist = [zu if j % 2 == 0 else zd for j in range(N)]
        if any(i >= len(zlist[j]) for j, i in enumerate(idx)):
            continue
        seed = np.array([zlist[j][i][0] + n_pos[j] * period for j, i in enumerate(idx)])
        if np.any(np.diff(seed) <= 0):
            continue
        rho = SQRT2 * np.diff(seed) / L
        if np.any(rho < 1.0):
            raise SeparationTooSmall(f"separation rho = {rho.min():.3f} < 1: no stationary "
                                     "pattern exists near this seed")
        s0 = FrontState(seed, Orientation.UP, eps)
        try:
            s, res = newton_nfront(s0, mel, mel_down, tol=tol)
        except NewtonDiverged:
            continue
        ev = np.sort(np.real(_eigs(s, mel, mel_down))).astype(complex)
        dz = np.array([zlist[j][i][1] for j, i in enumerate(idx)])
        predicted = -eps * C_NORM * dz
        out.append(StationaryFront(s.positions, Orientation.UP, eps,
                                   {"type": "PeriodicGrid",
                                    "indices": [[int(i), int(n)] for i, n in zip(idx, n_pos)],
                                    "rho": [float(r) for r in rho],
                                    "predicted_eigenvalues": [float(v) for v in predicted]},
                                   ev, res, f"zeros {idx} periods {list(map(int, n_pos))}"))
    return out


def periodic_eigen_law_error(front: StationaryFront):
    """max relative mismatch between Jacobian eigenvalues and -eps S'(psi*)."""
    pred = np.sort(np.array(front.kind["predicted_eigenvalues"]))
    got = np.sort(np.real(front.eigenvalues))
    return float(np.max(np.abs(got - pred) / np.abs(pred)))


# ------------------------------------------------- (D,S) bifurcation analysis

def ds_params(k, eps):
    """(N, R) with 2 N pi + R = k |log eps| / (2 sqrt2), R in [0, 2 pi)."""
    x = k * abs(math.log(eps)) / (2.0 * SQRT2)
    n = math.floor(x / (2 * math.pi))
    return n, x - 2 * math.pi * n


def ds_rhs(d, s, A, B, k, R):
    th = R + 0.5 * k * d
    hs = 0.5 * k * s
    dd = -A * math.sin(th) * math.cos(hs) + B * math.cos(th) * math.sin(hs) - math.exp(-SQRT2 * d)
    ds = -A * math.cos(th) * math.sin(hs) + B * math.sin(th) * math.cos(hs)
    return np.array([dd, ds])


def ds_jacobian(d, s, A, B, k, R):
    th = R + 0.5 * k * d
    hs = 0.5 * k * s
    h = 0.5 * k
    return np.array([
        [-A * h * math.cos(th) * math.cos(hs) - B * h * math.sin(th) * math.sin(hs)
         + SQRT2 * math.exp(-SQRT2 * d),
         A * h * math.sin(th) * math.sin(hs) + B * h * math.cos(th) * math.cos(hs)],
        [A * h * math.sin(th) * math.sin(hs) + B * h * math.cos(th) * math.cos(hs),
         -A * h * math.cos(th) * math.cos(hs) - B * h * math.sin(th) * math.sin(hs)],
    ])


def classify(ev, tol=1e-12):
    re = np.real(ev)
    if np.any(np.abs(re) <= tol):
        return "degenerate"
    if np.all(re < 0):
        return "stable node" if np.all(np.abs(np.imag(ev)) <= tol) else "stable focus"
    if np.all(re > 0):
        return "unstable node" if np.all(np.abs(np.imag(ev)) <= tol) else "unstable focus"
    return "saddle"


def ds_fixed_points(A, B, k, eps, d_range, n_d=400, n_s=200):
    """Fixed points of the (d,s) system on d_range x [0, 4 pi / k)."""
    _, R = ds_params(k, eps)
    period = 4 * math.pi / abs(k)
    ds_ = np.linspace(d_range[0], d_range[1], n_d)
    ss = np.linspace(0.0, period, n_s, endpoint=False)
    pts = []
    seeds = [(d, s) for d in ds_ for s in ss]
    Dg, Sg = np.meshgrid(ds_, ss, indexing="ij")
    th = R + 0.5 * k * Dg
    hs = 0.5 * k * Sg
    F1 = -A * np.sin(th) * np.cos(hs) + B * np.cos(th) * np.sin(hs) - np.exp(-SQRT2 * Dg)
    F2 = -A * np.cos(th) * np.sin(hs) + B * np.sin(th) * np.cos(hs)
    def straddle(F):
        c = np.stack([F[:-1], F[1:], np.roll(F, -1, 1)[:-1], np.roll(F, -1, 1)[1:]])
        return (c.min(0) <= 0) & (c.max(0) >= 0)

    ii, jj = np.nonzero(straddle(F1) & straddle(F2))
    cand = list(zip(0.5 * (ds_[ii] + ds_[ii + 1]), ss[jj] + 0.5 * (ss[1] - ss[0])))
    for d, s in cand:
        x = np.array([d, s])
        for _ in range(50):
            f = ds_rhs(x[0], x[1], A, B, k, R)
            J = ds_jacobian(x[0], x[1], A, B, k, R)
            try:
                dx = np.linalg.solve(J, -f)
            except np.linalg.LinAlgError:
                break
            x = x + dx
            if not (np.all(np.isfinite(x)) and d_range[0] - 5 < x[0] < d_range[1] + 5):
                break
            if np.max(np.abs(dx)) < 1e-13:
                break
        if not (np.all(np.isfinite(x)) and d_range[0] - 5 < x[0] < d_range[1] + 5):
            continue
        f = ds_rhs(x[0], x[1], A, B, k, R)
        scale = abs(A) + abs(B) + math.exp(-SQRT2 * x[0])
        if np.max(np.abs(f)) > 1e-10 * scale or not d_range[0] <= x[0] <= d_range[1]:
            continue
        x[1] = x[1] % period
        if period - x[1] < 1e-9:
            x[1] = 0.0
        if any(abs(x[0] - p[0]) < 1e-6 and min(abs(x[1] - p[1]), period - abs(x[1] - p[1])) < 1e-6
               for p in pts):
            continue
        pts.append(x)
    out = []
    for d, s in sorted(pts, key=lambda p: (p[0], p[1])):
        ev = np.linalg.eigvals(ds_jacobian(d, s, A, B, k, R))
        D = d + abs(math.log(eps)) / SQRT2
        out.append({"d": float(d), "s": float(s), "phi_up": float((s - D) / 2),
                    "phi_down": float((s + D) / 2),
                    "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
                    "type": classify(ev)})
    return out


def _symmetric_thresholds(A, k, R, d_range):
    """A_SN and A_PF (in |A|) of the B = 0 system for structures in d_range."""
    sgnA = 1.0 if A >= 0 else -1.0
    out = []
    # family sigma: s = 0 (sigma = +1) or s = 2 pi / k (sigma = -1):
    # |A| = -sigma sgnA e^{-sqrt2 d} / sin(R + k d / 2) on arcs where positive
    for sigma, s_val in ((1, 0.0), (-1, 2 * math.pi / abs(k))):
        c = -sigma * sgnA
        # zeros of sin(theta) bound the arcs
        th_lo = R + 0.5 * k * d_range[0]
        th_hi = R + 0.5 * k * d_range[1]
        n0 = math.floor(min(th_lo, th_hi) / math.pi)
        n1 = math.ceil(max(th_lo, th_hi) / math.pi)
        for n in range(n0, n1):
            a_th, b_th = n * math.pi, (n + 1) * math.pi
            mid = 0.5 * (a_th + b_th)
            if c * math.sin(mid) <= 0:
                continue
            da = 2 * (a_th - R) / k
            db = 2 * (b_th - R) / k
            lo, hi = min(da, db), max(da, db)

            def absA(d):
                return c * math.exp(-SQRT2 * d) / math.sin(R + 0.5 * k * d)

            def dlog(d):
                # derivative of log |A|(d)
                th = R + 0.5 * k * d
                return -SQRT2 - 0.5 * k * math.cos(th) / math.sin(th)

            eps_ = 1e-9 * (hi - lo)
            d_sn = brentq(dlog, lo + eps_, hi - eps_, xtol=1e-14)
            d_pf = 2 * (mid - R) / k
            if not d_range[0] <= d_sn <= d_range[1]:
                continue
            out.append({"family": "a+" if sigma == 1 else "a-", "s": s_val,
                        "A_SN": absA(d_sn), "d_SN": d_sn,
                        "A_PF": absA(d_pf), "d_PF": d_pf})
    return sorted(out, key=lambda r: r["A_SN"])


def periodic_two_front_bifurcation(A, B, k, eps, d_range=None, A_scan=None):
    """Fixed points and bifurcation values of the two-front (d,s) system.

    For B = 0 the saddle-node and pitchfork values of |A| are located from the
    family-(a) curve |A|(d) (minimum = SN, extremum of sin = PF).  For B != 0
    both transitions are saddle-nodes, located by bisection on the fixed-point
    count as |A| is scaled over `A_scan` (a pair of multipliers).
    """
    if k <= 0:
        raise BadInput("k must be positive")
    n, R = ds_params(k, eps)
    if d_range is None:
        dc = -math.log(max(abs(A), 1e-300)) / SQRT2
        d_range = (dc - 1.0, dc + 4 * math.pi / k)
    report = {"A": A, "B": B, "k": k, "eps": eps, "N": n, "R": R, "d_range": list(d_range)}
    report["fixed_points"] = ds_fixed_points(A, B, k, eps, d_range)
    if B == 0:
        report["thresholds"] = _symmetric_thresholds(A, k, R, d_range)
        return report
    if A_scan is None:
        # bracket the B = 0 structure whose [A_SN, A_PF] lies nearest |A|
        sym = _symmetric_thresholds(A, k, R, d_range)
        if not sym:
            report["saddle_nodes"] = []
            return report
        la = math.log(abs(A))
        best = min(sym, key=lambda t: abs(la - 0.5 * math.log(t["A_SN"] * t["A_PF"])))
        lo_m, hi_m = 0.5 * best["A_SN"] / abs(A), 2.0 * best["A_PF"] / abs(A)
        d_range = (best["d_PF"] - 2 * math.pi / k, best["d_SN"] + 2 * math.pi / k)
        report["d_range"] = list(d_range)
    else:
        lo_m, hi_m = A_scan
    grid = np.geomspace(lo_m, hi_m, 80)
    counts = [len(ds_fixed_points(A * g, B, k, eps, d_range, 200, 120)) for g in grid]
    sns = []
    for i in range(len(grid) - 1):
        if counts[i + 1] > counts[i]:
            a, b = grid[i], grid[i + 1]
            ca = counts[i]
            for _ in range(30):
                mid = math.sqrt(a * b)
                if len(ds_fixed_points(A * mid, B, k, eps, d_range, 200, 120)) > ca:
                    b = mid
                else:
                    a = mid
            a_sn = A * math.sqrt(a * b)
            before = ds_fixed_points(a_sn * 0.999, B, k, eps, d_range)
            after = ds_fixed_points(a_sn * 1.001, B, k, eps, d_range)
            new = [q["type"] for q in after
                   if not any(abs(q["d"] - o["d"]) < 1e-2 and abs(q["s"] - o["s"]) < 1e-2
                              for o in before)]
            sns.append({"A_SN": abs(a_sn), "count_before": ca, "count_after": counts[i + 1],
                        "created": sorted(new)})
    report["saddle_nodes"] = sns
    return report
