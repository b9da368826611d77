import json
import math
import warnings

import numpy as np
import pytest
from scipy.special import lambertw

from acfronts.core import NORM_UPRIME2
from acfronts.errors import (BadInput, ConditionNotSatisfied, MuOutOfValidity,
                             SeparationTooSmall)
from acfronts.forcing import CosSinTriple, ExpHill, Sinusoid, TopographyDriven, Zero
from acfronts.frontdyn import C_NORM, FrontState, jacobian, nfront_rhs
from acfronts.melnikov import MelnikovFn
from acfronts.stationary import (classify, ds_fixed_points, enumerate_stationary_localized,
                                 enumerate_stationary_periodic, localized_seed, mu_star, nu_N,
                                 nu_sequence, one_front_find, periodic_eigen_law_error,
                                 periodic_two_front_bifurcation, two_front_eigenvalues,
                                 two_front_solve, write_report)

SQ2 = math.sqrt(2.0)


class TailModel:
    """Leading-order far-tail Melnikov function of ExpHill(1): R = -16 sqrt2 phi e^{-sqrt2 |phi|}."""

    def both(self, phi):
        phi = np.asarray(phi, dtype=float)
        e = np.exp(-SQ2 * np.abs(phi))
        r = -16 * SQ2 * phi * e
        d = -16 * SQ2 * e * (1 - SQ2 * np.abs(phi))
        return r, d


# ------------------------------------------------------------------ one front

def test_one_front_triple_zeros():
    k = 1.3
    m = MelnikovFn(CosSinTriple(0.5, 0.2, 0.1, k))
    fr = one_front_find(m, (-6.0, 6.0), eps=0.1)
    zeros = np.array([f.kind["phi_star"] for f in fr])
    ell = zeros * k / math.pi
    assert np.allclose(ell, np.round(ell), atol=1e-9)
    assert len(fr) == len(np.arange(math.ceil(-6 * k / math.pi), math.floor(6 * k / math.pi) + 1))
    for f in fr:
        assert f.eigenvalues[0].real == pytest.approx(-0.1 * C_NORM * f.kind["Rprime"])
        assert f.stable == (f.kind["Rprime"] > 0)


def test_one_front_exphill():
    fr = one_front_find(MelnikovFn(TopographyDriven(ExpHill(1.0))), (-10, 10), eps=0.01)
    assert len(fr) == 3
    assert fr[1].kind["phi_star"] == pytest.approx(0.0, abs=1e-10)
    assert [f.stable for f in fr] == [False, True, False]


def test_one_front_zero_forcing_degenerate():
    fr = one_front_find(MelnikovFn(Zero()))
    assert fr.degenerate and len(fr) == 0


# ------------------------------------------------------------------ two fronts

def test_two_front_lambert_anchor():
    eps = 0.01
    f = two_front_solve(TailModel(), TailModel(), eps, (-2.0, 2.0))
    phi = float(np.real(lambertw(1 / eps))) / SQ2
    assert phi == pytest.approx(2.394, abs=1e-3)
    assert np.allclose(f.positions, [-phi, phi], atol=1e-9)


def test_two_front_solve_exact_condition():
    m = MelnikovFn(TopographyDriven(ExpHill(1.0)))
    eps = 0.01
    f = two_front_solve(m, m, eps, (-3.0, 3.0))
    pu, pd = f.positions
    assert pu == pytest.approx(-pd, abs=1e-8)
    target = 16 * math.exp(-SQ2 * (pd - pu)) / eps
    assert m.value(pu) == pytest.approx(target, rel=1e-9)
    assert m.value(pd) == pytest.approx(-target, rel=1e-9)
    assert f.newton_residual < 1e-10
    with pytest.raises(BadInput):
        two_front_solve(m, m, eps, (1.0, -1.0))


def test_two_front_decoupled_limit():
    # far apart the conditions reduce to R_up = 0 and R_down = 0
    m = MelnikovFn(TopographyDriven(Sinusoid(1.0, 2.0)))
    eps = 0.1
    z0 = math.pi / 4
    assert abs(m.value(z0)) < 1e-12
    shifts = []
    for n in (3, 5):
        zeros = np.array([z0, z0 + n * math.pi])
        f = two_front_solve(m, m, eps, tuple(zeros + 0.05))
        shifts.append(np.max(np.abs(f.positions - zeros)))
        bound = 16 * math.exp(-SQ2 * np.diff(f.positions)[0]) / eps
        assert m.value(f.positions[0]) == pytest.approx(bound, rel=1e-8)
    assert shifts[1] < 1e-3 * shifts[0] < 1e-6


def test_two_front_eigenvalues_symmetric():
    m = MelnikovFn(TopographyDriven(ExpHill(1.0)))
    eps = 0.01
    f = two_front_solve(m, m, eps, (-3.0, 3.0))
    pu, pd = f.positions
    st = two_front_eigenvalues(pu, pd, m, m, eps)
    dR = m.deriv(pu)
    e = math.exp(-SQ2 * (pd - pu)) / eps
    pair = {round(st.gamma_plus_1): st.lambda_bar1, round(st.gamma_plus_2): st.lambda_bar2}
    assert set(pair) == {-1, 1}
    assert pair[1] == pytest.approx(-dR / NORM_UPRIME2, rel=1e-10)
    assert pair[-1] == pytest.approx(-(dR - 32 * SQ2 * e) / NORM_UPRIME2, rel=1e-10)
    assert abs(abs(st.gamma_plus_1) - 1) < 1e-10
    ev = np.sort(np.linalg.eigvals(jacobian(FrontState(f.positions, "up", eps), m, m)).real)
    assert np.allclose(np.sort([st.lambda1, st.lambda2]), ev, rtol=1e-6)
    assert st.discriminant_D >= 0
    # symmetric stability criterion given R' > 0 > R at phi* = pd
    crit = m.deriv(pd) + 2 * SQ2 * m.value(pd) > 0
    assert crit == (max(st.lambda1, st.lambda2) < 0)


def test_two_front_eigenvalues_asymmetric_vs_jacobian():
    f0 = CosSinTriple(0.3, 0.2, -0.1, 2.0)
    mu_, md = MelnikovFn(f0, "up"), MelnikovFn(f0, "down")
    eps = 0.01
    zu = one_front_find(mu_, (-2, 2), eps)
    zd = one_front_find(md, (4, 8), eps)
    f = two_front_solve(mu_, md, eps, (zu[0].positions[0], zd[-1].positions[0]))
    st = two_front_eigenvalues(*f.positions, mu_, md, eps)
    ev = np.sort(np.linalg.eigvals(jacobian(FrontState(f.positions, "up", eps), mu_, md)).real)
    assert np.allclose(np.sort([st.lambda1, st.lambda2]), ev, rtol=1e-6)


def test_two_front_eigenvalues_condition_check():
    m = MelnikovFn(TopographyDriven(ExpHill(1.0)))
    with pytest.raises(ConditionNotSatisfied):
        two_front_eigenvalues(-1.0, 1.0, m, m, 0.01)


# ------------------------------------------------------------ localized patterns

def test_mu_star_and_nu():
    assert mu_star(2) == 0.5
    assert mu_star(3) == pytest.approx(0.29289, abs=1e-5)
    with pytest.raises(BadInput):
        mu_star(1)
    assert nu_N(0.2, 3) == pytest.approx(2.8125)
    assert nu_sequence(0.2, 3)[-1] == pytest.approx(nu_N(0.2, 3))
    for N in (2, 3, 5):
        assert nu_N(1e-8, N) == pytest.approx(N - 1, rel=1e-6)


def test_localized_seed_plan():
    m = MelnikovFn(TopographyDriven(ExpHill(0.2)))
    plan, phi = localized_seed(1, 2, m, 1e-5, n_left=1)
    assert plan.nu == pytest.approx(1 / 1.8)
    assert plan.nu1 == pytest.approx(0.25) and plan.nu2 == pytest.approx(1.25)
    assert phi[0] < 0 < phi[1]
    with pytest.warns(MuOutOfValidity):
        localized_seed(2, 3, MelnikovFn(TopographyDriven(ExpHill(0.4))), 1e-5, zero_psi=0.0)
    with pytest.raises(BadInput):
        localized_seed(4, 2, m, 1e-5, zero_psi=0.0, index=1)


@pytest.mark.parametrize("mu,eps", [(0.25, 1e-4), (0.2, 1e-6), (0.28, 1e-4)])
def test_count_law_valid_regime(mu, eps):
    m = MelnikovFn(TopographyDriven(ExpHill(mu)))
    assert len(one_front_find(m, (-20, 20), eps)) == 1  # K = 1 below the pitchfork
    for N in (2, 3):
        errs = []
        fr = enumerate_stationary_localized(m, eps, N, collect_errors=errs)
        assert len(fr) == 2 * N - 1
        assert all(f.max_real_eigenvalue > 0 for f in fr)
        assert all(f.newton_residual < 1e-10 for f in fr)
        for f in fr:
            r = nfront_rhs(FrontState(f.positions, "up", eps), m)
            assert np.max(np.abs(r)) < 1e-9 * eps


def test_valley_has_no_multifronts():
    for N in (2, 3):
        with pytest.warns(MuOutOfValidity):
            assert enumerate_stationary_localized(ExpHill(0.8, -1), 1e-3, N) == []


# ------------------------------------------------------------ periodic patterns

def test_periodic_counts_and_stability():
    m = MelnikovFn(TopographyDriven(Sinusoid(1.0, 2.0)))
    eps = 1e-6
    fr = enumerate_stationary_periodic(m, eps, 2, [5])
    K = 2
    assert len(fr) == K ** 2
    assert sum(f.stable for f in fr) == (K // 2) ** 2
    for f in fr:
        assert min(f.kind["rho"]) >= 1.2
        assert periodic_eigen_law_error(f) < 0.1


def test_periodic_triple_two_fronts():
    f0 = CosSinTriple(0.4, 0.1, 0.0, 2.0)
    mu_, md = MelnikovFn(f0, "up"), MelnikovFn(f0, "down")
    fr = enumerate_stationary_periodic(mu_, 1e-6, 2, [6], mel_down=md)
    assert len(fr) == 4
    assert sum(f.stable for f in fr) == 1


def test_periodic_separation_too_small():
    m = MelnikovFn(TopographyDriven(Sinusoid(1.0, 2.0)))
    with pytest.raises(SeparationTooSmall):
        enumerate_stationary_periodic(m, 1e-6, 2, [1])
    with pytest.raises(BadInput):
        enumerate_stationary_periodic(m, 1e-6, 3, [5])


# --------------------------------------------------- (d,s) bifurcation analysis

K_DS, EPS_DS = 2.0, 0.01


@pytest.fixture(scope="module")
def ds_thresholds():
    rep = periodic_two_front_bifurcation(-0.05, 0.0, K_DS, EPS_DS)
    return rep["thresholds"][0]


def _types(A, B, th):
    fps = ds_fixed_points(A, B, K_DS, EPS_DS, (th["d_PF"] - 1, th["d_SN"] + 1))
    return sorted(p["type"] for p in fps)


def test_saddle_node_creates_saddle_and_stable_node(ds_thresholds):
    th = ds_thresholds
    assert th["A_SN"] < th["A_PF"]
    before = _types(-0.98 * th["A_SN"], 0.0, th)
    after = _types(-1.02 * th["A_SN"], 0.0, th)
    new = list(after)
    for t in before:
        new.remove(t)
    assert sorted(new) == ["saddle", "stable node"]


def test_pitchfork_splits_saddles(ds_thresholds):
    th = ds_thresholds
    before = _types(-0.98 * th["A_PF"], 0.0, th)
    after = _types(-1.02 * th["A_PF"], 0.0, th)
    assert after.count("saddle") == before.count("saddle") + 1
    assert after.count("unstable node") == before.count("unstable node") + 1
    assert len(after) == len(before) + 2


def test_broken_symmetry_gives_two_saddle_nodes(ds_thresholds):
    A = ds_thresholds["A_SN"]
    rep = periodic_two_front_bifurcation(-1.1 * A, 0.1 * A, K_DS, EPS_DS)
    sn = rep["saddle_nodes"]
    assert len(sn) == 2
    assert all(s["count_after"] == s["count_before"] + 2 for s in sn)
    assert sorted(sn[0]["created"]) == ["saddle", "stable node"]


def test_classify():
    assert classify(np.array([-1.0, -2.0])) == "stable node"
    assert classify(np.array([1.0, -2.0])) == "saddle"
    assert classify(np.array([1.0 + 1j, 1.0 - 1j])) == "unstable focus"
    assert classify(np.array([0.0, -1.0])) == "degenerate"


def test_write_report(tmp_path):
    m = MelnikovFn(TopographyDriven(ExpHill(1.0)))
    fr = one_front_find(m, (-10, 10), 0.01)
    p = tmp_path / "r.json"
    write_report(p, fr)
    data = json.load(open(p))
    assert len(data) == 3
    assert set(data[0]) == {"kind", "positions", "first", "eigenvalues", "residual", "seed"}
    assert data[1]["kind"]["type"] == "OneFront"
    assert len(data[1]["eigenvalues"][0]) == 2
