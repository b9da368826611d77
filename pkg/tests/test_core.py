import numpy as np
import pytest
from scipy.integrate import quad

from acfronts.core import (NORM_UPRIME2, Field, Grid1D, Orientation, alternating_orientations,
                           hamiltonian, heteroclinic, heteroclinic_deriv, log_weight_Wh,
                           multifront_profile, sech2, weight_Wh)
from acfronts.errors import BadInput, NonMonotonePositions


def test_grid_nodes_exact():
    g = Grid1D(-10.0, 10.0, 401)
    assert g.dx == 0.05
    assert g.x[0] == -10.0 and g.x[-1] == pytest.approx(10.0, abs=1e-12)
    assert np.all(g.x == -10.0 + np.arange(401) * g.dx)
    assert Grid1D.with_spacing(-10, 10, 0.05) == g


@pytest.mark.parametrize("args", [(1.0, 0.0, 10), (0.0, 1.0, 2), (0.0, np.inf, 10), (0.0, 1.0, 3.5)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(BadInput):
        Grid1D(*args)


def test_field_validation():
    g = Grid1D(0.0, 1.0, 5)
    with pytest.raises(BadInput):
        Field(g, np.zeros(4))
    with pytest.raises(BadInput):
        Field(g, np.array([0, 1, np.nan, 0, 0]))
    assert Field(g, [1, 2, 3, 4, 5]).values.dtype == float


def test_orientation():
    assert Orientation.parse("up") is Orientation.UP
    assert Orientation.parse("-") is Orientation.DOWN
    assert Orientation.UP.flip() is Orientation.DOWN
    assert [o.sign for o in alternating_orientations("down", 3)] == [-1, 1, -1]
    with pytest.raises(BadInput):
        Orientation.parse("sideways")


def test_heteroclinic_values():
    assert heteroclinic("up", 0.0) == 0.0
    assert heteroclinic("up", 50.0) == pytest.approx(1.0)
    assert heteroclinic("down", 50.0) == pytest.approx(-1.0)
    assert heteroclinic("up", np.sqrt(2)) == pytest.approx(np.tanh(1.0), abs=1e-15)
    x = np.linspace(-20, 20, 101)
    assert np.array_equal(heteroclinic("down", x, 1.3), -heteroclinic("up", x, 1.3))


def test_heteroclinic_deriv():
    assert heteroclinic_deriv("up", 0.0) == pytest.approx(np.sqrt(2) / 2)
    assert heteroclinic_deriv("down", 0.0) == pytest.approx(-np.sqrt(2) / 2)
    x = np.linspace(-5, 5, 11)
    h = 1e-6
    fd = (heteroclinic("up", x + h, 0.4) - heteroclinic("up", x - h, 0.4)) / (2 * h)
    assert np.allclose(heteroclinic_deriv("up", x, 0.4), fd, atol=1e-9)


def test_norm_of_derivative():
    v, _ = quad(lambda x: float(heteroclinic_deriv("up", x)) ** 2, -np.inf, np.inf,
                epsabs=0, epsrel=1e-13)
    assert v == pytest.approx(2 * np.sqrt(2) / 3, rel=1e-10)
    assert NORM_UPRIME2 == pytest.approx(v, rel=1e-10)


def test_sech2_no_overflow():
    z = np.array([0.0, 1.0, 400.0, -800.0])
    with np.errstate(over="raise"):
        s = sech2(z)
    assert s[0] == 1.0
    assert s[1] == pytest.approx(1 / np.cosh(1.0) ** 2)
    assert s[2] == 0.0 or s[2] < 1e-300


def test_weight():
    assert weight_Wh(0.0) == 0.0
    assert weight_Wh(60.0) < 1e-30
    y = np.linspace(-10, 10, 200001)
    w = weight_Wh(y)
    assert np.all((w >= 0) & (w <= 0.25))
    assert w.max() == pytest.approx(0.25, abs=1e-9)
    # maximum where u_up^2 = 1/2
    ym = y[np.argmax(w)]
    assert np.tanh(ym / np.sqrt(2)) ** 2 == pytest.approx(0.5, abs=1e-4)
    assert np.array_equal(weight_Wh(y), weight_Wh(-y))
    yy = np.array([-3.0, 0.5, 7.0])
    assert np.allclose(np.exp(log_weight_Wh(yy)), weight_Wh(yy), rtol=1e-13)
    # log form stays finite where W_h itself underflows
    assert weight_Wh(1000.0) == 0.0
    assert log_weight_Wh(1000.0) == pytest.approx(np.log(4.0) - np.sqrt(2) * 1000.0, rel=1e-12)


def test_hamiltonian():
    assert hamiltonian(1.0, 0.0) == 0.25
    assert hamiltonian(-1.0, 0.0) == 0.25
    assert hamiltonian(0.0, 0.0) == 0.0
    x = np.linspace(-20, 20, 2001)
    H = hamiltonian(heteroclinic("up", x, 0.7), heteroclinic_deriv("up", x, 0.7))
    assert np.max(np.abs(H - 0.25)) < 1e-12


def test_multifront_profile():
    g = Grid1D(-10.0, 10.0, 401)
    u = multifront_profile(g, [-4, 4], "up", steepness=1.0, base_offset=-1.0)
    assert np.allclose(u.values, np.tanh(g.x + 4) - np.tanh(g.x - 4) - 1)
    assert np.all(multifront_profile(g, [], base_offset=-1.0).values == -1.0)
    single = multifront_profile(g, [0.0])
    assert np.allclose(single.values, heteroclinic("up", g.x))
    with pytest.raises(NonMonotonePositions):
        multifront_profile(g, [1.0, 0.0])
    with pytest.raises(BadInput):
        multifront_profile(g, [0.0], steepness=0.0)
