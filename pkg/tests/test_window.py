import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from nlslab.window import PROFILES, TABLE_RTOL, Window, lattice_step, transform_table


def quad_transform(w, sigma, k):
    f_re = lambda t: math.cos(sigma * t) * t ** k * w(np.array([t]))[0]
    f_im = lambda t: -math.sin(sigma * t) * t ** k * w(np.array([t]))[0]
    total = 0j
    for a, b in ((-w.support, -w.plateau), (-w.plateau, w.plateau), (w.plateau, w.support)):
        total += integrate.quad(f_re, a, b, limit=1000, epsabs=1e-15, epsrel=1e-14)[0]
        total += 1j * integrate.quad(f_im, a, b, limit=1000, epsabs=1e-15, epsrel=1e-14)[0]
    return total


def test_shape():
    w = Window()
    assert w.support == 2.0 and w.alpha == 1.0
    t = np.array([-3, -2, -1.5, -1, 0, 0.5, 1, 1.5, 2, 3])
    v = w(t)
    assert v[0] == v[1] == v[-1] == v[-2] == 0
    assert np.all(v[3:7] == 1)
    assert v[2] == pytest.approx(0.5) and v[7] == pytest.approx(0.5)


def test_validation():
    with pytest.raises(ValueError):
        Window(profile="box")
    with pytest.raises(ValueError):
        Window(0, 1)
    with pytest.raises(ValueError):
        Window(power=0)


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.sampled_from(sorted(PROFILES)))
def test_monotone_even_and_bounded(R, wd, prof):
    w = Window(R, wd, prof)
    t = np.linspace(0, w.support + 0.5, 401)
    v = w(t)
    assert np.all(np.diff(v) <= 1e-15) and v.min() >= 0 and v.max() <= 1
    np.testing.assert_array_equal(w(-t), v)


@given(st.floats(0.2, 3), st.floats(0.2, 3), st.sampled_from(sorted(PROFILES)))
def test_hat_at_zero_is_area(R, wd, prof):
    # the transition is antisymmetric about its midpoint, so the area is 2R + width
    w = Window(R, wd, prof)
    assert w.hat(0.0) == pytest.approx(2 * R + wd, rel=1e-12)


@pytest.mark.parametrize("w", [Window(), Window(1.0, 0.5, "exp-hard"), Window(0.7, 1.3, "exp-soft"),
                               Window(1, 1, "exp", power=2)])
@pytest.mark.parametrize("sigma", [0.0, 1.0, 7.3, 40.0])
@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_transform_against_quadrature(w, sigma, k):
    got = w.transform(sigma, k)
    ref = quad_transform(w, sigma, k)
    assert abs(got - ref) <= 1e-11 * max(1.0, abs(ref))


def test_power_window_is_square():
    w, w2 = Window(), Window(power=2)
    t = np.linspace(-2, 2, 101)
    np.testing.assert_allclose(w2(t), w(t) ** 2)


def test_lattice_step():
    assert lattice_step(Window()) == 4
    assert lattice_step(Window(0.2, 0.2)) == 2
    assert lattice_step(Window(3, 3)) == 12


def test_table_cutoff_and_values():
    w = Window()
    q = lattice_step(w)
    J, vals = transform_table(w, q, 0)
    ref = abs(w.hat(0.0))
    assert abs(vals[J]) == pytest.approx(ref)
    assert np.max(np.abs(vals[: int(0.2 * J)])) < TABLE_RTOL * ref
    np.testing.assert_allclose(vals[J + 5], w.transform(5 / q, 0), rtol=1e-14)
    assert not vals.flags.writeable
