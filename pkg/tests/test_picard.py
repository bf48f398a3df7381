import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from nlslab.picard import (ContractionReport, NormSpec, ResonanceDatum, apply_K, duhamel,
                           duhamel_field, first_iterate, first_iterate_field, omega, phi,
                           picard_solve, rescaled_solve, sample_first_iterate)
from nlslab.propagator import (SpaceTimeField, conjugate_square, evolve, sample_free_field,
                               time_grid)
from nlslab.spectral import FourierState, random_data


def brute_first_iterate(f, kappa, t):
    """Mode-by-mode quadrature of -i kappa int_0^t e^{i(t-t')Lap} conj(u0(t'))^2 dt'."""
    N = f.N
    out = np.zeros(2 * N + 1, dtype=complex)

    def rhs(s):
        a = evolve(f, s).coeffs
        full = np.zeros(4 * N + 1, dtype=complex)
        for i, n in enumerate(f.modes):
            for j, m in enumerate(f.modes):
                full[-(n + m) + 2 * N] += np.conj(a[i] * a[j])
        return full[N:3 * N + 1]

    for i, p in enumerate(f.modes):
        g = lambda s: np.exp(1j * p * p * s) * rhs(s)[i]
        re = integrate.quad(lambda s: g(s).real, 0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        im = integrate.quad(lambda s: g(s).imag, 0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        out[i] = -1j * kappa * np.exp(-1j * p * p * t) * (re + 1j * im)
    return out


def test_omega_and_resonance():
    assert omega(0, 0) == 0
    assert ResonanceDatum(0, 0).resonant and not ResonanceDatum(1, -2).resonant
    n, p = np.meshgrid(np.arange(-20, 21), np.arange(-20, 21))
    W = omega(n, p)
    assert np.all(W[(n != 0) | (p != 0)] > 0)
    assert ResonanceDatum(1, -2).omega == 6


def test_phi_closed_form():
    assert phi(0.0, 0.7) == 0.7
    for W in (0.3, 6.0, 1e4):
        for t in (0.1, 1.0, 3.0):
            ref = (np.exp(1j * W * t) - 1) / (1j * W)
            assert abs(phi(W, t) - ref) <= 1e-12 * max(1.0, abs(ref))
    # small W: Taylor series t + iWt^2/2 - W^2 t^3/6, no cancellation
    for W in (1e-9, 1e-6):
        t = 3.0
        ref = t + 0.5j * W * t * t - W * W * t ** 3 / 6
        assert abs(phi(W, t) - ref) <= 1e-15 * t


def test_single_mode_value():
    f = FourierState.single_mode(1, 1.0, 2)
    for t in np.linspace(-2, 2, 41):
        u1 = first_iterate(f, 1, t, retain="2N")
        ref = -(np.exp(2j * t) - np.exp(-4j * t)) / 6
        assert abs(u1[-2] - ref) <= 1e-12


@pytest.mark.parametrize("kappa", [1, -1])
def test_first_iterate_vs_quadrature(kappa):
    f = random_data(-0.2, 2, 3, 4)
    for t in (0.3, 1.1):
        ref = brute_first_iterate(f, kappa, t)
        np.testing.assert_allclose(first_iterate(f, kappa, t).coeffs, ref, atol=1e-10)


def test_field_matches_pointwise():
    f = random_data(0, 2, 4, 9)
    F = first_iterate_field(f, -1)
    for t in (-0.7, 0.0, 0.4, 1.3):
        np.testing.assert_allclose(F.evaluate(t).coeffs, first_iterate(f, -1, t).coeffs, atol=1e-13)


def test_resonant_branch_grows_linearly():
    f = FourierState.single_mode(0, 1.0, 1)
    for t in (0.5, 2.0):
        assert first_iterate(f, 1, t)[0] == pytest.approx(-1j * t, abs=1e-14)


def test_retain_and_kappa_validation():
    f = FourierState([1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        first_iterate(f, 2, 0.1)
    with pytest.raises(ValueError):
        first_iterate(f, 1, 0.1, retain="3N")
    assert not np.any(first_iterate(f, 1, 0.0).coeffs)


@pytest.mark.parametrize("rule,order", [("trapezoid", 2), ("cubic", 4)])
def test_duhamel_order(rule, order):
    f = random_data(0, 2, 4, 1)
    errs = []
    for M in (128, 256, 512):
        u0 = sample_free_field(f, time_grid(1.0, M))
        got = duhamel(conjugate_square(u0), 1, 0.75, rule)
        errs.append(np.max(np.abs(got.coeffs - first_iterate(f, 1, 0.75).coeffs)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - order) < 0.3), rates


def test_duhamel_field_matches_pointwise():
    f = random_data(0, 2, 3, 6)
    u0 = sample_free_field(f, time_grid(1.0, 129))
    D = duhamel_field(conjugate_square(u0), 1, "cubic")
    for k in (0, 40, 64, 100, 128):
        np.testing.assert_allclose(D.values[k], duhamel(conjugate_square(u0), 1, u0.times[k]).coeffs,
                                   atol=1e-13)
    assert not np.any(D.values[64])  # t = 0


def test_apply_K_at_zero_is_first_iterate():
    f = random_data(0, 2, 3, 2)
    t = time_grid(1.0, 65)
    v = SpaceTimeField.zeros(t, 3)
    np.testing.assert_array_equal(apply_K(v, f, 1).values, sample_first_iterate(f, 1, t).values)
    with pytest.raises(ValueError):
        apply_K(SpaceTimeField.zeros(t, 2), f, 1)


def test_picard_converges_small_data():
    f = FourierState.single_mode(1, 1e-3, 2)
    rep = picard_solve(f, 1, 1.0, M=512)
    assert rep.converged and not rep.diverged
    assert all(q < 0.5 for q in rep.contraction_factors)
    assert rep.integral_residual <= 1e-8
    d = json.loads(rep.to_json())
    assert d["converged"] and d["N"] == 2 and len(d["residual_history"]) == rep.iterates


def test_picard_diverges_large_data():
    f = random_data(0, 2, 3, 0) * 50
    rep = picard_solve(f, 1, 1.0, M=256, max_iter=30)
    assert rep.diverged and not rep.converged


def test_picard_validation():
    f = FourierState([1.0])
    for kw in ({"T": 0}, {"tol": 0}, {"max_iter": 0}, {"kappa": 0}):
        with pytest.raises(ValueError):
            picard_solve(f, **kw)
    with pytest.raises(ValueError):
        NormSpec(math.inf, 0.5)


def test_rescaled_solve_returns_first_converged():
    f = FourierState.single_mode(1, 1e-3, 1)
    lam, rep = rescaled_solve(f, 1, 1.0, lam_max=4, M=256)
    assert lam == 1 and rep.converged
