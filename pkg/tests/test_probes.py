import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlslab.expsum import ExpSumField
from nlslab.lab.probes import (bilinear_ratio, check_cp_bound, check_smoothing_pre,
                               kpv_bilinear_ratio, kpv_failure_probe, last_three_spread,
                               proof_symbols, random_expsum_field, smoothing_sweep, sup_I)
from nlslab.propagator import time_grid
from nlslab.spectral import FourierState, edge_data, hsp_norm, random_data
from nlslab.window import Window


def brak(x):
    return math.sqrt(1.0 + x * x)


def tau_integral(g, centres, L=2000.0):
    """int g(tau) d tau, split at the given centres, over [min - L, max + L]."""
    cs = sorted(centres)
    edges = sorted(set([cs[0] - L] + [c + d for c in cs for d in (-50, -5, 0, 5, 50)]
                       + [cs[-1] + L]))
    return sum(integrate.quad(g, a, c, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
               for a, c in zip(edges[:-1], edges[1:]))


def free_norm(amp, n, s, b, w):
    """||psi e^{-in^2 t} e^{inx}||_{X^{s,b}} by quadrature."""
    g = lambda x: brak(x) ** (2 * b) * float(w.hat(x)) ** 2
    return abs(amp) * brak(n) ** s * math.sqrt(tau_integral(g, [0.0]))


# ---------------------------------------------------------------------------
# c_p bound


def test_cp_single_mode_is_window_transform():
    w = Window()
    f = FourierState.single_mode(3, 0.7 - 0.2j, 3)
    taus = np.linspace(10, 26, 33)
    rep = check_cp_bound(f, w, taus)
    assert {pt["p"] for pt in rep.points} == {-6}
    expect = np.abs(w.hat(np.array([pt["tau"] for pt in rep.points]) - 18.0))
    np.testing.assert_allclose(rep.ratios, expect, rtol=1e-12, atol=1e-300)


def test_cp_homogeneous():
    f = random_data(0, 2, 16, 3)
    a = check_cp_bound(f)
    b = check_cp_bound(f * 2)
    np.testing.assert_allclose(b.ratios, a.ratios, rtol=1e-9)


def test_cp_lattice_lookup_matches_direct():
    f = random_data(0, 2, 6, 1)
    w = Window()
    rep = check_cp_bound(f, w, p_set=[-3, 0, 4])
    taus = sorted({pt["tau"] for pt in rep.points if pt["p"] == 4})
    direct = check_cp_bound(f, w, np.array(taus) + 1e-7, p_set=[4])
    lattice = [r for pt, r in zip(rep.points, rep.ratios) if pt["p"] == 4]
    np.testing.assert_allclose(direct.ratios, lattice, rtol=1e-5)


def test_cp_constant_stable_in_N():
    s64 = check_cp_bound(random_data(0, 2, 64, 5)).sup
    s128 = check_cp_bound(random_data(0, 2, 128, 5)).sup
    assert math.isfinite(s64) and abs(s128 / s64 - 1) < 0.1


# ---------------------------------------------------------------------------
# I(k, tau)


def I_oracle(m0, amp, s, b, k, tau, N_sum):
    total = 0.0
    for n in range(-N_sum, N_sum + 1):
        R1 = -tau + (n + k) ** 2 + n * n
        R2 = tau - (n + k) ** 2 + m0 * m0 + (n + m0) ** 2
        total += (brak(n) ** (2 * s) * brak(n + m0) ** (-2 * s)
                  * brak(R1) ** (-2 * (1 - b)) * brak(R2) ** (-2 * b))
    return abs(amp) ** 2 * total


@pytest.mark.parametrize("k,tau", [(0, 0.0), (2, 3.5), (-5, 40.0)])
def test_I_single_mode(k, tau):
    f = FourierState.single_mode(2, 0.5, 4)
    rep = sup_I(f, -0.3, 0.55, [k], [tau])
    ref = I_oracle(2, 0.5, -0.3, 0.55, k, tau, 16)
    assert rep.values[0] == pytest.approx(ref, rel=1e-12)
    diag = rep.notes["m_eq_k"][0]
    assert (diag > 0) == (k == 2) or diag == 0


def test_I_diagonal_split():
    f = FourierState.single_mode(2, 1.0, 4)
    rep = sup_I(f, 0.0, 0.55, [2, 3], [1.0])
    assert rep.notes["m_ne_k"][0] == 0 and rep.notes["m_eq_k"][0] > 0
    assert rep.notes["m_eq_k"][1] == 0 and rep.notes["m_ne_k"][1] > 0


@given(st.integers(0, 100), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
@settings(max_examples=15)
def test_I_quadratic_in_f(seed, c):
    f = random_data(-0.2, 2.5, 4, seed)
    a = sup_I(f, -0.2, 0.55)
    b = sup_I(f * c, -0.2, 0.55)
    np.testing.assert_allclose(b.values, abs(c) ** 2 * a.values, rtol=1e-12)


def test_I_scaled_sup_stable():
    sups = [sup_I(edge_data(-0.3, 2.5, N), -0.2, 0.55, s0=-0.3, p=2.5).notes["scaled_sup"]
            for N in (32, 64, 128)]
    assert all(math.isfinite(x) for x in sups)
    assert max(sups) / min(sups) - 1 < 0.5


def test_I_rejects_small_window():
    with pytest.raises(ValueError):
        sup_I(random_data(0, 2, 8, 0), 0, 0.55, N_sum=4)


# ---------------------------------------------------------------------------
# bilinear ratio


def test_bilinear_single_modes_by_hand():
    s, b, s0, p = -0.4, 0.55, -0.45, 2.5
    w = Window()
    a, c = 0.8 + 0.1j, -0.3 + 0.5j
    f = FourierState.single_mode(1, a, 2)
    v = ExpSumField.free(FourierState.single_mode(2, c, 2))
    # conj(u0 v) sits on mode q = -3 with frequency w1 = 1 + 4; the Duhamel
    # integral is conj(ac)/(i Omega) (e^{i w1 t} - e^{-i q^2 t}), Omega = q^2 + w1
    q, w1 = -3, 5.0
    Om = q * q + w1
    C = np.conj(a * c) / (1j * Om)
    g = lambda x: (brak(x + q * q) ** (2 * b)
                   * abs(C * (float(w.hat(x - w1)) - float(w.hat(x + q * q)))) ** 2)
    num = brak(q) ** s * math.sqrt(tau_integral(g, [w1, -q * q]))
    den = abs(a) * brak(1) ** s0 * free_norm(c, 2, s, b, w)
    assert bilinear_ratio(f, v, s, b, s0, p, w) == pytest.approx(num / den, rel=1e-8)


@given(st.integers(0, 1000), st.complex_numbers(min_magnitude=0.01, max_magnitude=100),
       st.complex_numbers(min_magnitude=0.01, max_magnitude=100))
@settings(max_examples=10)
def test_bilinear_scale_invariant(seed, c1, c2):
    f = random_data(-0.45, 2.5, 6, seed)
    v = random_expsum_field(6, seed + 1)
    r = bilinear_ratio(f, v, -0.4, 0.55, -0.45, 2.5)
    assert bilinear_ratio(f * 3, v * 5, -0.4, 0.55, -0.45, 2.5) == pytest.approx(r, rel=1e-9)
    assert bilinear_ratio(f * c1, v * c2, -0.4, 0.55, -0.45, 2.5) == pytest.approx(r, rel=1e-9)


def test_bilinear_exact_and_sampled_paths_agree():
    f = random_data(-0.45, 2.5, 4, 2)
    v = random_expsum_field(4, 3)
    exact = bilinear_ratio(f, v, -0.4, 0.55, -0.45, 2.5)
    sampled = bilinear_ratio(f, v.sample(time_grid(2.0, 4097)), -0.4, 0.55, -0.45, 2.5)
    assert sampled == pytest.approx(exact, rel=1e-4)


def test_bilinear_rejects_zero():
    f = random_data(0, 2, 3, 0)
    with pytest.raises(ValueError):
        bilinear_ratio(FourierState.zeros(3), random_expsum_field(3, 0), 0, 0.55, 0, 2)
    with pytest.raises(ValueError):
        bilinear_ratio(f, random_expsum_field(3, 0) * 0, 0, 0.55, 0, 2)
    with pytest.raises(TypeError):
        bilinear_ratio(f, f, 0, 0.55, 0, 2)


# ---------------------------------------------------------------------------
# product estimate


def test_kpv_single_mode_by_hand():
    s, b, n = -0.3, 0.55, 3
    w = Window()
    w2 = Window(w.plateau, w.width, w.profile, 2)
    c = 0.6 - 0.7j
    v = ExpSumField.free(FourierState.single_mode(n, c, n))
    # conj(v)^2 = conj(c)^2 e^{2 i n^2 t} on mode -2n
    g = lambda x: brak(x + 6 * n * n) ** (2 * (b - 1)) * float(w2.hat(x)) ** 2
    num = abs(c) ** 2 * brak(2 * n) ** s * math.sqrt(tau_integral(g, [0.0, -6 * n * n]))
    den = free_norm(c, n, s, b, w) ** 2
    assert kpv_bilinear_ratio(v, v, s, b, w) == pytest.approx(num / den, rel=1e-8)


def test_kpv_scale_invariant_and_types():
    v, u = random_expsum_field(5, 1), random_expsum_field(5, 2)
    r = kpv_bilinear_ratio(v, u, -0.2, 0.55)
    assert kpv_bilinear_ratio(v * (2 - 1j), u * 0.1j, -0.2, 0.55) == pytest.approx(r, rel=1e-9)
    with pytest.raises(TypeError):
        kpv_bilinear_ratio(v, u.sample(time_grid(2.0, 64)), 0, 0.55)


def test_kpv_bounded_over_random_pairs():
    r = np.array([kpv_bilinear_ratio(random_expsum_field(64, 2 * i), random_expsum_field(64, 2 * i + 1),
                                     0.0, 0.55) for i in range(50)])
    assert r.max() / np.median(r) <= 10


def test_kpv_failure_probe_grows():
    rep = kpv_failure_probe(-0.6, 0.55)
    assert rep["monotone_growth"]
    assert rep["fitted_exponent"] == pytest.approx(rep["predicted_exponent"], abs=0.05)
    calm = kpv_failure_probe(-0.2, 0.55)
    assert not calm["monotone_growth"]


# ---------------------------------------------------------------------------
# smoothing sweep


def test_smoothing_precondition():
    check_smoothing_pre(2, 0)
    check_smoothing_pre(2.5, -0.3)
    with pytest.raises(ValueError, match="s < -1 \\+ 2/p"):
        check_smoothing_pre(2.5, -0.1)
    with pytest.raises(ValueError):
        smoothing_sweep(-0.45, 2.5, 0.0, 0.55, [8, 16, 32])


def test_smoothing_sweep_small():
    rep = smoothing_sweep(-0.45, 2.0, 0.0, 0.55, [8, 16, 32, 64])
    assert len(rep.ratios) == 4 and rep.spread == last_three_spread(rep.ratios)
    assert rep.ratios[-1] / rep.ratios[-2] < 1.2
    contrast = smoothing_sweep(-0.45, 2.0, 0.0, 0.55, [8, 16, 32, 64], denominator="h0")
    assert np.all(np.diff(contrast.ratios) < 0)
    assert rep.diagnostics == proof_symbols(-0.45, 0.0, 0.55)


def test_smoothing_sweep_validation():
    with pytest.raises(ValueError):
        smoothing_sweep(-0.45, 2.0, 0.0, 0.55, [8, 16])
    with pytest.raises(ValueError):
        smoothing_sweep(-0.45, 2.0, 0.0, 0.55, [8, 16, 32], family="bogus")


def test_proof_symbols():
    d = proof_symbols(-0.45, -0.4, 0.55)
    assert d["beta"] == pytest.approx(0.9) and d["sigma0"] == 0.45
    assert d["theta"] == pytest.approx(1.1 / 2.7)
