import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from nlslab.expsum import ExpSumField
from nlslab.picard import first_iterate_field
from nlslab.propagator import sample_free_field, time_grid
from nlslab.spectral import FourierState, bracket, random_data
from nlslab.window import Window
from nlslab.xsb import (CSV_HEADER, TauGrid, exact_norm, restriction_norm, spacetime_transform,
                        window_family, xsb_norm)


def window_energy(w, b):
    """int <sigma>^{2b} |psi_hat(sigma)|^2 d sigma by adaptive quadrature."""
    f = lambda x: float(bracket(x)) ** (2 * b) * float(w.hat(x)) ** 2
    edges = np.concatenate([[0.0], np.geomspace(1, 2000, 40)])
    return 2 * sum(integrate.quad(f, a, c, limit=200, epsabs=1e-14)[0]
                   for a, c in zip(edges[:-1], edges[1:]))


def test_tau_grid():
    g = TauGrid(0.5, 2.0)
    np.testing.assert_allclose(g.taus, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2])
    d = TauGrid.default(4, 2.0)
    assert d.dtau == pytest.approx(math.pi / 4) and d.tau_max == 4 * 16 + 64
    with pytest.raises(ValueError):
        TauGrid(0, 1)


@pytest.mark.parametrize("s,b", [(0.0, 0.55), (-0.4, 0.7), (0.5, -0.45), (0.0, 0.0)])
def test_free_field_factorises(s, b):
    # ||psi u0||^2 = sum <n>^{2s} |a_n|^2 * int <sigma>^{2b} |psi_hat|^2
    f = random_data(-0.3, 2, 5, 11)
    w = Window()
    ref = math.sqrt(float(np.sum(bracket(f.modes) ** (2 * s) * np.abs(f.coeffs) ** 2))
                    * window_energy(w, b))
    got = xsb_norm(ExpSumField.free(f), s, b, w)
    assert got.value == pytest.approx(ref, rel=1e-9)


def test_b_zero_is_time_l2():
    # at b = 0: ||psi F||^2 = 2 pi sum_n <n>^{2s} int |psi F_n|^2 dt
    f = FourierState.single_mode(1, 1.0, 2)
    F = first_iterate_field(f, 1)
    w = Window()
    total = 0.0
    for p in range(-2, 3):
        g = lambda t: abs(w(np.array([t]))[0] * F.evaluate(t)[p]) ** 2
        total += float(bracket(p)) ** 0.6 * integrate.quad(g, -2, 2, limit=200, epsabs=1e-14)[0]
    got = xsb_norm(F, 0.3, 0.0, w).value
    assert got == pytest.approx(math.sqrt(2 * math.pi * total), rel=1e-10)


def test_exact_and_sampled_paths_agree():
    f = random_data(-0.3, 2, 4, 2)
    w = Window()
    F = first_iterate_field(f, 1) + ExpSumField.free(f)
    exact = xsb_norm(F, -0.2, 0.55, w).value
    t = time_grid(2.0, 2049)
    grid = TauGrid(math.pi / 8, 4 * 16 * 4 + 64)
    sampled = xsb_norm(F.sample(t), -0.2, 0.55, w, grid)
    assert not sampled.unreliable
    assert sampled.value == pytest.approx(exact, rel=1e-6)


def test_fft_and_direct_transforms_agree():
    f = random_data(0, 2, 3, 5)
    F = sample_free_field(f, time_grid(2.0, 257))
    # dtau chosen so 2pi/(dtau dt) is an integer (FFT) and a nearby value (direct sum)
    dt = F.dt
    g1 = TauGrid(2 * math.pi / (1024 * dt), 40.0)
    taus, A = spacetime_transform(F, Window(), g1)
    g2 = TauGrid(g1.dtau * (1 + 1e-7), 40.0)
    taus2, B = spacetime_transform(F, Window(), g2)
    assert A.shape == B.shape
    np.testing.assert_allclose(A, B, atol=1e-4)


def test_window_must_fit_grid():
    F = sample_free_field(FourierState([1.0]), time_grid(1.0, 64))
    with pytest.raises(ValueError):
        xsb_norm(F, 0, 0.5, Window())


def test_unreliable_flags():
    F = sample_free_field(random_data(0, 2, 8, 1), time_grid(2.0, 64))
    # tau_max far beyond the Nyquist frequency of a 64-point grid
    r = xsb_norm(F, 0, 0.55, Window(), TauGrid(0.5, 1000.0))
    assert r.unreliable
    # too short a tau range: the mode at tau = -36 sits at or past the edge
    G = sample_free_field(FourierState.single_mode(6, 1.0, 6), time_grid(2.0, 256))
    assert xsb_norm(G, 0, 0.55, Window(), TauGrid(0.25, 40.0)).tail_fraction > 0.01
    assert not xsb_norm(G, 0, 0.55, Window(), TauGrid(0.25, 60.0)).unreliable


def test_csv_row_layout():
    r = xsb_norm(ExpSumField.free(FourierState([1.0])), 0, 0.5)
    row = r.csv_row()
    assert len(row) == len(CSV_HEADER)
    assert row[-1] == 0 and row[-2] == r.value


def test_type_error():
    with pytest.raises(TypeError):
        xsb_norm(FourierState([1.0]), 0, 0.5)


@given(st.integers(0, 1000), st.floats(-1, 1), st.floats(-0.5, 0.9),
       st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_homogeneity(seed, s, b, c):
    F = ExpSumField.free(random_data(0, 2, 3, seed))
    a = xsb_norm(F, s, b).value
    assert xsb_norm(F * c, s, b).value == pytest.approx(abs(c) * a, rel=1e-10)


def test_far_offsets_use_series_consistently():
    # a term far from the dispersion curve: series and direct sums agree at the switch
    w = Window()
    vals = []
    for W in (15000.0, 16000.0, 17000.0):
        F = ExpSumField([0], [W], [1.0], [0], 0)
        vals.append(xsb_norm(F, 0, 0.55, w).value / bracket(W) ** 0.55)
    assert max(vals) / min(vals) - 1 < 1e-3


def test_cluster_and_isolated_paths_agree():
    # two terms: close enough to interact vs. the same pair streamed as separate blocks
    w = Window()
    near = exact_norm([(0, np.array([0.0, 0.5]), np.array([1.0, 1j]), np.array([0, 0]))],
                      0, 0.55, w)
    direct = math.sqrt(sum(abs(1.0 * w.transform(x, 0) + 1j * w.transform(x - 0.5, 0)) ** 2
                           * bracket(x) ** 1.1
                           for x in np.arange(-2000, 2000) / 4) / 4)
    assert near.value == pytest.approx(direct, rel=1e-9)


def test_non_lattice_offsets():
    w = Window()
    a = exact_norm([(0, np.array([0.0, 0.3 + 1e-3]), np.array([1.0, -1.0]),
                     np.array([0, 0]))], 0, 0.55, w)
    b = exact_norm([(0, np.array([0.0, 0.25]), np.array([1.0, -1.0]),
                     np.array([0, 0]))], 0, 0.55, w)
    assert 0 < b.value < a.value


def test_window_family_nested_and_sized():
    fam1 = window_family(0.5, 1.0)
    fam2 = window_family(0.75, 1.0)
    assert set(fam2) <= set(fam1)
    assert len(fam1) == 9 * 9
    assert all(w.plateau >= 0.5 for w in fam1)
    with pytest.raises(ValueError):
        window_family(2.0, 1.0)


def test_restriction_norm_monotone_in_T():
    F = first_iterate_field(FourierState.single_mode(1, 1.0, 1), 1)
    vals = [restriction_norm(F, T, 0, 0.55, R_max=1.0).value for T in (0.25, 0.5, 1.0)]
    assert vals[0] <= vals[1] <= vals[2]
    r = restriction_norm(F, 1.0, 0, 0.55)
    assert r.best.plateau == 1.0 and len(r.family) == 9
    assert r.value == min(v for _, v in r.family)
