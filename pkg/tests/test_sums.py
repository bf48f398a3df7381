import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlslab.lab.sums import (check_convolution_lemma, check_corollary_sums, check_decay_lemma,
                             corollary_sum_1, corollary_sum_2, decay_sum, double_root_family,
                             shifted_sum_oracle, sum_quadratic, sum_shift, sup_sum_quadratic,
                             sup_sum_shift)

BIG = 10 ** 6


def brak(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def brute(term, centre=0.0, R=BIG):
    """Plain summation of term(n) over |n - centre| <= R (no tail)."""
    c = int(round(centre))
    n = np.arange(c - R, c + R + 1, dtype=float)
    return math.fsum(term(n))


def test_shift_anchor():
    v, t = sum_shift(1.0, 0.0)
    # brute force to 1e6 plus the exact integral of the omitted tail
    ref = brute(lambda n: brak(n) ** -2.0) + 2 * math.atan(1 / (BIG + 1))
    assert t < 1e-4
    assert v <= ref <= v + t
    assert v <= math.pi / math.tanh(math.pi) <= v + t


def test_shift_sup_and_order():
    r = sup_sum_shift(1.0)
    assert r.certified and r.argsup["y"] in (0.0, 1.0)
    assert sum_shift(1.0, 0.5)[0] <= sum_shift(1.0, 0.0)[0]
    # dominant n = 0 term; the n = +-1 terms add 2 * 2^-8
    v8 = sum_shift(8.0, 0.0)[0]
    assert v8 == pytest.approx(brute(lambda n: brak(n) ** -16.0, R=100), rel=1e-12)
    assert 0 < v8 - 1 < 2 ** -7 * 1.001
    with pytest.raises(ValueError):
        sum_shift(0.5, 0.0)


@given(st.floats(-50, 50), st.floats(0.55, 3))
def test_shift_periodic(y, gamma):
    assert sum_shift(gamma, y)[0] == pytest.approx(sum_shift(gamma, y + 1)[0], rel=1e-12)


@pytest.mark.parametrize("gamma,y", [(0.6, 0.3), (0.75, 0.0), (1.5, 0.9)])
def test_shift_vs_brute(gamma, y):
    v, t = sum_shift(gamma, y)
    ref = brute(lambda n: brak(n - y) ** (-2 * gamma))
    # brute misses the tail beyond 1e6; the reported sum includes an integral for it
    miss = 2 * BIG ** (1 - 2 * gamma) / (2 * gamma - 1)
    assert ref - 1e-9 <= v + t and v <= ref + miss * 1.01


def test_quadratic_examples():
    v, t, _ = sum_quadratic(1.0, 0.0, 0.0)
    ref = brute(lambda n: brak(n * n) ** -1.0, R=BIG)
    assert v - 1e-12 <= ref <= v + t
    z_vals = [sum_quadratic(1.0, 0.5, z)[0] for z in (1e2, 1e4, 1e6)]
    assert z_vals[0] > z_vals[1] > z_vals[2] and z_vals[2] < 1e-2


@pytest.mark.parametrize("gamma", [0.6, 1.0])
def test_quadratic_vs_brute(gamma):
    for y, z in ((0.4, 0.04), (1.0, -2.0), (2.0, 1.0)):
        v, t, _ = sum_quadratic(gamma, y, z)
        ref = brute(lambda n: brak(z + n * (n - y)) ** -gamma, R=200000)
        miss = 2 * 200000 ** (1 - 2 * gamma) / (2 * gamma - 1)
        assert ref - 1e-9 <= v + t and v <= ref + miss


def test_double_root_family_finite():
    r = double_root_family(1.0)
    assert r.finite and r.certified
    ref = brute(lambda n: brak(n * n) ** -1.0, R=200000)
    miss = 2 / 200000                      # omitted tail of the brute sum
    assert np.all(r.values <= ref + miss) and np.all(ref <= r.values + r.tails)


@pytest.mark.parametrize("gamma", [0.6, 0.75, 1.0])
def test_quadratic_grid_certified(gamma):
    r = sup_sum_quadratic(gamma)
    assert r.certified and r.finite
    # the double root at y = 0, z = 0 is on the grid, so the sup dominates it
    assert r.sup >= sum_quadratic(gamma, 0.0, 0.0)[0]
    assert r.max_tail < 0.01 * r.sup


def test_corollary_first_sum():
    v, t, _ = corollary_sum_1(1.0, 0, 0.0)
    ref = brute(lambda n: brak(2 * n * n) ** -1.0, R=BIG)
    assert abs(v - ref) < 1e-9 + t


def test_corollary_second_sum_rejects_diagonal():
    with pytest.raises(ValueError):
        corollary_sum_2(1.0, 3, 3, 0.0)
    with pytest.raises(ValueError):
        check_corollary_sums(1.0, 1.0, grid2=[{"m": 1, "k": 1, "tau": 0.0}])


def test_corollary_second_sum_vs_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        m, k = rng.integers(-30, 31, size=2)
        if m == k:
            k = m + 1
        tau = float(rng.uniform(-500, 500))
        v, t, _ = corollary_sum_2(0.75, int(m), int(k), tau)
        o, _ = shifted_sum_oracle(0.75, int(m), int(k), tau)
        # direct sum over the raw quadratic-phase argument
        d = 2 * abs(int(m) - int(k))
        ref = brute(lambda n: brak(tau - (n + k) ** 2 + (n + m) ** 2 + m * m) ** -1.5, R=BIG)
        # omitted tail of the brute sum: the argument is about d|n| out there
        miss = 2 * 2 * d ** -1.5 / math.sqrt(BIG - 1000)
        assert v - 1e-12 <= ref + miss and ref <= v + t + 1e-12
        worst = max(worst, v / o)
    assert worst <= 1.0


def test_corollary_uniform_in_separation():
    bound = sup_sum_shift(0.75).sup
    for d in (1, 10, 100):
        vals = [corollary_sum_2(0.75, d, 0, tau)[0] for tau in np.linspace(-300, 300, 61)]
        assert max(vals) <= bound


@pytest.mark.parametrize("gamma", [0.6, 0.75, 1.0])
def test_corollary_grids_certified(gamma):
    r1, r2 = check_corollary_sums(gamma, gamma)
    assert r1.certified and r2.certified and r1.finite and r2.finite
    assert r2.notes["max_ratio_to_shifted_oracle"] <= 1.0


def test_decay_examples():
    v, t, _ = decay_sum(1.0, 0.0)
    ref = brute(lambda n: brak(n * n) ** -1.0, R=BIG)
    assert v - 1e-12 <= ref <= v + t
    vN, _, _ = decay_sum(1.0, 100.0, "N")
    assert abs(vN / (math.pi / 2) - 1) < 0.2
    vZ, _, _ = decay_sum(1.0, 100.0, "Z")
    # Z counts n = 0 once and every other n twice
    assert vZ == pytest.approx(2 * vN - brak(100.0) / brak(1e4), rel=1e-6)
    with pytest.raises(ValueError):
        decay_sum(1.0, 1.0, "Q")


@pytest.mark.parametrize("gamma", [0.6, 0.75, 1.0])
def test_decay_certified(gamma):
    r = check_decay_lemma(gamma)
    assert r.certified and r.finite


def test_convolution_at_zero():
    r = check_convolution_lemma("gaussian", A_grid=[0.0])
    ref = integrate.quad(lambda x: math.exp(-x * x) / math.sqrt(1 + x * x), -np.inf, np.inf,
                         epsabs=1e-13)[0]
    assert r.values[0] == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("profile", ["gaussian", "cauchy3", "window-hat"])
def test_convolution_profiles(profile):
    r = check_convolution_lemma(profile)
    assert r.finite and r.notes["stable"] and r.certified
    A = [pt["A"] for pt in r.grid]
    v = dict(zip(A, r.values))
    for a in A:
        assert v[a] == pytest.approx(v[-a], rel=1e-10, abs=1e-12)
    mass = r.notes["profile_mass"]
    for a in (1e2, 1e3, 1e4):
        assert abs(v[a] / mass - 1) < 0.05


def test_convolution_unknown_profile():
    with pytest.raises(ValueError):
        check_convolution_lemma("box")


def test_report_rows_and_dict():
    r = sup_sum_shift(1.0, [0.0, 0.5])
    d = r.to_dict()
    assert d["certified"] and len(d["points"]) == 2
    assert d["points"][0]["value"] == r.values[0]
    assert r.sup == pytest.approx(max(r.values))
