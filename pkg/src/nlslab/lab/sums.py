"""Uniform lattice-sum bounds, evaluated with certified tails.

Every sum here has a summand g(n) = <A(n)>^{-e} whose argument A is a
polynomial in n of degree one or two, so |A| increases monotonically once n
is past the real roots and the vertex.  The sum is truncated to a window
[lo, hi] beyond that point and each tail is bracketed by integrals,

    int_{hi+1}^inf g  <=  sum_{n > hi} g(n)  <=  int_{hi}^inf g,

(likewise on the left).  The reported value is the truncated sum plus the
lower brackets, hence a lower bound of the full sum; the reported tail is the
bracket width, so the full sum lies in [value, value + tail].  A point is
certified when tail < 1% of value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from ..spectral import bracket
from ..window import Window

CERTIFY_RTOL = 0.01
CSV_HEADER = ("point", "value", "tail", "certified")


@dataclass
class SupSumReport:
    """Per-point values of a lattice sum over a parameter grid, with its supremum."""

    name: str
    params: dict
    grid: list                      # one dict of coordinates per point
    values: np.ndarray
    tails: np.ndarray
    truncation: int                 # half-width of the summation window
    notes: dict = field(default_factory=dict)

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def argsup(self) -> dict:
        return self.grid[int(np.argmax(self.values))]

    @property
    def max_tail(self) -> float:
        return float(np.max(self.tails))

    @property
    def certified(self) -> bool:
        return bool(np.all(self.tails < CERTIFY_RTOL * self.values))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def rows(self):
        for pt, v, t in zip(self.grid, self.values, self.tails):
            yield pt, float(v), float(t), bool(t < CERTIFY_RTOL * v)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "truncation": self.truncation,
            "sup": self.sup,
            "argsup": self.argsup,
            "max_tail": self.max_tail,
            "certified": self.certified,
            "notes": self.notes,
            "points": [{**pt, "value": v, "tail": t, "certified": c}
                       for pt, v, t, c in self.rows()],
        }


def _require_gamma(gamma, name="gamma"):
    if not gamma > 0.5:
        raise ValueError(f"{name} must exceed 1/2, got {gamma}")


def _bracketed(term, integral, lo: int, hi: int):
    """(value, tail) for sum over all n of term(n), truncated to [lo, hi].

    ``integral(a, b)`` integrates term over [a, b] (b may be +-inf) and term
    must be monotone decreasing in |n - centre| outside [lo, hi].
    """
    n = np.arange(lo, hi + 1)
    core = math.fsum(term(n.astype(float)))
    lower = integral(hi + 1, math.inf) + integral(-math.inf, lo - 1)
    gap = integral(hi, hi + 1) + integral(lo - 1, lo)
    return core + lower, gap


def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-11)
    return val


def _bracket_power_integral(u0: float, gamma: float) -> float:
    """int_{u0}^inf (1 + u^2)^{-gamma} du for u0 >= 1, via a hypergeometric form."""
    return (u0 ** (1 - 2 * gamma) / (2 * gamma - 1)
            * special.hyp2f1(gamma, gamma - 0.5, gamma + 0.5, -1.0 / (u0 * u0)))


def _linear_integral(c: float, gamma: float):
    """Integral of (1 + (x - c)^2)^{-gamma} over [a, b] with a, b outside |x-c| < 1."""
    def F(a, b):
        ua, ub = a - c, b - c
        if ua >= 1 and ub >= 1:
            lo_ = _bracket_power_integral(ua, gamma)
            hi_ = 0.0 if math.isinf(ub) else _bracket_power_integral(ub, gamma)
            return lo_ - hi_
        if ua <= -1 and ub <= -1:
            return F(2 * c - b, 2 * c - a)
        return _quad(lambda x: (1 + (x - c) ** 2) ** -gamma, a, b)
    return F


def _linear_sum(gamma: float, centre: float, slope: float = 1.0, K: int = 1000):
    """sum_n <slope (n - centre)>^{-2 gamma}."""
    slope = abs(slope)
    c = round(centre)
    lo, hi = c - K, c + K
    term = lambda x: (1.0 + (slope * (x - centre)) ** 2) ** -gamma
    lin = _linear_integral(slope * centre, gamma)
    integral = lambda a, b: lin(slope * a if not math.isinf(a) else a,
                                slope * b if not math.isinf(b) else b) / slope
    return _bracketed(term, integral, lo, hi)


def _quadratic_sum(expo: float, a2: float, a1: float, a0: float, K: int = 400):
    """sum_n <a2 n^2 + a1 n + a0>^{-expo} with a2 > 0, expo > 1/2."""
    vertex = -a1 / (2 * a2)
    disc = a1 * a1 - 4 * a2 * a0
    root_r = math.sqrt(max(disc, 0.0)) / (2 * a2)
    R = int(math.ceil(root_r)) + K
    c = round(vertex)
    lo, hi = c - R, c + R

    def term(x):
        A = (a2 * x + a1) * x + a0
        return (1.0 + A * A) ** (-expo / 2)

    def integral(a, b):
        # split at finite points so quad sees a monotone integrand
        if math.isinf(b) and not math.isinf(a):
            return _quad(term, a, 2 * abs(a) + 10) + _quad(term, 2 * abs(a) + 10, math.inf)
        if math.isinf(a) and not math.isinf(b):
            return _quad(term, -2 * abs(b) - 10, b) + _quad(term, -math.inf, -2 * abs(b) - 10)
        return _quad(term, a, b)

    return _bracketed(term, integral, lo, hi), R


def _collect(name, params, points, fn, notes=None):
    vals, tails, trunc = [], [], 0
    for pt in points:
        v, t, r = fn(**pt)
        vals.append(v)
        tails.append(t)
        trunc = max(trunc, r)
    return SupSumReport(name, params, list(points), np.array(vals), np.array(tails), trunc,
                        notes or {})


# ---------------------------------------------------------------------------


def sum_shift(gamma: float, y: float, K: int = 1000):
    """(value, tail) of sum_n <n - y>^{-2 gamma}; y is reduced mod 1 first."""
    _require_gamma(gamma)
    y = float(y) - math.floor(float(y))
    return _linear_sum(gamma, y, 1.0, K)


def sup_sum_shift(gamma: float, y_grid=None, K: int = 1000) -> SupSumReport:
    """Sup over y of sum_n <n - y>^{-2 gamma} (1-periodic in y)."""
    _require_gamma(gamma)
    if y_grid is None:
        y_grid = np.linspace(0.0, 1.0, 21)
    pts = [{"y": float(y)} for y in y_grid]

    def fn(y):
        v, t = sum_shift(gamma, y, K)
        return v, t, K
    return _collect("sup_sum_shift", {"gamma": gamma}, pts, fn,
                    {"reduction": "y taken mod 1"})


def sum_quadratic(gamma: float, y: float, z: float, K: int = 400):
    """(value, tail, window) of sum_n <z + n(n - y)>^{-gamma}."""
    _require_gamma(gamma)
    (v, t), R = _quadratic_sum(gamma, 1.0, -float(y), float(z), K)
    return v, t, R


def default_quadratic_grid():
    """y in [0, 2] (shifting n maps y to y - 2), z offset from the double root y^2/4.

    Offsets are dense near 0, where the two roots merge, and near the
    negative squares -j^2/4 where both roots are integers.
    """
    ys = np.linspace(0.0, 2.0, 9)
    offs = sorted(set([0.0, 0.1, -0.1, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0,
                       5.0, -5.0, 20.0, -20.0, 100.0, -100.0]
                      + [-(j * j) / 4.0 for j in range(1, 9)]))
    return [{"y": float(y), "z": float(y * y / 4 + d)} for y in ys for d in offs]


def sup_sum_quadratic(gamma: float, y_grid=None, z_grid=None, K: int = 400,
                      points=None) -> SupSumReport:
    """Sup over (y, z) of sum_n <z + n(n - y)>^{-gamma}.

    Either pass explicit ``points`` (dicts with y, z), a y and z grid to be
    crossed, or nothing for default_quadratic_grid().
    """
    _require_gamma(gamma)
    if points is None:
        if y_grid is None and z_grid is None:
            points = default_quadratic_grid()
        else:
            y_grid = [0.0] if y_grid is None else y_grid
            z_grid = [0.0] if z_grid is None else z_grid
            points = [{"y": float(y), "z": float(z)} for y in y_grid for z in z_grid]
    return _collect("sup_sum_quadratic", {"gamma": gamma}, points,
                    lambda y, z: sum_quadratic(gamma, y, z, K))


def double_root_family(gamma: float, m_values=range(1, 101), K: int = 400) -> SupSumReport:
    """y = 2m, z = m^2: z + n(n - y) = (n - m)^2, the double-root stress case."""
    pts = [{"y": float(2 * m), "z": float(m * m)} for m in m_values]
    return sup_sum_quadratic(gamma, points=pts, K=K)


# ---------------------------------------------------------------------------
# corollary sums


def corollary_sum_1(gamma1: float, k: int, tau: float, K: int = 400):
    """sum_n <-tau + (n+k)^2 + n^2>^{-gamma1} = sum_n <2n^2 + 2kn + k^2 - tau>^{-gamma1}."""
    _require_gamma(gamma1, "gamma1")
    (v, t), R = _quadratic_sum(gamma1, 2.0, 2.0 * k, k * k - float(tau), K)
    return v, t, R


def corollary_sum_2(gamma2: float, m: int, k: int, tau: float, K: int = 1000):
    """sum_n <tau - (n+k)^2 + (n+m)^2 + m^2>^{-2 gamma2}, m != k.

    The argument is 2(m-k)(n + C) with C = (tau - k^2 + 2m^2) / (2(m-k)).
    """
    _require_gamma(gamma2, "gamma2")
    if m == k:
        raise ValueError("the second sum requires m != k")
    C = (float(tau) - k * k + 2.0 * m * m) / (2.0 * (m - k))
    v, t = _linear_sum(gamma2, -C, 2.0 * (m - k), K)
    return v, t, K


def shifted_sum_oracle(gamma2: float, m: int, k: int, tau: float, K: int = 1000):
    """sum_n <n + C>^{-2 gamma2}; dominates corollary_sum_2 since |2(m-k)| >= 1."""
    C = (float(tau) - k * k + 2.0 * m * m) / (2.0 * (m - k))
    return _linear_sum(gamma2, -C, 1.0, K)


def default_corollary_grids(k_max: int = 8, tau_max: float = 200.0):
    """(k, tau) grid with refinement where the first sum has a double root,
    and (m, k, tau) grid over m != k."""
    ks = list(range(-k_max, k_max + 1))
    taus = list(np.linspace(-tau_max, tau_max, 9))
    grid1 = []
    for k in ks:
        # the argument 2(n + k/2)^2 + k^2/2 - tau has a double root at tau = k^2/2
        extra = [k * k / 2.0, k * k / 2.0 + 0.5, k * k / 2.0 - 0.5]
        for tau in sorted(set(taus + extra)):
            grid1.append({"k": k, "tau": float(tau)})
    grid2 = []
    for m in range(-4, 5):
        for k in range(-4, 5):
            if m == k:
                continue
            for tau in (-50.0, -3.5, 0.0, 0.25, 7.0, 50.0):
                grid2.append({"m": m, "k": k, "tau": tau})
    return grid1, grid2


def check_corollary_sums(gamma1: float, gamma2: float, grid1=None, grid2=None,
                         K: int = 400):
    """Reports for the two corollary sums over (k, tau) and (m, k, tau) grids."""
    _require_gamma(gamma1, "gamma1")
    _require_gamma(gamma2, "gamma2")
    d1, d2 = default_corollary_grids()
    grid1 = d1 if grid1 is None else list(grid1)
    grid2 = d2 if grid2 is None else list(grid2)
    for pt in grid2:
        if pt["m"] == pt["k"]:
            raise ValueError(f"second sum requires m != k, got {pt}")
    r1 = _collect("corollary_sum_1", {"gamma1": gamma1}, grid1,
                  lambda k, tau: corollary_sum_1(gamma1, k, tau, K))
    r2 = _collect("corollary_sum_2", {"gamma2": gamma2}, grid2,
                  lambda m, k, tau: corollary_sum_2(gamma2, m, k, tau, max(K, 1000)))
    ratios = [r2.values[i] / shifted_sum_oracle(gamma2, **pt)[0] for i, pt in enumerate(grid2)]
    r2.notes["max_ratio_to_shifted_oracle"] = float(max(ratios)) if ratios else math.nan
    return r1, r2


# ---------------------------------------------------------------------------


def decay_sum(gamma: float, y: float, lattice: str = "Z", K: int = 400):
    """<y>^{2 gamma - 1} sum_n <n^2 + y^2>^{-gamma}, n over Z or over N = {0, 1, ...}."""
    _require_gamma(gamma)
    y = abs(float(y))
    scale = float(bracket(y)) ** (2 * gamma - 1)
    if lattice == "Z":
        (v, t), R = _quadratic_sum(gamma, 1.0, 0.0, y * y, K)
    elif lattice == "N":
        term = lambda x: (1.0 + (x * x + y * y) ** 2) ** (-gamma / 2)
        R = K
        n = np.arange(0, R + 1, dtype=float)
        core = math.fsum(term(n))
        v = core + _quad(term, R + 1, math.inf)
        t = _quad(term, R, R + 1)
    else:
        raise ValueError("lattice must be 'Z' or 'N'")
    return scale * v, scale * t, R


def check_decay_lemma(gamma: float, y_grid=None, lattice: str = "Z", K: int = 400) -> SupSumReport:
    """Sup over y of the scaled sum <y>^{2 gamma - 1} sum_n <n^2 + y^2>^{-gamma}."""
    _require_gamma(gamma)
    if y_grid is None:
        y_grid = np.concatenate([[0.0], np.logspace(-2, 3, 26)])
    pts = [{"y": float(y)} for y in y_grid]
    return _collect("check_decay_lemma", {"gamma": gamma, "lattice": lattice}, pts,
                    lambda y: decay_sum(gamma, y, lattice, K))


# ---------------------------------------------------------------------------
# convolution lemma: <A> int <tau + A>^{-1} |phi(tau)| dtau

PROFILE_NAMES = ("gaussian", "cauchy3", "window-hat")


def _window_derivative_bound(w: Window, order: int = 4) -> float:
    """Estimate of ||psi^(order)||_{L1}, so |psi_hat(tau)| <= bound / |tau|^order."""
    t = np.linspace(-w.support, w.support, 200001)
    d = w(t)
    h = t[1] - t[0]
    for _ in range(order):
        d = np.gradient(d, h)
    return 2.0 * float(np.sum(np.abs(d)) * h)   # factor 2: finite-difference safety


@dataclass(frozen=True)
class _Profile:
    name: str
    window: Window | None = None

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.name == "gaussian":
            return np.exp(-tau * tau)
        if self.name == "cauchy3":
            return bracket(tau) ** -3.0
        return np.abs(self.window.hat(tau))

    def mass(self, L):
        """int_{|tau|>L} |phi|."""
        if self.name == "gaussian":
            return math.sqrt(math.pi) * special.erfc(L)
        if self.name == "cauchy3":
            return 2.0 * _bracket_power_integral(L, 1.5)
        C = _window_derivative_bound(self.window)
        return 2.0 * C / (3.0 * L ** 3)

    def moment(self, L):
        """int_{|tau|>L} <tau> |phi|, used with <A> <= sqrt2 <tau + A> <tau>."""
        if self.name == "gaussian":
            return math.sqrt(math.pi) * special.erfc(L) + math.exp(-L * L)
        if self.name == "cauchy3":
            return 2.0 * _bracket_power_integral(L, 1.0)
        C = _window_derivative_bound(self.window)
        return 2.0 * C * (1.0 / (3.0 * L ** 3) + 1.0 / (2.0 * L ** 2))


def _convolution_values(prof: _Profile, A_values, L: float, h: float):
    tau = np.arange(-L, L + h / 2, h)
    phi = prof(tau)
    mass, moment = prof.mass(L), prof.moment(L)
    vals, tails = [], []
    for A in A_values:
        bA = float(bracket(A))
        vals.append(bA * integrate.simpson(phi / bracket(tau + A), x=tau))
        tails.append(min(bA * mass, math.sqrt(2.0) * moment))
    return np.array(vals), np.array(tails), float(integrate.simpson(phi, x=tau))


def check_convolution_lemma(profile: str, A_grid=None, L: float | None = None,
                            h: float = 1.0 / 64, window: Window | None = None) -> SupSumReport:
    """<A> int <tau + A>^{-1} |phi|(tau) dtau over a grid of A.

    The integral runs over [-L, L] (composite Simpson, step h); the tail is
    bounded by <A> times the omitted mass of |phi|, or by sqrt2 times its
    omitted first moment, whichever is smaller.  The report records whether
    the sup moves by less than 2% when L doubles.
    """
    if profile not in PROFILE_NAMES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILE_NAMES}")
    prof = _Profile(profile, window or Window() if profile == "window-hat" else None)
    if A_grid is None:
        A_grid = np.concatenate([-np.logspace(4, 0, 9), [0.0], np.logspace(0, 4, 9)])
    if L is None:
        L = {"gaussian": 12.0, "cauchy3": 4000.0, "window-hat": 400.0}[profile]
    pts = [{"A": float(A)} for A in A_grid]
    A_values = [pt["A"] for pt in pts]
    vals, tails, mass = _convolution_values(prof, A_values, L, h)
    vals2, _, _ = _convolution_values(prof, A_values, 2 * L, h)
    change = abs(vals2.max() - vals.max()) / vals.max()
    rep = SupSumReport("check_convolution_lemma", {"profile": profile, "L": L, "h": h},
                       pts, vals, tails, int(L))
    rep.notes["sup_change_on_doubling_L"] = float(change)
    rep.notes["stable"] = bool(change < 0.02)
    rep.notes["profile_mass"] = mass
    return rep
