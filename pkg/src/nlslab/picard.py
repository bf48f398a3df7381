"""First Picard iterate, Duhamel quadrature and the contraction solver.

Equation: i u_t + u_xx = kappa * conj(u)^2, u(0) = f, |kappa| = 1.
The first iterate u1 = -i kappa int_0^t e^{i(t-t')Lap} conj(u0)^2 dt' has mode

    u1_p(t) = -i kappa e^{-i p^2 t} sum_n conj(a_n a_{-n-p}) Phi(Omega(n, p), t),

Omega(n, p) = n^2 + (n+p)^2 + p^2 and Phi(W, t) = int_0^t e^{iWt'} dt'.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .expsum import ExpSumField
from .propagator import (DEFAULT_M, SpaceTimeField, conjugate_product,
                         conjugate_square, sample_free_field, time_grid)
from .spectral import FourierState, rescale
from .window import Window
from .xsb import TauGrid, xsb_norm


def _check_kappa(kappa):
    if kappa not in (1, -1):
        raise ValueError(f"kappa must be +1 or -1, got {kappa}")


def omega(n, p):
    """Resonance denominator n^2 + (n+p)^2 + p^2 (integer, zero only at n = p = 0)."""
    n = np.asarray(n, dtype=np.int64)
    p = np.asarray(p, dtype=np.int64)
    return n * n + (n + p) * (n + p) + p * p


@dataclass(frozen=True)
class ResonanceDatum:
    n: int
    p: int

    @property
    def omega(self) -> int:
        return int(omega(self.n, self.p))

    @property
    def resonant(self) -> bool:
        return self.omega == 0


def phi(W, t):
    """int_0^t e^{iWt'} dt'.  Exactly t at W = 0; otherwise the cancellation-free
    form 2 sin(Wt/2) e^{iWt/2} / W of (e^{iWt} - 1)/(iW)."""
    W = np.asarray(W, dtype=float)
    t = np.asarray(t, dtype=float)
    W, t = np.broadcast_arrays(W, t)
    out = np.empty(W.shape, dtype=complex)
    zero = W == 0
    out[zero] = t[zero]
    nz = ~zero
    half = 0.5 * W[nz] * t[nz]
    out[nz] = 2.0 * np.sin(half) * np.exp(1j * half) / W[nz]
    return out if out.ndim else complex(out)


def _pair_coeffs(f: FourierState, p: int):
    """(n, conj(a_n a_{-n-p})) over n with both indices inside the radius."""
    N = f.N
    lo, hi = max(-N, -N - p), min(N, N - p)
    if lo > hi:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    n = np.arange(lo, hi + 1)
    c = np.conj(f.coeffs[n + N] * f.coeffs[-n - p + N])
    return n, c


def first_iterate(f: FourierState, kappa: int, t: float, retain: str = "N") -> FourierState:
    """u1(t) in closed form, output modes |p| <= N (or 2N with retain='2N')."""
    _check_kappa(kappa)
    N = f.N
    R = {"N": N, "2N": 2 * N}.get(retain)
    if R is None:
        raise ValueError(f"retain must be 'N' or '2N', got {retain!r}")
    out = np.zeros(2 * R + 1, dtype=complex)
    if t == 0:
        return FourierState(out, f.period)
    for p in range(-R, R + 1):
        n, c = _pair_coeffs(f, p)
        if n.size:
            s = np.sum(c * phi(omega(n, p), t))
            out[p + R] = -1j * kappa * np.exp(-1j * p * p * t) * s
    return FourierState(out, f.period)


def first_iterate_blocks(f: FourierState, kappa: int, R: int | None = None):
    """Stream u1 as exponential-sum blocks (p, offsets, coefs, powers), |p| <= R.

    Each nonresonant pair contributes -kappa c / Omega at offset Omega and
    +kappa c / Omega at offset 0 (the e^{-ip^2 t} part); the resonant pair
    n = p = 0 contributes -i kappa c t at offset 0.  Pairs n and -n-p share
    Omega and are merged downstream.
    """
    _check_kappa(kappa)
    R = f.N if R is None else R
    for p in range(-R, R + 1):
        n, c = _pair_coeffs(f, p)
        keep = c != 0
        n, c = n[keep], c[keep]
        if n.size == 0:
            continue
        W = omega(n, p).astype(float)
        res = W == 0
        nr = ~res
        coef = -kappa * c[nr] / W[nr]
        offs = [W[nr], [0.0]]
        coefs = [coef, [-np.sum(coef)]]
        pows = [np.zeros(coef.size, dtype=np.int64), [0]]
        if np.any(res):
            offs.append([0.0])
            coefs.append([-1j * kappa * np.sum(c[res])])
            pows.append([1])
        yield (p, np.concatenate(offs), np.concatenate(coefs).astype(complex),
               np.concatenate(pows).astype(np.int64))


def first_iterate_field(f: FourierState, kappa: int, R: int | None = None) -> ExpSumField:
    """u1 as an exact ExpSumField on |p| <= R (default N)."""
    R = f.N if R is None else R
    modes, freqs, coefs, pows = [], [], [], []
    for p, W, c, k in first_iterate_blocks(f, kappa, R):
        modes.append(np.full(W.size, p))
        freqs.append(W - p * p)
        coefs.append(c)
        pows.append(k)
    if not modes:
        return ExpSumField.empty(R, f.period)
    return ExpSumField(np.concatenate(modes), np.concatenate(freqs),
                       np.concatenate(coefs), np.concatenate(pows), R, f.period).merged()


# ---------------------------------------------------------------------------
# Duhamel quadrature (Filon type)
#
# Mode p of int_0^t e^{i(t-t')Lap} F dt' is e^{-ip^2 t} int_0^t e^{ip^2 t'} F_p(t') dt'.
# F_p is replaced by a local polynomial interpolant in x = (t' - t_j)/h on each
# cell and integrated exactly against e^{i phi x}, phi = p^2 h.
#   trapezoid: linear interpolant on the cell's two nodes (order 2)
#   cubic:     cubic through four neighbouring nodes (order 4)

RULES = {"trapezoid": 2, "cubic": 4}


def _moments(phi_: float, a, b, dmax: int):
    """mu_d = int_a^b x^d e^{i phi x} dx for d = 0..dmax (arrays a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((dmax + 1,) + np.broadcast(a, b).shape, dtype=complex)
    span = np.maximum(np.abs(a), np.abs(b))
    if abs(phi_) * float(np.max(span, initial=0.0)) < 2.0:
        # power series in i phi x
        z = 1j * phi_
        for d in range(dmax + 1):
            term_c = 1.0 + 0j
            for k in range(40):
                e = d + k + 1
                out[d] += term_c * (b ** e - a ** e) / e
                term_c = term_c * z / (k + 1)
        return out
    z = 1j * phi_
    for d in range(dmax + 1):
        # antiderivative e^{zx} sum_j (-1)^j d!/(d-j)! x^{d-j} / z^{j+1}
        def anti(x, d=d):
            acc = np.zeros_like(x, dtype=complex)
            for j in range(d + 1):
                acc += (-1) ** j * (math.factorial(d) // math.factorial(d - j)) * x ** (d - j) / z ** (j + 1)
            return np.exp(z * x) * acc
        out[d] = anti(b) - anti(a)
    return out


@lru_cache(maxsize=None)
def _lagrange(nodes: tuple) -> np.ndarray:
    """Row r holds the monomial coefficients (ascending) of the r-th basis polynomial."""
    out = np.zeros((len(nodes), len(nodes)))
    for r, xr in enumerate(nodes):
        poly = np.poly1d([1.0])
        for j, xj in enumerate(nodes):
            if j != r:
                poly = poly * np.poly1d([1.0, -xj]) / (xr - xj)
        out[r] = poly.coeffs[::-1]
    return out


def _cell_weights(rule: str, phi_: float, a=0.0, b=1.0, kind: str = "mid"):
    nodes = {"trapezoid": (0, 1), "first": (0, 1, 2, 3),
             "mid": (-1, 0, 1, 2), "last": (-2, -1, 0, 1)}[kind if rule == "cubic" else "trapezoid"]
    L = _lagrange(tuple(float(x) for x in nodes))
    mu = _moments(phi_, a, b, len(nodes) - 1)
    return nodes, np.tensordot(L, mu, axes=(1, 0))


def _kind(rule, j, ncell):
    if rule == "trapezoid":
        return "trapezoid"
    return "first" if j == 0 else ("last" if j == ncell - 1 else "mid")


class _Antiderivative:
    """I_p(x) = int_{t_0}^x e^{i p^2 t'} F_p(t') dt' on a sampled field."""

    def __init__(self, F: SpaceTimeField, rule: str):
        if rule not in RULES:
            raise ValueError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
        self.F, self.rule = F, rule
        self.h = F.dt
        self.ncell = F.M - 1
        if rule == "cubic" and self.ncell < 3:
            raise ValueError("cubic rule needs at least four time samples")
        n = F.modes
        self.theta = (n * n).astype(float)
        # cumulative integrals at grid nodes, shape (M, modes)
        cells = np.zeros((self.ncell, n.size), dtype=complex)
        for idx, th in enumerate(self.theta):
            cells[:, idx] = self._cells(idx, th)
        self.cum = np.zeros((F.M, n.size), dtype=complex)
        self.cum[1:] = np.cumsum(cells, axis=0)

    def _cells(self, idx, th):
        F, h, nc = self.F, self.h, self.ncell
        out = np.zeros(nc, dtype=complex)
        phase = np.exp(1j * th * F.times[:-1])
        groups = ([("trapezoid", np.arange(nc))] if self.rule == "trapezoid" else
                  [("first", np.array([0])), ("mid", np.arange(1, nc - 1)),
                   ("last", np.array([nc - 1]))])
        for kind, js in groups:
            if js.size == 0:
                continue
            nodes, w = _cell_weights(self.rule, th * h, kind=kind)
            acc = np.zeros(js.size, dtype=complex)
            for r, off in enumerate(nodes):
                acc += w[r] * F.values[js + int(off), idx]
            out[js] = h * phase[js] * acc
        return out

    def at(self, x: float) -> np.ndarray:
        F, h = self.F, self.h
        t0, t1 = F.times[0], F.times[-1]
        tol = 1e-12 * max(1.0, abs(t0), abs(t1))
        if x < t0 - tol or x > t1 + tol:
            raise ValueError(f"t={x} outside the grid range [{t0}, {t1}]")
        u = (x - t0) / h
        j = int(min(max(math.floor(u), 0), self.ncell - 1))
        frac = u - j
        if abs(frac) < 1e-13:
            return self.cum[j].copy()
        if abs(frac - 1) < 1e-13:
            return self.cum[j + 1].copy()
        out = self.cum[j].copy()
        kind = _kind(self.rule, j, self.ncell)
        tj = F.times[j]
        for idx, th in enumerate(self.theta):
            nodes, w = _cell_weights(self.rule, th * h, 0.0, frac, kind)
            amp = sum(w[r] * F.values[j + int(off), idx] for r, off in enumerate(nodes))
            out[idx] += h * np.exp(1j * th * tj) * amp
        return out


def duhamel(F: SpaceTimeField, kappa: int, t: float, rule: str = "cubic") -> FourierState:
    """-i kappa int_0^t e^{i(t-t')Lap} F(t') dt' at one time t in the grid range."""
    _check_kappa(kappa)
    A = _Antiderivative(F, rule)
    integral = A.at(t) - A.at(0.0)
    n2 = (F.modes * F.modes).astype(float)
    return FourierState(-1j * kappa * np.exp(-1j * n2 * t) * integral, F.period)


def duhamel_field(F: SpaceTimeField, kappa: int, rule: str = "cubic") -> SpaceTimeField:
    """The Duhamel term at every grid time, on the field's own grid."""
    _check_kappa(kappa)
    A = _Antiderivative(F, rule)
    base = A.at(0.0)
    n2 = (F.modes * F.modes).astype(float)
    vals = -1j * kappa * np.exp(-1j * np.outer(F.times, n2)) * (A.cum - base[None, :])
    return SpaceTimeField(F.times, vals, F.period)


# ---------------------------------------------------------------------------
# contraction map and solver


def sample_first_iterate(f: FourierState, kappa: int, times) -> SpaceTimeField:
    """Closed-form u1 sampled on a grid, modes |p| <= N."""
    return first_iterate_field(f, kappa).sample(times)


def apply_K(v: SpaceTimeField, f: FourierState, kappa: int, rule: str = "cubic",
            u1: SpaceTimeField | None = None) -> SpaceTimeField:
    """K(v) = u1 - 2i kappa D(conj(u0) conj(v)) - i kappa D(conj(v)^2).

    D is the mode-wise Filon quadrature of int_0^t e^{i(t-t')Lap}; u1 is the
    closed form sampled on v's grid (pass it in to reuse across iterations).
    """
    _check_kappa(kappa)
    if v.N != f.N:
        raise ValueError(f"v has radius {v.N}, data has radius {f.N}")
    if u1 is None:
        u1 = sample_first_iterate(f, kappa, v.times)
    elif not np.array_equal(u1.times, v.times) or u1.N != v.N:
        raise ValueError("u1 and v live on different grids")
    out = u1
    if np.any(v.values):
        u0 = sample_free_field(f, v.times)
        cross = duhamel_field(conjugate_product(u0, v), kappa, rule)
        quad = duhamel_field(conjugate_square(v), kappa, rule)
        out = out + 2.0 * cross + quad
    return out


@dataclass(frozen=True)
class NormSpec:
    s: float = 0.0
    b: float = 0.55

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.b)):
            raise ValueError("norm exponents must be finite")


@dataclass
class ContractionReport:
    iterates: int
    residual_history: list
    contraction_factors: list
    converged: bool
    final_solution: SpaceTimeField
    diverged: bool = False
    integral_residual: float = math.nan
    fixed_point_gap: float = math.nan
    T: float = 1.0
    kappa: int = 1
    norm: NormSpec = field(default_factory=NormSpec)
    rule: str = "cubic"

    def to_dict(self, include_solution: bool = False) -> dict:
        d = {
            "iterates": self.iterates,
            "residual_history": [float(r) for r in self.residual_history],
            "contraction_factors": [float(r) for r in self.contraction_factors],
            "converged": self.converged,
            "diverged": self.diverged,
            "integral_residual": float(self.integral_residual),
            "fixed_point_gap": float(self.fixed_point_gap),
            "T": self.T,
            "kappa": self.kappa,
            "norm": {"s": self.norm.s, "b": self.norm.b},
            "rule": self.rule,
            "N": self.final_solution.N,
            "M": self.final_solution.M,
        }
        if include_solution:
            d["final_solution"] = [[[float(z.real), float(z.imag)] for z in row]
                                   for row in self.final_solution.values]
        return d

    def to_json(self, include_solution: bool = False) -> str:
        return json.dumps(self.to_dict(include_solution))


def picard_solve(f: FourierState, kappa: int = 1, T: float = 1.0, max_iter: int = 50,
                 tol: float = 1e-10, norm: NormSpec | None = None, M: int = DEFAULT_M,
                 rule: str = "cubic", window: Window | None = None,
                 grid: TauGrid | None = None) -> ContractionReport:
    """Iterate v <- K(v) from v = 0 on the grid over [-2T, 2T].

    Residuals are X^{s,b} norms of successive differences, windowed by
    psi(t/T) (plateau [-T, T], support [-2T, 2T]).  Stops when a residual
    drops below tol (converged) or after three consecutive increases
    (diverged); neither case raises.  ``grid`` defaults to
    TauGrid.default(N, 2T).
    """
    _check_kappa(kappa)
    if not T > 0:
        raise ValueError("T must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    norm = NormSpec() if norm is None else norm
    window = Window(T, T) if window is None else window
    times = time_grid(2.0 * T, M)
    grid = TauGrid.default(f.N, 2.0 * T) if grid is None else grid

    def size(G):
        return xsb_norm(G, norm.s, norm.b, window, grid).value

    u1 = sample_first_iterate(f, kappa, times)
    v = SpaceTimeField.zeros(times, f.N, f.period)
    history, factors = [], []
    converged = diverged = False
    growth = 0
    for _ in range(max_iter):
        v_new = apply_K(v, f, kappa, rule, u1)
        r = size(v_new - v)
        if history:
            factors.append(r / history[-1] if history[-1] > 0 else 0.0)
            growth = growth + 1 if r > history[-1] else 0
        history.append(r)
        v = v_new
        if r < tol:
            converged = True
            break
        if growth >= 3:
            diverged = True
            break
    u = sample_free_field(f, times) + v
    integral = size(v - duhamel_field(conjugate_square(u), kappa, rule))
    gap = size(apply_K(v, f, kappa, rule, u1) - v)
    return ContractionReport(len(history), history, factors, converged, v, diverged,
                             integral, gap, T, kappa, norm, rule)


def rescaled_solve(f: FourierState, kappa: int = 1, T0: float = 1.0, lam_max: int = 64,
                   **kwargs):
    """Doubling search over integer lambda: solve rescale(f, lambda) on T0/lambda^2.

    Returns (lambda, report) for the first converged run, or (None, reports)
    if none converges up to lam_max.  Integer rescaling maps the truncated
    problem onto itself, so contraction factors are lambda-independent and
    the search mostly probes the absolute tolerance.
    """
    reports = []
    lam = 1
    while lam <= lam_max:
        rep = picard_solve(rescale(f, lam), kappa, T0 / lam ** 2, **kwargs)
        reports.append((lam, rep))
        if rep.converged:
            return lam, rep
        lam *= 2
    return None, reports
