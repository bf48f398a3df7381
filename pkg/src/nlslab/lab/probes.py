"""Empirical probes of the smoothing and bilinear estimates.

Each probe evaluates both sides of an inequality on concrete data and
reports the ratio; boundedness is judged by how the ratio moves as the
truncation N doubles.  None of this proves anything; it checks that the
stated mechanisms are visible in the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..expsum import ExpSumField
from ..picard import duhamel_field, first_iterate_blocks
from ..propagator import SpaceTimeField, conjugate_product, sample_free_field
from ..spectral import FourierState, bracket, edge_data, hsp_norm, random_data
from ..window import Window, transform_table
from ..xsb import exact_norm, xsb_norm
from .sums import SupSumReport

BOUNDED_SPREAD = 1.5


def _pair_terms(f: FourierState, p: int):
    """n, conj(a_n a_{-n-p}) and theta_n = n^2 + (n+p)^2 for the mode-p square."""
    N = f.N
    n = np.arange(max(-N, -N - p), min(N, N - p) + 1)
    c = np.conj(f.coeffs[n + N] * f.coeffs[-n - p + N])
    keep = c != 0
    n, c = n[keep], c[keep]
    return n, c, (n * n + (n + p) ** 2).astype(float)


@dataclass
class CpBoundReport:
    """|c_p_hat(tau)|^2 against sum_n |a_n|^2 |a_{-n-p}|^2 |psi_hat|(tau - theta_n)."""

    window: dict
    points: list
    ratios: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    def to_dict(self):
        return {"window": self.window, "sup": self.sup,
                "points": [{**pt, "ratio": float(r)} for pt, r in zip(self.points, self.ratios)]}


def check_cp_bound(f: FourierState, w: Window | None = None, tau_grid=None, p_set=None) -> CpBoundReport:
    """Ratio of |c_p_hat(tau)|^2 to its single-sum majorant over a (p, tau) grid.

    c_p = psi(t) * (mode p of conj(u0)^2) has transform
    sum_n conj(a_n a_{-n-p}) psi_hat(tau - theta_n).  By default tau runs over
    theta_n + {0, +-1/2, +-1, +-2} per p, where the terms peak; those points
    read psi_hat from its half-integer table.  psi_hat is truncated beyond
    the radius where it falls below 1e-9 of its peak.
    """
    w = Window() if w is None else w
    q = 2
    J, table = transform_table(w, q, 0)
    table = table.real
    radius = J / q
    if p_set is None:
        p_set = range(-2 * f.N, 2 * f.N + 1)
    points, ratios = [], []
    for p in p_set:
        p = int(p)
        n, c, theta = _pair_terms(f, p)
        if n.size == 0:
            continue
        if tau_grid is None:
            taus = np.unique((theta[:, None] + np.array([0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0])).ravel())
        else:
            taus = np.asarray(tau_grid, dtype=float)
        for a in range(0, taus.size, 256):
            tt = taus[a:a + 256]
            d = tt[:, None] - theta[None, :]
            near = np.abs(d) <= radius
            ph = np.zeros(d.shape)
            if np.any(near):
                dq = d[near] * q
                on_lattice = np.abs(dq - np.rint(dq)) < 1e-9
                if np.all(on_lattice):
                    ph[near] = table[np.rint(dq).astype(np.int64) + J]
                else:
                    ph[near] = w.hat(d[near])
            num = np.abs(ph @ c) ** 2
            den = np.abs(ph) @ (np.abs(c) ** 2)
            ok = den > 0
            for tau, r in zip(tt[ok], num[ok] / den[ok]):
                points.append({"p": p, "tau": float(tau)})
                ratios.append(r)
    return CpBoundReport(w.describe(), points, np.array(ratios))


# ---------------------------------------------------------------------------


def _I_point(a2, m, s, b, k, tau, N_sum):
    """Sum over |n| <= N_sum and the support of a of I_{n,m}(k, tau), split m = k / m != k."""
    n = np.arange(-N_sum, N_sum + 1, dtype=float)
    R1 = -tau + (n + k) ** 2 + n * n
    w1 = bracket(R1) ** (-2.0 * (1.0 - b)) * bracket(n) ** (2.0 * s)
    mm = m.astype(float)
    R2 = tau - (n[None, :] + k) ** 2 + mm[:, None] ** 2 + (n[None, :] + mm[:, None]) ** 2
    core = (bracket(n[None, :] + mm[:, None]) ** (-2.0 * s)
            * bracket(R2) ** (-2.0 * b) * w1[None, :])
    per_m = a2 * core.sum(axis=1)
    diag = m == k
    return float(per_m[diag].sum()), float(per_m[~diag].sum())


def _I_tail(a2, m, s, b, k, tau, N_sum):
    """Bound on the |n| > N_sum part.

    There <R1> >= n^2 once |n| >= |k| + sqrt(tau+), the weight
    <n>^{2s}<n+m>^{-2s} is at most (1 + |m|/n0)^{2|s|} (or (1 - |m|/n0)^{-2s}
    for s > 0), and <R2> = <tau + k^2> is constant on the diagonal m = k.
    """
    beta1 = 2.0 * (1.0 - b)
    n0 = float(N_sum)
    if 2 * beta1 <= 1 or n0 < abs(k) + math.sqrt(max(tau, 0.0)) or n0 <= np.max(np.abs(m)):
        return math.inf
    r = np.abs(m) / n0
    weight = (1.0 + r) ** (-2.0 * s) if s <= 0 else (1.0 - r) ** (-2.0 * s)
    r2 = np.where(m == k, float(bracket(tau + k * k)) ** (-2.0 * b), 1.0)
    return float(np.sum(a2 * weight * r2) * 2.0 * n0 ** (1.0 - 2.0 * beta1) / (2.0 * beta1 - 1.0))


def default_I_grid(N: int):
    """k at 0, +-1 and fractions of N; tau at the R1 vertex k^2/2 plus offsets up to N^2."""
    ks = sorted(set(int(round(N * r)) * sg for r in (0, 1 / 8, 1 / 4, 1 / 2, 1) for sg in (1, -1))
                | {1, -1})
    pts = []
    for k in ks:
        for d in (-float(N * N), 0.0, 1.0, 4.0, float(N), float(N * N)):
            pts.append({"k": k, "tau": k * k / 2.0 + d})
    return pts


def sup_I(f: FourierState, s: float, b: float, k_grid=None, tau_grid=None,
          N_sum: int | None = None, s0: float | None = None, p: float | None = None) -> SupSumReport:
    """I(k, tau) over a grid; notes carry the m = k / m != k parts and the scaled sup.

    With (s0, p) given, the scaled sup is sup I / ||f||^2_{H^{s0,p}}.
    """
    N_sum = 4 * f.N if N_sum is None else int(N_sum)
    if N_sum < f.N:
        raise ValueError("N_sum must be at least N")
    if k_grid is None and tau_grid is None:
        pts = default_I_grid(f.N)
    else:
        k_grid = [0] if k_grid is None else k_grid
        tau_grid = [0.0] if tau_grid is None else tau_grid
        pts = [{"k": int(k), "tau": float(t)} for k in k_grid for t in tau_grid]
    a2 = np.abs(f.coeffs) ** 2
    keep = a2 > 0
    m, a2 = f.modes[keep], a2[keep]
    vals, tails, diag, off = [], [], [], []
    for pt in pts:
        d, o = _I_point(a2, m, s, b, pt["k"], pt["tau"], N_sum)
        vals.append(d + o)
        diag.append(d)
        off.append(o)
        tails.append(_I_tail(a2, m, s, b, pt["k"], pt["tau"], N_sum))
    rep = SupSumReport("sup_I", {"s": s, "b": b, "N": f.N}, pts, np.array(vals),
                       np.array(tails), N_sum)
    rep.notes["m_eq_k"] = diag
    rep.notes["m_ne_k"] = off
    rep.notes["sup_m_eq_k"] = float(max(diag))
    rep.notes["sup_m_ne_k"] = float(max(off))
    if s0 is not None and p is not None:
        rep.notes["scaled_sup"] = rep.sup / hsp_norm(f, s0, p) ** 2
    return rep


# ---------------------------------------------------------------------------
# bilinear quantities


def random_expsum_field(N: int, seed: int, s: float = 0.0, detune: int = 3,
                        decay: float = 0.6) -> ExpSumField:
    """v_n(t) = b_n exp(i(-n^2 + d_n) t) with Gaussian b_n <n>^{-s-decay}.

    d_n are integers uniform in [-detune, detune]: each mode sits a bounded
    distance from the dispersion curve, so ||v||_{X^{s,b}} stays of order one.
    """
    rng = np.random.default_rng(seed)
    n = np.arange(-N, N + 1)
    g = rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)
    d = rng.integers(-detune, detune + 1, size=n.size)
    coef = g * bracket(n) ** (-s - decay) / math.sqrt(2.0)
    return ExpSumField(n, -(n * n).astype(float) + d, coef, np.zeros(n.size, dtype=np.int64), N)


def _nonzero(x, what):
    if not x > 0:
        raise ValueError(f"{what} vanishes; the ratio is undefined")
    return x


def bilinear_ratio(f: FourierState, v, s: float, b: float, s0: float, p: float,
                   w: Window | None = None) -> float:
    """||int_0^t e^{i(t-t')Lap} conj(u0 v) dt'|| / (||f||_{H^{s0,p}} ||v||), X^{s,b} norms.

    The X^{s,b}([-1, 1]) norms are taken with the unit window (plateau 1),
    an upper bound for the restriction norm.  ``v`` is an ExpSumField
    (exact path) or a SpaceTimeField (sampled path, Filon Duhamel).  The
    product keeps every output mode (no projection back to |p| <= N).
    """
    w = Window() if w is None else w
    fn = _nonzero(hsp_norm(f, s0, p), "||f||_{H^{s0,p}}")
    if isinstance(v, ExpSumField):
        vn = _nonzero(float(xsb_norm(v, s, b, w)), "||v||_{X^{s,b}}")
        prod = ExpSumField.free(f).conj().product(v.conj(), f.N + v.N)
        num = float(xsb_norm(prod.duhamel(1), s, b, w))
    elif isinstance(v, SpaceTimeField):
        vn = _nonzero(float(xsb_norm(v, s, b, w)), "||v||_{X^{s,b}}")
        N_out = max(f.N, v.N)
        u0 = sample_free_field(f.padded(N_out), v.times)
        F = conjugate_product(u0, v.truncated(N_out), retain="2N")
        num = float(xsb_norm(duhamel_field(F, 1), s, b, w))
    else:
        raise TypeError(f"unsupported field type {type(v).__name__}")
    return num / (fn * vn)


def kpv_bilinear_ratio(v, u, s: float, b: float, w: Window | None = None) -> float:
    """||conj(v) conj(u)||_{X^{s,b-1}} / (||v||_{X^{s,b}} ||u||_{X^{s,b}}).

    Both factors are localised by the window psi, so the product carries
    psi^2.  Accepts two ExpSumFields or two SpaceTimeFields on one grid.
    The full product is kept, up to mode N_v + N_u.
    """
    w = Window() if w is None else w
    w2 = Window(w.plateau, w.width, w.profile, 2 * w.power)
    den = (_nonzero(float(xsb_norm(v, s, b, w)), "||v||_{X^{s,b}}")
           * _nonzero(float(xsb_norm(u, s, b, w)), "||u||_{X^{s,b}}"))
    if isinstance(v, ExpSumField) and isinstance(u, ExpSumField):
        prod = v.conj().product(u.conj(), v.N + u.N)
    elif isinstance(v, SpaceTimeField) and isinstance(u, SpaceTimeField):
        prod = conjugate_product(v, u, retain="2N")
    else:
        raise TypeError("both fields must be ExpSumField or both SpaceTimeField")
    return float(xsb_norm(prod, s, b - 1.0, w2)) / den


def kpv_failure_probe(s: float, b: float, N_list=(16, 32, 64, 128)) -> dict:
    """High-high to low interaction: free modes N and -N+1, product on mode -1.

    The ratio behaves like N^{-2s - 2(1-b)}, growing when s < b - 1;
    exploratory, not the sharp counterexample.
    """
    ratios = []
    for N in N_list:
        v = ExpSumField.free(FourierState.single_mode(N, 1.0, N))
        u = ExpSumField.free(FourierState.single_mode(-N + 1, 1.0, N))
        ratios.append(kpv_bilinear_ratio(v, u, s, b))
    r = np.array(ratios)
    return {"s": s, "b": b, "N": list(N_list), "ratios": ratios,
            "monotone_growth": bool(np.all(np.diff(r) > 0)),
            "predicted_exponent": -2 * s - 2 * (1 - b),
            "fitted_exponent": float(np.polyfit(np.log(N_list), np.log(r), 1)[0])}


# ---------------------------------------------------------------------------
# smoothing sweep


def proof_symbols(s0: float, s: float, b: float) -> dict:
    """Derived exponents from the bilinear proof, as read-only diagnostics."""
    eps = b - 0.5
    sigma, sigma0 = -s, -s0
    theta = (1 + 2 * eps) / (3 * (1 - 2 * eps)) if eps < 0.5 else math.nan
    return {"beta": 2 * (1 - b), "beta1": 2 * (1 - b), "beta2": 2 * b,
            "sigma": sigma, "sigma0": sigma0, "epsilon": eps, "theta": theta,
            "eta": 4.0 / 3.0 * (1 - 4 * eps) - 2 * sigma0 - 2 * sigma,
            "holder_p": 1.5, "holder_q": 3.0}


def check_smoothing_pre(p: float, s: float):
    """s < -1 + 2/p, or s = 0 at p = 2; raises naming the violated inequality."""
    if s == 0 and p == 2:
        return
    if not s < -1.0 + 2.0 / p:
        raise ValueError(f"requires s < -1 + 2/p (or s = 0 with p = 2): "
                         f"s = {s} >= {-1.0 + 2.0 / p}")


@dataclass
class SweepReport:
    params: dict
    N: list
    ratios: list
    numerators: list
    denominators: list
    verdict: bool
    spread: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"params": self.params, "N": self.N, "ratios": self.ratios,
                "numerators": self.numerators, "denominators": self.denominators,
                "verdict": self.verdict, "spread": self.spread,
                "diagnostics": self.diagnostics}


def last_three_spread(values) -> float:
    tail = np.asarray(values[-3:], dtype=float)
    return float(tail.max() / tail.min())


def smoothing_point(s0, p, s, b, N, family="edge", denominator="hsp", kappa=1, seed=0,
                    w: Window | None = None):
    """(||u1||_{X^{s,b}}, ||f||^2) for one truncation N; exact exponential-sum norm."""
    w = Window() if w is None else w
    f = edge_data(s0, p, N) if family == "edge" else random_data(s0, p, N, seed)
    num = float(exact_norm(first_iterate_blocks(f, kappa), s, b, w, N))
    den = hsp_norm(f, s0, p) ** 2 if denominator == "hsp" else hsp_norm(f, 0.0, 2.0) ** 2
    return num, den


def smoothing_sweep(s0: float, p: float, s: float, b: float, N_list, family: str = "edge",
                    denominator: str = "hsp", kappa: int = 1, seed: int = 0,
                    w: Window | None = None) -> SweepReport:
    """||u1||_{X^{s,b}} / ||f||^2 across N, u1 the first iterate of f.

    ``family`` is "edge" (edge_data) or "random" (random_data with ``seed``);
    ``denominator`` is "hsp" (H^{s0,p}) or "h0" (L^2, the contrast case).
    Verdict: bounded when the last three ratios have max/min <= 1.5.
    """
    check_smoothing_pre(p, s)
    if family not in ("edge", "random"):
        raise ValueError(f"unknown data family {family!r}")
    if denominator not in ("hsp", "h0"):
        raise ValueError(f"unknown denominator {denominator!r}")
    N_list = [int(N) for N in N_list]
    if len(N_list) < 3:
        raise ValueError("need at least three N values for the verdict")
    w = Window() if w is None else w
    nums, dens, ratios = [], [], []
    for N in N_list:
        num, den = smoothing_point(s0, p, s, b, N, family, denominator, kappa, seed, w)
        nums.append(num)
        dens.append(den)
        ratios.append(num / den)
    spread = last_three_spread(ratios)
    params = {"s0": s0, "p": p, "s": s, "b": b, "family": family,
              "denominator": denominator, "kappa": kappa, "seed": seed,
              "window": w.describe()}
    return SweepReport(params, N_list, ratios, nums, dens, spread <= BOUNDED_SPREAD, spread,
                       proof_symbols(s0, s, b))
