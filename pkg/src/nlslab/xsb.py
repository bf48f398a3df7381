"""Discretised X^{s,b} norms and the finite-family restriction norm.

Two evaluation paths share one definition,

    ||F||^2 = sum_n <n>^{2s} int <tau + n^2>^{2b} |(psi F)~(tau, n)|^2 dtau,

with (psi F)~ the time transform of the windowed field:

* sampled fields (SpaceTimeField): time Riemann sum via zero-padded FFT,
  midpoint Riemann sum over a TauGrid, and a tail-mass diagnostic;
* exponential sums (ExpSumField, or a stream of per-mode blocks): each term
  c t^k e^{i w t} transforms to c T_k(sigma - W) in sigma = tau + p^2, with
  W = w + p^2 and T_k the tabulated transform of t^k psi.  Terms whose
  offsets are more than two table radii apart do not interact, so each mode
  splits into isolated terms (closed weight sums) and short clusters
  (accumulated on the sigma lattice).  No time grid is involved, so phases
  of size N^2 cost nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import oaconvolve
from scipy.special import binom

from .expsum import ExpSumField
from .propagator import SpaceTimeField
from .spectral import bracket
from .window import Window, lattice_step, transform_table

TAIL_FRACTION = 0.10     # outer share of the tau range checked for mass
TAIL_LIMIT = 0.01        # mass fraction there that flags a result

CSV_HEADER = ("s", "b", "N", "M", "tau_max", "dtau", "value", "tail_flag")


@dataclass(frozen=True)
class TauGrid:
    """tau_j = j * dtau for |tau_j| <= tau_max; each sample stands for its cell."""

    dtau: float
    tau_max: float

    def __post_init__(self):
        if not (self.dtau > 0 and self.tau_max > 0):
            raise ValueError("dtau and tau_max must be positive")

    @classmethod
    def default(cls, N: int, T_max: float) -> "TauGrid":
        return cls(math.pi / (2.0 * T_max), 4.0 * N * N + 64.0)

    @property
    def taus(self) -> np.ndarray:
        J = int(math.floor(self.tau_max / self.dtau + 1e-9))
        return self.dtau * np.arange(-J, J + 1)


@dataclass(frozen=True)
class XsbNorm:
    """A norm value with its discretisation record.

    ``tail_fraction`` is the share of weighted mass with |tau| in the outer
    10% of the tau range; ``unreliable`` is set when it exceeds 1% or when
    tau_max lies beyond the time grid's Nyquist frequency.  Exact-path
    values carry tail_fraction 0 and M = 0.
    """

    value: float
    s: float
    b: float
    N: int
    M: int = 0
    tau_max: float = math.inf
    dtau: float = 0.0
    tail_fraction: float = 0.0
    unreliable: bool = False

    def __float__(self):
        return self.value

    def csv_row(self) -> tuple:
        return (self.s, self.b, self.N, self.M, self.tau_max, self.dtau,
                self.value, int(self.unreliable))


def _check_window(F: SpaceTimeField, w: Window):
    if w.support > F.T_max * (1 + 1e-12):
        raise ValueError(f"window support {w.support} exceeds the field's grid "
                         f"[-{F.T_max}, {F.T_max}]")


def spacetime_transform(F: SpaceTimeField, w: Window | None = None,
                        grid: TauGrid | None = None):
    """(taus, Ft) with Ft[j, i] ~ int e^{-i tau_i t} psi(t) F_n(t) dt, n = j - N.

    The time integral is the Riemann sum over the field's grid (equal to the
    trapezoid rule, since psi vanishes at both ends).  When 2*pi/(dtau*dt)
    is an integer the sum is a zero-padded FFT; otherwise a direct sum.
    """
    w = Window() if w is None else w
    grid = TauGrid.default(F.N, F.T_max) if grid is None else grid
    _check_window(F, w)
    taus = grid.taus
    g = w(F.times)[:, None] * F.values
    dt, t0 = F.dt, F.times[0]
    L = 2.0 * math.pi / (grid.dtau * dt)
    Lr = int(round(L))
    if abs(L - Lr) < 1e-9 * L and Lr >= F.M:
        spec = np.fft.fft(g, n=Lr, axis=0)
        j = np.rint(taus / grid.dtau).astype(np.int64) % Lr
        out = spec[j].T
    else:
        out = np.empty((F.values.shape[1], taus.size), dtype=complex)
        rel = F.times - t0
        step = max(1, (1 << 22) // F.M)
        for a in range(0, taus.size, step):
            ker = np.exp(-1j * np.outer(taus[a:a + step], rel))
            out[:, a:a + step] = (ker @ g).T
    out = out * (dt * np.exp(-1j * taus * t0))[None, :]
    return taus, out


def _sampled_norm(F: SpaceTimeField, s, b, w, grid) -> XsbNorm:
    grid = TauGrid.default(F.N, F.T_max) if grid is None else grid
    taus, Ft = spacetime_transform(F, w, grid)
    n = F.modes.astype(float)
    weight = bracket(taus[None, :] + (n * n)[:, None]) ** (2 * b)
    dens = weight * np.abs(Ft) ** 2 * (bracket(n) ** (2 * s))[:, None]
    per_tau = np.sum(dens, axis=0) * grid.dtau
    total = float(np.sum(per_tau))
    outer = np.abs(taus) > (1.0 - TAIL_FRACTION) * grid.tau_max
    tail = float(np.sum(per_tau[outer]) / total) if total > 0 else 0.0
    nyquist_ok = grid.tau_max <= math.pi / F.dt * (1 + 1e-12)
    return XsbNorm(math.sqrt(total), s, b, F.N, F.M, grid.tau_max, grid.dtau,
                   tail, tail > TAIL_LIMIT or not nyquist_ok)


# ---------------------------------------------------------------------------
# exact path

# isolated terms beyond this many table radii use the binomial moment series
_FAR_RADII = 64
_SERIES_TERMS = 12


@dataclass
class _Kernel:
    """Transform tables of t^k psi on the lattice j/q and derived weight sums."""

    window: Window
    b: float
    q: int = 0
    tables: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)

    def __post_init__(self):
        self.q = lattice_step(self.window)

    def table(self, k: int):
        if k not in self.tables:
            self.tables[k] = transform_table(self.window, self.q, k)
        return self.tables[k]

    def radius(self, k: int) -> float:
        return self.table(k)[0] / self.q

    def isolated(self, W: np.ndarray, k: int) -> np.ndarray:
        """h_k(W) = sum_j (1/q) <j/q + W>^{2b} |T_k(j/q)|^2 per offset."""
        J, tab = self.table(k)
        sig = np.arange(-J, J + 1) / self.q
        wts = np.abs(tab) ** 2 / self.q
        out = np.empty(W.size)
        far = np.abs(W) > _FAR_RADII * J / self.q
        near = np.flatnonzero(~far)
        step = max(1, (1 << 22) // sig.size)
        for a in range(0, near.size, step):
            idx = near[a:a + step]
            out[idx] = (bracket(W[idx, None] + sig[None, :]) ** (2 * self.b)) @ wts
        if np.any(far):
            out[far] = self._series(W[far], k, sig, wts)
        return out

    def _series(self, W, k, sig, wts):
        # <W + x>^{2b} = <W>^{2b} (1 + (2Wx + x^2)/<W>^2)^b, expanded in powers
        # of the small ratio; odd moments of the even |T_k|^2 vanish by symmetry
        # but are kept for exactness.
        if k not in self.moments:
            self.moments[k] = np.array([np.sum(wts * sig ** r)
                                        for r in range(2 * _SERIES_TERMS + 1)])
        mu = self.moments[k]
        B2 = 1.0 + W * W
        u = 2.0 * W / B2
        v = 1.0 / B2
        acc = np.zeros_like(W)
        for m in range(_SERIES_TERMS + 1):
            inner = np.zeros_like(W)
            for l in range(m + 1):
                inner += binom(m, l) * u ** l * v ** (m - l) * mu[2 * m - l]
            acc += binom(self.b, m) * inner
        return B2 ** self.b * acc

    def cluster(self, W: np.ndarray, c: np.ndarray, k: np.ndarray) -> float:
        """Weighted lattice energy of sum_i c_i T_{k_i}(sigma - W_i)."""
        q = self.q
        scaled = W * q
        aligned = np.all(np.abs(scaled - np.rint(scaled)) < 1e-9 * np.maximum(1.0, np.abs(scaled)))
        Jmax = max(self.table(int(kk))[0] for kk in np.unique(k))
        if aligned:
            idx = np.rint(scaled).astype(np.int64)
            lo = int(idx.min()) - Jmax
            size = int(idx.max()) + Jmax - lo + 1
            G = np.zeros(size, dtype=complex)
            for kk in np.unique(k):
                J, tab = self.table(int(kk))
                sel = k == kk
                if np.count_nonzero(sel) <= 8:
                    for i0, ci in zip(idx[sel], c[sel]):
                        a = int(i0) - J - lo
                        G[a:a + 2 * J + 1] += ci * tab
                else:
                    spikes = np.zeros(size - 2 * Jmax, dtype=complex)
                    np.add.at(spikes, idx[sel] - lo - Jmax, c[sel])
                    conv = oaconvolve(spikes, tab)
                    a = Jmax - J
                    G[a:a + conv.size] += conv
            sig = (lo + np.arange(size)) / q
        else:
            lo = int(math.floor(W.min() * q)) - Jmax
            hi = int(math.ceil(W.max() * q)) + Jmax
            sig = np.arange(lo, hi + 1) / q
            G = np.zeros(sig.size, dtype=complex)
            for Wi, ci, ki in zip(W, c, k):
                rad = self.radius(int(ki))
                sl = np.abs(sig - Wi) <= rad
                G[sl] += ci * self.window.transform(sig[sl] - Wi, int(ki))
        return float(np.sum(bracket(sig) ** (2 * self.b) * np.abs(G) ** 2)) / q

    def block_energy(self, W, c, k) -> float:
        """sigma-integrated weighted energy of one mode's exponential sum."""
        W = np.asarray(W, dtype=float)
        c = np.asarray(c, dtype=complex)
        k = np.asarray(k, dtype=np.int64)
        if W.size == 0:
            return 0.0
        # merge coincident (power, offset) terms
        order = np.lexsort((W, k))
        W, c, k = W[order], c[order], k[order]
        new = np.ones(W.size, dtype=bool)
        new[1:] = (k[1:] != k[:-1]) | (np.abs(W[1:] - W[:-1]) > 1e-12 * np.maximum(1.0, np.abs(W[1:])))
        st = np.flatnonzero(new)
        W, c, k = W[st], np.add.reduceat(c, st), k[st]
        keep = c != 0
        W, c, k = W[keep], c[keep], k[keep]
        if W.size == 0:
            return 0.0
        order = np.argsort(W, kind="stable")
        W, c, k = W[order], c[order], k[order]
        reach = 2.0 * max(self.radius(int(kk)) for kk in np.unique(k))
        breaks = np.flatnonzero(np.diff(W) > reach) + 1
        starts = np.concatenate([[0], breaks])
        ends = np.concatenate([breaks, [W.size]])
        single = (ends - starts) == 1
        total = 0.0
        iso = starts[single]
        for kk in np.unique(k[iso]):
            sel = iso[k[iso] == kk]
            total += float(np.sum(np.abs(c[sel]) ** 2 * self.isolated(W[sel], int(kk))))
        for a, e in zip(starts[~single], ends[~single]):
            total += self.cluster(W[a:e], c[a:e], k[a:e])
        return total


def exact_norm(blocks, s: float, b: float, w: Window | None = None, N: int | None = None) -> XsbNorm:
    """X^{s,b} norm of psi * u for u given by per-mode exponential-sum blocks.

    ``blocks`` yields (p, W, c, k): offsets W = w + p^2, coefficients and
    t-powers of the terms on mode p (see ExpSumField.blocks).  Streaming
    blocks keeps memory at one mode's worth of terms.
    """
    kern = _Kernel(Window() if w is None else w, b)
    total = 0.0
    pmax = 0
    for p, W, c, k in blocks:
        pmax = max(pmax, abs(p))
        total += float(bracket(p)) ** (2 * s) * kern.block_energy(W, c, k)
    return XsbNorm(math.sqrt(total), s, b, pmax if N is None else N)


def xsb_norm(F, s: float, b: float, w: Window | None = None,
             grid: TauGrid | None = None) -> XsbNorm:
    """X^{s,b} norm of psi F for a sampled or an exponential-sum field."""
    w = Window() if w is None else w
    if isinstance(F, ExpSumField):
        return exact_norm(F.merged().blocks(), s, b, w, F.N)
    if isinstance(F, SpaceTimeField):
        return _sampled_norm(F, s, b, w, grid)
    raise TypeError(f"cannot take an X^(s,b) norm of {type(F).__name__}")


# ---------------------------------------------------------------------------
# restriction norm

FAMILY_PROFILES = ("exp-soft", "exp", "exp-hard")
FAMILY_WIDTHS = (0.5, 0.75, 1.0)
LADDER_STEPS = 16


def window_family(T: float, R_max: float) -> list[Window]:
    """Admissible windows for the restriction to [-T, T].

    Each window equals 1 on [-R, R] for a plateau R from the fixed ladder
    R_max * j / 16 with R >= T, crossed with three transition profiles and
    three transition widths (width = 0.5, 0.75, 1 times R).  Because the
    ladder does not depend on T, the family for a larger T is a subset of the
    family for a smaller one, so the minimum is monotone in T.
    """
    if not 0 < T <= R_max * (1 + 1e-12):
        raise ValueError(f"need 0 < T <= {R_max}, got T={T}")
    radii = [R_max * j / LADDER_STEPS for j in range(1, LADDER_STEPS + 1)]
    radii = [R for R in radii if R >= T * (1 - 1e-12)]
    return [Window(R, wr * R, prof) for R in radii
            for prof in FAMILY_PROFILES for wr in FAMILY_WIDTHS]


@dataclass(frozen=True)
class RestrictionNorm:
    value: float
    T: float
    best: Window
    family: tuple            # ((window descriptor, value), ...)
    unreliable: bool

    def __float__(self):
        return self.value


def restriction_norm(F, T: float, s: float, b: float, windows=None,
                     R_max: float | None = None, grid: TauGrid | None = None) -> RestrictionNorm:
    """Minimum of the X^{s,b} norm of psi F over a finite admissible family.

    An upper bound for the infimum over all extensions of F from [-T, T].
    The default family is window_family(T, R_max) with R_max = T_max/2 of a
    sampled field's grid, or T for an exponential-sum field.
    """
    if windows is None:
        if R_max is None:
            R_max = F.T_max / 2.0 if isinstance(F, SpaceTimeField) else T
        windows = window_family(T, R_max)
    windows = list(windows)
    if not windows:
        raise ValueError("empty window family")
    if isinstance(F, SpaceTimeField) and T > F.T_max / 2.0 * (1 + 1e-12):
        raise ValueError(f"T={T} exceeds half the grid range {F.T_max}")
    results = [xsb_norm(F, s, b, w, grid) for w in windows]
    i = int(np.argmin([r.value for r in results]))
    return RestrictionNorm(results[i].value, T, windows[i],
                           tuple((w.describe(), r.value) for w, r in zip(windows, results)),
                           results[i].unreliable)
