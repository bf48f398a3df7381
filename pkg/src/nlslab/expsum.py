"""Fields held exactly as finite sums of t^k e^{i w t} per spatial mode.

Products and Duhamel integrals of free fields stay in this class, so
first-iterate and bilinear quantities can be normed without sampling
phases of size N^2 on a time grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .propagator import SpaceTimeField
from .spectral import TWO_PI, FourierState

# |w + p^2| below this is treated as exactly resonant in duhamel()
RESONANCE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class ExpSumField:
    """Mode p coefficient u_p(t) = sum_j coef_j t^power_j exp(i freq_j t).

    Terms are stored flat; ``mode`` selects the spatial mode of each term
    and ``N`` is the radius of the mode space the field lives on.
    """

    mode: np.ndarray
    freq: np.ndarray
    coef: np.ndarray
    power: np.ndarray
    N: int
    period: float = TWO_PI

    def __post_init__(self):
        mode = np.asarray(self.mode, dtype=np.int64).reshape(-1)
        freq = np.asarray(self.freq, dtype=float).reshape(-1)
        coef = np.asarray(self.coef, dtype=complex).reshape(-1)
        power = np.asarray(self.power, dtype=np.int64).reshape(-1)
        if not (mode.size == freq.size == coef.size == power.size):
            raise ValueError("term arrays must have equal length")
        if mode.size and np.max(np.abs(mode)) > self.N:
            raise ValueError("term outside the mode radius")
        if np.any(power < 0):
            raise ValueError("powers must be >= 0")
        if not (np.all(np.isfinite(freq)) and np.all(np.isfinite(coef))):
            raise ValueError("terms must be finite")
        for name, arr in (("mode", mode), ("freq", freq), ("coef", coef), ("power", power)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.mode.size

    @property
    def offset(self) -> np.ndarray:
        """Distance w + p^2 of each term from the dispersion curve tau = -p^2."""
        return self.freq + self.mode.astype(float) ** 2

    @classmethod
    def empty(cls, N: int, period: float = TWO_PI) -> "ExpSumField":
        z = np.zeros(0)
        return cls(z, z, z, z, N, period)

    @classmethod
    def free(cls, f: FourierState) -> "ExpSumField":
        n = f.modes
        keep = f.coeffs != 0
        return cls(n[keep], -(n[keep] ** 2).astype(float), f.coeffs[keep],
                   np.zeros(int(keep.sum())), f.N, f.period)

    def _new(self, mode, freq, coef, power, N=None):
        return ExpSumField(mode, freq, coef, power, self.N if N is None else N, self.period)

    def __add__(self, other: "ExpSumField") -> "ExpSumField":
        return self._new(np.concatenate([self.mode, other.mode]),
                         np.concatenate([self.freq, other.freq]),
                         np.concatenate([self.coef, other.coef]),
                         np.concatenate([self.power, other.power]),
                         max(self.N, other.N))

    def __mul__(self, c) -> "ExpSumField":
        return self._new(self.mode, self.freq, self.coef * c, self.power)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def conj(self) -> "ExpSumField":
        return self._new(-self.mode, -self.freq, np.conj(self.coef), self.power)

    def modulate(self, theta: float) -> "ExpSumField":
        """Multiply by e^{-i theta t}."""
        return self._new(self.mode, self.freq - theta, self.coef, self.power)

    def truncated(self, N: int) -> "ExpSumField":
        keep = np.abs(self.mode) <= N
        return ExpSumField(self.mode[keep], self.freq[keep], self.coef[keep],
                           self.power[keep], N, self.period)

    def merged(self) -> "ExpSumField":
        """Combine terms sharing (mode, power, frequency) and drop zeros."""
        if self.size == 0:
            return self
        order = np.lexsort((self.freq, self.power, self.mode))
        m, w, c, k = self.mode[order], self.freq[order], self.coef[order], self.power[order]
        new = np.ones(m.size, dtype=bool)
        new[1:] = ((m[1:] != m[:-1]) | (k[1:] != k[:-1])
                   | (np.abs(w[1:] - w[:-1]) > 1e-12 * np.maximum(1.0, np.abs(w[1:]))))
        starts = np.flatnonzero(new)
        c = np.add.reduceat(c, starts)
        keep = c != 0
        return self._new(m[starts][keep], w[starts][keep], c[keep], k[starts][keep])

    def product(self, other: "ExpSumField", N_out: int | None = None) -> "ExpSumField":
        """Pointwise product in x (convolution in modes), truncated to |p| <= N_out."""
        N_out = max(self.N, other.N) if N_out is None else N_out
        mode = (self.mode[:, None] + other.mode[None, :]).ravel()
        keep = np.abs(mode) <= N_out
        freq = (self.freq[:, None] + other.freq[None, :]).ravel()[keep]
        coef = (self.coef[:, None] * other.coef[None, :]).ravel()[keep]
        power = (self.power[:, None] + other.power[None, :]).ravel()[keep]
        return ExpSumField(mode[keep], freq, coef, power, N_out, self.period).merged()

    def duhamel(self, kappa: float = 1.0) -> "ExpSumField":
        """-i kappa int_0^t e^{i(t-t')Laplacian} F(t') dt', exactly.

        A term c t'^k e^{iwt'} on mode p has offset W = w + p^2.  For W != 0
        int_0^t t'^k e^{iWt'} dt' expands into t^j e^{iWt} terms plus a
        constant; multiplying by e^{-ip^2 t} sends these to frequencies w
        and -p^2.  A resonant term (W = 0) integrates to t^{k+1}/(k+1).
        """
        p2 = self.mode.astype(float) ** 2
        W = self.freq + p2
        res = np.abs(W) <= RESONANCE_EPS
        pre = -1j * kappa * self.coef
        modes, freqs, coefs, powers = [], [], [], []
        if np.any(res):
            k = self.power[res]
            modes.append(self.mode[res])
            freqs.append(-p2[res])
            coefs.append(pre[res] / (k + 1))
            powers.append(k + 1)
        nr = ~res
        if np.any(nr):
            m, w, c, k, iw = self.mode[nr], self.freq[nr], pre[nr], self.power[nr], 1j * W[nr]
            for kk in np.unique(k):
                sel = k == kk
                ms, ws, cs, iws = m[sel], w[sel], c[sel], iw[sel]
                fk = factorial(int(kk))
                for j in range(int(kk) + 1):
                    modes.append(ms)
                    freqs.append(ws)
                    coefs.append(cs * (-1) ** j * (fk // factorial(int(kk) - j)) / iws ** (j + 1))
                    powers.append(np.full(ms.size, kk - j))
                modes.append(ms)
                freqs.append(-(ms.astype(float) ** 2))
                coefs.append(-cs * (-1) ** int(kk) * fk / iws ** (int(kk) + 1))
                powers.append(np.zeros(ms.size, dtype=np.int64))
        if not modes:
            return ExpSumField.empty(self.N, self.period)
        return self._new(np.concatenate(modes), np.concatenate(freqs),
                         np.concatenate(coefs), np.concatenate(powers)).merged()

    def evaluate(self, t: float) -> FourierState:
        out = np.zeros(2 * self.N + 1, dtype=complex)
        vals = self.coef * float(t) ** self.power * np.exp(1j * self.freq * t)
        np.add.at(out, self.mode + self.N, vals)
        return FourierState(out, self.period)

    def sample(self, times, chunk: int = 1 << 22) -> SpaceTimeField:
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, 2 * self.N + 1), dtype=complex)
        step = max(1, chunk // max(times.size, 1))
        for a in range(0, self.size, step):
            sl = slice(a, a + step)
            vals = (self.coef[sl][None, :] * times[:, None] ** self.power[sl][None, :]
                    * np.exp(1j * np.outer(times, self.freq[sl])))
            for j, m in enumerate(self.mode[sl]):
                out[:, m + self.N] += vals[:, j]
        return SpaceTimeField(times, out, self.period)

    def blocks(self):
        """Yield (p, offset, coef, power) per occupied mode p, ascending in p."""
        if self.size == 0:
            return
        order = np.argsort(self.mode, kind="stable")
        m = self.mode[order]
        W = self.offset[order]
        c, k = self.coef[order], self.power[order]
        bounds = np.flatnonzero(np.diff(m)) + 1
        for sl in np.split(np.arange(m.size), bounds):
            yield int(m[sl[0]]), W[sl], c[sl], k[sl]
