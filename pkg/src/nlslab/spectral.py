"""Coefficient-space representation of periodic data and the H^{s,p} norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def bracket(x):
    """Japanese bracket <x> = (1 + x^2)^(1/2); works on scalars and arrays."""
    return np.sqrt(1.0 + np.square(np.asarray(x, dtype=float)))


@dataclass(frozen=True, eq=False)
class FourierState:
    """Truncated Fourier coefficients a(n), |n| <= N, of a periodic distribution.

    ``coeffs[k]`` holds the amplitude of e^{inx} with n = k - N.  The period
    field is metadata for rescaled tori (period 2*pi/lambda); mode indices
    are always frequencies in units of 1/x.
    """

    coeffs: np.ndarray
    period: float = TWO_PI

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True).reshape(-1)
        if c.size % 2 != 1:
            raise ValueError("coefficient array must have odd length 2N+1")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError("period must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "period", float(self.period))

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.N:
            return 0j
        return complex(self.coeffs[n + self.N])

    def __eq__(self, other):
        if not isinstance(other, FourierState):
            return NotImplemented
        return self.period == other.period and np.array_equal(self.coeffs, other.coeffs)

    def __mul__(self, c):
        return FourierState(self.coeffs * c, self.period)

    __rmul__ = __mul__

    def __add__(self, other: "FourierState") -> "FourierState":
        if self.period != other.period:
            raise ValueError("period mismatch")
        N = max(self.N, other.N)
        return FourierState(self.padded(N).coeffs + other.padded(N).coeffs, self.period)

    def padded(self, N: int) -> "FourierState":
        """Same state on the larger (or equal) radius ``N``."""
        if N < self.N:
            raise ValueError("use truncated() to shrink a state")
        out = np.zeros(2 * N + 1, dtype=complex)
        out[N - self.N:N + self.N + 1] = self.coeffs
        return FourierState(out, self.period)

    def truncated(self, N: int) -> "FourierState":
        if N >= self.N:
            return self.padded(N)
        return FourierState(self.coeffs[self.N - N:self.N + N + 1], self.period)

    @classmethod
    def single_mode(cls, n: int, amplitude: complex = 1.0, N: int | None = None,
                    period: float = TWO_PI) -> "FourierState":
        N = abs(n) if N is None else N
        if abs(n) > N:
            raise ValueError("mode outside truncation radius")
        c = np.zeros(2 * N + 1, dtype=complex)
        c[n + N] = amplitude
        return cls(c, period)

    @classmethod
    def zeros(cls, N: int, period: float = TWO_PI) -> "FourierState":
        return cls(np.zeros(2 * N + 1, dtype=complex), period)

    # JSON: {"period": p, "N": N, "coeffs": [[n, re, im], ...]} sorted by n.
    # json emits repr() floats, which round-trip bit-exactly.
    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "N": self.N,
            "coeffs": [[int(n), float(a.real), float(a.imag)]
                       for n, a in zip(self.modes, self.coeffs)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FourierState":
        N = int(d["N"])
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, re, im in d["coeffs"]:
            if abs(int(n)) > N:
                raise ValueError(f"mode {n} outside radius {N}")
            c[int(n) + N] = complex(float(re), float(im))
        return cls(c, float(d["period"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FourierState":
        return cls.from_dict(json.loads(text))


def hsp_norm(f: FourierState, s: float, p: float) -> float:
    """H^{s,p} norm (sum <n>^{ps} |a(n)|^p)^{1/p}.

    On a torus of period L != 2*pi the coefficients are renormalised to
    (1/2pi) * integral over one period and the sum carries the frequency
    spacing 2*pi/L, which multiplies the plain sum by (2pi/L)^{1/p - 1}.
    At L = 2*pi this is exactly the plain sequence norm.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    amp = np.abs(f.coeffs)
    if not np.any(amp):
        return 0.0
    # factor out the largest term so large p or s cannot overflow
    logs = p * s * np.log(bracket(f.modes)) + p * np.log(np.where(amp > 0, amp, 1.0))
    logs = np.where(amp > 0, logs, -np.inf)
    top = logs.max()
    total = math.exp(top / p) * float(np.sum(np.exp(logs - top))) ** (1.0 / p)
    scale = (TWO_PI / f.period) ** (1.0 / p - 1.0)
    return scale * total


def power_data(alpha: float, N: int) -> FourierState:
    """a(n) = <n>^alpha for |n| <= N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return FourierState(bracket(np.arange(-N, N + 1)) ** alpha + 0j)


def edge_data(s0: float, p: float, N: int) -> FourierState:
    """Zero-mean power profile at the H^{s0,p} edge: a(n) = <n>^{-s0-1/p}, a(0) = 0.

    <n>^{p s0} |a(n)|^p = <n>^{-1}, so the norm grows like (2 log N)^{1/p}.
    The zero mode is dropped because it does not take part in the scaling
    symmetry (<lambda * 0> = 1 for every lambda).
    """
    f = power_data(-s0 - 1.0 / p, N)
    c = f.coeffs.copy()
    c[N] = 0.0
    return FourierState(c)


def random_data(s0: float, p: float, N: int, seed: int) -> FourierState:
    """Random phases on the marginal H^{s0,p} profile.

    |a(n)| = <n>^{-s0-1/p} (1 + log<n>)^{-2/p}, phases uniform on [0, 2pi)
    drawn from ``numpy.random.default_rng(seed)``.  Then
    <n>^{p s0}|a(n)|^p = <n>^{-1}(1 + log<n>)^{-2}, which is summable.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if N < 0:
        raise ValueError("N must be >= 0")
    br = bracket(np.arange(-N, N + 1))
    modulus = br ** (-s0 - 1.0 / p) * (1.0 + np.log(br)) ** (-2.0 / p)
    phases = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, size=br.size)
    return FourierState(modulus * np.exp(1j * phases))


def rescale(f: FourierState, lam: int) -> FourierState:
    """Initial slice of u_lam(t, x) = lam^2 u(lam^2 t, lam x).

    Amplitude lam^2 a(n) moves to frequency lam*n; the period becomes
    period/lam and the truncation radius lam*N.
    """
    if isinstance(lam, bool) or int(lam) != lam or lam <= 0:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    lam = int(lam)
    if lam == 1:
        return f
    N = f.N
    c = np.zeros(2 * lam * N + 1, dtype=complex)
    c[lam * f.modes + lam * N] = lam ** 2 * f.coeffs
    return FourierState(c, f.period / lam)
