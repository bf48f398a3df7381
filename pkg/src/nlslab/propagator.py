"""Free Schrodinger flow in coefficient space and sampled space-time fields."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import TWO_PI, FourierState

DEFAULT_M = 512
DEFAULT_T_MAX = 2.0


def time_grid(T_max: float = DEFAULT_T_MAX, M: int = DEFAULT_M) -> np.ndarray:
    """M uniform samples on [-T_max, T_max], endpoints included."""
    if M < 2:
        raise ValueError("need at least two time samples")
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    return np.linspace(-T_max, T_max, M)


def aliasing_ok(N: int, M: int, T_max: float) -> bool:
    """Sampling rule M > (2N)^2 T_max / pi for phases up to (2N)^2."""
    return M > (2 * N) ** 2 * T_max / math.pi


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Mode coefficients sampled on a uniform time grid.

    ``values[k, j]`` is the coefficient of e^{inx}, n = j - N, at ``times[k]``.
    """

    times: np.ndarray
    values: np.ndarray
    period: float = TWO_PI

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True).reshape(-1)
        v = np.array(self.values, dtype=complex, copy=True)
        if t.size < 2:
            raise ValueError("need at least two time samples")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("time grid must be strictly increasing")
        h = (t[-1] - t[0]) / (t.size - 1)
        if np.max(np.abs(dt - h)) > 1e-12 * max(abs(h), np.max(np.abs(t))):
            raise ValueError("time grid must be uniform")
        if v.ndim != 2 or v.shape[0] != t.size or v.shape[1] % 2 != 1:
            raise ValueError("values must have shape (M, 2N+1)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field amplitudes must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "period", float(self.period))

    @property
    def N(self) -> int:
        return (self.values.shape[1] - 1) // 2

    @property
    def M(self) -> int:
        return self.times.size

    @property
    def T_max(self) -> float:
        return float(np.max(np.abs(self.times)))

    @property
    def dt(self) -> float:
        return float((self.times[-1] - self.times[0]) / (self.M - 1))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def slice(self, k: int) -> FourierState:
        return FourierState(self.values[k], self.period)

    def _check_compatible(self, other: "SpaceTimeField"):
        if (other.M != self.M or not np.array_equal(other.times, self.times)
                or other.N != self.N):
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self._check_compatible(other)
        return SpaceTimeField(self.times, self.values + other.values, self.period)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self._check_compatible(other)
        return SpaceTimeField(self.times, self.values - other.values, self.period)

    def __mul__(self, c) -> "SpaceTimeField":
        return SpaceTimeField(self.times, self.values * c, self.period)

    __rmul__ = __mul__

    def truncated(self, N: int) -> "SpaceTimeField":
        if N >= self.N:
            out = np.zeros((self.M, 2 * N + 1), dtype=complex)
            out[:, N - self.N:N + self.N + 1] = self.values
        else:
            out = self.values[:, self.N - N:self.N + N + 1]
        return SpaceTimeField(self.times, out, self.period)

    def modulate(self, theta: float) -> "SpaceTimeField":
        """Multiply every slice by e^{-i theta t}."""
        return SpaceTimeField(self.times,
                              self.values * np.exp(-1j * theta * self.times)[:, None],
                              self.period)

    @classmethod
    def zeros(cls, times, N: int, period: float = TWO_PI) -> "SpaceTimeField":
        return cls(times, np.zeros((len(times), 2 * N + 1), dtype=complex), period)


def evolve(f: FourierState, t: float) -> FourierState:
    """e^{it Laplacian} f: a(n) -> a(n) e^{-i n^2 t}."""
    if t == 0:
        return f
    n = f.modes
    return FourierState(f.coeffs * np.exp(-1j * (n * n) * t), f.period)


def sample_free_field(f: FourierState, times) -> SpaceTimeField:
    times = np.asarray(times, dtype=float)
    n2 = (f.modes * f.modes).astype(float)
    values = f.coeffs[None, :] * np.exp(-1j * np.outer(times, n2))
    # t = 0 slices are f itself, bit for bit
    values[times == 0] = f.coeffs
    return SpaceTimeField(times, values, f.period)


def _conj_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients of conj(A) conj(B) for coefficient rows a, b of radius N.

    conj(A) has coefficient conj(a[-k]) at mode k, so the product is the
    full convolution of the reversed conjugates, radius 2N.
    """
    da = np.conj(a[..., ::-1])
    db = np.conj(b[..., ::-1])
    width = a.shape[-1]
    out = np.zeros(a.shape[:-1] + (2 * width - 1,), dtype=complex)
    for k in range(width):
        out[..., k:k + width] += da[..., k:k + 1] * db
    return out


def _retain(full: np.ndarray, N: int, retain: str) -> np.ndarray:
    if retain == "2N":
        return full
    if retain == "N":
        return full[..., N:3 * N + 1]
    raise ValueError(f"retain must be 'N' or '2N', got {retain!r}")


def conjugate_square(u: SpaceTimeField, retain: str = "N") -> SpaceTimeField:
    """Slice-wise coefficients of conj(u)^2.

    Mode p collects sum_n conj(a(n)) conj(a(-n-p)).  The output is truncated
    to |p| <= N unless ``retain='2N'``.
    """
    full = _conj_convolve(u.values, u.values)
    return SpaceTimeField(u.times, _retain(full, u.N, retain), u.period)


def conjugate_product(u: SpaceTimeField, v: SpaceTimeField, retain: str = "N") -> SpaceTimeField:
    """Slice-wise coefficients of conj(u) conj(v)."""
    u._check_compatible(v)
    full = _conj_convolve(u.values, v.values)
    return SpaceTimeField(u.times, _retain(full, u.N, retain), u.period)


# Serialization.  Header JSON; slices either inline as [[re, im], ...] rows or
# in a binary sidecar of little-endian float64 triplets (n, re, im),
# slice-major, modes ascending within a slice.

FIELD_FORMAT = "nlslab.spacetime"
FIELD_VERSION = 1


def save_field(field: SpaceTimeField, path, sidecar: bool = False) -> Path:
    path = Path(path)
    header = {
        "format": FIELD_FORMAT,
        "version": FIELD_VERSION,
        "N": field.N,
        "M": field.M,
        "T_max": field.T_max,
        "period": field.period,
        "times": [float(t) for t in field.times],
    }
    if sidecar:
        bin_path = path.with_suffix(".bin")
        n = np.broadcast_to(field.modes.astype("<f8"), field.values.shape)
        trip = np.stack([n, field.values.real, field.values.imag], axis=-1).astype("<f8")
        bin_path.write_bytes(trip.tobytes())
        header["sidecar"] = {
            "file": bin_path.name,
            "layout": "little-endian float64 triplets (n, re, im); "
                      "slice-major, 2N+1 ascending modes per slice",
            "count": int(trip.size // 3),
        }
    else:
        header["slices"] = [[[float(z.real), float(z.imag)] for z in row]
                            for row in field.values]
    path.write_text(json.dumps(header))
    return path


def load_field(path) -> SpaceTimeField:
    path = Path(path)
    header = json.loads(path.read_text())
    if header.get("format") != FIELD_FORMAT:
        raise ValueError(f"{path}: not a space-time field file")
    N, M = int(header["N"]), int(header["M"])
    times = np.array(header["times"], dtype=float)
    if "sidecar" in header:
        raw = np.frombuffer((path.parent / header["sidecar"]["file"]).read_bytes(), dtype="<f8")
        trip = raw.reshape(M, 2 * N + 1, 3)
        values = trip[..., 1] + 1j * trip[..., 2]
    else:
        arr = np.array(header["slices"], dtype=float)
        values = arr[..., 0] + 1j * arr[..., 1]
    return SpaceTimeField(times, values, float(header["period"]))
