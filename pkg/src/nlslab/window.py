"""Smooth compactly supported time cutoffs and their Fourier transforms.

Transforms use the convention psi_hat(sigma) = int e^{-i sigma t} psi(t) dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# E(x) = exp(-alpha / x) for x > 0; alpha per named transition profile
PROFILES = {"exp": 1.0, "exp-soft": 0.5, "exp-hard": 2.0}

# tabulated transforms stop where |T_k| drops below this fraction of |T_0(0)|
TABLE_RTOL = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _edge(x, alpha):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-alpha / x[pos])
    return out


@dataclass(frozen=True)
class Window:
    """psi = 1 on [-plateau, plateau], 0 beyond plateau + width.

    On the transition the profile is E(r - |t|) / (E(r - |t|) + E(|t| - plateau))
    with r = plateau + width and E(x) = exp(-alpha/x), alpha set by ``profile``.
    The default is the unit window: plateau 1, support 2, alpha = 1.
    ``power`` > 1 gives psi^power, e.g. the product of two windowed fields.
    """

    plateau: float = 1.0
    width: float = 1.0
    profile: str = "exp"
    power: int = 1

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown window profile {self.profile!r}; "
                             f"choose from {sorted(PROFILES)}")
        if not (self.plateau > 0 and self.width > 0):
            raise ValueError("plateau and width must be positive")
        if int(self.power) != self.power or self.power < 1:
            raise ValueError("power must be a positive integer")
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "plateau", float(self.plateau))
        object.__setattr__(self, "width", float(self.width))

    @property
    def support(self) -> float:
        return self.plateau + self.width

    @property
    def alpha(self) -> float:
        return PROFILES[self.profile]

    def describe(self) -> dict:
        d = {"profile": self.profile, "alpha": self.alpha,
             "plateau": self.plateau, "width": self.width}
        if self.power != 1:
            d["power"] = self.power
        return d

    def __call__(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        out = np.where(a <= self.plateau, 1.0, 0.0)
        mid = (a > self.plateau) & (a < self.support)
        if np.any(mid):
            x = (a[mid] - self.plateau) / self.width
            up = _edge(1.0 - x, self.alpha)
            down = _edge(x, self.alpha)
            out = out.astype(float)
            out[mid] = up / (up + down)
        return out ** self.power if self.power != 1 else out

    def _nodes(self, sigma_max: float):
        """Composite Gauss-Legendre nodes on [0, support], phase <= 20 rad per panel.

        The transition also gets at least four panels per unit length, which
        its exp(-alpha/x) flanks need for 1e-13 accuracy at low frequency.
        """
        pieces = []
        for a, b, dens in ((0.0, self.plateau, 0.0), (self.plateau, self.support, 4.0)):
            n_pan = max(1, math.ceil((b - a) * max(sigma_max, 1.0) / 20.0),
                        math.ceil((b - a) * dens))
            edges = np.linspace(a, b, n_pan + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
            w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
            pieces.append((x, w))
        x = np.concatenate([p[0] for p in pieces])
        w = np.concatenate([p[1] for p in pieces])
        return x, w * self(x)

    def transform(self, sigma, k: int = 0, chunk: int = 2048):
        """int e^{-i sigma t} t^k psi(t) dt, by quadrature of the even/odd part."""
        sigma = np.asarray(sigma, dtype=float)
        flat = sigma.reshape(-1)
        if flat.size == 0:
            return np.zeros(sigma.shape, dtype=complex)
        x, w = self._nodes(float(np.max(np.abs(flat))))
        w = w * x ** k
        out = np.empty(flat.size, dtype=complex)
        for a in range(0, flat.size, chunk):
            ph = np.outer(flat[a:a + chunk], x)
            if k % 2 == 0:
                out[a:a + chunk] = 2.0 * (np.cos(ph) @ w)
            else:
                out[a:a + chunk] = -2j * (np.sin(ph) @ w)
        return out.reshape(sigma.shape)

    def hat(self, sigma):
        """psi_hat(sigma) (real, since psi is real and even)."""
        return self.transform(sigma, 0).real


def lattice_step(window: Window) -> int:
    """Lattice density q (spacing 1/q) for sigma sums against this window.

    |psi_hat|^2 is the transform of an autocorrelation supported in
    [-2S, 2S]; spacing below pi/(2S) samples it without aliasing, and 1/q
    with q >= 2S leaves a margin of pi.  q is an integer so integer offsets
    land on lattice points.
    """
    return max(2, math.ceil(2.0 * window.support))


@lru_cache(maxsize=64)
def transform_table(window: Window, q: int, k: int):
    """T_k on the lattice j/q, |j| <= J, with J chosen so |T| < TABLE_RTOL beyond.

    Returns (J, values) with values[j + J] = T_k(j/q).  The cutoff is found by
    growing a trial radius until the transform over its outer fifth is
    negligible.  Cross terms between offsets further apart than twice the
    radius are bounded by the same fraction and are dropped by callers.
    """
    ref = abs(window.transform(0.0, 0))
    radius = 32.0 / window.width
    while True:
        probe = np.linspace(0.8 * radius, radius, 129)
        if np.max(np.abs(window.transform(probe, k))) < TABLE_RTOL * ref:
            break
        radius *= 1.25
        if radius > 1e6:
            raise RuntimeError("window transform does not decay")
    J = int(math.ceil(radius * q))
    vals = window.transform(np.arange(-J, J + 1) / q, k)
    vals.setflags(write=False)
    return J, vals
