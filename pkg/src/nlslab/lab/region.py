"""Parameter-region logic for H^{s0,p} data, and the scaling exponent check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..spectral import FourierState, hsp_norm, rescale

FIVE_SIXTHS = 5.0 / 6.0


@dataclass(frozen=True)
class RegionSpec:
    """Whether (s0, p) satisfies 3/p + s0 > 5/6, and the open s-interval it allows.

    s_interval is (-1/6 - s0 - 1/p, -1 + 2/p), or None when empty.  The two
    conditions coincide: the interval is nonempty exactly when 3/p + s0 > 5/6.
    """

    s0: float
    p: float
    admissible: bool
    s_interval: tuple | None

    @property
    def margin(self) -> float:
        return 3.0 / self.p + self.s0 - FIVE_SIXTHS

    def contains(self, s: float) -> bool:
        return self.s_interval is not None and self.s_interval[0] < s < self.s_interval[1]

    def to_dict(self) -> dict:
        return {"s0": self.s0, "p": self.p, "admissible": self.admissible,
                "s_interval": list(self.s_interval) if self.s_interval else None,
                "margin": self.margin, "hypotheses": theorem_hypotheses(self.s0, self.p)}


def admissible_region(s0: float, p: float) -> RegionSpec:
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    lo = -1.0 / 6.0 - s0 - 1.0 / p
    hi = -1.0 + 2.0 / p
    return RegionSpec(float(s0), float(p), 3.0 / p + s0 > FIVE_SIXTHS,
                      (lo, hi) if lo < hi else None)


def theorem_hypotheses(s0: float, p: float) -> dict:
    """Each hypothesis of the H^{s0,p} well-posedness result, checked separately."""
    h = {"s0 > -1/2": s0 > -0.5, "p > 2": p > 2, "3/p + s0 > 5/6": 3.0 / p + s0 > FIVE_SIXTHS}
    h["all"] = all(h.values())
    return h


def bilinear_hypotheses(s0: float, p: float, s: float) -> dict:
    """Hypotheses of the bilinear bound: -1/2 < s0 <= 0, p >= 2, -1/6 - s0 - 1/p < s <= 0."""
    h = {"-1/2 < s0 <= 0": -0.5 < s0 <= 0, "p >= 2": p >= 2,
         "-1/6 - s0 - 1/p < s <= 0": -1.0 / 6.0 - s0 - 1.0 / p < s <= 0}
    h["all"] = all(h.values())
    return h


def inverse_p_window(s0: float):
    """Open interval of 1/p with p > 2 and 3/p + s0 > 5/6, or None if empty."""
    lo = max((FIVE_SIXTHS - s0) / 3.0, 0.0)
    hi = 0.5
    return (lo, hi) if lo < hi else None


def best_s_cap(s0: float):
    """The cap -1 + 2/p on s at the largest admissible p (lower end of the 1/p window).

    Larger p means rougher data is allowed; this is the regularity reached there.
    """
    win = inverse_p_window(s0)
    return None if win is None else -1.0 + 2.0 * win[0]


# ---------------------------------------------------------------------------


@dataclass
class ScalingReport:
    lambdas: list
    norms: list
    slope: float
    expected: float
    norm: str
    degenerate: bool

    def within(self, tol: float) -> bool:
        return (not self.degenerate) and abs(self.slope - self.expected) <= tol

    def to_dict(self) -> dict:
        return {"lambdas": self.lambdas, "norms": self.norms, "slope": self.slope,
                "expected": self.expected, "norm": self.norm, "degenerate": self.degenerate}


def scaling_check(f: FourierState, s0: float, p: float, lambda_list, norm: str = "period") -> ScalingReport:
    """Log-log slope of ||rescale(f, lam)||_{H^{s0,p}} against lam.

    ``norm="period"`` uses the period-aware norm of the rescaled torus, whose
    expected slope is 1 + s0 + 1/p; ``norm="sequence"`` uses the plain
    coefficient norm, for which the expected slope is 2 + s0.
    """
    lams = [int(l) for l in lambda_list]
    if len(lams) < 4:
        raise ValueError("need at least 4 lambda values")
    if any(l != x or l < 1 for l, x in zip(lams, lambda_list)):
        raise ValueError("lambda values must be positive integers")
    if len(set(lams)) < 2:
        raise ValueError("need at least two distinct lambda values")
    if norm not in ("period", "sequence"):
        raise ValueError(f"unknown norm {norm!r}")
    norms = []
    for lam in lams:
        g = rescale(f, lam)
        if norm == "sequence":
            g = FourierState(g.coeffs)
        norms.append(hsp_norm(g, s0, p))
    expected = 1.0 + s0 + 1.0 / p if norm == "period" else 2.0 + s0
    y = np.array(norms)
    if np.any(y <= 0) or np.ptp(np.log(y)) == 0.0:
        return ScalingReport(lams, norms, math.nan, expected, norm, True)
    slope = float(np.polyfit(np.log(lams), np.log(y), 1)[0])
    return ScalingReport(lams, norms, slope, expected, norm, False)
