"""Experiment configs, validation, execution and persistence.

A config is a JSON object::

    {"schema_version": 1, "kind": "picard-smoothing", "name": "smooth",
     "seed": 0, "discretization": {"N": 64, "M": 512},
     "params": {...}}

Every kind validates its parameters before computing anything.  A run
writes <name>.json (config echo, results, verdicts, metadata) and
<name>.csv (one row per point, first line a schema comment).  Verdicts
are data: a completed run succeeds whatever they say.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .lab import probes, region, sums
from .picard import NormSpec, RULES, picard_solve
from .propagator import DEFAULT_M
from .spectral import FourierState, edge_data, power_data, random_data
from .xsb import TauGrid

SCHEMA_VERSION = 1
WORKERS_ENV = "NLSLAB_WORKERS"


class ConfigError(ValueError):
    """A config that cannot be run; the message names the violated condition."""


# ---------------------------------------------------------------------------
# descriptions


KINDS = {
    "solve": (
        "Picard iteration for i u_t + u_xx = kappa conj(u)^2 on the torus, solving for "
        "the correction v = u - e^{it Lap} f in X^{s,b}.  Checks that small data give a "
        "contraction (geometric residual decay) and that the limit satisfies the "
        "integral equation."),
    "picard-smoothing": (
        "Smoothing of the first Picard iterate: ||u1||_{X^{s,b}([-1,1])} against "
        "||f||^2_{H^{s0,p}} as the truncation N doubles.  At p = 2, s = 0 the first "
        "iterate lies in X^{0,b} although f is only in H^{s0}."),
    "supsum": (
        "Uniform lattice-sum bounds with certified integral tails: sums of <n - y>^{-2g}, "
        "<z + n(n - y)>^{-g}, the two corollary sums with quadratic phases, the decay "
        "bound for <n^2 + y^2>^{-g}, the convolution bound <A> int <tau + A>^{-1}|phi|, "
        "the c_p majorant and the I(k, tau) sums of the bilinear estimate."),
    "bilinear": (
        "Bilinear estimates: the Duhamel term of conj(u0) conj(v) in X^{s,b} against "
        "||f||_{H^{s0,p}} ||v||_{X^{s,b}}, the product bound ||conj(v) conj(w)||_{X^{s,b-1}}, "
        "and an exploratory probe of its failure below s = -1/2."),
    "region": (
        "Admissible (s0, p) region: 3/p + s0 > 5/6, the allowed interval "
        "(-1/6 - s0 - 1/p, -1 + 2/p) for s, and the window of 1/p near s0 = -1/2."),
    "scaling": (
        "Scaling exponent: ||f_lambda||_{H^{s0,p}} ~ lambda^{1 + s0 + 1/p} under "
        "u_lambda(t, x) = lambda^2 u(lambda^2 t, lambda x), fitted on a log-log scale."),
}


def list_experiments() -> list[str]:
    return list(KINDS)


def describe(kind: str) -> str:
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
    return f"{kind}: {KINDS[kind]}\n\nparameters:\n{PARAM_DOCS[kind]}"


PARAM_DOCS = {
    "solve": ("  data (object, required), kappa=1, T=1, max_iter=50, tol=1e-10, s=0, b=0.55,\n"
              "  rule=cubic|trapezoid; discretization N (default 2|n| for single-mode data),\n"
              "  M=512, tau_max, dtau"),
    "picard-smoothing": ("  s0, p, s, b (required), N_list (>= 3 values), family=edge|random,\n"
                         "  denominator=hsp|h0, kappa=1"),
    "supsum": ("  sum = shift|quadratic|double-root|corollary|decay|convolution|cp|I\n"
               "  shift, quadratic, decay: gamma (or gammas list); optional grids\n"
               "  double-root: gamma, m_max=100; corollary: gamma1, gamma2\n"
               "  decay: lattice=Z|N; convolution: profile=gaussian|cauchy3|window-hat\n"
               "  cp: data, N_list; I: data, s, b, s0, p, N_list"),
    "bilinear": ("  probe = bilinear|kpv|kpv-failure, s, b; bilinear: s0, p, N_list, pairs=100\n"
                 "  kpv: N_list, pairs=50; kpv-failure: N_list"),
    "region": "  s0, p (numbers or lists, crossed); optional s to test membership",
    "scaling": ("  data (object), s0, p, lambdas (>= 4 positive integers), norm=period|sequence;\n"
                "  discretization N"),
}

DATA_DOC = ('data objects: {"type": "single_mode", "n": 1, "amplitude": 1e-3}, '
            '{"type": "edge", "s0": -0.45, "p": 2}, {"type": "random", "s0", "p"}, '
            '{"type": "power", "alpha"}, {"type": "coeffs", "coeffs": [[re, im], ...]}')


# ---------------------------------------------------------------------------
# validation helpers


def _num(params, key, default=None, cond=None, what=None):
    if key not in params:
        if default is None:
            raise ConfigError(f"missing parameter {key!r}")
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"parameter {key!r} must be a finite number, got {v!r}")
    if cond is not None and not cond(v):
        raise ConfigError(f"parameter {key!r}={v} violates {what}")
    return v


def _int(params, key, default=None, cond=None, what=None):
    v = _num(params, key, default, cond, what)
    if int(v) != v:
        raise ConfigError(f"parameter {key!r} must be an integer, got {v!r}")
    return int(v)


def _choice(params, key, options, default):
    v = params.get(key, default)
    if v not in options:
        raise ConfigError(f"parameter {key!r}={v!r} must be one of {list(options)}")
    return v


def _int_list(params, key, default=None, min_len=1, positive=True):
    v = params.get(key, default)
    if v is None:
        raise ConfigError(f"missing parameter {key!r}")
    if not isinstance(v, list) or len(v) < min_len:
        raise ConfigError(f"parameter {key!r} must be a list of at least {min_len} integers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
            raise ConfigError(f"parameter {key!r} must contain integers, got {x!r}")
        if positive and x < 1:
            raise ConfigError(f"parameter {key!r} must contain positive integers, got {x!r}")
        out.append(int(x))
    return out


def _float_list(params, key):
    v = params.get(key)
    if v is None:
        return None
    if not isinstance(v, list) or not v:
        raise ConfigError(f"parameter {key!r} must be a nonempty list of numbers")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"parameter {key!r} must contain finite numbers, got {x!r}")
    return [float(x) for x in v]


def _gamma(params, key="gamma"):
    return _num(params, key, None, lambda g: g > 0.5, "gamma > 1/2")


def _data_spec(params, key="data"):
    spec = params.get(key)
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"parameter {key!r} must be a data object; {DATA_DOC}")
    t = spec["type"]
    if t == "single_mode":
        _int(spec, "n")
        amp = spec.get("amplitude", 1.0)
        if isinstance(amp, list):
            if len(amp) != 2:
                raise ConfigError("complex amplitude must be [re, im]")
        else:
            _num(spec, "amplitude", 1.0)
    elif t in ("edge", "random"):
        _num(spec, "s0")
        _num(spec, "p", None, lambda p: p >= 1, "p >= 1")
    elif t == "power":
        _num(spec, "alpha")
    elif t == "coeffs":
        c = spec.get("coeffs")
        if not isinstance(c, list) or len(c) % 2 != 1 or not all(
                isinstance(z, list) and len(z) == 2 for z in c):
            raise ConfigError("coeffs must be an odd-length list of [re, im] pairs")
    else:
        raise ConfigError(f"unknown data type {t!r}; {DATA_DOC}")
    extra = set(spec) - {"type"} - _DATA_KEYS[t]
    if extra:
        raise ConfigError(f"unknown keys for {t} data: {sorted(extra)}; {DATA_DOC}")
    return spec


_DATA_KEYS = {"single_mode": {"n", "amplitude"}, "edge": {"s0", "p"}, "random": {"s0", "p", "seed"},
              "power": {"alpha"}, "coeffs": {"coeffs"}}


def build_data(spec: dict, N: int, seed: int = 0) -> FourierState:
    """FourierState on |n| <= N from a data object."""
    t = spec["type"]
    if t == "single_mode":
        amp = spec.get("amplitude", 1.0)
        amp = complex(*amp) if isinstance(amp, list) else complex(amp)
        return FourierState.single_mode(int(spec["n"]), amp, N)
    if t == "edge":
        return edge_data(spec["s0"], spec["p"], N)
    if t == "random":
        return random_data(spec["s0"], spec["p"], N, int(spec.get("seed", seed)))
    if t == "power":
        return power_data(spec["alpha"], N)
    c = np.array([complex(*z) for z in spec["coeffs"]])
    return FourierState(c)


def _data_radius(spec, N):
    if N is not None:
        return N
    if spec["type"] == "single_mode":
        # room for the mode -2n that conj(u)^2 creates; radius |n| would truncate it away
        return max(1, 2 * abs(int(spec["n"])))
    if spec["type"] == "coeffs":
        return (len(spec["coeffs"]) - 1) // 2
    raise ConfigError("discretization.N is required for this data type")


# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    seed: int = 0
    name: str = ""
    out: str | None = None
    discretization: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {"schema_version": self.schema_version, "kind": self.kind, "name": self.name,
             "seed": self.seed, "discretization": self.discretization, "params": self.params}
        if self.out is not None:
            d["out"] = self.out
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(obj) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    known = {"schema_version", "kind", "name", "seed", "out", "discretization", "params"}
    extra = set(obj) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    ver = obj.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    params = obj.get("params", {})
    disc = obj.get("discretization", {})
    if not isinstance(params, dict) or not isinstance(disc, dict):
        raise ConfigError("params and discretization must be objects")
    out = obj.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    name = obj.get("name", kind)
    if not isinstance(name, str) or not name or "/" in name or name.startswith("."):
        raise ConfigError(f"name must be a plain file stem, got {name!r}")
    cfg = ExperimentConfig(kind, params, seed, name, out, disc, ver)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; JSON errors carry line and column."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    return parse_config(obj)


def _discretization(cfg):
    d = cfg.discretization
    allowed = {"N", "M", "T_max", "tau_max", "dtau"}
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown discretization keys: {sorted(extra)}")
    out = {}
    if "N" in d:
        out["N"] = _int(d, "N", None, lambda n: n >= 0, "N >= 0")
    if "M" in d:
        out["M"] = _int(d, "M", None, lambda m: m >= 8, "M >= 8")
    for key in ("T_max", "tau_max", "dtau"):
        if key in d:
            out[key] = _num(d, key, None, lambda x: x > 0, f"{key} > 0")
    return out


def validate(cfg: ExperimentConfig) -> dict:
    """Check every parameter against its operation's preconditions; return them normalised."""
    disc = _discretization(cfg)
    return VALIDATORS[cfg.kind](cfg.params, disc, cfg.seed)


def _v_solve(p, disc, seed):
    spec = _data_spec(p)
    N = _data_radius(spec, disc.get("N"))
    if spec["type"] == "single_mode" and abs(int(spec["n"])) > N:
        raise ConfigError(f"data mode {spec['n']} lies outside |n| <= N = {N}")
    kappa = _int(p, "kappa", 1, lambda k: k in (1, -1), "kappa = +-1")
    T = _num(p, "T", 1.0, lambda t: t > 0, "T > 0")
    if "T_max" in disc and disc["T_max"] != 2 * T:
        raise ConfigError("discretization.T_max must equal 2T for solve (grid over [-2T, 2T])")
    grid = None
    if "tau_max" in disc or "dtau" in disc:
        dflt = TauGrid.default(N, 2 * T)
        grid = TauGrid(disc.get("dtau", dflt.dtau), disc.get("tau_max", dflt.tau_max))
    return {"data": spec, "N": N, "kappa": kappa, "T": T,
            "max_iter": _int(p, "max_iter", 50, lambda n: n >= 1, "max_iter >= 1"),
            "tol": _num(p, "tol", 1e-10, lambda x: x > 0, "tol > 0"),
            "s": _num(p, "s", 0.0), "b": _num(p, "b", 0.55),
            "rule": _choice(p, "rule", RULES, "cubic"),
            "M": disc.get("M", DEFAULT_M), "grid": grid}


def _v_smoothing(p, disc, seed):
    out = {k: _num(p, k) for k in ("s0", "s", "b")}
    out["p"] = _num(p, "p", None, lambda x: x >= 1, "p >= 1")
    try:
        probes.check_smoothing_pre(out["p"], out["s"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out["N_list"] = _int_list(p, "N_list", None, 3)
    out["family"] = _choice(p, "family", ("edge", "random"), "edge")
    out["denominator"] = _choice(p, "denominator", ("hsp", "h0"), "hsp")
    out["kappa"] = _int(p, "kappa", 1, lambda k: k in (1, -1), "kappa = +-1")
    return out


SUM_KINDS = ("shift", "quadratic", "double-root", "corollary", "decay", "convolution", "cp", "I")


def _gammas(p):
    if "gammas" in p:
        gs = _float_list(p, "gammas")
        for g in gs:
            if not g > 0.5:
                raise ConfigError(f"gamma={g} violates gamma > 1/2")
        return gs
    return [_gamma(p)]


def _v_supsum(p, disc, seed):
    which = _choice(p, "sum", SUM_KINDS, None)
    out = {"sum": which}
    if which in ("shift", "quadratic", "decay", "double-root"):
        out["gammas"] = _gammas(p)
    if which == "shift":
        out["y_grid"] = _float_list(p, "y_grid")
    elif which == "quadratic":
        out["y_grid"] = _float_list(p, "y_grid")
        out["z_grid"] = _float_list(p, "z_grid")
    elif which == "double-root":
        out["m_max"] = _int(p, "m_max", 100, lambda m: m >= 1, "m_max >= 1")
    elif which == "decay":
        out["y_grid"] = _float_list(p, "y_grid")
        out["lattice"] = _choice(p, "lattice", ("Z", "N"), "Z")
    elif which == "corollary":
        out["gamma1"] = _gamma(p, "gamma1")
        out["gamma2"] = _gamma(p, "gamma2")
        for key in ("grid1", "grid2"):
            g = p.get(key)
            if g is not None and not (isinstance(g, list) and all(isinstance(x, dict) for x in g)):
                raise ConfigError(f"{key} must be a list of point objects")
        for pt in p.get("grid2") or []:
            if pt.get("m") == pt.get("k"):
                raise ConfigError(f"second corollary sum requires m != k, got {pt}")
        out["grid1"], out["grid2"] = p.get("grid1"), p.get("grid2")
    elif which == "convolution":
        out["profile"] = _choice(p, "profile", sums.PROFILE_NAMES, None)
        out["A_grid"] = _float_list(p, "A_grid")
    elif which in ("cp", "I"):
        out["data"] = _data_spec(p)
        out["N_list"] = _int_list(p, "N_list", None, 1)
        if which == "I":
            for k in ("s", "b", "s0"):
                out[k] = _num(p, k)
            out["p"] = _num(p, "p", None, lambda x: x >= 1, "p >= 1")
    return out


def _v_bilinear(p, disc, seed):
    which = _choice(p, "probe", ("bilinear", "kpv", "kpv-failure"), "bilinear")
    out = {"probe": which, "s": _num(p, "s"), "b": _num(p, "b")}
    out["N_list"] = _int_list(p, "N_list", None, 1)
    if which == "bilinear":
        out["s0"] = _num(p, "s0")
        out["p"] = _num(p, "p", None, lambda x: x >= 1, "p >= 1")
        out["pairs"] = _int(p, "pairs", 100, lambda n: n >= 1, "pairs >= 1")
    elif which == "kpv":
        out["pairs"] = _int(p, "pairs", 50, lambda n: n >= 1, "pairs >= 1")
    elif len(out["N_list"]) < 3:
        raise ConfigError("kpv-failure needs at least three N values")
    return out


def _v_region(p, disc, seed):
    def as_list(key):
        v = p.get(key)
        if isinstance(v, list):
            return _float_list(p, key)
        return [_num(p, key)]
    s0s, ps = as_list("s0"), as_list("p")
    for x in ps:
        if not x > 0:
            raise ConfigError(f"p={x} violates p > 0")
    out = {"s0": s0s, "p": ps}
    if "s" in p:
        out["s"] = _num(p, "s")
    return out


def _v_scaling(p, disc, seed):
    spec = _data_spec(p)
    out = {"data": spec, "N": _data_radius(spec, disc.get("N")),
           "s0": _num(p, "s0"), "p": _num(p, "p", None, lambda x: x >= 1, "p >= 1"),
           "lambdas": _int_list(p, "lambdas", None, 4),
           "norm": _choice(p, "norm", ("period", "sequence"), "period")}
    if len(set(out["lambdas"])) < 2:
        raise ConfigError("lambdas must contain at least two distinct values")
    return out


VALIDATORS = {"solve": _v_solve, "picard-smoothing": _v_smoothing, "supsum": _v_supsum,
              "bilinear": _v_bilinear, "region": _v_region, "scaling": _v_scaling}


# ---------------------------------------------------------------------------
# tasks (top-level so they pickle for worker processes)


def _task_smoothing(v, N):
    return probes.smoothing_point(v["s0"], v["p"], v["s"], v["b"], N, v["family"],
                                  v["denominator"], v["kappa"], v["seed"])


def _task_bilinear(v, N, seed):
    f = random_data(v["s0"], v["p"], N, seed)
    w = probes.random_expsum_field(N, seed + 1_000_003, v["s"])
    return probes.bilinear_ratio(f, w, v["s"], v["b"], v["s0"], v["p"])


def _task_kpv(v, N, seed):
    a = probes.random_expsum_field(N, seed, v["s"])
    c = probes.random_expsum_field(N, seed + 1_000_003, v["s"])
    return probes.kpv_bilinear_ratio(a, c, v["s"], v["b"])


def _map(fn, arglist, workers):
    if workers <= 1 or len(arglist) <= 1:
        return [fn(*a) for a in arglist]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(fn, *a) for a in arglist]
        return [f.result() for f in futs]


def _finite(x):
    """JSON-safe float: infinities and NaN become strings."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _sup_rows(rep: sums.SupSumReport, extra=None):
    rows = []
    for pt, val, tail, cert in rep.rows():
        row = dict(extra or {})
        row.update(pt)
        row.update({"value": val, "tail": _finite(tail), "certified": cert})
        rows.append(row)
    return rows


def _sup_summary(rep: sums.SupSumReport):
    notes = {k: v for k, v in rep.notes.items() if not isinstance(v, list)}
    return {"name": rep.name, "params": rep.params, "sup": rep.sup, "argsup": rep.argsup,
            "max_tail": _finite(rep.max_tail), "certified": rep.certified,
            "finite": rep.finite, "truncation": rep.truncation, "notes": notes}


def _run_solve(v, seed, workers):
    f = build_data(v["data"], v["N"], seed)
    rep = picard_solve(f, v["kappa"], v["T"], v["max_iter"], v["tol"], NormSpec(v["s"], v["b"]),
                       v["M"], v["rule"], grid=v["grid"])
    d = rep.to_dict()
    rows = [{"iteration": i + 1, "residual": r,
             "contraction_factor": rep.contraction_factors[i - 1] if i > 0 else ""}
            for i, r in enumerate(rep.residual_history)]
    verdicts = {"converged": rep.converged, "diverged": rep.diverged,
                "geometric_decay": bool(rep.contraction_factors)
                and all(c < 0.5 for c in rep.contraction_factors)}
    return d, verdicts, rows


def _run_smoothing(v, seed, workers):
    v = dict(v, seed=seed)
    out = _map(_task_smoothing, [(v, N) for N in v["N_list"]], workers)
    nums, dens = [o[0] for o in out], [o[1] for o in out]
    ratios = [a / b for a, b in zip(nums, dens)]
    spread = probes.last_three_spread(ratios)
    res = {"N": v["N_list"], "ratios": ratios, "numerators": nums, "denominators": dens,
           "spread": spread, "diagnostics": probes.proof_symbols(v["s0"], v["s"], v["b"])}
    rows = [{"N": N, "ratio": r, "numerator": a, "denominator": b}
            for N, r, a, b in zip(v["N_list"], ratios, nums, dens)]
    return res, {"bounded": spread <= probes.BOUNDED_SPREAD}, rows


def _run_supsum(v, seed, workers):
    which = v["sum"]
    reports = []
    if which == "shift":
        reports = [sums.sup_sum_shift(g, v["y_grid"]) for g in v["gammas"]]
    elif which == "quadratic":
        reports = [sums.sup_sum_quadratic(g, v["y_grid"], v["z_grid"]) for g in v["gammas"]]
    elif which == "double-root":
        reports = [sums.double_root_family(g, range(1, v["m_max"] + 1)) for g in v["gammas"]]
    elif which == "decay":
        reports = [sums.check_decay_lemma(g, v["y_grid"], v["lattice"]) for g in v["gammas"]]
    elif which == "corollary":
        reports = list(sums.check_corollary_sums(v["gamma1"], v["gamma2"], v["grid1"], v["grid2"]))
    elif which == "convolution":
        reports = [sums.check_convolution_lemma(v["profile"], v["A_grid"])]
    elif which == "I":
        for N in v["N_list"]:
            f = build_data(v["data"], N, seed)
            reports.append(probes.sup_I(f, v["s"], v["b"], s0=v["s0"], p=v["p"]))
    if which == "cp":
        res, rows, sups = [], [], []
        for N in v["N_list"]:
            rep = probes.check_cp_bound(build_data(v["data"], N, seed))
            res.append({"N": N, "sup": rep.sup})
            sups.append(rep.sup)
            rows += [{"N": N, **pt, "ratio": float(r)} for pt, r in zip(rep.points, rep.ratios)]
        drift = max(abs(b / a - 1) for a, b in zip(sups, sups[1:])) if len(sups) > 1 else 0.0
        return ({"reports": res, "drift": drift},
                {"finite": bool(np.all(np.isfinite(sups))), "stable": drift < 0.1}, rows)
    rows = []
    for i, rep in enumerate(reports):
        extra = {"report": i}
        rows += _sup_rows(rep, extra)
    res = {"reports": [_sup_summary(r) for r in reports]}
    verdicts = {"certified": all(r.certified for r in reports),
                "finite": all(r.finite for r in reports)}
    if which == "convolution":
        verdicts["stable"] = bool(reports[0].notes["stable"])
    if which == "I":
        scaled = [r.notes["scaled_sup"] for r in reports]
        res["scaled_sups"] = scaled
        if len(scaled) > 1:
            drift = max(abs(b / a - 1) for a, b in zip(scaled, scaled[1:]))
            res["drift"] = drift
            verdicts["stable"] = drift < 0.5
    return res, verdicts, rows


def _ratio_stats(per_N):
    stats = []
    for N, rs in per_N:
        r = np.array(rs)
        stats.append({"N": N, "max": float(r.max()), "median": float(np.median(r)),
                      "max_over_median": float(r.max() / np.median(r))})
    maxes = [s["max"] for s in stats]
    drift = max((abs(b / a - 1) for a, b in zip(maxes, maxes[1:])), default=0.0)
    return stats, drift


def _run_bilinear(v, seed, workers):
    which = v["probe"]
    if which == "kpv-failure":
        d = probes.kpv_failure_probe(v["s"], v["b"], v["N_list"])
        rows = [{"N": N, "ratio": r} for N, r in zip(d["N"], d["ratios"])]
        return d, {"monotone_growth": d["monotone_growth"]}, rows
    task = _task_bilinear if which == "bilinear" else _task_kpv
    args = [(v, N, seed + i) for N in v["N_list"] for i in range(v["pairs"])]
    flat = _map(task, args, workers)
    per_N, rows, k = [], [], 0
    for N in v["N_list"]:
        rs = flat[k:k + v["pairs"]]
        k += v["pairs"]
        per_N.append((N, rs))
        rows += [{"N": N, "pair": i, "seed": seed + i, "ratio": r} for i, r in enumerate(rs)]
    stats, drift = _ratio_stats(per_N)
    res = {"stats": stats, "drift": drift}
    if which == "bilinear":
        res["hypotheses"] = region.bilinear_hypotheses(v["s0"], v["p"], v["s"])
        res["region"] = region.admissible_region(v["s0"], v["p"]).to_dict()
    verdicts = {"max_over_median_le_10": all(s["max_over_median"] <= 10 for s in stats),
                "stable": drift < 0.5}
    return res, verdicts, rows


def _run_region(v, seed, workers):
    specs, rows = [], []
    for s0 in v["s0"]:
        for p in v["p"]:
            r = region.admissible_region(s0, p)
            d = r.to_dict()
            d["inverse_p_window"] = region.inverse_p_window(s0)
            d["best_s_cap"] = region.best_s_cap(s0)
            if "s" in v:
                d["contains_s"] = r.contains(v["s"])
            specs.append(d)
            lo, hi = r.s_interval if r.s_interval else (math.nan, math.nan)
            rows.append({"s0": s0, "p": p, "admissible": r.admissible,
                         "s_lower": _finite(lo), "s_upper": _finite(hi)})
    return {"regions": specs}, {"admissible": [d["admissible"] for d in specs]}, rows


def _run_scaling(v, seed, workers):
    f = build_data(v["data"], v["N"], seed)
    rep = region.scaling_check(f, v["s0"], v["p"], v["lambdas"], v["norm"])
    rows = [{"lambda": l, "norm": n} for l, n in zip(rep.lambdas, rep.norms)]
    d = rep.to_dict()
    d["slope"] = _finite(d["slope"])
    return d, {"within_0.05": rep.within(0.05), "degenerate": rep.degenerate}, rows


RUNNERS = {"solve": _run_solve, "picard-smoothing": _run_smoothing, "supsum": _run_supsum,
           "bilinear": _run_bilinear, "region": _run_region, "scaling": _run_scaling}


# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    config: dict
    results: dict
    verdicts: dict
    rows: list
    meta: dict

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config,
                "results": self.results, "verdicts": self.verdicts, "meta": self.meta}

    def numerics(self) -> dict:
        """Everything but timing metadata; identical across reruns of one config."""
        return {"config": self.config, "results": self.results,
                "verdicts": self.verdicts, "rows": self.rows}


def default_workers() -> int:
    v = os.environ.get(WORKERS_ENV)
    if v is None:
        return 1
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {v!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {v!r}")
    return n


def _prepare_out(out) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".nlslab-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {str(path)!r} is not writable: {exc}") from None
    return path


def run(cfg: ExperimentConfig, out=None, workers: int | None = None,
        persist: bool = True) -> ExperimentReport:
    """Validate, compute, and (unless persist=False) write <name>.json and <name>.csv."""
    v = validate(cfg)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out_dir = None
    if persist:
        out_dir = _prepare_out(out or cfg.out or ".")
    t0 = time.perf_counter()
    results, verdicts, rows = RUNNERS[cfg.kind](v, cfg.seed, workers)
    wall = time.perf_counter() - t0
    meta = {"tool": "nlslab", "version": __version__, "wall_clock_s": wall,
            "input_hash": cfg.digest(), "workers": workers,
            "python": platform.python_version(), "numpy": np.__version__}
    rep = ExperimentReport(cfg.to_dict(), _jsonable(results), _jsonable(verdicts),
                           _jsonable(rows), meta)
    if persist:
        write_report(rep, out_dir, cfg.name)
    return rep


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _finite(x)
    return x


def write_report(rep: ExperimentReport, out_dir: Path, name: str):
    out_dir = Path(out_dir)
    jpath = out_dir / f"{name}.json"
    cpath = out_dir / f"{name}.csv"
    d = rep.to_dict()
    d["csv"] = cpath.name
    jpath.write_text(json.dumps(d, indent=2) + "\n")
    cols = []
    for row in rep.rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    with cpath.open("w", newline="") as fh:
        fh.write(f"# nlslab-csv schema={SCHEMA_VERSION} kind={rep.config['kind']}\n")
        w = csv.DictWriter(fh, fieldnames=cols, restval="")
        if cols:
            w.writeheader()
        for row in rep.rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return jpath, cpath


def read_csv(path):
    """Rows of a report CSV as dicts of strings (schema line skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
