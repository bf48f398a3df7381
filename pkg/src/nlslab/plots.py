"""Plot scripts for experiment reports.

emit_plots writes one small matplotlib script per figure next to the
report.  Each script reads the report's CSV by relative path, so the
scripts are plain data and the tool itself needs no plotting library.
``render=True`` runs the scripts in-process (headless backend) to
produce PNGs; matplotlib is imported only then.
"""

from __future__ import annotations

import json
import runpy
import sys
import warnings
from pathlib import Path

from .experiments import read_csv

_PREAMBLE = '''"""{title}"""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(HERE, {csv!r}), newline="") as fh:
    rows = list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))
'''

_SAVE = '''
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png!r}), dpi=120)
'''


def _script(title, csv_name, png, body):
    return _PREAMBLE.format(title=title, csv=csv_name) + body + _SAVE.format(png=png)


def _ratio_vs_N(report, csv_name, stem):
    kind = report["config"]["kind"]
    if kind == "picard-smoothing":
        body = '''
N = [int(r["N"]) for r in rows]
ratio = [float(r["ratio"]) for r in rows]
fig, ax = plt.subplots()
ax.loglog(N, ratio, "o-", label="||u1|| / ||f||^2")
ax.set_xlabel("N")
ax.set_ylabel("ratio")
ax.legend()
'''
    else:
        body = '''
by_N = {}
for r in rows:
    by_N.setdefault(int(r["N"]), []).append(float(r["ratio"]))
N = sorted(by_N)
fig, ax = plt.subplots()
for n in N:
    ax.plot([n] * len(by_N[n]), by_N[n], ".", color="0.6")
ax.plot(N, [max(by_N[n]) for n in N], "o-", label="max")
ax.plot(N, [sorted(by_N[n])[len(by_N[n]) // 2] for n in N], "s-", label="median")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("N")
ax.set_ylabel("ratio")
ax.legend()
'''
    return [(f"{stem}_ratio_vs_N.py", _script(f"{kind}: ratio against N", csv_name,
                                              f"{stem}_ratio_vs_N.png", body))]


def _residuals(report, csv_name, stem):
    body = '''
it = [int(r["iteration"]) for r in rows]
res = [float(r["residual"]) for r in rows]
fig, ax = plt.subplots()
ax.semilogy(it, res, "o-")
ax.set_xlabel("iteration")
ax.set_ylabel("residual ||v_(k+1) - v_k||")
'''
    return [(f"{stem}_residuals.py", _script("solve: residual decay", csv_name,
                                             f"{stem}_residuals.png", body))]


def _supsum(report, csv_name, stem, rows):
    cols = set(rows[0]) if rows else set()
    if {"y", "z"} <= cols:
        body = '''
fig, ax = plt.subplots()
sc = ax.scatter([float(r["y"]) for r in rows], [float(r["z"]) for r in rows],
                c=[float(r["value"]) for r in rows], cmap="viridis", s=18)
fig.colorbar(sc, ax=ax, label="sum")
ax.set_xlabel("y")
ax.set_ylabel("z")
'''
        return [(f"{stem}_heatmap.py", _script("supsum: sum over (y, z)", csv_name,
                                               f"{stem}_heatmap.png", body))]
    if {"k", "tau"} <= cols:
        body = '''
fig, ax = plt.subplots()
sc = ax.scatter([float(r["k"]) for r in rows], [float(r["tau"]) for r in rows],
                c=[float(r.get("value") or r.get("ratio")) for r in rows], cmap="viridis", s=18)
fig.colorbar(sc, ax=ax, label="value")
ax.set_xlabel("k")
ax.set_ylabel("tau")
'''
        return [(f"{stem}_heatmap.py", _script("supsum: values over (k, tau)", csv_name,
                                               f"{stem}_heatmap.png", body))]
    if {"p", "tau"} <= cols:
        body = '''
fig, ax = plt.subplots()
sc = ax.scatter([float(r["p"]) for r in rows], [float(r["tau"]) for r in rows],
                c=[float(r["ratio"]) for r in rows], cmap="viridis", s=6)
fig.colorbar(sc, ax=ax, label="ratio")
ax.set_xlabel("p")
ax.set_ylabel("tau")
'''
        return [(f"{stem}_heatmap.py", _script("supsum: c_p ratio over (p, tau)", csv_name,
                                               f"{stem}_heatmap.png", body))]
    x = next((c for c in ("y", "A", "m") if c in cols), None)
    if x is None:
        return []
    body = f'''
series = {{}}
for r in rows:
    series.setdefault(r.get("report", "0"), []).append((float(r[{x!r}]), float(r["value"])))
fig, ax = plt.subplots()
for key, pts in sorted(series.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], ".-", label="report " + key)
ax.set_xlabel({x!r})
ax.set_ylabel("value")
ax.legend()
'''
    return [(f"{stem}_sup.py", _script("supsum: value along the grid", csv_name,
                                       f"{stem}_sup.png", body))]


def _scaling(report, csv_name, stem):
    body = '''
lam = [float(r["lambda"]) for r in rows]
nrm = [float(r["norm"]) for r in rows]
fig, ax = plt.subplots()
ax.loglog(lam, nrm, "o-")
ax.set_xlabel("lambda")
ax.set_ylabel("||f_lambda||")
'''
    return [(f"{stem}_scaling.py", _script("scaling: norm against lambda", csv_name,
                                           f"{stem}_scaling.png", body))]


def emit_plots(report_path, render: bool = False) -> list[Path]:
    """Write plot scripts for a report; returns their paths (PNG paths too if rendered)."""
    report_path = Path(report_path)
    if not report_path.is_file():
        raise FileNotFoundError(f"no report at {report_path}")
    report = json.loads(report_path.read_text())
    kind = report.get("config", {}).get("kind")
    csv_name = report.get("csv", report_path.with_suffix(".csv").name)
    csv_path = report_path.parent / csv_name
    rows = read_csv(csv_path) if csv_path.is_file() else []
    if not rows:
        warnings.warn(f"report {report_path} has no data points; no plot scripts written")
        return []
    stem = report_path.stem
    if kind in ("picard-smoothing", "bilinear"):
        scripts = _ratio_vs_N(report, csv_name, stem)
    elif kind == "solve":
        scripts = _residuals(report, csv_name, stem)
    elif kind == "supsum":
        scripts = _supsum(report, csv_name, stem, rows)
    elif kind == "scaling":
        scripts = _scaling(report, csv_name, stem)
    else:
        scripts = []
    if not scripts:
        warnings.warn(f"no figures defined for a {kind!r} report")
    paths = []
    for name, text in scripts:
        p = report_path.parent / name
        p.write_text(text)
        paths.append(p)
    if render:
        paths += render_scripts(paths)
    return paths


def render_scripts(scripts) -> list[Path]:
    """Run plot scripts with the Agg backend; needs matplotlib."""
    try:
        import matplotlib
    except ImportError:
        raise RuntimeError("rendering needs matplotlib (pip install matplotlib)") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    out = []
    for s in scripts:
        runpy.run_path(str(s), run_name="__main__")
        plt.close("all")
        out.append(Path(s).with_suffix(".png"))
    return out


def main_warning_hook():
    """Route warnings to stderr as one line each (used by the CLI)."""
    def show(message, category, filename, lineno, file=None, line=None):
        print(f"warning: {message}", file=sys.stderr)
    warnings.showwarning = show
