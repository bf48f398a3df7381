"""nlslab command line: run, plots, describe, list."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .experiments import ConfigError, describe, list_experiments, load_config, run
from .plots import emit_plots, main_warning_hook


def _cmd_run(args):
    cfg = load_config(args.config)
    rep = run(cfg, out=args.out, workers=args.workers)
    out = args.out or cfg.out or "."
    print(f"{cfg.kind}: wrote {out}/{cfg.name}.json and {out}/{cfg.name}.csv "
          f"({rep.meta['wall_clock_s']:.2f} s)")
    for key, val in rep.verdicts.items():
        print(f"  {key}: {val}")
    return 0


def _cmd_plots(args):
    paths = emit_plots(args.report, render=args.render)
    for p in paths:
        print(p)
    return 0


def _cmd_describe(args):
    print(describe(args.kind))
    return 0


def _cmd_list(args):
    for k in list_experiments():
        print(k)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlslab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config", help="JSON config file")
    p.add_argument("--out", help="output directory (default: config 'out' or .)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $NLSLAB_WORKERS or 1)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plots", help="write plot scripts for a report")
    p.add_argument("report", help="report JSON written by 'run'")
    p.add_argument("--render", action="store_true", help="also render PNGs (needs matplotlib)")
    p.set_defaults(func=_cmd_plots)

    p = sub.add_parser("describe", help="describe an experiment kind")
    p.add_argument("kind")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser("list", help="list experiment kinds")
    p.set_defaults(func=_cmd_list)
    return ap


def main(argv=None) -> int:
    main_warning_hook()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
