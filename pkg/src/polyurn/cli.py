"""Command line entry point.

    polyurn simulate CONFIG [--seed N] [--out DIR] [--format csv|json] [--threads N]
    polyurn analyze CONFIG [--seed N] [--out DIR] [--format csv|json]
    polyurn validate CONFIG
    polyurn equilibria --d N [--format csv|json]

Exit codes: 0 success, 1 invalid config or usage, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import meanfield as mf
from . import reinforce as rf
from . import schedule as sc
from .harness import (ConfigError, analyze, load_config, resolve_output_dir, run_batch,
                      write_batch_outputs, write_flow_csv)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyurn", description="Reinforced time-dependent Polya urn simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a Monte Carlo batch")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--threads", type=int)

    p = sub.add_parser("analyze", help="equilibria, stability and mean-field flows")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("validate", help="class R and schedule condition diagnostics")
    p.add_argument("config")
    p.add_argument("--format", choices=["csv", "json"], default="json")

    p = sub.add_parser("equilibria", help="list the 2^d - 1 equilibria")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    fmt = args.format or cfg.output_format
    cfg.output_format = fmt
    report = run_batch(cfg, threads=args.threads, keep_trajectories=(fmt == "csv"))
    out_dir = resolve_output_dir(cfg, args.out)
    written = write_batch_outputs(report, out_dir, fmt)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    freqs = ", ".join(f"{v:.3f}" for v in report.dominance_frequency)
    print(f"replications={report.replications} steps={report.steps} dominated={report.dominated_fraction:.3f}"
          f" per-colour=[{freqs}]")
    if report.fixation_fraction is not None:
        print(f"fixated={report.fixation_fraction:.3f} onset={report.fixation_onset}")
    print(f"mean ||M_N||^2={report.martingale_mean:.6g} (bound {report.martingale_bound})")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _analyze(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    result = analyze(cfg)
    out_dir = resolve_output_dir(cfg, args.out)
    eq_path = out_dir / "equilibria.json"
    eq_path.write_text(result.equilibria_json())
    print(f"wrote {eq_path}")
    points = mf.equilibria(mf.MeanFieldModel(cfg.d, cfg.reinforcement, check=False))
    if args.format == "json":
        flow_path = out_dir / "flows.json"
        flow_path.write_text(json.dumps([{"t": tr.times.tolist(), "y": tr.ys.tolist(), "F": tr.F.tolist()}
                                         for tr in result.flows]) + "\n")
        print(f"wrote {flow_path}")
    else:
        flow_dir = out_dir / "flows"
        flow_dir.mkdir(exist_ok=True)
        for i, tr in enumerate(result.flows):
            write_flow_csv(flow_dir / f"flow_{i:03d}.csv", tr)
        print(f"wrote {len(result.flows)} flow files to {flow_dir}")
    for i, tr in enumerate(result.flows):
        eq, dist = mf.nearest_equilibrium(points, tr.final)
        print(f"flow {i:03d}: start={np.round(tr.ys[0], 4).tolist()} -> support {list(eq.support)}"
              f" (distance {dist:.2e}, t={tr.times[-1]:.2f})")
    for e in result.equilibria:
        st = e["stability"]
        print(f"equilibrium support={e['support']}: {st.get('classification', st.get('error'))}")
    return EXIT_OK


def _validate(args) -> int:
    cfg = load_config(args.config)
    class_r = rf.validate_class_r(cfg.reinforcement)
    cond = sc.check_conditions(cfg.schedule, cfg.schedule_horizon)
    out = {"class_r": class_r.to_dict(), "conditions": cond.to_dict()}
    if args.format == "json":
        print(json.dumps(out, indent=2))
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["check", "passed", "detail"])
        for k in ("cond_a", "cond_b", "cond_c"):
            c = getattr(class_r, k)
            w.writerow([k, "PASS" if c.passed else "FAIL", c.detail])
        for k, v in class_r.lemma_checks.items():
            w.writerow([f"lemma_{k}", "PASS" if v else "FAIL", ""])
        w.writerow(["schedule_i", cond.cond_i_verdict, cond.method])
        w.writerow(["schedule_ii", cond.cond_ii_verdict, cond.method])
    return EXIT_OK


def _equilibria(args) -> int:
    if args.d < 2:
        raise UsageError("polyurn equilibria: error: --d must be >= 2")
    model = mf.MeanFieldModel(args.d, rf.power(2.0), check=False)
    points = mf.equilibria(model)
    if args.format == "json":
        print(json.dumps([p.to_dict() for p in points], indent=2))
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["kind", "support"] + [f"y_{i + 1}" for i in range(args.d)])
        for p in points:
            w.writerow([p.kind, " ".join(str(i) for i in p.support)] + [repr(float(v)) for v in p.coordinates])
    return EXIT_OK


_COMMANDS = {"simulate": _simulate, "analyze": _analyze, "validate": _validate, "equilibria": _equilibria}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
