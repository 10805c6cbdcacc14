"""Command-line entry point.

Subcommands: synth-observer, run, compare, selftest. Exit codes: 0 success,
2 config error, 3 infeasible, 4 numerical failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as config_mod
from . import controller, harness, observer, selftest
from .errors import (
    InfeasibleProblem,
    InvalidConfig,
    InvariantViolation,
    MismatchedRuns,
    NumericalFailure,
    UnboundedProblem,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5


def _load_config(args) -> config_mod.ExperimentConfig:
    cfg = config_mod.load_config(args.config) if args.config else config_mod.ExperimentConfig()
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    return cfg.validate()


def _get_design(cfg: config_mod.ExperimentConfig, model):
    if cfg.design_file:
        design = config_mod.load_design(cfg.design_file)
        if design.L_obs.shape != (model.n_x, model.n_y):
            raise InvalidConfig(
                f"design gain shape {design.L_obs.shape} does not fit the model"
            )
        return design
    return observer.synthesize(model, cfg.observer_spec())


def _write_summary(path, trace: harness.SimTrace) -> None:
    lines = [
        f"mode = {trace.mode}",
        f"horizon = {trace.horizon}",
        f"rms_y = {harness.rms(trace.y):.17g}",
        f"max_abs_u = {float(np.abs(trace.u).max()):.17g}",
        "u0 = " + " ".join(f"{v:.17g}" for v in trace.u[0]),
        f"final_x_norm = {float(np.linalg.norm(trace.x_final)):.17g}",
        f"infeasible_steps = {trace.infeasible_steps}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_synth_observer(args) -> int:
    cfg = _load_config(args)
    model = cfg.load_model()
    design = observer.synthesize(model, cfg.observer_spec())
    os.makedirs(cfg.out_dir, exist_ok=True)
    out_path = os.path.join(cfg.out_dir, "observer_design.txt")
    config_mod.save_design(design, out_path)
    worst = min(
        float(np.linalg.eigvalsh(blk)[0])
        for blk in observer.decay_blocks(model, design.spec, design.L_obs, design.P_o)
    )
    print(f"observer design written to {out_path}")
    print("L_obs =", np.array2string(design.L_obs.ravel(), precision=6))
    print("P_o =\n" + np.array2string(design.P_o, precision=6))
    print(f"certified margin = {worst:.6e}")
    return EXIT_OK


def _run_once(cfg: config_mod.ExperimentConfig, runtime_checks: bool) -> harness.SimTrace:
    model = cfg.load_model()
    design = _get_design(cfg, model)
    return harness.run_closed_loop(
        model, design, cfg.controller_config(), cfg.signal(), cfg.x0, cfg.xhat0,
        runtime_checks=runtime_checks,
    )


def cmd_run(args) -> int:
    cfg = _load_config(args)
    trace = _run_once(cfg, not args.no_runtime_checks)
    os.makedirs(cfg.out_dir, exist_ok=True)
    trace_path = os.path.join(cfg.out_dir, "trace.csv")
    harness.export_csv(trace, trace_path)
    summary_path = os.path.join(cfg.out_dir, "summary.txt")
    _write_summary(summary_path, trace)
    print(f"trace written to {trace_path}")
    with open(summary_path, "r", encoding="ascii") as fh:
        print(fh.read(), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg_a = _load_config(args)
    if args.config_b:
        cfg_b = config_mod.load_config(args.config_b)
        if getattr(args, "out", None):
            cfg_b.out_dir = args.out
        cfg_b.validate()
    else:
        # Default A/B: the same experiment in both controller modes.
        import copy

        cfg_a.mode = controller.PROPOSED
        cfg_b = copy.deepcopy(cfg_a)
        cfg_b.mode = controller.BASELINE
    if cfg_a.model != cfg_b.model or cfg_a.signal_kind != cfg_b.signal_kind \
            or cfg_a.seed != cfg_b.seed or cfg_a.horizon != cfg_b.horizon:
        raise MismatchedRuns("compare requires identical model and signal")
    trace_a = _run_once(cfg_a, not args.no_runtime_checks)
    trace_b = _run_once(cfg_b, not args.no_runtime_checks)
    report = harness.compare_runs(trace_a, trace_b)
    os.makedirs(cfg_a.out_dir, exist_ok=True)
    harness.export_csv(trace_a, os.path.join(cfg_a.out_dir, "trace_a.csv"))
    harness.export_csv(trace_b, os.path.join(cfg_a.out_dir, "trace_b.csv"))
    report_path = os.path.join(cfg_a.out_dir, "compare.txt")
    with open(report_path, "w", encoding="ascii") as fh:
        fh.write(report.as_kv())
    print(report.as_text(), end="")
    print(f"report written to {report_path}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    failures = selftest.run_all()
    if failures:
        for f in failures:
            print("FAIL:", f)
        print(f"self-test: {len(failures)} failures")
        return EXIT_NUMERICAL
    print("self-test: all batteries passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmmpc",
        description="Output-feedback MPC for switched polytopic systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True):
        p.add_argument("--config", help="experiment config file (defaults reproduce the flagship run)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="switching-signal seed override")
        if with_mode:
            p.add_argument("--mode", choices=[controller.PROPOSED, controller.BASELINE])
        p.add_argument("--no-runtime-checks", action="store_true",
                       help="disable the per-step invariant battery")

    p = sub.add_parser("synth-observer", help="offline observer synthesis")
    common(p, with_mode=False)
    p.set_defaults(func=cmd_synth_observer)

    p = sub.add_parser("run", help="closed-loop run, trace CSV + summary")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="A/B comparison (proposed vs baseline by default)")
    common(p, with_mode=False)
    p.add_argument("--config-b", help="second config; defaults to the first with baseline mode")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("selftest", help="solver and matrix-utility batteries")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfig, MismatchedRuns) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailure, UnboundedProblem, InvariantViolation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
