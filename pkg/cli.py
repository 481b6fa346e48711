"""
Command-line interface for the deficiency toolkit.

Commands: deficiency, blackwell, pid, riskgap, ib-curve, db-curve, estimate, runs.
Reports go to standard output (table by default, --json or --csv on request),
diagnostics to standard error. Exit status: 0 success, 2 invalid input,
3 degenerate result (infinite values in the report).
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

import config
from curves import (
    BottleneckConfig,
    Schedule,
    db_curve,
    db_schedule_comparison,
    default_beta_grid,
    ib_curve,
)
from core_prob import Joint3, ValidationError, joint_from_prior_channel, mutual_information
from decision import restricted_bayes_risk, verify_risk_gap_identity
from estimators import REFERENCES, EstimatorConfig, encoder_marginal, paired_objective_report
from instance_io import (
    curve_frame,
    has_infinite,
    instance_document,
    load_instance,
    to_csv,
    to_json,
    to_table,
)
from pid import classical_decomposition, compare_decompositions, deficiency_decomposition
from projection import blackwell_sufficient, deficiency

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DEGENERATE = 3


@dataclass
class CommandResult:
    summary: dict
    table: str
    csv: Optional[str] = None
    curve_points: List[dict] = field(default_factory=list)
    degenerate: bool = False


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def parse_float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("every entry must be a positive integer")
    return values


def parse_beta_grid(text):
    """Either "b1,b2,..." or "log:min:max:count" """
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise argparse.ArgumentTypeError("log grid must look like log:min:max:count")
        try:
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid log grid {text!r}")
        if lo <= 0 or hi < lo or count < 1:
            raise argparse.ArgumentTypeError(f"invalid log grid {text!r}")
        return list(default_beta_grid(count, lo, hi))
    values = parse_float_list(text)
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("beta values must be nonnegative")
    return values


def parse_schedule(text):
    try:
        return Schedule.parse(text)
    except ValidationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _require(args, *names):
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) is None]
    if missing:
        raise ValidationError(f"missing required input {', '.join(missing)} (or pass --joint)")


def _channel_triple(args):
    """(π, κ, d) from --joint, or from --pi/--kappa/--d"""
    if args.joint is not None:
        P = load_instance(args.joint, ["joint3"])
        return P.marginal("X"), P.channel_y_given("X"), P.channel_y_given("Z", restrict_support=True)
    _require(args, "pi", "kappa", "d")
    return (
        load_instance(args.pi, ["prob_vector"]),
        load_instance(args.kappa, ["channel"]),
        load_instance(args.d, ["channel"]),
    )


def _joint_xy(args):
    """P_XY from a joint2/joint3 --joint file, or from --pi and --kappa"""
    if args.joint is not None:
        instance = load_instance(args.joint, ["joint2", "joint3"])
        if isinstance(instance, Joint3):
            return instance.pair("X", "Y")
        if set(instance.axes) != {"X", "Y"}:
            raise ValidationError(f"{args.joint}: joint2 axes must be X and Y, got {instance.axes}")
        return instance if instance.axes == ("X", "Y") else instance.transpose()
    _require(args, "pi", "kappa")
    pi = load_instance(args.pi, ["prob_vector"])
    kappa = load_instance(args.kappa, ["channel"])
    return joint_from_prior_channel(pi, kappa)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_deficiency(args) -> CommandResult:
    pi, kappa, d = _channel_triple(args)
    result = deficiency(d, kappa, pi, tol=args.tol, max_iter=args.max_iter)
    per_input = [
        {
            "x": kappa.input_labels[item.x],
            "divergence_bits": item.divergence,
            "projection": [float(v) for v in item.projection.probs],
        }
        for item in result.per_input
    ]
    summary = {
        "deficiency_bits": result.value,
        "per_input": per_input,
        "encoder": instance_document(result.encoder),
    }
    frame = pd.DataFrame(
        [[kappa.input_labels[item.x], pi.probs[item.x], item.divergence] for item in result.per_input],
        columns=["x", "pi", "divergence_bits"],
    )
    table = to_table(frame) + f"\n\ndeficiency_bits {result.value:.10g}"
    return CommandResult(summary, table, csv=to_csv(frame), degenerate=not result.is_finite)


def cmd_blackwell(args) -> CommandResult:
    if args.joint is not None:
        _, kappa, d = _channel_triple(args)
    else:
        _require(args, "kappa", "d")
        kappa = load_instance(args.kappa, ["channel"])
        d = load_instance(args.d, ["channel"])
    report = blackwell_sufficient(d, kappa, tol=args.tol)
    summary = {
        "sufficient": report.sufficient,
        "max_residual": report.max_residual,
        "residuals": [float(v) for v in report.residuals],
    }
    if args.witness and report.witness_encoder is not None:
        summary["witness_encoder"] = instance_document(report.witness_encoder)
    frame = pd.DataFrame({"x": list(kappa.input_labels), "l1_residual": report.residuals})
    table = to_table(frame) + f"\n\nsufficient {report.sufficient}\nmax_residual {report.max_residual:.10g}"
    if "witness_encoder" in summary:
        witness = pd.DataFrame(report.witness_encoder.rows, columns=[f"z={z}" for z in d.input_labels])
        witness.insert(0, "x", list(kappa.input_labels))
        table += "\n\nwitness encoder\n" + to_table(witness)
    return CommandResult(summary, table, csv=to_csv(frame))


def cmd_pid(args) -> CommandResult:
    P = load_instance(args.joint, ["joint3"])
    rows = []
    summary = {
        "i_yx_bits": mutual_information(P.pair("Y", "X")),
        "i_yz_bits": mutual_information(P.pair("Y", "Z")),
    }
    degenerate = False
    if args.kind == "both":
        comparison = compare_decompositions(
            P, tol=args.equality_tol, ui_tol=args.tol, ui_max_iter=args.max_iter, step_rule=args.step_rule,
            projection_tol=args.projection_tol, projection_max_iter=args.projection_max_iter,
        )
        decompositions = [comparison.classical, comparison.deficiency_induced]
        summary["slacks"] = comparison.slacks
        summary["near_equality"] = comparison.near_equality
        summary["holds"] = comparison.holds
    elif args.kind == "classical":
        decompositions = [classical_decomposition(P, tol=args.tol, max_iter=args.max_iter, step_rule=args.step_rule)]
    else:
        decompositions = [deficiency_decomposition(P, tol=args.projection_tol, max_iter=args.projection_max_iter)]
    for terms in decompositions:
        summary[terms.kind] = terms.values()
        rows.append({"kind": terms.kind, **terms.values()})
        degenerate = degenerate or terms.degenerate
    frame = pd.DataFrame(rows, columns=["kind", "ui_x", "ui_z", "si", "ci"])
    if args.kind == "both":
        for name, slack in comparison.slacks.items():
            frame[f"slack_{name}"] = [np.nan, slack]
    table = to_table(frame)
    return CommandResult(summary, table, csv=to_csv(frame), degenerate=degenerate)


def cmd_riskgap(args) -> CommandResult:
    pi, kappa, d = _channel_triple(args)
    report = restricted_bayes_risk(pi, kappa, d, tol=args.tol)
    check = verify_risk_gap_identity(pi, kappa, d, tol=args.identity_tol, projection_tol=args.tol)
    summary = {
        "bayes_risk_bits": report.bayes_risk,
        "restricted_risk_bits": report.restricted_risk,
        "gap_bits": report.gap,
        "deficiency_bits": check.deficiency,
        "abs_difference": check.abs_difference,
        "consistent": check.consistent,
        "per_input_acts": [[float(v) for v in act.probs] for act in report.per_input_acts],
    }
    frame = pd.DataFrame([{
        "bayes_risk_bits": report.bayes_risk,
        "restricted_risk_bits": report.restricted_risk,
        "gap_bits": report.gap,
        "deficiency_bits": check.deficiency,
        "abs_difference": check.abs_difference,
    }])
    degenerate = has_infinite([report.restricted_risk, check.deficiency])
    return CommandResult(summary, to_table(frame), csv=to_csv(frame), degenerate=degenerate)


def _bottleneck_config(args, z_default):
    return BottleneckConfig(
        beta=0.0,
        z_cardinality=args.z_card or z_default,
        schedule=getattr(args, "schedule", None) or Schedule(),
        max_outer_iter=args.max_iter,
        tol=args.tol,
        restarts=args.restarts,
        seed=args.seed,
    )


def _curve_result(points, kind, extra=None) -> CommandResult:
    frame = curve_frame(points)
    curve = [
        {
            "kind": kind,
            "schedule": p.schedule or None,
            "beta": p.beta,
            "rate": p.rate,
            "sufficiency": p.sufficiency,
            "objective": p.objective,
            "converged": p.converged,
        }
        for p in points
    ]
    summary = {"points": [{k: v for k, v in c.items() if k != "kind"} for c in curve]}
    table = to_table(frame)
    if extra:
        summary["comparison"] = {}
        for name, other in extra.items():
            summary["comparison"][name] = [
                {"beta": p.beta, "rate": p.rate, "sufficiency": p.sufficiency, "objective": p.objective}
                for p in other
            ]
            table += f"\n\nschedule {name}\n" + to_table(curve_frame(other))
            curve += [
                {"kind": kind, "schedule": name, "beta": p.beta, "rate": p.rate,
                 "sufficiency": p.sufficiency, "objective": p.objective, "converged": p.converged}
                for p in other
            ]
    return CommandResult(summary, table, csv=to_csv(frame), curve_points=curve)


def cmd_ib_curve(args) -> CommandResult:
    joint = _joint_xy(args)
    cfg = _bottleneck_config(args, joint.p.shape[0])
    points = ib_curve(joint, args.beta_grid or default_beta_grid(), cfg)
    return _curve_result(points, "ib")


def cmd_db_curve(args) -> CommandResult:
    joint = _joint_xy(args)
    pi, kappa = joint.marginal("X"), joint.conditional()
    cfg = _bottleneck_config(args, joint.p.shape[0])
    grid = args.beta_grid or default_beta_grid()
    points = db_curve(pi, kappa, grid, cfg)
    extra = None
    if args.compare:
        others = [s for s in args.compare if str(s) != str(cfg.schedule)]
        extra = db_schedule_comparison(pi, kappa, grid, cfg, others) if others else None
    return _curve_result(points, "db", extra)


def cmd_estimate(args) -> CommandResult:
    data = load_instance(args.data, ["samples"])
    e = load_instance(args.encoder, ["channel"])
    d = load_instance(args.decoder, ["channel"])
    reference = encoder_marginal(data, e) if args.reference == "marginal" else None
    cfg = EstimatorConfig(
        m_samples=1, batch=args.batch, beta=args.beta, reference=reference, seed=args.seed, n_batches=args.batches
    )
    frame = paired_objective_report(data, e, d, cfg, args.m_grid)
    summary = {"rows": frame.to_dict(orient="records"), "reference": args.reference}
    degenerate = not np.isfinite(frame[["mean_vdb", "mean_vib"]].to_numpy()).all()
    return CommandResult(summary, to_table(frame), csv=to_csv(frame), degenerate=degenerate)


def cmd_runs(args):
    from data_manager import RunArchive
    from timezone_utils import format_datetime

    runs = RunArchive(args.archive).list_runs(args.command_filter, args.limit)
    frame = pd.DataFrame(
        [[r["id"], format_datetime(r["created_at"]), r["command"], r["exit_status"], r["n_curve_points"]]
         for r in runs],
        columns=["id", "created", "command", "exit_status", "curve_points"],
    )
    print(to_table(frame) if runs else "no recorded runs")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _output_flags(parser, csv=True):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--json", action="store_true", help="emit a JSON report")
    if csv:
        group.add_argument("--csv", action="store_true", help="emit CSV")
    parser.add_argument("--record", action="store_true", help="store this run in the archive")
    parser.add_argument("--archive", default=None, help="archive database URL (default from settings)")


def _channel_flags(parser, with_pi=True):
    parser.add_argument("--joint", help="joint3 instance; derives π = P_X, κ = P_Y|X, d = P_Y|Z")
    if with_pi:
        parser.add_argument("--pi", help="prob_vector instance for π")
    parser.add_argument("--kappa", help="channel instance for κ (X → Y)")
    parser.add_argument("--d", help="channel instance for the decoder d (Z → Y)")


def _curve_flags(parser):
    parser.add_argument("--joint", help="joint2 (X, Y) or joint3 instance")
    parser.add_argument("--pi", help="prob_vector instance for P_X")
    parser.add_argument("--kappa", help="channel instance for P_Y|X")
    parser.add_argument("--beta-grid", type=parse_beta_grid, default=None,
                        help="comma-separated betas or log:min:max:count (default from settings)")
    parser.add_argument("--z-card", type=int, default=None, help="size of Z (default |X|)")
    parser.add_argument("--restarts", type=int, default=config.BOTTLENECK_RESTARTS)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-iter", type=int, default=config.BOTTLENECK_MAX_OUTER_ITER)
    parser.add_argument("--tol", type=float, default=config.BOTTLENECK_TOL)
    parser.add_argument("--out", help="also write the curve as CSV to this file")


def build_parser():
    parser = argparse.ArgumentParser(prog="deficiency", description="Channel deficiency and information decomposition toolkit")
    parser.add_argument("--log-level", default=None, help="logging level for diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deficiency", help="deficiency of a decoder d with respect to κ under π")
    _channel_flags(p)
    p.add_argument("--tol", type=float, default=config.PROJECTION_TOL)
    p.add_argument("--max-iter", type=int, default=config.PROJECTION_MAX_ITER)
    _output_flags(p)
    p.set_defaults(handler=cmd_deficiency)

    p = sub.add_parser("blackwell", help="is d input Blackwell sufficient for κ?")
    _channel_flags(p, with_pi=False)
    p.add_argument("--tol", type=float, default=config.BLACKWELL_TOL)
    p.add_argument("--witness", action="store_true", help="emit the witness encoder when sufficient")
    _output_flags(p)
    p.set_defaults(handler=cmd_blackwell)

    p = sub.add_parser("pid", help="classical and deficiency-induced decompositions of a joint3")
    p.add_argument("joint", help="joint3 instance file")
    p.add_argument("--kind", choices=["classical", "deficiency", "both"], default="both")
    p.add_argument("--tol", type=float, default=config.UI_TOL, help="Frank-Wolfe gap tolerance")
    p.add_argument("--max-iter", type=int, default=config.UI_MAX_ITER)
    p.add_argument("--step-rule", choices=["pairwise", "open_loop"], default=config.UI_STEP_RULE)
    p.add_argument("--projection-tol", type=float, default=config.PROJECTION_TOL, help="EM tolerance for the deficiencies")
    p.add_argument("--projection-max-iter", type=int, default=config.PROJECTION_MAX_ITER)
    p.add_argument("--equality-tol", type=float, default=1e-6, help="slack below which an inequality is tight")
    _output_flags(p)
    p.set_defaults(handler=cmd_pid)

    p = sub.add_parser("riskgap", help="log-loss risk gap versus deficiency")
    _channel_flags(p)
    p.add_argument("--tol", type=float, default=config.PROJECTION_TOL)
    p.add_argument("--identity-tol", type=float, default=1e-6)
    _output_flags(p)
    p.set_defaults(handler=cmd_riskgap)

    p = sub.add_parser("ib-curve", help="information bottleneck curve")
    _curve_flags(p)
    _output_flags(p)
    p.set_defaults(handler=cmd_ib_curve)

    p = sub.add_parser("db-curve", help="deficiency bottleneck curve")
    _curve_flags(p)
    p.add_argument("--schedule", type=parse_schedule, default=Schedule(), help="oneshot or seq:k")
    p.add_argument("--compare", type=lambda s: [parse_schedule(v) for v in s.split(",")], default=None,
                   help="comma-separated schedules to trace alongside, e.g. oneshot,seq:5")
    _output_flags(p)
    p.set_defaults(handler=cmd_db_curve)

    p = sub.add_parser("estimate", help="paired Monte Carlo VDB / VIB estimates")
    p.add_argument("--data", required=True, help="samples instance of (x, y) pairs")
    p.add_argument("--encoder", required=True, help="channel instance e (X → Z)")
    p.add_argument("--decoder", required=True, help="channel instance d (Z → Y)")
    p.add_argument("--m-grid", type=parse_int_list, default=[1, 3, 6, 12])
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--batches", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", choices=REFERENCES, default="uniform")
    _output_flags(p)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("runs", help="list archived runs")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--command", dest="command_filter", default=None)
    p.add_argument("--archive", default=None)
    p.set_defaults(handler=None)

    return parser


def _record(args, argv, status, summary, curve_points):
    try:
        from data_manager import RunArchive

        RunArchive(args.archive).record_run(args.command, argv, status, summary, curve_points)
    except Exception as e:
        logger.warning("Could not record run in the archive: %s", e)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    config.setup_logging(args.log_level)

    if args.command == "runs":
        return cmd_runs(args)

    try:
        result = args.handler(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    status = EXIT_DEGENERATE if result.degenerate or has_infinite(result.summary) else EXIT_OK
    if args.json:
        print(to_json(result.summary))
    elif getattr(args, "csv", False) and result.csv is not None:
        sys.stdout.write(result.csv)
    else:
        print(result.table)

    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(result.csv)

    if args.record:
        _record(args, argv, status, json.loads(to_json(result.summary)), result.curve_points)
    return status


if __name__ == "__main__":
    sys.exit(main())
