"""Command-line interface: simulate bundles, score them, run the stats
pipeline, and export vote heat maps and per-prediction grades.

Exit codes: 0 success, 1 data error (malformed bundle, degenerate groups,
generation failure), 2 usage error (bad flags).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .actions import SquareId
from .board import BoardConfig
from .dataset import (
    ExperimentBundle,
    ParticipantModel,
    generate_synthetic_experiment,
    read_bundle,
    write_bundle,
)
from .errors import PredscoreError, ValidationError
from .metrics import DEFAULT_GRADE_SCALE, score_dataset
from .oracle import EXHAUSTIVE, EXHAUSTIVE_LIMIT, SAMPLED, AgentSpec, Mutation
from .rankoverlap import DEFAULT_PERSISTENCE
from .report import (
    RANK_SPACE,
    VALUE_SPACE,
    build_metrics_table,
    grade_distribution,
    participant_loss_sums,
    render_boxplot_csv,
    render_boxplot_svg,
    render_grade_distribution_csv,
    render_metrics_csv,
    render_metrics_markdown,
    render_vote_matrix_csv,
    render_vote_svg,
    vote_matrix,
)
from .stats import DEFAULT_ALPHA, run_pipeline

EPILOG = "exit codes: 0 success, 1 data error, 2 usage error"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.-]+", "_", text)


def _parse_behavior(text: str) -> ParticipantModel:
    if text == "best":
        return ParticipantModel.always_best()
    if text == "uniform":
        return ParticipantModel.uniform()
    try:
        probs = tuple(float(f) for f in text.split(","))
    except ValueError:
        raise ValidationError(
            f"--behavior must be 'best', 'uniform' or comma-separated weights, got {text!r}"
        ) from None
    return ParticipantModel(rank_probs=probs)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_formats(text: str, allowed: set[str]) -> set[str]:
    formats = {f for f in text.split(",") if f}
    unknown = formats - allowed
    if not formats or unknown:
        raise ValidationError(
            f"--format must be a comma subset of {sorted(allowed)}, got {text!r}"
        )
    return formats


def _usage_error(exc) -> int:
    print(f"usage error: {exc}", file=sys.stderr)
    return 2


def cmd_simulate(args) -> int:
    try:
        config = BoardConfig(m=args.m, n=args.n, k=args.k)
        treatments = [t for t in args.treatments.split(",") if t]
        if not treatments:
            raise ValidationError("--treatments must list at least one label")
        behavior = _parse_behavior(args.behavior)
        if args.participants < 1:
            raise ValidationError("--participants must be >= 1")
        if args.agents < 1:
            raise ValidationError("--agents must be >= 1")
        if args.decisions < 1:
            raise ValidationError("--decisions must be >= 1")
        if args.rollouts < 1:
            raise ValidationError("--rollouts must be >= 1")
        oracle_kind = args.oracle
        if oracle_kind == "auto":
            oracle_kind = EXHAUSTIVE if config.squares <= EXHAUSTIVE_LIMIT else SAMPLED
        agents = []
        for i in range(args.agents):
            mutation = None
            if args.mutation is not None:
                mutation = Mutation(seed=args.seed * 100_003 + i, magnitude=args.mutation)
            agents.append(
                AgentSpec(
                    oracle=oracle_kind,
                    rollouts=args.rollouts if oracle_kind == SAMPLED else None,
                    seed=args.seed * 1_009 + i if oracle_kind == SAMPLED else None,
                    depth_limit=args.depth_limit,
                    mutation=mutation,
                )
            )
    except ValidationError as exc:
        return _usage_error(exc)

    bundle = generate_synthetic_experiment(
        config=config,
        agents=agents,
        participants=args.participants,
        treatments=treatments,
        behavior=behavior,
        seed=args.seed,
        decisions_per_agent=args.decisions,
    )
    out = _out_dir(args)
    write_bundle(bundle, out)
    print(f"bundle written to {out}")
    print(
        f"actions={len(bundle.manifest.actions)} decisions={len(bundle.decisions)} "
        f"participants={args.participants} treatments={len(treatments)} "
        f"predictions={len(bundle.predictions)}"
    )
    return 0


def _load_bundle(args) -> ExperimentBundle:
    return read_bundle(args.bundle)


def cmd_metrics(args) -> int:
    try:
        formats = _parse_formats(args.format, {"csv", "markdown", "svg"})
        if not 0 < args.p < 1:
            raise ValidationError(f"--p must be in (0, 1), got {args.p}")
    except ValidationError as exc:
        return _usage_error(exc)
    bundle = _load_bundle(args)
    out = _out_dir(args)
    table = build_metrics_table(bundle, p=args.p)
    written = []
    if "csv" in formats:
        path = out / "metrics.csv"
        path.write_text(render_metrics_csv(table), encoding="utf-8")
        written.append(path)
    if "markdown" in formats:
        path = out / "metrics.md"
        path.write_text(render_metrics_markdown(table), encoding="utf-8")
        written.append(path)
    grades_path = out / "grades.csv"
    grades_path.write_text(
        render_grade_distribution_csv(grade_distribution(bundle)), encoding="utf-8"
    )
    written.append(grades_path)
    for space in (VALUE_SPACE, RANK_SPACE):
        groups = participant_loss_sums(bundle, space)
        path = out / f"boxplot_l{space[0]}.csv"
        path.write_text(render_boxplot_csv(groups), encoding="utf-8")
        written.append(path)
        if "svg" in formats:
            path = out / f"boxplot_l{space[0]}.svg"
            path.write_text(render_boxplot_svg(groups), encoding="utf-8")
            written.append(path)
    smallest = min(
        (len({s.participant_id for s in group}) for group in bundle.predictions_by_treatment().values()),
        default=0,
    )
    for path in written:
        print(f"wrote {path}")
    if smallest <= 1:
        print("notice: at least one treatment has a single participant; "
              "comparative statistics are omitted for such groups")
    return 0


def cmd_stats(args) -> int:
    if not 0 < args.alpha < 1:
        return _usage_error(f"--alpha must be in (0, 1), got {args.alpha}")
    bundle = _load_bundle(args)
    groups = participant_loss_sums(bundle, args.space)
    if len(groups) < 2:
        raise ValidationError("stats needs at least 2 treatments with predictions")
    result = run_pipeline(groups, alpha=args.alpha)
    labels = [g.label for g in groups] + [None]  # per-group gates, then levene
    gates_doc = []
    for label, gate in zip(labels, result.gate_results):
        gates_doc.append(
            {
                "test": gate.test,
                "group": label,
                "statistic": gate.statistic,
                "df": list(gate.df),
                "p_value": gate.p_value,
            }
        )
        target = f"group {label!r}" if label else "groups"
        print(f"gate {gate.test} on {target}: statistic={gate.statistic:.6g} p={gate.p_value:.4g}")
    for warning in result.warnings:
        print(f"warning: {warning}")
    comp = result.comparison
    df_text = ",".join(f"{v:g}" for v in comp.df)
    print(f"selected test: {result.test_used}")
    print(f"{comp.test}: statistic={comp.statistic:.6g} df=({df_text}) p={comp.p_value:.4g}")
    doc = {
        "space": args.space,
        "alpha": args.alpha,
        "groups": [{"label": g.label, "n": len(g.values)} for g in groups],
        "gates": gates_doc,
        "test_used": result.test_used,
        "comparison": {
            "test": comp.test,
            "statistic": comp.statistic,
            "df": list(comp.df),
            "p_value": comp.p_value,
        },
        "warnings": list(result.warnings),
    }
    out = _out_dir(args)
    path = out / f"stats_{args.space}.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return 0


def cmd_votes(args) -> int:
    try:
        formats = _parse_formats(args.format, {"csv", "svg"})
    except ValidationError as exc:
        return _usage_error(exc)
    bundle = _load_bundle(args)
    values = bundle.values_by_decision().get(args.decision)
    if values is None:
        raise ValidationError(f"unknown decision {args.decision!r}")
    chosen = SquareId.parse(values.chosen)
    out = _out_dir(args)
    if args.group_by == "treatment":
        selections = [(t, t) for t in sorted(bundle.treatments)]
    else:
        selections = [(None, "all")]
    for treatment, label in selections:
        grid = vote_matrix(bundle, args.decision, treatment)
        stem = f"votes_{_slug(args.decision)}_{_slug(label)}"
        path = out / f"{stem}.csv"
        path.write_text(render_vote_matrix_csv(grid, bundle.manifest.board.m), encoding="utf-8")
        print(f"wrote {path}")
        if "svg" in formats:
            path = out / f"{stem}.svg"
            path.write_text(render_vote_svg(grid, chosen), encoding="utf-8")
            print(f"wrote {path}")
    return 0


def cmd_grade(args) -> int:
    bundle = _load_bundle(args)
    predictions = sorted(bundle.predictions, key=lambda r: (r.participant_id, r.decision_id))
    samples = score_dataset(predictions, bundle.values_by_decision(), DEFAULT_GRADE_SCALE)
    lines = ["participant_id,treatment,decision_id,predicted,lv,lr,grade"]
    for rec, s in zip(predictions, samples):
        lines.append(
            f"{rec.participant_id},{rec.treatment},{rec.decision_id},{rec.predicted},"
            f"{s.lv!r},{s.lr},{s.grade}"
        )
    out = _out_dir(args)
    path = out / "samples.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predscore",
        description="Partial-credit scoring of predictions of an agent's actions",
        epilog=EPILOG,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic experiment bundle", epilog=EPILOG)
    sim.add_argument("--m", type=int, required=True, help="board columns")
    sim.add_argument("--n", type=int, required=True, help="board rows")
    sim.add_argument("--k", type=int, required=True, help="winning run length")
    sim.add_argument("--participants", type=int, required=True)
    sim.add_argument("--treatments", required=True, help="comma-separated labels")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--mutation", type=float, default=None, help="value-noise magnitude")
    sim.add_argument("--agents", type=int, default=1, help="number of agents to play")
    sim.add_argument("--decisions", type=int, default=4, help="decisions recorded per agent")
    sim.add_argument(
        "--oracle", choices=["auto", EXHAUSTIVE, SAMPLED], default="auto",
        help="value oracle backend (auto: exhaustive on tiny boards)",
    )
    sim.add_argument("--rollouts", type=int, default=200, help="rollouts per square (sampled)")
    sim.add_argument("--depth-limit", type=int, default=None, help="rollout depth limit in plies")
    sim.add_argument(
        "--behavior", default="0.5,0.2,0.1,0.08,0.07,0.05",
        help="'best', 'uniform', or comma-separated rank weights",
    )
    sim.add_argument("--out-dir", default="bundle")
    sim.set_defaults(func=cmd_simulate)

    met = sub.add_parser("metrics", help="per-treatment metric tables", epilog=EPILOG)
    met.add_argument("--bundle", required=True)
    met.add_argument("--out-dir", default="report")
    met.add_argument("--format", default="csv", help="comma subset of csv,markdown,svg")
    met.add_argument("--p", type=float, default=DEFAULT_PERSISTENCE, help="overlap persistence")
    met.set_defaults(func=cmd_metrics)

    sta = sub.add_parser("stats", help="gated treatment comparison", epilog=EPILOG)
    sta.add_argument("--bundle", required=True)
    sta.add_argument("--out-dir", default="report")
    sta.add_argument("--space", choices=[VALUE_SPACE, RANK_SPACE], required=True,
                     help="sum each participant's loss in this space")
    sta.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="gate threshold")
    sta.set_defaults(func=cmd_stats)

    vot = sub.add_parser("votes", help="vote heat maps for one decision", epilog=EPILOG)
    vot.add_argument("--bundle", required=True)
    vot.add_argument("--out-dir", default="report")
    vot.add_argument("--decision", required=True)
    vot.add_argument("--group-by", choices=["all", "treatment"], default="all")
    vot.add_argument("--format", default="csv", help="comma subset of csv,svg")
    vot.set_defaults(func=cmd_votes)

    gra = sub.add_parser("grade", help="per-prediction scores as CSV", epilog=EPILOG)
    gra.add_argument("--bundle", required=True)
    gra.add_argument("--out-dir", default="report")
    gra.set_defaults(func=cmd_grade)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PredscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
