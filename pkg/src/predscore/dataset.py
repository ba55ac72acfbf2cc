"""Bundle file formats, validation, and synthetic experiment generation.

An experiment bundle is a directory of three files:

  manifest.json     experiment id, domain tag, action list, treatments
                    (and ids of decisions still awaiting value data)
  values.csv        decision_id,action,value,chosen[,win,loss,draw]
                    one row per (decision, action); exactly one row per
                    decision has chosen=1; the outcome columns are optional
  predictions.csv   participant_id,treatment,decision_id,predicted_action

All numbers serialize as shortest round-trip decimals, and every writer is
deterministic, so identical bundles produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .actions import QUADRANTS, SquareId, canonical_key
from .board import ONGOING, BoardConfig, game_status, new_game, apply_move
from .errors import ParseError, ValidationError
from .metrics import PredictionRecord
from .oracle import AgentSpec, value_oracle
from .values import DecisionValues, OutcomeTriple

MNK = "mnk"
FOUR_TOWERS = "four_towers"
CUSTOM = "custom"

VALUES_HEADER = ["decision_id", "action", "value", "chosen"]
OUTCOME_COLUMNS = ["win", "loss", "draw"]
PREDICTIONS_HEADER = ["participant_id", "treatment", "decision_id", "predicted_action"]

TRIPLE_CSV_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ActionManifest:
    """Names the actions of one experiment and tags its domain."""

    experiment_id: str
    domain: str
    actions: tuple[tuple[str, str], ...]  # (action id, display name)
    board: BoardConfig | None = None

    def __post_init__(self):
        if self.domain not in (MNK, FOUR_TOWERS, CUSTOM):
            raise ValidationError(f"unknown domain tag {self.domain!r}")
        if not self.actions:
            raise ValidationError("manifest needs at least one action")
        ids = [a for a, _ in self.actions]
        names = [n for _, n in self.actions]
        if len(set(ids)) != len(ids):
            raise ValidationError("manifest action ids must be unique")
        if len(set(names)) != len(names):
            raise ValidationError("manifest action names must be unique")
        if self.domain == MNK:
            if self.board is None:
                raise ValidationError("mnk manifest requires its board config")
            expected = [sq.text for sq in self.board.all_squares()]
            if ids != expected:
                raise ValidationError(
                    "mnk manifest must list every board square in canonical order"
                )

    @property
    def action_ids(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.actions)


def make_mnk_manifest(config: BoardConfig, experiment_id: str) -> ActionManifest:
    squares = [sq.text for sq in config.all_squares()]
    return ActionManifest(
        experiment_id=experiment_id,
        domain=MNK,
        actions=tuple((s, s) for s in squares),
        board=config,
    )


@dataclass(frozen=True)
class ExperimentBundle:
    """Everything one analysis needs: values, predictions, and naming."""

    manifest: ActionManifest
    decisions: tuple[DecisionValues, ...]
    predictions: tuple[PredictionRecord, ...]
    treatments: tuple[str, ...]
    # Decisions that exist in the design but whose value tables are not yet
    # supplied: (decision_id, action ids).
    pending_decisions: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        known_actions = set(self.manifest.action_ids)
        decision_ids = [dv.decision_id for dv in self.decisions]
        all_ids = decision_ids + [did for did, _ in self.pending_decisions]
        if len(set(all_ids)) != len(all_ids):
            raise ValidationError("duplicate decision ids in bundle")
        for dv in self.decisions:
            stray = set(dv.entries) - known_actions
            if stray:
                raise ValidationError(
                    f"decision {dv.decision_id!r} values actions missing from the manifest: "
                    f"{sorted(stray)}"
                )
        valued = set(decision_ids)
        treatment_set = set(self.treatments)
        for rec in self.predictions:
            if rec.decision_id not in valued:
                raise ValidationError(
                    f"prediction by {rec.participant_id!r} references unknown decision "
                    f"{rec.decision_id!r}"
                )
            if rec.predicted not in known_actions:
                raise ValidationError(
                    f"prediction by {rec.participant_id!r} references unknown action "
                    f"{rec.predicted!r}"
                )
            if rec.treatment not in treatment_set:
                raise ValidationError(
                    f"prediction by {rec.participant_id!r} has unlisted treatment "
                    f"{rec.treatment!r}"
                )

    def values_by_decision(self) -> dict[str, DecisionValues]:
        return {dv.decision_id: dv for dv in self.decisions}

    def predictions_by_treatment(self) -> dict[str, list[PredictionRecord]]:
        groups: dict[str, list[PredictionRecord]] = {t: [] for t in self.treatments}
        for rec in self.predictions:
            groups[rec.treatment].append(rec)
        return groups

    @property
    def incomplete_decision_ids(self) -> tuple[str, ...]:
        return tuple(did for did, _ in self.pending_decisions)


def _decode(data) -> str:
    if isinstance(data, str):
        return data.lstrip("﻿")
    try:
        return data.decode("utf-8-sig")  # tolerate a spreadsheet-added BOM
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None


def _float_field(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric {column} {text!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"{column} must be finite, got {text!r}", row=row, column=column)
    return value


def parse_values_csv(data) -> list[DecisionValues]:
    """Decode and validate values.csv; decisions come back in first-seen order."""
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("values.csv is empty", row=1)
    header = rows[0]
    if header == VALUES_HEADER:
        with_outcomes = False
    elif header == VALUES_HEADER + OUTCOME_COLUMNS:
        with_outcomes = True
    else:
        raise ParseError(
            f"unexpected values.csv header {header!r}", row=1, column="header"
        )
    width = len(header)

    order: list[str] = []
    entries: dict[str, dict[str, float]] = {}
    outcomes: dict[str, dict[str, OutcomeTriple]] = {}
    chosen: dict[str, str] = {}
    first_row: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", row=lineno)
        decision_id, action = row[0], row[1]
        if not decision_id or not action:
            raise ParseError("decision_id and action must be non-empty", row=lineno)
        if decision_id not in entries:
            order.append(decision_id)
            entries[decision_id] = {}
            outcomes[decision_id] = {}
            first_row[decision_id] = lineno
        if action in entries[decision_id]:
            raise ParseError(
                f"duplicate action {action!r} for decision {decision_id!r}",
                row=lineno,
                column="action",
            )
        entries[decision_id][action] = _float_field(row[2], lineno, "value")
        flag = row[3]
        if flag not in ("0", "1"):
            raise ParseError(f"chosen flag must be 0 or 1, got {flag!r}", row=lineno, column="chosen")
        if flag == "1":
            if decision_id in chosen:
                raise ParseError(
                    f"decision {decision_id!r} has more than one chosen action",
                    row=lineno,
                    column="chosen",
                )
            chosen[decision_id] = action
        if with_outcomes:
            triple_fields = row[4:7]
            filled = [f for f in triple_fields if f != ""]
            if not filled:
                continue
            if len(filled) != 3:
                raise ParseError(
                    "win/loss/draw must be given together or not at all",
                    row=lineno,
                    column="win",
                )
            win, loss, draw = (
                _float_field(f, lineno, col) for f, col in zip(triple_fields, OUTCOME_COLUMNS)
            )
            total = win + loss + draw
            if abs(total - 1.0) > TRIPLE_CSV_TOLERANCE:
                raise ParseError(
                    f"outcome triple sums to {total!r}, not 1", row=lineno, column="win"
                )
            if abs(total - 1.0) > 1e-9:
                win, loss, draw = win / total, loss / total, draw / total
            outcomes[decision_id][action] = OutcomeTriple(win, loss, draw)

    decisions = []
    for decision_id in order:
        if decision_id not in chosen:
            raise ParseError(
                f"decision {decision_id!r} has no chosen action",
                row=first_row[decision_id],
                column="chosen",
            )
        decisions.append(
            DecisionValues(
                decision_id=decision_id,
                entries=entries[decision_id],
                chosen=chosen[decision_id],
                outcomes=outcomes[decision_id] or None,
            )
        )
    return decisions


def parse_predictions_csv(data, manifest: ActionManifest, decision_ids) -> list[PredictionRecord]:
    """Decode and validate predictions.csv against the manifest and the set
    of decisions that actually have value tables."""
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("predictions.csv is empty", row=1)
    if rows[0] != PREDICTIONS_HEADER:
        raise ParseError(f"unexpected predictions.csv header {rows[0]!r}", row=1, column="header")
    known_actions = set(manifest.action_ids)
    known_decisions = set(decision_ids)
    seen: set[tuple[str, str]] = set()
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", row=lineno)
        participant_id, treatment, decision_id, predicted = row
        if not participant_id or not treatment:
            raise ParseError("participant_id and treatment must be non-empty", row=lineno)
        if decision_id not in known_decisions:
            raise ParseError(
                f"unknown decision {decision_id!r}", row=lineno, column="decision_id"
            )
        if predicted not in known_actions:
            raise ParseError(
                f"unknown action {predicted!r}", row=lineno, column="predicted_action"
            )
        key = (participant_id, decision_id)
        if key in seen:
            raise ParseError(
                f"duplicate prediction by {participant_id!r} for decision {decision_id!r}",
                row=lineno,
                column="participant_id",
            )
        seen.add(key)
        records.append(
            PredictionRecord(
                participant_id=participant_id,
                treatment=treatment,
                decision_id=decision_id,
                predicted=predicted,
            )
        )
    return records


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_values_csv(decisions) -> str:
    with_outcomes = any(dv.outcomes for dv in decisions)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(VALUES_HEADER + (OUTCOME_COLUMNS if with_outcomes else []))
    for dv in decisions:
        for action in sorted(dv.entries, key=canonical_key):
            row = [
                dv.decision_id,
                action,
                _fmt(dv.entries[action]),
                "1" if action == dv.chosen else "0",
            ]
            if with_outcomes:
                triple = (dv.outcomes or {}).get(action)
                if triple is None:
                    row += ["", "", ""]
                else:
                    row += [_fmt(triple.win), _fmt(triple.loss), _fmt(triple.draw)]
            writer.writerow(row)
    return out.getvalue()


def serialize_predictions_csv(predictions) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PREDICTIONS_HEADER)
    for rec in predictions:
        writer.writerow([rec.participant_id, rec.treatment, rec.decision_id, rec.predicted])
    return out.getvalue()


def manifest_to_dict(bundle: ExperimentBundle) -> dict:
    manifest = bundle.manifest
    if manifest.domain == MNK:
        domain = {
            "type": MNK,
            "m": manifest.board.m,
            "n": manifest.board.n,
            "k": manifest.board.k,
        }
    else:
        domain = {"type": manifest.domain}
    doc = {
        "experiment_id": manifest.experiment_id,
        "domain": domain,
        "actions": [{"id": a, "name": n} for a, n in manifest.actions],
        "treatments": list(bundle.treatments),
    }
    if bundle.pending_decisions:
        doc["pending_decisions"] = [
            {"decision_id": did, "actions": list(actions)}
            for did, actions in bundle.pending_decisions
        ]
    return doc


def _manifest_from_dict(doc: dict):
    try:
        domain_doc = doc["domain"]
        domain = domain_doc["type"]
        if domain == MNK:
            board = BoardConfig(m=domain_doc["m"], n=domain_doc["n"], k=domain_doc["k"])
        else:
            board = None
        manifest = ActionManifest(
            experiment_id=doc["experiment_id"],
            domain=domain,
            actions=tuple((a["id"], a["name"]) for a in doc["actions"]),
            board=board,
        )
        treatments = tuple(doc["treatments"])
        pending = tuple(
            (p["decision_id"], tuple(p["actions"])) for p in doc.get("pending_decisions", [])
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed manifest.json: {exc!r}") from None
    return manifest, treatments, pending


def write_bundle(bundle: ExperimentBundle, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "manifest.json").write_text(
        json.dumps(manifest_to_dict(bundle), indent=2) + "\n", encoding="utf-8"
    )
    (path / "values.csv").write_text(serialize_values_csv(bundle.decisions), encoding="utf-8")
    (path / "predictions.csv").write_text(
        serialize_predictions_csv(bundle.predictions), encoding="utf-8"
    )
    return path


def read_bundle(path) -> ExperimentBundle:
    path = Path(path)
    for name in ("manifest.json", "values.csv", "predictions.csv"):
        if not (path / name).exists():
            raise ParseError(f"no {name} in {path}")
    try:
        doc = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed manifest.json: {exc}") from None
    manifest, treatments, pending = _manifest_from_dict(doc)
    decisions = parse_values_csv((path / "values.csv").read_bytes())
    decision_ids = [dv.decision_id for dv in decisions]
    predictions = parse_predictions_csv(
        (path / "predictions.csv").read_bytes(), manifest, decision_ids
    )
    return ExperimentBundle(
        manifest=manifest,
        decisions=tuple(decisions),
        predictions=tuple(predictions),
        treatments=treatments,
        pending_decisions=pending,
    )


def write_score_tensor(tensor: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(tensor, indent=2) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class ParticipantModel:
    """Rank-indexed categorical model of how a participant predicts.

    rank_probs[i] is the probability of predicting the agent's rank-(i+1)
    action; the vector is renormalized over the ranks actually available.
    None means uniform over all available actions.
    """

    rank_probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.rank_probs is not None:
            probs = tuple(float(p) for p in self.rank_probs)
            if not probs or any(p < 0 or not math.isfinite(p) for p in probs):
                raise ValidationError("rank_probs must be non-negative finite numbers")
            if sum(probs) <= 0:
                raise ValidationError("rank_probs must have positive mass")
            object.__setattr__(self, "rank_probs", probs)

    @classmethod
    def always_best(cls) -> "ParticipantModel":
        return cls(rank_probs=(1.0,))

    @classmethod
    def uniform(cls) -> "ParticipantModel":
        return cls(rank_probs=None)

    def sample(self, values: DecisionValues, rng: random.Random) -> str:
        order = values.actions
        if self.rank_probs is None:
            return order[rng.randrange(len(order))]
        probs = self.rank_probs[: len(order)]
        total = sum(probs)
        if total <= 0:
            raise ValidationError(
                f"participant model has no mass on the {len(order)} available ranks"
            )
        draw = rng.random() * total
        cumulative = 0.0
        for i, p in enumerate(probs):
            cumulative += p
            if draw < cumulative:
                return order[i]
        return order[len(probs) - 1]


def generate_synthetic_experiment(
    config: BoardConfig,
    agents,
    participants: int,
    treatments,
    behavior: ParticipantModel,
    seed: int,
    decisions_per_agent: int = 4,
    experiment_id: str | None = None,
) -> ExperimentBundle:
    """Play seeded games and synthesize predictions for them.

    Each agent plays one game against a uniform-random opponent; the
    agent's first decisions_per_agent value tables become the bundle's
    decisions, numbered P1, P2, ... across agents.  Every participant then
    predicts each decision by sampling the behavior model.  All randomness
    derives from seed, so equal arguments give byte-identical bundles.
    """
    agents = list(agents)
    treatments = tuple(treatments)
    if participants < 1:
        raise ValidationError(f"participants must be >= 1, got {participants}")
    if not agents:
        raise ValidationError("need at least one agent spec")
    if not treatments:
        raise ValidationError("need at least one treatment label")
    if decisions_per_agent < 1:
        raise ValidationError(f"decisions_per_agent must be >= 1, got {decisions_per_agent}")

    decisions: list[DecisionValues] = []
    for agent_index, agent in enumerate(agents):
        if not isinstance(agent, AgentSpec):
            raise ValidationError(f"agents[{agent_index}] is not an AgentSpec")
        opponent_rng = random.Random(f"{seed}|opponent|{agent_index}")
        board = new_game(config)
        for _ in range(decisions_per_agent):
            if game_status(board).state != ONGOING:
                break
            dv = value_oracle(board, agent, decision_id=f"P{len(decisions) + 1}")
            decisions.append(dv)
            board = apply_move(board, SquareId.parse(dv.chosen))
            if game_status(board).state != ONGOING:
                break
            empties = board.empty_squares()
            board = apply_move(board, empties[opponent_rng.randrange(len(empties))])

    predictions: list[PredictionRecord] = []
    for i in range(participants):
        participant_id = f"p{i + 1:03d}"
        treatment = treatments[i % len(treatments)]
        participant_rng = random.Random(f"{seed}|participant|{participant_id}")
        for dv in decisions:
            predictions.append(
                PredictionRecord(
                    participant_id=participant_id,
                    treatment=treatment,
                    decision_id=dv.decision_id,
                    predicted=behavior.sample(dv, participant_rng),
                )
            )

    return ExperimentBundle(
        manifest=make_mnk_manifest(
            config, experiment_id or f"synthetic-{config.m}x{config.n}k{config.k}-seed{seed}"
        ),
        decisions=tuple(decisions),
        predictions=tuple(predictions),
        treatments=treatments,
    )


# Known decision-point values for the four-quadrant tank domain: only the
# first decision's full table is public (in rank order 31, -28, -284, -313,
# all points within the published -366..53 range); which quadrant carried
# which value is not, so the assignment below is positional and the other
# thirteen decisions ship as pending until real tables are supplied.
FOUR_TOWERS_DP1_VALUES = (31.0, -28.0, -284.0, -313.0)
FOUR_TOWERS_VALUE_RANGE = (-366.0, 53.0)
FOUR_TOWERS_DECISIONS = tuple(f"DP{i}" for i in range(1, 15))
FOUR_TOWERS_TREATMENTS = ("NONE", "Saliency Maps", "Reward Bars", "Both")


def load_four_towers_fixture() -> ExperimentBundle:
    """Values-only bundle for the four-quadrant domain: DP1 populated,
    DP2..DP14 pending user-supplied value tables."""
    entries = dict(zip(QUADRANTS, FOUR_TOWERS_DP1_VALUES))
    dp1 = DecisionValues(
        decision_id="DP1",
        entries=entries,
        chosen=max(entries, key=entries.get),
    )
    manifest = ActionManifest(
        experiment_id="four-towers",
        domain=FOUR_TOWERS,
        actions=tuple((q, q) for q in QUADRANTS),
    )
    return ExperimentBundle(
        manifest=manifest,
        decisions=(dp1,),
        predictions=(),
        treatments=FOUR_TOWERS_TREATMENTS,
        pending_decisions=tuple((did, QUADRANTS) for did in FOUR_TOWERS_DECISIONS[1:]),
    )
