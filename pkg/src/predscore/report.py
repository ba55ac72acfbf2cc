"""Report tables and figures built from a bundle.

Everything here is assembly: each cell is a direct library call over the
bundle (mean loss in value / loss in rank per treatment per decision,
modified overlap per cell, grade counts, vote matrices), rendered to CSV,
markdown or SVG deterministically so outputs are golden-file friendly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import SquareId
from .dataset import ExperimentBundle, MNK
from .errors import ValidationError
from .metrics import DEFAULT_GRADE_SCALE, GradeScale, MetricSample, score_dataset
from .rankoverlap import DEFAULT_PERSISTENCE, mrbo_table
from .stats import SampleGroup

VALUE_SPACE = "value"
RANK_SPACE = "rank"


@dataclass(frozen=True)
class MetricsTable:
    """Per-treatment summary: mean LV and LR (pooled and per decision) and
    the modified overlap per decision."""

    decision_ids: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple[float, ...]], ...]  # (treatment, cells)
    lower_is_better: tuple[bool, ...]

    def best_in_column(self) -> tuple[tuple[str, ...], ...]:
        """For each row, the column names where that row holds the best value."""
        best: list[set[str]] = [set() for _ in self.rows]
        for j, col in enumerate(self.columns):
            cells = [cells[j] for _, cells in self.rows]
            target = min(cells) if self.lower_is_better[j] else max(cells)
            for i, value in enumerate(cells):
                if value == target:
                    best[i].add(col)
        return tuple(tuple(sorted(s)) for s in best)


def _samples_by_treatment(samples: list[MetricSample]) -> dict[str, list[MetricSample]]:
    groups: dict[str, list[MetricSample]] = {}
    for s in samples:
        groups.setdefault(s.treatment, []).append(s)
    return groups


def build_metrics_table(
    bundle: ExperimentBundle,
    p: float = DEFAULT_PERSISTENCE,
    scale: GradeScale = DEFAULT_GRADE_SCALE,
) -> MetricsTable:
    if not bundle.predictions:
        raise ValidationError("bundle has no predictions to summarize")
    value_tables = bundle.values_by_decision()
    decision_ids = tuple(dv.decision_id for dv in bundle.decisions)
    samples = score_dataset(list(bundle.predictions), value_tables, scale)
    by_treatment = _samples_by_treatment(samples)
    overlap = mrbo_table(bundle.predictions_by_treatment(), value_tables, p)

    columns = (
        ["mean_lv_all"]
        + [f"mean_lv_{d}" for d in decision_ids]
        + ["mean_lr_all"]
        + [f"mean_lr_{d}" for d in decision_ids]
        + [f"mrbo_{d}" for d in decision_ids]
    )
    lower = (
        [True] * (1 + len(decision_ids)) + [True] * (1 + len(decision_ids)) + [False] * len(decision_ids)
    )
    rows = []
    for treatment in sorted(by_treatment):
        group = by_treatment[treatment]
        cells: list[float] = []
        cells.append(math.fsum(s.lv for s in group) / len(group))
        for d in decision_ids:
            sub = [s.lv for s in group if s.decision_id == d]
            if not sub:
                raise ValidationError(f"treatment {treatment!r} has no samples for decision {d!r}")
            cells.append(math.fsum(sub) / len(sub))
        cells.append(math.fsum(s.lr for s in group) / len(group))
        for d in decision_ids:
            sub = [s.lr for s in group if s.decision_id == d]
            cells.append(math.fsum(sub) / len(sub))
        for d in decision_ids:
            cells.append(overlap[(treatment, d)])
        rows.append((treatment, tuple(cells)))
    return MetricsTable(
        decision_ids=decision_ids,
        columns=tuple(columns),
        rows=tuple(rows),
        lower_is_better=tuple(lower),
    )


def render_metrics_csv(table: MetricsTable) -> str:
    lines = ["treatment," + ",".join(table.columns) + ",best_in"]
    for (treatment, cells), best in zip(table.rows, table.best_in_column()):
        lines.append(
            treatment + "," + ",".join(repr(c) for c in cells) + "," + ";".join(best)
        )
    return "\n".join(lines) + "\n"


def render_metrics_markdown(table: MetricsTable) -> str:
    header = "| treatment | " + " | ".join(table.columns) + " |"
    rule = "|" + " --- |" * (len(table.columns) + 1)
    lines = [header, rule]
    best = table.best_in_column()
    for (treatment, cells), best_cols in zip(table.rows, best):
        rendered = []
        for col, cell in zip(table.columns, cells):
            text = f"{cell:.3f}"
            rendered.append(f"**{text}**" if col in best_cols else text)
        lines.append("| " + treatment + " | " + " | ".join(rendered) + " |")
    return "\n".join(lines) + "\n"


def grade_distribution(
    bundle: ExperimentBundle, scale: GradeScale = DEFAULT_GRADE_SCALE
) -> dict[str, dict[str, dict[str, int]]]:
    """decision -> treatment -> grade label -> count."""
    samples = score_dataset(list(bundle.predictions), bundle.values_by_decision(), scale)
    out: dict[str, dict[str, dict[str, int]]] = {}
    for dv in bundle.decisions:
        out[dv.decision_id] = {
            t: {label: 0 for label in scale.labels} for t in sorted(bundle.treatments)
        }
    for s in samples:
        out[s.decision_id][s.treatment][s.grade] += 1
    return out


def render_grade_distribution_csv(distribution, scale: GradeScale = DEFAULT_GRADE_SCALE) -> str:
    lines = ["decision_id,treatment," + ",".join(scale.labels)]
    for decision_id, per_treatment in distribution.items():
        for treatment, counts in per_treatment.items():
            lines.append(
                f"{decision_id},{treatment},"
                + ",".join(str(counts[label]) for label in scale.labels)
            )
    return "\n".join(lines) + "\n"


def participant_loss_sums(bundle: ExperimentBundle, space: str) -> list[SampleGroup]:
    """Per-treatment groups of each participant's summed loss across
    decisions (value space sums LV, rank space sums LR)."""
    if space not in (VALUE_SPACE, RANK_SPACE):
        raise ValidationError(f"space must be {VALUE_SPACE!r} or {RANK_SPACE!r}, got {space!r}")
    samples = score_dataset(list(bundle.predictions), bundle.values_by_decision())
    sums: dict[str, dict[str, float]] = {}
    for s in samples:
        per = sums.setdefault(s.treatment, {})
        per[s.participant_id] = per.get(s.participant_id, 0.0) + (
            s.lv if space == VALUE_SPACE else float(s.lr)
        )
    groups = []
    for treatment in sorted(sums):
        per = sums[treatment]
        groups.append(
            SampleGroup(
                label=treatment,
                values=tuple(per[pid] for pid in sorted(per)),
            )
        )
    return groups


def five_number_summary(values) -> tuple[float, float, float, float, float]:
    """(min, q1, median, q3, max) with linear interpolation quartiles."""
    if not values:
        raise ValidationError("empty sample")
    arr = np.asarray(sorted(values), dtype=float)
    q1, med, q3 = (float(np.percentile(arr, q)) for q in (25, 50, 75))
    return (float(arr[0]), q1, med, q3, float(arr[-1]))


def render_boxplot_csv(groups: list[SampleGroup]) -> str:
    lines = ["treatment,n,min,q1,median,q3,max"]
    for g in groups:
        lo, q1, med, q3, hi = five_number_summary(g.values)
        lines.append(f"{g.label},{len(g.values)},{lo!r},{q1!r},{med!r},{q3!r},{hi!r}")
    return "\n".join(lines) + "\n"


def vote_matrix(
    bundle: ExperimentBundle, decision_id: str, treatment: str | None = None
) -> list[list[int]]:
    """n-row by m-column grid of vote counts for one decision (row 1 first).

    treatment None pools every group.
    """
    if bundle.manifest.domain != MNK:
        raise ValidationError("vote matrices are defined for mnk bundles")
    value_tables = bundle.values_by_decision()
    if decision_id not in value_tables:
        raise ValidationError(f"unknown decision {decision_id!r}")
    cfg = bundle.manifest.board
    grid = [[0] * cfg.m for _ in range(cfg.n)]
    for rec in bundle.predictions:
        if rec.decision_id != decision_id:
            continue
        if treatment is not None and rec.treatment != treatment:
            continue
        sq = SquareId.parse(rec.predicted)
        grid[sq.row][sq.col] += 1
    return grid


def render_vote_matrix_csv(grid: list[list[int]], m: int) -> str:
    from .actions import column_label

    lines = ["row," + ",".join(column_label(c) for c in range(m))]
    for r, row in enumerate(grid):
        lines.append(f"{r + 1}," + ",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


# Fixed monotone blue ramp, light to dark, for vote heat maps.
BLUE_RAMP = (
    "#f7fbff",
    "#deebf7",
    "#c6dbef",
    "#9ecae1",
    "#6baed6",
    "#4292c6",
    "#2171b5",
    "#08519c",
    "#08306b",
)

_CELL = 40


def _ramp_color(count: int, peak: int) -> str:
    if count <= 0 or peak <= 0:
        return BLUE_RAMP[0]
    step = min(len(BLUE_RAMP) - 1, 1 + (count - 1) * (len(BLUE_RAMP) - 1) // peak)
    return BLUE_RAMP[step]


def render_vote_svg(grid: list[list[int]], chosen: SquareId | None = None) -> str:
    """Heat map of a vote matrix; the chosen square gets a red outline."""
    n = len(grid)
    m = len(grid[0]) if n else 0
    peak = max((v for row in grid for v in row), default=0)
    width, height = m * _CELL, n * _CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for r in range(n):
        for c in range(m):
            count = grid[r][c]
            x, y = c * _CELL, (n - 1 - r) * _CELL  # row 1 drawn at the bottom
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="{_ramp_color(count, peak)}" stroke="#999999"/>'
            )
            if count:
                parts.append(
                    f'<text x="{x + _CELL // 2}" y="{y + _CELL // 2 + 5}" '
                    f'text-anchor="middle" font-size="14" font-family="sans-serif" '
                    f'fill="#333333">{count}</text>'
                )
    if chosen is not None:
        x, y = chosen.col * _CELL, (n - 1 - chosen.row) * _CELL
        parts.append(
            f'<rect x="{x + 1}" y="{y + 1}" width="{_CELL - 2}" height="{_CELL - 2}" '
            f'fill="none" stroke="#d62728" stroke-width="3"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_boxplot_svg(groups: list[SampleGroup]) -> str:
    """Minimal box-and-whisker chart, one box per treatment."""
    if not groups:
        raise ValidationError("no groups to plot")
    summaries = [five_number_summary(g.values) for g in groups]
    lo = min(s[0] for s in summaries)
    hi = max(s[4] for s in summaries)
    span = hi - lo or 1.0
    box_w, gap, chart_h, margin = 60, 30, 240, 30
    width = margin * 2 + len(groups) * (box_w + gap)
    height = chart_h + margin * 2 + 20

    def sy(v: float) -> float:
        return margin + (hi - v) / span * chart_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for i, (g, (mn, q1, med, q3, mx)) in enumerate(zip(groups, summaries)):
        x = margin + i * (box_w + gap)
        cx = x + box_w / 2
        parts.append(
            f'<line x1="{cx:.1f}" y1="{sy(mx):.1f}" x2="{cx:.1f}" y2="{sy(mn):.1f}" '
            f'stroke="#333333"/>'
        )
        parts.append(
            f'<rect x="{x:.1f}" y="{sy(q3):.1f}" width="{box_w}" '
            f'height="{max(sy(q1) - sy(q3), 0.5):.1f}" fill="#9ecae1" stroke="#333333"/>'
        )
        parts.append(
            f'<line x1="{x:.1f}" y1="{sy(med):.1f}" x2="{x + box_w:.1f}" y2="{sy(med):.1f}" '
            f'stroke="#08306b" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{chart_h + margin + 16:.1f}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{g.label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
