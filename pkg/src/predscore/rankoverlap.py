"""Rank-biased overlap between the agent's preference list and a group's
vote-derived list.

The classic extrapolated overlap divides every depth-d agreement by d,
which punishes short lists: a group whose only vote went to the agent's
top action scores far below 1 against the agent's full ordering.  The
modified form caps each denominator at the shorter list's length, so any
list that is a prefix of the other scores exactly 1.
"""

from __future__ import annotations

from collections import Counter

from .actions import canonical_key
from .errors import ValidationError
from .metrics import PredictionRecord
from .values import DecisionValues

DEFAULT_PERSISTENCE = 0.9


def agent_ranklist(values: DecisionValues) -> tuple[str, ...]:
    """The agent's full preference list: actions by descending value."""
    return values.actions


def vote_ranklist(predictions: list[PredictionRecord]) -> tuple[str, ...]:
    """Group preference list by vote count, most votes first.

    Actions nobody voted for are dropped; equal nonzero counts are ordered
    canonically.
    """
    if not predictions:
        raise ValidationError("empty prediction group")
    counts = Counter(rec.predicted for rec in predictions)
    return tuple(sorted(counts, key=lambda a: (-counts[a], canonical_key(a))))


def _check_lists(s, t, p):
    if not s or not t:
        raise ValidationError("rank lists must be non-empty")
    if len(set(s)) != len(s) or len(set(t)) != len(t):
        raise ValidationError("rank lists must not contain duplicates")
    if not 0 < p < 1:
        raise ValidationError(f"persistence p must be in (0, 1), got {p}")


def rbo_ext(s, t, p: float, k: int) -> float:
    """Extrapolated rank-biased overlap at evaluation depth k.

    1.0 for identical lists of length k, 0.0 for disjoint lists; the
    depth-d agreement is |S_:d intersect T_:d| / d, weighted by p^d.
    """
    _check_lists(s, t, p)
    if k < 1:
        raise ValidationError(f"evaluation depth k must be >= 1, got {k}")
    seen_s: set = set()
    seen_t: set = set()
    overlap = 0
    tail = 0.0
    weight = 1.0
    for d in range(1, k + 1):
        if d <= len(s):
            x = s[d - 1]
            if x in seen_t:
                overlap += 1
            seen_s.add(x)
        if d <= len(t):
            x = t[d - 1]
            if x in seen_s:
                overlap += 1
            seen_t.add(x)
        weight *= p
        tail += overlap / d * weight
    # after the loop: overlap == |S_:k intersect T_:k| and weight == p^k
    return overlap / k * weight + (1 - p) / p * tail


def mrbo_ext(s, t, p: float = DEFAULT_PERSISTENCE) -> float:
    """Modified overlap: denominators stop growing at the shorter list.

    Evaluated to depth k = len of the longer list; argument order does not
    matter.  Equals rbo_ext when both lists have length k, and equals 1.0
    exactly iff one list is a prefix of the other.
    """
    _check_lists(s, t, p)
    if len(s) > len(t):
        s, t = t, s
    k = len(t)
    short = len(s)
    seen_s: set = set()
    seen_t: set = set()
    overlap = 0
    tail = 0.0
    weight = 1.0
    for d in range(1, k + 1):
        if d <= short:
            x = s[d - 1]
            if x in seen_t:
                overlap += 1
            seen_s.add(x)
        x = t[d - 1]
        if x in seen_s:
            overlap += 1
        seen_t.add(x)
        weight *= p
        tail += overlap / min(short, d) * weight
    first = overlap / short * weight  # overlap at depth k, weight = p^k
    return first + (1 - p) / p * tail


def mrbo_table(
    groups: dict[str, list[PredictionRecord]],
    value_tables: dict[str, DecisionValues],
    p: float = DEFAULT_PERSISTENCE,
) -> dict[tuple[str, str], float]:
    """Modified overlap per (treatment, decision): the group's vote list
    against the agent's full preference list.

    Iterates treatments in sorted order and decisions in value_tables
    order, so the resulting dict has a deterministic layout.
    """
    table = {}
    for treatment in sorted(groups):
        records = groups[treatment]
        for decision_id, values in value_tables.items():
            group = [rec for rec in records if rec.decision_id == decision_id]
            if not group:
                raise ValidationError(
                    f"treatment {treatment!r} has no predictions for decision {decision_id!r}"
                )
            table[(treatment, decision_id)] = mrbo_ext(
                vote_ranklist(group), agent_ranklist(values), p
            )
    return table
