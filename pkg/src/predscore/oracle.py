"""Search-based value oracle for MNK boards.

For every legal move the oracle estimates the (win, loss, draw) outcome
probabilities for the mover under uniform-random completion by both sides,
then flattens each triple to a scalar advantage (win minus loss).  Two
backends:

  exhaustive  -- enumerates every completion exactly (rational arithmetic,
                 memoized on board state); capped at EXHAUSTIVE_LIMIT empty
                 squares.
  sampled     -- seeded Monte-Carlo rollouts, optionally depth-limited.

A mutated agent adds seeded uniform noise to the flattened values only,
leaving the outcome triples untouched; magnitude 0 is bit-exact identical
to the unmutated agent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .actions import SquareId, canonical_key
from .board import AGENT, ONGOING, Board, BoardConfig, game_status
from .errors import ValidationError
from .values import DecisionValues, OutcomeTriple, argmax_action

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"

# 12 empty squares is the largest exhaustive enumeration that stays desk-scale.
EXHAUSTIVE_LIMIT = 12

_AGENT_CODE, _OPPONENT_CODE = 1, 2

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class Mutation:
    """Seeded value-noise perturbation applied to flattened values."""

    seed: int
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValidationError(f"mutation magnitude must be >= 0, got {self.magnitude}")


@dataclass(frozen=True)
class AgentSpec:
    oracle: str = EXHAUSTIVE
    rollouts: int | None = None
    seed: int | None = None
    depth_limit: int | None = None
    mutation: Mutation | None = None

    def __post_init__(self):
        if self.oracle not in (EXHAUSTIVE, SAMPLED):
            raise ValidationError(f"unknown oracle kind {self.oracle!r}")
        if self.oracle == SAMPLED:
            if not self.rollouts or self.rollouts < 1:
                raise ValidationError("sampled oracle requires rollouts >= 1")
            if self.seed is None:
                raise ValidationError("sampled oracle requires an explicit seed")
        if self.depth_limit is not None and self.depth_limit < 1:
            raise ValidationError(f"depth_limit must be >= 1, got {self.depth_limit}")


@lru_cache(maxsize=None)
def _ray_table(m: int, n: int, k: int):
    """Per square index, per direction: (forward ray, backward ray) of
    square indices, truncated to k-1 steps."""
    rays = []
    for r in range(n):
        for c in range(m):
            pairs = []
            for dc, dr in ((1, 0), (0, 1), (1, 1), (1, -1)):
                arms = []
                for sign in (1, -1):
                    arm = []
                    cc, rr = c + sign * dc, r + sign * dr
                    while 0 <= cc < m and 0 <= rr < n and len(arm) < k - 1:
                        arm.append(rr * m + cc)
                        cc += sign * dc
                        rr += sign * dr
                    arms.append(tuple(arm))
                pairs.append(tuple(arms))
            rays.append(tuple(pairs))
    return tuple(rays)


def _wins(packed: int, idx: int, code: int, rays, k: int) -> bool:
    """True if the piece just placed at idx completes a k-run."""
    for forward, backward in rays[idx]:
        count = 1
        for j in forward:
            if (packed >> (2 * j)) & 3 != code:
                break
            count += 1
        for j in backward:
            if (packed >> (2 * j)) & 3 != code:
                break
            count += 1
        if count >= k:
            return True
    return False


# Continuation values memoized per board shape; shared across oracle calls.
_memo: dict[tuple, dict] = {}


def _continuation(packed: int, mover: int, empties: tuple[int, ...], rays, k: int, memo) -> tuple:
    """Exact (agent win, opponent win, draw) probabilities under uniform
    random play from this state, as Fractions."""
    key = (packed, mover)
    hit = memo.get(key)
    if hit is not None:
        return hit
    share = Fraction(1, len(empties))
    p_agent = p_opp = p_draw = _ZERO
    last = len(empties) == 1
    other = _OPPONENT_CODE if mover == _AGENT_CODE else _AGENT_CODE
    for i, idx in enumerate(empties):
        child = packed | (mover << (2 * idx))
        if _wins(child, idx, mover, rays, k):
            if mover == _AGENT_CODE:
                p_agent += share
            else:
                p_opp += share
        elif last:
            p_draw += share
        else:
            sub = _continuation(child, other, empties[:i] + empties[i + 1 :], rays, k, memo)
            p_agent += share * sub[0]
            p_opp += share * sub[1]
            p_draw += share * sub[2]
    result = (p_agent, p_opp, p_draw)
    memo[key] = result
    return result


def exact_outcome_triples(board: Board) -> dict[SquareId, tuple[Fraction, Fraction, Fraction]]:
    """Exact mover-perspective (win, loss, draw) for every legal move.

    The three fractions of each triple sum to exactly 1.
    """
    status = game_status(board)
    if status.state != ONGOING:
        raise ValidationError(f"game is not ongoing ({status.state}); nothing to evaluate")
    empties = board.empty_squares()
    if len(empties) > EXHAUSTIVE_LIMIT:
        raise ValidationError(
            f"exhaustive oracle supports at most {EXHAUSTIVE_LIMIT} empty squares "
            f"(board has {len(empties)}); use the sampled oracle"
        )
    cfg = board.config
    rays = _ray_table(cfg.m, cfg.n, cfg.k)
    memo = _memo.setdefault((cfg.m, cfg.n, cfg.k), {})
    mover = _AGENT_CODE if board.to_move == AGENT else _OPPONENT_CODE
    other = _OPPONENT_CODE if mover == _AGENT_CODE else _AGENT_CODE
    empty_idx = tuple(cfg.index(sq) for sq in empties)
    out = {}
    for pos, sq in enumerate(empties):
        idx = empty_idx[pos]
        child = board.packed | (mover << (2 * idx))
        if _wins(child, idx, mover, rays, cfg.k):
            triple = (_ONE, _ZERO, _ZERO)
        elif len(empties) == 1:
            triple = (_ZERO, _ZERO, _ONE)
        else:
            rest = empty_idx[:pos] + empty_idx[pos + 1 :]
            p_agent, p_opp, p_draw = _continuation(child, other, rest, rays, cfg.k, memo)
            if board.to_move == AGENT:
                triple = (p_agent, p_opp, p_draw)
            else:
                triple = (p_opp, p_agent, p_draw)
        out[sq] = triple
    return out


def _board_key(board: Board) -> str:
    cfg = board.config
    return f"{cfg.m}x{cfg.n}k{cfg.k}|{board.packed}|{board.to_move}"


def sampled_outcome_triples(
    board: Board, rollouts: int, seed: int, depth_limit: int | None = None
) -> dict[SquareId, tuple[float, float, float]]:
    """Monte-Carlo estimate of the mover-perspective outcome triples.

    Each square draws its own RNG from (seed, board, square), so estimates
    are reproducible regardless of evaluation order.  Rollouts that hit the
    depth limit count as draws.
    """
    status = game_status(board)
    if status.state != ONGOING:
        raise ValidationError(f"game is not ongoing ({status.state}); nothing to evaluate")
    if rollouts < 1:
        raise ValidationError("rollouts must be >= 1")
    cfg = board.config
    rays = _ray_table(cfg.m, cfg.n, cfg.k)
    mover = _AGENT_CODE if board.to_move == AGENT else _OPPONENT_CODE
    empties = board.empty_squares()
    empty_idx = [cfg.index(sq) for sq in empties]
    base_key = _board_key(board)
    out = {}
    for pos, sq in enumerate(empties):
        idx = empty_idx[pos]
        first = board.packed | (mover << (2 * idx))
        rng = random.Random(f"{seed}|{base_key}|{sq.text}")
        wins = losses = draws = 0
        if _wins(first, idx, mover, rays, cfg.k):
            wins = rollouts
        else:
            rest_template = empty_idx[:pos] + empty_idx[pos + 1 :]
            for _ in range(rollouts):
                packed = first
                side = _OPPONENT_CODE if mover == _AGENT_CODE else _AGENT_CODE
                remaining = list(rest_template)
                depth = 0
                outcome = 0  # 0 draw/limit, else winning code
                while remaining:
                    if depth_limit is not None and depth >= depth_limit:
                        break
                    pick = rng.randrange(len(remaining))
                    move = remaining[pick]
                    remaining[pick] = remaining[-1]
                    remaining.pop()
                    packed |= side << (2 * move)
                    if _wins(packed, move, side, rays, cfg.k):
                        outcome = side
                        break
                    side = _OPPONENT_CODE if side == _AGENT_CODE else _AGENT_CODE
                    depth += 1
                if outcome == mover:
                    wins += 1
                elif outcome:
                    losses += 1
                else:
                    draws += 1
        out[sq] = (wins / rollouts, losses / rollouts, draws / rollouts)
    return out


def value_oracle(board: Board, spec: AgentSpec, decision_id: str | None = None) -> DecisionValues:
    """Full value table for the current mover: one outcome triple per legal
    move, flattened to advantage = win - loss, with optional mutation noise
    on the flattened values."""
    if spec.oracle == EXHAUSTIVE:
        raw = {
            sq: (float(win), float(loss), float(draw))
            for sq, (win, loss, draw) in exact_outcome_triples(board).items()
        }
    else:
        raw = sampled_outcome_triples(
            board, rollouts=spec.rollouts, seed=spec.seed, depth_limit=spec.depth_limit
        )
    entries = {sq.text: win - loss for sq, (win, loss, draw) in raw.items()}
    outcomes = {
        sq.text: OutcomeTriple(win, loss, draw) for sq, (win, loss, draw) in raw.items()
    }
    if spec.mutation is not None and spec.mutation.magnitude > 0:
        rng = random.Random(f"{spec.mutation.seed}|{_board_key(board)}")
        for action in sorted(entries, key=canonical_key):
            entries[action] += rng.uniform(-spec.mutation.magnitude, spec.mutation.magnitude)
    if decision_id is None:
        decision_id = f"d{board.move_count + 1}"
    return DecisionValues(
        decision_id=decision_id,
        entries=entries,
        chosen=argmax_action(entries),
        outcomes=outcomes,
    )


def choose_action(values: DecisionValues | dict) -> SquareId:
    """Argmax of the flattened values, ties to the lowest (col, row)."""
    entries = values.entries if isinstance(values, DecisionValues) else values
    return SquareId.parse(argmax_action(entries))


def export_score_tensor(history: list[DecisionValues], config: BoardConfig | None = None) -> dict:
    """Decision-by-square value grid plus the per-decision sorted series.

    The square axis covers the full board when config is given, otherwise
    the union of actions seen across decisions.  Squares with no value at a
    decision (already occupied) are None.  Each decision also carries its
    values sorted descending, the way a value-ordered score chart drops out
    of the data.
    """
    if not history:
        raise ValidationError("no decisions recorded; nothing to export")
    if config is not None:
        columns = [sq.text for sq in config.all_squares()]
    else:
        seen = set()
        for dv in history:
            seen.update(dv.entries)
        columns = sorted(seen, key=canonical_key)
    decisions = []
    for dv in history:
        decisions.append(
            {
                "decision_id": dv.decision_id,
                "chosen": dv.chosen,
                "values": [dv.entries.get(a) for a in columns],
                "sorted_series": [[a, dv.entries[a]] for a in dv.actions],
            }
        )
    return {"actions": columns, "decisions": decisions}
