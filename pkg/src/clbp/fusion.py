"""Decision-level fusion of per-channel matching results."""

from __future__ import annotations

import enum
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInputError
from .matching import DistanceTable

__all__ = [
    "Rule",
    "ChannelScores",
    "normalize_scores",
    "channel_decisions",
    "sum_rule",
    "median_rule",
    "majority_vote",
    "fuse",
]

# channel -> subject_id -> normalized distance in [0, 1]
ChannelScores = Mapping[str, Mapping[str, float]]


class Rule(str, enum.Enum):
    SUM = "sum"
    MEDIAN = "median"
    MV = "mv"
    FVF = "fvf"

    @classmethod
    def parse(cls, value) -> "Rule":
        return value if isinstance(value, cls) else cls(str(value).strip().lower())


def _argmin(scores: Mapping[str, float], among=None) -> str:
    keys = sorted(scores if among is None else among)
    return min(keys, key=lambda s: (scores[s], s))


def normalize_scores(table: DistanceTable) -> dict[str, dict[str, float]]:
    """Min-max normalize each channel's distances to [0, 1].

    A channel whose distances are all equal maps to all zeros.
    """
    if not table.entries:
        raise EmptyInputError("distance table is empty")
    out = {}
    for ch in table.channels:
        raw = table.channel(ch)
        lo, hi = min(raw.values()), max(raw.values())
        span = hi - lo
        out[ch] = {s: (d - lo) / span if span > 0 else 0.0 for s, d in raw.items()}
    return out


def channel_decisions(scores: ChannelScores) -> dict[str, str]:
    """Rank-1 subject of every channel, ties by subject id."""
    return {ch: _argmin(per) for ch, per in scores.items()}


def _subjects(scores: ChannelScores) -> list[str]:
    if not scores:
        raise EmptyInputError("no channels to fuse")
    return sorted(set().union(*(per.keys() for per in scores.values())))


def _combined(scores: ChannelScores, reduce) -> dict[str, float]:
    return {
        s: float(reduce([per[s] for per in scores.values()]))
        for s in _subjects(scores)
    }


def sum_rule(scores: ChannelScores, among=None) -> str:
    """Subject with the smallest summed normalized distance."""
    return _argmin(_combined(scores, np.sum), among)


def median_rule(scores: ChannelScores) -> str:
    """Subject with the smallest median normalized distance across channels."""
    return _argmin(_combined(scores, np.median))


def majority_vote(decisions: Sequence[str], fallback: ChannelScores) -> str:
    """Most frequent per-channel decision.

    A tie between the top labels is settled by the sum rule restricted to the
    tied labels.
    """
    if not decisions:
        raise EmptyInputError("no decisions to vote on")
    counts = Counter(decisions)
    top = max(counts.values())
    tied = sorted(label for label, c in counts.items() if c == top)
    if len(tied) == 1:
        return tied[0]
    return sum_rule(fallback, among=tied)


def fuse(table: DistanceTable, rule) -> str:
    """Apply a decision-level rule (sum, median or mv) to a distance table."""
    rule = Rule.parse(rule)
    scores = normalize_scores(table)
    if rule is Rule.SUM:
        return sum_rule(scores)
    if rule is Rule.MEDIAN:
        return median_rule(scores)
    if rule is Rule.MV:
        decisions = [_argmin(table.channel(ch)) for ch in table.channels]
        return majority_vote(decisions, scores)
    raise ValueError("feature vector fusion works on fused signatures, not distance tables")
