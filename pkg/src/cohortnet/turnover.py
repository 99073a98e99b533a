"""Jaccard similarity and churn between consecutive author-set windows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Sequence

from .corpus import AuthorSet
from .errors import BothEmpty, EmptySource, TooFewWindows


def _members(s: AuthorSet | AbstractSet[str]) -> AbstractSet[str]:
    return s.authors if isinstance(s, AuthorSet) else s


def jaccard(a: AuthorSet | AbstractSet[str], b: AuthorSet | AbstractSet[str]) -> float:
    a, b = _members(a), _members(b)
    union = len(a | b)
    if union == 0:
        raise BothEmpty("jaccard of two empty sets is undefined")
    return len(a & b) / union


def churn(source: AuthorSet | AbstractSet[str], target: AuthorSet | AbstractSet[str]) -> float:
    """Share of ``source`` members missing from ``target``."""
    source, target = _members(source), _members(target)
    if not source:
        raise EmptySource("churn from an empty set is undefined")
    return len(source - target) / len(source)


@dataclass(frozen=True)
class TurnoverPoint:
    from_label: str
    to_label: str
    jaccard: float | None
    churn: float | None
    n_from: int
    n_to: int
    n_intersection: int
    reason: str = ""


def turnover_series(sets: Sequence[AuthorSet], reverse: bool = False) -> list[TurnoverPoint]:
    """One point per consecutive pair of windows.

    With ``reverse`` the churn is measured on the gain side, i.e. the share of
    the later window's authors absent from the earlier one. Undefined metrics
    are emitted as ``None`` with a reason code (``both-empty`` / ``empty-source``).
    """
    if len(sets) < 2:
        raise TooFewWindows("turnover needs at least two windows")
    points = []
    for prev, cur in zip(sets, sets[1:]):
        a, b = prev.authors, cur.authors
        n_int = len(a & b)
        j = c = None
        reason = ""
        src, dst = (b, a) if reverse else (a, b)
        if not (a or b):
            reason = "both-empty"
        else:
            j = jaccard(a, b)
            if src:
                c = churn(src, dst)
            else:
                reason = "empty-source"
        points.append(
            TurnoverPoint(
                prev.window.label, cur.window.label, j, c,
                len(a), len(b), n_int, reason,
            )
        )
    return points
