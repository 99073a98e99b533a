"""Cohort survival fractions and Kaplan-Meier estimates of publishing careers."""

from __future__ import annotations

import logging
import math
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

from .corpus import AuthorIndex
from .errors import EmptyCohort, NoCurves, NoRecords

log = logging.getLogger(__name__)

ActivityMode = Literal["in-year", "at-or-after"]

DEFAULT_CENSOR_GAP = 2
DEFAULT_MIN_COHORT_SIZE = 10


@dataclass(frozen=True)
class CohortCurve:
    cohort_year: int
    fractions: tuple[float, ...]
    cohort_size: int

    @property
    def max_lag(self) -> int:
        return len(self.fractions) - 1


def cohort_members(index: AuthorIndex, cohort_year: int) -> list[str]:
    return sorted(a for a, ys in index.years.items() if ys[0] == cohort_year)


def cohort_survival(
    index: AuthorIndex,
    cohort_year: int,
    max_lag: int,
    activity_mode: ActivityMode = "in-year",
    corpus_end: int | None = None,
) -> CohortCurve:
    """Share of a first-year cohort still active at each lag.

    ``in-year`` counts an author at lag t only if they published in
    ``cohort_year + t``; ``at-or-after`` counts anyone whose last year is at
    least that late. Lags past ``corpus_end`` are truncated with a warning.
    """
    members = cohort_members(index, cohort_year)
    if not members:
        raise EmptyCohort(f"no authors first published in {cohort_year}")
    corpus_end = index.span[1] if corpus_end is None else corpus_end
    if cohort_year + max_lag > corpus_end:
        log.warning(
            "cohort %d: lag %d runs past corpus end %d, truncating",
            cohort_year, max_lag, corpus_end,
        )
        max_lag = corpus_end - cohort_year
    n = len(members)
    fractions = []
    for lag in range(max_lag + 1):
        year = cohort_year + lag
        if activity_mode == "in-year":
            hits = 0
            for a in members:
                ys = index.years[a]
                i = bisect_left(ys, year)
                hits += i < len(ys) and ys[i] == year
        elif activity_mode == "at-or-after":
            hits = sum(index.years[a][-1] >= year for a in members)
        else:
            raise ValueError(f"unknown activity mode {activity_mode!r}")
        fractions.append(hits / n)
    return CohortCurve(cohort_year, tuple(fractions), n)


@dataclass(frozen=True)
class CohortAggregate:
    lags: tuple[int, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    n_cohorts: tuple[int, ...]


def aggregate_cohorts(
    curves: Sequence[CohortCurve], min_cohort_size: int = DEFAULT_MIN_COHORT_SIZE
) -> CohortAggregate:
    """Per-lag mean and population std over cohorts that reach that lag."""
    kept = [c for c in curves if c.cohort_size >= min_cohort_size]
    if not kept:
        raise NoCurves("no cohort curves to aggregate")
    max_lag = max(c.max_lag for c in kept)
    lags, means, stds, counts = [], [], [], []
    for lag in range(max_lag + 1):
        vals = [c.fractions[lag] for c in kept if c.max_lag >= lag]
        mu = math.fsum(vals) / len(vals)
        var = math.fsum((v - mu) ** 2 for v in vals) / len(vals)
        lags.append(lag)
        means.append(mu)
        stds.append(math.sqrt(var))
        counts.append(len(vals))
    return CohortAggregate(tuple(lags), tuple(means), tuple(stds), tuple(counts))


def all_cohort_curves(
    index: AuthorIndex,
    max_lag: int | None = None,
    activity_mode: ActivityMode = "in-year",
) -> list[CohortCurve]:
    start, end = index.span
    curves = []
    for year in range(start, end + 1):
        if not any(ys[0] == year for ys in index.years.values()):
            continue
        lag = end - year if max_lag is None else min(max_lag, end - year)
        curves.append(cohort_survival(index, year, lag, activity_mode, corpus_end=end))
    return curves


@dataclass(frozen=True)
class DurationRecord:
    author_id: str
    duration: int
    censored: bool


def durations_from_index(
    index: AuthorIndex, corpus_end: int | None = None, censor_gap: int = DEFAULT_CENSOR_GAP
) -> list[DurationRecord]:
    """Career length (last - first year) per author.

    An author is right-censored when their last year lies within the final
    ``censor_gap`` observed years.
    """
    if censor_gap < 0:
        raise ValueError("censor_gap must be >= 0")
    corpus_end = index.span[1] if corpus_end is None else corpus_end
    cutoff = corpus_end - censor_gap
    return [
        DurationRecord(a, ys[-1] - ys[0], ys[-1] > cutoff)
        for a, ys in sorted(index.years.items())
    ]


@dataclass(frozen=True)
class KMEstimate:
    event_times: tuple[float, ...]
    survival: tuple[float, ...]
    at_risk: tuple[int, ...]
    events: tuple[int, ...]
    censored_count: int
    n: int = field(default=0)

    def survival_at(self, t: float) -> float:
        """Right-continuous S(t): probability the duration exceeds ``t``."""
        i = bisect_right(self.event_times, t)
        return 1.0 if i == 0 else self.survival[i - 1]

    def survival_before(self, t: float) -> float:
        """Left limit S(t-): probability the duration is at least ``t``."""
        i = bisect_left(self.event_times, t)
        return 1.0 if i == 0 else self.survival[i - 1]


def km_estimate(records: Iterable[DurationRecord | tuple[float, bool]]) -> KMEstimate:
    """Product-limit estimator with right censoring.

    At a tied time, events are counted against the full risk set before the
    same-time censored records leave it.
    """
    pairs = []
    for r in records:
        if isinstance(r, DurationRecord):
            pairs.append((r.duration, r.censored))
        else:
            pairs.append((r[0], bool(r[1])))
    if not pairs:
        raise NoRecords("Kaplan-Meier needs at least one record")
    events = Counter(t for t, c in pairs if not c)
    leaving = Counter(t for t, _ in pairs)
    times = sorted(leaving)
    n_risk = len(pairs)
    s = 1.0
    surv, risk, evs = [], [], []
    for t in times:
        d = events.get(t, 0)
        if d:
            s *= 1.0 - d / n_risk
        surv.append(s)
        risk.append(n_risk)
        evs.append(d)
        n_risk -= leaving[t]
    return KMEstimate(
        event_times=tuple(times),
        survival=tuple(surv),
        at_risk=tuple(risk),
        events=tuple(evs),
        censored_count=sum(c for _, c in pairs),
        n=len(pairs),
    )
