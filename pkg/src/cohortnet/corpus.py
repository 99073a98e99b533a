"""Author activity index and annual / cumulative author-set windows."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Literal

from .errors import EmptyCorpus, InvalidSpan
from .ingest import WorkRecord, normalize_openalex_id

Mode = Literal["annual", "cumulative"]


@dataclass(frozen=True)
class WindowSpec:
    label: str
    start_year: int
    end_year: int
    mode: Mode = "annual"

    def __post_init__(self):
        if self.mode not in ("annual", "cumulative"):
            raise InvalidSpan(f"unknown window mode {self.mode!r}")
        if self.start_year > self.end_year:
            raise InvalidSpan(f"window {self.start_year}-{self.end_year} is empty")
        if self.mode == "annual" and self.start_year != self.end_year:
            raise InvalidSpan("annual windows cover exactly one year")

    @property
    def k(self) -> int:
        return self.end_year - self.start_year + 1

    def years(self) -> range:
        return range(self.start_year, self.end_year + 1)

    def __contains__(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year


@dataclass(frozen=True)
class AuthorSet:
    window: WindowSpec
    authors: frozenset[str]

    def __len__(self) -> int:
        return len(self.authors)


class AuthorIndex:
    """Per-author sorted activity years at the target institution."""

    def __init__(self, years: dict[str, list[int]], span: tuple[int, int] | None = None):
        self.years = {a: sorted(set(ys)) for a, ys in years.items() if ys}
        if span is None:
            all_years = [y for ys in self.years.values() for y in ys]
            if not all_years:
                raise EmptyCorpus("index has no activity")
            span = (min(all_years), max(all_years))
        self.span = span

    def __len__(self) -> int:
        return len(self.years)

    def __contains__(self, author_id: str) -> bool:
        return author_id in self.years

    def __getitem__(self, author_id: str) -> list[int]:
        return self.years[author_id]

    def first_year(self, author_id: str) -> int:
        return self.years[author_id][0]

    def last_year(self, author_id: str) -> int:
        return self.years[author_id][-1]

    @property
    def authors(self) -> frozenset[str]:
        return frozenset(self.years)

    def by_year(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for a, ys in self.years.items():
            for y in ys:
                out.setdefault(y, set()).add(a)
        return out


def affiliated_authors(work: WorkRecord, institution_id: str) -> list[str]:
    return [a.author_id for a in work.authorships if institution_id in a.institution_ids]


def build_author_index(works: Iterable[WorkRecord], institution_id: str) -> AuthorIndex:
    """Index authors whose own authorship carries ``institution_id``.

    The corpus span is taken from all work years, including works where no
    author is affiliated, so empty edge years still count as observed.
    """
    works = list(works)
    if not works:
        raise EmptyCorpus("no works to index")
    institution_id = normalize_openalex_id(institution_id)
    years: dict[str, set[int]] = {}
    for w in works:
        for a in affiliated_authors(w, institution_id):
            years.setdefault(a, set()).add(w.year)
    span = (min(w.year for w in works), max(w.year for w in works))
    if not years:
        raise EmptyCorpus(f"no authorship lists institution {institution_id}")
    return AuthorIndex({a: sorted(ys) for a, ys in years.items()}, span=span)


def annual_author_set(index: AuthorIndex, year: int) -> AuthorSet:
    window = WindowSpec(str(year), year, year, "annual")
    return AuthorSet(window, frozenset(a for a, ys in index.years.items() if year in ys))


def author_set(index: AuthorIndex, window: WindowSpec) -> AuthorSet:
    lo, hi = window.start_year, window.end_year
    members = []
    for a, ys in index.years.items():
        i = bisect_left(ys, lo)
        if i < len(ys) and ys[i] <= hi:
            members.append(a)
    return AuthorSet(window, frozenset(members))


def cumulative_window_set(index: AuthorIndex, end_year: int, k: int) -> AuthorSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    mode: Mode = "annual" if k == 1 else "cumulative"
    return author_set(index, WindowSpec(str(end_year), end_year - k + 1, end_year, mode))


def window_series(
    span: tuple[int, int], mode: Mode = "cumulative", k: int = 5, stride: int = 1
) -> list[WindowSpec]:
    """Windows of length ``k`` labelled by end year, advancing by ``stride``.

    The first window starts at the span start; windows that would run past the
    span end are dropped. Annual mode forces ``k = 1``.
    """
    start, end = span
    if start > end:
        raise InvalidSpan(f"span {start}-{end} is empty")
    if stride < 1 or k < 1:
        raise InvalidSpan("k and stride must be >= 1")
    if mode == "annual":
        k = 1
    if end - start + 1 < k:
        raise InvalidSpan(f"span {start}-{end} is shorter than window length {k}")
    wmode: Mode = "annual" if k == 1 else "cumulative"
    return [
        WindowSpec(str(hi), hi - k + 1, hi, wmode)
        for hi in range(start + k - 1, end + 1, stride)
    ]


def window_sets(index: AuthorIndex, windows: Iterable[WindowSpec]) -> list[AuthorSet]:
    return [author_set(index, w) for w in windows]
