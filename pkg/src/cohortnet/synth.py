"""Seeded synthetic corpora and graphs with sidecar ground truth."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidSpec
from .ingest import Authorship, CacheManifest, InstitutionQuery, WorkRecord
from .netbuild import CoauthGraph

SYNTH_INSTITUTION = "I0"


@dataclass(frozen=True)
class Block:
    size: int
    p_in: float
    p_out: float


@dataclass
class SynthSpec:
    """Generator parameters.

    Authors enter uniformly over ``span``, publish in their entry year, then
    survive each further year with probability ``1 - yearly_stop_hazard``.
    In every alive year after entry they publish with ``activity_prob``.
    With ``community_blocks`` (sizes summing to ``n_authors``) each active pair
    co-authors a two-author work with ``p_in`` / ``p_out``; at
    ``reorganization_year`` consecutive pairs of blocks merge.
    """

    n_authors: int = 1000
    span: tuple[int, int] = (2004, 2023)
    yearly_stop_hazard: float = 0.2
    activity_prob: float = 1.0
    works_per_author_year: float = 1.0
    community_blocks: list[Block] = field(default_factory=list)
    reorganization_year: int | None = None
    entry_years: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self):
        self.span = tuple(self.span)
        if self.entry_years is not None:
            self.entry_years = tuple(self.entry_years)
        self.community_blocks = [
            b if isinstance(b, Block) else Block(**b) if isinstance(b, dict) else Block(*b)
            for b in self.community_blocks
        ]
        self.validate()

    def validate(self) -> None:
        if self.n_authors < 1:
            raise InvalidSpec("n_authors must be >= 1")
        if self.span[0] > self.span[1]:
            raise InvalidSpec("empty span")
        for name in ("yearly_stop_hazard", "activity_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1]")
        if self.works_per_author_year < 0:
            raise InvalidSpec("works_per_author_year must be >= 0")
        for b in self.community_blocks:
            if b.size < 1 or not (0 <= b.p_in <= 1 and 0 <= b.p_out <= 1):
                raise InvalidSpec(f"invalid block {b}")
        if self.community_blocks and sum(b.size for b in self.community_blocks) != self.n_authors:
            raise InvalidSpec("block sizes must sum to n_authors")
        if self.entry_years is not None:
            lo, hi = self.entry_years
            if not self.span[0] <= lo <= hi <= self.span[1]:
                raise InvalidSpec("entry_years must lie inside span")

    @classmethod
    def from_dict(cls, data: dict) -> SynthSpec:
        return cls(**data)


def author_id(i: int) -> str:
    return f"A{i:06d}"


def _block_labels(spec: SynthSpec, year: int | None = None) -> list[int]:
    """Block label per author in ``year``; the pre-reorganisation labels when ``year`` is None."""
    labels = []
    for b, blk in enumerate(spec.community_blocks):
        labels.extend([b] * blk.size)
    reorg = spec.reorganization_year
    if year is not None and reorg is not None and year >= reorg:
        labels = [b // 2 for b in labels]
    return labels


def _pair_probs(spec: SynthSpec, year: int, iu: np.ndarray, ju: np.ndarray, act: np.ndarray):
    """Co-authorship probability for each active pair (iu[k], ju[k]) in ``year``.

    Pairs inside the same (possibly merged) block use the ``p_in`` of the first
    author's original block; other pairs use the smaller ``p_out``.
    """
    orig = np.array(_block_labels(spec))[act]
    cur = np.array(_block_labels(spec, year))[act]
    p_in = np.array([b.p_in for b in spec.community_blocks])
    p_out = np.array([b.p_out for b in spec.community_blocks])
    same = cur[iu] == cur[ju]
    return np.where(same, p_in[orig[iu]], np.minimum(p_out[orig[iu]], p_out[orig[ju]]))


def generate_corpus(spec: SynthSpec) -> tuple[list[WorkRecord], dict[str, Any]]:
    """Draw a corpus and its ground truth from ``spec``.

    Returns the works (every authorship affiliated with ``I0``) and a truth
    dict with per-author entry/exit/activity years, per-year block labels and
    planted co-authorship edges.
    """
    rng = np.random.default_rng(spec.seed)
    y0, y1 = spec.span
    n = spec.n_authors
    lo, hi = spec.entry_years or spec.span
    entry = rng.integers(lo, hi + 1, size=n)
    # number of additional years survived after entry (geometric, possibly censored)
    h = spec.yearly_stop_hazard
    if h > 0:
        extra = rng.geometric(h, size=n) - 1
    else:
        extra = np.full(n, np.iinfo(np.int64).max // 4)
    death = entry + np.minimum(extra, y1 - entry + 1)  # last alive year (y1 + 1 = beyond)
    alive_at_end = death > y1
    death = np.minimum(death, y1)

    activity: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        activity[i].append(int(entry[i]))
        span_len = int(death[i] - entry[i])
        if span_len > 0:
            draws = rng.random(span_len) < spec.activity_prob
            activity[i].extend(int(entry[i]) + 1 + int(t) for t in np.flatnonzero(draws))

    active_by_year: dict[int, list[int]] = {y: [] for y in range(y0, y1 + 1)}
    for i, ys in enumerate(activity):
        for y in ys:
            active_by_year[y].append(i)

    works: list[WorkRecord] = []
    planted: dict[str, list[list[str]]] = {}
    blocks_truth: dict[str, list[int]] = {}
    counter = 0

    def emit(year: int, members: Sequence[int]) -> None:
        nonlocal counter
        auths = tuple(Authorship(author_id(m), frozenset({SYNTH_INSTITUTION})) for m in members)
        works.append(WorkRecord(f"W{counter:08d}", year, auths, doi=f"10.5555/synth.{counter}"))
        counter += 1

    for y in range(y0, y1 + 1):
        active = active_by_year[y]
        has_work = np.zeros(n, dtype=bool)
        edges: list[list[str]] = []
        if spec.community_blocks and len(active) >= 2:
            blocks_truth[str(y)] = _block_labels(spec, y)
            act = np.array(active)
            iu, ju = np.triu_indices(len(act), k=1)
            p = _pair_probs(spec, y, iu, ju, act)
            hit = rng.random(len(p)) < p
            for a, b in zip(act[iu[hit]], act[ju[hit]]):
                emit(y, (int(a), int(b)))
                has_work[a] = has_work[b] = True
                edges.append([author_id(int(a)), author_id(int(b))])
        elif spec.community_blocks:
            blocks_truth[str(y)] = _block_labels(spec, y)
        planted[str(y)] = edges
        lam = spec.works_per_author_year
        solo = rng.poisson(lam, size=len(active)) if lam > 0 else np.zeros(len(active), int)
        for a, extra_works in zip(active, solo):
            count = int(extra_works) if spec.community_blocks else max(1, int(extra_works))
            if spec.community_blocks and not has_work[a]:
                count = max(1, count)
            for _ in range(count):
                emit(y, (a,))

    truth = {
        "spec": _spec_dict(spec),
        "institution_id": SYNTH_INSTITUTION,
        "authors": {
            author_id(i): {
                "entry_year": int(entry[i]),
                "last_alive_year": int(death[i]),
                "alive_at_end": bool(alive_at_end[i]),
                "activity_years": activity[i],
                "first_year": activity[i][0],
                "last_year": activity[i][-1],
            }
            for i in range(n)
        },
        "blocks": blocks_truth,
        "planted_edges": planted,
    }
    return works, truth


def _spec_dict(spec: SynthSpec) -> dict:
    d = asdict(spec)
    d["span"] = list(spec.span)
    d["community_blocks"] = [asdict(b) for b in spec.community_blocks]
    if spec.entry_years is not None:
        d["entry_years"] = list(spec.entry_years)
    return d


def check_truth(works: Sequence[WorkRecord], truth: dict) -> list[str]:
    """Cross-check the truth sidecar against the works; returns a list of problems."""
    problems = []
    years: dict[str, set[int]] = {}
    pairs: dict[str, set[tuple[str, str]]] = {}
    inst = truth["institution_id"]
    for w in works:
        affiliated = sorted(a.author_id for a in w.authorships if inst in a.institution_ids)
        for a in affiliated:
            years.setdefault(a, set()).add(w.year)
        for u, v in combinations(affiliated, 2):
            pairs.setdefault(str(w.year), set()).add((u, v))
    authors = truth["authors"]
    for a, rec in authors.items():
        got = sorted(years.get(a, ()))
        if got != rec["activity_years"]:
            problems.append(f"{a}: works give years {got}, truth {rec['activity_years']}")
        if got and (got[0] != rec["first_year"] or got[-1] != rec["last_year"]):
            problems.append(f"{a}: first/last mismatch")
        if not rec["entry_year"] <= rec["last_alive_year"]:
            problems.append(f"{a}: exits before entry")
    for a in years.keys() - authors.keys():
        problems.append(f"{a}: appears in works but not in truth")
    for y, edges in truth["planted_edges"].items():
        planted = {tuple(sorted(e)) for e in edges}
        if planted != pairs.get(y, set()):
            problems.append(f"{y}: planted edges differ from works")
    for y, got in pairs.items():
        if got and y not in truth["planted_edges"]:
            problems.append(f"{y}: co-authorships without planted edges")
    return problems


def write_corpus(works: Sequence[WorkRecord], truth: dict, out_dir: str | os.PathLike) -> Path:
    """Write ``works`` as an NDJSON cache (with manifest) plus ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    y0, y1 = truth["spec"]["span"]
    query = InstitutionQuery(institution_id=truth["institution_id"], year_start=y0, year_end=y1)
    data = out / f"{query.cache_stem}.ndjson"
    with open(data, "w", encoding="utf-8") as fh:
        for w in works:
            fh.write(json.dumps(w.to_raw(), sort_keys=True) + "\n")
    CacheManifest(query, "", len(works), "complete").save(
        out / f"{query.cache_stem}.manifest.json"
    )
    (out / "truth.json").write_text(json.dumps(truth, sort_keys=True), encoding="utf-8")
    return data


def planted_partition_graph(
    blocks: Sequence[int], p_in: float, p_out: float, seed: int = 0
) -> tuple[CoauthGraph, dict[str, int]]:
    """Planted-partition random graph and its block labels."""
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise InvalidSpec("probabilities must lie in [0, 1]")
    if not blocks or any(b < 1 for b in blocks):
        raise InvalidSpec("block sizes must be >= 1")
    rng = np.random.default_rng(seed)
    n = sum(blocks)
    names = [f"n{i:05d}" for i in range(n)]
    truth = {}
    lab = np.repeat(np.arange(len(blocks)), blocks)
    for v, b in zip(names, lab):
        truth[v] = int(b)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(lab[iu] == lab[ju], p_in, p_out)
    hit = rng.random(len(p)) < p
    g = CoauthGraph(nodes=names)
    for a, b in zip(iu[hit], ju[hit]):
        g.add_edge(names[a], names[b])
    return g, truth


def bridged_communities(
    size: int = 50, p_in: float = 0.5, n_bridges: int = 3, seed: int = 0
) -> tuple[CoauthGraph, dict[str, int]]:
    """Two G(size, p_in) communities joined by exactly ``n_bridges`` distinct edges."""
    if n_bridges > size * size:
        raise InvalidSpec("more bridges than cross pairs")
    g, truth = planted_partition_graph([size, size], p_in, 0.0, seed)
    rng = np.random.default_rng([seed, 1])
    names = g.nodes()
    cross = rng.choice(size * size, size=n_bridges, replace=False)
    for c in sorted(int(x) for x in cross):
        g.add_edge(names[c // size], names[size + c % size])
    return g, truth
