"""End-to-end run: cache -> index, turnover, survival, networks -> report tables."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import community, corpus, netbuild, resilience, survival, turnover
from .errors import DegenerateSeries, NoCurves, TooShort, ZeroBaseline
from .ingest import WorkRecord, find_cache, load_works
from .report import (
    MetricTable,
    emit_report,
    growth_rate,
    load_staff_series,
    normalize,
    windowed_rate_of_change,
)

log = logging.getLogger(__name__)


@dataclass
class Corpus:
    works: list[WorkRecord]
    institution_id: str
    span: tuple[int, int]
    path: Path

    def index(self) -> corpus.AuthorIndex:
        idx = corpus.build_author_index(self.works, self.institution_id)
        idx.span = self.span
        return idx


def load_corpus(
    cache: str | os.PathLike,
    institution_id: str | None = None,
    span: tuple[int, int] | None = None,
) -> Corpus:
    """Load a cache directory or NDJSON file; the institution defaults to the manifest's."""
    path, manifest = find_cache(cache)
    if institution_id is None:
        if manifest is None or not manifest.query.institution_id:
            raise ValueError(f"{path}: no institution in manifest; pass one explicitly")
        institution_id = manifest.query.institution_id
    works, _ = load_works(path)
    if span is None:
        if manifest is not None:
            span = (manifest.query.year_start, manifest.query.year_end)
        else:
            years = [w.year for w in works]
            span = (min(years), max(years))
    works = [w for w in works if span[0] <= w.year <= span[1]]
    return Corpus(works, institution_id, span, path)


@dataclass
class PipelineConfig:
    cache: str
    out_dir: str
    institution_id: str | None = None
    year_start: int | None = None
    year_end: int | None = None
    k: int = 5
    stride: int = 1
    seed: int = 0
    epsilon: float = resilience.DEFAULT_EPSILON
    criterion: str = "lcc"
    censor_gap: int = survival.DEFAULT_CENSOR_GAP
    activity_mode: str = "in-year"
    cohort_max_lag: int | None = None
    min_cohort_size: int = survival.DEFAULT_MIN_COHORT_SIZE
    max_authors: int = netbuild.DEFAULT_MAX_AUTHORS
    include_external: bool = False
    attack_strategy: str = "betweenness-recompute"
    recompute_interval: int | None = None
    swaps_per_edge: int = resilience.DEFAULT_SWAPS_PER_EDGE
    resolution: float = 1.0
    staff_csv: str | None = None
    comparison_csvs: dict[str, str] = field(default_factory=dict)
    rate_mode: str = "windowed-sum"
    normalization: str = "zscore"

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> PipelineConfig:
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        base = path.parent
        for key in ("cache", "out_dir", "staff_csv"):
            if data.get(key) is not None:
                data[key] = str(base / data[key])
        if data.get("comparison_csvs"):
            data["comparison_csvs"] = {k: str(base / v) for k, v in data["comparison_csvs"].items()}
        return cls(**data)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _fmt_label(y: int) -> str:
    return str(y)


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Compute every figure table and write them with a manifest; returns the manifest."""
    span = None
    if cfg.year_start is not None and cfg.year_end is not None:
        span = (cfg.year_start, cfg.year_end)
    corp = load_corpus(cfg.cache, cfg.institution_id, span)
    idx = corp.index()
    y0, y1 = corp.span
    years = list(range(y0, y1 + 1))
    tables: dict[str, MetricTable] = {}
    inputs = {"cache": corp.path}

    # counts + growth
    by_year = idx.by_year()
    authors = {y: len(by_year.get(y, ())) for y in years}
    staff = None
    if cfg.staff_csv:
        staff = load_staff_series(cfg.staff_csv)
        inputs["staff"] = cfg.staff_csv
    staff_map = staff.as_dict() if staff else {}
    tables["fig1_counts"] = MetricTable.from_columns(
        "fig1_counts", years, {"unique_authors": authors, "staff": staff_map}
    )
    growth_cols: dict[str, dict] = {"authors_growth": _try_growth(authors)}
    growth_cols["staff_growth"] = _try_growth(staff_map) if staff else {}
    for name, path in sorted(cfg.comparison_csvs.items()):
        growth_cols[f"{name}_growth"] = _try_growth(load_staff_series(path).as_dict())
        inputs[f"comparison:{name}"] = path
    tables["fig2_growth"] = MetricTable.from_columns("fig2_growth", years[1:], growth_cols)

    # survival
    curves = survival.all_cohort_curves(idx, cfg.cohort_max_lag, cfg.activity_mode)
    rows = [(c.cohort_year, lag, f, c.cohort_size) for c in curves for lag, f in enumerate(c.fractions)]
    try:
        agg = survival.aggregate_cohorts(curves, cfg.min_cohort_size)
        rows += [("mean", lag, m, n) for lag, m, n in zip(agg.lags, agg.mean, agg.n_cohorts)]
        rows += [("std", lag, s, n) for lag, s, n in zip(agg.lags, agg.std, agg.n_cohorts)]
    except NoCurves:
        log.warning("no cohort reaches min_cohort_size=%d", cfg.min_cohort_size)
    tables["fig3_cohort"] = MetricTable(
        "fig3_cohort", ["cohort_year", "lag", "fraction", "cohort_size"], rows
    )
    km = survival.km_estimate(survival.durations_from_index(idx, y1, cfg.censor_gap))
    tables["fig4_km"] = MetricTable(
        "fig4_km",
        ["t", "survival", "at_risk", "events"],
        list(zip(km.event_times, km.survival, km.at_risk, km.events)),
    )

    # turnover, annual and k-year
    rows = []
    for mode, k in (("annual", 1), (f"{cfg.k}y", cfg.k)):
        if y1 - y0 + 1 < k + 1:
            continue
        wins = corpus.window_series(corp.span, "annual" if k == 1 else "cumulative", k, cfg.stride)
        if len(wins) < 2:
            continue
        for p in turnover.turnover_series(corpus.window_sets(idx, wins)):
            rows.append((mode, p.from_label, p.to_label, p.jaccard, p.churn,
                         p.n_from, p.n_to, p.n_intersection))
    tables["fig5_6_turnover"] = MetricTable(
        "fig5_6_turnover",
        ["mode", "from", "to", "jaccard", "churn", "n_from", "n_to", "n_intersection"],
        rows,
    )

    # networks
    windows = corpus.window_series(corp.span, "cumulative", cfg.k, cfg.stride)
    graphs = [
        netbuild.build_graph(corp.works, w, corp.institution_id, cfg.max_authors, cfg.include_external)
        for w in windows
    ]
    attack_rows, net_rows = [], []
    labels = [w.label for w in windows]
    clustering: dict[str, float] = {}
    assort: dict[str, float | None] = {}
    for w, g in zip(windows, graphs):
        year_seed = cfg.seed * 100003 + w.end_year
        if g.n_nodes == 0:
            net_rows.append([w.label] + [None] * 11)
            continue
        m = netbuild.network_metrics(g, w.label)
        rewired = resilience.rewire_degree_preserving(g, cfg.swaps_per_edge, year_seed)
        er = resilience.random_graph_same_density(g, year_seed) if g.n_nodes >= 2 else None
        thresholds = {}
        for variant, graph in (("original", g), ("rewired", rewired)):
            curve = resilience.targeted_attack(
                graph, cfg.attack_strategy, cfg.recompute_interval, year_seed
            )
            th = resilience.collapse_threshold(curve, cfg.epsilon, w.label, cfg.criterion)
            thresholds[variant] = th.r_star
            for r, ratio in zip(curve.removed_fraction, curve.lcc_ratio):
                attack_rows.append((w.label, variant, r, ratio, th.r_star, th.collapsed))
        clustering[w.label] = m.avg_clustering
        assort[w.label] = m.assortativity
        net_rows.append([
            w.label, m.n_nodes, m.n_edges, m.lcc_size, m.lcc_ratio, m.avg_clustering,
            m.assortativity, netbuild.safe_assortativity(rewired),
            netbuild.safe_assortativity(er) if er else None,
            thresholds["original"], thresholds["rewired"], g.excluded_works,
        ])
    tables["fig7_8_attack"] = MetricTable(
        "fig7_8_attack", ["label", "variant", "r", "lcc_ratio", "r_star", "collapsed"], attack_rows
    )

    staff_rate: dict[str, float] = {}
    if staff is not None:
        try:
            staff_rate = {
                _fmt_label(y): v for y, v in windowed_rate_of_change(staff, cfg.k, cfg.rate_mode)
            }
        except (TooShort, ZeroBaseline) as exc:
            log.warning("staff rate unavailable: %s", exc)
    norm = {
        "clustering_norm": _try_normalize(clustering, labels, cfg.normalization),
        "assortativity_norm": _try_normalize(assort, labels, cfg.normalization),
        "staff_rate_norm": _try_normalize(staff_rate, labels, cfg.normalization),
    }
    net_cols = [
        "label", "n_nodes", "n_edges", "lcc_size", "lcc_ratio", "avg_clustering",
        "assortativity", "assortativity_rewired", "assortativity_er",
        "r_star_original", "r_star_rewired", "excluded_works",
    ]
    full_rows = []
    for row in net_rows:
        lab = row[0]
        full_rows.append(tuple(row) + (staff_rate.get(lab),) + tuple(norm[c].get(lab) for c in norm))
    tables["fig10_13_network"] = MetricTable(
        "fig10_13_network", net_cols + ["staff_rate", *norm], full_rows
    )

    # community stability
    rows = []
    if len(graphs) >= 2:
        for p in community.partition_similarity_series(graphs, cfg.seed, cfg.resolution):
            rows.append((p.from_label, p.to_label, p.n_common, p.nmi, p.ari))
    tables["fig9_community"] = MetricTable(
        "fig9_community", ["from", "to", "n_common", "nmi", "ari"], rows
    )

    config = cfg.as_dict()
    config["resolved_institution_id"] = corp.institution_id
    config["resolved_span"] = list(corp.span)
    return emit_report(tables, cfg.out_dir, config, inputs)


def _try_growth(values: dict[int, float]) -> dict[int, float]:
    if len(values) < 2:
        return {}
    try:
        return dict(growth_rate(sorted(values.items())))
    except ZeroBaseline as exc:
        log.warning("growth rate unavailable: %s", exc)
        return {}


def _try_normalize(values: dict[str, float | None], labels: list[str], method: str) -> dict:
    pts = [(lab, values.get(lab)) for lab in labels if lab in values]
    if not pts:
        return {}
    try:
        return dict(normalize(pts, method))
    except DegenerateSeries:
        return {}
