"""``cohortnet`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path

from . import community, corpus, ingest, netbuild, resilience, survival, synth, turnover
from .errors import CohortnetError
from .pipeline import PipelineConfig, load_corpus, run_pipeline
from .report import format_cell

log = logging.getLogger("cohortnet")

_INSTITUTION_ID = re.compile(r"^(?:https?://openalex\.org/)?I\d+$", re.IGNORECASE)


def _writer(path: str):
    fh = open(path, "w", newline="", encoding="utf-8") if path != "-" else sys.stdout
    return fh, csv.writer(fh, lineterminator="\n")


def _write_rows(path: str, header: list[str], rows) -> None:
    fh, w = _writer(path)
    try:
        w.writerow(header)
        for row in rows:
            w.writerow([format_cell(c) for c in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_ingest(args) -> int:
    client = ingest.OpenAlexClient(mailto=args.mailto)
    if args.fallback_affiliation:
        query = ingest.InstitutionQuery(
            fallback_affiliation_search=args.institution, year_start=args.year_from, year_end=args.year_to
        )
    else:
        inst = args.institution
        if not _INSTITUTION_ID.match(inst):
            inst = ingest.resolve_institution(inst, client)
            log.info("resolved %r to %s", args.institution, inst)
        query = ingest.InstitutionQuery(
            institution_id=inst, year_start=args.year_from, year_end=args.year_to
        )
    n = ingest.fetch_works(query, args.cache, args.mailto, client)
    print(f"{n} records cached for {query.cache_stem}")
    return 0


def _windows(args, span):
    mode = "annual" if args.mode == "annual" else "cumulative"
    return corpus.window_series(span, mode, args.k, args.stride)


def cmd_windows(args) -> int:
    corp = load_corpus(args.cache, args.institution)
    idx = corp.index()
    rows = []
    for s in corpus.window_sets(idx, _windows(args, corp.span)):
        rows.append((s.window.label, s.window.start_year, s.window.end_year, len(s)))
    _write_rows(args.out, ["label", "start", "end", "n_authors"], rows)
    return 0


def _read_windows_csv(path: str) -> list[corpus.WindowSpec]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            start, end = int(row["start"]), int(row["end"])
            out.append(
                corpus.WindowSpec(row["label"], start, end, "annual" if start == end else "cumulative")
            )
    return out


def cmd_turnover(args) -> int:
    src = Path(args.windows)
    if src.suffix.lower() == ".csv":
        if not args.cache:
            raise SystemExit("--cache is required when --windows is a CSV")
        corp = load_corpus(args.cache, args.institution)
        windows = _read_windows_csv(args.windows)
    else:
        corp = load_corpus(src, args.institution)
        windows = _windows(args, corp.span)
    sets = corpus.window_sets(corp.index(), windows)
    rows = [
        (p.from_label, p.to_label, p.jaccard, p.churn, p.n_from, p.n_to, p.n_intersection)
        for p in turnover.turnover_series(sets, reverse=args.reverse)
    ]
    _write_rows(args.out, ["from", "to", "jaccard", "churn", "n_from", "n_to", "n_intersection"], rows)
    return 0


def cmd_survival(args) -> int:
    corp = load_corpus(args.cache, args.institution)
    idx = corp.index()
    if args.mode == "cohort":
        curves = survival.all_cohort_curves(idx, args.max_lag, args.activity_mode)
        rows = [(c.cohort_year, lag, f, c.cohort_size) for c in curves for lag, f in enumerate(c.fractions)]
        _write_rows(args.out, ["cohort_year", "lag", "fraction", "cohort_size"], rows)
    else:
        km = survival.km_estimate(survival.durations_from_index(idx, corp.span[1], args.censor_gap))
        rows = zip(km.event_times, km.survival, km.at_risk, km.events)
        _write_rows(args.out, ["t", "survival", "at_risk", "events"], rows)
    return 0


def _graph_for(args) -> tuple[netbuild.CoauthGraph, str]:
    corp = load_corpus(args.cache, args.institution)
    window = corpus.WindowSpec(
        str(args.year), args.year - args.k + 1, args.year, "annual" if args.k == 1 else "cumulative"
    )
    g = netbuild.build_graph(corp.works, window, corp.institution_id, args.max_authors,
                             args.include_external)
    return g, window.label


def cmd_network(args) -> int:
    g, label = _graph_for(args)
    metrics = netbuild.network_metrics(g, label).as_dict()
    metrics["excluded_works"] = g.excluded_works
    text = json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.edges:
        netbuild.write_edge_list(g, args.edges)
    return 0


def cmd_attack(args) -> int:
    g, label = _graph_for(args)
    if args.null == "rewire":
        g = resilience.rewire_degree_preserving(g, args.swaps_per_edge, args.seed)
    elif args.null == "er":
        g = resilience.random_graph_same_density(g, args.seed)
    curve = resilience.targeted_attack(g, args.strategy, args.recompute_interval, args.seed)
    th = resilience.collapse_threshold(curve, args.eps, label, args.criterion)
    _write_rows(args.out, ["r", "lcc_ratio"], zip(curve.removed_fraction, curve.lcc_ratio))
    state = "" if th.collapsed else " (not collapsed)"
    print(f"{label}: r* = {th.r_star}{state}", file=sys.stderr)
    return 0


def cmd_community(args) -> int:
    corp = load_corpus(args.cache, args.institution)
    windows = corpus.window_series(corp.span, "cumulative" if args.k > 1 else "annual", args.k, args.stride)
    graphs = [
        netbuild.build_graph(corp.works, w, corp.institution_id, args.max_authors, args.include_external)
        for w in windows
    ]
    pts = community.partition_similarity_series(graphs, args.seed, args.resolution)
    _write_rows(
        args.out, ["from", "to", "n_common", "nmi", "ari"],
        [(p.from_label, p.to_label, p.n_common, p.nmi, p.ari) for p in pts],
    )
    return 0


def cmd_synth(args) -> int:
    text = Path(args.spec).read_text(encoding="utf-8")
    if args.spec.endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    spec = synth.SynthSpec.from_dict(data)
    works, truth = synth.generate_corpus(spec)
    path = synth.write_corpus(works, truth, args.out)
    print(f"{len(works)} works written to {path}")
    return 0


def cmd_report(args) -> int:
    manifest = run_pipeline(PipelineConfig.from_file(args.config))
    for entry in manifest["files"]:
        print(f"{entry['file']}: {entry['rows']} rows")
    return 0


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache", required=True)
    p.add_argument("--year", type=int, required=True, help="window end year (label)")
    p.add_argument("--k", type=int, default=5, help="window length in years")
    p.add_argument("--max-authors", type=int, default=netbuild.DEFAULT_MAX_AUTHORS)
    p.add_argument("--include-external", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohortnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--institution", default=None,
                        help="institution ID overriding the cache manifest")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch OpenAlex works into an NDJSON cache")
    p.add_argument("--institution", required=True, help="OpenAlex institution ID or name")
    p.add_argument("--from", dest="year_from", type=int, required=True)
    p.add_argument("--to", dest="year_to", type=int, required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--mailto", default=None)
    p.add_argument("--fallback-affiliation", action="store_true",
                   help="treat --institution as raw affiliation text instead of resolving an ID")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("windows", help="author counts per window")
    p.add_argument("--cache", required=True)
    p.add_argument("--mode", choices=["annual", "cum"], default="cum")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_windows)

    p = sub.add_parser("turnover", help="Jaccard / churn between consecutive windows")
    p.add_argument("--windows", required=True, help="cache dir/file, or a windows CSV")
    p.add_argument("--cache", default=None, help="cache to read when --windows is a CSV")
    p.add_argument("--mode", choices=["annual", "cum"], default="cum")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--reverse", action="store_true", help="gain-side churn")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_turnover)

    p = sub.add_parser("survival", help="cohort survival or Kaplan-Meier")
    p.add_argument("--cache", required=True)
    p.add_argument("--mode", choices=["cohort", "km"], default="km")
    p.add_argument("--censor-gap", type=int, default=survival.DEFAULT_CENSOR_GAP)
    p.add_argument("--activity-mode", choices=["in-year", "at-or-after"], default="in-year")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("network", help="structural metrics of one window graph")
    _graph_args(p)
    p.add_argument("--out", default="-")
    p.add_argument("--edges", default=None, help="also write the edge list CSV here")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("attack", help="attack curve of one window graph")
    _graph_args(p)
    p.add_argument("--strategy", choices=["bc", "bc-static", "random"], default="bc")
    p.add_argument("--null", choices=["none", "rewire", "er"], default="none")
    p.add_argument("--eps", type=float, default=resilience.DEFAULT_EPSILON)
    p.add_argument("--criterion", choices=["lcc", "slcc-peak"], default="lcc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recompute-interval", type=int, default=None)
    p.add_argument("--static", dest="strategy", action="store_const", const="bc-static")
    p.add_argument("--swaps-per-edge", type=int, default=resilience.DEFAULT_SWAPS_PER_EDGE)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("community", help="NMI / ARI between consecutive window partitions")
    p.add_argument("--cache", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--max-authors", type=int, default=netbuild.DEFAULT_MAX_AUTHORS)
    p.add_argument("--include-external", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_community)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CohortnetError as exc:
        print(f"cohortnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
