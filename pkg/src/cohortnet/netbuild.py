"""Co-authorship graphs per window and their structural metrics."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from ._kernels import brandes_raw
from .corpus import WindowSpec, affiliated_authors
from .errors import EmptyGraph, ZeroVariance
from .ingest import WorkRecord, normalize_openalex_id

log = logging.getLogger(__name__)

DEFAULT_MAX_AUTHORS = 100


def _key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


class CoauthGraph:
    """Undirected simple graph over author IDs with joint-work edge weights."""

    def __init__(
        self,
        nodes: Iterable[str] = (),
        edges: Iterable[tuple] = (),
        window: WindowSpec | None = None,
    ):
        self.adj: dict[str, set[str]] = {}
        self.weights: dict[tuple[str, str], int] = {}
        self.window = window
        self.excluded_works = 0
        for v in nodes:
            self.add_node(v)
        for e in edges:
            self.add_edge(*e)

    def add_node(self, v: str) -> None:
        self.adj.setdefault(v, set())

    def add_edge(self, u: str, v: str, weight: int = 1) -> None:
        """Add ``weight`` joint works between ``u`` and ``v``; self-loops are ignored."""
        if u == v:
            return
        if weight < 1:
            raise ValueError("edge weight must be >= 1")
        self.adj.setdefault(u, set()).add(v)
        self.adj.setdefault(v, set()).add(u)
        k = _key(u, v)
        self.weights[k] = self.weights.get(k, 0) + weight

    def remove_node(self, v: str) -> None:
        for u in self.adj.pop(v):
            self.adj[u].discard(v)
            del self.weights[_key(u, v)]

    def has_edge(self, u: str, v: str) -> bool:
        return v in self.adj.get(u, ())

    def nodes(self) -> list[str]:
        return sorted(self.adj)

    def edges(self) -> list[tuple[str, str]]:
        return sorted(self.weights)

    def weighted_edges(self) -> Iterator[tuple[str, str, int]]:
        for k in sorted(self.weights):
            yield k[0], k[1], self.weights[k]

    def degree(self, v: str) -> int:
        return len(self.adj[v])

    def degrees(self) -> dict[str, int]:
        return {v: len(nb) for v, nb in self.adj.items()}

    @property
    def n_nodes(self) -> int:
        return len(self.adj)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, v: str) -> bool:
        return v in self.adj

    def copy(self) -> CoauthGraph:
        g = CoauthGraph(window=self.window)
        g.adj = {v: set(nb) for v, nb in self.adj.items()}
        g.weights = dict(self.weights)
        g.excluded_works = self.excluded_works
        return g

    def subgraph(self, nodes: Iterable[str]) -> CoauthGraph:
        keep = set(nodes) & self.adj.keys()
        g = CoauthGraph(nodes=sorted(keep), window=self.window)
        for (u, v), w in self.weights.items():
            if u in keep and v in keep:
                g.add_edge(u, v, w)
        return g

    def to_csr(self) -> tuple[list[str], np.ndarray, np.ndarray]:
        """Sorted node list plus CSR ``indptr``/``indices`` with sorted neighbours."""
        nodes = self.nodes()
        pos = {v: i for i, v in enumerate(nodes)}
        indptr = np.zeros(len(nodes) + 1, dtype=np.int64)
        for i, v in enumerate(nodes):
            indptr[i + 1] = indptr[i] + len(self.adj[v])
        indices = np.empty(int(indptr[-1]), dtype=np.int64)
        for i, v in enumerate(nodes):
            indices[indptr[i]:indptr[i + 1]] = sorted(pos[u] for u in self.adj[v])
        return nodes, indptr, indices

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoauthGraph):
            return NotImplemented
        return self.adj == other.adj and self.weights == other.weights

    def __repr__(self) -> str:
        return f"CoauthGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def build_graph(
    works: Iterable[WorkRecord],
    window: WindowSpec,
    institution_id: str,
    max_authors: int = DEFAULT_MAX_AUTHORS,
    include_external: bool = False,
) -> CoauthGraph:
    """Clique-expand the window's works into a weighted co-authorship graph.

    Nodes are the institution-affiliated authors active in the window (all
    authors with ``include_external``). Works with more than ``max_authors``
    authorships contribute nodes but no edges.
    """
    institution_id = normalize_openalex_id(institution_id)
    g = CoauthGraph(window=window)
    excluded = 0
    for w in works:
        if w.year not in window:
            continue
        members = w.author_ids if include_external else affiliated_authors(w, institution_id)
        for a in members:
            g.add_node(a)
        if len(w.authorships) > max_authors:
            excluded += 1
            continue
        for u, v in combinations(sorted(members), 2):
            g.add_edge(u, v)
    if excluded:
        log.info("window %s: %d works above %d authors skipped for edges",
                 window.label, excluded, max_authors)
    g.excluded_works = excluded
    return g


def connected_components(graph: CoauthGraph) -> list[set[str]]:
    seen: set[str] = set()
    comps = []
    for s in graph.nodes():
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for w in graph.adj[u]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def lcc(graph: CoauthGraph) -> frozenset[str]:
    """Largest connected component; size ties go to the lexicographically smallest node set."""
    if graph.n_nodes == 0:
        raise EmptyGraph("graph has no nodes")
    best = min(connected_components(graph), key=lambda c: (-len(c), sorted(c)))
    return frozenset(best)


def local_triangles(graph: CoauthGraph, v: str) -> int:
    nb = graph.adj[v]
    return sum(len(nb & graph.adj[u]) for u in nb) // 2


def clustering_coefficient(graph: CoauthGraph) -> float:
    """Mean local clustering, with nodes of degree < 2 contributing 0."""
    if graph.n_nodes == 0:
        raise EmptyGraph("graph has no nodes")
    total = 0.0
    for v in graph.nodes():
        k = len(graph.adj[v])
        if k >= 2:
            total += 2.0 * local_triangles(graph, v) / (k * (k - 1))
    return total / graph.n_nodes


def degree_assortativity(graph: CoauthGraph) -> float:
    """Pearson correlation of endpoint degrees over both orientations of every edge.

    Sums are accumulated in exact integer arithmetic, so the result is a single
    correctly rounded division. Raises :class:`ZeroVariance` when undefined.
    """
    if graph.n_edges == 0:
        raise ZeroVariance("graph has no edges")
    deg = graph.degrees()
    m2 = 2 * graph.n_edges
    sx = sxx = sxy = 0
    for u, v in graph.weights:
        a, b = deg[u], deg[v]
        sx += a + b
        sxx += a * a + b * b
        sxy += 2 * a * b
    den = m2 * sxx - sx * sx
    if den == 0:
        raise ZeroVariance("all edge-endpoint degrees are equal")
    return float(Fraction(m2 * sxy - sx * sx, den))


def betweenness(graph: CoauthGraph, normalized: bool = True) -> dict[str, float]:
    """Exact shortest-path betweenness on the unweighted graph.

    Unnormalised values count each unordered endpoint pair once; normalised
    values divide by ``(n-1)(n-2)/2``.
    """
    if graph.n_nodes == 0:
        raise EmptyGraph("graph has no nodes")
    nodes, indptr, indices = graph.to_csr()
    raw = brandes_raw(indptr, indices, np.ones(len(nodes), dtype=np.bool_)) / 2.0
    n = len(nodes)
    if normalized:
        scale = (n - 1) * (n - 2) / 2.0
        raw = raw / scale if scale > 0 else np.zeros(n)
    return {v: float(raw[i]) for i, v in enumerate(nodes)}


@dataclass(frozen=True)
class NetworkMetrics:
    label: str
    n_nodes: int
    n_edges: int
    lcc_size: int
    lcc_ratio: float
    avg_clustering: float
    assortativity: float | None

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
            "lcc_size": self.lcc_size,
            "lcc_ratio": self.lcc_ratio,
            "avg_clustering": self.avg_clustering,
            "assortativity": self.assortativity,
        }


def safe_assortativity(graph: CoauthGraph) -> float | None:
    try:
        return degree_assortativity(graph)
    except ZeroVariance:
        return None


def network_metrics(graph: CoauthGraph, label: str | None = None) -> NetworkMetrics:
    if graph.n_nodes == 0:
        raise EmptyGraph("graph has no nodes")
    if label is None:
        label = graph.window.label if graph.window else ""
    size = len(lcc(graph))
    return NetworkMetrics(
        label=label,
        n_nodes=graph.n_nodes,
        n_edges=graph.n_edges,
        lcc_size=size,
        lcc_ratio=size / graph.n_nodes,
        avg_clustering=clustering_coefficient(graph),
        assortativity=safe_assortativity(graph),
    )


def write_edge_list(graph: CoauthGraph, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "weight"])
        for u, v, wt in graph.weighted_edges():
            w.writerow([u, v, wt])
