"""Louvain-style community detection and partition comparison (NMI / ARI)."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Mapping, Sequence

from .errors import EmptyGraph, NodeSetMismatch, TooFewWindows, UncoveredNode
from .netbuild import CoauthGraph

NMIAverage = Literal["arithmetic", "geometric", "max", "min"]
MIN_COMMON_NODES = 10
_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class Partition:
    labels: dict[str, int]
    modularity: float = 0.0
    window_label: str = ""
    seed: int | None = None

    @property
    def n_communities(self) -> int:
        return len(set(self.labels.values()))

    def communities(self) -> list[frozenset[str]]:
        groups: dict[int, set[str]] = {}
        for v, c in self.labels.items():
            groups.setdefault(c, set()).add(v)
        return [frozenset(groups[c]) for c in sorted(groups)]

    def restrict(self, nodes) -> Partition:
        keep = set(nodes)
        return Partition(
            {v: c for v, c in self.labels.items() if v in keep},
            self.modularity, self.window_label, self.seed,
        )


PartitionLike = Partition | Mapping[str, int]


def _labels(p: PartitionLike) -> Mapping[str, int]:
    return p.labels if isinstance(p, Partition) else p


def _relabel(labels: Mapping[str, int]) -> dict[str, int]:
    """Contiguous labels from 0 in order of first appearance over sorted nodes."""
    seen: dict[int, int] = {}
    out = {}
    for v in sorted(labels):
        out[v] = seen.setdefault(labels[v], len(seen))
    return out


def modularity(graph: CoauthGraph, partition: PartitionLike, resolution: float = 1.0) -> float:
    """Newman modularity of an unweighted graph; 0 for a graph without edges."""
    labels = _labels(partition)
    missing = [v for v in graph.adj if v not in labels]
    if missing:
        raise UncoveredNode(f"{len(missing)} nodes lack a community, e.g. {sorted(missing)[0]!r}")
    m = graph.n_edges
    if m == 0:
        return 0.0
    intra: Counter = Counter()
    deg: Counter = Counter()
    for u, v in graph.weights:
        if labels[u] == labels[v]:
            intra[labels[u]] += 1
    for v, nb in graph.adj.items():
        deg[labels[v]] += len(nb)
    q = 0.0
    for c in sorted(deg):
        q += intra[c] / m - resolution * (deg[c] / (2.0 * m)) ** 2
    return q


def _one_level(adj, loops, total_w, resolution, rng):
    n = len(adj)
    strength = [sum(nb.values()) + 2.0 * loops[i] for i, nb in enumerate(adj)]
    comm = list(range(n))
    tot = strength[:]
    order = list(range(n))
    rng.shuffle(order)
    two_m = 2.0 * total_w
    improved = False
    moved = True
    while moved:
        moved = False
        for i in order:
            ki = strength[i]
            old = comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                links[comm[j]] = links.get(comm[j], 0.0) + w
            tot[old] -= ki
            best = old
            best_gain = links.get(old, 0.0) - resolution * tot[old] * ki / two_m
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / two_m
                if gain > best_gain + _GAIN_TOL:
                    best, best_gain = c, gain
            tot[best] += ki
            if best != old:
                comm[i] = best
                moved = improved = True
    return comm, improved


def _aggregate(adj, loops, comm):
    ids: dict[int, int] = {}
    for c in comm:
        ids.setdefault(c, len(ids))
    k = len(ids)
    new_adj: list[dict[int, float]] = [dict() for _ in range(k)]
    new_loops = [0.0] * k
    for i, nb in enumerate(adj):
        ci = ids[comm[i]]
        new_loops[ci] += loops[i]
        for j, w in nb.items():
            if j <= i:
                continue
            cj = ids[comm[j]]
            if ci == cj:
                new_loops[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
                new_adj[cj][ci] = new_adj[cj].get(ci, 0.0) + w
    return new_adj, new_loops, [ids[c] for c in comm]


def detect_communities(
    graph: CoauthGraph, seed: int = 0, resolution: float = 1.0, label: str | None = None
) -> Partition:
    """Greedy multi-level modularity maximisation (Louvain).

    Node visitation order at every level is a permutation drawn from ``seed``,
    and candidate communities are scanned in index order, so the result is a
    pure function of ``(graph, seed, resolution)``.
    """
    nodes = graph.nodes()
    if not nodes:
        raise EmptyGraph("graph has no nodes")
    pos = {v: i for i, v in enumerate(nodes)}
    adj: list[dict[int, float]] = [dict() for _ in nodes]
    for u, v in graph.edges():
        adj[pos[u]][pos[v]] = 1.0
        adj[pos[v]][pos[u]] = 1.0
    loops = [0.0] * len(nodes)
    membership = list(range(len(nodes)))
    rng = random.Random(seed)
    total_w = float(graph.n_edges)
    if total_w > 0:
        while True:
            comm, improved = _one_level(adj, loops, total_w, resolution, rng)
            if not improved:
                break
            adj, loops, comm = _aggregate(adj, loops, comm)
            membership = [comm[c] for c in membership]
            if len(adj) == 1:
                break
    labels = _relabel({v: membership[i] for i, v in enumerate(nodes)})
    if label is None:
        label = graph.window.label if graph.window else ""
    return Partition(labels, modularity(graph, labels, resolution), label, seed)


def _check_same_nodes(a: Mapping[str, int], b: Mapping[str, int]) -> None:
    if a.keys() != b.keys():
        raise NodeSetMismatch(
            f"partitions cover different node sets ({len(a)} vs {len(b)} nodes)"
        )


def _entropy(counts, n: int) -> float:
    return -math.fsum((c / n) * math.log(c / n) for c in counts if c)


def nmi(p1: PartitionLike, p2: PartitionLike, average: NMIAverage = "arithmetic") -> float:
    """Mutual information normalised by the chosen mean of the two entropies.

    Two zero-entropy partitions (one community each) count as identical and
    give 1.0.
    """
    a, b = _labels(p1), _labels(p2)
    _check_same_nodes(a, b)
    n = len(a)
    if n == 0:
        raise NodeSetMismatch("partitions are empty")
    ca = Counter(a.values())
    cb = Counter(b.values())
    joint = Counter((a[v], b[v]) for v in a)
    ha, hb = _entropy(ca.values(), n), _entropy(cb.values(), n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    mi = math.fsum(
        (nij / n) * math.log(n * nij / (ca[i] * cb[j])) for (i, j), nij in joint.items()
    )
    if average == "arithmetic":
        denom = (ha + hb) / 2.0
    elif average == "geometric":
        denom = math.sqrt(ha * hb)
    elif average == "max":
        denom = max(ha, hb)
    elif average == "min":
        denom = min(ha, hb)
    else:
        raise ValueError(f"unknown NMI normalisation {average!r}")
    if denom == 0.0:
        return 0.0
    return min(1.0, max(0.0, mi / denom))


def _pairs(x: int) -> int:
    return x * (x - 1) // 2


def ari(p1: PartitionLike, p2: PartitionLike) -> float:
    """Adjusted Rand index from the pair-counting contingency table.

    Computed in exact rational arithmetic; when the chance-corrected range is
    zero (both partitions trivial in the same way) the partitions agree and
    1.0 is returned.
    """
    a, b = _labels(p1), _labels(p2)
    _check_same_nodes(a, b)
    n = len(a)
    joint = Counter((a[v], b[v]) for v in a)
    index = sum(_pairs(c) for c in joint.values())
    sum_a = sum(_pairs(c) for c in Counter(a.values()).values())
    sum_b = sum(_pairs(c) for c in Counter(b.values()).values())
    total = _pairs(n)
    if total == 0:
        return 1.0
    expected = Fraction(sum_a * sum_b, total)
    max_index = Fraction(sum_a + sum_b, 2)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


@dataclass(frozen=True)
class SimilarityPoint:
    from_label: str
    to_label: str
    n_common: int
    nmi: float | None
    ari: float | None


def partition_similarity_series(
    graphs: Sequence[CoauthGraph],
    seed: int = 0,
    resolution: float = 1.0,
    min_common: int = MIN_COMMON_NODES,
    partitions: Sequence[Partition] | None = None,
) -> list[SimilarityPoint]:
    """NMI and ARI between independently detected partitions of consecutive graphs.

    Each pair is compared on the nodes the two graphs share; pairs sharing
    fewer than ``min_common`` nodes yield ``None`` metrics.
    """
    if len(graphs) < 2:
        raise TooFewWindows("need at least two graphs")
    if partitions is None:
        partitions = [
            detect_communities(g, seed, resolution) if g.n_nodes else Partition({}, 0.0, "", seed)
            for g in graphs
        ]
    out = []
    for (g1, p1), (g2, p2) in zip(zip(graphs, partitions), zip(graphs[1:], partitions[1:])):
        common = g1.adj.keys() & g2.adj.keys()
        l1 = g1.window.label if g1.window else ""
        l2 = g2.window.label if g2.window else ""
        if len(common) < min_common:
            out.append(SimilarityPoint(l1, l2, len(common), None, None))
            continue
        r1, r2 = p1.restrict(common), p2.restrict(common)
        out.append(SimilarityPoint(l1, l2, len(common), nmi(r1, r2), ari(r1, r2)))
    return out
