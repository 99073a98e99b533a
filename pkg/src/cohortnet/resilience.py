"""Targeted-attack percolation, collapse thresholds and null-model graphs."""

from __future__ import annotations

import math
import random
from bisect import bisect_right, insort
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Literal, Sequence

import numpy as np

from ._kernels import brandes_raw
from .errors import EmptyGraph, TooFewNodes
from .netbuild import CoauthGraph

Strategy = Literal["betweenness-recompute", "betweenness-static", "random"]
STRATEGY_ALIASES = {
    "bc": "betweenness-recompute",
    "bc-static": "betweenness-static",
    "random": "random",
}
DEFAULT_EPSILON = 0.05
DEFAULT_SWAPS_PER_EDGE = 10
FULL_SAMPLING_LIMIT = 5000


def default_recompute_interval(n_nodes: int) -> int:
    return max(1, math.ceil(n_nodes / 100))


@dataclass
class AttackCurve:
    removed_fraction: list[float]
    lcc_ratio: list[float]
    strategy: str
    recompute_interval: int
    slcc_ratio: list[float] = field(default_factory=list)
    order: list[str] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.removed_fraction)


@dataclass(frozen=True)
class CollapseThreshold:
    r_star: float
    epsilon: float
    label: str = ""
    collapsed: bool = True
    criterion: str = "lcc"


def _sig(x: float) -> float:
    # drop summation-order noise so symmetric nodes tie exactly
    return float(f"{x:.12g}")


def betweenness_order(
    graph: CoauthGraph, recompute_interval: int | None = None
) -> list[str]:
    """Removal order by current betweenness, refreshed every ``recompute_interval`` removals.

    Ties fall back to higher current degree, then smaller node ID.
    """
    nodes, indptr, indices = graph.to_csr()
    n = len(nodes)
    if recompute_interval is None:
        recompute_interval = default_recompute_interval(n)
    if recompute_interval < 1:
        raise ValueError("recompute_interval must be >= 1")
    alive = np.ones(n, dtype=np.bool_)
    order: list[int] = []
    while len(order) < n:
        bc = brandes_raw(indptr, indices, alive)
        live = np.flatnonzero(alive)
        deg = {
            int(i): int(alive[indices[indptr[i]:indptr[i + 1]]].sum()) for i in live
        }
        ranked = sorted(live.tolist(), key=lambda i: (-_sig(bc[i]), -deg[i], nodes[i]))
        for i in ranked[:recompute_interval]:
            alive[i] = False
            order.append(i)
    return [nodes[i] for i in order]


def _component_sizes_reversed(graph: CoauthGraph, order: Sequence[str]) -> tuple[list[int], list[int]]:
    """Largest and second-largest component sizes after removing ``order[:i]``, i = 0..N.

    Nodes are re-inserted in reverse removal order and merged with union-find.
    """
    n = len(order)
    pos = {v: i for i, v in enumerate(order)}
    parent = list(range(n))
    size = [1] * n
    present = [False] * n
    counts: dict[int, int] = {}
    distinct: list[int] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def add_size(s: int) -> None:
        if counts.get(s, 0) == 0:
            insort(distinct, s)
        counts[s] = counts.get(s, 0) + 1

    def drop_size(s: int) -> None:
        counts[s] -= 1
        if counts[s] == 0:
            distinct.pop(bisect_right(distinct, s) - 1)

    largest = [0] * (n + 1)
    second = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        present[i] = True
        add_size(1)
        for u in graph.adj[order[i]]:
            j = pos[u]
            if not present[j]:
                continue
            ri, rj = find(i), find(j)
            if ri == rj:
                continue
            if size[ri] < size[rj]:
                ri, rj = rj, ri
            drop_size(size[ri])
            drop_size(size[rj])
            parent[rj] = ri
            size[ri] += size[rj]
            add_size(size[ri])
        top = distinct[-1]
        largest[i] = top
        second[i] = top if counts[top] > 1 else (distinct[-2] if len(distinct) > 1 else 0)
    return largest, second


def targeted_attack(
    graph: CoauthGraph,
    strategy: str = "betweenness-recompute",
    recompute_interval: int | None = None,
    seed: int = 0,
) -> AttackCurve:
    """Remove nodes one at a time and record the LCC ratio G/N after each removal.

    ``N`` is the original node count throughout. Curves for graphs above
    5000 nodes are sampled every ``ceil(N/1000)`` removals.
    """
    strategy = STRATEGY_ALIASES.get(strategy, strategy)
    n = graph.n_nodes
    if n == 0:
        raise EmptyGraph("cannot attack an empty graph")
    if strategy == "betweenness-recompute":
        interval = default_recompute_interval(n) if recompute_interval is None else recompute_interval
        order = betweenness_order(graph, interval)
    elif strategy == "betweenness-static":
        interval = n
        order = betweenness_order(graph, n)
    elif strategy == "random":
        interval = 0
        order = graph.nodes()
        random.Random(seed).shuffle(order)
    else:
        raise ValueError(f"unknown attack strategy {strategy!r}")

    largest, second = _component_sizes_reversed(graph, order)
    step = 1 if n <= FULL_SAMPLING_LIMIT else math.ceil(n / 1000)
    idx = list(range(0, n + 1, step))
    if idx[-1] != n:
        idx.append(n)
    return AttackCurve(
        removed_fraction=[i / n for i in idx],
        lcc_ratio=[largest[i] / n for i in idx],
        strategy=strategy,
        recompute_interval=interval,
        slcc_ratio=[second[i] / n for i in idx],
        order=order,
    )


def collapse_threshold(
    curve: AttackCurve,
    epsilon: float = DEFAULT_EPSILON,
    label: str = "",
    criterion: str = "lcc",
) -> CollapseThreshold:
    """Smallest sampled r with G/N <= epsilon (1.0 and ``collapsed=False`` if never reached).

    With ``criterion='slcc-peak'`` the threshold is instead the first r where
    the second-largest component peaks.
    """
    if not curve.removed_fraction:
        raise ValueError("empty attack curve")
    if criterion == "slcc-peak":
        if not curve.slcc_ratio:
            raise ValueError("curve carries no second-component sizes")
        peak = max(curve.slcc_ratio)
        i = curve.slcc_ratio.index(peak)
        return CollapseThreshold(curve.removed_fraction[i], epsilon, label, peak > 0, criterion)
    if criterion != "lcc":
        raise ValueError(f"unknown collapse criterion {criterion!r}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    for r, g in zip(curve.removed_fraction, curve.lcc_ratio):
        if g <= epsilon:
            return CollapseThreshold(r, epsilon, label, True, criterion)
    return CollapseThreshold(1.0, epsilon, label, False, criterion)


def rewire_degree_preserving(
    graph: CoauthGraph, swaps_per_edge: int = DEFAULT_SWAPS_PER_EDGE, seed: int = 0
) -> CoauthGraph:
    """Maslov-Sneppen double-edge swaps; every node keeps its degree.

    ``swaps_per_edge * |E|`` swaps are attempted; a swap (a,b),(c,d) ->
    (a,d),(c,b) is rejected if it would create a self-loop or a parallel edge.
    Output edges carry weight 1.
    """
    if swaps_per_edge < 1:
        raise ValueError("swaps_per_edge must be >= 1")
    edges = [list(e) for e in graph.edges()]
    adj = {v: set(nb) for v, nb in graph.adj.items()}
    m = len(edges)
    rng = random.Random(seed)
    if m >= 2:
        for _ in range(swaps_per_edge * m):
            i = rng.randrange(m)
            j = rng.randrange(m - 1)
            if j >= i:
                j += 1
            a, b = edges[i]
            c, d = edges[j]
            if rng.random() < 0.5:
                c, d = d, c
            if a == d or c == b or d in adj[a] or b in adj[c]:
                continue
            adj[a].discard(b); adj[b].discard(a)
            adj[c].discard(d); adj[d].discard(c)
            adj[a].add(d); adj[d].add(a)
            adj[c].add(b); adj[b].add(c)
            edges[i] = [a, d]
            edges[j] = [c, b]
    out = CoauthGraph(nodes=graph.nodes(), window=graph.window)
    for u, v in edges:
        out.add_edge(u, v)
    return out


def random_graph_same_density(graph: CoauthGraph, seed: int = 0) -> CoauthGraph:
    """Uniform G(n, m) graph on the same node labels with the same edge count."""
    nodes = graph.nodes()
    n, m = len(nodes), graph.n_edges
    if n < 2:
        raise TooFewNodes("need at least two nodes")
    total = n * (n - 1) // 2
    # offsets[i] = index of the first pair whose smaller endpoint is i
    offsets = [0, *accumulate(n - 1 - i for i in range(n - 1))]
    out = CoauthGraph(nodes=nodes, window=graph.window)
    for k in sorted(random.Random(seed).sample(range(total), m)):
        i = bisect_right(offsets, k) - 1
        j = i + 1 + (k - offsets[i])
        out.add_edge(nodes[i], nodes[j])
    return out
