"""Compiled graph kernels over CSR adjacency arrays."""

import numpy as np
from numba import njit


@njit(cache=True)
def brandes_raw(indptr, indices, alive):
    """Unnormalised betweenness summed over every alive source node.

    Each unordered pair is counted once per endpoint, so callers halve the
    result for undirected graphs. Dead nodes are skipped entirely.
    """
    n = indptr.shape[0] - 1
    bc = np.zeros(n)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    dist = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        if not alive[s]:
            continue
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = order[head]
            head += 1
            du = dist[u]
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if not alive[w]:
                    continue
                if dist[w] < 0:
                    dist[w] = du + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == du + 1:
                    sigma[w] += sigma[u]
        for i in range(tail - 1, 0, -1):
            w = order[i]
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if alive[v] and dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
        for i in range(tail):
            w = order[i]
            dist[w] = -1
            sigma[w] = 0.0
            delta[w] = 0.0
    return bc
