"""Small helpers over dense adjacency matrices (entry [i, j] means i -> j)."""

from graphlib import CycleError, TopologicalSorter

import numpy as np


def topological_order(adj) -> list[int] | None:
    """Return a topological order of the support of ``adj``, or None if cyclic."""
    a = np.asarray(adj) != 0
    p = a.shape[0]
    ts = TopologicalSorter({j: np.flatnonzero(a[:, j]).tolist() for j in range(p)})
    try:
        return [int(k) for k in ts.static_order()]
    except CycleError:
        return None


def is_acyclic(adj) -> bool:
    return topological_order(adj) is not None


def relabel(adj, perm) -> np.ndarray:
    """Move node k to position ``perm[k]``: out[perm[i], perm[j]] = adj[i, j]."""
    adj = np.asarray(adj)
    inv = np.argsort(perm)
    return adj[np.ix_(inv, inv)]
