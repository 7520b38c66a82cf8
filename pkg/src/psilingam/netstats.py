"""Binary directed-network summaries and degree hubs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from psilingam._io import fmt, format_rows


@dataclass(frozen=True)
class NetworkStats:
    density: float
    transitivity: float
    global_efficiency: float
    in_degree: np.ndarray
    out_degree: np.ndarray

    @property
    def sum_degree(self) -> np.ndarray:
        return self.in_degree + self.out_degree

    def to_text(self) -> str:
        return (
            f"nodes: {self.in_degree.size}\n"
            f"edges: {int(self.in_degree.sum())}\n"
            f"density: {fmt(self.density)}\n"
            f"transitivity: {fmt(self.transitivity)}\n"
            f"global_efficiency: {fmt(self.global_efficiency)}\n"
        )


def _adjacency(adj) -> np.ndarray:
    a = np.asarray(adj) != 0
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if np.diag(a).any():
        raise ValueError("adjacency diagonal must be zero")
    return a


def transitivity(adj) -> float:
    """Triangle-to-connected-triple ratio of the symmetrized graph (0 if no triples)."""
    u = _adjacency(adj)
    u = (u | u.T).astype(float)
    deg = u.sum(axis=1)
    triples = float((deg * (deg - 1)).sum())
    if triples == 0:
        return 0.0
    # trace(U^3) counts each triangle 6 times; triples above count each path twice
    return float(np.trace(u @ u @ u) / triples)


def global_efficiency(adj) -> float:
    """Mean inverse directed shortest-path length over ordered pairs (1/inf = 0)."""
    a = _adjacency(adj)
    p = a.shape[0]
    if p < 2:
        return 0.0
    dist = shortest_path(a.astype(float), method="D", directed=True, unweighted=True)
    off = ~np.eye(p, dtype=bool)
    with np.errstate(divide="ignore"):
        inv = 1.0 / dist[off]
    return float(inv.sum() / (p * (p - 1)))


def network_stats(adj) -> NetworkStats:
    a = _adjacency(adj)
    p = a.shape[0]
    return NetworkStats(
        density=float(a.sum() / (p * (p - 1))),
        transitivity=transitivity(a),
        global_efficiency=global_efficiency(a),
        in_degree=a.sum(axis=0).astype(int),
        out_degree=a.sum(axis=1).astype(int),
    )


@dataclass(frozen=True)
class HubReport:
    in_hubs: list[tuple[int, int]]
    out_hubs: list[tuple[int, int]]
    sum_hubs: list[tuple[int, int]]

    def hub_type(self, node: int) -> str:
        for name, hubs in (("in", self.in_hubs), ("out", self.out_hubs), ("sum", self.sum_hubs)):
            if any(k == node for k, _ in hubs):
                return name
        return "-"


def hub_threshold(deg: np.ndarray) -> float:
    """mean + 2 sd (sample sd); infinite when the degrees do not vary."""
    deg = np.asarray(deg, dtype=float)
    sd = deg.std(ddof=1)
    return float(deg.mean() + 2 * sd) if sd > 0 else np.inf


def detect_hubs(adj) -> HubReport:
    a = _adjacency(adj)
    if a.shape[0] < 3:
        raise ValueError("hub detection needs at least 3 nodes")
    ind, outd = a.sum(axis=0), a.sum(axis=1)
    sumd = ind + outd

    def pick(deg):
        thr = hub_threshold(deg)
        return [(int(k), int(deg[k])) for k in np.flatnonzero(deg >= thr)]

    in_hubs, out_hubs = pick(ind), pick(outd)
    taken = {k for k, _ in in_hubs} | {k for k, _ in out_hubs}
    sum_hubs = [(k, d) for k, d in pick(sumd) if k not in taken]
    return HubReport(in_hubs, out_hubs, sum_hubs)


def node_table(stats: NetworkStats, hubs: HubReport, labels: Sequence[str]) -> str:
    rows = [("node", "label", "in_deg", "out_deg", "sum_deg", "hub_type")]
    for k, label in enumerate(labels):
        rows.append(
            (k, label, stats.in_degree[k], stats.out_degree[k], stats.sum_degree[k], hubs.hub_type(k))
        )
    return format_rows(rows, "\t")
