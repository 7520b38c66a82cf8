"""Group-level edge statistics over stacks of per-subject weight matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import false_discovery_control, t as t_dist

from psilingam._io import fmt, format_rows
from psilingam.errors import DegeneracyWarning
from psilingam.lingam import WeightedDag


@dataclass(frozen=True)
class SubjectStack:
    """k subjects' p x p weight matrices, shape (k, p, p)."""

    weights: np.ndarray
    group: str = ""
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 3 or w.shape[1] != w.shape[2]:
            raise ValueError(f"expected a (k, p, p) stack, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("a subject stack needs at least 2 subjects")
        if np.any(w[:, np.arange(w.shape[1]), np.arange(w.shape[1])] != 0):
            raise ValueError("subject weight matrices must have zero diagonals")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_dags(cls, dags: Sequence[WeightedDag], group: str = "") -> "SubjectStack":
        return cls(np.stack([d.B for d in dags]), group, dags[0].labels if dags else ())

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    def edge_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(k x m) weights over the m = p(p-1) off-diagonal pairs in row-major order."""
        i, j = np.nonzero(~np.eye(self.p, dtype=bool))
        return self.weights[:, i, j], np.stack([i, j], axis=1)


def one_sample_t(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Columnwise t-test of mean zero; zero-variance columns get p=0 (mean != 0) or 1."""
    x = np.asarray(x, dtype=float)
    k = x.shape[0]
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    flat = sd == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = mean / (sd / math.sqrt(k))
    pval = 2.0 * t_dist.sf(np.abs(t), k - 1)
    t = np.where(flat, np.where(mean == 0, 0.0, np.copysign(np.inf, mean)), t)
    pval = np.where(flat, np.where(mean == 0, 1.0, 0.0), pval)
    return t, pval


@dataclass(frozen=True)
class GroupEdge:
    i: int
    j: int
    mean: float
    t: float
    p_adjusted: float


def group_edges(stack: SubjectStack, alpha: float = 0.05, weight_floor: float = 0.1) -> list[GroupEdge]:
    """Edges consistently present across a group's subjects.

    A one-sample t-test per ordered pair; p-values are Benjamini-Hochberg
    adjusted over all p(p-1) pairs, and an edge is kept when its adjusted
    p-value is at most ``alpha`` and its mean weight exceeds ``weight_floor``
    in absolute value.
    """
    if stack.k < 3:
        raise ValueError("group edge test needs at least 3 subjects")
    x, pairs = stack.edge_matrix()
    mean = x.mean(axis=0)
    t, pval = one_sample_t(x)
    n_flat = int(((x.std(axis=0, ddof=1) == 0) & (mean != 0)).sum())
    if n_flat:
        warnings.warn(
            f"{n_flat} edge(s) have identical nonzero weights in every subject; treated as p=0",
            DegeneracyWarning,
            stacklevel=2,
        )
    q = false_discovery_control(pval, method="bh")
    keep = (q <= alpha) & (np.abs(mean) > weight_floor)
    return [
        GroupEdge(int(pairs[m, 0]), int(pairs[m, 1]), float(mean[m]), float(t[m]), float(q[m]))
        for m in np.flatnonzero(keep)
    ]


def welch_t(a, b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Welch two-sample t statistics, Welch-Satterthwaite dof and two-sided p-values.

    ``a`` and ``b`` are (subjects x edges) arrays (1-d inputs are one edge).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each group needs at least 2 subjects")
    na, nb = a.shape[0], b.shape[0]
    va = a.var(axis=0, ddof=1) / na
    vb = b.var(axis=0, ddof=1) / nb
    diff = a.mean(axis=0) - b.mean(axis=0)
    se2 = va + vb
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / np.sqrt(se2)
        dof = se2**2 / (va**2 / (na - 1) + vb**2 / (nb - 1))
    pval = 2.0 * t_dist.sf(np.abs(t), dof)
    flat = se2 == 0
    t = np.where(flat, np.where(diff == 0, 0.0, np.copysign(np.inf, diff)), t)
    pval = np.where(flat, np.where(diff == 0, 1.0, 0.0), pval)
    dof = np.where(flat, np.nan, dof)
    return t, dof, pval


def cohens_d(a, b) -> np.ndarray | float:
    """Standardized mean difference (mean_a - mean_b) / pooled sd.

    A zero pooled sd yields 0 for equal means and a signed infinity otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.shape[0], b.shape[0]
    if na < 2 or nb < 2:
        raise ValueError("each group needs at least 2 subjects")
    pooled = np.sqrt(
        ((na - 1) * a.var(axis=0, ddof=1) + (nb - 1) * b.var(axis=0, ddof=1)) / (na + nb - 2)
    )
    diff = a.mean(axis=0) - b.mean(axis=0)
    flat = pooled == 0
    if np.any(flat & (diff != 0)):
        warnings.warn("zero pooled sd with unequal means; d set to +/-inf", DegeneracyWarning, stacklevel=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(flat, np.where(diff == 0, 0.0, np.copysign(np.inf, diff)), diff / pooled)
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class GroupDiffReport:
    pairs: np.ndarray  # (m, 2) row-major off-diagonal (i, j)
    t: np.ndarray
    p_value: np.ndarray
    d: np.ndarray
    mean_a: np.ndarray
    mean_b: np.ndarray
    labels: tuple[str, ...] = ()

    def to_tsv(self) -> str:
        labels = self.labels or tuple(str(k) for k in range(int(self.pairs.max()) + 1))
        rows = [("i", "j", "label_i", "label_j", "t", "p", "d", "mean_A", "mean_B")]
        for m, (i, j) in enumerate(self.pairs):
            rows.append((
                i, j, labels[i], labels[j], fmt(self.t[m]), fmt(self.p_value[m]),
                fmt(self.d[m]), fmt(self.mean_a[m]), fmt(self.mean_b[m]),
            ))
        return format_rows(rows, "\t")


def compare_groups(a: SubjectStack, b: SubjectStack) -> GroupDiffReport:
    if a.p != b.p:
        raise ValueError(f"group stacks differ in size: {a.p} vs {b.p}")
    xa, pairs = a.edge_matrix()
    xb, _ = b.edge_matrix()
    t, _, pval = welch_t(xa, xb)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        d = cohens_d(xa, xb)
    return GroupDiffReport(pairs, t, pval, np.asarray(d), xa.mean(axis=0), xb.mean(axis=0), a.labels or b.labels)


def select_features(report: GroupDiffReport, d_floor: float = 0.2, alpha: float = 0.05) -> list[tuple[int, int, float]]:
    """Edges with Welch p <= alpha and |d| > d_floor, largest |d| first."""
    keep = np.flatnonzero((report.p_value <= alpha) & (np.abs(report.d) > d_floor))
    order = sorted(keep, key=lambda m: (-abs(report.d[m]), m))
    return [(int(report.pairs[m, 0]), int(report.pairs[m, 1]), float(report.d[m])) for m in order]
