"""Directed structure-recovery scores between binary adjacency matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    tpr: float
    fdr: float
    shd: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.tpr <= 1 and 0 <= self.fdr <= 1 and self.shd >= 0):
            raise ValueError(f"metrics out of range: {self}")


def _binary(a) -> np.ndarray:
    return np.asarray(a) != 0


def _check(est, truth):
    est, truth = _binary(est), _binary(truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {truth.shape}")
    if np.diag(est).any() or np.diag(truth).any():
        raise ValueError("adjacency diagonals must be zero")
    return est, truth


def tpr(est, truth) -> float:
    """Fraction of true directed edges present in the estimate (1 for an empty truth)."""
    est, truth = _check(est, truth)
    n_true = truth.sum()
    return 1.0 if n_true == 0 else float((est & truth).sum() / n_true)


def fdr(est, truth) -> float:
    """Fraction of estimated directed edges absent from the truth (0 for an empty estimate)."""
    est, truth = _check(est, truth)
    n_est = est.sum()
    return 0.0 if n_est == 0 else float((est & ~truth).sum() / n_est)


def shd(est, truth) -> int:
    """Structural Hamming distance; a reversed edge counts as a single flip."""
    est, truth = _check(est, truth)
    for name, a in (("estimate", est), ("truth", truth)):
        if (a & a.T).any():
            raise ValueError(f"not a DAG adjacency: {name} has edges in both directions")
    iu = np.triu_indices(est.shape[0], 1)
    se, st = (est | est.T)[iu], (truth | truth.T)[iu]
    mismatch = int((se != st).sum())
    flips = int((se & st & (est[iu] != truth[iu])).sum())
    return mismatch + flips


def score(est, truth, **meta) -> MetricsReport:
    return MetricsReport(tpr(est, truth), fdr(est, truth), shd(est, truth), dict(meta))
