"""Edge priors from screened partial correlations.

The undirected conditional-dependence graph contains the moral graph, which in
turn contains the skeleton of the causal DAG. Estimating it generously and
marking its edges as "unknown" (-1) leaves every other pair forbidden (0) for
the ordering and regression steps.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import false_discovery_control, norm

from psilingam._io import format_rows, write_text_atomic
from psilingam.dataset import DataMatrix
from psilingam.errors import DataError, DegeneracyWarning, NumericalError
from psilingam.gaussianize import nonparanormal_transform
from psilingam.graphs import is_acyclic

log = logging.getLogger(__name__)

# relative eigenvalue floor of a conditioning correlation block
_DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class PsiScores:
    values: np.ndarray
    cond_sets: dict[tuple[int, int], tuple[int, ...]]
    degenerate: tuple[tuple[int, int], ...] = ()

    def cond_size(self, i: int, j: int) -> int:
        return len(self.cond_sets[(min(i, j), max(i, j))])


@dataclass(frozen=True)
class EdgeSet:
    """Unordered node pairs, stored as sorted ``(i, j)`` tuples with ``i < j``."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        norm_pairs = set()
        for i, j in self.pairs:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop ({i}, {i}) in edge set")
            norm_pairs.add((min(i, j), max(i, j)))
        object.__setattr__(self, "pairs", tuple(sorted(norm_pairs)))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        i, j = pair
        return (min(i, j), max(i, j)) in self.pairs

    def to_tsv(self, labels: Sequence[str]) -> str:
        return format_rows(((labels[i], labels[j]) for i, j in self.pairs), "\t")


@dataclass(frozen=True)
class PriorMatrix:
    """Edge knowledge: 0 = no edge i->j, 1 = edge i->j required, -1 = unknown."""

    values: np.ndarray

    def __post_init__(self):
        a = np.array(self.values)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"prior must be square, got shape {a.shape}")
        if not np.isin(a, (-1, 0, 1)).all():
            raise ValueError("prior entries must be 0, 1 or -1")
        if np.any(np.diag(a) != 0):
            raise ValueError("prior diagonal must be zero")
        a = a.astype(np.int8)
        a.setflags(write=False)
        object.__setattr__(self, "values", a)
        if not is_acyclic(a == 1):
            raise ValueError("required edges (entries equal to 1) contain a directed cycle")

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @classmethod
    def uninformative(cls, p: int) -> "PriorMatrix":
        a = -np.ones((p, p), dtype=np.int8)
        np.fill_diagonal(a, 0)
        return cls(a)

    def admissible(self) -> np.ndarray:
        """Symmetric mask of pairs the prior leaves open in at least one direction."""
        a = self.values != 0
        return a | a.T

    def to_csv(self) -> str:
        return format_rows(self.values.tolist(), ",")

    @classmethod
    def from_csv(cls, path) -> "PriorMatrix":
        rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        try:
            a = np.array([[int(c) for c in ln.split(",")] for ln in rows])
        except ValueError as exc:
            raise DataError(f"{path}: prior matrix must hold integers ({exc})") from None
        try:
            return cls(a)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None


def _partial_corr_cov(cov: np.ndarray, idx: Sequence[int]) -> float:
    """Partial correlation of idx[0], idx[1] given idx[2:] from a covariance matrix."""
    sub = cov[np.ix_(idx, idx)]
    d = np.sqrt(np.diag(sub))
    corr = sub / np.outer(d, d)
    if len(idx) == 2:
        return float(np.clip(corr[0, 1], -1.0, 1.0))
    w, v = np.linalg.eigh(corr)
    if w[0] <= _DEGENERACY_TOL * w[-1]:
        raise NumericalError("degenerate conditioning set")
    # only the leading 2x2 block of the inverse is needed
    v2 = v[:2] / np.sqrt(w)
    omega = v2 @ v2.T
    r = -omega[0, 1] / math.sqrt(omega[0, 0] * omega[1, 1])
    return float(np.clip(r, -1.0, 1.0))


def partial_corr(data: DataMatrix, i: int, j: int, cond: Iterable[int] = ()) -> float:
    """Sample partial correlation of columns i and j given the columns in ``cond``.

    Computed as ``-W[i,j] / sqrt(W[i,i] W[j,j])`` with W the inverse sample
    covariance of the involved columns. Raises NumericalError when that
    covariance block is (numerically) singular.
    """
    cond = tuple(int(k) for k in cond)
    if i == j:
        raise ValueError("partial correlation needs two distinct variables")
    if i in cond or j in cond:
        raise ValueError("conditioning set must exclude i and j")
    if len(cond) + 2 > data.n - 1:
        raise NumericalError("degenerate conditioning set (too large for sample size)")
    idx = (i, j) + cond
    cov = np.cov(data.values[:, idx], rowvar=False)
    return _partial_corr_cov(cov, range(len(idx)))


def _fisher_pvalues(r: np.ndarray, dof: np.ndarray | float) -> np.ndarray:
    r = np.clip(r, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        z = np.arctanh(np.abs(r)) * np.sqrt(dof)
    return 2.0 * norm.sf(z)


def neighborhood_cap(n: int, p: int) -> int:
    return min(int(n // math.log(n)), p - 1)


def correlation_screen(data: DataMatrix, alpha1: float = 0.05) -> list[tuple[int, ...]]:
    """Marginal-correlation neighborhoods.

    Node j enters the neighborhood of i when their Pearson correlation is
    significant under a Fisher z-test at ``alpha1``; each neighborhood keeps at
    most ``min(floor(n / log n), p - 1)`` members, strongest first.
    """
    n, p = data.n, data.p
    r = np.corrcoef(data.values, rowvar=False)
    np.fill_diagonal(r, 0.0)
    pvals = _fisher_pvalues(r, n - 3)
    cap = neighborhood_cap(n, p)
    out = []
    for i in range(p):
        cand = np.flatnonzero((pvals[i] <= alpha1) & (np.arange(p) != i))
        order = np.argsort(-np.abs(r[i, cand]), kind="stable")
        out.append(tuple(sorted(int(k) for k in cand[order[:cap]])))
    return out


def psi_scores(data: DataMatrix, neighborhoods: Sequence[Iterable[int]]) -> PsiScores:
    """Pairwise partial correlations conditioned on the union of both neighborhoods."""
    p = data.p
    cov = np.cov(data.values, rowvar=False)
    nb = [set(s) for s in neighborhoods]
    values = np.zeros((p, p))
    cond_sets = {}
    degenerate = []
    for i, j in combinations(range(p), 2):
        cond = tuple(sorted((nb[i] | nb[j]) - {i, j}))
        cond_sets[(i, j)] = cond
        if len(cond) + 2 > data.n - 1:
            degenerate.append((i, j))
            continue
        try:
            values[i, j] = values[j, i] = _partial_corr_cov(cov, (i, j) + cond)
        except NumericalError:
            degenerate.append((i, j))
    if degenerate:
        warnings.warn(
            f"{len(degenerate)} pair(s) had a degenerate conditioning set; scored 0",
            DegeneracyWarning,
            stacklevel=2,
        )
    return PsiScores(values, cond_sets, tuple(degenerate))


def psi_edge_test(scores: PsiScores, n: int, alpha2: float = 0.2) -> EdgeSet:
    """Fisher z-test every score, then Benjamini-Hochberg at ``alpha2``."""
    pairs = sorted(scores.cond_sets)
    if not pairs:
        return EdgeSet()
    sizes = np.array([len(scores.cond_sets[pr]) for pr in pairs])
    if n <= sizes.max() + 3:
        raise DataError(
            f"sample size n={n} too small for conditioning sets of size {sizes.max()}"
        )
    r = np.array([scores.values[pr] for pr in pairs])
    pvals = _fisher_pvalues(r, n - sizes - 3)
    degenerate = set(scores.degenerate)
    pvals[[k for k, pr in enumerate(pairs) if pr in degenerate]] = 1.0
    adjusted = false_discovery_control(pvals, method="bh")
    return EdgeSet(tuple(pr for pr, q in zip(pairs, adjusted) if q <= alpha2))


def build_prior(edges: EdgeSet, p: int) -> PriorMatrix:
    a = np.zeros((p, p), dtype=np.int8)
    for i, j in edges:
        if not (0 <= i < p and 0 <= j < p):
            raise ValueError(f"edge ({i}, {j}) out of range for p={p}")
        a[i, j] = a[j, i] = -1
    return PriorMatrix(a)


@dataclass(frozen=True)
class PriorEstimate:
    prior: PriorMatrix
    edges: EdgeSet
    scores: PsiScores
    neighborhoods: list[tuple[int, ...]] = field(repr=False)


def estimate_prior(data: DataMatrix, alpha1: float = 0.05, alpha2: float = 0.2) -> PriorEstimate:
    """Gaussianize, screen, score and test; returns the -1/0 prior with its evidence."""
    z = nonparanormal_transform(data)
    nbhd = correlation_screen(z, alpha1)
    scores = psi_scores(z, nbhd)
    edges = psi_edge_test(scores, data.n, alpha2)
    log.debug("prior: %d candidate edges out of %d pairs", len(edges), len(scores.cond_sets))
    return PriorEstimate(build_prior(edges, data.p), edges, scores, nbhd)


def save_edges(edges: EdgeSet, labels: Sequence[str], path) -> Path:
    return write_text_atomic(path, edges.to_tsv(labels))
