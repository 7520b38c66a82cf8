"""Prior-constrained DirectLiNGAM and the full screened-prior fitting pipeline.

Conventions: ``B[i, j]`` is the weight of the edge i -> j, so data follow
``x = B.T @ x + e``. In a causal order, causes come before their effects.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import false_discovery_control, t as t_dist

from psilingam._io import fmt, format_rows, write_text_atomic
from psilingam.dataset import DataMatrix, _is_numeric, default_labels
from psilingam.errors import DataError, DegeneracyWarning, NumericalError
from psilingam.graphs import is_acyclic
from psilingam.prior import EdgeSet, PriorMatrix, estimate_prior

log = logging.getLogger(__name__)

# maximum-entropy negentropy approximation (log cosh and Gaussian-weighted odd terms)
K1 = 79.047
K2 = 7.4129
GAMMA = 0.37457

_COLLINEAR_TOL = 1e-12
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class CausalOrder:
    """Variables listed from most exogenous to most downstream."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(k) for k in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"causal order must be a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    @property
    def position(self) -> np.ndarray:
        """position[i] is the place of variable i in the order."""
        pos = np.empty(len(self.order), dtype=int)
        pos[list(self.order)] = np.arange(len(self.order))
        return pos

    @classmethod
    def from_positions(cls, position: Sequence[int]) -> "CausalOrder":
        return cls(tuple(int(k) for k in np.argsort(position)))


@dataclass(frozen=True)
class WeightedDag:
    B: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {B.shape}")
        if np.any(np.diag(B) != 0):
            raise ValueError("weight matrix diagonal must be zero")
        if not is_acyclic(B):
            raise ValueError("weight matrix support contains a directed cycle")
        labels = tuple(self.labels) or default_labels(B.shape[0])
        if len(labels) != B.shape[0]:
            raise ValueError(f"{len(labels)} labels for {B.shape[0]} nodes")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(self.B[i, j])) for i, j in np.argwhere(self.B != 0)]

    def to_csv(self) -> str:
        rows = [self.labels] + [[fmt(v) for v in row] for row in self.B]
        return format_rows(rows, ",")

    def to_edge_tsv(self) -> str:
        return format_rows(
            ((self.labels[i], self.labels[j], fmt(w)) for i, j, w in self.edges()), "\t"
        )

    def save(self, csv_path, tsv_path=None) -> None:
        write_text_atomic(csv_path, self.to_csv())
        if tsv_path is not None:
            write_text_atomic(tsv_path, self.to_edge_tsv())

    @classmethod
    def load(cls, path) -> "WeightedDag":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        if not lines:
            raise DataError(f"{path}: empty weight file")
        rows = [ln.split(",") for ln in lines]
        labels: tuple[str, ...] = ()
        if not all(_is_numeric(c) for c in rows[0]):
            labels, rows = tuple(c.strip() for c in rows[0]), rows[1:]
        try:
            B = np.array([[float(c) for c in r] for r in rows])
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        try:
            return cls(B, labels)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None


def _logcosh(x):
    return np.logaddexp(x, -x) - np.log(2.0)


def negentropy(w: np.ndarray, axis: int = 0) -> np.ndarray:
    """Negentropy approximation of standardized samples along ``axis``."""
    a = _logcosh(w).mean(axis=axis) - GAMMA
    b = (w * np.exp(-0.5 * w**2)).mean(axis=axis)
    return K1 * a**2 + K2 * b**2


def _standardize(x: np.ndarray) -> np.ndarray:
    x = x - x.mean(axis=0)
    return x / x.std(axis=0)


def pairwise_residual(data: DataMatrix, i: int, j: int) -> np.ndarray:
    """Residual of column i after least-squares regression on column j."""
    if i == j:
        raise ValueError("residual needs two distinct columns")
    return residual(data.values[:, i], data.values[:, j])


def residual(xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
    xjc = xj - xj.mean()
    var = xjc @ xjc
    if not var > 0:
        raise NumericalError("cannot regress on a zero-variance variable")
    return xi - ((xi - xi.mean()) @ xjc / var) * xj


def _pair_diff(us: np.ndarray, vs: np.ndarray, ju, jv) -> np.ndarray:
    """Entropy of the model u -> v minus that of v -> u, columnwise over pairs.

    ``us``/``vs`` are standardized (n x m); ``ju``/``jv`` their negentropies.
    """
    c = (us * vs).mean(axis=0)
    s2 = 1.0 - c**2
    ok = s2 > _COLLINEAR_TOL
    s = np.sqrt(np.where(ok, s2, 1.0))
    # a collinear pair leaves a null residual; its negentropy is that of zeros
    r_vu = np.where(ok, (vs - c * us) / s, 0.0)
    r_uv = np.where(ok, (us - c * vs) / s, 0.0)
    return (jv + negentropy(r_uv)) - (ju + negentropy(r_vu))


def pairwise_dependence(u: np.ndarray, v: np.ndarray) -> float:
    """Evidence against ``u`` being the cause in the pair (u, v).

    Computes the pairwise likelihood ratio between the linear models u -> v and
    v -> u, using the negentropy approximation of each model's entropy (the
    residual of the effect on the cause enters each model). The returned
    value is the squared positive part of that entropy difference: zero when
    u -> v fits at least as well, growing as v -> u becomes the better model.
    Both inputs are standardized internally, so the statistic is invariant to
    location, scale and sign changes of either argument.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be 1-d vectors of equal length")
    if u.size < 10:
        raise ValueError(f"need at least 10 samples, got {u.size}")
    if not (u.std() > 0 and v.std() > 0):
        raise NumericalError("dependence undefined for a constant vector")
    us, vs = _standardize(u)[:, None], _standardize(v)[:, None]
    diff = _pair_diff(us, vs, negentropy(us), negentropy(vs))
    return float(np.maximum(diff, 0.0)[0] ** 2)


def _candidate_scores(X: np.ndarray, remaining: list[int], cand: list[int], adm: np.ndarray) -> np.ndarray:
    """Total dependence score T(j) for each candidate j (lower = more exogenous)."""
    Xs = _standardize(X[:, remaining])
    J = negentropy(Xs)
    k = len(remaining)
    is_cand = np.zeros(k, dtype=bool)
    local = {v: a for a, v in enumerate(remaining)}
    is_cand[[local[j] for j in cand]] = True
    sub = adm[np.ix_(remaining, remaining)]
    a_idx, b_idx = np.nonzero(np.triu(sub, 1))
    keep = is_cand[a_idx] | is_cand[b_idx]
    a_idx, b_idx = a_idx[keep], b_idx[keep]
    total = np.zeros(k)
    step = max(1, _CHUNK_ELEMS // max(1, X.shape[0]))
    for start in range(0, a_idx.size, step):
        a, b = a_idx[start:start + step], b_idx[start:start + step]
        diff = _pair_diff(Xs[:, a], Xs[:, b], J[a], J[b])
        # a as cause is penalized when diff > 0, b as cause when diff < 0
        np.add.at(total, a, np.maximum(diff, 0.0) ** 2)
        np.add.at(total, b, np.minimum(diff, 0.0) ** 2)
    return total[is_cand]


def find_causal_order(data: DataMatrix, prior: PriorMatrix | None = None) -> CausalOrder:
    """Estimate a causal order by repeated extraction of the most exogenous variable.

    Only variables with no required (prior == 1) parent still remaining are
    candidates. A candidate's score sums the pairwise dependence over the
    remaining variables the prior leaves connected to it; pairs forbidden in
    both directions are skipped. The lowest score wins (ties go to the
    lowest index) and every remaining variable is then replaced by its
    residual on the winner.
    """
    p = data.p
    if prior is None:
        prior = PriorMatrix.uninformative(p)
    if prior.p != p:
        raise ValueError(f"prior is {prior.p}x{prior.p} but data has {p} columns")
    required = prior.values == 1
    adm = prior.admissible()
    X = np.array(data.values, dtype=float)
    remaining = list(range(p))
    order: list[int] = []
    while remaining:
        blocked = required[np.ix_(remaining, remaining)].any(axis=0)
        cand = [v for v, b in zip(remaining, blocked) if not b]
        if not cand:
            raise ValueError("prior admits no causal order")
        if len(cand) == 1:
            best = cand[0]
        else:
            scores = _candidate_scores(X, remaining, cand, adm)
            best = cand[int(np.argmin(scores))]
        order.append(best)
        remaining.remove(best)
        linked = [i for i in remaining if adm[best, i]]
        if linked:
            xj = X[:, best] - X[:, best].mean()
            rest = X[:, linked]
            slope = (rest - rest.mean(axis=0)).T @ xj / (xj @ xj)
            X[:, linked] = rest - np.outer(X[:, best], slope)
    return CausalOrder(tuple(order))


def _ols(y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return coef


def _full_rank_parents(Xc: np.ndarray, j: int, parents: list[int], label) -> list[int]:
    parents = list(parents)
    y = Xc[:, j]
    while parents:
        Z = Xc[:, parents]
        _, sv, vt = np.linalg.svd(Z, full_matrices=True)
        tol = sv.max(initial=0.0) * max(Z.shape) * np.finfo(float).eps
        rank = int((sv > tol).sum())
        if rank == len(parents):
            break
        # columns taking part in some linear dependency are the ones that may be dropped
        involved = np.flatnonzero(np.abs(vt[rank:]).max(axis=0) > 1e-8)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.nan_to_num([abs(np.corrcoef(Xc[:, parents[k]], y)[0, 1]) for k in involved])
        drop = parents[int(involved[np.argmin(corr)])]
        warnings.warn(
            f"rank-deficient design for {label(j)}; dropped parent {label(drop)}",
            DegeneracyWarning,
            stacklevel=3,
        )
        parents.remove(drop)
    return parents


def _rss(y: np.ndarray, Z: np.ndarray) -> float:
    if Z.shape[1] == 0:
        return float(y @ y)
    r = y - Z @ _ols(y, Z)
    return float(r @ r)


def _bic_select(y: np.ndarray, Xc: np.ndarray, parents: list[int]) -> list[int]:
    """Backward elimination of parents under BIC = n log(RSS/n) + k log n."""
    n = y.size
    floor = 1e-300 + 1e-24 * float(y @ y)

    def bic(cols):
        return n * np.log(max(_rss(y, Xc[:, cols]), floor) / n) + len(cols) * np.log(n)

    current = list(parents)
    best = bic(current)
    while current:
        trials = [(bic(current[:k] + current[k + 1:]), k) for k in range(len(current))]
        score, k = min(trials)
        if score >= best:
            break
        best = score
        del current[k]
    return current


def _coef_pvalues(y: np.ndarray, Z: np.ndarray, coef: np.ndarray) -> np.ndarray:
    n, k = Z.shape
    dof = n - k - 1
    if dof <= 0:
        return np.ones(k)
    rss = float(((y - Z @ coef) ** 2).sum())
    cov = rss / dof * np.linalg.inv(Z.T @ Z)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, coef / se, np.inf)
    return 2.0 * t_dist.sf(np.abs(tstat), dof)


def estimate_weights(
    data: DataMatrix,
    order: CausalOrder,
    prior: PriorMatrix | None = None,
    weight_alpha: float | None = None,
    selection: str = "bic",
) -> WeightedDag:
    """Least-squares edge weights restricted to earlier-in-order, prior-allowed parents.

    ``selection="bic"`` prunes each node's allowed parents by backward
    elimination under BIC before the final least-squares fit; ``"none"``
    regresses on every allowed parent. With ``weight_alpha`` set, coefficients are t-tested, Benjamini-Hochberg
    adjusted across the whole graph, and those not significant are removed
    before a final refit.
    """
    p = data.p
    if len(order) != p:
        raise ValueError("order length does not match the number of variables")
    if prior is None:
        prior = PriorMatrix.uninformative(p)
    Xc = data.values - data.values.mean(axis=0)
    pos = order.position
    label = lambda k: data.labels[k]  # noqa: E731
    parents = {}
    for j in range(p):
        allowed = [i for i in range(p) if pos[i] < pos[j] and prior.values[i, j] != 0]
        parents[j] = _full_rank_parents(Xc, j, allowed, label)
        if selection == "bic" and parents[j]:
            parents[j] = _bic_select(Xc[:, j], Xc, parents[j])
        elif selection not in ("bic", "none"):
            raise ValueError(f"unknown selection rule {selection!r}")

    if weight_alpha is not None:
        tested = []
        for j, pa in parents.items():
            if pa:
                Z = Xc[:, pa]
                pv = _coef_pvalues(Xc[:, j], Z, _ols(Xc[:, j], Z))
                tested += [(i, j, q) for i, q in zip(pa, pv)]
        if tested:
            adj = false_discovery_control([q for *_, q in tested], method="bh")
            kept = {(i, j) for (i, j, _), q in zip(tested, adj) if q <= weight_alpha}
            parents = {j: [i for i in pa if (i, j) in kept] for j, pa in parents.items()}

    B = np.zeros((p, p))
    for j, pa in parents.items():
        if pa:
            B[pa, j] = _ols(Xc[:, j], Xc[:, pa])
    return WeightedDag(B, data.labels)


@dataclass(frozen=True)
class FitResult:
    dag: WeightedDag
    order: CausalOrder
    prior: PriorMatrix
    edges: EdgeSet | None
    timings: dict[str, float] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def diagnostics(self, with_timings: bool = False) -> dict[str, object]:
        info: dict[str, object] = {
            "p": self.dag.p,
            "prior_edges": len(self.edges) if self.edges is not None else "user-supplied",
            "prior_admissible_pairs": int(np.triu(self.prior.admissible(), 1).sum()),
            "estimated_edges": int((self.dag.B != 0).sum()),
            "order": " ".join(self.dag.labels[k] for k in self.order),
            "warnings": len(self.warnings),
        }
        for k, w in enumerate(self.warnings):
            info[f"warning_{k + 1}"] = w
        if with_timings:
            info.update({f"seconds_{k}": f"{v:.6f}" for k, v in self.timings.items()})
        return info

    def report(self, with_timings: bool = False) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.diagnostics(with_timings).items())


def fit_psi_lingam(
    data: DataMatrix,
    alpha1: float = 0.05,
    alpha2: float = 0.2,
    prior: PriorMatrix | None = None,
    weight_alpha: float | None = None,
    selection: str = "bic",
) -> FitResult:
    """Screened-prior LiNGAM fit.

    The prior is estimated on nonparanormal-transformed data (unless one is
    given); the causal order and the weights are estimated on the original
    data, whose non-Gaussianity identifies the directions.
    """
    timings = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegeneracyWarning)
        t0 = time.perf_counter()
        edges = None
        if prior is None:
            est = estimate_prior(data, alpha1, alpha2)
            prior, edges = est.prior, est.edges
        t1 = time.perf_counter()
        order = find_causal_order(data, prior)
        t2 = time.perf_counter()
        dag = estimate_weights(data, order, prior, weight_alpha, selection)
        t3 = time.perf_counter()
    timings.update(prior=t1 - t0, order=t2 - t1, weights=t3 - t2, total=t3 - t0)
    msgs = []
    for w in caught:
        if issubclass(w.category, DegeneracyWarning):
            msgs.append(str(w.message))
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    for m in msgs:
        log.warning(m)
    return FitResult(dag, order, prior, edges, timings, tuple(msgs))


def threshold_graph(dag: WeightedDag | np.ndarray, tau: float = 0.0) -> np.ndarray:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    B = dag.B if isinstance(dag, WeightedDag) else np.asarray(dag)
    return (np.abs(B) > tau).astype(int)
