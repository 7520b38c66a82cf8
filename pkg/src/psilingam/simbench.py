"""Synthetic linear non-Gaussian SEM data and repeated-trial benchmarking.

Seeding: a master seed feeds ``numpy.random.SeedSequence``; ``spawn(reps)``
gives one child per rep and the child's first 63-bit state word is that rep's
seed. A rep seed again goes through ``SeedSequence(rep_seed).spawn(3)`` to
give independent streams for the graph, the weights and the noise. The rep
seed alone therefore reproduces a rep, whatever the execution order.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from psilingam._io import fmt, format_rows
from psilingam.dataset import DataMatrix
from psilingam.graphs import relabel, topological_order
from psilingam.lingam import FitResult, WeightedDag, fit_psi_lingam, threshold_graph
from psilingam.metrics import MetricsReport, score

log = logging.getLogger(__name__)

NOISE_KINDS = ("Exp", "Chisq")


@dataclass(frozen=True)
class BenchmarkConfig:
    p: int = 10
    d: float = 1.0
    n: int = 2000
    noise: str = "Exp"
    reps: int = 10
    seed: int = 0
    alpha1: float = 0.05
    alpha2: float = 0.2

    def __post_init__(self):
        if self.p < 2 or self.n < 3 or self.reps < 1:
            raise ValueError(f"need p >= 2, n >= 3, reps >= 1: {self}")
        if not 0 <= self.d <= self.p - 1:
            raise ValueError(f"degree parameter d must lie in [0, p-1], got {self.d}")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}, got {self.noise!r}")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_dag(p: int, d: float, seed) -> np.ndarray:
    """Erdos-Renyi DAG: each forward pair of a hidden order is an edge w.p. d/(p-1)."""
    if not 0 <= d <= p - 1:
        raise ValueError(f"degree parameter d must lie in [0, p-1], got {d}")
    rng = _rng(seed)
    prob = d / (p - 1) if p > 1 else 0.0
    adj = np.triu(rng.random((p, p)) < prob, 1).astype(int)
    return relabel(adj, rng.permutation(p))


def assign_weights(dag, seed) -> WeightedDag:
    """Weights uniform on (-0.8, -0.3) U (0.3, 0.8) on the support of ``dag``."""
    dag = np.asarray(dag) != 0
    rng = _rng(seed)
    m = int(dag.sum())
    sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    mag = rng.uniform(0.3, 0.8, m)
    B = np.zeros(dag.shape)
    B[dag] = sign * mag
    return WeightedDag(B)


def sample_noise(kind: str, n: int, p: int, seed) -> np.ndarray:
    rng = _rng(seed)
    if kind == "Exp":
        return rng.exponential(1.0, (n, p))
    if kind == "Chisq":
        return rng.chisquare(1, (n, p))
    raise ValueError(f"noise must be one of {NOISE_KINDS}, got {kind!r}")


def generate_data(dag: WeightedDag | np.ndarray, noise: np.ndarray) -> DataMatrix:
    """Solve x = B.T x + e sample-wise by substitution in topological order."""
    B = dag.B if isinstance(dag, WeightedDag) else np.asarray(dag, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.ndim != 2 or noise.shape[1] != B.shape[0]:
        raise ValueError(f"noise shape {noise.shape} does not match {B.shape[0]} variables")
    order = topological_order(B)
    if order is None:
        raise ValueError("cannot generate data from a cyclic graph")
    X = np.zeros_like(noise)
    for j in order:
        pa = np.flatnonzero(B[:, j])
        X[:, j] = noise[:, j] + X[:, pa] @ B[pa, j]
    labels = dag.labels if isinstance(dag, WeightedDag) else None
    return DataMatrix.from_array(X, labels)


def rep_seeds(seed: int, reps: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(reps)
    return [int(c.generate_state(1, np.uint64)[0] >> np.uint64(1)) for c in children]


@dataclass(frozen=True)
class SimulatedRep:
    rep: int
    seed: int
    truth: WeightedDag
    noise: np.ndarray
    data: DataMatrix


def simulate(p: int, d: float, n: int, noise: str, seed: int) -> SimulatedRep:
    s_graph, s_weight, s_noise = np.random.SeedSequence(seed).spawn(3)
    truth = assign_weights(random_dag(p, d, s_graph), s_weight)
    eps = sample_noise(noise, n, p, s_noise)
    return SimulatedRep(0, seed, truth, eps, generate_data(truth, eps))


def iter_reps(config: BenchmarkConfig) -> Iterator[SimulatedRep]:
    for rep, s in enumerate(rep_seeds(config.seed, config.reps)):
        sim = simulate(config.p, config.d, config.n, config.noise, s)
        yield SimulatedRep(rep, s, sim.truth, sim.noise, sim.data)


@dataclass(frozen=True)
class RepResult:
    rep: int
    seed: int
    metrics: MetricsReport
    seconds: float


@dataclass(frozen=True)
class BenchmarkReport:
    config: BenchmarkConfig
    reps: tuple[RepResult, ...]
    summary: dict[str, tuple[float, float]] = field(default_factory=dict)

    def rows(self, with_seconds: bool = True):
        header = ["rep", "seed", "tpr", "fdr", "shd"] + (["seconds"] if with_seconds else [])
        yield header
        for r in self.reps:
            row = [r.rep, r.seed, fmt(r.metrics.tpr), fmt(r.metrics.fdr), r.metrics.shd]
            yield row + ([f"{r.seconds:.6f}"] if with_seconds else [])

    def to_tsv(self, with_seconds: bool = True) -> str:
        return format_rows(self.rows(with_seconds), "\t")

    def to_text(self, with_seconds: bool = True) -> str:
        lines = [f"{k}: {v}" for k, v in asdict(self.config).items()]
        for name, (mean, sd) in self.summary.items():
            if name == "seconds" and not with_seconds:
                continue
            lines.append(f"mean_{name}: {fmt(mean)}")
            lines.append(f"sd_{name}: {fmt(sd)}")
        return "\n".join(lines) + "\n"


def _mean_sd(xs) -> tuple[float, float]:
    xs = [float(x) for x in xs]
    return statistics.fmean(xs), statistics.stdev(xs) if len(xs) > 1 else 0.0


def summarize(config: BenchmarkConfig, results) -> BenchmarkReport:
    results = tuple(sorted(results, key=lambda r: r.rep))
    summary = {
        "tpr": _mean_sd(r.metrics.tpr for r in results),
        "fdr": _mean_sd(r.metrics.fdr for r in results),
        "shd": _mean_sd(r.metrics.shd for r in results),
        "seconds": _mean_sd(r.seconds for r in results),
    }
    return BenchmarkReport(config, results, summary)


def evaluate_rep(config: BenchmarkConfig, sim: SimulatedRep) -> tuple[RepResult, FitResult]:
    t0 = time.perf_counter()
    fit = fit_psi_lingam(sim.data, config.alpha1, config.alpha2)
    seconds = time.perf_counter() - t0
    metrics = score(threshold_graph(fit.dag, 0.0), threshold_graph(sim.truth, 0.0), seed=sim.seed)
    return RepResult(sim.rep, sim.seed, metrics, seconds), fit


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    results = []
    for sim in iter_reps(config):
        try:
            res, _ = evaluate_rep(config, sim)
        except Exception:
            log.error("rep %d (seed %d) failed", sim.rep, sim.seed)
            raise
        log.info("rep %d: tpr=%.3f fdr=%.3f shd=%d", sim.rep, res.metrics.tpr, res.metrics.fdr, res.metrics.shd)
        results.append(res)
    return summarize(config, results)


def simulation_grid(reps: int = 10, seed: int = 0) -> list[BenchmarkConfig]:
    """The n=100 high-dimensional grid: p in {50,100,200}, d in {1,2,4}, both noises."""
    return [
        BenchmarkConfig(p=p, d=d, n=100, noise=noise, reps=reps, seed=seed)
        for noise in NOISE_KINDS
        for p in (50, 100, 200)
        for d in (1, 2, 4)
    ]
