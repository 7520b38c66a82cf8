"""Acceptance suite: one recorded pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section of the terminal summary. The full-grid criterion dominates the
runtime (several minutes on one core).
"""

import itertools
import statistics
import time

import numpy as np
import pytest
from scipy import stats

from psilingam.dataset import DataMatrix, anderson_darling
from psilingam.gaussianize import nonparanormal_transform
from psilingam.graphs import is_acyclic
from psilingam.groupdiff import SubjectStack, cohens_d, compare_groups, select_features, welch_t
from psilingam.lingam import estimate_weights, find_causal_order, fit_psi_lingam
from psilingam.metrics import fdr, shd, tpr
from psilingam.prior import PriorMatrix, estimate_prior
from psilingam.simbench import (
    BenchmarkConfig,
    evaluate_rep,
    iter_reps,
    simulation_grid,
    run_benchmark,
    simulate,
    summarize,
)

from conftest import record_criterion

pytestmark = pytest.mark.slow


def check(number, passed, detail):
    record_criterion(number, bool(passed), detail)
    assert passed, detail


def test_criterion_1_consistency_large_n():
    t0 = time.perf_counter()
    rep = run_benchmark(BenchmarkConfig(p=10, d=1, n=2000, noise="Exp", reps=10, seed=0))
    secs = time.perf_counter() - t0
    m = {k: rep.summary[k][0] for k in ("tpr", "fdr", "shd")}
    ok = m["tpr"] >= 0.90 and m["fdr"] <= 0.10 and m["shd"] <= 2 and secs < 120
    check(1, ok, f"TPR {m['tpr']:.3f} (>=0.90)  FDR {m['fdr']:.3f} (<=0.10)  "
                 f"SHD {m['shd']:.2f} (<=2)  {secs:.1f}s (<120s)")


@pytest.fixture(scope="module")
def grid_runs():
    """Every simulation-grid scenario, run once, with fits kept for invariant checks."""
    runs = []
    t0 = time.perf_counter()
    for cfg in simulation_grid(reps=10, seed=0):
        t = time.perf_counter()
        sims, results, fits = [], [], []
        for sim in iter_reps(cfg):
            res, fit = evaluate_rep(cfg, sim)
            sims.append(sim)
            results.append(res)
            fits.append(fit)
        runs.append((cfg, sims, fits, summarize(cfg, results), time.perf_counter() - t))
    return runs, time.perf_counter() - t0


def test_criterion_2_high_dimensional_fdr(grid_runs):
    runs, _ = grid_runs
    cfg, _, _, report, secs = next(
        r for r in runs if (r[0].p, r[0].d, r[0].noise) == (200, 1, "Exp")
    )
    m_fdr, m_tpr = report.summary["fdr"][0], report.summary["tpr"][0]
    check(2, m_fdr <= 0.30 and secs < 1800,
          f"p=200 d=1 n=100 Exp: FDR {m_fdr:.3f} (<=0.30)  TPR {m_tpr:.3f}  {secs:.1f}s (<1800s)")


def test_criterion_3_bivariate_direction():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        x = rng.exponential(size=5000)
        y = 0.8 * x + rng.exponential(size=5000)
        order = find_causal_order(DataMatrix.from_array(np.column_stack([x, y])))
        hits += tuple(order) == (0, 1)
    check(3, hits >= 95, f"correct orientation {hits}/100 (>=95)")


def test_criterion_4_prior_superset():
    cover = []
    for s in range(10):
        sim = simulate(50, 1, 500, "Exp", s)
        B = sim.truth.B
        true_pairs = {tuple(sorted(e)) for e in zip(*np.nonzero(B))}
        found = set(estimate_prior(sim.data).edges.pairs)
        cover.append(len(true_pairs & found) / len(true_pairs) if true_pairs else 1.0)
    mean = float(np.mean(cover))
    check(4, mean >= 0.90, f"mean skeleton coverage {mean:.3f} (>=0.90)")


def test_criterion_5_speed_trend():
    sim = simulate(50, 1, 100, "Exp", 0)
    uninformative = PriorMatrix.uninformative(50)

    def constrained():
        fit_psi_lingam(sim.data)

    def unconstrained():
        order = find_causal_order(sim.data, uninformative)
        estimate_weights(sim.data, order, uninformative)

    def median_time(fn):
        times = []
        for _ in range(5):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return statistics.median(times)

    fast, slow = median_time(constrained), median_time(unconstrained)
    ratio = slow / fast
    check(5, ratio >= 1.3, f"median {fast:.3f}s vs {slow:.3f}s, speed-up {ratio:.1f}x (>=1.3x)")


def _all_dags(p):
    pairs = list(itertools.combinations(range(p), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        a = np.zeros((p, p), dtype=int)
        for (i, j), st in zip(pairs, states):
            if st == 1:
                a[i, j] = 1
            elif st == 2:
                a[j, i] = 1
        if is_acyclic(a):
            yield a


def _oracle(est, truth):
    e = {(i, j) for i in range(3) for j in range(3) if est[i, j]}
    t = {(i, j) for i in range(3) for j in range(3) if truth[i, j]}
    o_tpr = len(e & t) / len(t) if t else 1.0
    o_fdr = len(e - t) / len(e) if e else 0.0
    o_shd = sum(
        (est[i, j], est[j, i]) != (truth[i, j], truth[j, i])
        for i, j in itertools.combinations(range(3), 2)
    )
    return o_tpr, o_fdr, o_shd


def test_criterion_6_metric_oracles():
    dags = list(_all_dags(3))
    mismatches = 0
    for est in dags:
        for truth in dags:
            o = _oracle(est, truth)
            mismatches += (tpr(est, truth), fdr(est, truth), shd(est, truth)) != o
    n_pairs = len(dags) ** 2
    check(6, len(dags) == 25 and mismatches == 0,
          f"{len(dags)} DAGs, {n_pairs} pairs, {mismatches} mismatches (exact)")


def _order_preserved(x, z):
    """No reversals anywhere; strict order kept outside the Winsorized tails."""
    i, j = np.triu_indices(x.size, 1)
    sx, sz = np.sign(x[i] - x[j]), np.sign(z[i] - z[j])
    inner = (z[i] > z.min()) & (z[i] < z.max()) | (z[j] > z.min()) & (z[j] < z.max())
    return bool(np.all((sz == sx) | (sz == 0)) and np.all(sz[inner] == sx[inner]))


def test_criterion_7_gaussianization():
    passes, rank_ok = 0, True
    for s in range(100):
        x = np.random.default_rng(s).exponential(size=(1000, 2))
        z = nonparanormal_transform(DataMatrix.from_array(x))
        passes += not anderson_darling(z, alpha=0.01)[0].non_gaussian
        rank_ok &= all(_order_preserved(x[:, k], z.values[:, k]) for k in range(2))
    check(7, passes >= 95 and rank_ok, f"AD pass {passes}/100 at alpha=0.01 (>=95), ranks preserved: {rank_ok}")


def test_criterion_8_structural_invariants(grid_runs):
    runs, total = grid_runs
    violations = {"acyclic": 0, "containment": 0, "order": 0, "hard_prior": 0,
                  "determinism": 0, "sem_identity": 0}
    n_fits = 0
    for cfg, sims, fits, _, _ in runs:
        for sim, fit in zip(sims, fits):
            n_fits += 1
            B = fit.dag.B
            X = sim.data.values
            violations["sem_identity"] += np.abs(X - X @ sim.truth.B - sim.noise).max() > 1e-10
            violations["acyclic"] += not is_acyclic(B != 0)
            violations["containment"] += int(((B != 0) & (fit.prior.values == 0)).sum())
            pos = fit.order.position
            src, dst = np.nonzero(B)
            violations["order"] += int((pos[src] >= pos[dst]).sum())
            again = fit_psi_lingam(sim.data)
            violations["determinism"] += not (
                tuple(again.order) == tuple(fit.order) and np.array_equal(again.dag.B, B)
            )
        # hard prior: force a few true edges in the reverse of a plausible fit, check placement
        sim = sims[0]
        values = fit_psi_lingam(sim.data).prior.values.copy()
        src, dst = np.nonzero(sim.truth.B)
        for i, j in list(zip(src, dst))[:5]:
            values[i, j], values[j, i] = 1, 0
        prior = PriorMatrix(values)
        order = find_causal_order(sim.data, prior)
        forced = np.argwhere(prior.values == 1)
        violations["hard_prior"] += int(sum(order.position[i] >= order.position[j] for i, j in forced))
    total_v = sum(violations.values())
    detail = ", ".join(f"{k} {v}" for k, v in violations.items())
    check(8, total_v == 0, f"{len(runs)} scenarios, {n_fits} fits, violations: {detail} "
                           f"(grid {total:.0f}s)")


def test_criterion_9_group_statistics():
    rng = np.random.default_rng(9)
    _, _, p = welch_t(rng.normal(size=(15, 10000)), rng.normal(size=(12, 10000)))
    ks = stats.kstest(p, "uniform").statistic
    d_err = max(
        abs(cohens_d([1.0, 2, 3], [3.0, 4, 5]) - (-2.0)),
        abs(cohens_d([1.0, 2, 3], [1.0, 2, 3]) - 0.0),
        abs(cohens_d([0.0, 1, 2, 3], [2.0, 3, 4]) - (-1.5 / np.sqrt((3 * 5 / 3 + 2 * 1) / 5))),
    )
    nested = True
    for s in range(50):
        r = np.random.default_rng(100 + s)
        pdim = 6
        off = ~np.eye(pdim, dtype=bool)
        a = SubjectStack(np.where(off, r.normal(0, 1, (20, pdim, pdim)), 0))
        b = SubjectStack(np.where(off, r.normal(r.uniform(0, 0.8), 1, (18, pdim, pdim)), 0))
        rep = compare_groups(a, b)
        sets = [{(i, j) for i, j, _ in select_features(rep, f)} for f in (0.2, 0.3, 0.4, 0.5)]
        nested &= all(sets[k + 1] <= sets[k] for k in range(3))
    check(9, ks <= 0.05 and d_err <= 1e-12 and nested,
          f"Welch null KS {ks:.4f} (<=0.05), Cohen's d max error {d_err:.1e} (<=1e-12), nesting holds: {nested}")
