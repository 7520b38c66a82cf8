"""Command-line interface: ``psilingam {simulate,fit,benchmark,netstats,groupdiff}``.

Options may also come from a flat ``key = value`` file given with
``--config``; explicit flags win over the file, which wins over defaults.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from psilingam import __version__
from psilingam._io import fmt, format_rows, write_text_atomic
from psilingam.dataset import anderson_darling, load_matrix, save_matrix
from psilingam.errors import DataError, NumericalError
from psilingam.groupdiff import SubjectStack, compare_groups, group_edges, select_features
from psilingam.lingam import WeightedDag, fit_psi_lingam, threshold_graph
from psilingam.netstats import detect_hubs, network_stats, node_table
from psilingam.prior import PriorMatrix
from psilingam.simbench import BenchmarkConfig, simulation_grid, run_benchmark, simulate

log = logging.getLogger("psilingam")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

DEFAULTS = {
    "seed": 0,
    "out": ".",
    "alpha1": 0.05,
    "alpha2": 0.2,
    "alpha": 0.05,
    "weight_floor": 0.1,
    "weight_alpha": None,
    "selection": "bic",
    "d_floors": "0.2,0.3,0.4,0.5",
    "p": 10,
    "d": 1.0,
    "n": 2000,
    "noise": "Exp",
    "reps": 10,
    "tau": 0.0,
}

TYPES = {
    "seed": int, "p": int, "n": int, "reps": int,
    "alpha1": float, "alpha2": float, "alpha": float, "weight_floor": float,
    "weight_alpha": float, "d": float, "tau": float,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"error: usage: {message}\n")


def read_config(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then from DEFAULTS."""
    conf = read_config(args.config) if args.config else {}
    for key, default in DEFAULTS.items():
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        if key in conf:
            raw = conf[key]
            try:
                value = TYPES.get(key, str)(raw)
            except ValueError:
                raise UsageError(f"config value for {key!r} is invalid: {raw!r}") from None
        else:
            value = default
        setattr(args, key, value)
    for flag in ("paper_sims", "timings"):
        if hasattr(args, flag) and not getattr(args, flag) and conf.get(flag, "").lower() in ("1", "true", "yes"):
            setattr(args, flag, True)
    return args


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, help="master random seed (default 0)")
    sp.add_argument("--out", help="output directory (default .)")
    sp.add_argument("--config", help="flat key = value file of option defaults")


def _sim_options(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--p", type=int, help="number of variables")
    sp.add_argument("--d", type=float, help="degree parameter; edge probability d/(p-1)")
    sp.add_argument("--n", type=int, help="sample size")
    sp.add_argument("--noise", choices=("Exp", "Chisq"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psilingam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="sample a random weighted DAG and SEM data")
    _common(sp)
    _sim_options(sp)

    sp = sub.add_parser("fit", help="estimate a weighted DAG from a data matrix")
    _common(sp)
    sp.add_argument("input", help="CSV/TSV data file, rows = samples")
    hdr = sp.add_mutually_exclusive_group()
    hdr.add_argument("--header", dest="has_header", action="store_true", default=None)
    hdr.add_argument("--no-header", dest="has_header", action="store_false")
    sp.add_argument("--alpha1", type=float, help="correlation screening level (default 0.05)")
    sp.add_argument("--alpha2", type=float, help="prior edge FDR level (default 0.2)")
    sp.add_argument("--weight-alpha", type=float, help="optional FDR filter on fitted weights")
    sp.add_argument("--selection", choices=("bic", "none"), help="parent pruning rule (default bic)")
    sp.add_argument("--prior", help="user-supplied p x p prior CSV (skips prior estimation)")
    sp.add_argument("--timings", action="store_true", help="include step timings in diagnostics")

    sp = sub.add_parser("benchmark", help="repeated simulate-fit-score trials")
    _common(sp)
    _sim_options(sp)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--alpha1", type=float)
    sp.add_argument("--alpha2", type=float)
    sp.add_argument("--paper-sims", action="store_true",
                    help="run the n=100 grid p in {50,100,200} x d in {1,2,4} x both noises")

    sp = sub.add_parser("netstats", help="density, transitivity, efficiency and hubs")
    _common(sp)
    sp.add_argument("input", help="weight matrix CSV (header of labels optional)")
    sp.add_argument("--tau", type=float, help="edge present when |weight| > tau (default 0)")

    sp = sub.add_parser("groupdiff", help="group edges and between-group edge differences")
    _common(sp)
    sp.add_argument("--subjects", required=True, help="directory of per-subject weight CSVs")
    sp.add_argument("--groups", required=True, help="TSV of subject_id<TAB>group")
    sp.add_argument("--group-a", help="first group label (default: first in sorted order)")
    sp.add_argument("--group-b", help="second group label (default: second in sorted order)")
    sp.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    sp.add_argument("--weight-floor", type=float, help="minimum |mean weight| of group edges (default 0.1)")
    sp.add_argument("--d-floors", help="comma list of |d| thresholds (default 0.2,0.3,0.4,0.5)")
    return parser


def _adjacency_csv(adj: np.ndarray, labels) -> str:
    return format_rows([labels] + adj.astype(int).tolist(), ",")


def cmd_simulate(args) -> None:
    out = Path(args.out)
    sim = simulate(args.p, args.d, args.n, args.noise, args.seed)
    sim.truth.save(out / "true_weights.csv", out / "true_edges.tsv")
    write_text_atomic(out / "true_adjacency.csv", _adjacency_csv(threshold_graph(sim.truth), sim.truth.labels))
    save_matrix(sim.data, out / "data.csv")
    save_matrix(sim.data.with_values(sim.noise), out / "noise.csv")


def cmd_fit(args) -> None:
    out = Path(args.out)
    data = load_matrix(args.input, args.has_header)
    prior = PriorMatrix.from_csv(args.prior) if args.prior else None
    if prior is not None and prior.p != data.p:
        raise DataError(f"prior is {prior.p}x{prior.p} but data has {data.p} columns")
    fit = fit_psi_lingam(data, args.alpha1, args.alpha2, prior, args.weight_alpha, args.selection)
    fit.dag.save(out / "weights.csv", out / "edges.tsv")
    write_text_atomic(out / "prior.csv", fit.prior.to_csv())
    if fit.edges is not None:
        write_text_atomic(out / "prior_edges.tsv", fit.edges.to_tsv(data.labels))
    info = f"input: {Path(args.input).name}\nn: {data.n}\nalpha1: {args.alpha1}\nalpha2: {args.alpha2}\n"
    write_text_atomic(out / "diagnostics.txt", info + fit.report(with_timings=args.timings))
    if data.n >= 8:
        rows = [("label", "A2", "A2_corrected", "non_gaussian_0.05")]
        rows += [(r.label, fmt(r.statistic), fmt(r.corrected), int(r.non_gaussian)) for r in anderson_darling(data)]
        write_text_atomic(out / "ad_report.tsv", format_rows(rows, "\t"))
    else:
        write_text_atomic(out / "ad_report.tsv", "# insufficient samples for AD test (n < 8)\n")


def _write_benchmark(report, out: Path) -> None:
    write_text_atomic(out / "reps.tsv", report.to_tsv())
    write_text_atomic(out / "summary.txt", report.to_text())


def cmd_benchmark(args) -> None:
    out = Path(args.out)
    if not args.paper_sims:
        cfg = BenchmarkConfig(p=args.p, d=args.d, n=args.n, noise=args.noise, reps=args.reps,
                              seed=args.seed, alpha1=args.alpha1, alpha2=args.alpha2)
        _write_benchmark(run_benchmark(cfg), out)
        return
    rows = [("noise", "p", "d", "n", "reps", "mean_tpr", "mean_fdr", "mean_shd", "sd_tpr", "sd_fdr", "sd_shd")]
    for cfg in simulation_grid(args.reps, args.seed):
        log.info("scenario noise=%s p=%d d=%g", cfg.noise, cfg.p, cfg.d)
        report = run_benchmark(cfg)
        _write_benchmark(report, out / f"{cfg.noise}_p{cfg.p}_d{cfg.d:g}")
        s = report.summary
        rows.append((cfg.noise, cfg.p, f"{cfg.d:g}", cfg.n, cfg.reps,
                     *(fmt(s[k][0]) for k in ("tpr", "fdr", "shd")),
                     *(fmt(s[k][1]) for k in ("tpr", "fdr", "shd"))))
    write_text_atomic(out / "grid.tsv", format_rows(rows, "\t"))


def cmd_netstats(args) -> None:
    out = Path(args.out)
    dag = WeightedDag.load(args.input)
    adj = threshold_graph(dag, args.tau)
    stats = network_stats(adj)
    hubs = detect_hubs(adj)
    write_text_atomic(out / "stats.txt", f"tau: {args.tau}\n" + stats.to_text())
    write_text_atomic(out / "nodes.tsv", node_table(stats, hubs, dag.labels))


def _read_groups(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"group assignment file not found: {path}")
    groups = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise DataError(f"{path}:{lineno}: expected subject_id<TAB>group")
        sid, grp = (c.strip() for c in cells)
        if lineno == 1 and sid.lower() == "subject_id":
            continue
        groups[sid] = grp
    return groups


def cmd_groupdiff(args) -> None:
    out = Path(args.out)
    subj_dir = Path(args.subjects)
    if not subj_dir.is_dir():
        raise DataError(f"subject directory not found: {subj_dir}")
    groups = _read_groups(args.groups)
    labels = sorted(set(groups.values()))
    ga = args.group_a or (labels[0] if labels else None)
    gb = args.group_b or next((g for g in labels if g != ga), None)
    if ga is None or gb is None or ga == gb:
        raise DataError(f"{args.groups}: need two distinct groups, found {labels}")
    members: dict[str, list[WeightedDag]] = {ga: [], gb: []}
    for sid, grp in sorted(groups.items()):
        if grp not in members:
            continue
        path = subj_dir / f"{sid}.csv"
        if not path.is_file():
            raise DataError(f"missing weight file for subject {sid!r}: {path}")
        members[grp].append(WeightedDag.load(path))
    stacks = {}
    for grp, dags in members.items():
        if len(dags) < 2:
            raise DataError(f"group {grp!r} has {len(dags)} subject(s); need at least 2")
        stacks[grp] = SubjectStack.from_dags(dags, grp)
    labels_out = stacks[ga].labels

    report = compare_groups(stacks[ga], stacks[gb])
    write_text_atomic(out / "report.tsv", report.to_tsv())
    floors = [float(s) for s in str(args.d_floors).split(",") if s.strip()]
    for floor in floors:
        rows = [("i", "j", "label_i", "label_j", "d")]
        rows += [(i, j, labels_out[i], labels_out[j], fmt(d)) for i, j, d in select_features(report, floor, args.alpha)]
        write_text_atomic(out / f"features_d{floor:g}.tsv", format_rows(rows, "\t"))

    if floors:
        chosen = select_features(report, min(floors), args.alpha)
        header = ["subject", "group"] + [f"{labels_out[i]}->{labels_out[j]}" for i, j, _ in chosen]
        rows = [header]
        for grp in (ga, gb):
            sids = sorted(s for s, g in groups.items() if g == grp)
            for sid, w in zip(sids, stacks[grp].weights):
                rows.append([sid, grp] + [fmt(w[i, j]) for i, j, _ in chosen])
        write_text_atomic(out / "feature_matrix.tsv", format_rows(rows, "\t"))

    for grp, stack in stacks.items():
        rows = [("i", "j", "label_i", "label_j", "mean", "t", "p_adjusted")]
        if stack.k >= 3:
            rows += [(e.i, e.j, labels_out[e.i], labels_out[e.j], fmt(e.mean), fmt(e.t), fmt(e.p_adjusted))
                     for e in group_edges(stack, args.alpha, args.weight_floor)]
        write_text_atomic(out / f"group_edges_{grp}.tsv", format_rows(rows, "\t"))


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "benchmark": cmd_benchmark,
    "netstats": cmd_netstats,
    "groupdiff": cmd_groupdiff,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version, or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        resolve(args)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, OSError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
