"""Command-line entry point: ``polytree <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
failure (including an inconsistent CSV found by ``verify``).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .dataio import read_data, format_data
from .errors import FormatError, PolytreeError
from .generate import GenConfig, generate_sem, hardness_cpdag_member, hardness_cpdag_pairs, hardness_skeleton_member
from .graphs import cpdag_of_polytree, format_graph, parse_cpdag, parse_dag
from .harness import parse_config, run_sweep, summary_path, verify
from .learn import LearnConfig, learn, sample_correlations
from .metrics import all_metrics, classify_edges
from .precision import estimate_inverse_correlation, format_matrix
from .sem import NoiseFamily, format_sem, parse_sem, sample

EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 1, 2, 3

log = logging.getLogger("polytree")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_truth(path: str, as_dag: bool):
    text = Path(path).read_text()
    if not as_dag:
        return parse_cpdag(text)
    g = parse_sem(text).dag if "beta=" in text else parse_dag(text)
    return cpdag_of_polytree(g)


def cmd_generate(args) -> int:
    keys = {}
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
        keys = dict(p=cfg.p[0], d_in_max=cfg.d_in_max[0], rho_min=cfg.rho_min[0],
                    rho_max=cfg.rho_max, omega_min=cfg.omega_min, seed=cfg.master_seed)
    for name in ("p", "d_in_max", "rho_min", "rho_max", "omega_min", "seed"):
        if getattr(args, name) is not None:
            keys[name] = getattr(args, name)
    if args.hardness:
        if "p" not in keys or "rho_min" not in keys:
            raise FormatError("--hardness needs --p and --rho-min")
        if args.hardness == "skeleton":
            m = hardness_skeleton_member(keys["p"], keys["rho_min"], args.member)
        else:
            m = hardness_cpdag_member(keys["p"], keys["rho_min"], hardness_cpdag_pairs(keys["p"])[args.member])
    else:
        missing = [k for k in ("p", "d_in_max", "rho_min", "rho_max", "omega_min") if k not in keys]
        if missing:
            raise FormatError(f"missing generation parameters: {', '.join(missing)}")
        m = generate_sem(GenConfig(**keys))
    _emit(format_sem(m), args.output)
    return 0


def cmd_sample(args) -> int:
    m = parse_sem(Path(args.sem).read_text())
    _emit(format_data(sample(m, args.n, args.noise, seed=args.seed)), args.output)
    return 0


def cmd_learn(args) -> int:
    result = learn(read_data(args.data), LearnConfig(args.alpha, args.rho_crit))
    if result.n_conflicts:
        log.warning("%d conflicting orientation(s) left undirected", result.n_conflicts)
    _emit(format_graph(result.cpdag), args.output)
    return 0


def cmd_cpdag(args) -> int:
    _emit(format_graph(_read_truth(args.graph, as_dag=True)), args.output)
    return 0


def cmd_evaluate(args) -> int:
    truth = _read_truth(args.truth, args.truth_dag)
    est = parse_cpdag(Path(args.estimate).read_text())
    ec = classify_edges(truth, est)
    metrics = all_metrics(ec)
    cols = ["correct", "wrong_dir", "missing", "extra", "fdr_sk", "ji_sk", "fdr_cpdag", "ji_cpdag"]
    values = [ec.correct, ec.wrong_direction, ec.missing, ec.extra] + [metrics[c] for c in cols[4:]]
    row = ["" if v is None else repr(v) if isinstance(v, float) else str(v) for v in values]
    _emit(",".join(cols) + "\n" + ",".join(row) + "\n", args.output)
    return 0


def cmd_precision(args) -> int:
    corr = sample_correlations(read_data(args.data))
    cpdag = parse_cpdag(Path(args.cpdag).read_text())
    theta = estimate_inverse_correlation(cpdag, corr)
    _emit(format_matrix(theta, sparse=args.sparse), args.output)
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    summary = run_sweep(cfg, args.output, workers=args.workers)
    failed = sum(row["n_failed"] for row in summary)
    total = sum(row["n_trials"] for row in summary)
    print(f"{total} trials ({failed} failed) -> {args.output}, summary -> {summary_path(Path(args.output))}")
    return 0


def cmd_verify(args) -> int:
    problems = verify(args.csv, args.summary)
    for msg in problems:
        print(msg)
    if problems:
        print(f"FAILED: {len(problems)} inconsistencies")
        return EXIT_INVARIANT
    print("OK")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polytree", description="Structure learning for linear polytree SEMs.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="random polytree SEM -> SEM file")
    g.add_argument("--config", help="sweep config file; first grid values are used")
    g.add_argument("--p", type=int)
    g.add_argument("--d-in-max", dest="d_in_max", type=int)
    g.add_argument("--rho-min", dest="rho_min", type=float)
    g.add_argument("--rho-max", dest="rho_max", type=float)
    g.add_argument("--omega-min", dest="omega_min", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--hardness", choices=["skeleton", "cpdag"], help="emit a lower-bound family member")
    g.add_argument("--member", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="SEM file -> data CSV")
    s.add_argument("sem")
    s.add_argument("n", type=int)
    s.add_argument("seed", type=int)
    s.add_argument("--noise", choices=[f.value for f in NoiseFamily], default="gaussian")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)

    le = sub.add_parser("learn", help="data CSV -> CPDAG edge list")
    le.add_argument("data")
    le.add_argument("--alpha", type=float, default=0.1)
    le.add_argument("--rho-crit", dest="rho_crit", type=float, help="fixed threshold instead of the t-test value")
    le.add_argument("-o", "--output")
    le.set_defaults(func=cmd_learn)

    c = sub.add_parser("cpdag", help="DAG or SEM file -> its CPDAG")
    c.add_argument("graph")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_cpdag)

    e = sub.add_parser("evaluate", help="compare two CPDAG files")
    e.add_argument("truth")
    e.add_argument("estimate")
    e.add_argument("--truth-dag", action="store_true", help="truth is a DAG or SEM file; compare against its CPDAG")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("precision", help="data CSV + CPDAG -> inverse correlation estimate")
    pr.add_argument("data")
    pr.add_argument("cpdag")
    pr.add_argument("--sparse", action="store_true", help="write i,j,value triplets")
    pr.add_argument("-o", "--output")
    pr.set_defaults(func=cmd_precision)

    sw = sub.add_parser("sweep", help="config file -> trial CSV + summary CSV")
    sw.add_argument("config")
    sw.add_argument("-o", "--output", required=True)
    sw.add_argument("--workers", type=int)
    sw.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="check a trial CSV (and its summary) for consistency")
    v.add_argument("csv")
    v.add_argument("--summary")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AssertionError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (PolytreeError, OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
