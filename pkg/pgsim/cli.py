"""
Command-line interface.

Usage:
    pgsim gen --out db.json [--queries-dir queries/]
    pgsim index --db db.json --out index.json
    pgsim query --db db.json --pmi index.json --query q.json [--report report.json]
    pgsim oracle --db db.json --query q.json [--truth truth.json]
    pgsim eval --db db.json --pmi index.json --queries queries/ --truth truth.json
    pgsim bench

Exit codes: 0 success, 1 usage or other error, 2 index/database mismatch,
3 oracle skipped graphs beyond the enumeration cap.
"""

import argparse
import json
import logging
import statistics
import sys
import time
from pathlib import Path
from typing import List, Optional

from .config import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_EPSILON,
    DEFAULT_GAMMA,
    DEFAULT_MAX_FEATURE_VERTICES,
    DEFAULT_TAU,
    DEFAULT_XI,
    Caps,
    IndexParams,
    QueryConfig,
    oracle_cap,
)
from .documents import (
    TruthDocument,
    load_database,
    load_query,
    load_truth,
    query_document,
    save_database,
    write_document,
)
from .evaluation import evaluate, oracle_table
from .exceptions import IntegrityError, PgsimError
from .generator import GeneratorConfig, POLICIES, TABLE_MODES, extract_queries, generate_database
from .index import build_index, load_pmi, save_pmi
from .query import TpsQuery, run_query

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INTEGRITY = 2
EXIT_PARTIAL_ORACLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


# -- commands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    config = GeneratorConfig(
        graphs=args.graphs,
        min_vertices=args.min_vertices,
        max_vertices=args.max_vertices,
        density=args.density,
        vertex_labels=args.vertex_labels,
        edge_labels=args.edge_labels,
        policy=args.policy,
        table_mode=args.table_mode,
        seed=args.seed,
    )
    database = generate_database(config)
    save_database(database, args.out)
    print(f"Wrote {len(database)} graphs to {args.out}")
    if args.queries_dir:
        queries = extract_queries(database, args.query_sizes, args.queries_per_size, args.seed)
        for name, graph in queries:
            delta = min(args.delta, graph.size)
            document = query_document(name, graph, delta, args.epsilon)
            write_document(document, Path(args.queries_dir) / f"{name}.json")
        print(f"Wrote {len(queries)} queries to {args.queries_dir}")
    return EXIT_OK


def cmd_index(args) -> int:
    database = load_database(args.db)
    params = IndexParams(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        max_vertices=args.max_feature_vertices,
        mode=args.mode,
        seed=args.seed,
        tau=args.tau,
        xi=args.xi,
        tighten=not args.basic_bounds,
    )
    start = time.perf_counter()
    pmi = build_index(database, params, Caps.from_env(), progress=args.progress)
    elapsed = time.perf_counter() - start
    save_pmi(pmi, args.out)
    print(f"Indexed {len(pmi.features)} features over {len(pmi.columns)} graphs in {elapsed:.2f}s")
    if not pmi.complete:
        print("Feature mining stopped at the candidate cap; the feature set is partial")
    return EXIT_OK


def _query_config(args, document=None) -> QueryConfig:
    def pick(flag, field, default):
        if flag is not None:
            return flag
        value = getattr(document, field, None) if document is not None else None
        return default if value is None else value

    return QueryConfig(
        tau=pick(args.tau, "tau", DEFAULT_TAU),
        xi=pick(args.xi, "xi", DEFAULT_XI),
        seed=pick(args.seed, "seed", 0),
        enable_accept_pruning=args.enable_accept_pruning,
        exact_verify=args.exact_verify,
        relabel=args.relax_relabel,
        relabel_alphabet=args.relabel_alphabet,
        strategy=args.strategy,
        literal_karp_luby=args.literal_karp_luby,
        prefilter=not args.no_prefilter,
    )


def _load_tps(path, args) -> tuple:
    document = load_query(path)
    query = TpsQuery(
        document.graph(),
        args.delta if getattr(args, "delta", None) is not None else document.delta,
        args.epsilon if getattr(args, "epsilon", None) is not None else document.epsilon,
        document.name,
    )
    return query, document


def cmd_query(args) -> int:
    database = load_database(args.db)
    pmi = load_pmi(args.pmi)
    query, document = _load_tps(args.query, args)
    answers, report = run_query(database, pmi, query, _query_config(args, document))
    for gid in answers:
        print(gid)
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    margin = report.flagged("margin")
    if margin:
        logger.warning("estimates within the sampling margin of epsilon: %s", ", ".join(margin))
    logger.info("stage counts %s, %.3fs", report.stage_counts(), report.timings.get("total", 0.0))
    return EXIT_OK


def cmd_oracle(args) -> int:
    database = load_database(args.db)
    query, _ = _load_tps(args.query, args)
    table, skipped = oracle_table(database, query)
    for gid in database.ids:
        if gid in table:
            mark = "*" if table[gid] >= query.epsilon else " "
            print(f"{mark} {gid}\t{table[gid]:.9f}")
    for gid in skipped:
        print(f"  {gid}\tskipped (more than {oracle_cap()} edges)")
    if args.truth:
        path = Path(args.truth)
        if path.exists():
            truth = load_truth(path)
            truth.queries[query.name] = table
        else:
            truth = TruthDocument(epsilon=query.epsilon, queries={query.name: table})
        write_document(truth, path)
    return EXIT_PARTIAL_ORACLE if skipped else EXIT_OK


def _query_files(directory) -> List[Path]:
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        raise PgsimError(f"no query documents in {directory}")
    return files


def cmd_eval(args) -> int:
    database = load_database(args.db)
    pmi = load_pmi(args.pmi)
    truth = load_truth(args.truth)
    queries = [_load_tps(path, args)[0] for path in _query_files(args.queries)]
    result = evaluate(
        database, pmi, queries, truth, _query_config(args), compare_independent=args.compare_independent
    )
    header = f"{'query':<20} {'precision':>10} {'recall':>10}"
    if args.compare_independent:
        header += f" {'ind-prec':>10} {'ind-rec':>10}"
    print(header)
    print("-" * len(header))
    for name, score in sorted(result.per_query.items()):
        line = f"{name:<20} {score.precision:>10.3f} {score.recall:>10.3f}"
        if args.compare_independent:
            other = result.independent[name]
            line += f" {other.precision:>10.3f} {other.recall:>10.3f}"
        if score.zero_predictions:
            line += "  (no answers)"
        print(line)
    total = result.aggregate()
    line = f"{'mean':<20} {total['precision']:>10.3f} {total['recall']:>10.3f}"
    if args.compare_independent:
        other = result.aggregate_independent()
        line += f" {other['precision']:>10.3f} {other['recall']:>10.3f}"
    print(line)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = GeneratorConfig(
        graphs=args.graphs,
        min_vertices=args.min_vertices,
        max_vertices=args.max_vertices,
        density=args.density,
        seed=args.seed,
    )
    print(f"Generating {args.graphs} graphs...")
    database = generate_database(config)
    params = IndexParams(max_vertices=args.max_feature_vertices, seed=args.seed)

    start = time.perf_counter()
    pmi = build_index(database, params, Caps.from_env(), progress=args.progress)
    index_time = time.perf_counter() - start
    print(f"Index: {len(pmi.features)} features, {len(pmi.entries)} entries, {index_time:.2f}s")

    queries = extract_queries(database, args.query_sizes, args.queries_per_size, args.seed)
    times = []
    print(f"\n{'query':<10} {'edges':>5} {'db':>6} {'struct':>6} {'prob':>6} {'answers':>7} {'time':>8}")
    for name, graph in queries:
        query = TpsQuery(graph, min(args.delta, graph.size), args.epsilon, name)
        started = time.perf_counter()
        _, report = run_query(database, pmi, query, QueryConfig(seed=args.seed))
        elapsed = time.perf_counter() - started
        times.append(elapsed)
        counts = report.stage_counts()
        print(
            f"{name:<10} {graph.size:>5} {counts['database']:>6} {counts['structural']:>6} "
            f"{counts['probabilistic']:>6} {counts['answers']:>7} {elapsed:>7.3f}s"
        )
    if times:
        print(f"\nMedian query time: {statistics.median(times):.3f}s over {len(times)} queries")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_query_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--epsilon", type=float, help="Probability threshold (default: from the query document)")
    parser.add_argument("--delta", type=int, help="Subgraph distance threshold (default: from the query document)")
    parser.add_argument("--tau", type=float, help=f"Sampling accuracy (default {DEFAULT_TAU})")
    parser.add_argument("--xi", type=float, help=f"Sampling confidence (default {DEFAULT_XI})")
    parser.add_argument("--seed", type=int, help="Root seed (default 0)")
    parser.add_argument("--enable-accept-pruning", action="store_true", help="Accept graphs by the lower bound")
    parser.add_argument("--exact-verify", action="store_true", help="Verify by world enumeration within the oracle cap")
    parser.add_argument("--relax-relabel", action="store_true", help="Let relaxation substitute edge labels")
    parser.add_argument("--relabel-alphabet", choices=("database", "query"), default="database")
    parser.add_argument("--strategy", choices=("optimal", "basic"), default="optimal", help="SSP bound strategy")
    parser.add_argument("--literal-karp-luby", action="store_true", help="Return Cnt/N (debugging)")
    parser.add_argument("--no-prefilter", action="store_true", help="Disable the Absent-feature prefilter")


def _add_generator_flags(parser: argparse.ArgumentParser, graphs: int, min_vertices: int, max_vertices: int):
    parser.add_argument("--graphs", type=int, default=graphs)
    parser.add_argument("--min-vertices", type=int, default=min_vertices)
    parser.add_argument("--max-vertices", type=int, default=max_vertices)
    parser.add_argument("--density", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--query-sizes", type=int, nargs="+", default=[4, 6, 8])
    parser.add_argument("--queries-per-size", type=int, default=2)
    parser.add_argument("--delta", type=int, default=1)
    parser.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pgsim", description="Threshold subgraph-similarity search over probabilistic graphs")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    gen = commands.add_parser("gen", help="Generate a synthetic database and queries")
    gen.add_argument("--out", required=True, help="Database document to write")
    gen.add_argument("--queries-dir", help="Directory for extracted query documents")
    gen.add_argument("--vertex-labels", type=int, default=2)
    gen.add_argument("--edge-labels", type=int, default=2)
    gen.add_argument("--policy", choices=POLICIES, default="mixed")
    gen.add_argument("--table-mode", choices=TABLE_MODES, default="correlated")
    _add_generator_flags(gen, graphs=10, min_vertices=4, max_vertices=7)
    gen.set_defaults(handler=cmd_gen)

    index = commands.add_parser("index", help="Select features and build the PMI")
    index.add_argument("--db", required=True)
    index.add_argument("--out", required=True, help="PMI file to write")
    index.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    index.add_argument("--beta", type=float, default=DEFAULT_BETA)
    index.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    index.add_argument("--max-feature-vertices", type=int, default=DEFAULT_MAX_FEATURE_VERTICES)
    index.add_argument("--mode", choices=("exact", "sample"), default="exact")
    index.add_argument("--seed", type=int, default=0)
    index.add_argument("--tau", type=float, default=DEFAULT_TAU)
    index.add_argument("--xi", type=float, default=DEFAULT_XI)
    index.add_argument("--basic-bounds", action="store_true", help="First-fit members instead of the max-weight clique")
    index.add_argument("--progress", action="store_true", help="Show a progress bar")
    index.set_defaults(handler=cmd_index)

    query = commands.add_parser("query", help="Answer a threshold query")
    query.add_argument("--db", required=True)
    query.add_argument("--pmi", required=True)
    query.add_argument("--query", required=True)
    query.add_argument("--report", help="Write the structured report here")
    _add_query_flags(query)
    query.set_defaults(handler=cmd_query)

    oracle = commands.add_parser("oracle", help="Exact SSP of every graph by world enumeration")
    oracle.add_argument("--db", required=True)
    oracle.add_argument("--query", required=True)
    oracle.add_argument("--epsilon", type=float)
    oracle.add_argument("--delta", type=int)
    oracle.add_argument("--truth", help="Add the SSP table to this truth document")
    oracle.set_defaults(handler=cmd_oracle)

    ev = commands.add_parser("eval", help="Precision and recall against truth labels")
    ev.add_argument("--db", required=True)
    ev.add_argument("--pmi", required=True)
    ev.add_argument("--queries", required=True, help="Directory of query documents")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--compare-independent", action="store_true", help="Also answer on the independent analog")
    _add_query_flags(ev)
    ev.set_defaults(handler=cmd_eval)

    bench = commands.add_parser("bench", help="Generate a scaled corpus and time index and queries")
    bench.add_argument("--max-feature-vertices", type=int, default=3)
    bench.add_argument("--progress", action="store_true")
    _add_generator_flags(bench, graphs=100, min_vertices=10, max_vertices=14)
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except IntegrityError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (PgsimError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
