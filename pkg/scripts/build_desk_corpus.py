"""
Batch script that builds the desk-scale evaluation corpora.

For every table mode it generates a database, extracts queries, labels them
with the exact oracle and indexes the database, writing everything under
one directory per corpus.

Usage:
    python scripts/build_desk_corpus.py [output_dir]
"""

import sys
import time
from pathlib import Path

from pgsim.config import IndexParams
from pgsim.documents import TruthDocument, query_document, save_database, write_document
from pgsim.evaluation import oracle_table
from pgsim.generator import GeneratorConfig, extract_queries, generate_database
from pgsim.index import build_index, save_pmi
from pgsim.query import TpsQuery

# Corpus name -> generator settings
CORPORA = {
    "independent": GeneratorConfig(graphs=40, min_vertices=6, max_vertices=10, table_mode="independent", seed=1),
    "correlated": GeneratorConfig(graphs=40, min_vertices=6, max_vertices=10, table_mode="correlated", seed=2),
    "max-transform": GeneratorConfig(graphs=40, min_vertices=6, max_vertices=10, table_mode="max-transform", seed=3),
}

QUERY_SIZES = [3, 4, 5, 6]
QUERIES_PER_SIZE = 5
DELTA = 1
EPSILON = 0.5


def build_corpus(name: str, config: GeneratorConfig, output_dir: Path) -> int:
    """Write db.json, queries/, truth.json and index.json; return the number of skipped oracle graphs."""
    target = output_dir / name
    database = generate_database(config)
    save_database(database, target / "db.json")

    labels = {}
    skipped_total = 0
    for query_name, graph in extract_queries(database, QUERY_SIZES, QUERIES_PER_SIZE, config.seed):
        delta = min(DELTA, graph.size)
        write_document(query_document(query_name, graph, delta, EPSILON), target / "queries" / f"{query_name}.json")
        table, skipped = oracle_table(database, TpsQuery(graph, delta, EPSILON, query_name))
        labels[query_name] = table
        skipped_total += len(skipped)
    write_document(TruthDocument(epsilon=EPSILON, queries=labels), target / "truth.json")

    pmi = build_index(database, IndexParams(max_vertices=3, seed=config.seed), progress=True)
    save_pmi(pmi, target / "index.json")
    print(f"   {len(database)} graphs, {len(labels)} queries, {len(pmi.features)} features")
    return skipped_total


def build_all(output_dir: Path):
    print(f"Building {len(CORPORA)} corpora into {output_dir}")
    print("=" * 70)

    failed = []
    for name, config in CORPORA.items():
        print(f"\n📚 Building {name} ({config.graphs} graphs, {config.policy} sets)...")
        start = time.perf_counter()
        try:
            skipped = build_corpus(name, config, output_dir)
        except Exception as e:
            print(f"   ❌ Failed - {e}")
            failed.append((name, str(e)))
            continue
        if skipped:
            print(f"   ⚠️  Oracle skipped {skipped} graph labels beyond the enumeration cap")
        print(f"   ✅ Done in {time.perf_counter() - start:.1f}s")

    print("\n" + "=" * 70)
    print(f"SUMMARY: {len(CORPORA) - len(failed)}/{len(CORPORA)} corpora built")
    for name, error in failed:
        print(f"  - {name}: {error}")
    return not failed


def main():
    output_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "corpora"
    output_dir.mkdir(parents=True, exist_ok=True)
    return 0 if build_all(output_dir) else 1


if __name__ == "__main__":
    sys.exit(main())
