import pytest

from pgsim.fixtures import fix_a, fix_b, fixture_database, graph_002
from pgsim.generator import GeneratorConfig, generate_database
from pgsim.graph import DetGraph


def edge(label_a: str, edge_label: str, label_b: str) -> DetGraph:
    return DetGraph([("a", label_a), ("b", label_b)], [("ab", "a", "b", edge_label)])


def path(labels, edge_labels) -> DetGraph:
    vertices = [(f"p{i}", label) for i, label in enumerate(labels)]
    edges = [(f"d{i}", f"p{i}", f"p{i + 1}", label) for i, label in enumerate(edge_labels)]
    return DetGraph(vertices, edges)


def triangle(edge_labels=("x", "x", "x"), vertex_label: str = "A") -> DetGraph:
    return DetGraph(
        [("t1", vertex_label), ("t2", vertex_label), ("t3", vertex_label)],
        [
            ("c1", "t1", "t2", edge_labels[0]),
            ("c2", "t2", "t3", edge_labels[1]),
            ("c3", "t1", "t3", edge_labels[2]),
        ],
    )


def random_graph(rng, vertices: int, extra: int, vertex_labels: str = "AB", edge_labels: str = "xy") -> DetGraph:
    """Random connected graph: a random tree plus up to ``extra`` further edges."""
    pairs = {(int(rng.integers(child)), child) for child in range(1, vertices)}
    others = [(a, b) for a in range(vertices) for b in range(a + 1, vertices) if (a, b) not in pairs]
    for position in rng.permutation(len(others))[:extra]:
        pairs.add(others[int(position)])
    return DetGraph(
        [(f"r{i}", vertex_labels[int(rng.integers(len(vertex_labels)))]) for i in range(vertices)],
        [
            (f"s{i}", f"r{a}", f"r{b}", edge_labels[int(rng.integers(len(edge_labels)))])
            for i, (a, b) in enumerate(sorted(pairs))
        ],
    )


@pytest.fixture
def fixa():
    return fix_a()


@pytest.fixture
def fixb():
    return fix_b()


@pytest.fixture
def g002():
    return graph_002()


@pytest.fixture
def fixtures_db():
    return fixture_database()


@pytest.fixture
def path_aaa():
    return path("AAA", "xx")


@pytest.fixture
def edge_ab():
    return edge("A", "x", "B")


@pytest.fixture
def edge_aa():
    return edge("A", "x", "A")


@pytest.fixture(scope="session")
def independent_db():
    """Small product-form database on which every bound is sandwich-sound."""
    config = GeneratorConfig(
        graphs=4,
        min_vertices=3,
        max_vertices=4,
        density=0.5,
        vertex_labels=2,
        edge_labels=2,
        policy="mixed",
        table_mode="independent",
        seed=11,
    )
    return generate_database(config)
