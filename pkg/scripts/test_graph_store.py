# scripts/test_graph_store.py
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lang.errors import CacheFormatError, NegativeId, ParseError, ZeroSegments
from scripts.helpers import sample_path
from services import generators
from services.frontier import BA, BV, SA, Frontier, frontier_convert
from services.graph_store import (
    CACHE_MAGIC, EVC, FVC, Graph, build_bsg_chunks, build_ssgs, chunk_ids, load_edge_list, load_graph, read_cache,
    write_cache, write_edge_list,
)


@st.composite
def graphs(draw, max_n=24, max_m=80, weighted=False):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(0, max_m))
    src = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    dst = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    w = draw(st.lists(st.integers(1, 9), min_size=m, max_size=m)) if weighted else None
    return Graph(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                 np.array(w, dtype=np.int64) if weighted else None)


# ---------------------------------------------------------------- CSR / CSC

def test_path4_adjacency(path4):
    assert (path4.n, path4.m, path4.weighted) == (4, 3, False)
    assert path4.out_offsets.tolist() == [0, 1, 2, 3, 3]
    assert path4.out_neighbors.tolist() == [1, 2, 3]
    assert path4.in_degree.tolist() == [0, 1, 1, 1]
    assert path4.edges() == [(0, 1), (1, 2), (2, 3)]


def test_weighted_sample_keeps_weights(small_weighted):
    assert small_weighted.weighted
    assert small_weighted.n == 5 and small_weighted.m == 6
    assert (0, 1, 4) in small_weighted.edges()
    assert small_weighted.in_weights is not None


@given(graphs())
def test_in_adjacency_is_the_transpose(graph):
    out_pairs = sorted(graph.edges())
    in_pairs = sorted(
        (int(graph.in_neighbors[k]), v)
        for v in range(graph.n)
        for k in range(graph.in_offsets[v], graph.in_offsets[v + 1])
    )
    assert out_pairs == in_pairs
    assert graph.out_degree.sum() == graph.in_degree.sum() == graph.m


@given(graphs(weighted=True))
def test_symmetrized_doubles_every_edge(graph):
    sym = graph.symmetrized()
    assert sym.m == 2 * graph.m
    assert sorted(sym.edges()) == sorted(graph.edges() + [(d, s, w) for s, d, w in graph.edges()])


def test_from_edges_empty():
    graph = Graph.from_edges(3, [], weighted=True)
    assert graph.m == 0 and graph.weighted
    assert graph.out_degree.tolist() == [0, 0, 0]


# ---------------------------------------------------------------- loading

def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_vertex_header_adds_isolated_vertices(tmp_path):
    graph = load_edge_list(_write(tmp_path, "g.el", "# vertices=10\n0 1\n"))
    assert graph.n == 10 and graph.m == 1


def test_comment_and_blank_lines_are_skipped(tmp_path):
    graph = load_edge_list(_write(tmp_path, "g.el", "# a comment\n\n0 1\n1 2 \n"))
    assert graph.edges() == [(0, 1), (1, 2)]


@pytest.mark.parametrize("text, error, fragment", [
    ("0 1\n2\n", ParseError, ":2: expected 2 columns"),
    ("0 x\n", ParseError, ":1: non-integer field"),
    ("0 -1\n", NegativeId, "negative vertex id"),
    ("# vertices=2\n0 5\n", ParseError, "vertex count 2 does not cover id 5"),
])
def test_malformed_edge_lists(tmp_path, text, error, fragment):
    path = _write(tmp_path, "bad.el", text)
    with pytest.raises(error) as exc:
        load_edge_list(path)
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(path)


def test_weighted_file_needs_three_columns(tmp_path):
    with pytest.raises(ParseError, match="expected 3 columns"):
        load_graph(_write(tmp_path, "g.wel", "0 1\n"))


def test_missing_file(tmp_path):
    path = str(tmp_path / "nope.el")
    with pytest.raises(ParseError, match="graph file not found"):
        load_graph(path)
    with pytest.raises(ParseError, match="graph file not found"):
        load_graph(str(tmp_path / "nope.csr"))


def test_load_graph_symmetrize():
    graph = load_graph(sample_path("path4.el"), symmetrize=True)
    assert graph.m == 6
    assert sorted(graph.out_neighbors[graph.out_offsets[1]:graph.out_offsets[2]].tolist()) == [0, 2]


def test_edge_list_round_trip_keeps_isolated_vertices(tmp_path):
    graph = Graph.from_edges(6, [(0, 1, 3), (4, 2, 7)], weighted=True)
    path = str(tmp_path / "g.wel")
    write_edge_list(graph, path)
    again = load_graph(path)
    assert again.n == 6 and again.edges() == graph.edges()


# ---------------------------------------------------------------- binary cache

def test_cache_round_trip(tmp_path, small_weighted, path4):
    for graph, weighted in ((small_weighted, True), (path4, False)):
        path = str(tmp_path / "g.csr")
        write_cache(graph, path)
        again = load_graph(path)
        assert again.weighted == weighted
        assert again.n == graph.n and again.edges() == graph.edges()
        assert again.in_offsets.tolist() == graph.in_offsets.tolist()


def test_cache_rejects_foreign_files(tmp_path):
    path = tmp_path / "g.csr"
    path.write_bytes(b"NOTCSR" + bytes(32))
    with pytest.raises(CacheFormatError, match="GWCSR1"):
        read_cache(str(path))


def test_cache_rejects_truncated_body(tmp_path, path4):
    path = tmp_path / "g.csr"
    write_cache(path4, str(path))
    data = path.read_bytes()
    assert data.startswith(CACHE_MAGIC)
    path.write_bytes(data[:-8])
    with pytest.raises(CacheFormatError, match="expected"):
        read_cache(str(path))


# ---------------------------------------------------------------- segmented subgraphs

@given(graphs(), st.integers(1, 6), st.sampled_from([FVC, EVC]), st.sampled_from(["pull", "push"]))
def test_segments_partition_the_edges(graph, k, scheme, direction):
    segments = build_ssgs(graph, k, scheme, direction)
    assert len(segments) == k
    assert sum(s.num_edges for s in segments) == graph.m
    assert segments[0].inner_lo == 0 and segments[-1].inner_hi == graph.n
    for a, b in zip(segments, segments[1:]):
        assert a.inner_hi == b.inner_lo
    for seg in segments:
        assert np.all((seg.neighbors >= seg.inner_lo) & (seg.neighbors < seg.inner_hi))
        assert len(seg.offsets) == graph.n + 1


def test_segments_keep_each_outer_vertex_adjacency(rmat_small):
    segments = build_ssgs(rmat_small, 4, FVC, "pull")
    for v in (0, 17, 255):
        merged = []
        for seg in segments:
            merged.extend(seg.neighbors[seg.offsets[v]:seg.offsets[v + 1]].tolist())
        expected = rmat_small.in_neighbors[rmat_small.in_offsets[v]:rmat_small.in_offsets[v + 1]]
        assert sorted(merged) == sorted(expected.tolist())


def test_edge_aware_segments_balance_edges(rmat_small):
    segments = build_ssgs(rmat_small, 4, EVC, "pull")
    sizes = [s.num_edges for s in segments]
    assert max(sizes) - min(sizes) <= rmat_small.out_degree.max() * 2


def test_zero_segments():
    with pytest.raises(ZeroSegments):
        build_ssgs(generators.path(4), 0)


def test_more_segments_than_vertices_leaves_empty_segments():
    segments = build_ssgs(generators.path(3), 5, FVC)
    assert len(segments) == 5
    assert sum(s.num_edges for s in segments) == 4


# ---------------------------------------------------------------- blocked chunks

@given(st.integers(0, 200), st.integers(1, 64))
def test_fixed_chunks_cover_the_range(n, grain):
    graph = generators.path(max(n, 1))
    chunks = build_bsg_chunks((0, n), graph, grain, FVC).ranges()
    covered = [v for lo, hi in chunks for v in range(lo, hi)]
    assert covered == list(range(n))
    assert all(hi - lo <= grain for lo, hi in chunks)


def test_edge_aware_chunks_cover_the_range(rmat_small):
    chunks = build_bsg_chunks((0, rmat_small.n), rmat_small, 64, EVC).ranges()
    assert chunks[0][0] == 0 and chunks[-1][1] == rmat_small.n
    for (_, hi), (lo, _) in zip(chunks, chunks[1:]):
        assert hi == lo
    assert len(chunks) < rmat_small.n


def test_chunk_grain_must_be_positive(path4):
    with pytest.raises(ValueError):
        build_bsg_chunks((0, 4), path4, 0)


def test_chunk_ids_by_position():
    assert chunk_ids([5, 1, 3, 2, 0], [1] * 6, 2, FVC) == [(0, 2), (2, 4), (4, 5)]
    degrees = [0, 5, 0, 1, 0, 1]
    assert chunk_ids([1, 3, 5], degrees, 2, EVC) == [(0, 1), (1, 3)]


# ---------------------------------------------------------------- frontiers

@given(st.integers(1, 200).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(0, n - 1)))))
def test_frontier_conversions_preserve_membership(case):
    n, members = case
    frontier = Frontier.from_ids(n, sorted(members))
    for target in (BA, BV, SA, BV, BA):
        frontier = frontier_convert(frontier, target)
        assert frontier.repr == target
        assert frontier.size == len(members)
        assert frontier.sorted_ids() == sorted(members)


def test_bitvector_word_layout():
    frontier = frontier_convert(Frontier.from_ids(130, [0, 63, 64, 129]), BV)
    words = frontier.words()
    assert words.dtype == np.uint64 and len(words) == 3
    assert int(words[0]) == (1 | (1 << 63))
    assert int(words[1]) == 1
    assert int(words[2]) == 2
    member = frontier.member_test()
    assert member(63) and member(129) and not member(1)


def test_frontier_constructors_and_add_vertex(path4):
    assert Frontier.full(4).sorted_ids() == [0, 1, 2, 3]
    assert Frontier.empty(4).size == 0
    frontier = Frontier.from_flags(np.array([False, True, False, True]))
    assert frontier.repr == BA and frontier.size == 2
    assert frontier.sum_out_degrees(path4.out_degree) == 1
    frontier.add_vertex(2)
    assert frontier.repr == SA and frontier.sorted_ids() == [1, 2, 3]
    assert frontier.sum_out_degrees(path4.out_degree) == 2


def test_unknown_representation():
    with pytest.raises(ValueError):
        frontier_convert(Frontier.empty(2), "XX")


# ---------------------------------------------------------------- generators

def test_rmat_is_simple_and_seeded():
    a = generators.rmat(128, 1024, seed=5, symmetric=False)
    b = generators.rmat(128, 1024, seed=5, symmetric=False)
    assert a.edges() == b.edges()
    pairs = a.edges()
    assert len(pairs) == len(set(pairs))
    assert all(s != d for s, d in pairs)


def test_symmetric_rmat_has_both_directions(rmat_symmetric):
    pairs = set(rmat_symmetric.edges())
    assert all((d, s) in pairs for s, d in pairs)


@pytest.mark.parametrize("kind, n, expected_n, expected_m", [
    ("path", 5, 5, 8),
    ("cycle", 5, 5, 10),
    ("grid", 3, 9, 24),
    ("star", 4, 4, 6),
    ("complete", 4, 4, 12),
])
def test_named_generators(kind, n, expected_n, expected_m):
    graph = generators.generate(kind, n)
    assert (graph.n, graph.m) == (expected_n, expected_m)


def test_bipartite_ratings_point_from_users_to_items():
    graph = generators.bipartite(10, 6, 3, seed=1)
    assert graph.weighted and graph.m == 30
    src, dst, w = graph.edge_arrays()
    assert src.max() < 10 and dst.min() >= 10
    assert w.min() >= 1 and w.max() <= 5


def test_unknown_generator():
    with pytest.raises(ValueError, match="unknown generator"):
        generators.generate("hypercube", 4)
