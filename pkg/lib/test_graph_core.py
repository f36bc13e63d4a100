#!/usr/bin/env python3
"""Tests for graph_core module."""

import io
import random
import shutil
import tempfile
from pathlib import Path

import networkx as nx
import pytest

from lib.fixtures import complete_graph, cycle_graph, ladder_graph, path_graph
from lib.graph_core import (ArgumentError, EmptyGraphError, GraphBuilder, GraphParseError,
                            InvariantError, LoadMode, SocialGraph, from_networkx, graph_stats,
                            is_strong_tie, load_edge_list, load_edge_list_file,
                            load_node_attributes, read_text, tie_strength,
                            write_edge_list)


def random_graph(n, p, seed):
    return from_networkx(nx.gnp_random_graph(n, p, seed=seed), prefix="v")


class TestLoadEdgeList:
    """Test edge list loading."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_undirected_dedup_and_self_loop(self):
        """Test that reversed duplicates collapse and self-loops are dropped."""
        graph = read_text("a b\nb a\na a\n")

        assert graph.node_count == 2
        assert graph.link_count == 1
        assert graph.load_report.self_loops_dropped == 1
        assert graph.load_report.duplicates_collapsed == 1

    def test_mutual_only(self):
        """Test that mutual-only mode keeps symmetric pairs only."""
        graph = read_text("a b\nb a\nb c\n", mode=LoadMode.MUTUAL_ONLY)

        assert graph.labels == ("a", "b")
        assert graph.link_count == 1
        assert graph.load_report.asymmetric_dropped == 1
        assert graph.load_report.isolated_dropped == 1

    def test_mutual_only_retain_isolated(self):
        """Test that retain_isolated keeps the node left without edges."""
        graph = read_text("a b\nb a\nb c\n", mode="mutual-only", retain_isolated=True)

        assert graph.node_count == 3
        assert graph.degree(graph.index_of("c")) == 0

    def test_triangle_with_duplicate_and_comment(self):
        """Test a five-line triangle file."""
        text = "# triangle\na b\nb c\nc,a\na b\n"
        graph = read_text(text)

        assert graph.node_count == 3
        assert graph.link_count == 3
        assert graph.load_report.comment_lines == 1

    def test_byte_stream(self):
        """Test loading from a binary stream."""
        graph = load_edge_list(io.BytesIO(b"1 2\n2 3\n"))
        assert graph.labels == ("1", "2", "3")

    def test_malformed_line(self):
        """Test that a line with three tokens reports its line number."""
        with pytest.raises(GraphParseError) as exc_info:
            read_text("a b\n# ok\na b c\n")
        assert exc_info.value.line_number == 3
        assert "line 3" in str(exc_info.value)

    def test_invalid_utf8(self):
        """Test that undecodable bytes are a parse error naming the line."""
        with pytest.raises(GraphParseError) as exc_info:
            load_edge_list(io.BytesIO(b"a b\n# note\nc \xff\n"))
        assert exc_info.value.line_number == 3
        assert "line 3" in str(exc_info.value)
        assert "invalid UTF-8" in str(exc_info.value)

    def test_invalid_utf8_in_attributes(self):
        """Test that undecodable attribute bytes report their line."""
        graph = path_graph(3)
        with pytest.raises(GraphParseError) as exc_info:
            load_node_attributes(io.BytesIO(b"v0\tnorth\nv1\t\xfe\n"), graph)
        assert exc_info.value.line_number == 2

    def test_empty_input(self):
        """Test that empty input is an error."""
        with pytest.raises(EmptyGraphError):
            read_text("# nothing here\n\n")

    def test_only_self_loops(self):
        """Test that a file of self-loops has no edges to keep."""
        with pytest.raises(EmptyGraphError):
            read_text("a a\n")

    def test_node_list_sidecar(self):
        """Test that sidecar nodes are kept even when isolated."""
        graph = read_text("a b\n", node_labels=["z"])
        assert graph.labels == ("a", "b", "z")

    def test_deterministic_indexing(self):
        """Test that loading the same file twice yields identical graphs."""
        path = Path(self.temp_dir) / "g.edges"
        path.write_text("x y\ny z\nz w\nw x\n")

        first = load_edge_list_file(path)
        second = load_edge_list_file(str(path))

        assert first == second
        assert first.labels == ("x", "y", "z", "w")

    def test_write_edge_list_round_trip(self):
        """Test that a written edge list reloads to the same graph."""
        graph = ladder_graph()
        buffer = io.StringIO()
        write_edge_list(graph, buffer)

        reloaded = read_text(buffer.getvalue())

        assert reloaded.node_count == graph.node_count
        assert reloaded.link_count == graph.link_count


class TestSocialGraph:
    """Test SocialGraph invariants and queries."""

    def test_symmetry_and_no_self_loops_on_random_graphs(self):
        """Test adjacency symmetry and absence of self-loops."""
        for seed in range(10):
            graph = random_graph(25, 0.2, seed)
            for i in graph.nodes():
                assert i not in graph.neighbor_set(i)
                assert list(graph.neighbors(i)) == sorted(graph.neighbors(i))
                for j in graph.neighbors(i):
                    assert graph.has_edge(j, i)

    def test_asymmetric_adjacency_rejected(self):
        """Test that an asymmetric adjacency is an invariant failure."""
        with pytest.raises(InvariantError):
            SocialGraph(["a", "b"], [[1], []])

    def test_self_loop_rejected(self):
        """Test that a self-loop in a raw adjacency is rejected."""
        with pytest.raises(InvariantError):
            SocialGraph(["a"], [[0]])

    def test_duplicate_labels_rejected(self):
        """Test that labels must be unique."""
        with pytest.raises(ArgumentError):
            SocialGraph(["a", "a"], [[], []])

    def test_label_lookup(self):
        """Test the index/label bijection."""
        graph = path_graph(3)
        assert graph.index_of("v1") == 1
        assert graph.label(2) == "v2"
        assert graph.has_label("v0")
        assert not graph.has_label("v9")
        with pytest.raises(ArgumentError):
            graph.index_of("v9")
        with pytest.raises(ArgumentError):
            graph.label(7)

    def test_induced_components(self):
        """Test components of induced subgraphs."""
        graph = path_graph(5)
        assert graph.induced_components([0, 1, 3, 4]) == [{0, 1}, {3, 4}]
        assert graph.is_connected_set([1, 2, 3])
        assert not graph.is_connected_set([0, 2])
        assert not graph.is_connected_set([])

    def test_closed_neighborhood(self):
        """Test F(i) plus i."""
        graph = path_graph(3)
        assert graph.closed_neighborhood(1) == frozenset({0, 1, 2})

    def test_to_networkx(self):
        """Test conversion keeps nodes and edges."""
        graph = ladder_graph()
        nx_graph = graph.to_networkx()
        assert nx_graph.number_of_nodes() == 14
        assert nx_graph.number_of_edges() == 25

    def test_builder_keep_remaps(self):
        """Test that building with keep drops nodes and remaps indices."""
        builder = GraphBuilder()
        builder.add_edge("a", "b")
        builder.add_node("c")
        builder.add_edge("c", "d")
        graph = builder.build(keep={0, 1, 3})

        assert graph.labels == ("a", "b", "d")
        assert graph.link_count == 1

    def test_builder_rejects_self_loop(self):
        """Test that the builder refuses self-loops."""
        builder = GraphBuilder()
        builder.add_node("a")
        with pytest.raises(ArgumentError):
            builder.add_edge_by_index(0, 0)


class TestTieStrength:
    """Test tie strength and the strong-tie predicate."""

    def test_triangle(self):
        """Test that a triangle edge has strength 1."""
        graph = cycle_graph(3)
        assert tie_strength(graph, 0, 1) == 1

    def test_complete_graph(self):
        """Test K_n edge strength n - 2."""
        for n in (4, 5, 7):
            graph = complete_graph(n)
            for i, j in graph.edges():
                assert tie_strength(graph, i, j) == n - 2

    def test_path(self):
        """Test that a path edge has no common neighbor."""
        graph = path_graph(3)
        assert tie_strength(graph, 0, 1) == 0

    def test_non_adjacent_pair(self):
        """Test strength of a non-edge and the adjacency requirement of strong ties."""
        graph = path_graph(3)
        assert tie_strength(graph, 0, 2) == 1
        assert not is_strong_tie(graph, 0, 2, 1)
        assert not is_strong_tie(graph, 0, 1, 1)

    def test_same_node(self):
        """Test that i == j is an argument error."""
        with pytest.raises(ArgumentError):
            tie_strength(path_graph(3), 1, 1)

    def test_symmetric_on_random_graphs(self):
        """Test tie_strength(i, j) == tie_strength(j, i)."""
        rng = random.Random(3)
        for seed in range(5):
            graph = random_graph(20, 0.3, seed)
            for _ in range(30):
                i, j = rng.sample(range(graph.node_count), 2)
                assert tie_strength(graph, i, j) == tie_strength(graph, j, i)

    def test_ladder_path_edges(self):
        """Test that ladder path edges have strength 4 and hub ties 2."""
        graph = ladder_graph()
        p = [graph.index_of(f"p{k}") for k in range(1, 5)]
        m = graph.index_of("m")
        assert tie_strength(graph, p[0], p[1]) == 4
        assert tie_strength(graph, m, p[0]) == 1
        assert tie_strength(graph, m, p[1]) == 2


class TestGraphStats:
    """Test descriptive statistics."""

    def test_k4(self):
        """Test K4 statistics."""
        stats = graph_stats(complete_graph(4))
        assert stats.avg_degree == 3.0
        assert stats.clustering_coefficient == 1.0

    def test_five_cycle(self):
        """Test 5-cycle statistics."""
        stats = graph_stats(cycle_graph(5))
        assert stats.avg_degree == 2.0
        assert stats.clustering_coefficient == 0.0

    def test_triangle_with_pendant(self):
        """Test average local clustering with a degree-1 node."""
        graph = read_text("a b\nb c\nc a\na d\n")
        stats = graph_stats(graph)
        assert stats.clustering_coefficient == pytest.approx((1 / 3 + 1 + 1) / 4)
        assert stats.to_dict()["clustering_coefficient"] == 0.583333

    def test_matches_networkx(self):
        """Test clustering and degree against networkx."""
        graph = random_graph(40, 0.15, 11)
        nx_graph = graph.to_networkx()
        stats = graph_stats(graph)
        assert stats.avg_degree == pytest.approx(2 * nx_graph.number_of_edges() / 40)
        assert stats.clustering_coefficient == pytest.approx(nx.average_clustering(nx_graph))

    def test_squared_ring_with_pendant(self):
        """Test average clustering on a square of a 12-cycle with one pendant."""
        graph = read_text("".join(f"c{i} c{(i + k) % 12}\n" for i in range(12) for k in (1, 2))
                          + "c0 leaf\n")
        stats = graph_stats(graph)
        # ring nodes 3/6, c0 3/10 with the pendant, the pendant 0
        assert stats.clustering_coefficient == pytest.approx((11 * 0.5 + 0.3) / 13)
        assert stats.node_count == 13

    def test_empty_graph(self):
        """Test that statistics of an empty graph are an error."""
        with pytest.raises(EmptyGraphError):
            graph_stats(SocialGraph([], []))


class TestNodeAttributes:
    """Test the attribute TSV loader."""

    def test_skips_unknown_labels(self):
        """Test that unknown labels are skipped and counted."""
        graph = path_graph(3)
        source = io.StringIO("v0\tnorth\nv2\tsouth\nghost\tnorth\n# comment\n")

        groups, skipped = load_node_attributes(source, graph)

        assert groups == {0: "north", 2: "south"}
        assert skipped == 1

    def test_malformed_line(self):
        """Test that a one-field line is a parse error."""
        with pytest.raises(GraphParseError):
            load_node_attributes(io.StringIO("v0\n"), path_graph(3))
