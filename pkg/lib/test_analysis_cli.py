#!/usr/bin/env python3
"""Tests for analysis_cli module."""

import csv
import io
import json
import shutil
import tempfile
from pathlib import Path

import pytest
import yaml

from lib.analysis_cli import (EXIT_INVARIANT, EXIT_OK, EXIT_PARSE, EXIT_USAGE, compute_puls,
                              degree_bucket_edges, main, parse_beta_range, resolve_centers,
                              run_sweep)
from lib.fixtures import (clustered_graph, complete_graph, disjoint_union,
                          heterogeneous_clustered_graph, ladder_graph)
from lib.graph_core import ArgumentError, read_text, write_edge_list
from lib.rcp_policy import RcpPolicy


class TestHelpers:
    """Test the pure helpers behind the commands."""

    def test_degree_buckets(self):
        """Test power-of-base bucket boundaries."""
        assert degree_bucket_edges(0) == [0, 1]
        assert degree_bucket_edges(5) == [0, 1, 2, 4, 8]
        assert degree_bucket_edges(9, base=3) == [0, 1, 3, 9, 27]
        with pytest.raises(ArgumentError):
            degree_bucket_edges(5, base=1)

    def test_parse_beta_range(self):
        """Test A:B parsing."""
        assert parse_beta_range("3:10") == (3, 10)
        assert parse_beta_range("4") == (4, 4)
        for bad in ("5:4", "0:3", "a:b", "1:2:3"):
            with pytest.raises(ArgumentError):
                parse_beta_range(bad)

    def test_resolve_centers(self):
        """Test label resolution and near-miss hints."""
        graph = ladder_graph()
        assert resolve_centers(graph, "p1, m") == [graph.index_of("p1"), graph.index_of("m")]
        with pytest.raises(ArgumentError) as exc_info:
            resolve_centers(graph, "p9")
        assert "did you mean" in str(exc_info.value)
        assert "p2" in str(exc_info.value)

    def test_resolve_centers_prefix_hint(self):
        """Test that labels sharing the first character are offered when nothing is close."""
        graph = ladder_graph()
        with pytest.raises(ArgumentError, match="did you mean p1, p2, p3"):
            resolve_centers(graph, "pzzzzzz")
        with pytest.raises(ArgumentError) as exc_info:
            resolve_centers(graph, "zzz")
        assert "did you mean" not in str(exc_info.value)

    def test_sweep_on_clique(self):
        """Test that every clique node reaches a domain of the whole clique."""
        graph = complete_graph(30)
        result = run_sweep(graph, RcpPolicy.sweep(3, 4), threshold=30)

        rows = result.rows()
        assert [row["beta"] for row in rows] == [3, 4]
        assert all(row["fraction"] == 1.0 and row["nodes"] == 30 for row in rows)
        assert rows[0]["bucket_lo"] == 16 and rows[0]["bucket_hi"] == 32

    def test_sweep_threshold_not_reached(self):
        """Test a threshold above the graph size."""
        result = run_sweep(ladder_graph(), [RcpPolicy(4, 3)], threshold=15)
        assert all(row["hits"] == 0 for row in result.rows())
        assert sum(row["nodes"] for row in result.rows()) == 14

    def test_puls(self):
        """Test group shares of the largest supercore."""
        graph = disjoint_union(complete_graph(6), complete_graph(4))
        groups = {i: ("red" if graph.label(i).startswith("g0_") else "blue")
                  for i in graph.nodes()}

        table = compute_puls(graph, groups, [RcpPolicy(3, 2)])

        assert table.puls("red", 2) == 1.0
        assert table.puls("blue", 2) == 0.0
        assert table.largest_sizes == {2: 6}
        assert [row["group"] for row in table.rows()] == ["blue", "red"]

    def test_puls_without_groups(self):
        """Test that an empty attribute mapping is rejected."""
        with pytest.raises(ArgumentError):
            compute_puls(complete_graph(4), {}, [RcpPolicy(3, 2)])

    def test_sweep_trends_in_beta_and_degree(self):
        """Test that large domains thin out as beta rises and gather at high degree."""
        graph = heterogeneous_clustered_graph(600, seed=4)
        result = run_sweep(graph, RcpPolicy.sweep(3, 5), threshold=150, bucket_base=4)

        assert result.bucket_edges[:4] == [0, 1, 4, 16]
        for k in range(len(result.buckets)):
            fractions = [result.fraction(beta, k) for beta in (3, 4, 5)]
            assert fractions == sorted(fractions, reverse=True)

        populated = [k for k in range(len(result.buckets))
                     if result.counts.get((3, k), (0, 0))[1] >= 10]
        trend = [result.fraction(3, k) for k in populated]
        assert trend == sorted(trend)
        assert trend[0] < 0.1
        assert trend[-1] > 0.9

    def test_puls_spreads_evenly_over_a_homogeneous_ring(self):
        """Test that two halves of one clique ring share the largest supercore equally."""
        graph = clustered_graph(240, seed=7)
        groups = {graph.index_of(f"n{i}"): ("east" if i < 120 else "west") for i in range(240)}

        table = compute_puls(graph, groups, [RcpPolicy(4, 3)])

        assert table.largest_sizes[3] >= 0.8 * 240
        assert abs(table.puls("east", 3) - table.puls("west", 3)) <= 0.15


class TestMain:
    """Test the command-line entry point end to end."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = Path(tempfile.mkdtemp())
        self.config_path = self.temp_dir / "config.yaml"
        self.write_config({})

    def teardown_method(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def write_config(self, data):
        with open(self.config_path, "w") as f:
            yaml.dump(data, f)

    def write_graph(self, graph, name="graph.edges"):
        path = self.temp_dir / name
        with open(path, "w") as f:
            write_edge_list(graph, f)
        return str(path)

    def run(self, *argv):
        return main(["--config", str(self.config_path), *argv])

    def test_stats_k4(self, capsys):
        """Test statistics of K4 as JSON."""
        code = self.run("stats", "-i", self.write_graph(complete_graph(4)))

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["node_count"] == 4
        assert data["avg_degree"] == 3.0
        assert data["clustering_coefficient"] == 1.0
        assert data["summary"]["C.C."] == "1.000"

    def test_stats_csv(self, capsys):
        """Test statistics of the ladder as CSV."""
        code = self.run("stats", "-i", self.write_graph(ladder_graph()), "--format", "csv")

        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert rows[0]["node_count"] == "14"
        assert rows[0]["link_count"] == "25"

    def test_domains_ladder(self, capsys):
        """Test the p1 row of the ladder."""
        code = self.run("domains", "-i", self.write_graph(ladder_graph()),
                        "--alpha", "4", "--beta", "3", "--centers", "p1,m", "--emit-members")

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        rows = {row["label"]: row for row in data["rows"]}
        assert rows["p1"]["backbone_size"] == 5
        assert rows["p1"]["domain_size"] == 14
        assert rows["m"]["backbone"] == ["m"]
        assert rows["m"]["domain_size"] == 5
        assert data["supercore_count"] == 11

    def test_domains_to_output_dir(self):
        """Test that --output writes <command>.<format>."""
        out_dir = self.temp_dir / "out"
        code = self.run("domains", "-i", self.write_graph(ladder_graph()), "-o", str(out_dir),
                        "--format", "csv")

        assert code == EXIT_OK
        rows = list(csv.DictReader((out_dir / "domains.csv").open()))
        assert len(rows) == 14

    def test_domains_config_policy(self, capsys):
        """Test that the policy comes from the config file."""
        self.write_config({"policy": {"alpha": 2, "beta": 1}})
        code = self.run("domains", "-i", self.write_graph(ladder_graph()), "--centers", "c11")

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["policy"] == {"alpha": 2, "beta": 1}

    def test_domains_trace_and_engine(self):
        """Test the admission trace and the engine comparison."""
        trace_path = self.temp_dir / "trace.jsonl"
        out_dir = self.temp_dir / "out"
        code = self.run("domains", "-i", self.write_graph(ladder_graph()), "--centers", "p1",
                        "--trace", str(trace_path), "--compare-engine", "-o", str(out_dir))

        assert code == EXIT_OK
        steps = [json.loads(line) for line in trace_path.read_text().splitlines()]
        assert [step["rule"] for step in steps] == ["A", "A", "A", "B"]
        data = json.loads((out_dir / "domains.json").read_text())
        assert data["engine_comparison"]["equality_rate"] == 1.0

    def test_counterexamples_written(self):
        """Test that strict-subset backbones are written as artifacts."""
        edges = [(f"{p}{i}", f"{p}{j}") for p in "ab" for i in range(1, 6) for j in range(i + 1, 6)]
        edges += [("b1", "a1"), ("b1", "a2"), ("a3", "b2"), ("m", "a3"), ("m", "b2")]
        graph = read_text("".join(f"{u} {v}\n" for u, v in edges))
        out_dir = self.temp_dir / "out"

        code = self.run("domains", "-i", self.write_graph(graph), "--alpha", "2", "--beta", "3",
                        "--compare-engine", "-o", str(out_dir))

        assert code == EXIT_OK
        written = sorted(p.name for p in (out_dir / "counterexamples").glob("*.json"))
        assert written == [f"counterexample_2_3_a{k}.json" for k in range(1, 6)]

    def test_unknown_center(self, capsys):
        """Test that an unknown center is a usage error with a hint."""
        code = self.run("domains", "-i", self.write_graph(ladder_graph()), "--centers", "p9")

        assert code == EXIT_USAGE
        assert "did you mean" in capsys.readouterr().err

    def test_trace_needs_centers(self):
        """Test that --trace without --centers is a usage error."""
        code = self.run("domains", "-i", self.write_graph(ladder_graph()),
                        "--trace", str(self.temp_dir / "t.jsonl"))
        assert code == EXIT_USAGE

    def test_parse_error(self, capsys):
        """Test that a malformed edge list exits with 2."""
        path = self.temp_dir / "bad.edges"
        path.write_text("a b\na b c\n")

        code = self.run("stats", "-i", str(path))

        assert code == EXIT_PARSE
        assert "line 2" in capsys.readouterr().err

    def test_missing_input_file(self):
        """Test that an unreadable input exits with 2."""
        assert self.run("stats", "-i", str(self.temp_dir / "missing.edges")) == EXIT_PARSE

    def test_invalid_config(self):
        """Test that an invalid config exits with 2."""
        self.write_config({"policy": {"alpha": 0}})
        assert self.run("stats", "-i", self.write_graph(complete_graph(4))) == EXIT_PARSE

    def test_invalid_policy(self):
        """Test that a non-positive alpha is a usage error."""
        code = self.run("domains", "-i", self.write_graph(complete_graph(4)), "--alpha", "0")
        assert code == EXIT_USAGE

    def test_argparse_error(self):
        """Test that a missing required argument exits with 1."""
        with pytest.raises(SystemExit) as exc_info:
            self.run("stats")
        assert exc_info.value.code == EXIT_USAGE

    def test_sweep_clique(self, capsys):
        """Test the sweep command on a clique."""
        code = self.run("sweep", "-i", self.write_graph(complete_graph(40)),
                        "--beta-range", "3:5", "--threshold", "40")

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert [row["fraction"] for row in data["rows"]] == [1.0, 1.0, 1.0]
        assert data["policies"][0] == {"alpha": 4, "beta": 3}

    def test_sweep_edgeless(self, capsys):
        """Test the sweep command on isolated nodes from a node list."""
        edges = self.temp_dir / "empty.edges"
        edges.write_text("# no edges\n")
        nodes = self.temp_dir / "nodes.txt"
        nodes.write_text("u1\nu2\nu3\n")

        code = self.run("sweep", "-i", str(edges), "--nodes", str(nodes),
                        "--beta-range", "3:3", "--threshold", "2")

        assert code == EXIT_OK
        rows = json.loads(capsys.readouterr().out)["rows"]
        assert rows == [{"beta": 3, "alpha": 4, "bucket_lo": 0, "bucket_hi": 1,
                         "nodes": 3, "hits": 0, "fraction": 0.0}]

    def test_puls(self, capsys):
        """Test the PULS command with an attribute file."""
        graph = disjoint_union(complete_graph(6), complete_graph(4))
        attributes = self.temp_dir / "groups.tsv"
        lines = [f"{label}\t{'red' if label.startswith('g0_') else 'blue'}" for label in graph.labels]
        attributes.write_text("\n".join(lines + ["ghost\tred"]) + "\n")

        code = self.run("puls", "-i", self.write_graph(graph), "-a", str(attributes),
                        "--beta-range", "2:2")

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["skipped_attributes"] == 1
        shares = {row["group"]: row["puls"] for row in data["rows"]}
        assert shares == {"blue": 0.0, "red": 1.0}

    def test_generate(self):
        """Test that a generated edge list reloads."""
        path = self.temp_dir / "synthetic.edges"
        code = self.run("generate", "--nodes", "60", "--seed", "3", "-o", str(path))

        assert code == EXIT_OK
        graph = read_text(path.read_text())
        assert graph.node_count == 60

    def test_simulate(self):
        """Test a small simulation writing its reports."""
        self.write_config({"simulation": {
            "sizes": {"n_good": 150, "n_bad": 4},
            "seeds": [1],
            "baseline_sample": 10,
        }})
        out_dir = self.temp_dir / "sim"

        code = self.run("simulate", "-o", str(out_dir))

        assert code == EXIT_OK
        report = json.loads((out_dir / "simulation_report.json").read_text())
        assert report["purity_ok"]
        rows = list(csv.DictReader((out_dir / "simulation_summary.csv").open()))
        assert rows[0]["alpha"] == "4"
        assert not (out_dir / "purity_offenders.json").exists()

    def test_simulate_seed_override(self, capsys):
        """Test that --seed runs one seed and prints JSON."""
        self.write_config({"simulation": {
            "sizes": {"n_good": 120, "n_bad": 3},
            "seeds": [1, 2, 3],
            "baseline_sample": 5,
        }})

        code = self.run("simulate", "--seed", "9")

        assert code == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert [run["seed"] for run in data["runs"]] == [9]

    def test_simulate_negative_control(self, capsys):
        """Test that a purity failure exits with 3 and names offenders."""
        self.write_config({"simulation": {
            "sizes": {"n_good": 150, "n_bad": 4},
            "seeds": [2],
            "baseline_sample": 10,
            "negative_control": {"ties": 2, "mutual_friends": 3},
        }})
        out_dir = self.temp_dir / "sim"

        code = self.run("simulate", "-o", str(out_dir))

        assert code == EXIT_INVARIANT
        offenders = json.loads((out_dir / "purity_offenders.json").read_text())
        assert offenders and offenders[0]["offenders"]
        assert "purity violated" in capsys.readouterr().err
