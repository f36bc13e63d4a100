#!/usr/bin/env python3
"""
Command-line surface: graph statistics, domains, policy sweeps, PULS tables
and resilience simulations.

Every command returns an exit code: 0 on success, 1 for usage errors,
2 for unreadable input or configuration, 3 when an invariant fails.
"""

import argparse
import csv
import difflib
import io
import json
import os
import sys
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config_loader import ConfigLoader, ConfigValidationError
from .fixtures import clustered_graph, heterogeneous_clustered_graph
from .graph_core import (ArgumentError, EmptyGraphError, GraphParseError, InvariantError,
                         LoadMode, SocialGraph, graph_stats, load_edge_list_file,
                         load_node_attributes, write_edge_list)
from .logger_config import get_logger, setup_from_env, setup_logging
from .percolation import compose_backbone, write_trace_jsonl
from .rcp_policy import RcpPolicy
from .resilience_sim import RESILIENCE_CSV_FIELDS, run_experiment
from .supercore import compare_with_engine, run_pipeline, write_counterexample

logger = get_logger("analysis_cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INVARIANT = 3


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser reporting usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _round_floats(value: Any, precision: int) -> Any:
    if isinstance(value, float):
        return round(value, precision)
    if isinstance(value, dict):
        return {k: _round_floats(v, precision) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v, precision) for v in value]
    return value


def _csv_text(rows: Sequence[Dict[str, Any]], fields: Sequence[str], precision: int) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields), extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            k: (f"{v:.{precision}f}" if isinstance(v, float) else v) for k, v in row.items()
        })
    return buffer.getvalue()


@dataclass
class CommandOutput:
    """What a command renders: a JSON document and its tabular CSV form."""
    command: str
    document: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    fields: List[str] = field(default_factory=list)

    def render(self, fmt: str, precision: int) -> str:
        if fmt == "csv":
            return _csv_text(self.rows, self.fields, precision)
        return json.dumps(_round_floats(self.document, precision), indent=2) + "\n"

    def emit(self, fmt: str, precision: int, output_dir: Optional[Path] = None) -> None:
        text = self.render(fmt, precision)
        if output_dir is None:
            sys.stdout.write(text)
            return
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / f"{self.command}.{fmt}"
        path.write_text(text)
        logger.info(f"Wrote {path}")


def degree_bucket_edges(max_degree: int, base: int = 2) -> List[int]:
    """
    Bucket boundaries 0, 1, base, base^2, ... past ``max_degree``.

    Bucket k holds degrees in [edges[k], edges[k + 1]).
    """
    if base < 2:
        raise ArgumentError(f"bucket base must be >= 2, got {base}")
    edges = [0, 1]
    while edges[-1] <= max_degree:
        edges.append(edges[-1] * base)
    return edges


@dataclass
class SweepResult:
    """Share of nodes with a complete domain of at least ``threshold`` nodes, per beta and degree bucket."""
    threshold: int
    bucket_edges: List[int]
    policies: List[RcpPolicy]
    counts: Dict[Tuple[int, int], Tuple[int, int]]

    @property
    def buckets(self) -> List[Tuple[int, int]]:
        return list(zip(self.bucket_edges[:-1], self.bucket_edges[1:]))

    def fraction(self, beta: int, bucket: int) -> float:
        hits, total = self.counts.get((beta, bucket), (0, 0))
        return hits / total if total else 0.0

    def rows(self) -> List[Dict[str, Any]]:
        """Populated (beta, bucket) cells, ordered by beta then bucket."""
        rows = []
        for policy in self.policies:
            for k, (lo, hi) in enumerate(self.buckets):
                hits, total = self.counts.get((policy.beta, k), (0, 0))
                if not total:
                    continue
                rows.append({
                    "beta": policy.beta,
                    "alpha": policy.alpha,
                    "bucket_lo": lo,
                    "bucket_hi": hi,
                    "nodes": total,
                    "hits": hits,
                    "fraction": hits / total,
                })
        return rows


SWEEP_FIELDS = ["beta", "alpha", "bucket_lo", "bucket_hi", "nodes", "hits", "fraction"]


def run_sweep(graph: SocialGraph, policies: Sequence[RcpPolicy], threshold: int,
              bucket_base: int = 2) -> SweepResult:
    edges = degree_bucket_edges(max((graph.degree(i) for i in graph.nodes()), default=0),
                                bucket_base)
    node_bucket = [bisect_right(edges, graph.degree(i)) - 1 for i in graph.nodes()]
    counts: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for policy in policies:
        sizes = run_pipeline(graph, policy).domain_sizes()
        for node, size in enumerate(sizes):
            key = (policy.beta, node_bucket[node])
            hits, total = counts.get(key, (0, 0))
            counts[key] = (hits + (size >= threshold), total + 1)
    return SweepResult(threshold, edges, list(policies), counts)


@dataclass
class PulsTable:
    """Percentage of each group's members inside the largest supercore, per beta."""
    groups: List[str]
    policies: List[RcpPolicy]
    group_sizes: Dict[str, int]
    in_largest: Dict[Tuple[str, int], int]
    largest_sizes: Dict[int, int]

    def puls(self, group: str, beta: int) -> float:
        return self.in_largest.get((group, beta), 0) / self.group_sizes[group]

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "group": group,
                "beta": policy.beta,
                "alpha": policy.alpha,
                "group_size": self.group_sizes[group],
                "in_largest": self.in_largest.get((group, policy.beta), 0),
                "largest_supercore": self.largest_sizes[policy.beta],
                "puls": self.puls(group, policy.beta),
            }
            for group in self.groups
            for policy in self.policies
        ]


PULS_FIELDS = ["group", "beta", "alpha", "group_size", "in_largest", "largest_supercore", "puls"]


def compute_puls(graph: SocialGraph, groups: Dict[int, str],
                 policies: Sequence[RcpPolicy]) -> PulsTable:
    """
    The largest supercore is picked by total member count; shares are taken within each group.

    Raises:
        ArgumentError: If no node carries a group
    """
    if not groups:
        raise ArgumentError("attribute file assigns no graph node to a group")
    names = sorted(set(groups.values()))
    sizes = {name: 0 for name in names}
    for name in groups.values():
        sizes[name] += 1
    in_largest: Dict[Tuple[str, int], int] = {}
    largest_sizes = {}
    for policy in policies:
        result = run_pipeline(graph, policy)
        largest = result.dag.supercores[result.dag.largest()]
        largest_sizes[policy.beta] = len(largest)
        for node in largest:
            name = groups.get(node)
            if name is not None:
                in_largest[(name, policy.beta)] = in_largest.get((name, policy.beta), 0) + 1
    return PulsTable(names, list(policies), sizes, in_largest, largest_sizes)


def parse_beta_range(text: str) -> Tuple[int, int]:
    """Parse 'A:B' (or a single 'A') into an inclusive range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError(text)
    except ValueError:
        raise ArgumentError(f"beta range must look like A:B, got {text!r}")
    if lo < 1 or hi < lo:
        raise ArgumentError(f"beta range {text!r} is empty or below 1")
    return lo, hi


def resolve_centers(graph: SocialGraph, text: str) -> List[int]:
    """
    Map a comma-separated label list to node indices.

    Raises:
        ArgumentError: For an unknown label, naming its closest matches
    """
    centers = []
    for label in (part.strip() for part in text.split(",")):
        if not label:
            continue
        if not graph.has_label(label):
            near = difflib.get_close_matches(label, graph.labels, n=3, cutoff=0.4)
            if not near:
                near = sorted(known for known in graph.labels if known[:1] == label[:1])[:3]
            hint = f"; did you mean {', '.join(near)}?" if near else ""
            raise ArgumentError(f"unknown center {label!r}{hint}")
        centers.append(graph.index_of(label))
    if not centers:
        raise ArgumentError("--centers names no node")
    return centers


class AnalysisCli:
    """Dispatch parsed arguments to the command handlers."""

    def __init__(self, args: argparse.Namespace, config: Dict[str, Any]):
        self.args = args
        self.config = config
        output = config.get("output", {})
        self.precision = output.get("precision", 6)
        self.member_limit = output.get("member_limit", 10000)
        self.fmt = getattr(args, "format", None) or output.get("format", "json")
        self.output_dir = Path(args.output).expanduser() if getattr(args, "output", None) else None

    def load_graph(self) -> SocialGraph:
        node_labels = None
        if self.args.nodes:
            with open(Path(self.args.nodes).expanduser()) as f:
                node_labels = [line.strip() for line in f
                               if line.strip() and not line.startswith("#")]
        return load_edge_list_file(
            self.args.input,
            mode=LoadMode(self.args.mode),
            retain_isolated=self.args.retain_isolated,
            node_labels=node_labels,
        )

    def policy(self) -> RcpPolicy:
        defaults = self.config.get("policy", {})
        alpha = self.args.alpha if self.args.alpha is not None else defaults.get("alpha", 4)
        beta = self.args.beta if self.args.beta is not None else defaults.get("beta", 3)
        return RcpPolicy(alpha, beta)

    def sweep_policies(self) -> List[RcpPolicy]:
        sweep = self.config.get("sweep", {})
        if self.args.beta_range:
            lo, hi = parse_beta_range(self.args.beta_range)
        else:
            lo, hi = sweep.get("beta_min", 3), sweep.get("beta_max", 10)
        return RcpPolicy.sweep(lo, hi, self.args.alpha)

    def emit(self, output: CommandOutput) -> None:
        output.emit(self.fmt, self.precision, self.output_dir)

    def cmd_stats(self) -> int:
        graph = self.load_graph()
        stats = graph_stats(graph)
        row = stats.to_dict(self.precision)
        document = {
            **row,
            "summary": {
                "Nodes": stats.node_count,
                "Links": stats.link_count,
                "Avg deg": f"{stats.avg_degree:.2f}",
                "C.C.": f"{stats.clustering_coefficient:.3f}",
            },
            "load_report": graph.load_report.to_dict() if graph.load_report else None,
        }
        self.emit(CommandOutput("stats", document, [row], list(row)))
        return EXIT_OK

    def cmd_domains(self) -> int:
        graph = self.load_graph()
        policy = self.policy()
        result = run_pipeline(graph, policy)
        centers = (resolve_centers(graph, self.args.centers) if self.args.centers
                   else list(graph.nodes()))

        emit_members = self.args.emit_members
        if emit_members and graph.node_count > self.member_limit:
            logger.warning(
                f"Graph has {graph.node_count} nodes (> {self.member_limit}); member lists suppressed"
            )
            emit_members = False

        rows = []
        for node in sorted(centers, key=graph.label):
            row: Dict[str, Any] = {
                "label": graph.label(node),
                "supercore": result.supercore_of(node),
                "backbone_size": result.backbone_size(node),
                "domain_size": result.domain_size(node),
            }
            if emit_members:
                row["backbone"] = graph.labels_of(result.backbone_of(node))
                row["domain"] = graph.labels_of(result.domain_of(node))
            rows.append(row)

        document: Dict[str, Any] = {
            "policy": policy.to_dict(),
            "node_count": graph.node_count,
            "supercore_count": len(result.dag.supercores),
            "dag_edges": len(result.dag.dag_edges),
            "rows": rows,
        }

        status = EXIT_OK
        if self.args.compare_engine:
            comparison = compare_with_engine(result)
            document["engine_comparison"] = {
                "checked": comparison.checked,
                "equal": comparison.equal,
                "equality_rate": comparison.equality_rate,
                "strict_subsets": len(comparison.counterexamples),
                "unsound": graph.labels_of(comparison.unsound),
            }
            if self.output_dir is not None:
                for cx in comparison.counterexamples:
                    write_counterexample(graph, policy, cx, self.output_dir / "counterexamples")
            if not comparison.sound:
                status = EXIT_INVARIANT

        if self.args.trace:
            if not self.args.centers:
                raise ArgumentError("--trace needs --centers")
            with open(Path(self.args.trace).expanduser(), "w") as f:
                for node in centers:
                    steps = []
                    compose_backbone(graph, policy, node, trace=steps)
                    write_trace_jsonl(graph, steps, f)

        self.emit(CommandOutput("domains", document, rows,
                                ["label", "supercore", "backbone_size", "domain_size"]))
        return status

    def cmd_sweep(self) -> int:
        graph = self.load_graph()
        sweep = self.config.get("sweep", {})
        threshold = self.args.threshold if self.args.threshold is not None else sweep.get("threshold", 1000)
        base = self.args.buckets if self.args.buckets is not None else sweep.get("bucket_base", 2)
        if threshold < 1:
            raise ArgumentError(f"threshold must be >= 1, got {threshold}")
        result = run_sweep(graph, self.sweep_policies(), threshold, base)
        rows = result.rows()
        document = {
            "threshold": threshold,
            "bucket_edges": result.bucket_edges,
            "policies": [p.to_dict() for p in result.policies],
            "rows": rows,
        }
        self.emit(CommandOutput("sweep", document, rows, SWEEP_FIELDS))
        return EXIT_OK

    def cmd_puls(self) -> int:
        graph = self.load_graph()
        with open(Path(self.args.attributes).expanduser(), "rb") as f:
            groups, skipped = load_node_attributes(f, graph)
        if skipped:
            logger.warning(f"Skipped {skipped} attribute lines naming nodes outside the graph")
        table = compute_puls(graph, groups, self.sweep_policies())
        rows = table.rows()
        document = {
            "groups": table.group_sizes,
            "largest_supercore": {str(b): s for b, s in table.largest_sizes.items()},
            "skipped_attributes": skipped,
            "rows": rows,
        }
        self.emit(CommandOutput("puls", document, rows, PULS_FIELDS))
        return EXIT_OK

    def cmd_simulate(self) -> int:
        simulation = dict(self.config["simulation"])
        if self.args.seed is not None:
            simulation["seeds"] = [self.args.seed]
        result = run_experiment(simulation, self.args.workers)

        document = result.to_dict(self.precision)
        rows = result.csv_rows(self.precision)
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            (self.output_dir / "simulation_report.json").write_text(
                json.dumps(document, indent=2) + "\n")
            (self.output_dir / "simulation_summary.csv").write_text(
                _csv_text(rows, RESILIENCE_CSV_FIELDS, self.precision))
            if not result.purity_ok:
                (self.output_dir / "purity_offenders.json").write_text(
                    json.dumps(result.offenders_dict(), indent=2) + "\n")
            logger.info(f"Wrote simulation reports to {self.output_dir}")
        else:
            CommandOutput("simulate", document, rows, RESILIENCE_CSV_FIELDS).emit(
                self.fmt, self.precision)

        if not result.purity_ok:
            offenders = result.offenders_dict()
            sys.stderr.write(
                f"backbone purity violated in {len(offenders)} report(s) under aligned policies\n"
            )
            sys.stderr.write(json.dumps(offenders, indent=2) + "\n")
            return EXIT_INVARIANT
        if not result.resilience_ok:
            logger.warning("Mean domain bad fraction plus three standard errors reached r")
        return EXIT_OK

    def cmd_generate(self) -> int:
        if self.args.heterogeneous:
            graph = heterogeneous_clustered_graph(self.args.nodes_count, seed=self.args.seed)
        else:
            graph = clustered_graph(self.args.nodes_count, self.args.clique_size,
                                    self.args.stride, self.args.rewire, seed=self.args.seed)
        if self.args.output_file:
            with open(Path(self.args.output_file).expanduser(), "w") as f:
                write_edge_list(graph, f)
            logger.info(f"Wrote {graph.node_count} nodes and {graph.link_count} edges "
                        f"to {self.args.output_file}")
        else:
            write_edge_list(graph, sys.stdout)
        return EXIT_OK

    def run(self) -> int:
        handler = getattr(self, f"cmd_{self.args.command}")
        return handler()


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", required=True, help="Edge list file")
    parser.add_argument("--mode", choices=[m.value for m in LoadMode],
                        default=LoadMode.UNDIRECTED.value, help="How directed pairs become edges")
    parser.add_argument("--nodes", help="Node list file; listed nodes are kept even if isolated")
    parser.add_argument("--retain-isolated", action="store_true",
                        help="Keep nodes left without edges")


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=ConfigLoader.VALID_FORMATS,
                        help="Output format (default from config: json)")
    parser.add_argument("--output", "-o", help="Directory receiving <command>.json|csv")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog="rcp-domains",
        description="Disinformation-resilient domains under relaxed clique percolation policies",
    )
    parser.add_argument("--config", "-c", help="Configuration file (YAML or JSON)")
    parser.add_argument("--log-level", choices=ConfigLoader.VALID_LOG_LEVELS,
                        help="Override RCP_DOMAINS_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    stats = sub.add_parser("stats", help="Node/link counts, average degree, clustering coefficient")
    _add_input_args(stats)
    _add_output_args(stats)

    domains = sub.add_parser("domains", help="Backbone and domain size of every node")
    _add_input_args(domains)
    domains.add_argument("--alpha", type=int, help="Policy alpha (default from config)")
    domains.add_argument("--beta", type=int, help="Policy beta (default from config)")
    domains.add_argument("--centers", help="Comma-separated node labels")
    domains.add_argument("--emit-members", action="store_true",
                         help="Include backbone and domain member lists")
    domains.add_argument("--compare-engine", action="store_true",
                         help="Check pipeline backbones against the sequential engine")
    domains.add_argument("--trace", help="Write the admission trace of each center as JSONL")
    _add_output_args(domains)

    sweep = sub.add_parser("sweep", help="Share of nodes with large domains per beta and degree bucket")
    _add_input_args(sweep)
    sweep.add_argument("--beta-range", help="Inclusive range A:B (default from config)")
    sweep.add_argument("--alpha", type=int, help="Pin alpha instead of beta + 1")
    sweep.add_argument("--threshold", type=int, help="Domain size threshold")
    sweep.add_argument("--buckets", type=int, help="Degree bucket base (default 2)")
    _add_output_args(sweep)

    puls = sub.add_parser("puls", help="Share of each group inside the largest supercore")
    _add_input_args(puls)
    puls.add_argument("--attributes", "-a", required=True, help="node_label<TAB>group_label file")
    puls.add_argument("--beta-range", help="Inclusive range A:B (default from config)")
    puls.add_argument("--alpha", type=int, help="Pin alpha instead of beta + 1")
    _add_output_args(puls)

    simulate = sub.add_parser("simulate", help="Planted-graph resilience experiment")
    simulate.add_argument("--seed", type=int, help="Run this single seed")
    simulate.add_argument("--workers", type=int, help="Worker processes over seeds")
    _add_output_args(simulate)

    generate = sub.add_parser("generate", help="Write a seeded clustered synthetic edge list")
    generate.add_argument("--nodes", dest="nodes_count", type=int, required=True)
    generate.add_argument("--clique-size", type=int, default=6)
    generate.add_argument("--stride", type=int, default=3)
    generate.add_argument("--rewire", type=float, default=0.05)
    generate.add_argument("--heterogeneous", action="store_true",
                          help="Two clique layers giving a spread of degrees")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--output-file", "-o", help="Edge list path (default stdout)")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, load configuration and run one command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_from_env(args.log_level)

    try:
        config = ConfigLoader(args.config).load()
        if args.log_level is None and "RCP_DOMAINS_LOG_LEVEL" not in os.environ:
            log_config = config.get("logging", {})
            log_file = log_config.get("file")
            setup_logging(
                level=log_config.get("level", "WARNING"),
                log_file=Path(log_file) if log_file else None,
                console=log_config.get("console", True),
                file_logging=bool(log_file),
            )
        return AnalysisCli(args, config).run()
    except (ConfigValidationError, GraphParseError, EmptyGraphError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_PARSE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_PARSE
    except InvariantError as e:
        logger.error(f"Invariant failure: {e}")
        sys.stderr.write(f"invariant failure: {e}\n")
        return EXIT_INVARIANT
    except ArgumentError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
