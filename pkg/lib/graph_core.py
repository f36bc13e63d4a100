#!/usr/bin/env python3
"""Undirected social graph loading, validation and queries."""

import io
import re
from collections import deque
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import (IO, Dict, FrozenSet, Iterable, Iterator, List, Optional,
                    Sequence, Set, Tuple, Union)

import networkx as nx

from .logger_config import get_logger

logger = get_logger("graph_core")

COMMENT_PREFIX = "#"
_TOKEN_SPLIT = re.compile(r"[,\s]+")


class GraphError(Exception):
    """Base class for graph errors."""
    pass


class GraphParseError(GraphError):
    """Raised when an edge list or attribute file cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmptyGraphError(GraphError):
    """Raised when an operation needs at least one node."""
    pass


class ArgumentError(GraphError, ValueError):
    """Raised when a precondition on the arguments is violated."""
    pass


class InvariantError(GraphError):
    """Raised when an internal invariant does not hold."""
    pass


class LoadMode(Enum):
    """How the pairs of an edge list become undirected edges."""
    UNDIRECTED = "undirected"
    MUTUAL_ONLY = "mutual-only"


@dataclass(frozen=True)
class GraphStats:
    """Descriptive statistics of a social graph."""
    node_count: int
    link_count: int
    avg_degree: float
    clustering_coefficient: float

    def to_dict(self, precision: int = 6) -> Dict[str, Union[int, float]]:
        return {
            "node_count": self.node_count,
            "link_count": self.link_count,
            "avg_degree": round(self.avg_degree, precision),
            "clustering_coefficient": round(self.clustering_coefficient, precision),
        }


@dataclass
class LoadReport:
    """Counters collected while loading an edge list."""
    nodes: int = 0
    edges: int = 0
    self_loops_dropped: int = 0
    duplicates_collapsed: int = 0
    asymmetric_dropped: int = 0
    isolated_dropped: int = 0
    comment_lines: int = 0

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


class SocialGraph:
    """
    Immutable undirected simple graph with dense node indices.

    Node indices are assigned in order of first appearance; ``label(i)``
    maps an index back to the external label. Neighbor tuples are sorted
    ascending, and neighbor frozensets are kept alongside for fast
    intersection.
    """

    __slots__ = ("_labels", "_index", "_adjacency", "_neighbor_sets",
                 "_link_count", "load_report")

    def __init__(self, labels: Sequence[str], adjacency: Sequence[Iterable[int]],
                 load_report: Optional[LoadReport] = None):
        if len(labels) != len(adjacency):
            raise ArgumentError("labels and adjacency differ in length")
        self._labels: Tuple[str, ...] = tuple(str(label) for label in labels)
        self._index: Dict[str, int] = {label: i for i, label in enumerate(self._labels)}
        if len(self._index) != len(self._labels):
            raise ArgumentError("node labels must be unique")

        self._adjacency: Tuple[Tuple[int, ...], ...] = tuple(
            tuple(sorted(set(nbrs))) for nbrs in adjacency
        )
        self._neighbor_sets: Tuple[FrozenSet[int], ...] = tuple(
            frozenset(nbrs) for nbrs in self._adjacency
        )
        degree_sum = 0
        n = len(self._labels)
        for i, nbrs in enumerate(self._adjacency):
            for j in nbrs:
                if j == i:
                    raise InvariantError(f"self-loop on node {self._labels[i]}")
                if not 0 <= j < n:
                    raise InvariantError(f"neighbor index {j} out of range")
                if i not in self._neighbor_sets[j]:
                    raise InvariantError(
                        f"asymmetric adjacency between {self._labels[i]} and {self._labels[j]}"
                    )
            degree_sum += len(nbrs)
        self._link_count = degree_sum // 2
        self.load_report = load_report

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[object, object]],
                   node_labels: Optional[Iterable[object]] = None) -> "SocialGraph":
        """
        Build a graph from label pairs; self-loops and duplicates are dropped.

        Args:
            edges: Pairs of node labels
            node_labels: Optional labels retained even when isolated

        Returns:
            SocialGraph
        """
        builder = GraphBuilder()
        for u, v in edges:
            if u == v:
                builder.add_node(str(u))
                continue
            builder.add_edge(str(u), str(v))
        for label in node_labels or ():
            builder.add_node(str(label))
        return builder.build()

    @property
    def node_count(self) -> int:
        return len(self._labels)

    @property
    def link_count(self) -> int:
        return self._link_count

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    def nodes(self) -> range:
        return range(len(self._labels))

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Yield every edge once as (i, j) with i < j."""
        for i, nbrs in enumerate(self._adjacency):
            for j in nbrs:
                if i < j:
                    yield i, j

    def check_node(self, i: int) -> int:
        if not isinstance(i, int) or not 0 <= i < len(self._labels):
            raise ArgumentError(f"invalid node index: {i!r}")
        return i

    def label(self, i: int) -> str:
        return self._labels[self.check_node(i)]

    def index_of(self, label: object) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise ArgumentError(f"unknown node label: {label}")

    def has_label(self, label: object) -> bool:
        return str(label) in self._index

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return self._adjacency[i]

    def neighbor_set(self, i: int) -> FrozenSet[int]:
        return self._neighbor_sets[i]

    def degree(self, i: int) -> int:
        return len(self._adjacency[i])

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._neighbor_sets[i]

    def closed_neighborhood(self, i: int) -> FrozenSet[int]:
        return self._neighbor_sets[i] | {i}

    def induced_components(self, nodes: Iterable[int]) -> List[Set[int]]:
        """
        Connected components of the subgraph induced by ``nodes``.

        Components are returned in order of their smallest member.
        """
        members = set(nodes)
        seen: Set[int] = set()
        components = []
        for start in sorted(members):
            if start in seen:
                continue
            component = {start}
            seen.add(start)
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for w in self._adjacency[u]:
                    if w in members and w not in seen:
                        seen.add(w)
                        component.add(w)
                        queue.append(w)
            components.append(component)
        return components

    def is_connected_set(self, nodes: Iterable[int]) -> bool:
        """True iff ``nodes`` is nonempty and induces a connected subgraph."""
        members = set(nodes)
        if not members:
            return False
        return len(self.induced_components(members)) == 1

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes())
        graph.add_edges_from(self.edges())
        return graph

    def labels_of(self, nodes: Iterable[int]) -> List[str]:
        """External labels of ``nodes`` in ascending index order."""
        return [self._labels[i] for i in sorted(nodes)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return self._labels == other._labels and self._adjacency == other._adjacency

    def __hash__(self) -> int:
        return hash((self._labels, self._adjacency))

    def __repr__(self) -> str:
        return f"SocialGraph(nodes={self.node_count}, links={self.link_count})"


class GraphBuilder:
    """Mutable adjacency used to assemble a SocialGraph."""

    def __init__(self):
        self._index: Dict[str, int] = {}
        self._labels: List[str] = []
        self._adjacency: List[Set[int]] = []

    @classmethod
    def from_graph(cls, graph: SocialGraph) -> "GraphBuilder":
        builder = cls()
        for label in graph.labels:
            builder.add_node(label)
        for i, j in graph.edges():
            builder.add_edge_by_index(i, j)
        return builder

    @property
    def node_count(self) -> int:
        return len(self._labels)

    def add_node(self, label: str) -> int:
        index = self._index.get(label)
        if index is None:
            index = len(self._labels)
            self._index[label] = index
            self._labels.append(label)
            self._adjacency.append(set())
        return index

    def add_edge(self, u: str, v: str) -> bool:
        """Add an undirected edge between labels; returns False if it existed."""
        return self.add_edge_by_index(self.add_node(u), self.add_node(v))

    def add_edge_by_index(self, i: int, j: int) -> bool:
        if i == j:
            raise ArgumentError("self-loops are not allowed")
        if j in self._adjacency[i]:
            return False
        self._adjacency[i].add(j)
        self._adjacency[j].add(i)
        return True

    def remove_edge_by_index(self, i: int, j: int) -> bool:
        if j not in self._adjacency[i]:
            return False
        self._adjacency[i].discard(j)
        self._adjacency[j].discard(i)
        return True

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adjacency[i]

    def neighbors(self, i: int) -> Set[int]:
        return self._adjacency[i]

    def label(self, i: int) -> str:
        return self._labels[i]

    def build(self, load_report: Optional[LoadReport] = None,
              keep: Optional[Set[int]] = None) -> SocialGraph:
        """
        Freeze into a SocialGraph.

        Args:
            load_report: Report attached to the graph
            keep: If given, only these nodes are kept (relative order preserved)

        Returns:
            SocialGraph
        """
        if keep is None:
            return SocialGraph(self._labels, self._adjacency, load_report)
        kept = [i for i in range(len(self._labels)) if i in keep]
        remap = {old: new for new, old in enumerate(kept)}
        labels = [self._labels[i] for i in kept]
        adjacency = [[remap[j] for j in self._adjacency[i] if j in remap] for i in kept]
        return SocialGraph(labels, adjacency, load_report)


def _iter_lines(source: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]]
                ) -> Iterator[Tuple[int, str]]:
    for line_number, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                yield line_number, raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise GraphParseError(f"invalid UTF-8: {e}", line_number)
        else:
            yield line_number, raw


def load_edge_list(
    source: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]],
    mode: Union[LoadMode, str] = LoadMode.UNDIRECTED,
    retain_isolated: bool = False,
    node_labels: Optional[Iterable[str]] = None
) -> SocialGraph:
    """
    Load an edge list into a SocialGraph.

    Each data line holds two node labels separated by whitespace or a comma;
    lines starting with '#' and blank lines are skipped. In undirected mode
    every pair becomes one edge. In mutual-only mode an edge exists iff both
    directions appear. Self-loops are dropped and counted.

    Args:
        source: Byte stream, text stream or iterable of lines
        mode: LoadMode or its string value
        retain_isolated: Keep nodes left without edges
        node_labels: Optional node-list sidecar; these nodes are always kept

    Returns:
        SocialGraph with ``load_report`` set

    Raises:
        GraphParseError: If a data line does not hold exactly two tokens
        EmptyGraphError: If the input names no nodes
    """
    mode = LoadMode(mode)
    report = LoadReport()
    builder = GraphBuilder()
    directed: Set[Tuple[int, int]] = set()

    for line_number, line in _iter_lines(source):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(COMMENT_PREFIX):
            report.comment_lines += 1
            continue
        tokens = [token for token in _TOKEN_SPLIT.split(stripped) if token]
        if len(tokens) != 2:
            raise GraphParseError(
                f"expected two node labels, found {len(tokens)}: {stripped!r}",
                line_number
            )
        u_label, v_label = tokens
        u = builder.add_node(u_label)
        v = builder.add_node(v_label)
        if u == v:
            report.self_loops_dropped += 1
            continue
        if mode is LoadMode.UNDIRECTED:
            if not builder.add_edge_by_index(u, v):
                report.duplicates_collapsed += 1
        else:
            if (u, v) in directed:
                report.duplicates_collapsed += 1
            directed.add((u, v))

    if mode is LoadMode.MUTUAL_ONLY:
        for u, v in directed:
            if (v, u) in directed:
                builder.add_edge_by_index(u, v)
            else:
                report.asymmetric_dropped += 1

    sidecar: Set[int] = set()
    for label in node_labels or ():
        sidecar.add(builder.add_node(str(label)))

    if builder.node_count == 0:
        raise EmptyGraphError("edge list names no nodes")

    keep: Optional[Set[int]] = None
    if not retain_isolated:
        keep = {i for i in range(builder.node_count) if builder.neighbors(i) or i in sidecar}
        report.isolated_dropped = builder.node_count - len(keep)
        if not keep:
            raise EmptyGraphError("edge list holds no edges")

    graph = builder.build(report, keep)
    report.nodes = graph.node_count
    report.edges = graph.link_count

    logger.info(
        f"Loaded graph with {report.nodes} nodes and {report.edges} edges ({mode.value})"
    )
    if report.self_loops_dropped:
        logger.warning(f"Dropped {report.self_loops_dropped} self-loops")
    if report.duplicates_collapsed:
        logger.info(f"Collapsed {report.duplicates_collapsed} duplicate edges")
    if report.isolated_dropped:
        logger.info(f"Dropped {report.isolated_dropped} isolated nodes")
    return graph


def load_edge_list_file(path: Union[str, Path], **kwargs) -> SocialGraph:
    """Open ``path`` in binary mode and load it with load_edge_list."""
    with open(Path(path).expanduser(), "rb") as f:
        return load_edge_list(f, **kwargs)


def load_node_attributes(
    source: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]],
    graph: SocialGraph
) -> Tuple[Dict[int, str], int]:
    """
    Load a node_label<TAB>group_label attribute file.

    Labels absent from the graph are skipped with a warning.

    Returns:
        Tuple of (node index -> group label, number of skipped lines)

    Raises:
        GraphParseError: If a data line does not hold two fields
    """
    groups: Dict[int, str] = {}
    skipped = 0
    for line_number, line in _iter_lines(source):
        stripped = line.strip()
        if not stripped or stripped.startswith(COMMENT_PREFIX):
            continue
        fields = stripped.split("\t")
        if len(fields) != 2:
            fields = stripped.split()
        if len(fields) != 2:
            raise GraphParseError(f"expected node_label<TAB>group_label: {stripped!r}", line_number)
        label, group = fields[0].strip(), fields[1].strip()
        if not graph.has_label(label):
            logger.warning(f"Attribute line {line_number}: node {label!r} not in graph, skipping")
            skipped += 1
            continue
        groups[graph.index_of(label)] = group
    return groups, skipped


def write_edge_list(graph: SocialGraph, target: IO[str]) -> None:
    """Write ``graph`` as a whitespace-separated edge list of labels."""
    for i, j in graph.edges():
        target.write(f"{graph.label(i)} {graph.label(j)}\n")


def tie_strength(graph: SocialGraph, i: int, j: int) -> int:
    """
    Number of common neighbors of i and j.

    Raises:
        ArgumentError: If i == j or either index is invalid
    """
    graph.check_node(i)
    graph.check_node(j)
    if i == j:
        raise ArgumentError("tie strength needs two distinct nodes")
    return len(graph.neighbor_set(i) & graph.neighbor_set(j))


def is_strong_tie(graph: SocialGraph, i: int, j: int, beta: int) -> bool:
    """Adjacent pair with at least ``beta`` common neighbors."""
    return graph.has_edge(i, j) and tie_strength(graph, i, j) >= beta


def graph_stats(graph: SocialGraph) -> GraphStats:
    """
    Node and link counts, average degree and average local clustering.

    Raises:
        EmptyGraphError: If the graph has no nodes
    """
    n = graph.node_count
    if n == 0:
        raise EmptyGraphError("statistics need at least one node")
    clustering = nx.average_clustering(graph.to_networkx())
    return GraphStats(
        node_count=n,
        link_count=graph.link_count,
        avg_degree=2 * graph.link_count / n,
        clustering_coefficient=clustering,
    )


def from_networkx(nx_graph: nx.Graph, prefix: str = "") -> SocialGraph:
    """Convert a networkx graph; labels are ``prefix + str(node)``."""
    builder = GraphBuilder()
    for node in nx_graph.nodes():
        builder.add_node(f"{prefix}{node}")
    for u, v in nx_graph.edges():
        if u != v:
            builder.add_edge(f"{prefix}{u}", f"{prefix}{v}")
    return builder.build()


def read_text(text: str, **kwargs) -> SocialGraph:
    """Load an edge list held in a string."""
    return load_edge_list(io.StringIO(text), **kwargs)
