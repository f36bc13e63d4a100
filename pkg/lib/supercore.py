#!/usr/bin/env python3
"""Whole-graph supercore pipeline: strong ties, component digraph, condensation."""

import json
from collections import defaultdict, deque
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import (Dict, FrozenSet, Iterator, List, Optional,
                    Sequence, Set, Tuple, Union)

import networkx as nx

from .graph_core import ArgumentError, InvariantError, SocialGraph, write_edge_list
from .logger_config import get_logger, log_stage
from .percolation import compose_all_backbones
from .rcp_policy import RcpPolicy

logger = get_logger("supercore")


@dataclass(frozen=True)
class StrongTieGraph:
    """Edges of the base graph with at least beta mutual friends."""
    base: SocialGraph
    beta: int
    strong_adjacency: Tuple[Tuple[int, ...], ...]

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return self.strong_adjacency[i]

    def edges(self) -> Iterator[Tuple[int, int]]:
        for i, nbrs in enumerate(self.strong_adjacency):
            for j in nbrs:
                if i < j:
                    yield i, j

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.strong_adjacency) // 2


@dataclass(frozen=True)
class ComponentDigraph:
    """Strong-tie components and the alpha-witness edges between them."""
    components: Tuple[FrozenSet[int], ...]
    edges: FrozenSet[Tuple[int, int]]
    node_component: Tuple[int, ...]

    def to_networkx(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(len(self.components)))
        digraph.add_edges_from(self.edges)
        return digraph


@dataclass(frozen=True)
class SupercoreDag:
    """Acyclic condensation of the component digraph over the supercore partition."""
    supercores: Tuple[FrozenSet[int], ...]
    dag_edges: FrozenSet[Tuple[int, int]]
    node_to_supercore: Tuple[int, ...]

    def successors(self) -> Dict[int, List[int]]:
        succ: Dict[int, List[int]] = {k: [] for k in range(len(self.supercores))}
        for u, v in sorted(self.dag_edges):
            succ[u].append(v)
        return succ

    def to_networkx(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(len(self.supercores)))
        digraph.add_edges_from(self.dag_edges)
        return digraph

    def is_partition_of(self, node_count: int) -> bool:
        seen: Set[int] = set()
        for supercore in self.supercores:
            if not supercore or seen & supercore:
                return False
            seen |= supercore
        return seen == set(range(node_count))

    def largest(self) -> int:
        """Index of the supercore with the most members (smallest index on ties)."""
        return max(range(len(self.supercores)), key=lambda k: (len(self.supercores[k]), -k))


def build_strong_tie_graph(graph: SocialGraph, policy: RcpPolicy) -> StrongTieGraph:
    """
    Keep the edges of ``graph`` whose endpoints share at least beta neighbors.

    One neighborhood intersection per edge, skipping pairs whose degrees
    cannot reach beta.
    """
    beta = policy.beta
    strong: List[List[int]] = [[] for _ in graph.nodes()]
    for i in graph.nodes():
        if graph.degree(i) - 1 < beta:
            continue
        i_nbrs = graph.neighbor_set(i)
        for j in graph.neighbors(i):
            if j <= i or graph.degree(j) - 1 < beta:
                continue
            if len(i_nbrs & graph.neighbor_set(j)) >= beta:
                strong[i].append(j)
                strong[j].append(i)
    return StrongTieGraph(graph, beta, tuple(tuple(sorted(nbrs)) for nbrs in strong))


def strong_components(stg: StrongTieGraph) -> List[FrozenSet[int]]:
    """Connected components of the strong-tie graph, singletons included."""
    node_count = len(stg.strong_adjacency)
    seen = [False] * node_count
    components = []
    for start in range(node_count):
        if seen[start]:
            continue
        seen[start] = True
        component = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in stg.strong_adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    component.append(w)
                    queue.append(w)
        components.append(frozenset(component))
    return components


def build_component_digraph(graph: SocialGraph, components: Sequence[FrozenSet[int]],
                            policy: RcpPolicy) -> ComponentDigraph:
    """
    Edge H_i -> H_j iff some m in H_j has, within F(m) ∩ H_i, a connected
    piece of at least alpha nodes.

    Raises:
        ArgumentError: If the components do not partition the nodes
    """
    node_component = [-1] * graph.node_count
    for index, component in enumerate(components):
        for node in component:
            if node_component[node] != -1:
                raise ArgumentError(f"node {graph.label(node)} lies in two components")
            node_component[node] = index
    if -1 in node_component:
        raise ArgumentError("components do not cover every node")

    alpha = policy.alpha
    edges: Set[Tuple[int, int]] = set()
    for m in graph.nodes():
        if graph.degree(m) < alpha:
            continue
        target = node_component[m]
        groups: Dict[int, List[int]] = defaultdict(list)
        for w in graph.neighbors(m):
            source = node_component[w]
            if source != target:
                groups[source].append(w)
        for source, members in groups.items():
            if len(members) < alpha or (source, target) in edges:
                continue
            if any(len(piece) >= alpha for piece in graph.induced_components(members)):
                edges.add((source, target))
    return ComponentDigraph(tuple(components), frozenset(edges), tuple(node_component))


def condense(cd: ComponentDigraph) -> SupercoreDag:
    """
    Merge strongly connected components of the component digraph.

    Supercores are ordered by their smallest node index.

    Raises:
        InvariantError: If the condensed digraph has a cycle
    """
    digraph = cd.to_networkx()
    condensed = nx.condensation(digraph)
    merged: Dict[int, Set[int]] = defaultdict(set)
    for component_index, scc in condensed.graph["mapping"].items():
        merged[scc].update(cd.components[component_index])

    order = sorted(merged, key=lambda scc: min(merged[scc]))
    renumber = {scc: k for k, scc in enumerate(order)}
    supercores = tuple(frozenset(merged[scc]) for scc in order)
    dag_edges = frozenset((renumber[u], renumber[v]) for u, v in condensed.edges())

    node_to_supercore = [0] * len(cd.node_component)
    for k, supercore in enumerate(supercores):
        for node in supercore:
            node_to_supercore[node] = k

    dag = SupercoreDag(supercores, dag_edges, tuple(node_to_supercore))
    if not nx.is_directed_acyclic_graph(dag.to_networkx()):
        raise InvariantError("condensed supercore digraph has a cycle")
    return dag


class BackboneMap(Mapping):
    """
    Largest backbone per supercore, materialized on access.

    Reachable supercore sets are memoized per supercore in reverse
    topological order; node sets are assembled from them when read.
    """

    def __init__(self, dag: SupercoreDag):
        self.dag = dag
        self.sizes = [len(s) for s in dag.supercores]
        succ = dag.successors()
        try:
            order = list(nx.topological_sort(dag.to_networkx()))
        except nx.NetworkXUnfeasible:
            raise InvariantError("supercore digraph has a cycle")

        self.reach: List[FrozenSet[int]] = [frozenset()] * len(dag.supercores)
        for k in reversed(order):
            if not succ[k]:
                self.reach[k] = frozenset((k,))
                continue
            reach = {k}
            for s in succ[k]:
                reach |= self.reach[s]
            self.reach[k] = frozenset(reach)
        self._cache: Dict[int, FrozenSet[int]] = {}

    def __getitem__(self, k: int) -> FrozenSet[int]:
        members = self._cache.get(k)
        if members is None:
            members = frozenset().union(*(self.dag.supercores[s] for s in self.reach[k]))
            if len(self.reach[k]) == 1:
                self._cache[k] = members
        return members

    def __iter__(self) -> Iterator[int]:
        return iter(range(len(self.dag.supercores)))

    def __len__(self) -> int:
        return len(self.dag.supercores)

    def size_of(self, k: int) -> int:
        return sum(self.sizes[s] for s in self.reach[k])


class DomainMap(Mapping):
    """Complete domain per supercore: closed neighborhoods of the backbone nodes."""

    def __init__(self, graph: SocialGraph, backbones: BackboneMap):
        self.graph = graph
        self.backbones = backbones
        self._halo: Dict[int, FrozenSet[int]] = {}

    def halo(self, s: int) -> FrozenSet[int]:
        """Closed neighborhood of supercore s."""
        members = self._halo.get(s)
        if members is None:
            nodes: Set[int] = set()
            for node in self.backbones.dag.supercores[s]:
                nodes.add(node)
                nodes.update(self.graph.neighbor_set(node))
            members = frozenset(nodes)
            self._halo[s] = members
        return members

    def __getitem__(self, k: int) -> FrozenSet[int]:
        return frozenset().union(*(self.halo(s) for s in self.backbones.reach[k]))

    def __iter__(self) -> Iterator[int]:
        return iter(self.backbones)

    def __len__(self) -> int:
        return len(self.backbones)

    def size_of(self, k: int) -> int:
        if len(self.backbones.reach[k]) == 1:
            return len(self.halo(k))
        return len(self[k])


def all_largest_backbones(dag: SupercoreDag) -> BackboneMap:
    """
    Backbone of each supercore: itself plus every supercore reachable from it.

    Raises:
        InvariantError: If the DAG has a cycle
    """
    return BackboneMap(dag)


def all_complete_domains(graph: SocialGraph, backbones: BackboneMap) -> DomainMap:
    """Complete domain of each supercore from its backbone."""
    return DomainMap(graph, backbones)


@dataclass
class SupercoreResult:
    """Output of one pipeline run with per-node views into per-supercore results."""
    graph: SocialGraph
    policy: RcpPolicy
    strong_graph: StrongTieGraph
    components: List[FrozenSet[int]]
    component_digraph: ComponentDigraph
    dag: SupercoreDag
    backbones: BackboneMap
    domains: DomainMap
    timings: Dict[str, float] = field(default_factory=dict)

    def supercore_of(self, node: int) -> int:
        return self.dag.node_to_supercore[self.graph.check_node(node)]

    def backbone_of(self, node: int) -> FrozenSet[int]:
        return self.backbones[self.supercore_of(node)]

    def domain_of(self, node: int) -> FrozenSet[int]:
        return self.domains[self.supercore_of(node)]

    def backbone_size(self, node: int) -> int:
        return self.backbones.size_of(self.supercore_of(node))

    def domain_size(self, node: int) -> int:
        return self.domains.size_of(self.supercore_of(node))

    def domain_sizes(self) -> List[int]:
        """Domain size of every node, computed once per supercore."""
        per_supercore = [self.domains.size_of(k) for k in range(len(self.dag.supercores))]
        return [per_supercore[k] for k in self.dag.node_to_supercore]

    def to_dict(self, emit_members: bool = False) -> Dict[str, object]:
        """JSON form: supercores, DAG edges, backbone and domain sizes."""
        graph = self.graph
        supercores = []
        for k, members in enumerate(self.dag.supercores):
            entry: Dict[str, object] = {
                "id": k,
                "size": len(members),
                "backbone_size": self.backbones.size_of(k),
                "domain_size": self.domains.size_of(k),
            }
            if emit_members:
                entry["members"] = graph.labels_of(members)
                entry["backbone"] = graph.labels_of(self.backbones[k])
                entry["domain"] = graph.labels_of(self.domains[k])
            supercores.append(entry)
        return {
            "policy": self.policy.to_dict(),
            "node_count": graph.node_count,
            "strong_edges": self.strong_graph.edge_count,
            "components": len(self.components),
            "supercore_count": len(self.dag.supercores),
            "dag_edges": sorted([list(edge) for edge in self.dag.dag_edges]),
            "supercores": supercores,
        }


class SupercorePipeline:
    """Run the three batch stages and the backbone/domain composition."""

    def __init__(self, policy: RcpPolicy):
        self.policy = policy

    def run(self, graph: SocialGraph) -> SupercoreResult:
        timings: Dict[str, float] = {}
        with log_stage(logger, "strong_tie_graph", timings):
            stg = build_strong_tie_graph(graph, self.policy)
        with log_stage(logger, "strong_components", timings):
            components = strong_components(stg)
        with log_stage(logger, "component_digraph", timings):
            cd = build_component_digraph(graph, components, self.policy)
        with log_stage(logger, "condense", timings):
            dag = condense(cd)
        with log_stage(logger, "largest_backbones", timings):
            backbones = all_largest_backbones(dag)
        domains = all_complete_domains(graph, backbones)
        logger.info(
            f"{self.policy}: {stg.edge_count} strong ties, {len(components)} components, "
            f"{len(dag.supercores)} supercores, {len(dag.dag_edges)} DAG edges"
        )
        return SupercoreResult(graph, self.policy, stg, components, cd, dag,
                               backbones, domains, timings)


def run_pipeline(graph: SocialGraph, policy: RcpPolicy) -> SupercoreResult:
    return SupercorePipeline(policy).run(graph)


@dataclass
class Counterexample:
    """A center whose pipeline backbone is strictly smaller than the engine's."""
    center: int
    pipeline_backbone: FrozenSet[int]
    engine_backbone: FrozenSet[int]

    def to_dict(self, graph: SocialGraph, policy: RcpPolicy) -> Dict[str, object]:
        return {
            "policy": policy.to_dict(),
            "center": graph.label(self.center),
            "pipeline_backbone": graph.labels_of(self.pipeline_backbone),
            "engine_backbone": graph.labels_of(self.engine_backbone),
            "missing": graph.labels_of(self.engine_backbone - self.pipeline_backbone),
        }


@dataclass
class EngineComparison:
    """Pipeline backbones checked against the sequential-expansion engine."""
    checked: int = 0
    equal: int = 0
    unsound: List[int] = field(default_factory=list)
    counterexamples: List[Counterexample] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.unsound

    @property
    def equality_rate(self) -> float:
        return self.equal / self.checked if self.checked else 1.0


def compare_with_engine(result: SupercoreResult,
                        engine: Optional[Dict[int, FrozenSet[int]]] = None) -> EngineComparison:
    """
    Check pipeline backbone ⊆ engine backbone for every node and measure equality.

    Strict subsets are collected as counterexamples; a pipeline backbone
    reaching outside the engine's is recorded as unsound.
    """
    graph = result.graph
    if engine is None:
        engine = compose_all_backbones(graph, result.policy)
    comparison = EngineComparison()
    for node in graph.nodes():
        pipeline_members = result.backbone_of(node)
        engine_members = engine[node]
        comparison.checked += 1
        if not pipeline_members <= engine_members:
            comparison.unsound.append(node)
            logger.error(f"Pipeline backbone of {graph.label(node)} leaves the engine backbone")
        elif pipeline_members == engine_members:
            comparison.equal += 1
        else:
            comparison.counterexamples.append(
                Counterexample(node, pipeline_members, engine_members)
            )
    if comparison.counterexamples:
        logger.warning(
            f"{len(comparison.counterexamples)} of {comparison.checked} pipeline backbones "
            f"are strict subsets of the engine backbones under {result.policy}"
        )
    return comparison


def write_counterexample(graph: SocialGraph, policy: RcpPolicy, counterexample: Counterexample,
                         directory: Union[str, Path]) -> Path:
    """Write the graph edge list and the divergent center as JSON; returns the JSON path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"counterexample_{policy.alpha}_{policy.beta}_{graph.label(counterexample.center)}"
    with open(directory / f"{stem}.edges", "w") as f:
        write_edge_list(graph, f)
    json_path = directory / f"{stem}.json"
    with open(json_path, "w") as f:
        json.dump(counterexample.to_dict(graph, policy), f, indent=2)
    return json_path
