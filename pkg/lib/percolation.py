#!/usr/bin/env python3
"""Sequential-expansion engine composing RCP backbones and complete domains."""

import json
import random
from collections import deque
from dataclasses import dataclass
from itertools import chain, combinations
from typing import IO, Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

from .graph_core import ArgumentError, InvariantError, SocialGraph
from .logger_config import get_logger
from .rcp_policy import (Branch, ExpansionDuplet, RcpPolicy,
                         check_expansion_feasibility)

logger = get_logger("percolation")

DEFAULT_ORACLE_CAP = 12


class OracleLimitError(ArgumentError):
    """Raised when the exhaustive oracle is asked to run on too large a graph."""
    pass


@dataclass(frozen=True)
class Backbone:
    """Step 1 output: percolation-grown trusted skeleton of a center."""
    center: int
    members: FrozenSet[int]

    def validate(self, graph: SocialGraph) -> None:
        if self.center not in self.members:
            raise InvariantError(f"backbone of {graph.label(self.center)} misses its center")
        if not graph.is_connected_set(self.members):
            raise InvariantError(f"backbone of {graph.label(self.center)} is not connected")


@dataclass(frozen=True)
class Domain:
    """Step 2 output: the backbone plus the friend circles of its members."""
    center: int
    members: FrozenSet[int]
    backbone: Backbone


@dataclass(frozen=True)
class ExpansionStep:
    """One admission in a backbone composition trace."""
    step: int
    rule: Branch
    node: int
    witness: Tuple[int, ...]

    def to_dict(self, graph: SocialGraph) -> Dict[str, object]:
        return {
            "step": self.step,
            "rule": self.rule.value,
            "node": graph.label(self.node),
            "witness": graph.labels_of(self.witness),
        }


def _admission(graph: SocialGraph, policy: RcpPolicy, members: Set[int],
               node: int, via: int) -> Optional[Tuple[Branch, Tuple[int, ...]]]:
    """Rule A from ``via``, else Rule B over the members adjacent to ``node``."""
    node_nbrs = graph.neighbor_set(node)
    if len(node_nbrs & graph.neighbor_set(via)) >= policy.beta:
        return Branch.A, (via,)
    sentinels = node_nbrs & members
    if len(sentinels) < policy.alpha:
        return None
    for component in graph.induced_components(sentinels):
        if len(component) >= policy.alpha:
            return Branch.B, tuple(sorted(component))
    return None


def percolate(graph: SocialGraph, policy: RcpPolicy, seed: Iterable[int],
              rng: Optional[random.Random] = None,
              trace: Optional[List[ExpansionStep]] = None) -> Set[int]:
    """
    Least fixpoint of the two admission rules starting from ``seed``.

    Rule A admits m when some member l adjacent to m shares at least beta
    neighbors with it; Rule B admits m when the members adjacent to m hold
    a connected piece of at least alpha nodes. Each admitted node queues a
    re-examination of its non-member neighbors. ``rng`` shuffles the
    examination order; the result does not depend on it.
    """
    members = set(seed)
    pending = sorted(members)
    if rng is not None:
        rng.shuffle(pending)
    frontier = deque(pending)

    while frontier:
        v = frontier.popleft()
        outside = [w for w in graph.neighbors(v) if w not in members]
        if rng is not None:
            rng.shuffle(outside)
        for w in outside:
            if w in members:
                continue
            admitted = _admission(graph, policy, members, w, v)
            if admitted is None:
                continue
            members.add(w)
            frontier.append(w)
            if trace is not None:
                rule, witness = admitted
                trace.append(ExpansionStep(len(trace) + 1, rule, w, witness))
    return members


def compose_backbone(graph: SocialGraph, policy: RcpPolicy, center: int,
                     rng: Optional[random.Random] = None,
                     trace: Optional[List[ExpansionStep]] = None) -> Backbone:
    """
    Largest pi-compliant backbone of ``center``.

    Args:
        graph: Social graph
        policy: RCP policy
        center: Central node index
        rng: Optional RNG permuting the worklist order
        trace: Optional list receiving one ExpansionStep per admission

    Returns:
        Backbone

    Raises:
        ArgumentError: If center is not a node of the graph
    """
    graph.check_node(center)
    members = percolate(graph, policy, [center], rng, trace)
    return Backbone(center, frozenset(members))


def compose_complete_domain(graph: SocialGraph, backbone: Backbone) -> Domain:
    """Union of the closed neighborhoods of the backbone members."""
    members: Set[int] = set()
    for m in backbone.members:
        members.add(m)
        members.update(graph.neighbor_set(m))
    return Domain(backbone.center, frozenset(members), backbone)


def strong_tie_components(graph: SocialGraph, policy: RcpPolicy,
                          starts: Optional[Iterable[int]] = None) -> List[FrozenSet[int]]:
    """
    Connected components under Rule A alone.

    With ``starts`` only the components holding those nodes are built;
    components come out in order of their first start node.
    """
    seen: Set[int] = set()
    components = []
    for start in (graph.nodes() if starts is None else sorted(set(starts))):
        if start in seen:
            continue
        seen.add(start)
        component = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            u_nbrs = graph.neighbor_set(u)
            for w in graph.neighbors(u):
                if w not in seen and len(u_nbrs & graph.neighbor_set(w)) >= policy.beta:
                    seen.add(w)
                    component.add(w)
                    queue.append(w)
        components.append(frozenset(component))
    return components


def compose_all_backbones(graph: SocialGraph, policy: RcpPolicy,
                          centers: Optional[Iterable[int]] = None) -> Dict[int, FrozenSet[int]]:
    """
    Engine backbone of every node (or of every node sharing a component with ``centers``).

    Nodes of one strong-tie component reach each other by Rule A, so they
    share a backbone; closure runs once per component.
    """
    backbones: Dict[int, FrozenSet[int]] = {}
    components = strong_tie_components(graph, policy, centers)
    for component in components:
        members = frozenset(percolate(graph, policy, component))
        for node in component:
            backbones[node] = members
    logger.debug(f"Composed backbones for {len(backbones)} nodes over {len(components)} components")
    return backbones


def baseline_domain(graph: SocialGraph, center: int, hops: int = 2) -> FrozenSet[int]:
    """Unrestricted friend-of-friend expansion: every node within ``hops``."""
    graph.check_node(center)
    seen = {center}
    layer = [center]
    for _ in range(hops):
        nxt = []
        for u in layer:
            for w in graph.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        layer = nxt
    return frozenset(seen)


def _subsets(pool: Iterable[int], min_size: int = 1,
             max_size: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    items = sorted(pool)
    top = len(items) if max_size is None else min(max_size, len(items))
    return chain.from_iterable(combinations(items, k) for k in range(min_size, top + 1))


def _candidate_duplets(graph: SocialGraph, policy: RcpPolicy, members: Set[int],
                       max_candidates: Optional[int]) -> Iterator[ExpansionDuplet]:
    """
    Every duplet that could pass the checker, grouped by key node.

    A feasible duplet has a key node l with R∪Q inside l's closed
    neighborhood: l is in R for branch A and in Q for branch B.
    """
    for l in graph.nodes():
        pool = graph.closed_neighborhood(l)
        inside = pool & members
        outside = pool - members
        if l in members:
            others = inside - {l}
            for rest in _subsets(others, 0, policy.alpha - 2):
                sentinels = frozenset(rest) | {l}
                for candidates in _subsets(outside, 1, max_candidates):
                    yield ExpansionDuplet(sentinels, frozenset(candidates), l)
        else:
            extra = outside - {l}
            for sentinels in _subsets(inside, policy.alpha):
                for rest in _subsets(extra, 0, None if max_candidates is None else max_candidates - 1):
                    yield ExpansionDuplet(frozenset(sentinels), frozenset(rest) | {l}, l)


def brute_force_largest_backbone(graph: SocialGraph, policy: RcpPolicy, center: int,
                                 cap: int = DEFAULT_ORACLE_CAP,
                                 max_candidates: Optional[int] = 2) -> FrozenSet[int]:
    """
    Exhaustive oracle: saturate the backbone with every feasible duplet.

    Duplets have arbitrary sentinel sets and multi-node candidate sets and
    are judged by check_expansion_feasibility. Feasibility only grows with
    the backbone, so applying every feasible duplet until none is left
    yields the union of all reachable expansions. A feasible candidate set
    stays feasible for each of its members alone, so ``max_candidates``
    (None for no limit) bounds the search without changing the result.

    Raises:
        OracleLimitError: If the graph has more than ``cap`` nodes
    """
    if graph.node_count > cap:
        raise OracleLimitError(f"oracle refuses {graph.node_count} nodes (cap {cap})")
    graph.check_node(center)
    members = {center}
    while True:
        gained: Set[int] = set()
        for duplet in _candidate_duplets(graph, policy, members, max_candidates):
            if duplet.candidates <= gained:
                continue
            if check_expansion_feasibility(graph, policy, duplet, members).feasible:
                gained |= duplet.candidates
        if not gained:
            return frozenset(members)
        members |= gained


def write_trace_jsonl(graph: SocialGraph, steps: Iterable[ExpansionStep], target: IO[str]) -> None:
    """One JSON object per admission."""
    for step in steps:
        target.write(json.dumps(step.to_dict(graph)) + "\n")
