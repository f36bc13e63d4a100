#!/usr/bin/env python3
"""Reference graphs with hand-checked RCP outcomes, and a clustered generator."""

import random
from typing import List, Optional, Set, Tuple

from .graph_core import GraphBuilder, SocialGraph

LADDER_PATH = ("p1", "p2", "p3", "p4")
LADDER_HUB = "m"


def ladder_graph() -> SocialGraph:
    """
    Path p1-p2-p3-p4 where each consecutive pair shares three private
    common neighbors c<i>1..c<i>3, plus a node m adjacent to p1..p4 only.

    Under pi(4,3) the backbone of p1 is {p1..p4, m}: the path edges are the
    only strong ties and m is admitted by the four connected sentinels.
    """
    builder = GraphBuilder()
    for label in LADDER_PATH:
        builder.add_node(label)
    for i in range(len(LADDER_PATH) - 1):
        left, right = LADDER_PATH[i], LADDER_PATH[i + 1]
        builder.add_edge(left, right)
        for j in range(1, 4):
            c = f"c{i + 1}{j}"
            builder.add_edge(left, c)
            builder.add_edge(right, c)
    for label in LADDER_PATH:
        builder.add_edge(LADDER_HUB, label)
    return builder.build()


def star_graph(leaves: int = 10) -> SocialGraph:
    """Hub labelled 'hub' joined to leaves l1..l<leaves>."""
    return SocialGraph.from_edges(("hub", f"l{k}") for k in range(1, leaves + 1))


def complete_graph(n: int, prefix: str = "v") -> SocialGraph:
    return SocialGraph.from_edges(
        ((f"{prefix}{i}", f"{prefix}{j}") for i in range(n) for j in range(i + 1, n)),
        node_labels=[f"{prefix}{i}" for i in range(n)],
    )


def cycle_graph(n: int, prefix: str = "v") -> SocialGraph:
    return SocialGraph.from_edges((f"{prefix}{i}", f"{prefix}{(i + 1) % n}") for i in range(n))


def path_graph(n: int, prefix: str = "v") -> SocialGraph:
    return SocialGraph.from_edges(
        ((f"{prefix}{i}", f"{prefix}{i + 1}") for i in range(n - 1)),
        node_labels=[f"{prefix}{i}" for i in range(n)],
    )


def edgeless_graph(n: int, prefix: str = "v") -> SocialGraph:
    return SocialGraph.from_edges((), node_labels=[f"{prefix}{i}" for i in range(n)])


def disjoint_union(*graphs: SocialGraph) -> SocialGraph:
    """Union of graphs with labels prefixed g0_, g1_, ..."""
    builder = GraphBuilder()
    for k, graph in enumerate(graphs):
        for label in graph.labels:
            builder.add_node(f"g{k}_{label}")
        for i, j in graph.edges():
            builder.add_edge(f"g{k}_{graph.label(i)}", f"g{k}_{graph.label(j)}")
    return builder.build()


def clique_chain_edges(n: int, clique_size: int, stride: int, rewire: float,
                       rng: random.Random) -> Set[Tuple[int, int]]:
    """
    Overlapping planted cliques around a ring of n nodes.

    A clique of ``clique_size`` consecutive nodes starts every ``stride``
    positions, so neighboring cliques share clique_size - stride nodes.
    Each edge is then rewired with probability ``rewire`` by moving one
    endpoint to a uniformly chosen node.
    """
    edges: Set[Tuple[int, int]] = set()
    if n < 2:
        return edges
    size = min(clique_size, n)
    for start in range(0, n, max(stride, 1)):
        block = [(start + k) % n for k in range(size)]
        for a in range(size):
            for b in range(a + 1, size):
                u, v = block[a], block[b]
                if u != v:
                    edges.add((min(u, v), max(u, v)))
    if rewire <= 0:
        return edges

    rewired: Set[Tuple[int, int]] = set()
    for u, v in sorted(edges):
        if rng.random() < rewire:
            w = rng.randrange(n)
            key = (min(u, w), max(u, w))
            if w != u and key not in edges and key not in rewired:
                rewired.add(key)
                continue
        rewired.add((u, v))
    return rewired


def clustered_graph(n: int, clique_size: int = 6, stride: int = 3, rewire: float = 0.05,
                    seed: Optional[int] = 0, prefix: str = "n") -> SocialGraph:
    """Seeded clique-chain graph with labels ``prefix + index``."""
    rng = random.Random(seed)
    edges = clique_chain_edges(n, clique_size, stride, rewire, rng)
    return SocialGraph.from_edges(
        ((f"{prefix}{u}", f"{prefix}{v}") for u, v in sorted(edges)),
        node_labels=[f"{prefix}{i}" for i in range(n)],
    )


def heterogeneous_clustered_graph(n: int, seed: Optional[int] = 0,
                                  prefix: str = "n") -> SocialGraph:
    """
    Clustered graph with a spread of degrees.

    Every node sits on a ring of small cliques; a random subset additionally
    joins a second, denser layer of larger cliques, so higher-degree nodes
    are the ones embedded in more cohesive groups.
    """
    rng = random.Random(seed)
    edges = clique_chain_edges(n, 4, 3, 0.1, rng)
    dense_members: List[int] = sorted(rng.sample(range(n), n // 3))
    dense_edges = clique_chain_edges(len(dense_members), 8, 3, 0.02, rng)
    for a, b in dense_edges:
        u, v = dense_members[a], dense_members[b]
        edges.add((min(u, v), max(u, v)))
    return SocialGraph.from_edges(
        ((f"{prefix}{u}", f"{prefix}{v}") for u, v in sorted(edges)),
        node_labels=[f"{prefix}{i}" for i in range(n)],
    )
