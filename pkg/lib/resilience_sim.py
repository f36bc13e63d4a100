#!/usr/bin/env python3
"""
Planted good/bad-citizen graphs and empirical resilience checks.

Good citizens form a clustered graph, bad citizens a dense random one, and
cross edges are sampled so a good node's expected bad-friend fraction stays
at or below r. Repair passes then delete cross edges until no good-bad tie
has x or more mutual friends and no bad node befriends a connected good set
of y or more nodes.
"""

import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from multiprocessing import Pool
from typing import (Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional,
                    Sequence, Set, Tuple, Union)

import networkx as nx
import numpy as np

from .fixtures import clique_chain_edges
from .graph_core import ArgumentError, GraphBuilder, SocialGraph
from .logger_config import get_logger
from .percolation import baseline_domain, compose_all_backbones
from .rcp_policy import BehaviorParams, RcpPolicy, validate_policy_alignment

logger = get_logger("resilience_sim")

RESILIENCE_CSV_FIELDS = [
    "seed", "alpha", "beta", "aligned", "centers", "backbone_bad_total",
    "mean_bad_fraction", "stderr", "max_bad_fraction", "analytic_bound",
    "baseline_mean_bad_fraction",
]


class NodeLabel(Enum):
    """House of a node in a planted graph."""
    GOOD = "good"
    BAD = "bad"


class GoodModel(Enum):
    """Generator for the good-good subgraph."""
    CLIQUE_CHAIN = "clique_chain"
    RELAXED_CAVEMAN = "relaxed_caveman"
    WATTS_STROGATZ = "watts_strogatz"


class AttackStrategy(Enum):
    """How the attacker picks good targets for cross links."""
    RANDOM = "random"
    TARGETED = "targeted"
    CLUSTERED = "clustered"


def _mean_stderr(values: Sequence[float]) -> Tuple[float, float]:
    if not values:
        return 0.0, 0.0
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def _components(nodes: Iterable[int], neighbors: Callable[[int], Iterable[int]]) -> List[Set[int]]:
    """Connected components of the subgraph induced on ``nodes``."""
    pool = set(nodes)
    components = []
    for start in sorted(pool):
        if start not in pool:
            continue
        pool.discard(start)
        component = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in neighbors(u):
                if w in pool:
                    pool.discard(w)
                    component.add(w)
                    queue.append(w)
        components.append(component)
    return components


@dataclass(frozen=True)
class GeneratorModel:
    """Good-structure model and the densities of the planted graph."""
    kind: GoodModel = GoodModel.CLIQUE_CHAIN
    clique_size: int = 6
    stride: int = 3
    rewire: float = 0.05
    bad_density: float = 0.3
    cross_fraction: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.kind, GoodModel):
            try:
                object.__setattr__(self, "kind", GoodModel(self.kind))
            except ValueError:
                raise ArgumentError(f"unknown good-structure model {self.kind!r}")
        if self.clique_size < 2 or self.stride < 1:
            raise ArgumentError("clique_size must be >= 2 and stride >= 1")
        for name in ("rewire", "bad_density"):
            if not 0 <= getattr(self, name) <= 1:
                raise ArgumentError(f"{name} must lie in [0, 1]")
        if self.cross_fraction is not None and not 0 <= self.cross_fraction < 1:
            raise ArgumentError("cross_fraction must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, object]]) -> "GeneratorModel":
        if not data:
            return cls()
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def target_fraction(self, params: BehaviorParams) -> float:
        """Expected bad-friend fraction of a good node; half of r unless configured."""
        return params.r / 2 if self.cross_fraction is None else self.cross_fraction


@dataclass(frozen=True)
class PlantedGraph:
    """A graph whose nodes are partitioned into good and bad citizens."""
    graph: SocialGraph
    labels: Tuple[NodeLabel, ...]
    params: BehaviorParams
    seed: Optional[int] = None
    repairs: Dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != self.graph.node_count:
            raise ArgumentError("every node needs exactly one good/bad label")
        object.__setattr__(self, "_bad", frozenset(
            i for i, label in enumerate(self.labels) if label is NodeLabel.BAD
        ))

    def is_bad(self, i: int) -> bool:
        return i in self._bad

    @property
    def bad_set(self) -> FrozenSet[int]:
        return self._bad

    def good_nodes(self) -> List[int]:
        return [i for i in self.graph.nodes() if i not in self._bad]

    def bad_nodes(self) -> List[int]:
        return sorted(self._bad)

    @property
    def n_good(self) -> int:
        return self.graph.node_count - len(self._bad)

    @property
    def n_bad(self) -> int:
        return len(self._bad)

    def bad_count(self, nodes: Iterable[int]) -> int:
        return sum(1 for i in nodes if i in self._bad)


def _good_edges(model: GeneratorModel, n_good: int, rng: random.Random,
                seed: Optional[int]) -> Set[Tuple[int, int]]:
    if n_good < 2:
        return set()
    if model.kind is GoodModel.CLIQUE_CHAIN:
        return clique_chain_edges(n_good, model.clique_size, model.stride, model.rewire, rng)
    if model.kind is GoodModel.RELAXED_CAVEMAN:
        caves = math.ceil(n_good / model.clique_size)
        g = nx.relaxed_caveman_graph(caves, model.clique_size, model.rewire, seed=seed)
    else:
        g = nx.watts_strogatz_graph(n_good, min(model.clique_size, n_good - 1),
                                    model.rewire, seed=seed)
    return {(min(u, v), max(u, v)) for u, v in g.edges() if u != v and u < n_good and v < n_good}


def _repair_a2(builder: GraphBuilder, n_good: int, x: int) -> int:
    """Delete good-bad edges with x or more mutual friends; one pass suffices."""
    deleted = 0
    for g in range(n_good):
        nbrs = builder.neighbors(g)
        for b in sorted(w for w in nbrs if w >= n_good):
            if len(nbrs & builder.neighbors(b)) >= x:
                builder.remove_edge_by_index(g, b)
                deleted += 1
    return deleted


def _repair_a3(builder: GraphBuilder, n_good: int, y: int) -> int:
    """
    Cut each bad node from its good neighborhood until every component is below y.

    The cut goes to the member of the largest component with the most
    links inside it, smallest index first.
    """
    deleted = 0
    for b in range(n_good, builder.node_count):
        while True:
            goods = {w for w in builder.neighbors(b) if w < n_good}
            components = _components(goods, builder.neighbors)
            largest = max(components, key=len, default=set())
            if len(largest) < y:
                break
            victim = min(largest, key=lambda w: (-len(builder.neighbors(w) & largest), w))
            builder.remove_edge_by_index(b, victim)
            deleted += 1
    return deleted


def generate_planted_graph(params: BehaviorParams, sizes: Mapping[str, int],
                           model: Union[GeneratorModel, Mapping[str, object], None] = None,
                           seed: Optional[int] = None) -> PlantedGraph:
    """
    Generate a planted graph satisfying the behavior assumptions.

    Good nodes are labelled h0.., bad nodes b0..; good nodes come first.

    Args:
        params: Behavior parameters r, x, y
        sizes: Mapping with n_good and n_bad
        model: Good-structure model (GeneratorModel or its dict form)
        seed: Seed; identical seeds and configs give identical graphs

    Returns:
        PlantedGraph with the repair deletion counts in ``repairs``

    Raises:
        ArgumentError: If n_good < 1, n_bad < 0 or the model is invalid
    """
    n_good = sizes.get("n_good", 0)
    n_bad = sizes.get("n_bad", 0)
    if n_good < 1 or n_bad < 0:
        raise ArgumentError(f"need n_good >= 1 and n_bad >= 0, got {n_good} and {n_bad}")
    if not isinstance(model, GeneratorModel):
        model = GeneratorModel.from_dict(model)

    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)

    builder = GraphBuilder()
    for i in range(n_good):
        builder.add_node(f"h{i}")
    for j in range(n_bad):
        builder.add_node(f"b{j}")

    for u, v in sorted(_good_edges(model, n_good, rng, seed)):
        builder.add_edge_by_index(u, v)
    if n_bad >= 2 and model.bad_density > 0:
        bad_graph = nx.gnp_random_graph(n_bad, model.bad_density, seed=seed)
        for u, v in bad_graph.edges():
            builder.add_edge_by_index(n_good + u, n_good + v)

    fraction = model.target_fraction(params)
    sampled = 0
    if n_bad and fraction > 0:
        for g in range(n_good):
            degree = len(builder.neighbors(g))
            if degree == 0:
                continue
            count = min(int(np_rng.poisson(fraction * degree / (1 - fraction))), n_bad)
            for b in np_rng.choice(n_bad, size=count, replace=False):
                if builder.add_edge_by_index(g, n_good + int(b)):
                    sampled += 1

    a2_deleted = _repair_a2(builder, n_good, params.x)
    a3_deleted = _repair_a3(builder, n_good, params.y)
    remaining = sampled - a2_deleted - a3_deleted
    if a2_deleted or a3_deleted:
        logger.debug(f"Repair removed {a2_deleted} strong and {a3_deleted} clustered cross edges")
    if sampled and not remaining:
        logger.warning("Repair removed every cross edge; the planted graph has no good-bad ties")

    labels = [NodeLabel.GOOD] * n_good + [NodeLabel.BAD] * n_bad
    repairs = {
        "cross_edges_sampled": sampled,
        "a2_deleted": a2_deleted,
        "a3_deleted": a3_deleted,
        "cross_edges": remaining,
    }
    return PlantedGraph(builder.build(), tuple(labels), params, seed, repairs)


@dataclass
class AssumptionReport:
    """Outcome of checking the three behavior assumptions on a planted graph."""
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    mean_bad_fraction: float
    worst_a1: List[Tuple[int, float]] = field(default_factory=list)
    a2_offenders: List[Tuple[int, int, int]] = field(default_factory=list)
    a3_offenders: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok

    def to_dict(self, graph: SocialGraph, precision: int = 6) -> Dict[str, object]:
        return {
            "a1_ok": self.a1_ok,
            "a2_ok": self.a2_ok,
            "a3_ok": self.a3_ok,
            "mean_bad_fraction": round(self.mean_bad_fraction, precision),
            "worst_a1": [
                {"node": graph.label(g), "bad_fraction": round(f, precision)}
                for g, f in self.worst_a1
            ],
            "a2_offenders": [
                {"good": graph.label(g), "bad": graph.label(b), "mutual_friends": s}
                for g, b, s in self.a2_offenders
            ],
            "a3_offenders": [
                {"bad": graph.label(b), "good_component": size}
                for b, size in self.a3_offenders
            ],
        }


def verify_assumptions(pg: PlantedGraph, worst: int = 5) -> AssumptionReport:
    """
    Check the behavior assumptions on a planted graph.

    The bad-friend bound is checked on the mean over good nodes of positive
    degree; the ``worst`` highest per-node fractions are reported alongside.
    """
    graph, params = pg.graph, pg.params
    fractions = []
    a2_offenders = []
    for g in pg.good_nodes():
        degree = graph.degree(g)
        if degree == 0:
            continue
        g_nbrs = graph.neighbor_set(g)
        bad_nbrs = [b for b in graph.neighbors(g) if pg.is_bad(b)]
        fractions.append((g, len(bad_nbrs) / degree))
        for b in bad_nbrs:
            strength = len(g_nbrs & graph.neighbor_set(b))
            if strength >= params.x:
                a2_offenders.append((g, b, strength))

    a3_offenders = []
    for b in pg.bad_nodes():
        goods = [w for w in graph.neighbors(b) if not pg.is_bad(w)]
        largest = max((len(c) for c in graph.induced_components(goods)), default=0)
        if largest >= params.y:
            a3_offenders.append((b, largest))

    mean, _ = _mean_stderr([f for _, f in fractions])
    worst_a1 = sorted(fractions, key=lambda item: (-item[1], item[0]))[:worst]
    report = AssumptionReport(
        a1_ok=mean <= params.r,
        a2_ok=not a2_offenders,
        a3_ok=not a3_offenders,
        mean_bad_fraction=mean,
        worst_a1=worst_a1,
        a2_offenders=a2_offenders,
        a3_offenders=a3_offenders,
    )
    if not report.all_ok:
        logger.warning(
            f"Assumptions violated: A1={report.a1_ok} A2={report.a2_ok} A3={report.a3_ok} "
            f"({len(a2_offenders)} strong good-bad ties, {len(a3_offenders)} clustered bad nodes)"
        )
    return report


@dataclass
class PurityReport:
    """Bad members in the backbone of every good center."""
    policy: RcpPolicy
    aligned: bool
    bad_counts: Dict[int, int]
    seed: Optional[int] = None

    @property
    def offenders(self) -> List[int]:
        return sorted(c for c, count in self.bad_counts.items() if count)

    @property
    def pure(self) -> bool:
        return not self.offenders

    @property
    def guaranteed(self) -> bool:
        """Purity is only promised when the policy is aligned with the behavior parameters."""
        return self.aligned

    @property
    def violated(self) -> bool:
        return self.aligned and not self.pure

    def to_dict(self, graph: SocialGraph) -> Dict[str, object]:
        return {
            "seed": self.seed,
            "policy": self.policy.to_dict(),
            "aligned": self.aligned,
            "centers": len(self.bad_counts),
            "pure": self.pure,
            "offenders": [
                {"center": graph.label(c), "bad_members": self.bad_counts[c]}
                for c in self.offenders
            ],
        }


def _good_backbones(pg: PlantedGraph, policy: RcpPolicy,
                    backbones: Optional[Mapping[int, FrozenSet[int]]]) -> Mapping[int, FrozenSet[int]]:
    if backbones is not None:
        return backbones
    return compose_all_backbones(pg.graph, policy, pg.good_nodes())


def measure_backbone_purity(pg: PlantedGraph, policy: RcpPolicy,
                            backbones: Optional[Mapping[int, FrozenSet[int]]] = None) -> PurityReport:
    """Count bad members of the engine backbone of every good center."""
    aligned = validate_policy_alignment(policy, pg.params)
    if not aligned:
        logger.warning(f"{policy} is not aligned with {pg.params.to_dict()}; purity is not guaranteed")
    backbones = _good_backbones(pg, policy, backbones)
    per_backbone: Dict[FrozenSet[int], int] = {}
    counts = {}
    for c in pg.good_nodes():
        members = backbones[c]
        if members not in per_backbone:
            per_backbone[members] = pg.bad_count(members)
        counts[c] = per_backbone[members]
    report = PurityReport(policy, aligned, counts, pg.seed)
    if report.violated:
        logger.error(f"{len(report.offenders)} good backbones hold bad citizens under aligned {policy}")
    return report


def analytic_bound(graph: SocialGraph, members: Iterable[int], r: float) -> float:
    """
    r * sum(|F(m)|) / sum(|F(m)| + 1) over the backbone members.

    Raises:
        ArgumentError: If the backbone is empty
    """
    members = list(members)
    if not members:
        raise ArgumentError("analytic bound needs a nonempty backbone")
    total = sum(graph.degree(m) for m in members)
    return r * total / (total + len(members))


def _domain_of(graph: SocialGraph, members: Iterable[int]) -> Set[int]:
    domain: Set[int] = set()
    for m in members:
        domain.add(m)
        domain.update(graph.neighbor_set(m))
    return domain


@dataclass
class ResilienceReport:
    """Bad-citizen exposure of every good center's backbone and complete domain."""
    policy: RcpPolicy
    params: BehaviorParams
    backbone_bad_counts: Dict[int, int]
    domain_bad_fractions: Dict[int, float]
    mean_bad_fraction: float
    stderr: float
    analytic_bounds: Dict[int, float]
    analytic_bound: float
    baseline_mean_bad_fraction: Optional[float] = None
    seed: Optional[int] = None

    @property
    def aligned(self) -> bool:
        return validate_policy_alignment(self.policy, self.params)

    @property
    def max_bad_fraction(self) -> float:
        return max(self.domain_bad_fractions.values(), default=0.0)

    @property
    def bound_ok(self) -> bool:
        """Every per-center analytic bound lies strictly below r."""
        return all(b < self.params.r for b in self.analytic_bounds.values())

    def to_dict(self, graph: SocialGraph, precision: int = 6,
                emit_centers: bool = False) -> Dict[str, object]:
        data: Dict[str, object] = {
            "seed": self.seed,
            "policy": self.policy.to_dict(),
            "params": self.params.to_dict(),
            "aligned": self.aligned,
            "centers": len(self.domain_bad_fractions),
            "backbone_bad_total": sum(self.backbone_bad_counts.values()),
            "mean_bad_fraction": round(self.mean_bad_fraction, precision),
            "stderr": round(self.stderr, precision),
            "max_bad_fraction": round(self.max_bad_fraction, precision),
            "analytic_bound": round(self.analytic_bound, precision),
            "bound_ok": self.bound_ok,
            "baseline_mean_bad_fraction": (
                None if self.baseline_mean_bad_fraction is None
                else round(self.baseline_mean_bad_fraction, precision)
            ),
        }
        if emit_centers:
            data["per_center"] = [
                {
                    "center": graph.label(c),
                    "backbone_bad": self.backbone_bad_counts[c],
                    "domain_bad_fraction": round(self.domain_bad_fractions[c], precision),
                    "analytic_bound": round(self.analytic_bounds[c], precision),
                }
                for c in sorted(self.domain_bad_fractions)
            ]
        return data

    def csv_row(self, precision: int = 6) -> Dict[str, object]:
        """Summary row keyed by RESILIENCE_CSV_FIELDS."""
        baseline = self.baseline_mean_bad_fraction
        return {
            "seed": "" if self.seed is None else self.seed,
            "alpha": self.policy.alpha,
            "beta": self.policy.beta,
            "aligned": self.aligned,
            "centers": len(self.domain_bad_fractions),
            "backbone_bad_total": sum(self.backbone_bad_counts.values()),
            "mean_bad_fraction": f"{self.mean_bad_fraction:.{precision}f}",
            "stderr": f"{self.stderr:.{precision}f}",
            "max_bad_fraction": f"{self.max_bad_fraction:.{precision}f}",
            "analytic_bound": f"{self.analytic_bound:.{precision}f}",
            "baseline_mean_bad_fraction": "" if baseline is None else f"{baseline:.{precision}f}",
        }


def baseline_bad_fraction(pg: PlantedGraph, hops: int, sample: Optional[int] = None,
                          rng: Optional[random.Random] = None) -> float:
    """Mean bad fraction of plain friend-of-friend domains over (a sample of) good centers."""
    centers = pg.good_nodes()
    if sample is not None and len(centers) > sample:
        centers = sorted((rng or random.Random(pg.seed)).sample(centers, sample))
    fractions = []
    for c in centers:
        domain = baseline_domain(pg.graph, c, hops)
        fractions.append(pg.bad_count(domain) / len(domain))
    mean, _ = _mean_stderr(fractions)
    return mean


def measure_domain_resilience(pg: PlantedGraph, policy: RcpPolicy,
                              backbones: Optional[Mapping[int, FrozenSet[int]]] = None,
                              baseline_hops: Optional[int] = None,
                              baseline_sample: Optional[int] = None) -> ResilienceReport:
    """
    Realized bad fraction of every good center's complete domain.

    Args:
        pg: Planted graph
        policy: RCP policy
        backbones: Precomputed engine backbones of the good centers
        baseline_hops: If set, also measure friend-of-friend domains of this radius
        baseline_sample: Cap on the good centers used for the baseline

    Returns:
        ResilienceReport
    """
    if not validate_policy_alignment(policy, pg.params):
        logger.warning(f"{policy} is not aligned with {pg.params.to_dict()}; resilience is not guaranteed")
    graph, r = pg.graph, pg.params.r
    backbones = _good_backbones(pg, policy, backbones)

    per_backbone: Dict[FrozenSet[int], Tuple[int, float, float]] = {}
    bad_counts, fractions, bounds = {}, {}, {}
    for c in pg.good_nodes():
        members = backbones[c]
        if members not in per_backbone:
            domain = _domain_of(graph, members)
            per_backbone[members] = (
                pg.bad_count(members),
                pg.bad_count(domain) / len(domain),
                analytic_bound(graph, members, r),
            )
        bad_counts[c], fractions[c], bounds[c] = per_backbone[members]

    mean, stderr = _mean_stderr(list(fractions.values()))
    baseline = None
    if baseline_hops:
        baseline = baseline_bad_fraction(pg, baseline_hops, baseline_sample)
    logger.info(
        f"{policy} seed={pg.seed}: mean domain bad fraction {mean:.6f} ± {stderr:.6f} "
        f"over {len(fractions)} good centers"
    )
    return ResilienceReport(
        policy=policy,
        params=pg.params,
        backbone_bad_counts=bad_counts,
        domain_bad_fractions=fractions,
        mean_bad_fraction=mean,
        stderr=stderr,
        analytic_bounds=bounds,
        analytic_bound=max(bounds.values(), default=0.0),
        baseline_mean_bad_fraction=baseline,
        seed=pg.seed,
    )


@dataclass(frozen=True)
class AttackSpec:
    """Mass-infiltration attack: bots to add, their density and the cross-link budget."""
    bots: int = 0
    bot_density: float = 1.0
    cross_link_budget: int = 0
    strategy: AttackStrategy = AttackStrategy.RANDOM

    def __post_init__(self):
        if not isinstance(self.strategy, AttackStrategy):
            try:
                object.__setattr__(self, "strategy", AttackStrategy(self.strategy))
            except ValueError:
                raise ArgumentError(f"unknown attack strategy {self.strategy!r}")
        if self.bots < 0 or self.cross_link_budget < 0:
            raise ArgumentError("bots and cross_link_budget must be >= 0")
        if not 0 <= self.bot_density <= 1:
            raise ArgumentError("bot_density must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "AttackSpec":
        return cls(
            bots=data.get("bots", 0),
            bot_density=data.get("bot_density", 1.0),
            cross_link_budget=data.get("cross_link_budget", 0),
            strategy=data.get("strategy", "random"),
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "bots": self.bots,
            "bot_density": self.bot_density,
            "cross_link_budget": self.cross_link_budget,
            "strategy": self.strategy.value,
        }


@dataclass
class BadFriendLedger:
    """Running mean of the bad-friend fraction over good nodes of positive degree."""
    total: float = 0.0
    count: int = 0

    @classmethod
    def from_builder(cls, builder: GraphBuilder, is_bad: Callable[[int], bool]) -> "BadFriendLedger":
        ledger = cls()
        for g in range(builder.node_count):
            nbrs = builder.neighbors(g)
            if is_bad(g) or not nbrs:
                continue
            ledger.total += sum(1 for w in nbrs if is_bad(w)) / len(nbrs)
            ledger.count += 1
        return ledger

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    @staticmethod
    def _shift(degree: int, bad_friends: int) -> Tuple[float, int]:
        if degree == 0:
            return 1.0, 1
        return (bad_friends + 1) / (degree + 1) - bad_friends / degree, 0

    def mean_after_link(self, degree: int, bad_friends: int) -> float:
        """Mean once a good node of this degree and bad-friend count gains one bad friend."""
        delta, extra = self._shift(degree, bad_friends)
        return (self.total + delta) / (self.count + extra)

    def record_link(self, degree: int, bad_friends: int) -> None:
        delta, extra = self._shift(degree, bad_friends)
        self.total += delta
        self.count += extra


def cross_link_rejection(builder: GraphBuilder, is_bad: Callable[[int], bool],
                         good: int, bad: int, params: BehaviorParams,
                         ledger: Optional[BadFriendLedger] = None) -> Optional[str]:
    """
    Reason a new good-bad edge would break an assumption, or None if it is admissible.

    Reasons: "exists", "a1" (pushes the mean bad-friend fraction of good
    nodes over r, the measure verify_assumptions checks), "a2" (the new tie,
    or a tie it adds a mutual friend to, reaches x mutual friends) and "a3"
    (the bad node would befriend a connected good set of y or more).

    Args:
        ledger: Running bad-friend mean of ``builder``; rebuilt when omitted
    """
    g_nbrs = builder.neighbors(good)
    b_nbrs = builder.neighbors(bad)
    if bad in g_nbrs:
        return "exists"
    if ledger is None:
        ledger = BadFriendLedger.from_builder(builder, is_bad)
    bad_friends = sum(1 for w in g_nbrs if is_bad(w))
    if ledger.mean_after_link(len(g_nbrs), bad_friends) > params.r:
        return "a1"
    common = g_nbrs & b_nbrs
    if len(common) >= params.x:
        return "a2"
    for w in common:
        if is_bad(w):
            # good-w tie gains the new bad node as a mutual friend
            if len(g_nbrs & builder.neighbors(w)) + 1 >= params.x:
                return "a2"
        elif len(builder.neighbors(w) & b_nbrs) + 1 >= params.x:
            return "a2"
    goods = {w for w in b_nbrs if not is_bad(w)} | {good}
    for component in _components(goods, builder.neighbors):
        if good in component and len(component) >= params.y:
            return "a3"
    return None


@dataclass
class AttackOutcome:
    """Reports before and after a mass-infiltration attack."""
    spec: AttackSpec
    attacked: PlantedGraph
    before: ResilienceReport
    after: ResilienceReport
    purity_after: PurityReport
    accepted: int
    rejections: Dict[str, int]

    def to_dict(self, precision: int = 6) -> Dict[str, object]:
        return {
            "attack": self.spec.to_dict(),
            "accepted_links": self.accepted,
            "rejected_links": dict(sorted(self.rejections.items())),
            "before": self.before.to_dict(self.attacked.graph, precision),
            "after": self.after.to_dict(self.attacked.graph, precision),
            "purity_after": self.purity_after.to_dict(self.attacked.graph),
        }


def _attack_targets(pg: PlantedGraph, spec: AttackSpec, rng: random.Random) -> List[int]:
    goods = pg.good_nodes()
    if not goods or not spec.cross_link_budget:
        return []
    graph = pg.graph
    if spec.strategy is AttackStrategy.RANDOM:
        return [rng.choice(goods) for _ in range(spec.cross_link_budget)]
    if spec.strategy is AttackStrategy.TARGETED:
        weights = [graph.degree(g) + 1 for g in goods]
        return rng.choices(goods, weights=weights, k=spec.cross_link_budget)
    # clustered: hammer one friend circle at a time
    targets = []
    circle: List[int] = []
    while len(targets) < spec.cross_link_budget:
        if not circle:
            anchor = rng.choice(goods)
            circle = sorted(w for w in graph.closed_neighborhood(anchor) if not pg.is_bad(w))
            rng.shuffle(circle)
        targets.append(circle.pop())
    return targets


def mass_infiltration_attack(pg: PlantedGraph, spec: AttackSpec, policy: RcpPolicy,
                             seed: Optional[int] = None, baseline_hops: int = 3,
                             baseline_sample: Optional[int] = 200) -> AttackOutcome:
    """
    Add bots and attempt cross links, then remeasure resilience.

    Bots (labelled x0..) are linked among themselves and to the existing bad
    nodes with probability ``bot_density``. Each cross-link attempt joins a
    target good node to a bad node and is rejected when
    cross_link_rejection objects. Both reports carry the friend-of-friend
    baseline for contrast.
    """
    rng = random.Random(pg.seed if seed is None else seed)
    builder = GraphBuilder.from_graph(pg.graph)
    labels = list(pg.labels)

    old_bad = pg.bad_nodes()
    bots = []
    for k in range(spec.bots):
        bots.append(builder.add_node(f"x{k}"))
        labels.append(NodeLabel.BAD)
    bad_set = set(old_bad) | set(bots)
    for a_pos, a in enumerate(bots):
        for b in bots[a_pos + 1:] + old_bad:
            if spec.bot_density >= 1 or rng.random() < spec.bot_density:
                builder.add_edge_by_index(a, b)

    accepted = 0
    rejections: Dict[str, int] = {}
    pool = bots or old_bad
    current_bad = None
    ledger = BadFriendLedger.from_builder(builder, bad_set.__contains__)
    for target in _attack_targets(pg, spec, rng):
        if not pool:
            rejections["no_bad_nodes"] = rejections.get("no_bad_nodes", 0) + 1
            continue
        if spec.strategy is not AttackStrategy.CLUSTERED or current_bad is None or rng.random() < 0.1:
            current_bad = rng.choice(pool)
        reason = cross_link_rejection(builder, bad_set.__contains__, target, current_bad,
                                      pg.params, ledger)
        if reason is None:
            g_nbrs = builder.neighbors(target)
            ledger.record_link(len(g_nbrs), sum(1 for w in g_nbrs if w in bad_set))
            builder.add_edge_by_index(target, current_bad)
            accepted += 1
        else:
            rejections[reason] = rejections.get(reason, 0) + 1
    logger.info(f"Attack added {spec.bots} bots; accepted {accepted} cross links, rejected {rejections}; "
                f"mean bad-friend fraction now {ledger.mean:.6f}")

    attacked = PlantedGraph(builder.build(), tuple(labels), pg.params, pg.seed)
    before = measure_domain_resilience(pg, policy, baseline_hops=baseline_hops,
                                       baseline_sample=baseline_sample)
    after_backbones = compose_all_backbones(attacked.graph, policy, attacked.good_nodes())
    after = measure_domain_resilience(attacked, policy, after_backbones,
                                      baseline_hops=baseline_hops, baseline_sample=baseline_sample)
    purity_after = measure_backbone_purity(attacked, policy, after_backbones)
    return AttackOutcome(spec, attacked, before, after, purity_after, accepted, rejections)


def apply_negative_control(pg: PlantedGraph, ties: int = 1, mutual_friends: int = 3,
                           seed: Optional[int] = None) -> PlantedGraph:
    """
    Break the assumptions on purpose by hand-adding strong good-bad ties.

    For each tie a bad node is linked to a good node and to ``mutual_friends``
    of its good neighbors, so the tie has at least that many mutual friends.
    A fresh bad node z<k> is added when the graph has none.

    Raises:
        ArgumentError: If no good node has enough good neighbors
    """
    rng = random.Random(pg.seed if seed is None else seed)
    graph = pg.graph
    hosts = [g for g in pg.good_nodes()
             if sum(1 for w in graph.neighbors(g) if not pg.is_bad(w)) >= mutual_friends]
    if not hosts:
        raise ArgumentError(f"no good node has {mutual_friends} good neighbors")
    builder = GraphBuilder.from_graph(graph)
    labels = list(pg.labels)
    bad = pg.bad_nodes()
    for k in range(ties):
        if bad:
            b = rng.choice(bad)
        else:
            b = builder.add_node(f"z{k}")
            labels.append(NodeLabel.BAD)
        g = rng.choice(hosts)
        friends = sorted(w for w in graph.neighbors(g) if not pg.is_bad(w))
        builder.add_edge_by_index(g, b)
        for w in rng.sample(friends, mutual_friends):
            builder.add_edge_by_index(w, b)
        logger.info(f"Negative control: tied {builder.label(b)} to {graph.label(g)} "
                    f"with {mutual_friends} mutual friends")
    return PlantedGraph(builder.build(), tuple(labels), pg.params, pg.seed, dict(pg.repairs))


@dataclass
class PolicySummary:
    """Statistics over seeds for one policy."""
    policy: RcpPolicy
    aligned: bool
    seeds: int
    mean_bad_fraction: float
    stderr: float
    bound_ok: bool
    pure: bool

    def resilience_ok(self, r: float) -> bool:
        """Mean of the per-seed mean domain bad fractions plus three standard errors stays below r."""
        return self.mean_bad_fraction + 3 * self.stderr < r

    def to_dict(self, r: float, precision: int = 6) -> Dict[str, object]:
        return {
            "policy": self.policy.to_dict(),
            "aligned": self.aligned,
            "seeds": self.seeds,
            "mean_bad_fraction": round(self.mean_bad_fraction, precision),
            "stderr": round(self.stderr, precision),
            "resilience_ok": self.resilience_ok(r),
            "bound_ok": self.bound_ok,
            "pure": self.pure,
        }


@dataclass
class SeedRun:
    """Everything measured on one planted graph."""
    seed: int
    planted: PlantedGraph
    assumptions: AssumptionReport
    purity: List[PurityReport]
    resilience: List[ResilienceReport]
    attacks: List[AttackOutcome] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """Per-seed runs plus per-policy summaries."""
    params: BehaviorParams
    runs: List[SeedRun]
    summaries: List[PolicySummary]

    @property
    def purity_failures(self) -> List[Tuple[PlantedGraph, PurityReport]]:
        """Aligned-policy purity reports with bad backbone members, attacks included."""
        failures = []
        for run in self.runs:
            failures.extend((run.planted, p) for p in run.purity if p.violated)
            failures.extend((a.attacked, a.purity_after) for a in run.attacks
                            if a.purity_after.violated)
        return failures

    @property
    def purity_ok(self) -> bool:
        return not self.purity_failures

    @property
    def resilience_ok(self) -> bool:
        return all(s.resilience_ok(self.params.r) for s in self.summaries if s.aligned)

    @property
    def bound_ok(self) -> bool:
        return all(s.bound_ok for s in self.summaries)

    def to_dict(self, precision: int = 6) -> Dict[str, object]:
        return {
            "params": self.params.to_dict(),
            "purity_ok": self.purity_ok,
            "resilience_ok": self.resilience_ok,
            "bound_ok": self.bound_ok,
            "summaries": [s.to_dict(self.params.r, precision) for s in self.summaries],
            "runs": [
                {
                    "seed": run.seed,
                    "nodes": run.planted.graph.node_count,
                    "links": run.planted.graph.link_count,
                    "repairs": run.planted.repairs,
                    "assumptions": run.assumptions.to_dict(run.planted.graph, precision),
                    "purity": [p.to_dict(run.planted.graph) for p in run.purity],
                    "resilience": [r.to_dict(run.planted.graph, precision) for r in run.resilience],
                    "attacks": [a.to_dict(precision) for a in run.attacks],
                }
                for run in self.runs
            ],
        }

    def csv_rows(self, precision: int = 6) -> List[Dict[str, object]]:
        return [report.csv_row(precision) for run in self.runs for report in run.resilience]

    def offenders_dict(self) -> List[Dict[str, object]]:
        return [report.to_dict(planted.graph) for planted, report in self.purity_failures]


def seed_list(seeds: Union[Sequence[int], Mapping[str, int]]) -> List[int]:
    """Seeds given either as a list or as {start, count}."""
    if isinstance(seeds, Mapping):
        return list(range(seeds["start"], seeds["start"] + seeds["count"]))
    return list(seeds)


def run_seed(simulation: Mapping[str, object], seed: int) -> SeedRun:
    """Generate, optionally sabotage, and measure one planted graph."""
    params = BehaviorParams(**simulation["params"])
    planted = generate_planted_graph(params, simulation["sizes"], simulation.get("model"), seed)
    control = simulation.get("negative_control")
    if control:
        planted = apply_negative_control(planted, control.get("ties", 1),
                                         control.get("mutual_friends", params.x), seed)
    assumptions = verify_assumptions(planted)

    hops = simulation.get("baseline_hops", 3)
    sample = simulation.get("baseline_sample", 200)
    attack = simulation.get("attack")
    purity, resilience, attacks = [], [], []
    for entry in simulation["policies"]:
        policy = RcpPolicy(entry["alpha"], entry["beta"])
        backbones = compose_all_backbones(planted.graph, policy, planted.good_nodes())
        purity.append(measure_backbone_purity(planted, policy, backbones))
        resilience.append(measure_domain_resilience(planted, policy, backbones, hops, sample))
        if attack:
            attacks.append(mass_infiltration_attack(planted, AttackSpec.from_dict(attack), policy,
                                                    seed, hops, sample))
    return SeedRun(seed, planted, assumptions, purity, resilience, attacks)


def _run_seed_job(job: Tuple[Mapping[str, object], int]) -> SeedRun:
    return run_seed(*job)


def run_experiment(simulation: Mapping[str, object], workers: Optional[int] = None) -> ExperimentResult:
    """
    Run every seed and policy of a simulation config section.

    Args:
        simulation: The ``simulation`` configuration section
        workers: Worker processes over seeds; defaults to simulation.workers

    Returns:
        ExperimentResult
    """
    params = BehaviorParams(**simulation["params"])
    seeds = seed_list(simulation["seeds"])
    workers = workers or simulation.get("workers", 1)
    logger.info(f"Running {len(seeds)} seeds over {len(simulation['policies'])} policies")
    jobs = [(simulation, seed) for seed in seeds]
    if workers > 1 and len(jobs) > 1:
        with Pool(min(workers, len(jobs))) as pool:
            runs = pool.map(_run_seed_job, jobs)
    else:
        runs = [_run_seed_job(job) for job in jobs]

    summaries = []
    for k, entry in enumerate(simulation["policies"]):
        policy = RcpPolicy(entry["alpha"], entry["beta"])
        reports = [run.resilience[k] for run in runs]
        mean, stderr = _mean_stderr([report.mean_bad_fraction for report in reports])
        summaries.append(PolicySummary(
            policy=policy,
            aligned=validate_policy_alignment(policy, params),
            seeds=len(runs),
            mean_bad_fraction=mean,
            stderr=stderr,
            bound_ok=all(report.bound_ok for report in reports),
            pure=all(run.purity[k].pure for run in runs),
        ))
    return ExperimentResult(params, runs, summaries)
