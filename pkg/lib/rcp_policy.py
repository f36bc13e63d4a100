#!/usr/bin/env python3
"""RCP policy parameters, behavior assumptions and expansion feasibility."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .graph_core import ArgumentError, SocialGraph
from .logger_config import get_logger

logger = get_logger("rcp_policy")


class PolicyError(ArgumentError):
    """Raised when policy or behavior parameters are out of range."""
    pass


def _require_count(name: str, value: object, minimum: int = 1) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise PolicyError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise PolicyError(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True, order=True)
class RcpPolicy:
    """
    RCP policy pi(alpha, beta).

    alpha is the minimum size of a connected sentinel set that admits a
    common friend; beta is the minimum number of mutual friends that makes
    a tie strong.
    """
    alpha: int
    beta: int

    def __post_init__(self):
        _require_count("alpha", self.alpha)
        _require_count("beta", self.beta)

    @property
    def resilience_aligned(self) -> bool:
        """alpha >= beta + 1, mirroring y >= x + 1 of the behavior parameters."""
        return self.alpha >= self.beta + 1

    @classmethod
    def sweep(cls, beta_lo: int, beta_hi: int, alpha: Optional[int] = None) -> List["RcpPolicy"]:
        """
        Policies for beta in [beta_lo, beta_hi] with alpha = beta + 1 unless pinned.

        Raises:
            PolicyError: If the range is empty
        """
        if beta_hi < beta_lo:
            raise PolicyError(f"empty beta range {beta_lo}:{beta_hi}")
        return [cls(alpha if alpha is not None else beta + 1, beta)
                for beta in range(beta_lo, beta_hi + 1)]

    def to_dict(self) -> Dict[str, int]:
        return {"alpha": self.alpha, "beta": self.beta}

    def __str__(self) -> str:
        return f"pi({self.alpha},{self.beta})"


@dataclass(frozen=True)
class BehaviorParams:
    """
    Good-citizen behavior parameters.

    r bounds the probability that a good citizen's friend is bad; a
    good-bad tie never has x or more mutual friends; no bad node is a common
    friend of a connected good set of size y or more.
    """
    r: float
    x: int
    y: int

    def __post_init__(self):
        if isinstance(self.r, bool) or not isinstance(self.r, (int, float)):
            raise PolicyError(f"r must be a number, got {self.r!r}")
        if not 0 < self.r < 1:
            raise PolicyError(f"r must lie in (0, 1), got {self.r}")
        _require_count("x", self.x)
        _require_count("y", self.y)
        if self.y < self.x + 1:
            raise PolicyError(f"y must be >= x + 1, got x={self.x}, y={self.y}")

    def to_dict(self) -> Dict[str, float]:
        return {"r": self.r, "x": self.x, "y": self.y}


class Branch(Enum):
    """Which pairing of the sentinel and candidate clauses admitted a duplet."""
    A = "A"
    B = "B"
    NONE = "none"


@dataclass(frozen=True)
class ExpansionDuplet:
    """Sentinel set R, candidate set Q and an optional required key node."""
    sentinels: FrozenSet[int]
    candidates: FrozenSet[int]
    key_node: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "sentinels", frozenset(self.sentinels))
        object.__setattr__(self, "candidates", frozenset(self.candidates))
        if not self.candidates:
            raise ArgumentError("candidate set Q must be nonempty")
        if self.sentinels & self.candidates:
            raise ArgumentError("sentinel and candidate sets must be disjoint")

    @property
    def expansion_set(self) -> FrozenSet[int]:
        return self.sentinels | self.candidates


@dataclass(frozen=True)
class Verdict:
    """Outcome of a feasibility check."""
    feasible: bool
    branch: Branch
    violations: Tuple[str, ...] = field(default_factory=tuple)
    key_node: Optional[int] = None

    def to_dict(self, graph: Optional[SocialGraph] = None) -> Dict[str, object]:
        key = self.key_node
        if graph is not None and key is not None:
            key = graph.label(key)
        return {
            "feasible": self.feasible,
            "branch": self.branch.value,
            "key_node": key,
            "violations": list(self.violations),
        }


def validate_policy_alignment(policy: RcpPolicy, params: BehaviorParams) -> bool:
    """True iff alpha >= y and beta >= x."""
    return policy.alpha >= params.y and policy.beta >= params.x


def find_key_nodes(graph: SocialGraph, nodes: Iterable[int]) -> Set[int]:
    """
    Nodes l of S whose friend circle holds the rest of S.

    Raises:
        ArgumentError: If S is empty
    """
    members = set(nodes)
    if not members:
        raise ArgumentError("key nodes need a nonempty node set")
    for node in members:
        graph.check_node(node)
    size = len(members)
    return {
        l for l in members
        if len(graph.neighbor_set(l) & members) == size - 1
    }


def _names(graph: SocialGraph, nodes: Iterable[int]) -> str:
    return ",".join(graph.labels_of(nodes))


def _branch_a(graph: SocialGraph, policy: RcpPolicy, duplet: ExpansionDuplet,
              keys: Set[int], sentinels_connected: bool) -> Tuple[Optional[int], List[str]]:
    sentinels, candidates = duplet.sentinels, duplet.candidates
    violations = []
    if not 1 <= len(sentinels) < policy.alpha:
        violations.append(f"A: |R| = {len(sentinels)} outside [1, alpha={policy.alpha})")
    if sentinels and not sentinels_connected:
        violations.append("A: R is not a connected set")
    key_candidates = sorted(keys & sentinels)
    if not key_candidates:
        violations.append("A: no key node of R∪Q lies in R")
        return None, violations

    weak_by_key = {}
    for l in key_candidates:
        l_nbrs = graph.neighbor_set(l)
        weak = [q for q in candidates
                if len(l_nbrs & graph.neighbor_set(q)) < policy.beta]
        if not weak:
            return (l if not violations else None), violations
        weak_by_key[l] = weak
    l = key_candidates[0]
    violations.append(
        f"A: candidates {_names(graph, weak_by_key[l])} have fewer than "
        f"beta={policy.beta} mutual friends with key node {graph.label(l)}"
    )
    return None, violations


def _branch_b(graph: SocialGraph, policy: RcpPolicy, duplet: ExpansionDuplet,
              keys: Set[int], pinned: Set[int],
              sentinels_connected: bool) -> Tuple[Optional[int], List[str]]:
    sentinels, candidates = duplet.sentinels, duplet.candidates
    violations = []
    if len(sentinels) < policy.alpha:
        violations.append(f"B: |R| = {len(sentinels)} < alpha={policy.alpha}")
    if sentinels and not sentinels_connected:
        violations.append("B: R is not a connected set")
    non_keys = candidates - keys
    if non_keys:
        violations.append(f"B: candidates {_names(graph, non_keys)} are not key nodes of R∪Q")
    if not pinned & candidates:
        violations.append("B: the required key node is not a candidate")
    if violations:
        return None, violations
    return min(pinned & candidates), violations


def check_expansion_feasibility(graph: SocialGraph, policy: RcpPolicy,
                                duplet: ExpansionDuplet,
                                current_backbone: Iterable[int]) -> Verdict:
    """
    Decide whether duplet (R, Q) is a feasible expansion of the backbone.

    Branch A: a key node l of R∪Q lies in R, 1 <= |R| < alpha, R is
    connected, and every candidate has at least beta mutual friends with l.
    Branch B: |R| >= alpha, R is connected, and every candidate is a key
    node of R∪Q. The clauses are never cross-paired.

    Args:
        graph: Graph under test
        policy: RCP policy
        duplet: Duplet to check
        current_backbone: Backbone being expanded

    Returns:
        Verdict with the admitting branch or the list of failed clauses

    Raises:
        ArgumentError: If R is not inside the backbone or Q intersects it
    """
    backbone = frozenset(current_backbone)
    for node in duplet.expansion_set | backbone:
        graph.check_node(node)
    if not duplet.sentinels <= backbone:
        raise ArgumentError("sentinel set R must lie inside the current backbone")
    if duplet.candidates & backbone:
        raise ArgumentError("candidate set Q must lie outside the current backbone")

    keys = find_key_nodes(graph, duplet.expansion_set)
    pinned = keys if duplet.key_node is None else keys & {duplet.key_node}
    sentinels_connected = graph.is_connected_set(duplet.sentinels)

    key_a, violations_a = _branch_a(graph, policy, duplet, pinned, sentinels_connected)
    if key_a is not None:
        return Verdict(True, Branch.A, (), key_a)
    key_b, violations_b = _branch_b(graph, policy, duplet, keys, pinned,
                                    sentinels_connected)
    if key_b is not None:
        return Verdict(True, Branch.B, (), key_b)

    violations = tuple(violations_a + violations_b)
    if not keys:
        violations = ("P1: R∪Q has no key node",) + violations
    logger.debug(f"Infeasible expansion: {'; '.join(violations)}")
    return Verdict(False, Branch.NONE, violations, None)
