"""Search trees of equivalent diagrams, grown one rewrite at a time.

Each node holds a diagram, its extracted circuit and the policy's weight ``W``
and value ``V``.  A node is chosen with probability proportional to
``exp(mean W along its root path)``, a rewrite is drawn uniformly from the
node's untried matches, and the child is extracted immediately.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Protocol

import numpy as np

from zxrl.circuit import Circuit
from zxrl.diagram import ZXDiagram, circuit_to_diagram
from zxrl.extract import ExtractionFailed, ExtractionResult, extract_with_levels
from zxrl.policy import featurize_parts
from zxrl.rewrite import InvalidMatch, Match, apply_rewrite, enumerate_matches

log = logging.getLogger(__name__)


class NoCandidates(RuntimeError):
    """No node in the tree has an untried match left."""


class NoMatches(RuntimeError):
    """The node has no untried match left."""


class Policy(Protocol):
    def evaluate(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-row weight and value for a (k, 24) feature matrix."""


@dataclass
class TreeNode:
    id: int
    parent: int | None
    action: Match | None
    diagram: ZXDiagram
    extraction: ExtractionResult
    cnot_count: int
    untried: list[Match]
    features: np.ndarray
    depth: int = 0
    weight: float = 0.0
    value: float = 0.0

    @property
    def circuit(self) -> Circuit:
        return self.extraction.circuit


def make_node(nid: int, parent: TreeNode | None, action: Match | None, d: ZXDiagram, max_level: int = 5) -> TreeNode:
    ex = extract_with_levels(d, max_level)
    feats = featurize_parts(ex.circuit, d)
    return TreeNode(
        id=nid,
        parent=None if parent is None else parent.id,
        action=action,
        diagram=d,
        extraction=ex,
        cnot_count=ex.circuit.two_qubit_count(),
        untried=enumerate_matches(d),
        features=feats,
        depth=0 if parent is None else parent.depth + 1,
    )


class SearchTree:
    """Arena of nodes; ids are list indices and parents always precede children."""

    def __init__(self, root: Circuit | ZXDiagram, budget: int = 128, max_level: int = 5):
        d = circuit_to_diagram(root) if isinstance(root, Circuit) else root
        self.budget = budget
        self.max_level = max_level
        self.steps = 0
        self.failed = False
        self.nodes: list[TreeNode] = [make_node(0, None, None, d, max_level)]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def finished(self) -> bool:
        """Budget spent, nothing left to expand, or the last expansion failed to extract."""
        return self.failed or self.steps >= self.budget or not any(n.untried for n in self.nodes)

    def candidate_nodes(self) -> list[int]:
        return [n.id for n in self.nodes if n.untried]

    def path(self, nid: int) -> list[int]:
        """Node ids from the root to ``nid`` inclusive."""
        out = []
        cur: int | None = nid
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out[::-1]

    def path_weight(self, nid: int) -> float:
        ids = self.path(nid)
        return sum(self.nodes[i].weight for i in ids) / len(ids)

    def path_weights(self) -> np.ndarray:
        """Path weight of every node, in one pass over the arena."""
        total = np.empty(len(self.nodes))
        for n in self.nodes:
            total[n.id] = n.weight + (0.0 if n.parent is None else total[n.parent])
        depth = np.array([n.depth + 1 for n in self.nodes], dtype=float)
        return total / depth

    def path_matrix(self, candidates: list[int]) -> np.ndarray:
        """(len(candidates), len(nodes)) matrix whose row c averages W over c's root path."""
        m = np.zeros((len(candidates), len(self.nodes)))
        for r, c in enumerate(candidates):
            ids = self.path(c)
            m[r, ids] = 1.0 / len(ids)
        return m

    def set_policy_outputs(self, weights: np.ndarray, values: np.ndarray) -> None:
        for n, w, v in zip(self.nodes, weights, values):
            n.weight = float(w)
            n.value = float(v)

    def selection_probs(self, candidates: list[int] | None = None) -> tuple[list[int], np.ndarray]:
        if candidates is None:
            candidates = self.candidate_nodes()
        if not candidates:
            raise NoCandidates("every node is fully expanded")
        logits = self.path_weights()[candidates]
        logits = logits - logits.max()
        p = np.exp(logits)
        return candidates, p / p.sum()

    def select_node(self, rng: np.random.Generator) -> tuple[int, float]:
        """Sample a candidate by softmax over path weights; returns (id, log-probability)."""
        cands, p = self.selection_probs()
        k = _sample_index(p, rng)
        return cands[k], math.log(p[k])

    def expand(self, nid: int, m: Match) -> int:
        n = self.nodes[nid]
        try:
            n.untried.remove(m)
        except ValueError:
            raise InvalidMatch(f"{m} is not an untried match of node {nid}") from None
        self.steps += 1
        d = apply_rewrite(n.diagram, m)
        child = make_node(len(self.nodes), n, m, d, self.max_level)
        self.nodes.append(child)
        return child.id

    def reward_of(self, nid: int) -> float:
        base = self.root.cnot_count
        if base == 0:
            return 0.0
        return 1.0 - self.nodes[nid].cnot_count / base

    def tree_reward(self) -> float:
        if self.root.cnot_count == 0:
            return 0.0
        return max(self.reward_of(n.id) for n in self.nodes)

    def best_node(self) -> TreeNode:
        """Lowest two-qubit count; earliest node on ties."""
        return min(self.nodes, key=lambda n: (n.cnot_count, n.id))


def _sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    k = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(k, len(p) - 1)


def choose_match(node: TreeNode, rng: np.random.Generator) -> Match:
    """Uniform choice among the node's untried matches."""
    if not node.untried:
        raise NoMatches(f"node {node.id} has no untried match")
    return node.untried[int(rng.integers(len(node.untried)))]


class UniformPolicy:
    """W = V = 0 everywhere: uniform node selection."""

    def evaluate(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = len(features)
        return np.zeros(k), np.zeros(k)


@dataclass
class Step:
    """One tree-expansion step, with everything the update needs to recompute it."""

    features: np.ndarray  # (nodes, 24) before the step
    paths: np.ndarray  # (candidates, nodes) path-averaging matrix
    chosen: int  # index into the candidate rows
    logp: float
    reward: float
    value: float  # tree value before the step
    done: bool = False


@dataclass
class Episode:
    tree: SearchTree
    steps: list[Step] = field(default_factory=list)
    aborted: bool = False

    @property
    def total_reward(self) -> float:
        return sum(s.reward for s in self.steps)


def refresh(tree: SearchTree, policy: Policy) -> np.ndarray:
    feats = np.stack([n.features for n in tree.nodes])
    w, v = policy.evaluate(feats)
    tree.set_policy_outputs(w, v)
    return feats


def tree_step(tree: SearchTree, policy: Policy, rng: np.random.Generator, trace: IO[str] | None = None) -> Step | None:
    """Grow the tree by one node.  Returns None when nothing can be expanded.

    If the new child cannot be extracted at any level the step is still
    returned (reward 0, ``done``) and ``tree.failed`` is set.
    """
    if tree.finished:
        return None
    feats = refresh(tree, policy)
    value = max(n.value for n in tree.nodes)
    cands, p = tree.selection_probs()
    k = _sample_index(p, rng)
    nid = cands[k]
    m = choose_match(tree.nodes[nid], rng)
    paths = tree.path_matrix(cands)
    before = tree.tree_reward()
    try:
        child = tree.expand(nid, m)
    except ExtractionFailed as exc:
        log.warning("episode aborted: %s", exc)
        tree.failed = True
        return Step(feats, paths, k, math.log(p[k]), 0.0, value, done=True)
    reward = tree.tree_reward() - before
    step = Step(feats, paths, k, math.log(p[k]), reward, value, done=tree.finished)
    if trace is not None:
        c = tree.nodes[child]
        rec = {
            "step": tree.steps, "node": child, "parent": nid, "rule": str(m),
            "cnot": c.cnot_count, "level": c.extraction.level_used, "reward": reward,
        }
        trace.write(json.dumps(rec) + "\n")
    return step


def run_episode(
    root: Circuit | ZXDiagram,
    policy: Policy,
    budget: int = 128,
    rng: np.random.Generator | None = None,
    trace: IO[str] | None = None,
    max_level: int = 5,
) -> Episode:
    """Grow one tree for ``budget`` steps (fewer if it runs out of matches or extraction fails)."""
    rng = np.random.default_rng(0) if rng is None else rng
    ep = Episode(SearchTree(root, budget, max_level))
    while (step := tree_step(ep.tree, policy, rng, trace)) is not None:
        ep.steps.append(step)
    ep.aborted = ep.tree.failed
    return ep


def search_with_restarts(
    root: Circuit,
    policy: Policy,
    budget: int = 128,
    restarts: int = 3,
    rng: np.random.Generator | None = None,
    trace: IO[str] | None = None,
    max_level: int = 5,
) -> TreeNode:
    """Best node over an episode plus ``restarts`` episodes re-rooted at the best circuit so far."""
    rng = np.random.default_rng(0) if rng is None else rng
    best: TreeNode | None = None
    start: Circuit | ZXDiagram = root
    for _ in range(restarts + 1):
        ep = run_episode(start, policy, budget, rng, trace, max_level)
        cand = ep.tree.best_node()
        if best is None or cand.cnot_count < best.cnot_count:
            best = cand
        start = best.circuit
    assert best is not None
    return best


def run_with_restarts(
    root: Circuit,
    policy: Policy,
    budget: int = 128,
    restarts: int = 3,
    rng: np.random.Generator | None = None,
    trace: IO[str] | None = None,
    max_level: int = 5,
) -> Circuit:
    return search_with_restarts(root, policy, budget, restarts, rng, trace, max_level).circuit
