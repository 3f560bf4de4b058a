"""Open multigraph ZX diagrams with exact phases.

Vertices are Z or X spiders or boundaries.  Between any two vertices there may
be several Simple and several Hadamard edges; self-loops are counted
separately.  Global scalars are never tracked.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator

from zxrl.circuit import Circuit, phase

Z, X, B = "Z", "X", "B"
SIMPLE, HADAMARD = 0, 1


class DiagramError(ValueError):
    pass


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class ZXDiagram:
    """Mutable while being built; rewrite functions always work on copies."""

    __slots__ = ("kind", "phases", "edges", "loops", "adj", "inputs", "outputs", "_next")

    def __init__(self):
        self.kind: dict[int, str] = {}
        self.phases: dict[int, Fraction] = {}
        # (u, v) with u < v -> [simple count, hadamard count]
        self.edges: dict[tuple[int, int], list[int]] = {}
        self.loops: dict[int, list[int]] = {}
        self.adj: dict[int, set[int]] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self._next = 0

    # -- construction -------------------------------------------------
    def add_vertex(self, kind: str, p=0, vid: int | None = None) -> int:
        if kind not in (Z, X, B):
            raise DiagramError(f"bad vertex kind {kind!r}")
        if vid is None:
            vid = self._next
        elif vid in self.kind:
            raise DiagramError(f"vertex {vid} exists")
        self._next = max(self._next, vid + 1)
        self.kind[vid] = kind
        self.phases[vid] = phase(p) if kind != B else Fraction(0)
        self.adj[vid] = set()
        return vid

    def add_edge(self, u: int, v: int, etype: int = SIMPLE, count: int = 1) -> None:
        if count <= 0:
            return
        if u == v:
            self.loops.setdefault(u, [0, 0])[etype] += count
            return
        k = _key(u, v)
        e = self.edges.get(k)
        if e is None:
            e = self.edges[k] = [0, 0]
            self.adj[u].add(v)
            self.adj[v].add(u)
        e[etype] += count

    def remove_edge(self, u: int, v: int, etype: int, count: int = 1) -> None:
        if u == v:
            lp = self.loops[u]
            lp[etype] -= count
            if lp[etype] < 0:
                raise DiagramError("negative loop count")
            if lp == [0, 0]:
                del self.loops[u]
            return
        k = _key(u, v)
        e = self.edges[k]
        e[etype] -= count
        if e[etype] < 0:
            raise DiagramError("negative edge count")
        if e == [0, 0]:
            del self.edges[k]
            self.adj[u].discard(v)
            self.adj[v].discard(u)

    def remove_vertex(self, v: int) -> None:
        for w in list(self.adj[v]):
            del self.edges[_key(v, w)]
            self.adj[w].discard(v)
        self.loops.pop(v, None)
        del self.adj[v], self.kind[v], self.phases[v]

    def add_phase(self, v: int, p) -> None:
        self.phases[v] = phase(self.phases[v] + p)

    def copy(self) -> "ZXDiagram":
        d = ZXDiagram()
        d.kind = dict(self.kind)
        d.phases = dict(self.phases)
        d.edges = {k: list(e) for k, e in self.edges.items()}
        d.loops = {k: list(e) for k, e in self.loops.items()}
        d.adj = {k: set(s) for k, s in self.adj.items()}
        d.inputs = list(self.inputs)
        d.outputs = list(self.outputs)
        d._next = self._next
        return d

    # -- queries ------------------------------------------------------
    def vertices(self) -> Iterator[int]:
        return iter(self.kind)

    def spiders(self) -> list[int]:
        return sorted(v for v, k in self.kind.items() if k != B)

    def is_spider(self, v: int) -> bool:
        return self.kind[v] != B

    def edge(self, u: int, v: int) -> tuple[int, int]:
        if u == v:
            return tuple(self.loops.get(u, (0, 0)))
        return tuple(self.edges.get(_key(u, v), (0, 0)))

    def degree(self, v: int) -> int:
        d = sum(sum(self.edges[_key(v, w)]) for w in self.adj[v])
        lp = self.loops.get(v)
        return d + (2 * (lp[0] + lp[1]) if lp else 0)

    def wire_ends(self, v: int) -> list[tuple[int, int]]:
        """Incident wires of ``v`` as (neighbor, edge type), parallel edges repeated, loops excluded."""
        out = []
        for w in sorted(self.adj[v]):
            s, h = self.edges[_key(v, w)]
            out.extend([(w, SIMPLE)] * s)
            out.extend([(w, HADAMARD)] * h)
        return out

    def num_edges(self) -> int:
        return sum(s + h for s, h in self.edges.values()) + sum(s + h for s, h in self.loops.values())

    def num_spiders(self) -> int:
        return sum(1 for k in self.kind.values() if k != B)

    def validate(self) -> None:
        for v in self.inputs + self.outputs:
            if self.kind.get(v) != B:
                raise DiagramError(f"boundary {v} is not a boundary vertex")
        for v, k in self.kind.items():
            if k == B and (self.degree(v) != 1 or v in self.loops):
                raise DiagramError(f"boundary {v} has degree {self.degree(v)}")
        for (u, v), e in self.edges.items():
            if u not in self.kind or v not in self.kind or min(e) < 0 or e == [0, 0]:
                raise DiagramError(f"bad edge {(u, v)}: {e}")

    def structure(self):
        """Hashable exact snapshot, used for determinism and fixpoint checks."""
        return (
            tuple(sorted((v, self.kind[v], self.phases[v]) for v in self.kind)),
            tuple(sorted((k, tuple(e)) for k, e in self.edges.items())),
            tuple(sorted((k, tuple(e)) for k, e in self.loops.items())),
            tuple(self.inputs),
            tuple(self.outputs),
        )

    def color_flipped(self) -> "ZXDiagram":
        d = self.copy()
        for v, k in d.kind.items():
            if k != B:
                d.kind[v] = X if k == Z else Z
        return d

    def relabeled(self, mapping: dict[int, int]) -> "ZXDiagram":
        d = ZXDiagram()
        for v in sorted(self.kind, key=lambda v: mapping[v]):
            d.add_vertex(self.kind[v], self.phases[v], vid=mapping[v])
        for (u, v), (s, h) in self.edges.items():
            d.add_edge(mapping[u], mapping[v], SIMPLE, s)
            d.add_edge(mapping[u], mapping[v], HADAMARD, h)
        for u, (s, h) in self.loops.items():
            d.add_edge(mapping[u], mapping[u], SIMPLE, s)
            d.add_edge(mapping[u], mapping[u], HADAMARD, h)
        d.inputs = [mapping[v] for v in self.inputs]
        d.outputs = [mapping[v] for v in self.outputs]
        return d

    def __repr__(self) -> str:
        return (
            f"ZXDiagram(spiders={self.num_spiders()}, edges={self.num_edges()}, "
            f"inputs={len(self.inputs)}, outputs={len(self.outputs)})"
        )


def circuit_to_diagram(c: Circuit) -> ZXDiagram:
    """One Z/X spider per gate leg; H gates become Hadamard edges."""
    d = ZXDiagram()
    d.inputs = [d.add_vertex(B) for _ in range(c.width)]
    last = list(d.inputs)
    pending = [SIMPLE] * c.width  # edge type of the open wire end on each qubit

    def attach(q: int, kind: str, p=0) -> int:
        v = d.add_vertex(kind, p)
        d.add_edge(last[q], v, pending[q])
        last[q] = v
        pending[q] = SIMPLE
        return v

    for g in c.gates:
        if g.name == "h":
            q = g.qubits[0]
            pending[q] ^= 1
        elif g.name == "rz":
            attach(g.qubits[0], Z, g.phase)
        elif g.name == "rx":
            attach(g.qubits[0], X, g.phase)
        elif g.name == "cnot":
            a = attach(g.qubits[0], Z)
            b = attach(g.qubits[1], X)
            d.add_edge(a, b, SIMPLE)
        elif g.name == "cz":
            a = attach(g.qubits[0], Z)
            b = attach(g.qubits[1], Z)
            d.add_edge(a, b, HADAMARD)
        elif g.name == "swap":
            for ctl, tgt in ((0, 1), (1, 0), (0, 1)):
                a = attach(g.qubits[ctl], Z)
                b = attach(g.qubits[tgt], X)
                d.add_edge(a, b, SIMPLE)
    d.outputs = []
    for q in range(c.width):
        o = d.add_vertex(B)
        d.add_edge(last[q], o, pending[q])
        d.outputs.append(o)
    return d
