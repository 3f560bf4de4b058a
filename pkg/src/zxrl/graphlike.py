"""Graph-like diagrams: Z spiders only, Hadamard edges between spiders, Simple boundary wires.

Kept as a simple graph (adjacency sets) rather than the multigraph used by
the rewrite engine; :meth:`GraphLike.to_diagram` converts back for the
tensor oracle.
"""

from __future__ import annotations

from fractions import Fraction

from zxrl.circuit import phase
from zxrl.diagram import B, HADAMARD, SIMPLE, X, Z, ZXDiagram, _key

HALF = Fraction(1, 2)
THREE_HALVES = Fraction(3, 2)
ONE = Fraction(1)
# wire count a vertex must have to be rewritten at each level; None = any
LEVEL_DEGREE = {1: 2, 2: 3, 3: 4, 4: None, 5: None}


class NotApplicable(ValueError):
    pass


class GraphLike:
    __slots__ = ("phase", "adj", "inputs", "outputs", "boundary", "_next")

    def __init__(self):
        self.phase: dict[int, Fraction] = {}
        self.adj: dict[int, set[int]] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self.boundary: set[int] = set()
        self._next = 0

    def add_spider(self, p=0) -> int:
        v = self._next
        self._next += 1
        self.phase[v] = phase(p)
        self.adj[v] = set()
        return v

    def add_boundary(self, vid: int | None = None) -> int:
        if vid is None:
            vid = self._next
        self._next = max(self._next, vid + 1)
        self.boundary.add(vid)
        self.adj[vid] = set()
        return vid

    def toggle_edge(self, u: int, v: int) -> None:
        if v in self.adj[u]:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
        else:
            self.adj[u].add(v)
            self.adj[v].add(u)

    def add_edge(self, u: int, v: int) -> None:
        self.adj[u].add(v)
        self.adj[v].add(u)

    def remove_edge(self, u: int, v: int) -> None:
        self.adj[u].discard(v)
        self.adj[v].discard(u)

    def remove_vertex(self, v: int) -> None:
        for w in self.adj.pop(v):
            self.adj[w].discard(v)
        self.phase.pop(v, None)
        self.boundary.discard(v)

    def copy(self) -> "GraphLike":
        g = GraphLike()
        g.phase = dict(self.phase)
        g.adj = {k: set(s) for k, s in self.adj.items()}
        g.inputs = list(self.inputs)
        g.outputs = list(self.outputs)
        g.boundary = set(self.boundary)
        g._next = self._next
        return g

    def spiders(self) -> list[int]:
        return sorted(self.phase)

    def is_interior(self, v: int) -> bool:
        return v in self.phase and not (self.adj[v] & self.boundary)

    def num_edges(self) -> int:
        return sum(len(s) for s in self.adj.values()) // 2

    def structure(self):
        return (
            tuple(sorted(self.phase.items())),
            tuple(sorted((u, v) for u in self.adj for v in self.adj[u] if u < v)),
            tuple(self.inputs),
            tuple(self.outputs),
        )

    def to_diagram(self) -> ZXDiagram:
        d = ZXDiagram()
        for v in sorted(self.adj):
            if v in self.boundary:
                d.add_vertex(B, vid=v)
            else:
                d.add_vertex(Z, self.phase[v], vid=v)
        for u in self.adj:
            for v in self.adj[u]:
                if u < v:
                    simple = u in self.boundary or v in self.boundary
                    d.add_edge(u, v, SIMPLE if simple else HADAMARD)
        d.inputs = list(self.inputs)
        d.outputs = list(self.outputs)
        return d

    def validate(self) -> None:
        for b in self.boundary:
            if len(self.adj[b]) != 1:
                raise ValueError(f"boundary {b} has degree {len(self.adj[b])}")
        for v, nb in self.adj.items():
            if v in nb:
                raise ValueError(f"self-loop at {v}")

    def __repr__(self) -> str:
        return f"GraphLike(spiders={len(self.phase)}, edges={self.num_edges()})"


# -- conversion -----------------------------------------------------------

def to_graph_like(d: ZXDiagram) -> GraphLike:
    """Colour-change X to Z, fuse Simple-connected Z spiders, cancel parallel
    Hadamard edges mod 2, fold Hadamard self-loops into a pi phase, and put
    an identity spider on any boundary wire that would carry a Hadamard."""
    # X spiders become Z; every wire end at an X spider toggles its type
    def etype_after(u: int, v: int, t: int) -> int:
        flips = (d.kind[u] == X) + (d.kind[v] == X)
        return t ^ (flips & 1)

    parent: dict[int, int] = {v: v for v in d.kind if d.kind[v] != B}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    edges: list[tuple[int, int, int, int]] = []  # u, v, type, count
    for (u, v), (s, h) in d.edges.items():
        for t, c in ((SIMPLE, s), (HADAMARD, h)):
            if c:
                edges.append((u, v, etype_after(u, v, t), c))
    for u, v, t, _ in edges:
        if t == SIMPLE and d.kind[u] != B and d.kind[v] != B:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)

    g = GraphLike()
    g._next = d._next
    groups: dict[int, Fraction] = {}
    for v in parent:
        r = find(v)
        groups[r] = groups.get(r, Fraction(0)) + d.phases[v]
    for r, p in groups.items():
        g.phase[r] = phase(p)
        g.adj[r] = set()
    for v in d.kind:
        if d.kind[v] == B:
            g.add_boundary(v)

    had_count: dict[tuple[int, int], int] = {}
    boundary_wires: list[tuple[int, int, int]] = []
    for u, v, t, c in edges:
        bu, bv = d.kind[u] == B, d.kind[v] == B
        if bu or bv:
            for _ in range(c):
                boundary_wires.append((u if bu else find(u), v if bv else find(v), t))
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            if t == HADAMARD:
                g.phase[ru] = phase(g.phase[ru] + c)
            continue
        if t == HADAMARD:
            k = _key(ru, rv)
            had_count[k] = had_count.get(k, 0) + c
    for v, (s, h) in d.loops.items():
        if d.kind[v] != B and h:
            r = find(v)
            g.phase[r] = phase(g.phase[r] + h)
    for (u, v), c in had_count.items():
        if c % 2:
            g.add_edge(u, v)

    for a, b, t in boundary_wires:
        ba, bb = a in g.boundary, b in g.boundary
        if ba and bb:
            if t == SIMPLE:
                g.add_edge(a, b)
            else:
                z1, z2 = g.add_spider(), g.add_spider()
                g.add_edge(a, z1)
                g.add_edge(z1, z2)
                g.add_edge(z2, b)
            continue
        bnd, sp = (a, b) if ba else (b, a)
        if t == SIMPLE:
            g.add_edge(bnd, sp)
        else:
            z = g.add_spider()
            g.add_edge(bnd, z)
            g.add_edge(z, sp)
    g.inputs = list(d.inputs)
    g.outputs = list(d.outputs)
    for v in [v for v in g.phase if not g.adj[v]]:
        g.remove_vertex(v)  # disconnected scalar
    return g


# -- local rules ------------------------------------------------------------

def _local_complement(g: GraphLike, v: int) -> None:
    nb = sorted(g.adj[v])
    p = g.phase[v]
    for i, a in enumerate(nb):
        g.phase[a] = phase(g.phase[a] - p)
        for b in nb[i + 1:]:
            g.toggle_edge(a, b)
    g.remove_vertex(v)


def _pivot(g: GraphLike, u: int, v: int) -> None:
    nu = g.adj[u] - {v}
    nv = g.adj[v] - {u}
    only_u = sorted(nu - nv)
    only_v = sorted(nv - nu)
    common = sorted(nu & nv)
    pu, pv = g.phase[u], g.phase[v]
    for a in only_u:
        for b in only_v:
            g.toggle_edge(a, b)
        for c in common:
            g.toggle_edge(a, c)
    for b in only_v:
        for c in common:
            g.toggle_edge(b, c)
    for a in only_u:
        g.phase[a] = phase(g.phase[a] + pv)
    for b in only_v:
        g.phase[b] = phase(g.phase[b] + pu)
    for c in common:
        g.phase[c] = phase(g.phase[c] + pu + pv + 1)
    g.remove_vertex(u)
    g.remove_vertex(v)


def local_complement(g: GraphLike, v: int) -> GraphLike:
    if not g.is_interior(v) or g.phase[v] not in (HALF, THREE_HALVES):
        raise NotApplicable(f"local complementation needs an interior +-pi/2 spider, got {v}")
    out = g.copy()
    _local_complement(out, v)
    return out


def _is_pauli(p: Fraction) -> bool:
    return p == 0 or p == ONE


def pivot(g: GraphLike, u: int, v: int) -> GraphLike:
    for w in (u, v):
        if not g.is_interior(w) or not _is_pauli(g.phase[w]):
            raise NotApplicable(f"pivot needs interior 0/pi spiders, got {w}")
    if v not in g.adj[u]:
        raise NotApplicable(f"{u} and {v} are not adjacent")
    out = g.copy()
    _pivot(out, u, v)
    return out


def _boundary_pivot_prepare(g: GraphLike, v: int) -> None:
    """Detach v from its boundary: b - v becomes b - w1 -H- w2 -H- v."""
    for b in sorted(g.adj[v] & g.boundary):
        g.remove_edge(b, v)
        w1, w2 = g.add_spider(), g.add_spider()
        g.add_edge(b, w1)
        g.add_edge(w1, w2)
        g.add_edge(w2, v)


def _is_shim(g: GraphLike, s: int) -> bool:
    """Phase-free arity-2 spider on a boundary wire: stands in for a Hadamard boundary wire."""
    return s in g.phase and g.phase[s] == 0 and len(g.adj[s]) == 2 and bool(g.adj[s] & g.boundary)


def _strictly_interior(g: GraphLike, v: int) -> bool:
    """Interior and not sitting right behind a Hadamard boundary wire."""
    return g.is_interior(v) and not any(_is_shim(g, w) for w in g.adj[v])


def _rewrite_at(g: GraphLike, v: int, partner_ok) -> set[int] | None:
    """Local complementation at v, or a pivot with the first partner accepted by
    ``partner_ok``; returns the touched vertices, or None if nothing applies."""
    p = g.phase[v]
    if p == HALF or p == THREE_HALVES:
        touched = set(g.adj[v]) | {v}
        _local_complement(g, v)
        return touched
    if _is_pauli(p):
        for u in sorted(g.adj[v]):
            if g.is_interior(u) and _is_pauli(g.phase[u]) and partner_ok(u):
                touched = g.adj[u] | g.adj[v]
                _pivot(g, v, u)
                return touched
    return None


def _single_pass(g: GraphLike, degree: int) -> int:
    """One sweep over the vertices that have exactly ``degree`` wires.

    Rewrites are chosen in vertex order; a vertex touched by an earlier
    rewrite in the same sweep is skipped.
    """
    count = 0
    touched: set[int] = set()
    for v in sorted(g.phase):
        if v in touched or v not in g.phase or not g.is_interior(v) or len(g.adj[v]) != degree:
            continue
        hit = _rewrite_at(g, v, lambda u: u not in touched and len(g.adj[u]) == degree)
        if hit is not None:
            touched |= hit
            count += 1
    return count


def _split_boundary_phase(g: GraphLike, v: int) -> None:
    """b - v(a) becomes b - x(a) -H- y(0) -H- v(0), leaving v interior and phase-free."""
    (b,) = g.adj[v] & g.boundary
    g.remove_edge(b, v)
    x, y = g.add_spider(g.phase[v]), g.add_spider()
    g.phase[v] = Fraction(0)
    g.add_edge(b, x)
    g.add_edge(x, y)
    g.add_edge(y, v)


def _boundary_pivot(g: GraphLike, any_phase: bool = False) -> bool:
    """Pivot a strictly interior Pauli spider with a neighbour on one boundary wire.

    The neighbour must be Pauli unless ``any_phase``, in which case its phase
    is first moved onto a fresh boundary spider.
    """
    for u in sorted(g.phase):
        if not _is_pauli(g.phase[u]) or not _strictly_interior(g, u):
            continue
        for v in sorted(g.adj[u]):
            if g.is_interior(v) or len(g.adj[v] & g.boundary) != 1:
                continue
            if _is_pauli(g.phase[v]):
                _boundary_pivot_prepare(g, v)
            elif any_phase:
                _split_boundary_phase(g, v)
            else:
                continue
            _pivot(g, u, v)
            return True
    return False


def _fixpoint(g: GraphLike, any_phase: bool = False) -> int:
    """Local complementation and pivoting at any degree until nothing applies.

    Boundary pivots do not always shrink the graph, so the loop is capped.
    """
    count = 0
    limit = 8 * (len(g.phase) + 1)
    while count < limit:
        progressed = False
        for v in sorted(g.phase):
            if v in g.phase and g.is_interior(v) and _rewrite_at(g, v, lambda u: True) is not None:
                count += 1
                progressed = True
        if not progressed:
            if not _boundary_pivot(g, any_phase):
                break
            count += 1
    return count


def simplify_level(g: GraphLike, level: int) -> GraphLike:
    """Pre-processing before extraction.

    Levels 1-3 make one sweep of local complementation and pivoting over
    interior vertices with exactly 2, 3 or 4 wires.  Level 4 runs both rules to
    fixpoint at any degree, allowing one pivot end to sit on a boundary wire.
    Level 5 also pivots with boundary spiders of arbitrary phase.
    """
    if level not in LEVEL_DEGREE:
        raise ValueError(f"level must be 1..5, got {level}")
    out = g.copy()
    degree = LEVEL_DEGREE[level]
    if degree is not None:
        _single_pass(out, degree)
    else:
        _fixpoint(out, any_phase=level == 5)
    return out
