"""The agent's action set: seven ZX rewrite rules, each in both colours, plus cleanup.

Every rewrite returns a new diagram and then runs :func:`cleanup`, which
removes phase-free arity-2 spiders, cancels pairs of Simple wires between
opposite-colour spiders, and folds self-loops.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from zxrl.diagram import B, HADAMARD, SIMPLE, X, Z, ZXDiagram, _key

HALF = Fraction(1, 2)
ONE = Fraction(1)


class RuleKind(enum.IntEnum):
    FUSE = 0
    UNFUSE = 1
    PI_COMMUTE = 2
    COLOR_CHANGE = 3
    BIALGEBRA = 4
    EULER_EXPAND = 5
    EULER_CONTRACT = 6


class InvalidMatch(ValueError):
    """The match does not (or no longer) apply to the diagram."""


@dataclass(frozen=True, order=True)
class Match:
    rule: RuleKind
    anchor: tuple[int, ...]
    # EulerExpand only: colour of the two outer pi/2 spiders
    variant: str = ""

    def __str__(self) -> str:
        tag = f"/{self.variant}" if self.variant else ""
        return f"{self.rule.name.lower()}{tag}:{'-'.join(map(str, self.anchor))}"


def _opposite(k: str) -> str:
    return X if k == Z else Z


# -- matching -----------------------------------------------------------

def _fuse_ok(d: ZXDiagram, u: int, v: int) -> bool:
    ku, kv = d.kind.get(u), d.kind.get(v)
    return u != v and ku in (Z, X) and ku == kv and d.edge(u, v)[SIMPLE] >= 1


def _unfuse_ok(d: ZXDiagram, v: int) -> bool:
    return d.kind.get(v) in (Z, X) and d.degree(v) > 3


def _pi_commute_ok(d: ZXDiagram, p: int, q: int) -> bool:
    kp, kq = d.kind.get(p), d.kind.get(q)
    if kp not in (Z, X) or kq != _opposite(kp) or p == q:
        return False
    if d.phases[p] != ONE or d.degree(p) != 2 or p in d.loops or q in d.loops:
        return False
    # exactly one wire p-q, and it is Simple; the other wire of p leaves q
    return d.edge(p, q) == (1, 0)


def _bialgebra_ok(d: ZXDiagram, u: int, v: int) -> bool:
    ku, kv = d.kind.get(u), d.kind.get(v)
    if ku not in (Z, X) or kv != _opposite(ku):
        return False
    if d.phases[u] != 0 or d.phases[v] != 0 or u in d.loops or v in d.loops:
        return False
    return d.edge(u, v) == (1, 0)


def _euler_expand_ok(d: ZXDiagram, u: int, v: int) -> bool:
    return u != v and u in d.kind and v in d.kind and d.edge(u, v)[HADAMARD] >= 1


def _euler_contract_ends(d: ZXDiagram, m: int) -> tuple[int, int] | None:
    km = d.kind.get(m)
    if km not in (Z, X) or d.phases[m] != HALF or m in d.loops or d.degree(m) != 2:
        return None
    ends = d.wire_ends(m)
    (a, ta), (b, tb) = ends
    if a == b or ta != SIMPLE or tb != SIMPLE:
        return None
    outer = _opposite(km)
    for w in (a, b):
        if d.kind[w] != outer or d.phases[w] != HALF:
            return None
    return (a, b) if a < b else (b, a)


def enumerate_matches(d: ZXDiagram) -> list[Match]:
    """All applicable rewrites in canonical order (rule, anchor, variant)."""
    out: list[Match] = []
    spiders = d.spiders()
    for (u, v), (s, h) in d.edges.items():
        if s and _fuse_ok(d, u, v):
            out.append(Match(RuleKind.FUSE, (u, v)))
        if s and _bialgebra_ok(d, u, v):
            out.append(Match(RuleKind.BIALGEBRA, (u, v)))
        if h:
            out.append(Match(RuleKind.EULER_EXPAND, (u, v), Z))
            out.append(Match(RuleKind.EULER_EXPAND, (u, v), X))
    for v in spiders:
        out.append(Match(RuleKind.COLOR_CHANGE, (v,)))
        if _unfuse_ok(d, v):
            out.append(Match(RuleKind.UNFUSE, (v,)))
        if d.phases[v] == ONE:
            for q in sorted(d.adj[v]):
                if _pi_commute_ok(d, v, q):
                    out.append(Match(RuleKind.PI_COMMUTE, (v, q)))
        if _euler_contract_ends(d, v) is not None:
            out.append(Match(RuleKind.EULER_CONTRACT, (v,)))
    out.sort()
    return out


def is_applicable(d: ZXDiagram, m: Match) -> bool:
    a = m.anchor
    if any(v not in d.kind for v in a):
        return False
    r = m.rule
    if r == RuleKind.FUSE:
        return len(a) == 2 and a[0] < a[1] and _fuse_ok(d, *a)
    if r == RuleKind.UNFUSE:
        return len(a) == 1 and _unfuse_ok(d, a[0])
    if r == RuleKind.PI_COMMUTE:
        return len(a) == 2 and _pi_commute_ok(d, *a)
    if r == RuleKind.COLOR_CHANGE:
        return len(a) == 1 and d.kind[a[0]] in (Z, X)
    if r == RuleKind.BIALGEBRA:
        return len(a) == 2 and a[0] < a[1] and _bialgebra_ok(d, *a)
    if r == RuleKind.EULER_EXPAND:
        return len(a) == 2 and a[0] < a[1] and m.variant in (Z, X) and _euler_expand_ok(d, *a)
    if r == RuleKind.EULER_CONTRACT:
        return len(a) == 1 and _euler_contract_ends(d, a[0]) is not None
    return False


# -- rule bodies (in place on a private copy) ---------------------------

def _fuse(d: ZXDiagram, u: int, v: int) -> set[int]:
    s, h = d.edge(u, v)
    d.remove_edge(u, v, SIMPLE, s)
    if h:
        d.remove_edge(u, v, HADAMARD, h)
        d.add_edge(u, u, HADAMARD, h)
    for w, t in d.wire_ends(v):
        d.add_edge(u, w, t)
    lp = d.loops.get(v)
    if lp:
        d.add_edge(u, u, SIMPLE, lp[0])
        d.add_edge(u, u, HADAMARD, lp[1])
    d.add_phase(u, d.phases[v])
    touched = set(d.adj[v]) | {u}
    d.remove_vertex(v)
    return touched


def _unfuse(d: ZXDiagram, v: int) -> set[int]:
    kind, p = d.kind[v], d.phases[v]
    wires = d.wire_ends(v)
    d.remove_vertex(v)
    new = [d.add_vertex(kind, p if i == 0 else 0) for i in range(len(wires))]
    for i, a in enumerate(new):
        for b in new[i + 1:]:
            d.add_edge(a, b, SIMPLE)
    for a, (w, t) in zip(new, wires):
        d.add_edge(a, w, t)
    return set(new) | {w for w, _ in wires}


def _insert_on_wire(d: ZXDiagram, a: int, b: int, etype: int, kind: str, p) -> int:
    """Replace one a-b wire of type etype by a -S- new -etype- b."""
    d.remove_edge(a, b, etype)
    n = d.add_vertex(kind, p)
    d.add_edge(a, n, SIMPLE)
    d.add_edge(n, b, etype)
    return n


def _pi_commute(d: ZXDiagram, p: int, q: int) -> set[int]:
    kp = d.kind[p]
    (w, t), = [(w, t) for w, t in d.wire_ends(p) if w != q]
    d.remove_vertex(p)
    others = d.wire_ends(q)
    touched = {q, w}
    for x, tx in others:
        touched.add(_insert_on_wire(d, q, x, tx, kp, ONE))
        touched.add(x)
    d.add_edge(q, w, t)
    d.phases[q] = (-d.phases[q]) % 2
    return touched


def _color_change(d: ZXDiagram, v: int) -> set[int]:
    d.kind[v] = _opposite(d.kind[v])
    for w in d.adj[v]:
        e = d.edges[_key(v, w)]
        e[0], e[1] = e[1], e[0]
    return {v} | set(d.adj[v])


def _bialgebra(d: ZXDiagram, u: int, v: int) -> set[int]:
    d.remove_edge(u, v, SIMPLE)
    wires_u, wires_v = d.wire_ends(u), d.wire_ends(v)
    ku, kv = d.kind[u], d.kind[v]
    d.remove_vertex(u)
    d.remove_vertex(v)
    # each external wire of u gets a spider of v's colour and vice versa
    new_u = [d.add_vertex(kv) for _ in wires_u]
    new_v = [d.add_vertex(ku) for _ in wires_v]
    for a, (w, t) in zip(new_u, wires_u):
        d.add_edge(a, w, t)
    for b, (w, t) in zip(new_v, wires_v):
        d.add_edge(b, w, t)
    for a in new_u:
        for b in new_v:
            d.add_edge(a, b, SIMPLE)
    return set(new_u) | set(new_v) | {w for w, _ in wires_u + wires_v}


def _euler_expand(d: ZXDiagram, u: int, v: int, outer: str) -> set[int]:
    d.remove_edge(u, v, HADAMARD)
    a = d.add_vertex(outer, HALF)
    m = d.add_vertex(_opposite(outer), HALF)
    b = d.add_vertex(outer, HALF)
    d.add_edge(u, a, SIMPLE)
    d.add_edge(a, m, SIMPLE)
    d.add_edge(m, b, SIMPLE)
    d.add_edge(b, v, SIMPLE)
    return {u, v, a, m, b}


def _euler_contract(d: ZXDiagram, m: int) -> set[int]:
    a, b = _euler_contract_ends(d, m)
    d.remove_vertex(m)
    d.add_phase(a, -HALF)
    d.add_phase(b, -HALF)
    d.add_edge(a, b, HADAMARD)
    return {a, b}


def apply_rewrite(d: ZXDiagram, m: Match, clean: bool = True) -> ZXDiagram:
    if not is_applicable(d, m):
        raise InvalidMatch(f"{m} does not apply")
    out = d.copy()
    a = m.anchor
    r = m.rule
    if r == RuleKind.FUSE:
        touched = _fuse(out, *a)
    elif r == RuleKind.UNFUSE:
        touched = _unfuse(out, a[0])
    elif r == RuleKind.PI_COMMUTE:
        touched = _pi_commute(out, *a)
    elif r == RuleKind.COLOR_CHANGE:
        touched = _color_change(out, a[0])
    elif r == RuleKind.BIALGEBRA:
        touched = _bialgebra(out, *a)
    elif r == RuleKind.EULER_EXPAND:
        touched = _euler_expand(out, a[0], a[1], m.variant)
    else:
        touched = _euler_contract(out, a[0])
    if clean:
        _cleanup_inplace(out, touched)
    return out


# -- cleanup ------------------------------------------------------------

def cleanup(d: ZXDiagram) -> ZXDiagram:
    out = d.copy()
    _cleanup_inplace(out, None)
    return out


def _cleanup_inplace(d: ZXDiagram, touched: Iterable[int] | None) -> None:
    work = set(d.kind) if touched is None else {v for v in touched if v in d.kind}
    while work:
        v = min(work)
        work.discard(v)
        if v not in d.kind or d.kind[v] == B:
            continue
        changed = _clean_vertex(d, v)
        if changed:
            work.update(w for w in changed if w in d.kind)


def _clean_vertex(d: ZXDiagram, v: int) -> set[int]:
    lp = d.loops.get(v)
    if lp:
        s, h = lp
        del d.loops[v]
        if h:
            d.add_phase(v, h)
        return {v} | set(d.adj[v])
    k = d.kind[v]
    opp = _opposite(k)
    for w in sorted(d.adj[v]):
        if d.kind[w] == opp:
            s = d.edges[_key(v, w)][SIMPLE]
            if s >= 2:
                d.remove_edge(v, w, SIMPLE, s - s % 2)
                return {v, w}
    if d.phases[v] == 0 and d.degree(v) == 2:
        (a, ta), (b, tb) = d.wire_ends(v)
        d.remove_vertex(v)
        d.add_edge(a, b, ta ^ tb)
        return {a, b}
    return set()
