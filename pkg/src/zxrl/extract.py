"""Right-to-left frontier extraction of circuits from graph-like diagrams."""

from __future__ import annotations

import logging
from itertools import combinations
from dataclasses import dataclass, field
from fractions import Fraction

from zxrl.circuit import CNOT, CZ, H, RZ, SWAP, Circuit, Gate
from zxrl.diagram import ZXDiagram
from zxrl.graphlike import GraphLike, simplify_level, to_graph_like
from zxrl.swaps import merge_swaps

log = logging.getLogger(__name__)

LEVELS = (1, 2, 3, 4, 5)


class ExtractionStuck(RuntimeError):
    """No frontier vertex can advance: the diagram lacks the needed flow structure."""


class ExtractionFailed(RuntimeError):
    """Every simplification level failed."""


@dataclass
class ExtractionResult:
    circuit: Circuit
    level_used: int
    output_permutation: list[int] = field(default_factory=list)


def permutation_as_swaps(sigma: list[int]) -> list[tuple[int, int]]:
    """SWAPs that move the state of qubit j to qubit sigma[j], in application order."""
    n = len(sigma)
    at = list(range(n))  # at[p] = original qubit whose state sits at position p
    pos = list(range(n))
    swaps = []
    for j in range(n):
        q = sigma[j]
        p = pos[j]
        if p == q:
            continue
        swaps.append((min(p, q), max(p, q)))
        other = at[q]
        at[q], at[p] = j, other
        pos[j], pos[other] = q, p
    return swaps


def _gauss(rows: list[int], ncols: int) -> list[tuple[int, int]]:
    """Reduced row echelon form over F2, in place. Returns (src, tgt) for each row[tgt] ^= row[src]."""
    ops = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        bit = 1 << c
        piv = next((k for k in range(r, nrows) if rows[k] & bit), None)
        if piv is None:
            continue
        if piv != r:
            rows[r] ^= rows[piv]
            ops.append((piv, r))
        for k in range(nrows):
            if k != r and rows[k] & bit:
                rows[k] ^= rows[r]
                ops.append((r, k))
        r += 1
        if r == nrows:
            break
    return ops


MAX_COMBINATION_ROWS = 10


def _unit_combination(rows: list[int], prefer=None) -> list[tuple[int, int]] | None:
    """Fewest row additions that leave some row with a single 1, or None.

    Searches subsets of rows by size; XOR of a subset onto one member costs
    len(subset) - 1 CNOTs, which is usually far cheaper than full elimination.
    Among minimal subsets, ``prefer(row, column)`` picks the target row.
    """
    n = len(rows)
    if n > MAX_COMBINATION_ROWS:
        return None
    for size in range(2, n + 1):
        best = None
        for comb in combinations(range(n), size):
            acc = 0
            for k in comb:
                acc ^= rows[k]
            if acc and acc & (acc - 1) == 0:
                c = acc.bit_length() - 1
                for tgt in comb:
                    score = 0 if prefer is not None and prefer(tgt, c) else 1
                    if best is None or score < best[0]:
                        best = (score, comb, tgt)
                if best[0] == 0:
                    break
        if best is not None:
            _, comb, tgt = best
            return [(k, tgt) for k in comb if k != tgt]
    return None


def _normalize_boundaries(g: GraphLike) -> None:
    """Give every boundary its own spider; boundary-boundary wires stay bare."""
    owner: dict[int, int] = {}
    for b in g.outputs + g.inputs:
        (n,) = g.adj[b]
        if n in g.boundary:
            continue
        if n in owner:
            g.remove_edge(b, n)
            z1, z2 = g.add_spider(), g.add_spider()
            g.add_edge(b, z1)
            g.add_edge(z1, z2)
            g.add_edge(z2, n)
            owner[z1] = b
        else:
            owner[n] = b


def _input_rank(g: GraphLike, inputs: set[int], input_index: dict[int, int]) -> dict[int, tuple[int, int]]:
    """(distance, input index) of the nearest input for every spider, by BFS from the inputs."""
    rank: dict[int, tuple[int, int]] = {}
    layer = []
    for b in sorted(inputs, key=input_index.get):
        for w in g.adj[b]:
            if w not in g.boundary and w not in rank:
                rank[w] = (0, input_index[b])
                layer.append(w)
    d = 0
    while layer:
        d += 1
        nxt = []
        for v in layer:
            for w in sorted(g.adj[v]):
                if w not in g.boundary and w not in rank:
                    rank[w] = (d, rank[v][1])
                    nxt.append(w)
        layer = nxt
    return rank


def extract_circuit(g: GraphLike, fold_swaps: bool = True) -> Circuit:
    """Extract an equivalent circuit (up to global scalar); raises ExtractionStuck."""
    g = g.copy()
    n = len(g.outputs)
    if len(g.inputs) != n:
        raise ExtractionStuck("input and output counts differ")
    _normalize_boundaries(g)
    inputs = set(g.inputs)
    input_index = {b: j for j, b in enumerate(g.inputs)}
    rev: list[Gate] = []  # gates from the output side inwards
    sigma: dict[int, int] = {}  # input index -> qubit
    frontier: dict[int, int] = {}
    for q, o in enumerate(g.outputs):
        (v,) = g.adj[o]
        if v in inputs:
            sigma[input_index[v]] = q
        else:
            frontier[q] = v

    guard = 4 * (len(g.adj) + 8) ** 2
    while frontier:
        guard -= 1
        if guard < 0:
            raise ExtractionStuck("no progress")
        fset = {v: q for q, v in frontier.items()}
        for q, v in sorted(frontier.items()):
            if g.phase[v] != 0:
                rev.append(RZ(q, g.phase[v]))
                g.phase[v] = Fraction(0)
        for q, v in sorted(frontier.items()):
            for w in sorted(g.adj[v]):
                if w in fset and fset[w] > q:
                    rev.append(CZ(q, fset[w]))
                    g.remove_edge(v, w)
        outputs = set(g.outputs)
        finished = []
        for q, v in sorted(frontier.items()):
            ins = g.adj[v] & inputs
            if not ins:
                continue
            (b,) = ins
            others = g.adj[v] - outputs - inputs
            if others:
                g.remove_edge(v, b)
                z1, z2 = g.add_spider(), g.add_spider()
                g.add_edge(v, z1)
                g.add_edge(z1, z2)
                g.add_edge(z2, b)
            else:
                finished.append(q)
        for q in finished:
            v = frontier.pop(q)
            (b,) = g.adj[v] & inputs
            sigma[input_index[b]] = q
            g.remove_vertex(v)
            g.add_edge(g.outputs[q], b)
        if not frontier:
            break

        qs = sorted(frontier)
        neigh = set().union(*(g.adj[frontier[q]] for q in qs)) - outputs
        if neigh & inputs:
            raise ExtractionStuck("frontier touches an input")
        # spiders next to an input come first, in input order, so the final
        # elimination lines qubits up with their inputs and needs no SWAPs
        rank = _input_rank(g, inputs, input_index)
        neigh = sorted(neigh, key=lambda w: (rank.get(w, (len(g.adj), 0)), w))
        col = {w: i for i, w in enumerate(neigh)}
        rows = []
        for q in qs:
            r = 0
            for w in g.adj[frontier[q]]:
                if w in col:
                    r |= 1 << col[w]
            if r == 0:
                raise ExtractionStuck(f"frontier vertex on qubit {q} has no neighbours")
            rows.append(r)
        if not any(r & (r - 1) == 0 for r in rows):
            ops = _unit_combination(
                rows, lambda i, c: rank.get(neigh[c], (0, -1))[1] == qs[i]
            )
            if ops is None:
                ops = _gauss(rows, len(neigh))
            else:
                for src, tgt in ops:
                    rows[tgt] ^= rows[src]
            for src, tgt in ops:
                vs, vt = frontier[qs[src]], frontier[qs[tgt]]
                for w in neigh:
                    if w in g.adj[vs]:
                        g.toggle_edge(vt, w)
                rev.append(CNOT(qs[tgt], qs[src]))
            if not any(r & (r - 1) == 0 for r in rows):
                raise ExtractionStuck("no frontier vertex has a single neighbour")
        used = set()
        for i, q in enumerate(qs):
            r = rows[i]
            if r & (r - 1) or r in used:
                continue
            used.add(r)
            w = neigh[r.bit_length() - 1]
            v = frontier[q]
            o = g.outputs[q]
            g.remove_vertex(v)
            g.add_edge(o, w)
            rev.append(H(q))
            frontier[q] = w

    if sorted(sigma) != list(range(n)) or sorted(sigma.values()) != list(range(n)):
        raise ExtractionStuck("inputs not matched to outputs")
    c = Circuit(n)
    for a, b in permutation_as_swaps([sigma[j] for j in range(n)]):
        c.append(SWAP(a, b))
    c.extend(reversed(rev))
    return merge_swaps(c) if fold_swaps else c


def extract_with_levels(d: ZXDiagram, max_level: int = 5) -> ExtractionResult:
    """Try simplification levels 1..max_level; return the first that extracts."""
    g = to_graph_like(d)
    prev = None
    errors = []
    for level in LEVELS:
        if level > max_level:
            break
        gl = simplify_level(g, level)
        snap = gl.structure()
        if snap == prev:
            errors.append(f"level {level}: same as previous level")
            continue
        prev = snap
        try:
            c = extract_circuit(gl)
        except ExtractionStuck as exc:
            errors.append(f"level {level}: {exc}")
            log.debug("extraction level %d failed: %s", level, exc)
            continue
        log.debug("extracted at level %d with %d two-qubit gates", level, c.two_qubit_count())
        return ExtractionResult(c, level, list(range(c.width)))
    raise ExtractionFailed("; ".join(errors))
