"""SWAP bookkeeping: relabel SWAPs away, or fold them into neighbouring two-qubit gates."""

from __future__ import annotations

from zxrl.circuit import CNOT, H, SWAP, Circuit, Gate


def remove_swaps(c: Circuit) -> tuple[Circuit, list[int]]:
    """Drop every SWAP by relabelling the gates after it.

    Returns ``(circuit, perm)``: the state that ``c`` leaves on qubit ``q`` is
    left on qubit ``perm[q]`` by the returned circuit, so
    ``permutation_matrix(inverse(perm)) @ U(out) == U(c)``.
    """
    phys = list(range(c.width))
    out = Circuit(c.width)
    for g in c.gates:
        if g.name == "swap":
            a, b = g.qubits
            phys[a], phys[b] = phys[b], phys[a]
        else:
            out.append(g.relabel(phys))
    return out, phys


def transpositions(perm: list[int]) -> list[tuple[int, int]]:
    """SWAPs (in time order) that move the state on qubit ``perm[q]`` back to ``q``."""
    at = list(perm)  # at[q]: wire currently holding the state that belongs on q
    where = {w: q for q, w in enumerate(at)}
    out = []
    for q in range(len(at)):
        w = at[q]
        if w == q:
            continue
        # the state now on q belongs to the qubit r with at[r] == q
        r = where[q]
        out.append((min(q, w), max(q, w)))
        at[q], at[r] = q, w
        where[q], where[w] = q, r
    return out


def _merged(g: Gate, a: int, b: int) -> list[Gate] | None:
    """Replace ``g`` followed by SWAP(a, b) with two CNOTs when ``g`` acts on {a, b}."""
    if not g.is_two_qubit or set(g.qubits) != {a, b}:
        return None
    if g.name == "cnot":
        c, t = g.qubits
        return [CNOT(t, c), CNOT(c, t)]
    if g.name == "cz":
        return [H(b), CNOT(b, a), CNOT(a, b), H(a)]
    return []  # swap followed by swap


def merge_swaps(c: Circuit) -> Circuit:
    """Equivalent circuit in which SWAPs are folded into earlier two-qubit gates where possible.

    A SWAP next to a CNOT or CZ on the same pair costs two CNOTs instead of four.
    """
    body, phys = remove_swaps(c)
    gates = list(body.gates)
    tail: list[Gate] = []
    for a, b in transpositions(phys):
        swap = {a: b, b: a}
        mapping = [swap.get(q, q) for q in range(c.width)]
        for i in range(len(gates) - 1, -1, -1):
            rep = _merged(gates[i], a, b)
            if rep is not None:
                gates[i:i + 1] = rep
                tail = [g.relabel(mapping) for g in tail]
                break
            gates[i] = gates[i].relabel(mapping)
        else:
            # nothing to merge with: undo the relabelling and keep the SWAP
            gates = [g.relabel(mapping) for g in gates]
            tail.append(SWAP(a, b))
    out = Circuit(c.width)
    out.extend(gates)
    out.extend(tail)
    return out
