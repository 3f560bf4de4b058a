from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import circuits, random_gates
from zxrl.bench import DATASETS, random_circuit
from zxrl.circuit import CNOT, CZ, H, RZ, SWAP, Circuit, circuit_stats
from zxrl.diagram import circuit_to_diagram
from zxrl.extract import ExtractionFailed, extract_circuit, extract_with_levels, permutation_as_swaps
from zxrl.graphlike import GraphLike, NotApplicable, local_complement, pivot, simplify_level, to_graph_like
from zxrl.swaps import merge_swaps, remove_swaps, transpositions
from zxrl.tensor import circuit_to_unitary, diagram_to_tensor, equal_up_to_scalar, permutation_matrix


def gl_tensor(g: GraphLike) -> np.ndarray:
    return diagram_to_tensor(g.to_diagram())


def star(center_phase, leaf_phases=(0, 0, 0), hub_boundary=False):
    """Interior centre spider joined to spiders that each sit on one boundary wire."""
    g = GraphLike()
    v = g.add_spider(center_phase)
    leaves = []
    for i, p in enumerate(leaf_phases):
        w = g.add_spider(p)
        g.add_edge(v, w)
        b = g.add_boundary()
        g.add_edge(b, w)
        leaves.append(w)
        (g.inputs if i % 2 == 0 else g.outputs).append(b)
    if hub_boundary:
        b = g.add_boundary()
        g.add_edge(b, v)
        g.outputs.append(b)
    return g, v, leaves


def test_local_complement_example():
    g, v, leaves = star(Fraction(1, 2), (Fraction(1, 4), 0, 0))
    out = local_complement(g, v)
    assert v not in out.phase
    assert out.phase[leaves[0]] == Fraction(7, 4)
    assert out.phase[leaves[1]] == Fraction(3, 2)
    for a in leaves:
        for b in leaves:
            if a != b:
                assert b in out.adj[a]
    assert equal_up_to_scalar(gl_tensor(out), gl_tensor(g))


def test_local_complement_preconditions():
    g, v, _ = star(Fraction(1, 4))
    with pytest.raises(NotApplicable):
        local_complement(g, v)
    g, v, _ = star(Fraction(1, 2), hub_boundary=True)
    with pytest.raises(NotApplicable):
        local_complement(g, v)


def test_pivot_example():
    g = GraphLike()
    u, v = g.add_spider(0), g.add_spider(1)
    g.add_edge(u, v)
    outer = []
    for centre in (u, v, u, v):
        w = g.add_spider(Fraction(1, 4))
        g.add_edge(centre, w)
        b = g.add_boundary()
        g.add_edge(b, w)
        (g.inputs if len(outer) % 2 == 0 else g.outputs).append(b)
        outer.append(w)
    out = pivot(g, u, v)
    assert u not in out.phase and v not in out.phase
    assert equal_up_to_scalar(gl_tensor(out), gl_tensor(g))
    with pytest.raises(NotApplicable):
        pivot(g, u, outer[0])


def test_level_validation():
    g = to_graph_like(circuit_to_diagram(Circuit(2, [CNOT(0, 1)])))
    with pytest.raises(ValueError):
        simplify_level(g, 6)


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_levels_preserve_tensor(level):
    rng = np.random.default_rng(level)
    for _ in range(8):
        c = random_gates(rng, 3, 14)
        g = to_graph_like(circuit_to_diagram(c))
        out = simplify_level(g, level)
        out.validate()
        assert equal_up_to_scalar(gl_tensor(out), circuit_to_unitary(c), 1e-9)


def test_single_cnot_extracts_to_one_cnot():
    r = extract_with_levels(circuit_to_diagram(Circuit(2, [CNOT(0, 1)])))
    assert circuit_stats(r.circuit).two_qubit_count == 1
    assert equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(Circuit(2, [CNOT(0, 1)])))


def test_identity_extracts_to_empty():
    r = extract_with_levels(circuit_to_diagram(Circuit(3)))
    assert r.circuit.gates == []


def test_swap_round_trip():
    c = Circuit(2, [SWAP(0, 1)])
    r = extract_with_levels(circuit_to_diagram(c))
    assert equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(c))
    assert circuit_stats(r.circuit).two_qubit_count <= 3


def test_max_level_zero_fails():
    with pytest.raises(ExtractionFailed):
        extract_with_levels(circuit_to_diagram(Circuit(2, [CNOT(0, 1)])), max_level=0)


def test_extract_requires_boundaries_matched():
    g = to_graph_like(circuit_to_diagram(Circuit(2, [CZ(0, 1), H(0)])))
    c = extract_circuit(simplify_level(g, 4))
    assert equal_up_to_scalar(circuit_to_unitary(c), circuit_to_unitary(Circuit(2, [CZ(0, 1), H(0)])))


@given(circuits(max_width=4, max_gates=16), st.integers(1, 5))
def test_extraction_round_trip(c, max_level):
    r = extract_with_levels(circuit_to_diagram(c), max_level)
    assert 1 <= r.level_used <= max_level
    assert equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(c), 1e-9)


def test_dataset_round_trip_sample():
    ds = DATASETS["i"]
    for seed in range(10):
        c = random_circuit(ds.width, ds.gates, ds.ratios, seed)
        r = extract_with_levels(circuit_to_diagram(c))
        assert equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(c), 1e-9)


def test_extraction_deterministic():
    c = random_circuit(5, 80, DATASETS["iii"].ratios, 3)
    a = extract_with_levels(circuit_to_diagram(c))
    b = extract_with_levels(circuit_to_diagram(c))
    assert a.circuit.gates == b.circuit.gates and a.level_used == b.level_used


@given(st.permutations(list(range(5))))
def test_permutation_as_swaps(sigma):
    c = Circuit(5, [SWAP(a, b) for a, b in permutation_as_swaps(sigma)])
    assert np.allclose(circuit_to_unitary(c), permutation_matrix(sigma, 5))


@given(circuits(max_width=4, max_gates=14, kinds=("cnot", "cz", "swap", "h", "rz")))
def test_remove_swaps_tracks_permutation(c):
    body, perm = remove_swaps(c)
    assert all(g.name != "swap" for g in body.gates)
    inv = [0] * len(perm)
    for q, p in enumerate(perm):
        inv[p] = q
    assert equal_up_to_scalar(permutation_matrix(inv, c.width) @ circuit_to_unitary(body), circuit_to_unitary(c))


@given(st.permutations(list(range(4))))
def test_transpositions_restore(perm):
    loc = list(perm)  # loc[q]: wire holding the state that belongs on q
    for a, b in transpositions(perm):
        loc = [b if w == a else a if w == b else w for w in loc]
    assert loc == list(range(4))


@given(circuits(max_width=4, max_gates=14, kinds=("cnot", "cz", "swap", "h", "rz")))
def test_merge_swaps_sound_and_not_worse(c):
    out = merge_swaps(c)
    assert equal_up_to_scalar(circuit_to_unitary(out), circuit_to_unitary(c), 1e-9)
    assert circuit_stats(out).two_qubit_count <= circuit_stats(c).two_qubit_count


def test_merge_swap_into_cnot():
    c = Circuit(2, [CNOT(0, 1), SWAP(0, 1)])
    out = merge_swaps(c)
    assert circuit_stats(out).two_qubit_count == 2
    assert equal_up_to_scalar(circuit_to_unitary(out), circuit_to_unitary(c))


def test_phase_gadget_circuit():
    c = Circuit(3, [CNOT(0, 2), CNOT(1, 2), RZ(2, Fraction(1, 4)), CNOT(1, 2), CNOT(0, 2)])
    r = extract_with_levels(circuit_to_diagram(c))
    assert equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(c))
