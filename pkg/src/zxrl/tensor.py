"""Dense linear-algebra semantics: ground truth for every rewrite and extraction.

Matrix indices are little-endian: qubit 0 (or the first boundary in stored
order) is the least significant bit.  Rows index outputs, columns inputs.
"""

from __future__ import annotations

import numpy as np

from zxrl.circuit import Circuit
from zxrl.diagram import B, HADAMARD, X, Z, ZXDiagram

MAX_BOUNDARIES = 16
MAX_UNITARY_WIDTH = 8
_MAX_RANK = 26

HMAT = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class TooLarge(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def spider_tensor(kind: str, p, legs: int) -> np.ndarray:
    """Z: |0..0><0..0| + e^{i pi p}|1..1><1..1|; X: same in the |+>,|-> basis (unnormalized)."""
    w = np.exp(1j * np.pi * float(p))
    if legs == 0:
        return np.array(1 + w, dtype=complex)
    if kind == Z:
        t = np.zeros(2**legs, dtype=complex)
        t[0] = 1
        t[-1] += w
    else:
        parity = np.zeros(2**legs, dtype=np.int64)
        idx = np.arange(2**legs)
        for bit in range(legs):
            parity ^= (idx >> bit) & 1
        t = 1 + w * (1 - 2 * parity)
        t = t.astype(complex)
    return t.reshape((2,) * legs)


def _trace_repeated(t: np.ndarray, labels: list) -> tuple[np.ndarray, list]:
    seen: dict = {}
    for i, lab in enumerate(labels):
        if lab in seen:
            j = seen.pop(lab)
            t = np.trace(t, axis1=j, axis2=i)
            rest = [l for k, l in enumerate(labels) if k not in (i, j)]
            return _trace_repeated(t, rest)
        seen[lab] = i
    return t, labels


def _normalize(t: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(t)) if t.size else 0.0
    return t / m if m > 0 else t


def diagram_to_tensor(d: ZXDiagram) -> np.ndarray:
    """Contract the diagram to a 2^#outputs x 2^#inputs matrix, up to a scalar."""
    n_in, n_out = len(d.inputs), len(d.outputs)
    if n_in + n_out > MAX_BOUNDARIES:
        raise TooLarge(f"{n_in + n_out} boundaries exceed {MAX_BOUNDARIES}")

    boundary_label: dict[int, object] = {}
    legs: dict[int, list] = {v: [] for v in d.kind if d.kind[v] != B}
    extra: list[tuple[np.ndarray, list]] = []
    had_on: list[tuple[int, int]] = []
    label = 0
    for (u, v), (s, h) in sorted(d.edges.items()):
        for etype, count in ((0, s), (1, h)):
            for _ in range(count):
                label += 1
                if d.kind[u] == B and d.kind[v] == B:
                    la, lb = ("b", u), ("b", v)
                    boundary_label[u], boundary_label[v] = la, lb
                    m = HMAT if etype == HADAMARD else np.eye(2, dtype=complex)
                    extra.append((m.copy(), [la, lb]))
                    continue
                for w in (u, v):
                    if d.kind[w] == B:
                        boundary_label[w] = label
                    else:
                        legs[w].append(label)
                if etype == HADAMARD:
                    had_on.append((u if d.kind[u] != B else v, label))
    for v, (s, h) in sorted(d.loops.items()):
        for etype, count in ((0, s), (1, h)):
            for _ in range(count):
                label += 1
                legs[v].extend([label, label])
                if etype == HADAMARD:
                    had_on.append((v, label))

    tensors: list[tuple[np.ndarray, list]] = []
    had_by_vertex: dict[int, list] = {}
    for v, lab in had_on:
        had_by_vertex.setdefault(v, []).append(lab)
    for v in sorted(legs):
        labs = legs[v]
        if len(labs) > _MAX_RANK:
            raise TooLarge(f"spider {v} has {len(labs)} legs")
        t = spider_tensor(d.kind[v], d.phases[v], len(labs))
        for lab in had_by_vertex.get(v, []):
            ax = labs.index(lab)
            t = np.moveaxis(np.tensordot(t, HMAT, axes=([ax], [0])), -1, ax)
        t, labs = _trace_repeated(t, list(labs))
        tensors.append((t, labs))
    tensors.extend(extra)

    result = _contract_all(tensors)
    t, labs = result
    open_order = [boundary_label[b] for b in d.outputs] + [boundary_label[b] for b in d.inputs]
    if sorted(map(str, labs)) != sorted(map(str, open_order)):
        raise ValueError("open legs do not match boundaries")
    perm = [labs.index(l) for l in open_order]
    t = np.transpose(t, perm) if perm else t
    # little-endian: reverse each group so the first boundary is least significant
    axes = list(range(n_out))[::-1] + [n_out + i for i in range(n_in)][::-1]
    t = np.transpose(t, axes) if axes else t
    return np.asarray(t).reshape(2**n_out, 2**n_in)


def _contract_all(tensors: list[tuple[np.ndarray, list]]) -> tuple[np.ndarray, list]:
    tensors = [(t, list(l)) for t, l in tensors]
    if not tensors:
        return np.array(1.0 + 0j), []
    while len(tensors) > 1:
        best = None
        label_sets = [set(l) for _, l in tensors]
        for i in range(len(tensors)):
            for j in range(i + 1, len(tensors)):
                shared = label_sets[i] & label_sets[j]
                if not shared:
                    continue
                rank = len(label_sets[i]) + len(label_sets[j]) - 2 * len(shared)
                key = (rank, i, j)
                if best is None or key < best[0]:
                    best = (key, shared)
        if best is None:
            # disconnected pieces: outer product of the two smallest
            order = sorted(range(len(tensors)), key=lambda k: tensors[k][0].ndim)
            i, j = sorted(order[:2])
            shared = set()
        else:
            (_, i, j), shared = best
        (ta, la), (tb, lb) = tensors[i], tensors[j]
        shared_l = sorted(shared, key=la.index)
        ax_a = [la.index(l) for l in shared_l]
        ax_b = [lb.index(l) for l in shared_l]
        if len(la) + len(lb) - 2 * len(shared_l) > _MAX_RANK:
            raise TooLarge("intermediate tensor too large")
        t = np.tensordot(ta, tb, axes=(ax_a, ax_b))
        labels = [l for l in la if l not in shared] + [l for l in lb if l not in shared]
        tensors = [x for k, x in enumerate(tensors) if k not in (i, j)]
        tensors.append((_normalize(t), labels))
    return tensors[0]


def equal_up_to_scalar(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff a == lam * b for some nonzero lam, with lam read off b's largest entry."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    amax = np.max(np.abs(a)) if a.size else 0.0
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape) if b.size else None
    if idx is None or abs(b[idx]) == 0:
        return amax == 0
    lam = a[idx] / b[idx]
    if lam == 0:
        return False
    return bool(np.max(np.abs(a - lam * b)) <= tol * amax)


# -- circuits ---------------------------------------------------------

def _gate_matrix(name: str, p) -> np.ndarray:
    if name == "h":
        return HMAT
    if name == "rz":
        return np.diag([1, np.exp(1j * np.pi * float(p))])
    if name == "rx":
        return HMAT @ np.diag([1, np.exp(1j * np.pi * float(p))]) @ HMAT
    # two-qubit matrices act on (first operand, second operand), first operand = low bit
    if name == "cnot":
        m = np.eye(4, dtype=complex)
        m[[1, 3]] = m[[3, 1]]
        return m
    if name == "cz":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if name == "swap":
        m = np.eye(4, dtype=complex)
        m[[1, 2]] = m[[2, 1]]
        return m
    raise ValueError(name)


def apply_gate(state: np.ndarray, width: int, gate) -> np.ndarray:
    """Apply ``gate`` to the row space of ``state`` (shape 2^width x k)."""
    k = state.shape[1]
    t = state.reshape((2,) * width + (k,))
    # axis of qubit q in big-endian reshape
    axes = [width - 1 - q for q in gate.qubits]
    m = _gate_matrix(gate.name, gate.phase)
    if len(axes) == 1:
        t = np.tensordot(m, t, axes=([1], [axes[0]]))
        t = np.moveaxis(t, 0, axes[0])
    else:
        # index of 4x4 matrix: first operand is the low bit
        m4 = m.reshape(2, 2, 2, 2)  # (hi_out, lo_out, hi_in, lo_in)
        t = np.tensordot(m4, t, axes=([2, 3], [axes[1], axes[0]]))
        t = np.moveaxis(t, [0, 1], [axes[1], axes[0]])
    return t.reshape(2**width, k)


def circuit_to_unitary(c: Circuit) -> np.ndarray:
    if c.width > MAX_UNITARY_WIDTH:
        raise TooLarge(f"width {c.width} exceeds {MAX_UNITARY_WIDTH}")
    u = np.eye(2**c.width, dtype=complex)
    for g in c.gates:
        u = apply_gate(u, c.width, g)
    return u


def permutation_matrix(perm, width: int) -> np.ndarray:
    """Unitary sending the basis state on qubit ``q`` to qubit ``perm[q]``."""
    dim = 2**width
    m = np.zeros((dim, dim))
    for x in range(dim):
        y = 0
        for q in range(width):
            if (x >> q) & 1:
                y |= 1 << perm[q]
        m[y, x] = 1
    return m
