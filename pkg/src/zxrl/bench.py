"""Datasets, the 4-qubit CNOT oracle, peephole partitioning and the benchmark table."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from zxrl.circuit import CNOT, H, RX, RZ, Circuit, Gate
from zxrl.diagram import circuit_to_diagram
from zxrl.extract import extract_circuit
from zxrl.graphlike import simplify_level, to_graph_like
from zxrl.swaps import remove_swaps


class BadRatios(ValueError):
    pass


class BlockMismatch(ValueError):
    pass


class NotPureCnot(ValueError):
    pass


class UnsupportedWidth(ValueError):
    pass


KINDS = ("cnot", "h", "rx", "rz")


@dataclass(frozen=True)
class GateRatios:
    cnot: float
    h: float
    rx: float
    rz: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise BadRatios(f"ratios must be finite and non-negative: {vals}")
        if abs(sum(vals) - 1.0) > 1e-12:
            raise BadRatios(f"ratios sum to {sum(vals)!r}, not 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cnot, self.h, self.rx, self.rz)

    @classmethod
    def parse(cls, text: str) -> "GateRatios":
        """``"0.6/0.2/0.1/0.1"`` in CNOT/H/RX/RZ order."""
        parts = text.split("/")
        if len(parts) != 4:
            raise BadRatios(f"expected four '/'-separated ratios, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise BadRatios(str(exc)) from None

    def __str__(self) -> str:
        return "/".join(f"{v:g}" for v in self.as_tuple())

    def counts(self, gates: int) -> dict[str, int]:
        """Rounded gate counts; the remainder goes to the largest ratio."""
        counts = {k: math.floor(r * gates + 0.5) for k, r in zip(KINDS, self.as_tuple())}
        largest = max(KINDS, key=lambda k: getattr(self, k))
        counts[largest] += gates - sum(counts.values())
        if counts[largest] < 0:
            raise BadRatios(f"cannot distribute {gates} gates over {self}")
        return counts


@dataclass
class DatasetSpec:
    name: str
    ratios: GateRatios
    width: int
    gates: int = 80
    count: int = 100
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratios"] = str(self.ratios)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        d = dict(d)
        base = DATASETS.get(d.get("name", ""))
        if base is not None:
            merged = base.to_dict()
            merged.update(d)
            d = merged
        r = d.get("ratios")
        if isinstance(r, str):
            d["ratios"] = GateRatios.parse(r)
        elif isinstance(r, (list, tuple)):
            d["ratios"] = GateRatios(*r)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown dataset fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "DatasetSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


DATASETS = {
    "i": DatasetSpec("i", GateRatios(0.6, 0.2, 0.1, 0.1), width=5),
    "ii": DatasetSpec("ii", GateRatios(1.0, 0.0, 0.0, 0.0), width=4),
    "iii": DatasetSpec("iii", GateRatios(0.25, 0.25, 0.25, 0.25), width=5),
}


def _gates(width: int, gates: int, ratios: GateRatios, rng: np.random.Generator) -> list[Gate]:
    counts = ratios.counts(gates)
    if counts["cnot"] and width < 2:
        raise BadRatios("CNOTs need at least two qubits")
    kinds = [k for k in KINDS for _ in range(counts[k])]
    order = rng.permutation(len(kinds))
    out = []
    for i in order:
        k = kinds[i]
        if k == "cnot":
            a, b = rng.choice(width, size=2, replace=False)
            out.append(CNOT(int(a), int(b)))
        elif k == "h":
            out.append(H(int(rng.integers(width))))
        else:
            q = int(rng.integers(width))
            p = Fraction(int(rng.integers(1, 8)), 4)
            out.append(RX(q, p) if k == "rx" else RZ(q, p))
    return out


def random_circuit(width: int, gates: int, ratios: GateRatios, seed: int) -> Circuit:
    return Circuit(width, _gates(width, gates, ratios, np.random.default_rng(seed)))


def circuit_seed(seed: int, index: int) -> int:
    """Per-circuit seed inside a dataset; keeps circuit i independent of the dataset size."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def dataset_circuits(spec: DatasetSpec) -> list[tuple[int, Circuit]]:
    out = []
    for i in range(spec.count):
        s = circuit_seed(spec.seed, i)
        out.append((s, random_circuit(spec.width, spec.gates, spec.ratios, s)))
    return out


def assemble_circuit(
    width: int = 50,
    total_gates: int = 2000,
    block_width: int = 5,
    block_gates: int = 50,
    ratios: GateRatios = DATASETS["i"].ratios,
    seed: int = 0,
) -> Circuit:
    """Random small blocks spliced onto random contiguous qubit windows."""
    if block_width > width:
        raise ValueError(f"block width {block_width} exceeds circuit width {width}")
    rng = np.random.default_rng(seed)
    c = Circuit(width)
    for _ in range(total_gates // block_gates):
        start = int(rng.integers(width - block_width + 1))
        block = _gates(block_width, block_gates, ratios, rng)
        c.extend(g.relabel({q: q + start for q in range(block_width)}) for g in block)
    return c


# -- peephole partitioning ---------------------------------------------------

@dataclass
class Block:
    qubits: list[int]
    gates: list[Gate] = field(default_factory=list)

    def local(self) -> Circuit:
        """The block as a circuit on qubits 0..len(qubits)-1."""
        index = {q: i for i, q in enumerate(self.qubits)}
        return Circuit(len(self.qubits), [g.relabel(index) for g in self.gates])


@dataclass
class Partition:
    width: int
    blocks: list[Block]

    def gates(self) -> list[Gate]:
        return [g for b in self.blocks for g in b.gates]


def partition_circuit(c: Circuit, k: int = 5) -> Partition:
    """Greedy order-preserving partition into blocks of at most ``k`` qubits.

    A gate may join any block created at or after the last block touching one
    of its qubits (it commutes past everything in between); the newest such
    block with room wins.
    """
    if any(len(g.qubits) > k for g in c.gates):
        raise ValueError(f"block size {k} is smaller than a gate's arity")
    blocks: list[Block] = []
    qsets: list[set[int]] = []
    last: dict[int, int] = {}
    for g in c.gates:
        floor = max((last.get(q, -1) for q in g.qubits), default=-1)
        target = None
        for b in range(len(blocks) - 1, max(floor, 0) - 1, -1):
            if len(qsets[b] | set(g.qubits)) <= k:
                target = b
                break
        if target is None:
            blocks.append(Block([]))
            qsets.append(set())
            target = len(blocks) - 1
        blocks[target].gates.append(g)
        qsets[target].update(g.qubits)
        for q in g.qubits:
            last[q] = target
    for b, qs in zip(blocks, qsets):
        b.qubits = sorted(qs)
    return Partition(c.width, blocks)


def reassemble(p: Partition, optimized: list[Circuit] | None = None) -> Circuit:
    """Splice per-block circuits (on local qubit labels) back into one circuit."""
    if optimized is None:
        optimized = [b.local() for b in p.blocks]
    if len(optimized) != len(p.blocks):
        raise BlockMismatch(f"{len(optimized)} circuits for {len(p.blocks)} blocks")
    out = Circuit(p.width)
    for i, (b, oc) in enumerate(zip(p.blocks, optimized)):
        if oc.width != len(b.qubits):
            raise BlockMismatch(f"block {i}: circuit width {oc.width}, block has {len(b.qubits)} qubits")
        out.extend(g.relabel(b.qubits) for g in oc.gates)
    return out


# -- CNOT-distance oracle ----------------------------------------------------

ORACLE_WIDTH = 4
UNREACHABLE = 255


def _encode(rows) -> int:
    return sum(int(r) << (ORACLE_WIDTH * i) for i, r in enumerate(rows))


def _decode(x: int) -> list[int]:
    mask = (1 << ORACLE_WIDTH) - 1
    return [(x >> (ORACLE_WIDTH * i)) & mask for i in range(ORACLE_WIDTH)]


@lru_cache(maxsize=1)
def cnot_distance_table() -> np.ndarray:
    """Minimal CNOT count of every 4x4 matrix over GF(2); ``UNREACHABLE`` if singular.

    Row q of a matrix is the parity (over inputs) carried by output qubit q;
    CNOT(c, t) adds row c into row t.  Breadth-first search from the identity.
    """
    n = ORACLE_WIDTH
    dist = np.full(1 << (n * n), UNREACHABLE, dtype=np.uint8)
    start = _encode([1 << i for i in range(n)])
    dist[start] = 0
    queue = deque([start])
    pairs = [(c, t) for c in range(n) for t in range(n) if c != t]
    while queue:
        x = queue.popleft()
        rows = _decode(x)
        d = dist[x] + 1
        for c, t in pairs:
            r = list(rows)
            r[t] ^= r[c]
            y = _encode(r)
            if dist[y] == UNREACHABLE:
                dist[y] = d
                queue.append(y)
    return dist


def linear_map(c: Circuit) -> list[int]:
    """GF(2) matrix rows of a CNOT/SWAP circuit."""
    rows = [1 << i for i in range(c.width)]
    for g in c.gates:
        if g.name == "cnot":
            a, b = g.qubits
            rows[b] ^= rows[a]
        elif g.name == "swap":
            a, b = g.qubits
            rows[a], rows[b] = rows[b], rows[a]
        else:
            raise NotPureCnot(f"gate {g} is not a CNOT")
    return rows


def brute_force_cnot_count(c: Circuit, up_to_permutation: bool = False) -> int:
    """Optimal CNOT count for the circuit's linear map (width 4 only).

    With ``up_to_permutation`` the output qubits may be relabelled for free,
    which is the right comparison for SWAP-removed circuits.
    """
    if c.width != ORACLE_WIDTH:
        raise UnsupportedWidth(f"oracle covers width {ORACLE_WIDTH}, got {c.width}")
    rows = linear_map(c)
    table = cnot_distance_table()
    if not up_to_permutation:
        return int(table[_encode(rows)])
    return min(int(table[_encode([rows[i] for i in p])]) for p in itertools.permutations(range(ORACLE_WIDTH)))


# -- benchmark ---------------------------------------------------------------

@dataclass
class MethodResult:
    circuit: Circuit | None = None
    level: int | None = None
    count: int | None = None  # set directly by oracle-style methods
    count_noswap: int | None = None


Method = Callable[[Circuit, int], MethodResult]


def level_method(level: int) -> Method:
    def run(c: Circuit, seed: int) -> MethodResult:
        g = simplify_level(to_graph_like(circuit_to_diagram(c)), level)
        return MethodResult(extract_circuit(g), level)

    return run


def brute_force_method(c: Circuit, seed: int) -> MethodResult:
    return MethodResult(
        count=brute_force_cnot_count(c),
        count_noswap=brute_force_cnot_count(c, up_to_permutation=True),
    )


def agent_method(policy, budget: int = 128, restarts: int = 3, max_level: int = 5) -> Method:
    from zxrl.search import search_with_restarts

    def run(c: Circuit, seed: int) -> MethodResult:
        node = search_with_restarts(c, policy, budget, restarts, np.random.default_rng(seed), max_level=max_level)
        return MethodResult(node.circuit, node.extraction.level_used)

    return run


def standard_methods() -> dict[str, Method]:
    out: dict[str, Method] = {f"level-{k}": level_method(k) for k in range(1, 6)}
    out["brute-force"] = brute_force_method
    return out


def _fmt_stats(vals: list[float]) -> tuple[str, str]:
    if not vals:
        return "", ""
    a = np.asarray(vals, dtype=float)
    return f"{a.mean():.4f}", f"{a.std():.4f}"


def run_benchmark(
    spec: DatasetSpec,
    methods: dict[str, Method],
    timing: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> str:
    """CSV text: one row per circuit, then ``mean`` and ``std`` rows.

    Method errors become ``ERR:<type>`` cells.  ``wall_ms`` stays empty unless
    ``timing`` is set, so the table is reproducible byte for byte.
    """
    names = list(methods)
    header = ["circuit_id", "seed", "width", "gates", "cnot_in"]
    for m in names:
        header += [f"{m}:cnot_out", f"{m}:cnot_out_noswap", f"{m}:level_used", f"{m}:wall_ms"]
    rows = []
    cols: dict[str, list[float]] = {h: [] for h in header[4:]}
    circuits = dataset_circuits(spec)
    for cid, (seed, c) in enumerate(circuits):
        row = [str(cid), str(seed), str(c.width), str(len(c)), str(c.two_qubit_count())]
        cols["cnot_in"].append(c.two_qubit_count())
        for m in names:
            t0 = time.perf_counter()
            try:
                r = methods[m](c, seed)
            except Exception as exc:  # noqa: BLE001 - recorded in the table
                row += [f"ERR:{type(exc).__name__}", "", "", ""]
                continue
            ms = (time.perf_counter() - t0) * 1000.0
            if r.circuit is not None:
                out = r.circuit.two_qubit_count()
                noswap = remove_swaps(r.circuit)[0].two_qubit_count()
            else:
                out, noswap = r.count, r.count_noswap
            cells = [out, noswap, r.level]
            for h, v in zip(header[len(row):len(row) + 3], cells):
                if v is not None:
                    cols[h].append(v)
            row += ["" if v is None else str(v) for v in cells]
            row.append(f"{ms:.1f}" if timing else "")
        rows.append(row)
        if progress is not None:
            progress(cid + 1, len(circuits))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    mean_row, std_row = ["mean", "", "", "", ""], ["std", "", "", "", ""]
    mean_row[4], std_row[4] = _fmt_stats(cols["cnot_in"])
    for h in header[5:]:
        mu, sd = _fmt_stats(cols.get(h, []))
        mean_row.append(mu)
        std_row.append(sd)
    w.writerow(mean_row)
    w.writerow(std_row)
    return buf.getvalue()


def read_benchmark_means(text: str) -> dict[str, float]:
    """Column means from a benchmark CSV (empty cells skipped)."""
    rdr = list(csv.reader(io.StringIO(text)))
    header, body = rdr[0], rdr[1:]
    mean_row = next(r for r in body if r[0] == "mean")
    return {h: float(v) for h, v in zip(header, mean_row) if v and h not in ("circuit_id",)}
