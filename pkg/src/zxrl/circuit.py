"""Circuits over {CNOT, CZ, H, RZ, RX, SWAP} and their line-oriented text format.

Phases are exact rationals in units of pi, kept in ``[0, 2)``.

Text format, one statement per line::

    qubits 3
    cnot 0 1        # control target
    cz 1 2
    h 0
    rz 2 1/4        # phase 1/4 means pi/4
    rx 0 3/2
    swap 0 2

Blank lines and ``#`` comments are ignored.  ``qubits N`` must come first.
Qubit 0 is the least significant bit of every matrix index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

TWO_QUBIT = ("cnot", "cz", "swap")
ONE_QUBIT = ("h", "rz", "rx")
GATE_NAMES = TWO_QUBIT + ONE_QUBIT


class CircuitError(ValueError):
    """Invalid gate, circuit or circuit text."""


def phase(value) -> Fraction:
    """Normalize a phase (in units of pi) into ``[0, 2)``."""
    p = Fraction(value)
    return p - 2 * (p.numerator // (2 * p.denominator))


def format_phase(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def is_clifford_phase(p: Fraction) -> bool:
    return p.denominator <= 2


def is_t_phase(p: Fraction) -> bool:
    return p.denominator == 4


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    phase: Fraction | None = None

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise CircuitError(f"unknown gate {self.name!r}")
        arity = 2 if self.name in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.name} takes {arity} qubit(s), got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.name} {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"{self.name} needs distinct qubits, got {self.qubits}")
        if self.name in ("rz", "rx"):
            if self.phase is None:
                raise CircuitError(f"{self.name} needs a phase")
            object.__setattr__(self, "phase", phase(self.phase))
        elif self.phase is not None:
            raise CircuitError(f"{self.name} takes no phase")

    @property
    def is_two_qubit(self) -> bool:
        return self.name in TWO_QUBIT

    def relabel(self, mapping: Sequence[int] | dict[int, int]) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.phase)

    def __str__(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.phase is not None:
            return f"{self.name} {args} {format_phase(self.phase)}"
        return f"{self.name} {args}"


def CNOT(control: int, target: int) -> Gate:
    return Gate("cnot", (control, target))


def CZ(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


def H(q: int) -> Gate:
    return Gate("h", (q,))


def RZ(q: int, p) -> Gate:
    return Gate("rz", (q,), Fraction(p))


def RX(q: int, p) -> Gate:
    return Gate("rx", (q,), Fraction(p))


def SWAP(a: int, b: int) -> Gate:
    return Gate("swap", (a, b))


@dataclass
class Circuit:
    width: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 0:
            raise CircuitError("negative width")
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if max(g.qubits) >= self.width:
            raise CircuitError(f"gate '{g}' exceeds width {self.width}")

    def append(self, g: Gate) -> None:
        self._check(g)
        self.gates.append(g)

    def extend(self, gates: Iterable[Gate]) -> None:
        for g in gates:
            self.append(g)

    def copy(self) -> "Circuit":
        return Circuit(self.width, list(self.gates))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def two_qubit_count(self) -> int:
        return sum(3 if g.name == "swap" else 1 for g in self.gates if g.is_two_qubit)

    def is_pure_cnot(self) -> bool:
        return all(g.name == "cnot" for g in self.gates)

    def __str__(self) -> str:
        return format_circuit(self)


def format_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.width}"]
    lines.extend(str(g) for g in c.gates)
    return "\n".join(lines) + "\n"


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitError(f"line {lineno}: expected integer, got {tok!r}") from None


def _parse_phase(tok: str, lineno: int) -> Fraction:
    num, sep, den = tok.partition("/")
    try:
        value = Fraction(int(num), int(den)) if sep else Fraction(int(num))
    except (ValueError, ZeroDivisionError):
        raise CircuitError(f"line {lineno}: bad phase {tok!r}") from None
    return phase(value)


def parse_circuit(text: str) -> Circuit:
    """Parse the text format; errors carry the offending line number."""
    circuit: Circuit | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0].lower()
        if circuit is None:
            if head != "qubits" or len(tokens) != 2:
                raise CircuitError(f"line {lineno}: expected 'qubits N' header")
            circuit = Circuit(_parse_int(tokens[1], lineno))
            continue
        if head == "qubits":
            raise CircuitError(f"line {lineno}: duplicate 'qubits' header")
        if head not in GATE_NAMES:
            raise CircuitError(f"line {lineno}: unknown gate {tokens[0]!r}")
        want = (2 if head in TWO_QUBIT else 1) + (1 if head in ("rz", "rx") else 0)
        if len(tokens) - 1 != want:
            raise CircuitError(f"line {lineno}: {head} expects {want} argument(s)")
        try:
            if head in ("rz", "rx"):
                g = Gate(head, (_parse_int(tokens[1], lineno),), _parse_phase(tokens[2], lineno))
            else:
                g = Gate(head, tuple(_parse_int(t, lineno) for t in tokens[1:]))
            circuit.append(g)
        except CircuitError as exc:
            if str(exc).startswith("line "):
                raise
            raise CircuitError(f"line {lineno}: {exc}") from None
    if circuit is None:
        raise CircuitError("line 1: missing 'qubits N' header")
    return circuit


def read_circuit(path) -> Circuit:
    with open(path) as fh:
        return parse_circuit(fh.read())


def write_circuit(c: Circuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_circuit(c))


@dataclass(frozen=True)
class CircuitStats:
    gate_count: int
    t_count: int
    clifford_count: int
    two_qubit_count: int
    h_count: int
    depth: int
    depth_cz: int


def circuit_stats(c: Circuit) -> CircuitStats:
    t = cliff = h = 0
    level = [0] * c.width
    level_cz = [0] * c.width
    for g in c.gates:
        if g.name in ("rz", "rx"):
            if is_t_phase(g.phase):
                t += 1
            if is_clifford_phase(g.phase):
                cliff += 1
        else:
            cliff += 1
        if g.name == "h":
            h += 1
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
        if g.is_two_qubit:
            d = max(level_cz[q] for q in g.qubits) + 1
            for q in g.qubits:
                level_cz[q] = d
    return CircuitStats(
        gate_count=len(c.gates),
        t_count=t,
        clifford_count=cliff,
        two_qubit_count=c.two_qubit_count(),
        h_count=h,
        depth=max(level, default=0),
        depth_cz=max(level_cz, default=0),
    )
