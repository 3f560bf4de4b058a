"""Quantum circuit optimization by learned tree search over ZX-diagram rewrites."""

from zxrl.circuit import Circuit, Gate, parse_circuit, format_circuit
from zxrl.diagram import ZXDiagram, circuit_to_diagram
from zxrl.tensor import diagram_to_tensor, equal_up_to_scalar, circuit_to_unitary

__all__ = [
    "Circuit",
    "Gate",
    "ZXDiagram",
    "circuit_to_diagram",
    "circuit_to_unitary",
    "diagram_to_tensor",
    "equal_up_to_scalar",
    "format_circuit",
    "parse_circuit",
]

__version__ = "0.1.0"
