from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from zxrl.circuit import CNOT, CZ, H, RX, RZ, SWAP, Circuit

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_gates(rng: np.random.Generator, width: int, count: int, kinds=("cnot", "h", "rx", "rz", "cz")) -> Circuit:
    c = Circuit(width)
    for _ in range(count):
        k = kinds[int(rng.integers(len(kinds)))]
        if k in ("cnot", "cz", "swap") and width >= 2:
            a, b = (int(x) for x in rng.choice(width, 2, replace=False))
            c.append({"cnot": CNOT, "cz": CZ, "swap": SWAP}[k](a, b))
        elif k == "h":
            c.append(H(int(rng.integers(width))))
        elif k in ("rx", "rz"):
            p = Fraction(int(rng.integers(1, 8)), 4)
            q = int(rng.integers(width))
            c.append(RX(q, p) if k == "rx" else RZ(q, p))
    return c


@st.composite
def circuits(draw, max_width: int = 3, max_gates: int = 10, kinds=("cnot", "h", "rx", "rz", "cz", "swap")):
    width = draw(st.integers(1, max_width))
    n = draw(st.integers(0, max_gates))
    c = Circuit(width)
    for _ in range(n):
        k = draw(st.sampled_from(kinds))
        if k in ("cnot", "cz", "swap"):
            if width < 2:
                continue
            a = draw(st.integers(0, width - 1))
            b = draw(st.integers(0, width - 2))
            b = b + 1 if b >= a else b
            c.append({"cnot": CNOT, "cz": CZ, "swap": SWAP}[k](a, b))
        elif k == "h":
            c.append(H(draw(st.integers(0, width - 1))))
        else:
            q = draw(st.integers(0, width - 1))
            p = Fraction(draw(st.integers(0, 7)), 4)
            c.append(RX(q, p) if k == "rx" else RZ(q, p))
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def synthetic_trajectory(rng: np.random.Generator, steps: int = 3):
    """Short trajectory of growing trees with random features, for gradient checks."""
    from zxrl.policy import N_FEATURES, Sample

    out = []
    for t in range(steps):
        nodes = t + 2
        feats = rng.uniform(0.0, 40.0, size=(nodes, N_FEATURES))
        parent = [None] + [int(rng.integers(i)) for i in range(1, nodes)]
        paths = np.zeros((nodes, nodes))
        for n in range(nodes):
            ids, cur = [], n
            while cur is not None:
                ids.append(cur)
                cur = parent[cur]
            paths[n, ids] = 1.0 / len(ids)
        out.append(Sample(feats, paths, int(rng.integers(nodes)), float(-np.log(nodes) + rng.normal(0, 0.1)),
                          float(rng.normal()), float(rng.normal())))
    return out


def finite_difference_error(params, batch, hp, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients over every trainable entry."""
    from zxrl.policy import TRAINABLE, ppo_loss

    _, grads = ppo_loss(params, batch, hp)
    worst = 0.0
    for k in TRAINABLE:
        flat = params[k].reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = ppo_loss(params, batch, hp)[0].loss
            flat[i] = old - eps
            down = ppo_loss(params, batch, hp)[0].loss
            flat[i] = old
            num = (up - down) / (2 * eps)
            ana = grads[k].reshape(-1)[i]
            err = abs(num - ana) / max(abs(num), abs(ana), 1e-6)
            worst = max(worst, err)
    return worst


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
