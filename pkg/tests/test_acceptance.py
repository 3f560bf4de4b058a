"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (also repeated in the
terminal summary) and then asserts, so a failure is reported rather than hidden.
"""

import json
import math
from collections import Counter
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import finite_difference_error, random_gates, report_criterion, synthetic_trajectory
from zxrl.bench import (
    DATASETS,
    agent_method,
    assemble_circuit,
    brute_force_cnot_count,
    cnot_distance_table,
    dataset_circuits,
    level_method,
    partition_circuit,
)
from zxrl.circuit import SWAP, Circuit, circuit_stats
from zxrl.cli import main, optimize_circuit
from zxrl.diagram import circuit_to_diagram
from zxrl.extract import extract_with_levels
from zxrl.policy import Hyperparams, MLPPolicy, init_params
from zxrl.rewrite import RuleKind, apply_rewrite, enumerate_matches
from zxrl.search import SearchTree, UniformPolicy, tree_step
from zxrl.swaps import remove_swaps
from zxrl.tensor import circuit_to_unitary, diagram_to_tensor, equal_up_to_scalar
from zxrl.train import TrainConfig, reward_window_means, train

pytestmark = pytest.mark.acceptance

TRAIN_SEED = 0
TRAIN_STEPS = 50_000
HELD_OUT_SEED = 12345  # disjoint from the training stream, which draws fresh 63-bit seeds


def twoq(c: Circuit) -> int:
    return circuit_stats(c).two_qubit_count


def test_c01_rewrite_soundness():
    rng = np.random.default_rng(101)
    applied = 0
    failures = 0
    per_rule: Counter = Counter()
    while applied < 10_000:
        c = random_gates(rng, 2, int(rng.integers(1, 9)))
        d = circuit_to_diagram(c)
        for _ in range(int(rng.integers(0, 12))):
            ms = enumerate_matches(d)
            if not ms:
                break
            d = apply_rewrite(d, ms[int(rng.integers(len(ms)))])
        if d.num_spiders() > 30:
            continue
        t = diagram_to_tensor(d)
        for m in enumerate_matches(d):
            if not equal_up_to_scalar(diagram_to_tensor(apply_rewrite(d, m)), t, 1e-9):
                failures += 1
            applied += 1
            per_rule[m.rule] += 1
    ok = failures == 0 and all(per_rule[r] > 0 for r in RuleKind)
    rules = ", ".join(f"{r.name.lower()} {n}" for r, n in sorted(per_rule.items()))
    report_criterion(1, ok, f"{applied} applications, {failures} failures, per rule {rules}")
    assert ok


def test_c02_extraction_round_trip():
    spec = replace(DATASETS["i"], count=200, seed=2)
    bad = 0
    for _, c in dataset_circuits(spec):
        r = extract_with_levels(circuit_to_diagram(c))
        if not equal_up_to_scalar(circuit_to_unitary(r.circuit), circuit_to_unitary(c), 1e-9):
            bad += 1
    report_criterion(2, bad == 0, f"200 dataset-(i) circuits, {bad} mismatches")
    assert bad == 0


def level_means(spec) -> dict[int, float]:
    circs = dataset_circuits(spec)
    return {k: float(np.mean([twoq(level_method(k)(c, s).circuit) for s, c in circs])) for k in range(1, 6)}


def test_c03_level_baselines_pure_cnot():
    means = level_means(DATASETS["ii"])
    ok = 4.5 <= means[4] <= 9.0 and all(45 <= means[k] <= 65 for k in (1, 2, 3))
    report_criterion(3, ok, "dataset (ii) level means " + ", ".join(f"L{k}={v:.2f}" for k, v in means.items()))
    assert ok


def test_c04_level1_reduces_dataset_i():
    circs = dataset_circuits(DATASETS["i"])
    cin = float(np.mean([twoq(c) for _, c in circs]))
    cout = float(np.mean([twoq(level_method(1)(c, s).circuit) for s, c in circs]))
    ok = cout < cin
    report_criterion(4, ok, f"dataset (i) level 1: {cout:.2f} out vs {cin:.2f} in")
    assert ok


def test_c05_brute_force_oracle():
    table = cnot_distance_table()
    reachable = int((table != 255).sum())
    ok = reachable == 20160
    ok &= brute_force_cnot_count(Circuit(4)) == 0
    ok &= brute_force_cnot_count(Circuit(4, [SWAP(0, 1)])) == 3
    violations = 0
    oracle = []
    for s, c in dataset_circuits(DATASETS["ii"]):
        bound = brute_force_cnot_count(c, up_to_permutation=True)
        oracle.append(bound)
        for k in range(1, 6):
            if twoq(remove_swaps(level_method(k)(c, s).circuit)[0]) < bound:
                violations += 1
    ok &= violations == 0
    report_criterion(5, ok, f"{reachable} invertible matrices, {violations} methods below oracle, "
                            f"oracle mean up to permutation {np.mean(oracle):.2f}")
    assert ok


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cfg = TrainConfig(
        hyper=Hyperparams(total_steps=TRAIN_STEPS),
        dataset=DATASETS["i"],
        seed=TRAIN_SEED,
        checkpoint=str(out / "policy.json"),
        curve=str(out / "curve.csv"),
    )
    return train(cfg)


def test_c06a_training_reward_improves(trained):
    first, last = reward_window_means(trained.episodes, trained.env_steps)
    ok = last - first >= 0.05
    report_criterion(6, ok, f"(a) {trained.env_steps} steps, mean episode reward first 5% {first:.4f}, last 5% {last:.4f}")
    assert ok


def test_c06b_trained_agent_beats_baselines(trained):
    spec = replace(DATASETS["i"], seed=HELD_OUT_SEED)
    circs = dataset_circuits(spec)
    levels = level_means(spec)
    best_level = min(levels, key=levels.get)
    agent = agent_method(MLPPolicy(trained.params))
    uniform = agent_method(UniformPolicy())
    rl = float(np.mean([twoq(agent(c, s).circuit) for s, c in circs]))
    un = float(np.mean([twoq(uniform(c, s).circuit) for s, c in circs]))
    ok = rl <= levels[best_level] and rl <= un
    report_criterion(6, ok, f"(b) held-out means: trained {rl:.2f}, uniform {un:.2f}, best level L{best_level} {levels[best_level]:.2f}")
    assert ok


def test_c07_gradient_check():
    rng = np.random.default_rng(7)
    params = init_params(rng, 16)
    params["w_head"] = params["w_head"] * 100
    batch = synthetic_trajectory(rng, 3)
    err = finite_difference_error(params, batch, Hyperparams(entropy_coef=0.01))
    ok = err < 1e-4
    report_criterion(7, ok, f"max relative gradient error {err:.2e}")
    assert ok


def test_c08_tree_mechanics():
    ds = DATASETS["i"]
    c = dataset_circuits(replace(ds, count=1, seed=8))[0][1]
    rng = np.random.default_rng(8)
    pol = MLPPolicy.random(8)
    t = SearchTree(c, budget=60)
    total = 0.0
    monotone = True
    prev = t.tree_reward()
    while (s := tree_step(t, pol, rng)) is not None:
        total += s.reward
        monotone &= t.tree_reward() >= prev
        prev = t.tree_reward()
    telescopes = math.isclose(total, t.tree_reward(), abs_tol=1e-12)
    t.set_policy_outputs(np.random.default_rng(9).normal(size=len(t)), np.zeros(len(t)))
    cands, p = t.selection_probs()
    counts = np.zeros(len(cands))
    index = {nid: i for i, nid in enumerate(cands)}
    draw_rng = np.random.default_rng(10)
    draws = 100_000
    for _ in range(draws):
        counts[index[t.select_node(draw_rng)[0]]] += 1
    tv = 0.5 * float(np.abs(counts / draws - p).sum())
    ok = tv < 0.02 and telescopes and monotone
    report_criterion(8, ok, f"TV {tv:.4f} over {draws} draws on {len(cands)} candidates, telescoping {telescopes}, monotone {monotone}")
    assert ok


def test_c09_peephole_pipeline():
    small = assemble_circuit(width=8, total_gates=200, block_width=5, block_gates=50, ratios=DATASETS["i"].ratios, seed=9)
    args = SimpleNamespace(peephole=True, block_size=5, seed=0, budget=32, restarts=1, max_level=5)
    out = optimize_circuit(small, UniformPolicy(), args)
    equal = equal_up_to_scalar(circuit_to_unitary(out), circuit_to_unitary(small), 1e-9)
    small_ok = equal and twoq(out) <= twoq(small)
    wide = assemble_circuit(width=50, total_gates=2000, block_width=5, block_gates=50, ratios=DATASETS["ii"].ratios, seed=9)
    blocks = len(partition_circuit(wide, 5).blocks)
    args = SimpleNamespace(peephole=True, block_size=5, seed=0, budget=16, restarts=0, max_level=5)
    wide_out = optimize_circuit(wide, UniformPolicy(), args)
    ok = small_ok and twoq(wide_out) < twoq(wide)
    report_criterion(9, ok, f"8q: {twoq(small)} -> {twoq(out)} verified {equal}; "
                            f"50q/{blocks} blocks: {twoq(wide)} -> {twoq(wide_out)}")
    assert ok


def test_c10_determinism(tmp_path):
    def run_all(d):
        d.mkdir()
        cfg = d / "cfg.json"
        cfg.write_text(json.dumps({"train": {"hyper": {"envs": 2, "rollout": 8, "batch": 16, "minibatch": 8, "epochs": 1},
                                             "warmup_trees": 2, "warmup_budget": 4}}))
        codes = [
            main(["gen", "--dataset", "i", "--count", "3", "--seed", "4", "--out", str(d / "gen")]),
            main(["gen", "--assembled", "--width", "8", "--gates", "100", "--seed", "4", "--out", str(d / "asm")]),
            main(["--config", str(cfg), "train", "--total-steps", "32", "--budget", "6", "--seed", "4",
                  "--out", str(d / "ck.json"), "--curve", str(d / "curve.csv")]),
            main(["optimize", str(d / "gen" / "i_0000.qc"), "--checkpoint", str(d / "ck.json"), "--budget", "8",
                  "--restarts", "1", "--seed", "4", "--out", str(d / "opt.qc")]),
            main(["optimize", str(d / "asm" / "assembled.qc"), "--peephole", "--budget", "4", "--restarts", "0",
                  "--out", str(d / "opt_asm.qc")]),
            main(["bench", "--dataset", "ii", "--count", "3", "--seed", "4",
                  "--methods", "level-1,level-4,brute-force,uniform-agent", "--budget", "4", "--restarts", "0",
                  "--out", str(d / "bench.csv")]),
        ]
        files = sorted(p for p in d.rglob("*") if p.is_file() and p.name != "cfg.json")
        return codes, {p.relative_to(d): p.read_bytes() for p in files}

    codes_a, a = run_all(tmp_path / "a")
    codes_b, b = run_all(tmp_path / "b")
    same = a == b
    ok = same and all(c == 0 for c in codes_a + codes_b)
    report_criterion(10, ok, f"{len(a)} artifacts from gen/train/optimize/bench, byte-identical {same}, exit codes {codes_a}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
