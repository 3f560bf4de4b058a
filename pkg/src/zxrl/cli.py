"""Command-line entry point: gen, train, optimize, bench, verify.

Exit codes: 0 success, 1 verification mismatch or method failure, 2 usage or
configuration error.  Diagnostics go to stderr as ``zxrl: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from zxrl.bench import (
    DATASETS,
    BadRatios,
    DatasetSpec,
    GateRatios,
    agent_method,
    assemble_circuit,
    dataset_circuits,
    partition_circuit,
    reassemble,
    run_benchmark,
    standard_methods,
)
from zxrl.circuit import Circuit, CircuitError, read_circuit, write_circuit
from zxrl.extract import ExtractionFailed
from zxrl.policy import CheckpointError, Hyperparams, MLPPolicy, NonFinite, load_checkpoint
from zxrl.search import UniformPolicy, search_with_restarts
from zxrl.tensor import MAX_UNITARY_WIDTH, circuit_to_unitary, equal_up_to_scalar
from zxrl.train import TrainConfig, train

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
WHOLE_CIRCUIT_MAX_WIDTH = MAX_UNITARY_WIDTH
# train-config keys with no command-line flag
TRAIN_ONLY_KEYS = ("hyper", "dataset", "max_level", "checkpoint_every", "warmup_trees", "warmup_budget")


class UsageError(Exception):
    pass


class MethodFailure(Exception):
    pass


def _err(kind: str, msg: str) -> None:
    print(f"zxrl: {kind}: {msg}", file=sys.stderr)


def _dataset(args) -> DatasetSpec:
    if getattr(args, "spec", None):
        spec = DatasetSpec.load(args.spec)
    else:
        if args.dataset not in DATASETS:
            raise UsageError(f"unknown dataset {args.dataset!r}; choose from {sorted(DATASETS)}")
        spec = DATASETS[args.dataset]
    d = spec.to_dict()
    for key in ("width", "gates", "count", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if getattr(args, "ratios", None):
        d["ratios"] = args.ratios
    return DatasetSpec.from_dict(d)


def _policy(args):
    if not getattr(args, "checkpoint", None):
        return UniformPolicy()
    params, _ = load_checkpoint(args.checkpoint)
    return MLPPolicy(params)


# -- subcommands -------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.assembled:
        ratios = GateRatios.parse(args.ratios) if args.ratios else DATASETS["i"].ratios
        c = assemble_circuit(args.width or 50, args.gates or 2000, args.block_width, args.block_gates, ratios, args.seed or 0)
        write_circuit(c, out / "assembled.qc")
        print(f"wrote {out / 'assembled.qc'}: {c.width} qubits, {len(c)} gates")
        return EXIT_OK
    spec = _dataset(args)
    for i, (seed, c) in enumerate(dataset_circuits(spec)):
        write_circuit(c, out / f"{spec.name}_{i:04d}.qc")
    (out / "dataset.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {spec.count} circuits to {out}")
    return EXIT_OK


def cmd_train(args, config: dict) -> int:
    tc = dict(config.get("train", {}))
    hyper = dict(tc.pop("hyper", {}))
    if args.total_steps is not None:
        hyper["total_steps"] = args.total_steps
    if args.budget is not None:
        hyper["budget"] = args.budget
    tc["hyper"] = hyper
    if args.seed is not None:
        tc["seed"] = args.seed
    if args.dataset is not None:
        tc["dataset"] = {"name": args.dataset}
    tc["checkpoint"] = args.out
    tc["curve"] = args.curve
    try:
        cfg = TrainConfig.from_dict(tc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"training config: {exc}") from None

    def report(row):
        if row["mean_reward"]:
            logging.getLogger("zxrl.train").info("steps=%s reward=%s", row["env_steps"], row["mean_reward"])

    res = train(cfg, progress=report)
    print(f"trained {res.env_steps} steps, {len(res.episodes)} episodes; checkpoint {args.out}")
    return EXIT_OK


def _optimize_whole(c: Circuit, policy, args, rng) -> Circuit:
    node = search_with_restarts(c, policy, args.budget, args.restarts, rng, max_level=args.max_level)
    return node.circuit


def optimize_circuit(c: Circuit, policy, args) -> Circuit:
    """Whole-circuit search for narrow circuits, peephole blocks otherwise; never returns a worse circuit."""
    peephole = args.peephole if args.peephole is not None else c.width > WHOLE_CIRCUIT_MAX_WIDTH
    if not peephole:
        out = _optimize_whole(c, policy, args, np.random.default_rng([args.seed, 0]))
    else:
        part = partition_circuit(c, args.block_size)
        blocks = []
        for i, b in enumerate(part.blocks):
            local = b.local()
            best = local
            if local.two_qubit_count() > 0:
                cand = _optimize_whole(local, policy, args, np.random.default_rng([args.seed, 1, i]))
                if cand.two_qubit_count() < local.two_qubit_count():
                    best = cand
            blocks.append(best)
        out = reassemble(part, blocks)
    return out if out.two_qubit_count() <= c.two_qubit_count() else c


def cmd_optimize(args) -> int:
    c = read_circuit(args.input)
    policy = _policy(args)
    out = optimize_circuit(c, policy, args)
    if args.verify:
        if c.width > MAX_UNITARY_WIDTH:
            raise UsageError(f"--verify needs width <= {MAX_UNITARY_WIDTH}, got {c.width}")
        if not equal_up_to_scalar(circuit_to_unitary(out), circuit_to_unitary(c)):
            raise MethodFailure("optimized circuit is not equivalent to the input")
    if args.out:
        write_circuit(out, args.out)
    else:
        sys.stdout.write(str(out))
    verified = " verified" if args.verify else ""
    print(f"two-qubit {c.two_qubit_count()} -> {out.two_qubit_count()}{verified}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = _dataset(args)
    available = standard_methods()
    names = [m.strip() for m in args.methods.split(",") if m.strip()]
    methods = {}
    for m in names:
        if m in available:
            methods[m] = available[m]
        elif m == "rl-agent":
            if not args.checkpoint:
                raise UsageError("rl-agent needs --checkpoint")
            params, _ = load_checkpoint(args.checkpoint)
            methods[m] = agent_method(MLPPolicy(params), args.budget, args.restarts, args.max_level)
        elif m == "uniform-agent":
            methods[m] = agent_method(UniformPolicy(), args.budget, args.restarts, args.max_level)
        else:
            raise UsageError(f"unknown method {m!r}; choose from {sorted(available) + ['rl-agent', 'uniform-agent']}")
    text = run_benchmark(spec, methods, timing=args.timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if "ERR:" in text:
        _err("method", "some methods failed; see ERR cells")
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    a, b = read_circuit(args.first), read_circuit(args.second)
    if a.width != b.width:
        print(f"FAIL: widths differ ({a.width} vs {b.width})")
        return EXIT_FAIL
    if a.width > MAX_UNITARY_WIDTH:
        raise UsageError(f"verification needs width <= {MAX_UNITARY_WIDTH}, got {a.width}")
    ok = equal_up_to_scalar(circuit_to_unitary(a), circuit_to_unitary(b), args.tol)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zxrl", description="ZX-diagram tree search for two-qubit gate reduction.")
    p.add_argument("--config", help="JSON file of defaults; command-line flags override it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def dataset_flags(sp):
        sp.add_argument("--dataset", default="i", help="i, ii or iii")
        sp.add_argument("--spec", help="dataset JSON (name, ratios, width, gates, count, seed)")
        sp.add_argument("--ratios", help="CNOT/H/RX/RZ, e.g. 0.6/0.2/0.1/0.1")
        sp.add_argument("--width", type=int)
        sp.add_argument("--gates", type=int)
        sp.add_argument("--count", type=int)
        sp.add_argument("--seed", type=int)

    def search_flags(sp):
        sp.add_argument("--checkpoint", help="policy checkpoint; uniform selection if omitted")
        sp.add_argument("--budget", type=int, default=Hyperparams.budget)
        sp.add_argument("--restarts", type=int, default=3)
        sp.add_argument("--max-level", type=int, default=5)

    g = sub.add_parser("gen", help="write random or assembled circuits")
    dataset_flags(g)
    g.add_argument("--assembled", action="store_true", help="one wide circuit built from random blocks")
    g.add_argument("--block-width", type=int, default=5)
    g.add_argument("--block-gates", type=int, default=50)
    g.add_argument("--out", required=True, help="output directory")

    t = sub.add_parser("train", help="train a node-selection policy")
    t.add_argument("--dataset", default=None)
    t.add_argument("--total-steps", type=int)
    t.add_argument("--budget", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--curve", help="training curve CSV path")

    o = sub.add_parser("optimize", help="reduce the two-qubit count of one circuit")
    o.add_argument("input")
    search_flags(o)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    o.add_argument("--verify", action="store_true")
    mode = o.add_mutually_exclusive_group()
    mode.add_argument("--peephole", dest="peephole", action="store_const", const=True)
    mode.add_argument("--whole", dest="peephole", action="store_const", const=False)
    o.add_argument("--block-size", type=int, default=5)

    b = sub.add_parser("bench", help="benchmark methods on a generated dataset")
    dataset_flags(b)
    search_flags(b)
    b.add_argument("--methods", default="level-1,level-2,level-3,level-4,level-5")
    b.add_argument("--out")
    b.add_argument("--timing", action="store_true", help="fill wall_ms (output no longer reproducible)")

    v = sub.add_parser("verify", help="check two circuits for equality up to a global scalar")
    v.add_argument("first")
    v.add_argument("second")
    v.add_argument("--tol", type=float, default=1e-9)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        config = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config {known.config}: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    # flat per-command defaults, e.g. {"optimize": {"budget": 64}}
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subs.choices.items():
        section = config.get(name, {})
        if name == "train":
            section = {k: v for k, v in section.items() if k not in TRAIN_ONLY_KEYS}
        dests = {a.dest for a in sp._actions}
        unknown = set(section) - dests
        if unknown:
            raise UsageError(f"config section {name!r}: unknown keys {sorted(unknown)}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in section.items()})
    return config


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config = _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_USAGE
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(name)s: %(message)s")
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "train":
            return cmd_train(args, config)
        if args.command == "optimize":
            return cmd_optimize(args)
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_verify(args)
    except UsageError as exc:
        _err("usage", str(exc))
        return EXIT_USAGE
    except (CircuitError, BadRatios, CheckpointError, OSError) as exc:
        _err("input", str(exc))
        return EXIT_USAGE
    except (MethodFailure, NonFinite, ExtractionFailed) as exc:
        _err("failure", str(exc))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
