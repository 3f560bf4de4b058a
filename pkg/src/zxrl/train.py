"""On-policy training loop: parallel search trees, rollouts, clipped-surrogate updates."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from zxrl.bench import DATASETS, DatasetSpec, random_circuit
from zxrl.policy import (
    Adam,
    Hyperparams,
    LossInfo,
    MLPPolicy,
    Sample,
    compute_gae,
    hyperparams_dict,
    fit_normalizer,
    init_params,
    ppo_update,
    save_checkpoint,
)
from zxrl.search import SearchTree, Step, UniformPolicy, run_episode, tree_step

log = logging.getLogger(__name__)

CURVE_FIELDS = ("update", "env_steps", "episodes", "mean_reward", "loss", "policy_loss", "value_loss", "entropy", "clip_frac")


@dataclass
class TrainConfig:
    hyper: Hyperparams = field(default_factory=Hyperparams)
    dataset: DatasetSpec = field(default_factory=lambda: DATASETS["i"])
    seed: int = 0
    max_level: int = 5
    checkpoint: str | None = None
    checkpoint_every: int = 50  # updates
    warmup_trees: int = 16  # uniform-policy trees used to fit the input standardization
    warmup_budget: int = 32
    curve: str | None = None

    def to_dict(self) -> dict:
        return {
            "hyper": hyperparams_dict(self.hyper),
            "dataset": self.dataset.to_dict(),
            "seed": self.seed,
            "max_level": self.max_level,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        hyper = Hyperparams.from_dict(d.pop("hyper", {}))
        ds = d.pop("dataset", None)
        dataset = DATASETS["i"] if ds is None else DatasetSpec.from_dict(ds if isinstance(ds, dict) else {"name": ds})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training config fields {sorted(unknown)}")
        return cls(hyper=hyper, dataset=dataset, **d)


@dataclass
class EpisodeRecord:
    env_steps: int  # global step count when the episode ended
    reward: float
    best: int
    root: int


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    episodes: list[EpisodeRecord]
    curve: list[dict]
    env_steps: int


class _Env:
    """One independent search tree on a stream of freshly sampled circuits."""

    def __init__(self, cfg: TrainConfig, index: int):
        self.cfg = cfg
        self.rng = np.random.default_rng([cfg.seed, 1, index])
        self.circuit_rng = np.random.default_rng([cfg.seed, 2, index])
        self.tree: SearchTree | None = None
        self.reset()

    def reset(self) -> None:
        ds = self.cfg.dataset
        while True:
            seed = int(self.circuit_rng.integers(2**63))
            c = random_circuit(ds.width, ds.gates, ds.ratios, seed)
            tree = SearchTree(c, self.cfg.hyper.budget, self.cfg.max_level)
            # zero-CNOT roots have no meaningful reward
            if tree.root.cnot_count > 0 and not tree.finished:
                self.tree = tree
                return


def warmup_features(cfg: TrainConfig) -> np.ndarray:
    """Node features from a few uniformly grown trees on training-distribution circuits."""
    ds = cfg.dataset
    rng = np.random.default_rng([cfg.seed, 4])
    rows = []
    for _ in range(cfg.warmup_trees):
        c = random_circuit(ds.width, ds.gates, ds.ratios, int(rng.integers(2**63)))
        ep = run_episode(c, UniformPolicy(), cfg.warmup_budget, rng, max_level=cfg.max_level)
        rows.extend(n.features for n in ep.tree.nodes)
    return np.stack(rows)


def _to_samples(steps: list[Step], adv: np.ndarray, ret: np.ndarray) -> list[Sample]:
    return [Sample(s.features, s.paths, s.chosen, s.logp, float(a), float(r)) for s, a, r in zip(steps, adv, ret)]


def _mean_info(infos: list[LossInfo]) -> dict[str, float]:
    if not infos:
        return {}
    return {
        "loss": float(np.mean([i.loss for i in infos])),
        "policy_loss": float(np.mean([i.policy for i in infos])),
        "value_loss": float(np.mean([i.value for i in infos])),
        "entropy": float(np.mean([i.entropy for i in infos])),
        "clip_frac": float(np.mean([i.clip_frac for i in infos])),
    }


def train(
    cfg: TrainConfig,
    params: dict[str, np.ndarray] | None = None,
    progress: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Run ``cfg.hyper.total_steps`` environment steps of training (rounded up to whole rollouts)."""
    hp = cfg.hyper
    if params is None:
        params = init_params(np.random.default_rng([cfg.seed, 0]), hp.hidden)
        if hp.total_steps > 0:
            params = fit_normalizer(params, warmup_features(cfg))
    params = {k: v.copy() for k, v in params.items()}
    if hp.total_steps <= 0:
        return TrainResult(params, [], [], 0)
    opt = Adam(params, hp.learning_rate)
    update_rng = np.random.default_rng([cfg.seed, 3])
    envs = [_Env(cfg, i) for i in range(hp.envs)]
    episodes: list[EpisodeRecord] = []
    curve: list[dict] = []
    env_steps = 0
    update = 0
    curve_file = None
    writer = None
    if cfg.curve:
        curve_file = open(cfg.curve, "w", newline="")
        writer = csv.DictWriter(curve_file, fieldnames=CURVE_FIELDS, lineterminator="\n")
        writer.writeheader()
    try:
        while env_steps < hp.total_steps:
            policy = MLPPolicy(params)
            buffers: list[list[Step]] = [[] for _ in envs]
            n_before = len(episodes)
            for _ in range(hp.rollout):
                for e, buf in zip(envs, buffers):
                    step = tree_step(e.tree, policy, e.rng)
                    assert step is not None  # finished trees are reset below
                    env_steps += 1
                    buf.append(step)
                    if step.done:
                        t = e.tree
                        episodes.append(EpisodeRecord(env_steps, t.tree_reward(), t.best_node().cnot_count, t.root.cnot_count))
                        e.reset()
            samples: list[Sample] = []
            for e, buf in zip(envs, buffers):
                feats = np.stack([n.features for n in e.tree.nodes])
                last_value = float(policy.evaluate(feats)[1].max())
                adv, ret = compute_gae(
                    np.array([s.reward for s in buf]),
                    np.array([s.value for s in buf]),
                    np.array([s.done for s in buf]),
                    last_value,
                    hp.gamma,
                    hp.gae_lambda,
                )
                samples.extend(_to_samples(buf, adv, ret))
            params, infos = ppo_update(params, samples, hp, opt, update_rng)
            update += 1
            finished = episodes[n_before:]
            row = {
                "update": update,
                "env_steps": env_steps,
                "episodes": len(finished),
                "mean_reward": f"{np.mean([r.reward for r in finished]):.6f}" if finished else "",
            }
            row.update({k: f"{v:.6f}" for k, v in _mean_info(infos).items()})
            curve.append(row)
            if writer is not None:
                writer.writerow(row)
                curve_file.flush()
            if progress is not None:
                progress(row)
            if cfg.checkpoint and update % cfg.checkpoint_every == 0:
                save_checkpoint(cfg.checkpoint, params, cfg.to_dict())
            log.info("update %d steps %d reward %s", update, env_steps, row["mean_reward"])
    finally:
        if curve_file is not None:
            curve_file.close()
    if cfg.checkpoint:
        save_checkpoint(cfg.checkpoint, params, cfg.to_dict())
    return TrainResult(params, episodes, curve, env_steps)


def reward_window_means(episodes: list[EpisodeRecord], total_steps: int, fraction: float = 0.05) -> tuple[float, float]:
    """Mean episode reward over episodes ending in the first and last ``fraction`` of training steps."""
    lo = fraction * total_steps
    hi = (1.0 - fraction) * total_steps
    first = [e.reward for e in episodes if e.env_steps <= lo]
    last = [e.reward for e in episodes if e.env_steps > hi]
    if not first or not last:
        raise ValueError("training too short: a reward window holds no finished episode")
    return float(np.mean(first)), float(np.mean(last))


def load_curve(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        return list(csv.DictReader(fh))
