"""Feature-based node-selection policy and its clipped-surrogate update.

The network maps a node's 24 circuit/diagram features to a selection weight
``W`` and a value ``V``.  Gradients are written out by hand; everything runs
in float64.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from zxrl.circuit import Circuit, circuit_stats
from zxrl.diagram import ZXDiagram

BASE_FEATURES = (
    "gate_count",
    "t_count",
    "clifford_count",
    "two_qubit_count",
    "h_count",
    "depth",
    "depth_cz",
    "graph_edges",
)
FEATURE_NAMES = (
    BASE_FEATURES
    + tuple(f"{n}_per_gate" for n in BASE_FEATURES)
    + tuple(f"{n}_per_qubit" for n in BASE_FEATURES)
)
N_FEATURES = len(FEATURE_NAMES)
CHECKPOINT_VERSION = 1
TRAINABLE = ("w1", "b1", "w2", "b2", "w_head", "b_head", "v_head", "b_value")
# input standardization, fitted once and then frozen
NORMALIZER = ("x_mean", "x_scale")
PARAM_NAMES = TRAINABLE + NORMALIZER


class NonFinite(FloatingPointError):
    """A loss or gradient came out NaN or infinite."""


class CheckpointError(ValueError):
    pass


def featurize_parts(c: Circuit, d: ZXDiagram) -> np.ndarray:
    s = circuit_stats(c)
    base = np.array(
        [s.gate_count, s.t_count, s.clifford_count, s.two_qubit_count,
         s.h_count, s.depth, s.depth_cz, d.num_edges()],
        dtype=float,
    )
    per_gate = base / s.gate_count if s.gate_count else np.zeros(8)
    per_qubit = base / c.width if c.width else np.zeros(8)
    return np.concatenate([base, per_gate, per_qubit])


def featurize(node) -> np.ndarray:
    """Feature vector of a search-tree node (uses its cached extraction)."""
    return featurize_parts(node.circuit, node.diagram)


@dataclass
class Hyperparams:
    learning_rate: float = 3e-4
    gamma: float = 0.99
    batch: int = 128
    envs: int = 8
    rollout: int = 16
    entropy_coef: float = 1e-5
    clip: float = 0.2
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch: int = 32
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: int = 64
    total_steps: int = 50_000
    budget: int = 128

    def __post_init__(self):
        if self.envs * self.rollout != self.batch:
            raise ValueError(f"envs * rollout = {self.envs * self.rollout} but batch = {self.batch}")
        if self.batch % self.minibatch:
            raise ValueError("minibatch must divide batch")

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


# -- network -----------------------------------------------------------------

def init_params(rng: np.random.Generator, hidden: int = 64) -> dict[str, np.ndarray]:
    def dense(fan_in, fan_out, gain):
        return rng.normal(0.0, gain / np.sqrt(fan_in), size=(fan_in, fan_out))

    return {
        "w1": dense(N_FEATURES, hidden, 1.0),
        "b1": np.zeros(hidden),
        "w2": dense(hidden, hidden, 1.0),
        "b2": np.zeros(hidden),
        # small heads: start close to uniform selection
        "w_head": dense(hidden, 1, 0.01)[:, 0],
        "b_head": np.zeros(1),
        "v_head": dense(hidden, 1, 1.0)[:, 0],
        "b_value": np.zeros(1),
        "x_mean": np.zeros(N_FEATURES),
        "x_scale": np.ones(N_FEATURES),
    }


def fit_normalizer(params: dict, features: np.ndarray, min_scale: float = 1e-3) -> dict:
    """Copy of ``params`` whose input standardization matches ``features`` (rows are samples)."""
    x = _scale(np.atleast_2d(features))
    out = {k: v.copy() for k, v in params.items()}
    out["x_mean"] = x.mean(axis=0)
    sd = x.std(axis=0)
    out["x_scale"] = np.where(sd > min_scale, sd, 1.0)
    return out


def zero_params(hidden: int = 64) -> dict[str, np.ndarray]:
    out = {k: np.zeros_like(v) for k, v in init_params(np.random.default_rng(0), hidden).items()}
    out["x_scale"] = np.ones(N_FEATURES)
    return out


def _scale(features: np.ndarray) -> np.ndarray:
    # counts span orders of magnitude; features are non-negative
    return np.log1p(np.maximum(features, 0.0))


def _forward(params: dict, features: np.ndarray):
    x = (_scale(np.atleast_2d(np.asarray(features, dtype=float))) - params["x_mean"]) / params["x_scale"]
    h1 = np.tanh(x @ params["w1"] + params["b1"])
    h2 = np.tanh(h1 @ params["w2"] + params["b2"])
    w = h2 @ params["w_head"] + params["b_head"][0]
    v = h2 @ params["v_head"] + params["b_value"][0]
    return w, v, (x, h1, h2)


def policy_forward(params: dict, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (W, V) for a (k, 24) feature matrix, or scalars for a single vector."""
    w, v, _ = _forward(params, features)
    if np.ndim(features) == 1:
        return w[0], v[0]
    return w, v


def _backward(params: dict, cache, dw: np.ndarray, dv: np.ndarray) -> dict[str, np.ndarray]:
    x, h1, h2 = cache
    g = {
        "w_head": h2.T @ dw,
        "b_head": np.array([dw.sum()]),
        "v_head": h2.T @ dv,
        "b_value": np.array([dv.sum()]),
    }
    dh2 = np.outer(dw, params["w_head"]) + np.outer(dv, params["v_head"])
    dz2 = dh2 * (1.0 - h2 ** 2)
    g["w2"] = h1.T @ dz2
    g["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ params["w2"].T) * (1.0 - h1 ** 2)
    g["w1"] = x.T @ dz1
    g["b1"] = dz1.sum(axis=0)
    return g


class MLPPolicy:
    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params

    @classmethod
    def random(cls, seed: int = 0, hidden: int = 64) -> "MLPPolicy":
        return cls(init_params(np.random.default_rng(seed), hidden))

    def evaluate(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w, v, _ = _forward(self.params, features)
        return w, v


def tree_value(tree, params: dict) -> float:
    """Max-pooled value over every node of the tree."""
    feats = np.stack([n.features for n in tree.nodes])
    _, v, _ = _forward(params, feats)
    return float(v.max())


# -- advantage estimation ----------------------------------------------------

def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    last_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantages and discounted returns for one environment's rollout.

    ``dones[t]`` marks that the episode ended after step t, so nothing is
    bootstrapped across it.
    """
    n = len(rewards)
    adv = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 0.0 if dones[t] else 1.0
        nxt = last_value if t == n - 1 else values[t + 1]
        delta = rewards[t] + gamma * nxt * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        adv[t] = running
    return adv, adv + np.asarray(values, dtype=float)


# -- loss --------------------------------------------------------------------

@dataclass
class Sample:
    """One stored step: enough to recompute its selection distribution."""

    features: np.ndarray  # (nodes, 24)
    paths: np.ndarray  # (candidates, nodes)
    chosen: int
    old_logp: float
    advantage: float
    ret: float


@dataclass
class LossInfo:
    loss: float
    policy: float
    value: float
    entropy: float
    clip_frac: float


def ppo_loss(params: dict, batch: list[Sample], hp: Hyperparams) -> tuple[LossInfo, dict[str, np.ndarray]]:
    """Clipped-surrogate loss over ``batch`` and its analytic gradient."""
    sizes = [len(s.features) for s in batch]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    w, v, cache = _forward(params, np.concatenate([s.features for s in batch]))
    dw = np.zeros_like(w)
    dv = np.zeros_like(v)
    m = len(batch)
    pol = val = ent = 0.0
    clipped = 0
    for i, s in enumerate(batch):
        lo, hi = offsets[i], offsets[i + 1]
        logits = s.paths @ w[lo:hi]
        logits = logits - logits.max()
        logp_all = logits - np.log(np.exp(logits).sum())
        p = np.exp(logp_all)
        logp = logp_all[s.chosen]
        ratio = np.exp(logp - s.old_logp)
        a = s.advantage
        unclipped = ratio * a
        clipped_term = np.clip(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * a
        pol -= min(unclipped, clipped_term)
        onehot = np.zeros_like(p)
        onehot[s.chosen] = 1.0
        dlogits = np.zeros_like(p)
        if unclipped <= clipped_term:
            dlogits += -a * ratio * (onehot - p)
        else:
            clipped += 1
        h = -float(p @ logp_all)
        ent += h
        # d(-c * H)/dlogits = c * p * (log p + H)
        dlogits += hp.entropy_coef * p * (logp_all + h)
        dw[lo:hi] += s.paths.T @ dlogits / m
        j = lo + int(np.argmax(v[lo:hi]))
        err = v[j] - s.ret
        val += err * err
        dv[j] += 2.0 * hp.value_coef * err / m
    pol /= m
    val /= m
    ent /= m
    loss = pol + hp.value_coef * val - hp.entropy_coef * ent
    grads = _backward(params, cache, dw, dv)
    if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
        bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
        raise NonFinite(f"loss={loss!r}, non-finite gradients in {bad}")
    return LossInfo(float(loss), float(pol), float(val), float(ent), clipped / m), grads


class Adam:
    def __init__(self, params: dict, lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(params[k]) for k in TRAINABLE}
        self.v = {k: np.zeros_like(params[k]) for k in TRAINABLE}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in TRAINABLE:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] = params[k] - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_grad_norm(grads: dict, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


def ppo_update(
    params: dict,
    samples: list[Sample],
    hp: Hyperparams,
    opt: Adam,
    rng: np.random.Generator,
    normalize: bool = True,
) -> tuple[dict, list[LossInfo]]:
    """``hp.epochs`` shuffled passes of minibatch steps.  Returns new params and per-step losses."""
    params = {k: v.copy() for k, v in params.items()}
    if normalize and len(samples) > 1:
        adv = np.array([s.advantage for s in samples])
        std = adv.std()
        centred = (adv - adv.mean()) / std if std > 1e-8 else adv - adv.mean()
        samples = [Sample(s.features, s.paths, s.chosen, s.old_logp, float(a), s.ret) for s, a in zip(samples, centred)]
    infos = []
    mb = min(hp.minibatch, len(samples))
    for _ in range(hp.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(samples), mb):
            batch = [samples[i] for i in order[start:start + mb]]
            info, grads = ppo_loss(params, batch, hp)
            clip_grad_norm(grads, hp.max_grad_norm)
            opt.step(params, grads)
            infos.append(info)
    return params, infos


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(path, params: dict, config: dict | None = None) -> None:
    layers = {
        k: {"shape": list(np.shape(params[k])), "data": np.asarray(params[k], dtype=float).ravel().tolist()}
        for k in PARAM_NAMES
    }
    doc = {"version": CHECKPOINT_VERSION, "features": list(FEATURE_NAMES), "layers": layers, "config": config or {}}
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    layers = doc.get("layers", {})
    missing = [k for k in PARAM_NAMES if k not in layers]
    if missing:
        raise CheckpointError(f"checkpoint lacks {missing}")
    params = {}
    for k in PARAM_NAMES:
        shape = tuple(layers[k]["shape"])
        data = np.array(layers[k]["data"], dtype=float)
        if data.size != int(np.prod(shape)):
            raise CheckpointError(f"{k}: {data.size} values for shape {shape}")
        params[k] = data.reshape(shape)
    hidden = params["b1"].shape[0]
    expected = {k: v.shape for k, v in zero_params(hidden).items()}
    for k, shp in expected.items():
        if params[k].shape != shp:
            raise CheckpointError(f"{k}: shape {params[k].shape}, expected {shp}")
    return params, doc.get("config", {})


def hyperparams_dict(hp: Hyperparams) -> dict:
    return asdict(hp)
