import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import finite_difference_error, synthetic_trajectory
from zxrl.circuit import CNOT, Circuit
from zxrl.diagram import circuit_to_diagram
from zxrl.policy import (
    N_FEATURES,
    NORMALIZER,
    TRAINABLE,
    Adam,
    CheckpointError,
    Hyperparams,
    MLPPolicy,
    NonFinite,
    compute_gae,
    featurize_parts,
    fit_normalizer,
    init_params,
    load_checkpoint,
    policy_forward,
    ppo_loss,
    ppo_update,
    save_checkpoint,
    zero_params,
)


def small_params(seed=0, hidden=8):
    p = init_params(np.random.default_rng(seed), hidden)
    p["w_head"] = p["w_head"] * 100  # make the selection signal visible
    return fit_normalizer(p, np.random.default_rng(seed).uniform(0, 40, (30, N_FEATURES)))


def test_features_example():
    c = Circuit(2, [CNOT(0, 1)])
    f = featurize_parts(c, circuit_to_diagram(c))
    assert f.shape == (24,)
    assert f[3] == 1 and f[8 + 3] == 1.0 and f[16 + 3] == 0.5
    empty = Circuit(2)
    f = featurize_parts(empty, circuit_to_diagram(empty))
    assert np.all(f[8:16] == 0) and np.all(np.isfinite(f))


def test_zero_params_give_zero_outputs():
    w, v = policy_forward(zero_params(), np.ones((5, N_FEATURES)))
    assert np.all(w == 0) and np.all(v == 0)


@given(st.integers(1, 6), st.integers(0, 1000))
def test_batched_equals_per_row(k, seed):
    p = small_params(seed % 7)
    x = np.random.default_rng(seed).uniform(0, 50, (k, N_FEATURES))
    w, v = policy_forward(p, x)
    for i in range(k):
        wi, vi = policy_forward(p, x[i])
        assert np.isclose(w[i], wi) and np.isclose(v[i], vi)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    hp = Hyperparams(entropy_coef=0.01)
    assert finite_difference_error(small_params(1), synthetic_trajectory(rng), hp) < 1e-4


def test_ratio_one_at_old_policy():
    p = small_params(2)
    hp = Hyperparams()
    batch = synthetic_trajectory(np.random.default_rng(3))
    for s in batch:
        logits = s.paths @ policy_forward(p, s.features)[0]
        logits -= logits.max()
        s.old_logp = float(logits[s.chosen] - np.log(np.exp(logits).sum()))
    info, _ = ppo_loss(p, batch, hp)
    assert info.clip_frac == 0.0
    assert info.policy == pytest.approx(-np.mean([s.advantage for s in batch]))


def test_zero_signal_leaves_params_unchanged():
    p = small_params(4)
    hp = Hyperparams(entropy_coef=0.0, value_coef=0.0, envs=1, rollout=3, batch=3, minibatch=3)
    batch = synthetic_trajectory(np.random.default_rng(5))
    for s in batch:
        s.advantage = 0.0
    new, _ = ppo_update(p, batch, hp, Adam(p), np.random.default_rng(0), normalize=False)
    for k in p:
        assert np.array_equal(new[k], p[k])


def test_update_does_not_touch_normalizer():
    p = small_params(6)
    hp = Hyperparams(envs=1, rollout=3, batch=3, minibatch=3)
    new, infos = ppo_update(p, synthetic_trajectory(np.random.default_rng(7)), hp, Adam(p), np.random.default_rng(0))
    assert len(infos) == hp.epochs
    for k in NORMALIZER:
        assert np.array_equal(new[k], p[k])
    assert any(not np.array_equal(new[k], p[k]) for k in TRAINABLE)


def test_nonfinite_detected():
    p = small_params(8)
    p["w_head"][0] = np.nan
    with pytest.raises(NonFinite):
        ppo_loss(p, synthetic_trajectory(np.random.default_rng(0)), Hyperparams())


def test_gae_examples():
    adv, ret = compute_gae(np.array([1.0, 0.0]), np.zeros(2), np.array([False, True]), 5.0, 0.5, 1.0)
    assert np.allclose(adv, [1.0, 0.0])
    adv, _ = compute_gae(np.array([0.0]), np.zeros(1), np.array([False]), 2.0, 0.5, 1.0)
    assert np.allclose(adv, [1.0])
    adv, ret = compute_gae(np.array([1.0, 1.0]), np.array([0.5, 0.5]), np.array([False, False]), 0.0, 1.0, 0.0)
    assert np.allclose(adv, [1.0, 0.5]) and np.allclose(ret, [1.5, 1.0])


def test_checkpoint_round_trip(tmp_path):
    p = small_params(9)
    path = tmp_path / "ck.json"
    save_checkpoint(path, p, {"seed": 3})
    q, cfg = load_checkpoint(path)
    assert cfg == {"seed": 3}
    for k in p:
        assert np.array_equal(p[k], q[k])
    x = np.random.default_rng(0).uniform(0, 20, (4, N_FEATURES))
    assert np.array_equal(MLPPolicy(p).evaluate(x)[0], MLPPolicy(q).evaluate(x)[0])


def test_checkpoint_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)
    save_checkpoint(bad, small_params())
    doc = bad.read_text().replace('"version": 1', '"version": 99')
    bad.write_text(doc)
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        Hyperparams(envs=3, rollout=5, batch=128)
    assert Hyperparams.from_dict({"learning_rate": 1e-3}).learning_rate == 1e-3
