import numpy as np
import pytest

from dealersim.policy import (
    CategoricalPolicy,
    GaussianPolicy,
    ScriptedZeroTweakLP,
    gaussian_log_prob,
    log_softmax,
    softmax,
    squash_correction,
    squash_lp,
    tanh_log_deriv,
)


def test_squash_lp_bounds_and_hedge_affine():
    u = np.array([-50.0, 50.0, 0.0])
    out = squash_lp(u)
    assert out[0] == pytest.approx(-1.0)
    assert out[1] == pytest.approx(1.0)
    assert out[2] == pytest.approx(0.5)  # tanh(0) -> midpoint of [0,1]

    batch = squash_lp(np.stack([u, np.zeros(3)]))
    np.testing.assert_allclose(batch[0], out)
    np.testing.assert_allclose(batch[1], [0.0, 0.0, 0.5])


def test_tanh_log_deriv_accurate_and_stable():
    u = np.linspace(-3, 3, 31)
    np.testing.assert_allclose(tanh_log_deriv(u), np.log(1 - np.tanh(u) ** 2), rtol=1e-12)
    big = tanh_log_deriv(np.array([20.0, -20.0, 500.0]))
    assert np.all(np.isfinite(big))
    assert np.all(big < -30)


def test_gaussian_log_prob_matches_dense_formula():
    rng = np.random.default_rng(0)
    u = rng.normal(size=(6, 3))
    mean = rng.normal(size=(6, 3))
    log_std = np.array([-0.5, 0.1, 0.3])
    got = gaussian_log_prob(u, mean, log_std)
    var = np.exp(2 * log_std)
    want = -0.5 * (((u - mean) ** 2 / var).sum(axis=1)
                   + np.log(2 * np.pi * var).sum())
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_squashed_density_integrates_to_one():
    """1-D change of variables: the corrected density over a=tanh(u) has mass 1."""
    mu, log_std = 0.3, np.log(0.5)
    a = np.linspace(-1 + 1e-9, 1 - 1e-9, 400_001)
    u = np.arctanh(a)
    log_p_raw = (
        -0.5 * ((u - mu) ** 2) / np.exp(2 * log_std)
        - log_std
        - 0.5 * np.log(2 * np.pi)
    )
    density = np.exp(log_p_raw - tanh_log_deriv(u))
    mass = np.trapezoid(density, a)
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_squash_correction_includes_hedge_halving():
    u = np.zeros(3)
    # at u=0 each tanh derivative is 1 (log 0); only the 1/2 scale remains
    assert squash_correction(u[None])[0] == pytest.approx(-np.log(2.0))


def test_gaussian_policy_act_consistency():
    rng = np.random.default_rng(1)
    policy = GaussianPolicy(obs_dim=5, rng=rng)
    obs = rng.normal(size=5)
    u, env_action, logp = policy.act(obs, np.random.default_rng(2))
    np.testing.assert_allclose(env_action, squash_lp(u))
    mean = policy.net(obs[None])[0]
    assert logp == pytest.approx(float(policy.log_prob(u[None], mean[None])[0]))
    assert -1 <= env_action[0] <= 1 and -1 <= env_action[1] <= 1
    assert 0 <= env_action[2] <= 1


def test_gaussian_policy_mean_action_is_squashed_net_output():
    rng = np.random.default_rng(3)
    policy = GaussianPolicy(obs_dim=4, rng=rng)
    obs = rng.normal(size=4)
    np.testing.assert_allclose(
        policy.mean_action(obs), squash_lp(policy.net(obs[None])[0])
    )


def test_gaussian_policy_entropy_formula():
    policy = GaussianPolicy(obs_dim=3, rng=np.random.default_rng(0), init_log_std=-0.2)
    want = 3 * (0.5 * (1 + np.log(2 * np.pi)) - 0.2)
    assert policy.entropy() == pytest.approx(want)


def test_gaussian_policy_round_trip():
    policy = GaussianPolicy(obs_dim=4, rng=np.random.default_rng(5))
    back = GaussianPolicy.from_dict(policy.to_dict())
    obs = np.random.default_rng(6).normal(size=4)
    u1, a1, l1 = policy.act(obs, np.random.default_rng(7))
    u2, a2, l2 = back.act(obs, np.random.default_rng(7))
    np.testing.assert_array_equal(u1, u2)
    np.testing.assert_array_equal(a1, a2)
    assert l1 == l2


def test_softmax_simplex_and_log_consistency():
    logits = np.array([[2.0, -1.0, 0.5], [100.0, 100.0, 100.0]])
    p = softmax(logits)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-12)
    np.testing.assert_allclose(np.log(p), log_softmax(logits), rtol=1e-9)


def test_categorical_policy_act_and_log_prob():
    rng = np.random.default_rng(8)
    policy = CategoricalPolicy(obs_dim=6, rng=rng)
    obs = rng.normal(size=6)
    a1, env1, logp1 = policy.act(obs, np.random.default_rng(9))
    a2, env2, logp2 = policy.act(obs, np.random.default_rng(9))
    assert (a1, env1, logp1) == (a2, env2, logp2)
    assert a1 in (0, 1, 2)

    logits = policy.net(obs[None])
    want = np.log(softmax(logits)[0, a1])
    assert logp1 == pytest.approx(want)
    lp = policy.log_prob(np.array([a1]), logits)
    assert lp[0] == pytest.approx(want)


def test_categorical_policy_round_trip():
    policy = CategoricalPolicy(obs_dim=3, rng=np.random.default_rng(10))
    back = CategoricalPolicy.from_dict(policy.to_dict())
    obs = np.zeros(3)
    assert policy.act(obs, np.random.default_rng(0)) == back.act(obs, np.random.default_rng(0))


def test_scripted_lp_quotes_reference_prices():
    actor = ScriptedZeroTweakLP()
    assert actor.trainable is False
    raw, env_action, logp = actor.act(np.ones(40), np.random.default_rng(0))
    np.testing.assert_array_equal(env_action, np.zeros(3))
    assert logp == 0.0
