import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equslab.guidance import GuidanceConfig
from equslab.operators import AvgPoolSR, BlockCS, GrayMean, Mask, random_mask
from equslab.priors import EpsErrorDenoiser, GaussianMixturePrior, symmetrize, toy_mixture
from equslab.samplers import (
    SamplerConfig,
    make_subsequence,
    sample,
    sample_baseline,
    sample_equs,
    with_seed,
)
from equslab.transforms import HFLIP, IDENTITY, VFLIP, TransformGroup


def test_quadratic_example():
    assert make_subsequence(100, 10, "quadratic") == [100, 81, 64, 49, 36, 25, 16, 9, 4, 1]


@pytest.mark.parametrize("kind", ["uniform", "quadratic"])
def test_saturated_subsequence(kind):
    assert make_subsequence(50, 50, kind) == list(range(50, 0, -1))


@given(st.integers(1, 2000), st.data())
@settings(max_examples=200, deadline=None)
def test_subsequence_properties(T, data):
    N = data.draw(st.integers(1, T))
    u = make_subsequence(T, N, "uniform")
    q = make_subsequence(T, N, "quadratic")
    for s in (u, q):
        assert len(s) == N
        assert all(a > b for a, b in zip(s, s[1:]))
        assert 1 <= s[-1] and s[0] <= T
    assert u[0] == q[0] == T
    # quadratic spacing puts at least as many steps in the lower half
    assert sum(t <= T / 2 for t in q) >= sum(t <= T / 2 for t in u)


def test_subsequence_errors():
    with pytest.raises(ValueError):
        make_subsequence(10, 11)
    with pytest.raises(ValueError):
        make_subsequence(10, 0)
    with pytest.raises(ValueError):
        make_subsequence(10, 5, "cubic")


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(schedule="cubic")
    with pytest.raises(ValueError):
        SamplerConfig(eta=2.0)
    with pytest.raises(ValueError):
        SamplerConfig(sigma_y=-1)
    with pytest.raises(ValueError):
        SamplerConfig(jump="sideways")
    assert SamplerConfig(nfe=1000).resolved_eta(1000) == 1.0
    assert SamplerConfig(nfe=25).resolved_eta(1000) == 0.0
    assert SamplerConfig(nfe=25, eta=0.3).resolved_eta(1000) == 0.3


@pytest.fixture(scope="module")
def problem():
    prior = symmetrize(toy_mixture((8, 8, 1), 2, 1e-3, seed=1), TransformGroup([HFLIP]))
    x = prior.sample(np.random.default_rng(0))
    A = Mask(random_mask((8, 8, 1), 0.5, seed=2))
    return prior, A, A.apply(x)


def test_full_observation_returns_y(sched):
    prior = toy_mixture((4, 4, 1), 2, 0.01, seed=3)
    A = Mask(np.ones((4, 4, 1), bool))
    y = np.random.default_rng(4).uniform(0, 1, A.m)
    rep = sample_baseline(y, A, prior, sched, SamplerConfig(nfe=10))
    np.testing.assert_allclose(rep.x0.ravel(), y, rtol=0, atol=1e-15)


def test_inpainting_observed_pixels(sched):
    mu = np.random.default_rng(5).uniform(0, 1, (4, 4, 1))
    prior = GaussianMixturePrior([1.0], mu[None], [0.02])
    mask = random_mask((4, 4, 1), 0.5, seed=6)
    A = Mask(mask)
    y = np.random.default_rng(7).uniform(0, 1, A.m)
    rep = sample(y, A, prior, sched, SamplerConfig(nfe=20, seed=3))
    np.testing.assert_allclose(rep.x0[mask], y, atol=1e-15)
    assert np.all(np.isfinite(rep.x0))


@pytest.mark.parametrize("equivariant", [False, True])
@pytest.mark.parametrize("schedule", ["uniform", "quadratic"])
@pytest.mark.parametrize("nfe", [1, 5, 24, 25])
def test_nfe_accounting(sched, problem, equivariant, schedule, nfe):
    prior, A, y = problem
    rep = sample(y, A, prior, sched, SamplerConfig(nfe=nfe, schedule=schedule, equivariant=equivariant))
    assert rep.nfe_used == nfe
    assert len(rep.diagnostics) == nfe
    assert rep.steps == make_subsequence(1000, nfe, schedule)


def test_alternation_pattern(sched, problem):
    prior, A, y = problem
    g = TransformGroup([HFLIP, VFLIP])
    rep = sample_equs(y, A, prior, sched, SamplerConfig(nfe=6, equivariant=True, group=g))
    assert [d.trajectory for d in rep.diagnostics] == ["standard", "equivariant"] * 3
    assert [d.transform for d in rep.diagnostics] == ["identity", "hflip", "identity", "vflip", "identity", "hflip"]


def test_determinism(sched, problem):
    prior, A, y = problem
    den = EpsErrorDenoiser(prior, 0.2, seed=1)
    cfg = SamplerConfig(nfe=15, equivariant=True, seed=11, eta=0.5)
    a, b = sample(y, A, den, sched, cfg), sample(y, A, den, sched, cfg)
    assert np.array_equal(a.x0, b.x0)
    assert a.diagnostics == b.diagnostics
    c = sample(y, A, den, sched, with_seed(cfg, 12))
    assert not np.array_equal(a.x0, c.x0)


def test_identity_group_equals_baseline_bitwise(sched, problem):
    prior, A, y = problem
    den = EpsErrorDenoiser(prior, 0.3, seed=2)
    base = sample_baseline(y, A, den, sched, SamplerConfig(nfe=12, seed=5))
    equi = sample_equs(y, A, den, sched, SamplerConfig(nfe=12, seed=5, equivariant=True, group=TransformGroup([IDENTITY])))
    assert np.array_equal(base.x0, equi.x0)
    assert [d.residual for d in base.diagnostics] == [d.residual for d in equi.diagnostics]


@pytest.mark.parametrize("A", [GrayMean((6, 6, 3)), AvgPoolSR((6, 6, 3), 2)], ids=lambda a: a.kind)
def test_equivariant_estimate_matches_standard_for_symmetric_prior(sched, A):
    prior = symmetrize(toy_mixture((6, 6, 3), 2, 1e-3, seed=8), TransformGroup([HFLIP]))
    y = A.apply(prior.sample(np.random.default_rng(9)))
    base = sample(y, A, prior, sched, SamplerConfig(nfe=10, seed=1))
    equi = sample(y, A, prior, sched, SamplerConfig(nfe=10, seed=1, equivariant=True))
    assert np.abs(base.x0 - equi.x0).max() <= 1e-8
    for a, b in zip(base.diagnostics, equi.diagnostics):
        assert abs(a.residual - b.residual) <= 1e-8 * max(1.0, a.residual)


@pytest.mark.parametrize(
    "A",
    [Mask(random_mask((8, 8, 1), 0.5, seed=1)), AvgPoolSR((8, 8, 1), 4), BlockCS((8, 8, 1), 0.25, seed=2)],
    ids=lambda a: a.kind,
)
def test_consistency_telemetry(sched, A):
    prior = toy_mixture((8, 8, 1), 3, 1e-3, seed=4)
    y = A.apply(prior.sample(np.random.default_rng(5)))
    for equivariant in (False, True):
        rep = sample(y, A, prior, sched, SamplerConfig(nfe=25, equivariant=equivariant, seed=2))
        assert max(d.residual_guided for d in rep.diagnostics) <= 1e-8
        assert rep.diagnostics[-1].residual < rep.diagnostics[0].residual
        assert all(d.residual >= 0 and np.isfinite(d.residual) for d in rep.diagnostics)
        r = A.apply(rep.x0) - y
        assert r @ r <= 1e-8


def test_wrong_entry_point(sched, problem):
    prior, A, y = problem
    with pytest.raises(ValueError):
        sample_baseline(y, A, prior, sched, SamplerConfig(equivariant=True))
    with pytest.raises(ValueError):
        sample_equs(y, A, prior, sched, SamplerConfig(equivariant=False))


def test_gradient_mode_counts_separately(sched):
    prior = toy_mixture((2, 2, 1), 2, 0.01, seed=6)
    A = Mask(random_mask((2, 2, 1), 0.5, seed=7))
    y = A.apply(prior.sample(np.random.default_rng(8)))
    cfg = SamplerConfig(nfe=5, guidance=GuidanceConfig(mode="gradient", weight=0.1))
    rep = sample(y, A, prior, sched, cfg)
    assert rep.nfe_used == 5
    assert rep.grad_evals == 5 * 2 * 4
    assert np.all(np.isfinite(rep.x0))


@pytest.mark.parametrize("mode", ["transpose", "none"])
def test_other_modes_run(sched, problem, mode):
    prior, A, y = problem
    rep = sample(y, A, prior, sched, SamplerConfig(nfe=8, guidance=GuidanceConfig(mode=mode)))
    assert rep.nfe_used == 8 and np.all(np.isfinite(rep.x0))


def test_noisy_weight_logged(sched, problem):
    prior, A, y = problem
    rep = sample(y, A, prior, sched, SamplerConfig(nfe=4, sigma_y=0.1))
    assert rep.guidance_weight == pytest.approx(1 / (1 + 0.01 * A.m))


def test_init_from_pinv_and_rederived_jump(sched, problem):
    prior, A, y = problem
    for cfg in (SamplerConfig(nfe=10, init_pinv=True), SamplerConfig(nfe=10, jump="rederived")):
        rep = sample(y, A, prior, sched, cfg)
        assert np.all(np.isfinite(rep.x0)) and rep.nfe_used == 10


def test_two_pixel_posterior_mean(sched):
    # K=1 isotropic prior, one of two pixels observed: the posterior mean is (y, mu_2)
    mu = np.array([0.3, 0.7]).reshape(1, 2, 1)
    var = 0.04
    prior = GaussianMixturePrior([1.0], mu[None], [var])
    mask = np.array([True, False]).reshape(1, 2, 1)
    A = Mask(mask)
    y = np.array([0.55])
    n = 10_000
    out = np.array([sample(y, A, prior, sched, SamplerConfig(nfe=10, seed=s)).x0.ravel() for s in range(n)])
    assert np.all(out[:, 0] == out[0, 0])
    se = out[:, 1].std(ddof=1) / np.sqrt(n)
    assert abs(out[:, 1].mean() - 0.7) < 3 * se
