"""Likelihood, Laplace fitting, sampling, and the grid quadrature oracle."""

import math
import warnings

import numpy as np
import pytest

import psyadapt.bayes as bayes_module
from psyadapt import (
    Dataset,
    Design,
    DomainError,
    ForcedChoice,
    GaussianPrior,
    GridSpec,
    GridTooCoarse,
    DegenerateFunctional,
    DegenerateWeights,
    LogFloorApplied,
    NonConvergence,
    NonPositiveDefiniteHessian,
    Params,
    Threshold,
    TrialRecord,
    YesNo,
    evaluate_functional,
    functional_samples,
    grid_posterior_oracle,
    importance_resample,
    laplace_fit,
    log_likelihood,
    log_likelihood_and_grad,
    log_posterior_unnorm,
    marginalize_lapse,
    posterior_entropy_gaussian,
    posterior_predictive_simulate,
    posterior_response_quantiles,
    predicted_response_prob,
    prior_to_laplace,
    psi,
    sample_laplace,
    weighted_quantile,
)
from oracles import fd_gradient, loglik_ref, weighted_quantile_ref

FC = Design(ForcedChoice(gamma=0.5), x_lo=-6.0, x_hi=10.0)
YN = Design(YesNo(), x_lo=-6.0, x_hi=10.0)
PAR = Params(mu=3.5, nu=0.5, eta=math.log(0.02 / 0.98))
PRIOR = GaussianPrior(
    mean=(3.0, 0.0, math.log(0.02 / 0.98)),
    sd=(math.sqrt(0.5), math.sqrt(0.5), 0.3),
)

XS6 = (2.0, 3.0, 3.5, 4.0, 4.5, 6.0)
RS6 = (0, 1, 1, 0, 1, 1)
# brute-force per-trial log probability sums from oracles.loglik_ref
LL6_FC = -3.3831301352749
LL6_YN = -3.219562566119003

XS12 = (3.0, 2.5, 4.0, 3.5, 3.2, 4.5, 2.8, 3.9, 3.1, 4.2, 3.6, 2.2)
RS12 = (1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0)
# trapezoid reference (oracles.grid_posterior_ref), 61 points/axis, +-5 prior sd
GRID12_MEAN = (3.298226, -0.248710, -3.892818)
GRID12_SD = (0.457192, 0.671087, 0.299851)


def make_dataset(xs, rs, design):
    data = Dataset(trials=(), design=design)
    for x, r in zip(xs, rs):
        data = data.append(float(x), int(r))
    return data


def simulate(par, design, xs, seed):
    rng = np.random.default_rng(seed)
    rs = [1 if rng.random() < psi(float(x), par, design) else 0 for x in xs]
    return make_dataset(xs, rs, design)


DATA6_FC = make_dataset(XS6, RS6, FC)
DATA6_YN = make_dataset(XS6, RS6, YN)
DATA12 = make_dataset(XS12, RS12, FC)


def test_log_likelihood_frozen_values():
    assert math.isclose(log_likelihood(DATA6_FC, PAR), LL6_FC, rel_tol=1e-12)
    assert math.isclose(log_likelihood(DATA6_YN, PAR), LL6_YN, rel_tol=1e-12)


def test_log_likelihood_matches_reference_on_random_inputs():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(1, 30))
        xs = rng.uniform(-6, 10, size=n)
        rs = rng.integers(0, 2, size=n)
        par = Params(
            mu=float(rng.uniform(-2, 6)),
            nu=float(rng.uniform(-1, 1)),
            eta=float(rng.uniform(-6, -1)),
        )
        data = make_dataset(xs, rs, FC)
        want = loglik_ref(xs, rs, par.mu, par.sigma, par.lam, "fc", 0.5)
        assert math.isclose(log_likelihood(data, par), want, rel_tol=1e-10, abs_tol=1e-10)


def test_log_likelihood_additive_over_partitions():
    """Sequential accumulation and one-shot fit see the same surface."""
    rng = np.random.default_rng(9)
    data = simulate(PAR, FC, rng.uniform(-2, 8, size=40), seed=2)
    head = make_dataset([t.x for t in data.trials[:17]], [t.r for t in data.trials[:17]], FC)
    tail = make_dataset([t.x for t in data.trials[17:]], [t.r for t in data.trials[17:]], FC)
    for _ in range(100):
        pa = Params(
            mu=float(rng.uniform(0, 6)),
            nu=float(rng.uniform(-1, 1)),
            eta=float(rng.uniform(-6, -2)),
        )
        pb = Params(
            mu=float(rng.uniform(0, 6)),
            nu=float(rng.uniform(-1, 1)),
            eta=float(rng.uniform(-6, -2)),
        )
        split_diff = (
            log_likelihood(head, pa) + log_likelihood(tail, pa)
            + log_posterior_unnorm(Dataset(trials=(), design=FC), PRIOR, pa)
        ) - (
            log_likelihood(head, pb) + log_likelihood(tail, pb)
            + log_posterior_unnorm(Dataset(trials=(), design=FC), PRIOR, pb)
        )
        whole_diff = log_posterior_unnorm(data, PRIOR, pa) - log_posterior_unnorm(data, PRIOR, pb)
        assert math.isclose(split_diff, whole_diff, rel_tol=1e-10, abs_tol=1e-10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(13)
    for design in (FC, YN):
        data = simulate(PAR, design, rng.uniform(-2, 8, size=25), seed=3)
        for _ in range(40):
            par = Params(
                mu=float(rng.uniform(0, 6)),
                nu=float(rng.uniform(-1, 1)),
                eta=float(rng.uniform(-5, -2)),
            )
            _, grad = log_likelihood_and_grad(data, par)

            def f(v):
                return log_likelihood(data, Params(*v))

            want = fd_gradient(f, [par.mu, par.nu, par.eta], h=1e-6)
            np.testing.assert_allclose(grad, want, rtol=2e-5, atol=2e-6)


def test_log_posterior_is_sum_of_parts():
    val = log_posterior_unnorm(DATA6_FC, PRIOR, PAR)
    want = log_likelihood(DATA6_FC, PAR) + PRIOR.log_density(PAR)
    assert math.isclose(val, want, rel_tol=1e-12)


def test_flat_prior_limit():
    wide = GaussianPrior(mean=PRIOR.mean, sd=(1e8, 1e8, 1e8))
    pa = Params(3.0, 0.2, -4.0)
    pb = Params(4.0, -0.3, -3.5)
    lp_diff = log_posterior_unnorm(DATA6_FC, wide, pa) - log_posterior_unnorm(DATA6_FC, wide, pb)
    ll_diff = log_likelihood(DATA6_FC, pa) - log_likelihood(DATA6_FC, pb)
    assert math.isclose(lp_diff, ll_diff, rel_tol=1e-9, abs_tol=1e-9)


def test_laplace_on_empty_data_is_the_prior():
    lp = laplace_fit(Dataset(trials=(), design=FC), PRIOR)
    np.testing.assert_allclose(lp.mode_array, PRIOR.mean_array, atol=1e-8)
    np.testing.assert_allclose(lp.covariance, np.diag(PRIOR.sd_array**2), atol=1e-8)
    ref = prior_to_laplace(PRIOR)
    np.testing.assert_allclose(lp.mode_array, ref.mode_array, atol=1e-10)
    np.testing.assert_allclose(lp.covariance, ref.covariance, atol=1e-10)


def test_laplace_gradient_zero_at_mode():
    lp = laplace_fit(DATA12, PRIOR)
    _, grad = log_likelihood_and_grad(DATA12, lp.mode)
    prior_grad = -(lp.mode_array - PRIOR.mean_array) / PRIOR.sd_array**2
    standardized = (grad + prior_grad) * PRIOR.sd_array
    assert float(np.linalg.norm(standardized)) < 1e-6


def test_laplace_recovers_truth_with_many_trials():
    rng = np.random.default_rng(17)
    xs = np.concatenate([rng.uniform(1.5, 6.0, size=150), rng.uniform(-2, 9, size=50)])
    data = simulate(PAR, FC, xs, seed=4)
    lp = laplace_fit(data, PRIOR)
    for j, truth in enumerate((PAR.mu, PAR.nu, PAR.eta)):
        sd = lp.standard_deviations[j]
        assert abs(lp.mode_array[j] - truth) < 3.0 * sd + 1e-9


def test_laplace_deterministic_and_warm_start_consistent():
    a = laplace_fit(DATA12, PRIOR)
    b = laplace_fit(DATA12, PRIOR)
    np.testing.assert_array_equal(a.mode_array, b.mode_array)
    np.testing.assert_array_equal(a.covariance, b.covariance)
    warm = laplace_fit(DATA12, PRIOR, warm_start=a.mode, full_multistart=False)
    np.testing.assert_allclose(warm.mode_array, a.mode_array, atol=1e-6)


def test_log_concavity_near_mode_with_small_fixed_lapse():
    """With eta pinned low, the (mu, nu) surface is concave near its own mode.

    Concavity in (mu, log sigma) is a local property: the guarantee from the
    canonical probit parameterization survives within about half a posterior
    sd of the slice mode (probed: positive definite at 0.5 sd, indefinite by
    1.0 sd), so the points are drawn at 0.5 sd.
    """
    rng = np.random.default_rng(21)
    data = simulate(Params(3.5, 0.5, -6.0), FC, rng.uniform(0, 7, size=80), seed=6)
    pinned = GaussianPrior(mean=(3.0, 0.0, -6.0), sd=(math.sqrt(0.5), math.sqrt(0.5), 1e-6))
    lp = laplace_fit(data, pinned)
    h = 1e-5
    for _ in range(100):
        # uniform inside the 0.5-sd ellipse, keeping every probe point "near"
        angle = rng.uniform(0.0, 2.0 * math.pi)
        radius = 0.5 * math.sqrt(rng.uniform())
        mu = lp.mode.mu + radius * math.cos(angle) * lp.standard_deviations[0]
        nu = lp.mode.nu + radius * math.sin(angle) * lp.standard_deviations[1]

        def f(v):
            return log_posterior_unnorm(data, pinned, Params(v[0], v[1], -6.0))

        hess = np.zeros((2, 2))
        base = [mu, nu]
        for a in range(2):
            for b in range(2):
                pp = list(base)
                pm = list(base)
                mp = list(base)
                mm = list(base)
                pp[a] += h
                pp[b] += h
                pm[a] += h
                pm[b] -= h
                mp[a] -= h
                mp[b] += h
                mm[a] -= h
                mm[b] -= h
                hess[a, b] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h)
        eigs = np.linalg.eigvalsh(-0.5 * (hess + hess.T))
        assert np.all(eigs > 0)


def test_nonpositive_definite_hessian_on_absurd_prior_scale():
    # an eta prior sd of 1e6 makes the standardized FD step span ~100 raw
    # units, so the curvature read at the mode is garbage and must be refused
    rng = np.random.default_rng(3)
    xs = np.linspace(0, 7, 30)
    data = simulate(PAR, FC, xs, seed=8)
    wild = GaussianPrior(mean=(3.0, 0.0, -3.89), sd=(0.7071, 0.7071, 1e6))
    with pytest.raises(NonPositiveDefiniteHessian):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            laplace_fit(data, wild)


def test_nonconvergence_surfaces_when_all_starts_stall(monkeypatch):
    """Plumbing check: an exhausted retry budget raises instead of returning junk."""
    from psyadapt.optimize import MaximizeResult

    def stalled(value_and_grad, x0, grad_tol=1e-6, max_iter=200):
        x = np.asarray(x0, dtype=float)
        f, g = value_and_grad(x)
        return MaximizeResult(x=x, value=f, grad_norm=1.0, iterations=max_iter, converged=False)

    monkeypatch.setattr(bayes_module, "maximize", stalled)
    with pytest.raises(NonConvergence):
        laplace_fit(DATA12, PRIOR)


def test_grid_oracle_matches_independent_reference():
    gp = grid_posterior_oracle(DATA12, PRIOR)
    np.testing.assert_allclose(gp.mean, GRID12_MEAN, atol=5e-3)
    np.testing.assert_allclose(np.sqrt(np.diag(gp.covariance)), GRID12_SD, rtol=2e-2)


def test_grid_oracle_empty_data_reproduces_prior():
    gp = grid_posterior_oracle(Dataset(trials=(), design=FC), PRIOR)
    np.testing.assert_allclose(gp.mean, PRIOR.mean_array, atol=1e-6)
    np.testing.assert_allclose(
        np.diag(gp.covariance), PRIOR.sd_array**2, rtol=1e-2
    )


def test_grid_oracle_validation_and_failure_paths():
    with pytest.raises(DomainError):
        GridSpec(points_per_axis=3)
    with pytest.raises(DomainError):
        GridSpec(span_sd=2.0)  # must cover >= 6 prior sd
    coarse = GridSpec(points_per_axis=7, span_sd=4.0, refine_check=True, refine_tol_sd=1e-4)
    rng = np.random.default_rng(25)
    data = simulate(PAR, FC, rng.uniform(1, 6, size=60), seed=9)
    with pytest.raises(GridTooCoarse):
        grid_posterior_oracle(data, PRIOR, coarse)
    # a denser grid passes the same check once tolerance matches resolution
    ok = GridSpec(points_per_axis=21, span_sd=4.0, refine_check=True, refine_tol_sd=0.05)
    grid_posterior_oracle(data, PRIOR, ok)


def test_laplace_mode_near_grid_mean_on_small_dataset():
    lp = laplace_fit(DATA12, PRIOR)
    # twelve trials leave visible skew (mode vs mean separation ~0.3 sd in
    # nu), so this only pins the neighborhood; the tight agreement gate runs
    # on 50-trial datasets in the acceptance suite
    for j in range(3):
        assert abs(lp.mode_array[j] - GRID12_MEAN[j]) < 0.5 * PRIOR.sd_array[j]


def test_sample_laplace_moments_and_determinism():
    lp = laplace_fit(DATA12, PRIOR)
    s = sample_laplace(lp, 50000, seed=42)
    assert s.n == 50000
    np.testing.assert_array_equal(s.weights, np.full(50000, 1.0 / 50000))
    for j, name in enumerate(("mu", "nu", "eta")):
        col = s.column(name)
        se = lp.standard_deviations[j] / math.sqrt(s.n)
        assert abs(float(col.mean()) - lp.mode_array[j]) < 4.0 * se
    emp_cov = np.cov(s.samples.T)
    rel = np.linalg.norm(emp_cov - lp.covariance) / np.linalg.norm(lp.covariance)
    assert rel < 0.05
    again = sample_laplace(lp, 50000, seed=42)
    np.testing.assert_array_equal(s.samples, again.samples)
    other = sample_laplace(lp, 50000, seed=43)
    assert not np.array_equal(s.samples, other.samples)


def test_importance_resample_constant_ratio_is_uniform():
    lp = prior_to_laplace(PRIOR)
    src = sample_laplace(lp, 4000, seed=1)

    def logq(par):
        return PRIOR.log_density(par)

    out = importance_resample(src, logq, logq, k=1000, seed=2)
    assert out.n == 1000
    np.testing.assert_allclose(out.weights, 1.0 / 1000)
    # without replacement from its own draws: every sample unique
    assert len({tuple(row) for row in out.samples}) == 1000


def test_importance_resample_shifts_toward_target():
    """Proposal N(0,1) on mu, target N(0.5,1): the resampled mean moves to 0.5.

    Without-replacement draws shrink toward the proposal once k is a sizable
    fraction of the effective sample size, so the unbiased claim is asserted
    at k << ESS and the k = 0.32*ESS case is pinned against an independent
    Gumbel top-k oracle of the same semantics (mean 0.428 +- 0.009 over 30
    oracle replicates; see decisions ledger).
    """
    lp = prior_to_laplace(GaussianPrior(mean=(0.0, 0.0, -4.0), sd=(1.0, 0.5, 0.3)))
    src = sample_laplace(lp, 20000, seed=3)

    def logp(par):  # target shifts mu by +0.5
        return -0.5 * ((par.mu - 0.5) ** 2 + (par.nu / 0.5) ** 2 + ((par.eta + 4.0) / 0.3) ** 2)

    def logq(par):
        return -0.5 * ((par.mu) ** 2 + (par.nu / 0.5) ** 2 + ((par.eta + 4.0) / 0.3) ** 2)

    small = importance_resample(src, logp, logq, k=1000, seed=4)
    assert abs(float(small.column("mu").mean()) - 0.5) < 0.05
    large = importance_resample(src, logp, logq, k=5000, seed=5)
    assert abs(float(large.column("mu").mean()) - 0.428) < 0.03


def test_importance_resample_contract_errors():
    lp = prior_to_laplace(PRIOR)
    src = sample_laplace(lp, 200, seed=5)

    def logq(par):
        return PRIOR.log_density(par)

    with pytest.raises(DomainError):
        importance_resample(src, logq, logq, k=200, seed=6)  # k must be < n

    def spike(par):  # one sample soaks up all the mass
        return 0.0 if abs(par.mu - src.samples[0, 0]) < 1e-12 else -1e6

    with pytest.raises(DegenerateWeights):
        importance_resample(src, spike, lambda p: 0.0, k=50, seed=7)


def test_marginalize_lapse_projection():
    lp = laplace_fit(DATA12, PRIOR)
    s = sample_laplace(lp, 20000, seed=11)
    m = marginalize_lapse(s)
    assert m.components == ("mu", "nu")
    assert m.n == s.n
    np.testing.assert_allclose(m.weights, s.weights, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(m.column("mu"), s.column("mu"))
    with pytest.raises(DomainError):
        m.column("eta")
    # Gaussian marginalization keeps the top-left covariance block; atol
    # covers ~4 Monte-Carlo sd of a covariance entry at n=20000
    emp = np.cov(m.samples.T)
    np.testing.assert_allclose(emp, lp.covariance[:2, :2], rtol=0.08, atol=8e-3)


def test_posterior_entropy_gaussian_closed_form():
    lp = prior_to_laplace(PRIOR)
    want = sum(
        0.5 * math.log(2.0 * math.pi * math.e * s * s) for s in PRIOR.sd_array
    )
    assert math.isclose(posterior_entropy_gaussian(lp), want, rel_tol=1e-12)


def test_entropy_decreases_with_data():
    """Longer stationary sessions end tighter, run over many seeds."""
    rng = np.random.default_rng(33)
    hits = 0
    runs = 100
    for k in range(runs):
        xs = rng.uniform(0.5, 6.5, size=400)
        data = simulate(PAR, FC, xs, seed=(77, k))
        short = laplace_fit(Dataset(trials=data.trials[:50], design=FC), PRIOR)
        long = laplace_fit(data, PRIOR)
        if posterior_entropy_gaussian(long) < posterior_entropy_gaussian(short):
            hits += 1
    assert hits >= 95


def test_predicted_response_prob_is_weighted_mean_of_curves():
    samples = np.array([[3.0, 0.0, -4.0], [4.0, 0.5, -3.0]])
    from psyadapt.bayes import SampleSet

    s = SampleSet(samples=samples, weights=np.array([0.25, 0.75]))
    x = 3.5
    want = 0.25 * psi(x, Params(3.0, 0.0, -4.0), FC) + 0.75 * psi(x, Params(4.0, 0.5, -3.0), FC)
    assert math.isclose(float(predicted_response_prob(s, x, FC)), want, rel_tol=1e-12)


def test_functional_samples_drop_policy():
    from psyadapt.bayes import SampleSet

    # high-lapse samples put the 0.75 level out of reach (ceiling < 0.75);
    # two bad samples in a hundred exceed the 1% drop budget
    samples = np.array(
        [[3.0, 0.0, -4.0]] * 98 + [[3.0, 0.0, 1.0]] * 2
    )
    s = SampleSet(samples=samples, weights=np.full(100, 0.01))
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        with pytest.raises(DegenerateFunctional):
            functional_samples(s, Threshold(0.75), FC)
    # at or below the 1% budget the sample is dropped and counted
    samples_ok = np.array([[3.0, 0.0, -4.0]] * 100 + [[3.0, 0.0, 1.0]])
    s_ok = SampleSet(samples=samples_ok, weights=np.full(101, 1.0 / 101))
    fs = functional_samples(s_ok, Threshold(0.75), FC)
    assert fs.dropped == 1
    assert fs.values.shape == (100,)
    want = evaluate_functional(Threshold(0.75), Params(3.0, 0.0, -4.0), FC)
    np.testing.assert_allclose(fs.values, want)


def test_weighted_quantile_frozen_and_reference():
    # equally weighted two-point set: the median interpolates halfway
    med = weighted_quantile(np.array([0.6, 0.9]), np.array([1.0, 1.0]), [0.5])
    assert math.isclose(float(med[0]), 0.75, rel_tol=1e-12)
    vals = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    ws = np.array([1.0, 1.0, 2.0, 1.0, 1.0])
    got = weighted_quantile(vals, ws, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(got, [2.0, 3.0, 4.0], atol=1e-12)
    rng = np.random.default_rng(41)
    for _ in range(60):
        n = int(rng.integers(2, 40))
        v = rng.normal(size=n)
        w = rng.uniform(0.1, 3.0, size=n)
        for p in rng.uniform(0.01, 0.99, size=4):
            want = weighted_quantile_ref(list(v), list(w), float(p))
            got = float(weighted_quantile(v, w, [float(p)])[0])
            assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-9)


def test_weighted_quantile_edges_clamp_to_extremes():
    v = np.array([1.0, 2.0, 3.0])
    w = np.array([1.0, 1.0, 1.0])
    got = weighted_quantile(v, w, [0.0001, 0.9999])
    assert got[0] == 1.0
    assert got[1] == 3.0


def test_posterior_response_quantiles_shape_and_order():
    lp = laplace_fit(DATA12, PRIOR)
    s = sample_laplace(lp, 3000, seed=13)
    xg = np.linspace(-2.0, 8.0, 21)
    probs = (0.025, 0.5, 0.975)
    bands = posterior_response_quantiles(s, xg, probs, FC)
    assert bands.shape == (21, 3)
    # quantile levels are ordered at every stimulus
    assert np.all(bands[:, 0] <= bands[:, 1])
    assert np.all(bands[:, 1] <= bands[:, 2])
    # curves rise with x, so the median band does too
    assert bands[0, 1] < bands[-1, 1]
    assert np.all(bands >= 0.5 - 1e-12)
    assert np.all(bands <= 1.0)


def test_posterior_predictive_simulate_contract():
    lp = laplace_fit(DATA12, PRIOR)
    s = sample_laplace(lp, 2000, seed=15)
    xs = list(XS12)
    reps = posterior_predictive_simulate(s, xs, 50, seed=7, design=FC)
    assert len(reps) == 50
    for rep in reps:
        assert [t.x for t in rep.trials] == xs
        assert set(t.r for t in rep.trials) <= {0, 1}
    again = posterior_predictive_simulate(s, xs, 50, seed=7, design=FC)
    for a, b in zip(reps, again):
        assert [t.r for t in a.trials] == [t.r for t in b.trials]
    # degenerate sample set: a single theta with known psi values
    from psyadapt.bayes import SampleSet

    one = SampleSet(samples=np.array([[3.5, 0.5, math.log(0.02 / 0.98)]]))
    level = evaluate_functional(Threshold(0.75), PAR, FC)
    sims = posterior_predictive_simulate(one, [level] * 200, 100, seed=8, design=FC)
    mean_rate = float(np.mean([np.mean([t.r for t in rep.trials]) for rep in sims]))
    assert abs(mean_rate - 0.75) < 0.02


def test_log_floor_warning_fires_once_per_fit():
    # yes/no with lambda pinned essentially at zero makes psi hit 1 exactly
    data = make_dataset([10.0] * 5, [1] * 5, YN)
    pinned = Params(mu=-30.0, nu=-2.0, eta=-745.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        log_likelihood(data, pinned)
    assert any(issubclass(w.category, LogFloorApplied) for w in caught)


def test_trial_record_validation():
    with pytest.raises(DomainError):
        TrialRecord(x=0.0, r=2, index=1)
    with pytest.raises(DomainError):
        TrialRecord(x=0.0, r=0, index=0)
    with pytest.raises(DomainError):
        TrialRecord(x=float("nan"), r=0, index=1)


def test_prior_validation():
    with pytest.raises(DomainError):
        GaussianPrior(mean=(0.0, 0.0, 0.0), sd=(0.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        GaussianPrior(mean=(float("inf"), 0.0, 0.0), sd=(1.0, 1.0, 1.0))


def test_threshold_pushforward_matches_change_of_variables_density():
    # lambda held fixed so Threshold(0.9) is the closed map mu + exp(nu)*zstar;
    # the sample pushforward must match the grid change-of-variables CDF
    from psyadapt.bayes import SampleSet
    from oracles import ks_distance_ref, normal_quantile, threshold_pushforward_cdf_ref

    lam = 0.02
    eta = math.log(lam / (1.0 - lam))
    zstar = normal_quantile((0.9 - 0.5) / (0.5 * (1.0 - lam)))
    taus, cdf = threshold_pushforward_cdf_ref(
        3.0, math.sqrt(0.5), 0.0, math.sqrt(0.5), zstar
    )

    rng = np.random.default_rng(4501)
    n = 50000
    mu = rng.normal(3.0, math.sqrt(0.5), n)
    nu = rng.normal(0.0, math.sqrt(0.5), n)
    s = SampleSet(samples=np.column_stack([mu, nu, np.full(n, eta)]))
    fs = functional_samples(s, Threshold(0.9), FC)
    assert fs.dropped == 0
    # the pushforward is exactly that closed map, sample by sample
    np.testing.assert_allclose(fs.values, mu + np.exp(nu) * zstar, atol=1e-12)
    assert ks_distance_ref(fs.values, taus, cdf) < 0.02


def test_importance_resample_corrects_skewed_nu_marginal():
    # ten trials at one level constrain only (x - mu)/sigma, leaving a
    # ridge-shaped posterior whose log-sigma marginal the Gaussian
    # approximation misses; resampling against the exact density must pull
    # the draws toward the grid-oracle marginal for most seeds
    from oracles import grid_marginal_cdf_ref, ks_distance_ref

    xs = [4.0] * 10
    rs = [1, 1, 0, 1, 1, 1, 0, 1, 1, 1]
    data = make_dataset(xs, rs, FC)
    lp = laplace_fit(data, PRIOR)

    axis, cdf = grid_marginal_cdf_ref(
        xs, rs, PRIOR.mean, PRIOR.sd, span_sd=6.0, n=61, kind="fc", gamma=0.5, component=1
    )

    cov_inv = np.linalg.inv(lp.covariance)
    _, logdet = np.linalg.slogdet(lp.covariance)
    mode = lp.mode_array

    def proposal_logpdf(par):
        d = np.array([par.mu, par.nu, par.eta]) - mode
        return float(-0.5 * (d @ cov_inv @ d) - 0.5 * logdet - 1.5 * math.log(2.0 * math.pi))

    def target_logpdf(par):
        return log_posterior_unnorm(data, PRIOR, par)

    raw_ks, res_ks = [], []
    for s_i in range(20):
        src = sample_laplace(lp, 4000, seed=(9000, s_i))
        res = importance_resample(src, target_logpdf, proposal_logpdf, k=2000, seed=(9001, s_i))
        raw_ks.append(ks_distance_ref(src.samples[:, 1], axis, cdf))
        res_ks.append(ks_distance_ref(res.samples[:, 1], axis, cdf))

    wins = sum(1 for a, b in zip(raw_ks, res_ks) if b < a)
    assert wins >= 15
    # the raw approximation error is real, not sampling noise, and
    # resampling removes most of it
    assert float(np.median(raw_ks)) > 0.05
    assert float(np.median(res_ks)) < 0.6 * float(np.median(raw_ks))
