"""Tests for information-based stimulus selection and stopping rules.

Frozen values computed with tests/oracles.py (kt_expected_entropy,
t_mi_gaussian_ref) before these tests were written.
"""

import math
import warnings

import numpy as np
import pytest

import oracles as orc
from psyadapt.bayes import (
    Dataset,
    GaussianPrior,
    LaplacePosterior,
    SampleSet,
    functional_samples,
    laplace_fit,
    posterior_entropy_gaussian,
    sample_laplace,
)
from psyadapt.errors import AllZeroInformation, DegenerateVariance, DomainError
from psyadapt.placement import (
    ESTIMATOR_GAUSSIAN,
    ESTIMATOR_KDE,
    EntropyBelow,
    FixedTrials,
    ProbabilityWithin,
    PsiPolicy,
    StimulusGrid,
    TPolicy,
    bernoulli_entropy,
    multi_threshold_policy,
    psi_information,
    select_next,
    should_stop,
    t_information,
)
from psyadapt.psychometric import Custom, Design, ForcedChoice, Params, Threshold, Width

DESIGN = Design(ForcedChoice(0.5), -6.0, 10.0)
PRIOR = GaussianPrior(
    mean=(3.0, 0.0, math.log(0.02 / 0.98)),
    sd=(math.sqrt(0.5), math.sqrt(0.5), 0.3),
)

# kt_expected_entropy on weights (0.2, 0.5, 0.3), response probs
# (0.55, 0.75, 0.95): mutual information of the next response.
TOY_PSI_MI = 0.06092643344116677
# t_mi_gaussian_ref with functional values (1, 2, 4) on the same atoms.
TOY_T_MI = 0.07843011911781739
BERN_025 = 0.5623351446188083

TOY_WEIGHTS = (0.2, 0.5, 0.3)
TOY_PROBS = (0.55, 0.75, 0.95)
TOY_X = 3.0
TOY_ETA = -6.0


def make_dataset(xs, rs, design):
    data = Dataset(trials=(), design=design)
    for x, r in zip(xs, rs):
        data = data.append(float(x), int(r))
    return data


def toy_sample_set():
    """Three atoms whose response probabilities at TOY_X are exactly TOY_PROBS.

    sigma = 1, lapse from TOY_ETA; mu solved by inverting the response
    probability with the independent quantile routine.
    """
    lam = 1.0 / (1.0 + math.exp(-TOY_ETA))
    mus = []
    for p in TOY_PROBS:
        phi = (p - 0.5) / ((1.0 - lam) * 0.5)
        mus.append(TOY_X - orc.normal_quantile(phi))
    samples = np.array([[m, 0.0, TOY_ETA] for m in mus])
    return SampleSet(samples=samples, weights=np.array(TOY_WEIGHTS))


@pytest.fixture(scope="module")
def fitted_lp():
    data = make_dataset(
        [2.0, 3.0, 3.5, 4.0, 4.5, 6.0], [0, 1, 1, 0, 1, 1], DESIGN
    )
    return laplace_fit(data, PRIOR)


class TestBernoulliEntropy:
    def test_frozen_values(self):
        assert bernoulli_entropy(0.25) == pytest.approx(BERN_025, abs=1e-14)
        assert bernoulli_entropy(0.5) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_endpoints_are_exactly_zero(self):
        assert bernoulli_entropy(0.0) == 0.0
        assert bernoulli_entropy(1.0) == 0.0

    def test_symmetry_and_vectorization(self):
        p = np.linspace(0.0, 1.0, 21)
        h = bernoulli_entropy(p)
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)
        assert h[10] == pytest.approx(math.log(2.0), abs=1e-15)
        for i, v in enumerate(p):
            assert bernoulli_entropy(float(v)) == pytest.approx(h[i], abs=1e-15)

    @pytest.mark.parametrize("bad", [-0.01, 1.01])
    def test_rejects_outside_unit_interval(self, bad):
        with pytest.raises(DomainError):
            bernoulli_entropy(bad)


class TestStimulusGrid:
    def test_over_spans_design(self):
        g = StimulusGrid.over(DESIGN, points=45)
        assert g.levels[0] == DESIGN.x_lo
        assert g.levels[-1] == DESIGN.x_hi
        assert len(g.levels) == 45
        assert g.spacing == pytest.approx(16.0 / 44.0, abs=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            StimulusGrid(levels=(1.0,))
        with pytest.raises(DomainError):
            StimulusGrid(levels=(1.0, 1.0))
        with pytest.raises(DomainError):
            StimulusGrid(levels=(2.0, 1.0))
        with pytest.raises(DomainError):
            StimulusGrid(levels=(1.0, 2.0), refine_rounds=-1)
        with pytest.raises(DomainError):
            StimulusGrid(levels=(1.0, 2.0), refine_shrink=0.0)
        with pytest.raises(DomainError):
            StimulusGrid(levels=(1.0, 2.0), refine_shrink=1.0)


class TestPolicyValidation:
    def test_sample_count_floor(self):
        g = StimulusGrid.over(DESIGN)
        with pytest.raises(DomainError):
            PsiPolicy(grid=g, sample_count=99)
        with pytest.raises(DomainError):
            TPolicy(functional=Threshold(0.75), grid=g, sample_count=50)

    def test_unknown_estimator(self):
        g = StimulusGrid.over(DESIGN)
        with pytest.raises(DomainError):
            TPolicy(functional=Threshold(0.75), grid=g, estimator="parzen")

    def test_defaults(self):
        g = StimulusGrid.over(DESIGN)
        assert PsiPolicy(grid=g).approximate is False
        assert TPolicy(functional=Threshold(0.75), grid=g).estimator == ESTIMATOR_GAUSSIAN


class TestPsiInformation:
    def test_frozen_toy_value(self):
        s = toy_sample_set()
        assert psi_information(TOY_X, s, DESIGN) == pytest.approx(TOY_PSI_MI, abs=1e-12)

    def test_matches_entropy_decomposition_oracle(self):
        # MI = h(p_bar) - E h(p), computed independently per sample with the
        # pure-python curve and entropy routines.
        rng = np.random.default_rng(4201)
        for _ in range(20):
            n = int(rng.integers(3, 30))
            samples = np.column_stack(
                [
                    rng.normal(3.0, 0.7, n),
                    rng.normal(0.0, 0.5, n),
                    rng.normal(-3.9, 0.3, n),
                ]
            )
            w = rng.random(n) + 0.05
            w = w / w.sum()
            s = SampleSet(samples=samples, weights=w)
            x = float(rng.uniform(-2.0, 8.0))
            probs = [
                orc.psi_fc(x, mu, math.exp(nu), 1.0 / (1.0 + math.exp(-eta)), 0.5)
                for mu, nu, eta in samples
            ]
            _, mi_ref = orc.kt_expected_entropy(list(w), probs)
            assert psi_information(x, s, DESIGN) == pytest.approx(mi_ref, abs=1e-10)

    def test_nonnegative_over_grid(self, fitted_lp):
        s = sample_laplace(fitted_lp, 2000, seed=21)
        vals = psi_information(np.linspace(-6.0, 10.0, 30), s, DESIGN)
        assert np.all(vals >= -1e-12)

    def test_scalar_and_vector_agree(self, fitted_lp):
        s = sample_laplace(fitted_lp, 500, seed=22)
        xs = np.array([1.0, 3.5, 6.0])
        vec = psi_information(xs, s, DESIGN)
        # Summation order differs between the batched and single-column
        # matrix products, so agreement is to rounding, not bitwise.
        for i, x in enumerate(xs):
            assert psi_information(float(x), s, DESIGN) == pytest.approx(
                float(vec[i]), abs=1e-12
            )


class TestTInformation:
    def test_frozen_toy_value(self):
        # A custom functional pinning values (1, 2, 4) onto the toy atoms.
        s = toy_sample_set()
        order = np.argsort(s.samples[:, 0])
        xp = s.samples[order, 0]
        fp = np.array([1.0, 2.0, 4.0])[order]
        f = Custom(fn=lambda par: float(np.interp(par.mu, xp, fp)), label="toy")
        got = t_information(TOY_X, s, f, DESIGN, ESTIMATOR_GAUSSIAN)
        assert got == pytest.approx(TOY_T_MI, abs=1e-12)

    def test_width_uses_log_scale(self):
        # The width functional is log-transformed before the variance
        # decomposition; verify against the oracle fed log widths computed
        # from the independent inverse.
        rng = np.random.default_rng(4202)
        n = 12
        samples = np.column_stack(
            [rng.normal(3.0, 0.5, n), rng.normal(0.0, 0.4, n), np.full(n, -4.0)]
        )
        w = rng.random(n) + 0.1
        w = w / w.sum()
        s = SampleSet(samples=samples, weights=w)
        x = 3.2
        lam = 1.0 / (1.0 + math.exp(4.0))

        def inv(level, mu, sigma):
            phi = (level - 0.5) / ((1.0 - lam) * 0.5)
            return mu + sigma * orc.normal_quantile(phi)

        log_widths = []
        probs = []
        for mu, nu, eta in samples:
            sigma = math.exp(nu)
            log_widths.append(math.log(inv(0.95, mu, sigma) - inv(0.55, mu, sigma)))
            probs.append(orc.psi_fc(x, mu, sigma, lam, 0.5))
        ref = orc.t_mi_gaussian_ref(log_widths, list(w), probs)
        got = t_information(x, s, Width(0.05), DESIGN)
        assert got == pytest.approx(ref, abs=1e-10)

    def test_zero_when_functional_has_no_variance(self):
        s = SampleSet(
            samples=np.tile([[3.5, 0.0, -6.0]], (5, 1)), weights=np.full(5, 0.2)
        )
        assert t_information(3.0, s, Threshold(0.75), DESIGN) == 0.0

    def test_conditional_collapse_raises(self):
        # One atom saturated at the ceiling with a tiny lapse: conditional on
        # r = 0 the functional is a point mass, below the variance floor.
        s = SampleSet(
            samples=np.array([[-10.0, 0.0, -40.0], [5.0, 0.0, -40.0]]),
            weights=np.array([0.5, 0.5]),
        )
        with pytest.raises(DegenerateVariance):
            t_information(5.0, s, Threshold(0.75), DESIGN)

    def test_unknown_estimator_rejected(self):
        s = toy_sample_set()
        with pytest.raises(DomainError):
            t_information(TOY_X, s, Threshold(0.75), DESIGN, estimator="spline")

    def test_kde_estimator_tracks_gaussian(self, fitted_lp):
        # On a near-Gaussian posterior functional both estimators rank the
        # same level first.
        grid = StimulusGrid.over(DESIGN, points=13, refine_rounds=1)
        xg, _ = select_next(
            TPolicy(functional=Threshold(0.75), grid=grid, sample_count=600),
            fitted_lp,
            DESIGN,
            seed=11,
        )
        xk, _ = select_next(
            TPolicy(
                functional=Threshold(0.75),
                grid=grid,
                estimator=ESTIMATOR_KDE,
                sample_count=600,
            ),
            fitted_lp,
            DESIGN,
            seed=11,
        )
        assert xk == pytest.approx(xg, abs=1e-12)


class TestSelectNext:
    def test_deterministic_given_seed(self, fitted_lp):
        pol = PsiPolicy(grid=StimulusGrid.over(DESIGN, points=17), sample_count=800)
        x1, c1 = select_next(pol, fitted_lp, DESIGN, seed=42)
        x2, c2 = select_next(pol, fitted_lp, DESIGN, seed=42)
        assert x1 == x2
        np.testing.assert_array_equal(c1.values, c2.values)
        np.testing.assert_array_equal(c1.levels, c2.levels)

    def test_common_random_numbers_contract(self, fitted_lp):
        # With no refinement the cost curve must equal psi_information on
        # the same posterior draw, bit for bit.
        grid = StimulusGrid.over(DESIGN, points=17, refine_rounds=0)
        pol = PsiPolicy(grid=grid, sample_count=800)
        x, curve = select_next(pol, fitted_lp, DESIGN, seed=42)
        s = sample_laplace(fitted_lp, 800, seed=42)
        ref = psi_information(np.asarray(grid.levels), s, DESIGN)
        np.testing.assert_array_equal(curve.values, ref)
        assert x == curve.levels[curve.chosen]

    def test_chosen_indexes_the_maximum(self, fitted_lp):
        for seed in range(5):
            for pol in (
                PsiPolicy(grid=StimulusGrid.over(DESIGN, points=15), sample_count=400),
                TPolicy(
                    functional=Threshold(0.75),
                    grid=StimulusGrid.over(DESIGN, points=15),
                    sample_count=400,
                ),
            ):
                x, curve = select_next(pol, fitted_lp, DESIGN, seed=seed)
                assert curve.chosen == int(np.argmax(curve.values))
                assert x == curve.levels[curve.chosen]
                assert curve.values[curve.chosen] == curve.values.max()

    def test_refinement_shrinks_spacing_and_improves(self, fitted_lp):
        coarse = StimulusGrid.over(DESIGN, points=17, refine_rounds=0)
        fine = StimulusGrid.over(DESIGN, points=17, refine_rounds=2, refine_shrink=0.2)
        xa, ca = select_next(
            PsiPolicy(grid=coarse, sample_count=800), fitted_lp, DESIGN, seed=7
        )
        xb, cb = select_next(
            PsiPolicy(grid=fine, sample_count=800), fitted_lp, DESIGN, seed=7
        )
        # Final grid spacing shrunk by shrink^rounds.
        np.testing.assert_allclose(
            np.diff(cb.levels), coarse.spacing * 0.2**2, rtol=1e-9
        )
        # Odd point count keeps the incumbent on each refined grid, so with
        # common random numbers the achieved maximum cannot decrease.
        assert cb.values.max() >= ca.values.max() - 1e-15
        assert abs(xb - xa) <= coarse.spacing

    def test_refined_grid_respects_design_bounds(self):
        lp = LaplacePosterior(
            mode=Params(9.9, 0.0, -3.9),
            covariance=np.diag([0.25, 0.25, 0.09]),
            log_posterior_at_mode=0.0,
        )
        pol = PsiPolicy(
            grid=StimulusGrid.over(DESIGN, points=16, refine_rounds=3), sample_count=500
        )
        x, curve = select_next(pol, lp, DESIGN, seed=3)
        assert curve.levels.min() >= DESIGN.x_lo - 1e-9
        assert curve.levels.max() <= DESIGN.x_hi + 1e-9
        assert DESIGN.x_lo <= x <= DESIGN.x_hi

    def test_zero_information_falls_back_to_midpoint(self):
        # A posterior with negligible spread carries no information at any
        # level; the policy warns and probes the middle of the range.
        lp = LaplacePosterior(
            mode=Params(3.5, 0.0, -6.0),
            covariance=np.eye(3) * 1e-30,
            log_posterior_at_mode=0.0,
        )
        pol = PsiPolicy(grid=StimulusGrid.over(DESIGN, points=21), sample_count=500)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            x, _ = select_next(pol, lp, DESIGN, seed=1)
        assert x == DESIGN.midpoint
        assert any(issubclass(r.category, AllZeroInformation) for r in rec)

    def test_grid_outside_design_rejected(self, fitted_lp):
        bad = StimulusGrid(levels=(-7.0, 0.0, 10.0))
        with pytest.raises(DomainError):
            select_next(PsiPolicy(grid=bad, sample_count=400), fitted_lp, DESIGN, seed=0)

    def test_prior_only_choice_lies_in_prior_threshold_range(self):
        # Before any data the selected level must sit inside the central 99%
        # of thresholds the prior considers plausible.
        lp = LaplacePosterior(
            mode=Params(3.0, 0.0, math.log(0.02 / 0.98)),
            covariance=np.diag([0.5, 0.5, 0.09]),
            log_posterior_at_mode=0.0,
        )
        pol = PsiPolicy(grid=StimulusGrid.over(DESIGN, points=45), sample_count=4000)
        x, _ = select_next(pol, lp, DESIGN, seed=9)
        s = sample_laplace(lp, 4000, seed=9)
        fs = functional_samples(s, Threshold(0.75), DESIGN)
        lo, hi = np.quantile(fs.values, [0.005, 0.995])
        assert lo <= x <= hi


class TestStoppingRules:
    def test_fixed_trials(self, fitted_lp):
        s = sample_laplace(fitted_lp, 200, seed=5)
        rule = FixedTrials(50)
        assert not should_stop(rule, fitted_lp, s, 49, DESIGN)
        assert should_stop(rule, fitted_lp, s, 50, DESIGN)
        assert should_stop(rule, fitted_lp, s, 51, DESIGN)
        with pytest.raises(DomainError):
            FixedTrials(0)

    def test_entropy_below(self, fitted_lp):
        s = sample_laplace(fitted_lp, 200, seed=5)
        ent = posterior_entropy_gaussian(fitted_lp)
        assert should_stop(EntropyBelow(ent + 0.1), fitted_lp, s, 0, DESIGN)
        assert not should_stop(EntropyBelow(ent - 0.1), fitted_lp, s, 0, DESIGN)

    def test_probability_within(self, fitted_lp):
        s = sample_laplace(fitted_lp, 2000, seed=5)
        fs = functional_samples(s, Threshold(0.75), DESIGN)
        lo, hi = np.quantile(fs.values, [0.025, 0.975])
        wide = ProbabilityWithin(Threshold(0.75), float(lo - 1.0), float(hi + 1.0), 0.9)
        narrow = ProbabilityWithin(Threshold(0.75), 3.49, 3.51, 0.9)
        assert should_stop(wide, fitted_lp, s, 0, DESIGN)
        assert not should_stop(narrow, fitted_lp, s, 0, DESIGN)

    def test_probability_within_validation(self):
        with pytest.raises(DomainError):
            ProbabilityWithin(Threshold(0.75), 2.0, 2.0, 0.9)
        with pytest.raises(DomainError):
            ProbabilityWithin(Threshold(0.75), 1.0, 2.0, 0.0)
        with pytest.raises(DomainError):
            ProbabilityWithin(Threshold(0.75), 1.0, 2.0, 1.0)


class TestMultiThresholdPolicy:
    def test_rejects_fewer_than_two_levels(self):
        g = StimulusGrid.over(DESIGN)
        with pytest.raises(DomainError):
            multi_threshold_policy([0.75], g)
        with pytest.raises(DomainError):
            multi_threshold_policy([], g)

    def test_rejects_duplicates_and_out_of_range(self):
        g = StimulusGrid.over(DESIGN)
        with pytest.raises(DomainError):
            multi_threshold_policy([0.7, 0.7], g)
        with pytest.raises(DomainError):
            multi_threshold_policy([0.0, 0.7], g)
        with pytest.raises(DomainError):
            multi_threshold_policy([0.7, 1.0], g)

    def test_two_levels_flagged_approximate(self):
        g = StimulusGrid.over(DESIGN)
        pol2 = multi_threshold_policy([0.6, 0.9], g, sample_count=1500)
        assert isinstance(pol2, PsiPolicy)
        assert pol2.approximate is True
        assert pol2.sample_count == 1500
        assert pol2.grid is g

    def test_three_levels_exact(self):
        g = StimulusGrid.over(DESIGN)
        pol3 = multi_threshold_policy([0.6, 0.75, 0.9], g)
        assert pol3.approximate is False
