import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccfsim.atwood import (
    BINOMIAL,
    COEFFICIENT_FREE,
    AtwoodDomainError,
    DirectedSplitError,
    ShockModelParams,
    analytic_residuals,
    beta_factor_element,
    directed_split,
    estimate_rates_from_counts,
    gamma_ratio,
    q_group,
    q_total_element,
    shock_sum,
    solve_rates_analytic,
    split_detection,
)

# Frozen from a 40-digit mpmath evaluation (independent of the module).
Q2_N40_RHO02 = 7.908906574920249e-12
BETA_N40_DEFAULTS = 0.07922576600579892
MU_ANALYTIC_RHO02 = 9.469842445228752e-07
OMEGA_ANALYTIC_RHO02 = 1.1809256073361706e-08


def params(**kw):
    base = dict(mu=9.52e-7, omega=1.18e-8, rho=0.2, lambda_ind=2.35e-6)
    base.update(kw)
    return ShockModelParams(**base)


def log_domain_term(k, n, rho):
    return math.exp(k * math.log(rho) + (n - k) * math.log(1 - rho))


class TestParams:
    def test_rejects_negative_rate(self):
        with pytest.raises(AtwoodDomainError):
            params(mu=-1.0)

    def test_rejects_rho_outside_unit_interval(self):
        with pytest.raises(AtwoodDomainError):
            params(rho=1.5)

    def test_rejects_fraction_sum_at_one(self):
        with pytest.raises(AtwoodDomainError):
            params(alpha_nonlethal=0.995, beta_lethal=0.005)


class TestQGroup:
    def test_rho_zero_kills_multi_element_terms(self):
        assert q_group(2, 40, params(rho=0.0)) == 0.0

    def test_rho_one_makes_shock_lethal(self):
        p = params(mu=3e-7, rho=1.0, omega=1.18e-8)
        assert q_group(40, 40, p) == pytest.approx(3e-7 + 1.18e-8, rel=1e-15)

    def test_pair_value_against_log_domain(self):
        p = params()
        got = q_group(2, 40, p)
        assert got == pytest.approx(Q2_N40_RHO02, rel=1e-12)
        assert got == pytest.approx(p.mu * log_domain_term(2, 40, 0.2), rel=1e-12)

    def test_single_element_includes_independent(self):
        p = params()
        assert q_group(1, 40, p) == pytest.approx(p.lambda_ind + p.mu * 0.2 * 0.8**39, rel=1e-13)

    def test_large_k_uses_stable_form(self):
        p = params(rho=0.3)
        assert q_group(35, 64, p) == pytest.approx(p.mu * log_domain_term(35, 64, 0.3), rel=1e-12)

    @pytest.mark.parametrize("k,n", [(0, 40), (41, 40), (1, 0)])
    def test_domain(self, k, n):
        with pytest.raises(AtwoodDomainError):
            q_group(k, n, params())


class TestTotalsAndBeta:
    def test_rho_zero(self):
        p = params(rho=0.0)
        assert q_total_element(40, p) == pytest.approx(p.lambda_ind + p.omega, rel=1e-15)

    def test_single_element(self):
        p = params(mu=1e-6, rho=0.3)
        assert q_total_element(1, p) == pytest.approx(p.lambda_ind + p.omega + 3e-7, rel=1e-14)

    def test_defaults_against_brute_force(self):
        p = params()
        brute = sum(math.comb(39, k - 1) * p.mu * 0.2**k * 0.8 ** (40 - k) for k in range(1, 41))
        assert q_total_element(40, p) == pytest.approx(p.lambda_ind + p.omega + brute, rel=1e-12)
        assert q_total_element(40, p) == pytest.approx(2.5522e-6, rel=1e-12)

    def test_beta_no_shocks(self):
        assert beta_factor_element(40, params(mu=0.0, omega=0.0)) == 0.0

    def test_beta_all_shock(self):
        assert beta_factor_element(40, params(lambda_ind=0.0)) == pytest.approx(1.0, rel=1e-14)

    def test_beta_defaults(self):
        assert beta_factor_element(40, params()) == pytest.approx(BETA_N40_DEFAULTS, rel=1e-12)

    def test_beta_excluding_single_is_smaller(self):
        p = params()
        assert beta_factor_element(40, p, exclude_single=True) < beta_factor_element(40, p)

    def test_beta_zero_denominator(self):
        with pytest.raises(AtwoodDomainError):
            beta_factor_element(40, params(mu=0.0, omega=0.0, lambda_ind=0.0))


class TestDirectedSplit:
    def test_proportional_orientation_is_uniform(self):
        s = directed_split(40, 0.2, 24, 0.6)
        assert s.x_a == pytest.approx(0.2, rel=1e-14)
        assert s.x_b == pytest.approx(0.2, rel=1e-14)

    def test_skewed(self):
        s = directed_split(40, 0.2, 24, 0.1)
        assert s.x_a == pytest.approx(1 / 30, rel=1e-14)
        assert s.x_b == pytest.approx(0.45, rel=1e-14)
        assert 24 * s.x_a + 16 * s.x_b == pytest.approx(8.0, rel=1e-14)

    def test_overflow_names_subset(self):
        with pytest.raises(DirectedSplitError) as err:
            directed_split(40, 0.5, 4, 0.9)
        assert err.value.subset == "a"
        assert err.value.value == pytest.approx(4.5)

    @pytest.mark.parametrize("a", [0, 40])
    def test_subset_must_be_proper(self, a):
        with pytest.raises(AtwoodDomainError):
            directed_split(40, 0.2, a, 0.5)


class TestSolve:
    @pytest.mark.parametrize("rho", [0.2, 0.33, 0.5])
    def test_table_values(self, rho):
        mu, omega = solve_rates_analytic(40, 0.405, 5e-3, rho, 2.35e-6)
        assert mu == pytest.approx(9.52e-7, rel=0.01)
        assert omega == pytest.approx(1.18e-8, rel=0.01)

    def test_against_mpmath(self):
        mu, omega = solve_rates_analytic(40, 0.405, 5e-3, 0.2, 2.35e-6)
        assert mu == pytest.approx(MU_ANALYTIC_RHO02, rel=1e-12)
        assert omega == pytest.approx(OMEGA_ANALYTIC_RHO02, rel=1e-12)

    def test_zero_fractions(self):
        assert solve_rates_analytic(40, 0.0, 0.0, 0.2, 2.35e-6) == (0.0, 0.0)

    def test_binomial_variant_depends_on_rho(self):
        mu2, _ = solve_rates_analytic(40, 0.405, 5e-3, 0.2, 2.35e-6, BINOMIAL)
        mu5, _ = solve_rates_analytic(40, 0.405, 5e-3, 0.5, 2.35e-6, BINOMIAL)
        assert mu5 > mu2 > 9.52e-7

    def test_singular(self):
        # alpha*S = 1 and beta = 0 zeroes the first column
        with pytest.raises(AtwoodDomainError):
            solve_rates_analytic(1, 1.0, 0.0, 1.0, 1e-6)


class TestGamma:
    def test_coefficient_free(self):
        assert gamma_ratio(40, 0.405, 5e-3, 0.2) == pytest.approx(0.995, abs=5e-4)

    def test_binomial(self):
        assert gamma_ratio(40, 0.405, 5e-3, 0.2, BINOMIAL) == pytest.approx(0.914, rel=1e-13)

    def test_rho_zero_and_both(self):
        both = gamma_ratio(40, 0.405, 5e-3, 0.0, "both")
        assert both[COEFFICIENT_FREE] == pytest.approx(0.995, rel=1e-15)
        assert both[BINOMIAL] == pytest.approx(0.995, rel=1e-15)


class TestCounts:
    def test_lambda_from_count(self):
        lam, _, _ = estimate_rates_from_counts(8.28, 40, 87600.0, 0.405, 5e-3, 0.995)
        assert lam == pytest.approx(2.36e-6, rel=0.005)

    def test_mu_from_lambda(self):
        lam = 2.36e-6
        _, mu, omega = estimate_rates_from_counts(lam * 40 * 87600.0, 40, 87600.0, 0.405, 5e-3, 0.995)
        assert mu == pytest.approx(9.62e-7, rel=0.01)
        assert omega == pytest.approx(1.18e-8, rel=0.01)

    def test_zero_count(self):
        assert estimate_rates_from_counts(0.0, 40, 87600.0, 0.405, 5e-3, 0.995) == (0.0, 0.0, 0.0)

    def test_gamma_must_be_positive(self):
        with pytest.raises(AtwoodDomainError):
            estimate_rates_from_counts(1.0, 40, 87600.0, 0.405, 5e-3, 0.0)


class TestDetection:
    def test_defaults(self):
        d = split_detection(2.35e-6, 0.85)
        assert d.lambda_sa == pytest.approx(1.9975e-6, rel=1e-14)
        assert d.lambda_nsa == pytest.approx(3.525e-7, rel=1e-12)
        assert d.lambda_ind == 2.35e-6

    def test_full_coverage(self):
        assert split_detection(2.35e-6, 1.0).lambda_nsa == 0.0

    def test_no_coverage(self):
        assert split_detection(2.35e-6, 0.0).lambda_sa == 0.0

    @pytest.mark.parametrize("c", [-0.1, 1.1])
    def test_domain(self, c):
        with pytest.raises(AtwoodDomainError):
            split_detection(1e-6, c)


# -- properties ---------------------------------------------------------------

rho_grid = st.sampled_from([i / 10 for i in range(11)])


@given(n=st.integers(1, 64), rho=rho_grid)
def test_binomial_identity(n, rho):
    assert shock_sum(n, rho, BINOMIAL) == pytest.approx(rho, rel=1e-12, abs=1e-300)


@settings(max_examples=300)
@given(n=st.integers(2, 64), rho=st.floats(0.0, 1.0), data=st.data())
def test_directed_residual(n, rho, data):
    a = data.draw(st.integers(1, n - 1))
    p_a = data.draw(st.floats(0.0, 1.0))
    try:
        s = directed_split(n, rho, a, p_a)
    except DirectedSplitError:
        return
    assert abs(s.residual) <= 1e-12 * max(n * rho, 1e-300)
    assert 0.0 <= s.x_a <= 1.0 and 0.0 <= s.x_b <= 1.0


@given(
    n=st.integers(1, 64),
    rho=st.floats(0.0, 1.0),
    alpha=st.floats(0.0, 0.9),
    beta=st.floats(0.0, 0.09),
    variant=st.sampled_from([COEFFICIENT_FREE, BINOMIAL]),
)
def test_solve_residuals(n, rho, alpha, beta, variant):
    lam = 2.35e-6
    mu, omega = solve_rates_analytic(n, alpha, beta, rho, lam, variant)
    r1, r2 = analytic_residuals(n, alpha, beta, rho, lam, mu, omega, variant)
    assert abs(r1) <= 1e-12 * lam
    assert abs(r2) <= 1e-12 * lam


@given(
    n=st.integers(1, 64),
    rho=st.floats(0.0, 1.0),
    mu=st.floats(0.0, 1e-3),
    omega=st.floats(0.0, 1e-3),
    lam=st.floats(0.0, 1e-3),
)
def test_total_matches_identity(n, rho, mu, omega, lam):
    p = ShockModelParams(mu=mu, omega=omega, rho=rho, lambda_ind=lam)
    assert q_total_element(n, p) == pytest.approx(lam + omega + mu * rho, rel=1e-12, abs=1e-300)


@given(
    n=st.integers(1, 64),
    rho=st.floats(0.0, 1.0),
    omega=st.floats(0.0, 1e-4),
    bump=st.floats(0.0, 1e-4),
)
def test_beta_bounded_and_monotone_in_omega(n, rho, omega, bump):
    p1 = ShockModelParams(mu=9.52e-7, omega=omega, rho=rho, lambda_ind=2.35e-6)
    p2 = ShockModelParams(mu=9.52e-7, omega=omega + bump, rho=rho, lambda_ind=2.35e-6)
    b1, b2 = beta_factor_element(n, p1), beta_factor_element(n, p2)
    assert 0.0 <= b1 <= 1.0 + 1e-15
    assert b2 >= b1 - 1e-15


@given(e=st.just(0.0) | st.floats(1e-6, 1e4))
def test_counts_linear(e):
    one = estimate_rates_from_counts(e, 40, 87600.0, 0.405, 5e-3, 0.995)
    two = estimate_rates_from_counts(2 * e, 40, 87600.0, 0.405, 5e-3, 0.995)
    for x, y in zip(one, two):
        assert y == pytest.approx(2 * x, rel=1e-14, abs=0.0)
