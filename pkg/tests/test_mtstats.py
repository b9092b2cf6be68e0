"""FDR hurdles, shrinkage, local fdr, FNR, and step-up procedures."""

import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, optimize
from scipy.stats import norm

import pubfdr as pf
from pubfdr import litsim
from pubfdr.errors import DomainError, TailUnderflowError, UndefinedRatioError
from pubfdr.mtstats import stepup_hurdle

LOGN = pf.LogNormalLatent(0.701, 0.745)
HLZ = pf.hlz_benchmark()


# ---------------------------------------------------------------------------
# fdr_bayes / hurdle_for_fdr
# ---------------------------------------------------------------------------


def test_fdr_bayes_degenerate_shares():
    assert pf.fdr_bayes(1.0, pf.ModelParams(1.0, LOGN)) == 1.0
    assert pf.fdr_bayes(1.0, pf.ModelParams(0.0, LOGN)) == 0.0


def test_fdr_bayes_knife_edge_scenario():
    # calibrate the latent so that Pr(|t| > 1.96) equals pi_false = 0.5;
    # the FDR at the classical hurdle is then exactly the classical size
    def excess(mean):
        p = pf.ModelParams(0.5, pf.ExponentialLatent(mean))
        return pf.tail_prob(1.96, math.inf, p, "all") - 0.5

    mean = optimize.brentq(excess, 0.5, 100.0, xtol=1e-12)
    params = pf.ModelParams(0.5, pf.ExponentialLatent(mean))
    alpha0 = 2 * norm.sf(1.96)
    assert_allclose(pf.fdr_bayes(1.96, params), alpha0, rtol=1e-6)
    assert abs(pf.fdr_bayes(1.96, params) - 0.05) < 1e-4


def test_fdr_bayes_tail_underflow():
    params = pf.ModelParams(0.5, pf.ExponentialLatent(0.5))
    with pytest.raises(TailUnderflowError):
        pf.fdr_bayes(19.9, params)


def test_hurdle_benchmark_raise_and_lower():
    res = pf.hurdle_for_fdr(0.05, HLZ)
    assert 2.17 <= res.hurdle <= 2.37  # reported as 2.27 for mean "about 2"
    assert res.achieved_fdr <= 0.05 + 1e-9
    assert res.feasible and res.monotone
    lowered = pf.hurdle_for_fdr(0.05, dataclasses.replace(HLZ, pi_false=0.0))
    assert lowered.hurdle == 0.0


def test_hurdle_infeasible_flag():
    # with every factor false the FDR is 1 at any hurdle
    res = pf.hurdle_for_fdr(0.05, pf.ModelParams(1.0, pf.ExponentialLatent(1.0)))
    assert not res.feasible
    assert math.isinf(res.hurdle)
    assert res.achieved_fdr == 1.0


def test_hurdle_trichotomy_small_grid():
    rng = np.random.default_rng(5)
    n_checked = 0
    while n_checked < 25:
        latent = pf.LogNormalLatent(rng.uniform(0.0, 1.5), rng.uniform(0.2, 1.0))
        params = pf.ModelParams(rng.uniform(0.02, 0.98), latent)
        res = pf.hurdle_for_fdr(0.05, params)
        if not res.monotone:
            continue
        share = pf.tail_prob(1.96, math.inf, params, "all")
        lhs = np.sign(res.hurdle - 1.96)
        rhs = np.sign(pf.fdr_bayes(1.96, params) - 0.05)
        if abs(pf.fdr_bayes(1.96, params) - 0.05) < 1e-6:
            continue  # knife edge: the equality branch of the trichotomy
        assert lhs == rhs
        # the population statement: raise iff pi exceeds the significant share
        # (alpha at the classical size implied by the folded normal)
        alpha0 = 2 * norm.sf(1.96)
        res0 = pf.hurdle_for_fdr(alpha0, params)
        if abs(params.pi_false - share) > 1e-4:
            assert (res0.hurdle > 1.96) == (params.pi_false > share)
        n_checked += 1


def test_fdr_integral_relation():
    # Fdr(h) equals the density-weighted average of the local fdr above h
    # (compact-tailed latent so the quadrature oracle covers all the mass)
    params = pf.ModelParams(0.35, pf.ExponentialLatent(2.0))
    h = 1.96
    num, _ = integrate.quad(lambda t: pf.local_fdr(t, params) * pf.density_marginal(t, params),
                            h, 45.0, limit=500)
    den, _ = integrate.quad(lambda t: pf.density_marginal(t, params), h, 45.0, limit=500)
    assert_allclose(pf.fdr_bayes(h, params), num / den, atol=1e-6)


# ---------------------------------------------------------------------------
# local fdr / shrinkage / fnr
# ---------------------------------------------------------------------------


def test_local_fdr_degenerate_and_frozen_oracle():
    assert pf.local_fdr(2.0, pf.ModelParams(0.0, LOGN)) == 0.0
    # truth-label frequency among published |t| in (2.48, 2.52], 1e7 sims
    params = pf.ModelParams(0.3, LOGN, pf.StaircaseRule(0.5))
    assert abs(pf.local_fdr(2.5, params) - 0.0682) < 0.005


def test_mean_local_fdr_published_benchmark():
    # simulate the benchmark literature, average the local fdr over
    # published records: ~6%, vs the 8.6% back-of-envelope approximation
    lit = litsim.simulate(litsim.SimConfig(400_000, HLZ, seed=21))
    mean_lfdr = pf.mean_published_local_fdr(np.abs(lit.t[lit.published]), HLZ)
    assert 0.04 <= mean_lfdr <= 0.08
    approx = pf.mean_local_fdr_approx(0.05, 353 / 1378, 0.444)
    assert abs(approx - 0.0866) < 0.0005
    assert mean_lfdr < approx  # the haircut makes the simulated mean smaller


def test_shrinkage_benchmark_value():
    # shrinkage of 25% at t = 4 recovers an unbiased t-stat of 3
    res = pf.ShrinkageResult(4.0, 3.0, 0.25, False)
    assert res.t_input * (1 - res.shrinkage) == 3.0
    # delta correction at the benchmark: 9 * f_F(4)/f_T(4) ~ 0.03
    delta = pf.delta_correction(4.0, dataclasses.replace(HLZ, pi_false=0.9))
    assert 0.025 <= delta <= 0.04


def test_shrinkage_decomposition_identity():
    # E(mu | |t|) = E(mu | |t|, true) / (1 + Delta), exact given the rule
    from pubfdr.model import latent_rule, _fold_kernel_sum

    for pi in (0.1, 0.5, 0.9):
        params = pf.ModelParams(pi, LOGN, pf.StaircaseRule(0.5))
        for t in (2.0, 3.0, 4.5, 7.0):
            post = pf.posterior_mean_mu(t, params)
            rule = latent_rule(params.latent)
            t_arr = np.array([t])
            post_true = (_fold_kernel_sum(t_arr, rule.nodes, rule.nodes * rule.weights)[0]
                         / _fold_kernel_sum(t_arr, rule.nodes, rule.weights)[0])
            delta = pf.delta_correction(t, params)
            assert_allclose(post, post_true / (1.0 + delta), rtol=1e-8)


def test_shrinkage_posterior_mc_oracle():
    # importance-sampled posterior mean at |t| = 3 with all factors true
    res = pf.shrinkage(3.0, pf.ModelParams(0.0, LOGN))
    assert abs(res.posterior_mean_mu - 2.54893) / 2.54893 < 0.005
    assert_allclose(res.shrinkage, (3.0 - res.posterior_mean_mu) / 3.0, rtol=1e-12)


def test_shrinkage_in_unit_interval_for_published_region():
    for pi in (0.0, 0.3, 0.7):
        params = pf.ModelParams(pi, LOGN, pf.StaircaseRule(0.5))
        for t in np.linspace(1.96, 10.0, 30):
            assert 0.0 <= pf.shrinkage(float(t), params).shrinkage <= 1.0


def test_shrinkage_signed_variant():
    sym = pf.MixtureNormalLatent(0.5, 2.5, 0.8, -2.5, 0.8)
    params = pf.ModelParams(0.2, sym)
    res_pos = pf.shrinkage(3.0, params, signed=True)
    res_neg = pf.shrinkage(-3.0, params, signed=True)
    assert_allclose(res_pos.shrinkage, res_neg.shrinkage, rtol=1e-9)
    assert_allclose(res_pos.posterior_mean_mu, -res_neg.posterior_mean_mu, rtol=1e-9)


def test_shrinkage_rejects_zero_t():
    with pytest.raises(DomainError):
        pf.shrinkage(0.0, pf.ModelParams(0.5, LOGN))


def test_fnr_degenerate_and_frozen_oracle():
    params = pf.ModelParams(0.3, LOGN, pf.StaircaseRule(0.5))
    assert pf.fnr(1.96, dataclasses.replace(params, pi_false=1.0)) == 0.0
    assert pf.fnr(1.96, dataclasses.replace(params, pi_false=0.0)) == 1.0
    # truth-label frequency among |t| <= 1.96 in 1e7 simulations: 0.5237
    assert abs(pf.fnr(1.96, params) - 0.5237) < 0.005


# ---------------------------------------------------------------------------
# step-up procedures
# ---------------------------------------------------------------------------


def _bruteforce_stepup(ts, alpha, c):
    p_sorted = np.sort(2 * norm.sf(np.abs(ts)))
    n = len(ts)
    ks = [k for k in range(1, n + 1) if p_sorted[k - 1] <= k * alpha / (n * c)]
    if not ks:
        return None
    return np.sort(np.abs(ts))[::-1][max(ks) - 1]


def test_stepup_routes_agree_and_match_bruteforce():
    rng = np.random.default_rng(11)
    for trial in range(60):
        ts = rng.standard_normal(50) + rng.choice([0.0, 2.5], 50)
        if trial % 4 == 0:
            ts[10:14] = ts[9]  # exact ties
        for method, c in (("bh95", 1.0), ("by13", float(np.sum(1 / np.arange(1, 51))))):
            a = stepup_hurdle(ts, 0.05, method, route="stepup")
            b = stepup_hurdle(ts, 0.05, method, route="plugin")
            assert a.hurdle == b.hurdle and a.feasible == b.feasible
            brute = _bruteforce_stepup(ts, 0.05, c)
            if brute is None:
                assert not a.feasible
            else:
                assert_allclose(a.hurdle, brute, rtol=1e-12)


def test_stepup_all_huge_rejects_everything():
    ts = np.linspace(10.5, 14.0, 40)
    res = stepup_hurdle(ts, 0.05, "by13")
    assert_allclose(res.hurdle, 10.5, rtol=1e-12)


def test_stepup_bh_is_by_with_scaled_alpha():
    rng = np.random.default_rng(3)
    for _ in range(20):
        ts = rng.standard_normal(80) + rng.choice([0.0, 3.0], 80)
        c = float(np.sum(1.0 / np.arange(1, 81)))
        bh = stepup_hurdle(ts, 0.05, "bh95")
        by = stepup_hurdle(ts, min(0.05 * c, 0.999), "by13")
        assert bh.hurdle == by.hurdle


def test_stepup_by_always_above_classical():
    # the conservative variant cannot endorse the classical hurdle
    rng = np.random.default_rng(9)
    for _ in range(30):
        pi = rng.uniform(0.0, 1.0)
        latent = pf.ExponentialLatent(rng.uniform(1.0, 4.0))
        lit = litsim.simulate(litsim.SimConfig(
            300, pf.ModelParams(pi, latent), seed=int(rng.integers(2**31)),
            apply_publication=False,
        ))
        res = stepup_hurdle(lit, 0.05, "by13")
        assert res.hurdle > 1.96


def test_stepup_from_literature_object():
    lit = pf.Literature(t=np.array([2.5, -3.8, 0.4, 5.0]))
    res = stepup_hurdle(lit, 0.05, "bh95")
    assert res.feasible


def test_empirical_fdr_counts():
    t = np.array([2.5, 3.0, 1.0, 2.2])
    lit = pf.Literature(t=t, truth=np.array([False, True, True, True]))
    assert pf.empirical_fdr_counts(lit, 1.96) == 1 / 3
    all_true = pf.Literature(t=t, truth=np.ones(4, dtype=bool))
    assert pf.empirical_fdr_counts(all_true, 1.96) == 0.0
    with pytest.raises(UndefinedRatioError):
        pf.empirical_fdr_counts(lit, 10.0)
    with pytest.raises(DomainError):
        pf.empirical_fdr_counts(pf.Literature(t=t), 1.96)


def test_empirical_fdr_converges_to_bayes():
    params = pf.ModelParams(0.5, pf.ExponentialLatent(2.0))
    lit = litsim.simulate(litsim.SimConfig(10**6, params, seed=17, apply_publication=False))
    for h in (1.96, 2.58):
        assert abs(pf.empirical_fdr_counts(lit, h) - pf.fdr_bayes(h, params)) < 0.01


def test_figure_one_all_false_panel():
    lit = litsim.simulate(litsim.SimConfig(
        1000, pf.ModelParams(1.0, LOGN), seed=3, apply_publication=False,
    ))
    assert pf.empirical_fdr_counts(lit, 1.96) == 1.0


def test_mean_published_shrinkage_signed_uses_signs():
    sym = pf.MixtureNormalLatent(0.5, 2.5, 0.8, -2.5, 0.8)
    params = pf.ModelParams(0.2, sym)
    ts = np.array([2.5, -3.0, 4.0, -2.2])
    val = pf.mean_published_shrinkage(ts, params, signed=True)
    flipped = pf.mean_published_shrinkage(-ts, params, signed=True)
    assert_allclose(val, flipped, rtol=1e-9)
