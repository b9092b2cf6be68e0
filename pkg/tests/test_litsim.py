"""Synthetic literature generation and the supporting-evidence study."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import chisquare, kstest, norm

import pubfdr as pf
from pubfdr import litsim
from pubfdr.errors import DomainError, NoSolutionError
from pubfdr.litsim import EvidenceSimConfig, SimConfig

HLZ = pf.hlz_benchmark()


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(0, HLZ)
    with pytest.raises(DomainError):
        SimConfig(10, HLZ, rho=1.0)
    with pytest.raises(DomainError):
        EvidenceSimConfig(10, lambda_var=0.0)
    with pytest.raises(DomainError):
        EvidenceSimConfig(10, lambda_var=1.0, rho_tz=0.8)


def test_seed_reproducibility():
    cfg = SimConfig(5000, HLZ, rho=0.4, seed=99)
    a, b = litsim.simulate(cfg), litsim.simulate(cfg)
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.truth, b.truth)
    assert np.array_equal(a.published, b.published)
    c = litsim.simulate(SimConfig(5000, HLZ, rho=0.4, seed=100))
    assert not np.array_equal(a.t, c.t)


def test_ar1_noise_moments():
    n = 10**5
    lit0 = litsim.simulate(SimConfig(n, HLZ, rho=0.0, seed=1))
    eps0 = lit0.t - lit0.mu
    assert abs(np.corrcoef(eps0[:-1], eps0[1:])[0, 1]) < 3 / np.sqrt(n)
    lit9 = litsim.simulate(SimConfig(n, HLZ, rho=0.9, seed=2))
    eps9 = lit9.t - lit9.mu
    assert abs(np.corrcoef(eps9[:-1], eps9[1:])[0, 1] - 0.9) < 0.01
    assert abs(np.var(eps9) - 1.0) < 0.01


@pytest.mark.parametrize("rho", [0.0, 0.5, 0.9, -0.6])
def test_ar1_marginals_standard_normal(rho):
    lit = litsim.simulate(SimConfig(10**5, HLZ, rho=rho, seed=7))
    eps = lit.t - lit.mu
    assert kstest(eps, "norm").pvalue > 0.01


def test_all_false_exceedance_count():
    lit = litsim.simulate(SimConfig(1000, pf.ModelParams(1.0, HLZ.latent, HLZ.pub), seed=3))
    count = int((np.abs(lit.t) > 1.96).sum())
    sigma = np.sqrt(1000 * 0.05 * 0.95)
    assert abs(count - 50) <= 3 * sigma


def test_publication_flags_follow_rule():
    lit = litsim.simulate(SimConfig(200_000, HLZ, seed=5))
    t_abs = np.abs(lit.t)
    marginal = (t_abs > 1.96) & (t_abs <= 2.57)
    assert abs(lit.published[marginal].mean() - 0.5) < 0.01
    assert np.all(~lit.published[t_abs <= 1.96])
    assert np.all(lit.published[t_abs > 2.57] | ~lit.published[t_abs > 2.57])
    assert abs(lit.published[t_abs > 2.57].mean() - 1.0) < 1e-12
    # s_bar scales absolute publication probability
    half = litsim.simulate(SimConfig(
        200_000,
        pf.ModelParams(HLZ.pi_false, HLZ.latent, pf.StaircaseRule(0.5, 2.57, s_bar=0.5)),
        seed=5,
    ))
    t_abs_h = np.abs(half.t)
    assert abs(half.published[t_abs_h > 2.57].mean() - 0.5) < 0.01


def test_no_publication_flag_absent():
    lit = litsim.simulate(SimConfig(100, HLZ, seed=1, apply_publication=False))
    assert lit.published is None
    lit2 = litsim.simulate(SimConfig(100, pf.ModelParams(0.5, HLZ.latent, None), seed=1))
    assert lit2.published is None


def test_published_histogram_matches_density():
    # chi-square GOF on equal-model-probability bins, several random models
    rng = np.random.default_rng(123)
    for _ in range(5):
        params = pf.ModelParams(
            pi_false=rng.uniform(0.05, 0.9),
            latent=pf.LogNormalLatent(rng.uniform(0.2, 1.2), rng.uniform(0.3, 1.0)),
            pub=pf.StaircaseRule(eta=rng.uniform(1 / 3, 2 / 3)),
        )
        lit = litsim.simulate(SimConfig(10**5, params, seed=int(rng.integers(2**31))))
        pub_t = np.abs(lit.t[lit.published])
        # roughly equal-mass bins from the inverted published CDF, with the
        # top bin absorbing everything beyond the grid; expected masses come
        # from the model itself
        grid = np.linspace(1.96, 20.0, 3000)
        cdf = np.array([pf.tail_prob(1.96, g, params, "published") for g in grid])
        edges = np.interp(np.linspace(0, 1, 41)[1:-1] * cdf[-1], cdf, grid)
        edges = np.concatenate([[1.96], edges, [np.inf]])
        counts, _ = np.histogram(pub_t, bins=edges)
        probs = np.array([pf.tail_prob(a, b, params, "published")
                          for a, b in zip(edges[:-1], edges[1:])])
        assert chisquare(counts, f_exp=pub_t.size * probs / probs.sum()).pvalue > 0.01


def test_simulate_published_exact_count_and_support():
    ts = litsim.simulate_published(pf.lognormal_benchmark(), 183, seed=42)
    assert ts.shape == (183,)
    assert np.all(np.abs(ts) > 1.96)
    again = litsim.simulate_published(pf.lognormal_benchmark(), 183, seed=42)
    assert np.array_equal(ts, again)


# ---------------------------------------------------------------------------
# Supporting-evidence model
# ---------------------------------------------------------------------------


def test_evidence_inactive_cutoff_matches_t_only():
    cfg = EvidenceSimConfig(10**6, lambda_var=1.0, rho_tz=0.0, z_min=-10.0, seed=2)
    rec = litsim.simulate_evidence(cfg)
    rate = rec.published.mean()
    expect = norm.sf(2.5 / np.sqrt(2.0))
    assert abs(rate - expect) < 3 * np.sqrt(expect * (1 - expect) / cfg.n_factors)


def test_evidence_mean_t_increasing_in_zmin():
    means = []
    for zmin in (0.0, 1.0, 2.0):
        rec = litsim.simulate_evidence(EvidenceSimConfig(10**6, 1.0, 0.0, zmin, seed=4))
        means.append(rec.t[rec.published].mean())
    assert means[0] < means[1] < means[2]


def test_evidence_frozen_joint_draw_oracle():
    # bivariate draw via Cholesky of [[lam+1, lam+rho], [lam+rho, lam+1]]
    # (1e7 draws, Philox seed 99) gave E[t | published] = 3.3168
    rec = litsim.simulate_evidence(EvidenceSimConfig(10**6, 2.0, 0.3, 1.0, seed=777))
    assert abs(rec.t[rec.published].mean() - 3.3168) < 0.01


def test_evidence_noise_correlation():
    rec = litsim.simulate_evidence(EvidenceSimConfig(10**6, 2.0, 0.5, 0.0, seed=8))
    noise_t = rec.t - rec.mu
    noise_z = rec.z - rec.mu
    assert abs(np.corrcoef(noise_t, noise_z)[0, 1] - 0.5) < 0.005
    assert abs(np.var(noise_z) - 1.0) < 0.01


def test_lambda_estimator_correctly_specified():
    rec = litsim.simulate_evidence(EvidenceSimConfig(10**6, 1.0, 0.0, -10.0, seed=2))
    lam_hat = litsim.estimate_lambda_misspecified(rec.t[rec.published])
    assert abs(lam_hat - 1.0) / 1.0 < 0.05


def test_lambda_estimator_upward_biased_under_selection():
    rec = litsim.simulate_evidence(EvidenceSimConfig(10**6, 2.0, 0.0, 1.0, seed=9))
    lam_hat = litsim.estimate_lambda_misspecified(rec.t[rec.published])
    assert lam_hat > 2.0


def test_lambda_estimator_no_solution():
    with pytest.raises(NoSolutionError):
        litsim.estimate_lambda_misspecified(np.array([2.51, 2.52, 2.55]))


def test_truncated_mean_monotone_in_lambda():
    vals = [litsim.truncated_mean_t(lam, 2.5) for lam in (0.01, 0.5, 2.0, 10.0, 50.0)]
    assert np.all(np.diff(vals) > 0)


def test_posterior_means_closed_forms():
    # E(mu | t) and E(mu | t, z) from normal conjugacy
    assert_allclose(litsim.posterior_mean_ignoring_evidence(3.0, 2.0), 2.0, rtol=1e-12)
    assert_allclose(litsim.posterior_mean_with_evidence(3.0, 3.0, 2.0, 0.0),
                    2.0 * 6.0 / 5.0, rtol=1e-12)
    # with rho: lam*(t+z)/(1+rho+2*lam)
    assert_allclose(litsim.posterior_mean_with_evidence(2.0, 4.0, 1.0, 0.5),
                    6.0 / 3.5, rtol=1e-12)


def test_shrinkage_bias_study_cells():
    cells = litsim.shrinkage_bias_study(
        lambda_grid=[0.5], rho_grid=[0.0], zmin_grid=[-10.0, 2.0],
        n_factors=400_000, seed=14,
    )
    free, tight = cells
    # inactive evidence cutoff: estimated tracks actual
    assert abs(free.shrinkage_estimated - free.shrinkage_actual) < 0.02
    # per-record inequality: misspecified posterior mean below the
    # evidence-aware one for every published record in this cell
    assert tight.frac_underestimates == 1.0
    # direct-integration cross-check of the evidence-aware posterior in
    # one cell: mean of E(mu | t, z) over published records equals the
    # mean of actual mu up to Monte Carlo error (posterior-mean identity)
    rec = litsim.simulate_evidence(EvidenceSimConfig(400_000, 0.5, 0.0, 2.0, seed=14))
    pub = rec.published
    post = litsim.posterior_mean_with_evidence(rec.t[pub], rec.z[pub], 0.5, 0.0)
    assert abs(post.mean() - rec.mu[pub].mean()) < 0.01
