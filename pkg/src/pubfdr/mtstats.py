"""Multiple testing statistics: FDR hurdles, shrinkage, local fdr, FNR.

Model-based statistics take a :class:`~pubfdr.model.ModelParams` and are
computed from exact conditional tail probabilities; count-based step-up
procedures (Benjamini-Hochberg and the Benjamini-Yekutieli Theorem 1.3
variant) operate on a raw sample of t-stats.  The two views agree in
large samples under weak dependence, which the test suite checks by
simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, TailUnderflowError, UndefinedRatioError
from .model import (
    Literature,
    ModelParams,
    T_SUPPORT_MAX,
    density_false,
    density_true,
    latent_rule,
    posterior_mean_mu,
    tail_prob,
)

__all__ = [
    "HurdleResult",
    "ShrinkageResult",
    "fdr_bayes",
    "hurdle_for_fdr",
    "local_fdr",
    "shrinkage",
    "delta_correction",
    "fnr",
    "stepup_hurdle",
    "empirical_fdr_counts",
    "mean_published_shrinkage",
    "mean_published_local_fdr",
    "mean_local_fdr_approx",
]

_CLASSICAL_HURDLE = 1.96


@dataclass(frozen=True)
class HurdleResult:
    """A t-stat hurdle achieving an FDR target.

    ``feasible`` is False when no hurdle on the searched support meets the
    target (the hurdle is then +inf for step-up methods, or reported at
    the upper search bound for model-based hurdles).  ``monotone`` records
    whether the underlying FDR curve was verified decreasing, the premise
    under which the hurdle is the unique crossing point.
    """

    hurdle: float
    alpha: float
    achieved_fdr: float
    method: str
    feasible: bool = True
    monotone: bool = True


@dataclass(frozen=True)
class ShrinkageResult:
    """Empirical-Bayes shrinkage of an observed t-stat toward zero.

    ``shrinkage`` is (|t| - E(mu | t)) / |t|; for the signed variant the
    conditioning and the ratio use the signed t-stat.  Values lie in
    [0, 1] for published-region t-stats under empirically relevant
    latents, but can be negative when the prior sits far above ``t``.
    """

    t_input: float
    posterior_mean_mu: float
    shrinkage: float
    signed: bool


# ---------------------------------------------------------------------------
# Model-based statistics
# ---------------------------------------------------------------------------


def fdr_bayes(h, params: ModelParams):
    """Pr(false | |t| > h): the Bayesian false discovery rate at hurdle h.

    Vectorized over ``h``.  Raises :class:`TailUnderflowError` where the
    marginal exceedance probability falls below 1e-12.
    """
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h_arr < 0):
        raise DomainError("hurdle must be >= 0")
    pi = params.pi_false
    tail_false = 2.0 * special.ndtr(-h_arr)
    if pi < 1.0:
        rule = latent_rule(params.latent)
        mu = rule.nodes[None, :]
        tail_true = (
            special.ndtr(mu - h_arr[:, None]) + special.ndtr(-h_arr[:, None] - mu)
        ) @ rule.weights
    else:
        tail_true = np.zeros_like(h_arr)
    denom = pi * tail_false + (1.0 - pi) * tail_true
    if np.any(denom < 1e-12):
        raise TailUnderflowError("Pr(|t| > h) below 1e-12; hurdle out of reach")
    out = pi * tail_false / denom
    return out if np.ndim(h) else float(out[0])


def _fdr_on_grid(params, grid_step=0.01, h_max=T_SUPPORT_MAX):
    """FDR curve on a coarse hurdle grid, trimmed to where tails are sane."""
    h_grid = np.arange(0.0, h_max + 0.5 * grid_step, grid_step)
    pi = params.pi_false
    tail_false = 2.0 * special.ndtr(-h_grid)
    if pi < 1.0:
        rule = latent_rule(params.latent)
        mu = rule.nodes[None, :]
        tail_true = (
            special.ndtr(mu - h_grid[:, None]) + special.ndtr(-h_grid[:, None] - mu)
        ) @ rule.weights
    else:
        tail_true = np.zeros_like(h_grid)
    denom = pi * tail_false + (1.0 - pi) * tail_true
    valid = denom >= 1e-12
    fdr = np.full_like(h_grid, np.nan)
    fdr[valid] = pi * tail_false[valid] / denom[valid]
    return h_grid, fdr, valid


def hurdle_for_fdr(alpha: float, params: ModelParams, grid_step: float = 0.01,
                   refine_tol: float = 1e-4) -> HurdleResult:
    """Smallest hurdle h with fdr_bayes(h) <= alpha.

    Scans a coarse grid over [0, 20] and refines the first crossing by
    bisection.  Returns h = 0 when the target holds already at zero.  If
    no grid point satisfies the target the result is flagged infeasible
    with the FDR achieved at the top of the grid.  A non-monotone FDR
    curve is legal for exotic latents; the result then still reports the
    smallest satisfying grid value but ``monotone`` is False.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    h_grid, fdr, valid = _fdr_on_grid(params, grid_step)
    fv = fdr[valid]
    monotone = bool(np.all(np.diff(fv) <= 1e-9))
    ok = valid & (fdr <= alpha)
    if not ok.any():
        last = fv[-1] if fv.size else math.nan
        return HurdleResult(math.inf, alpha, float(last), "bayes-model",
                            feasible=False, monotone=monotone)
    idx = int(np.argmax(ok))
    if idx == 0:
        return HurdleResult(0.0, alpha, float(fdr[0]), "bayes-model", monotone=monotone)
    lo, hi = h_grid[idx - 1], h_grid[idx]
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if fdr_bayes(mid, params) <= alpha:
            hi = mid
        else:
            lo = mid
    return HurdleResult(float(hi), alpha, float(fdr_bayes(hi, params)),
                        "bayes-model", monotone=monotone)


def local_fdr(t_abs, params: ModelParams):
    """Pr(false | |t| = t): the pointwise false discovery probability."""
    t = np.atleast_1d(np.asarray(t_abs, dtype=float))
    if np.any(t < 0):
        raise DomainError("local fdr takes absolute t-stats")
    pi = params.pi_false
    f_false = np.atleast_1d(density_false(t))
    f_true = np.atleast_1d(density_true(t, params.latent)) if pi < 1.0 else np.zeros_like(t)
    denom = pi * f_false + (1.0 - pi) * f_true
    if np.any(denom < 1e-300):
        raise TailUnderflowError("both densities underflow at requested t")
    out = pi * f_false / denom
    return out if np.ndim(t_abs) else float(out[0])


def delta_correction(t_abs: float, params: ModelParams) -> float:
    """Odds-weighted density ratio Delta = pi/(1-pi) * f_F(t)/f_T(t).

    The posterior mean satisfies E(mu | |t|) = E(mu | |t|, true)/(1+Delta),
    so small Delta means shrinkage is driven by the true-factor latent.
    """
    pi = params.pi_false
    if pi >= 1.0:
        raise DomainError("delta correction undefined at pi_false = 1")
    f_t = density_true(t_abs, params.latent)
    if f_t < 1e-300:
        raise TailUnderflowError("true-factor density underflow")
    return (pi / (1.0 - pi)) * density_false(t_abs) / f_t


def shrinkage(t_input: float, params: ModelParams, signed: bool = False) -> ShrinkageResult:
    """How much an observed t-stat should shrink toward zero.

    The unsigned variant conditions on |t| and requires t_input > 0; the
    signed variant conditions on the signed t-stat and is appropriate for
    latent families with mass on negative effects.
    """
    if not signed and t_input <= 0.0:
        raise DomainError("unsigned shrinkage needs t > 0 (division by |t|)")
    if signed and t_input == 0.0:
        raise DomainError("shrinkage at t = 0 divides by zero")
    post = float(posterior_mean_mu(t_input, params, signed=signed))
    return ShrinkageResult(t_input, post, (t_input - post) / t_input, signed)


def fnr(h: float, params: ModelParams) -> float:
    """Pr(true | |t| <= h): the false negative (type II) rate at hurdle h."""
    if h <= 0.0:
        raise DomainError("fnr needs h > 0")
    pi = params.pi_false
    below_false = tail_prob(0.0, h, params, "false")
    below_all = tail_prob(0.0, h, params, "all")
    if below_all < 1e-12:
        raise TailUnderflowError("Pr(|t| <= h) below 1e-12")
    return 1.0 - pi * below_false / below_all


# ---------------------------------------------------------------------------
# Count-based step-up procedures
# ---------------------------------------------------------------------------


def _as_tstats(literature) -> np.ndarray:
    if isinstance(literature, Literature):
        return np.abs(literature.t)
    return np.abs(np.asarray(literature, dtype=float))


def _penalty(method: str, n: int) -> float:
    m = method.lower()
    if m == "bh95":
        return 1.0
    if m == "by13":
        return float(np.sum(1.0 / np.arange(1, n + 1)))
    raise DomainError(f"unknown step-up method {method!r}")


def stepup_hurdle(literature, alpha: float, method: str = "by13",
                  route: str = "plugin") -> HurdleResult:
    """Step-up hurdle from observed t-stats via two-sided normal p-values.

    ``route="stepup"`` runs the textbook p-value step-up; ``route="plugin"``
    minimizes the plug-in estimator FDRhat(h) = c * Pr(|t|>h | false) /
    share(|t| >= h) over observed hurdles, where c is 1 for BH95 and
    sum(1/i) for the BY Theorem-1.3 variant.  The two routes coincide on
    every dataset; both are exposed so that equivalence is testable.
    When nothing can be rejected the hurdle is +inf and flagged
    infeasible.
    """
    ts = _as_tstats(literature)
    n = ts.size
    if n == 0:
        raise DomainError("empty literature")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    c = _penalty(method, n)
    order = np.sort(ts)[::-1]  # descending |t| = ascending p
    pvals = 2.0 * special.ndtr(-order)
    # Count of |t| >= h for h at each sorted position; ties share the
    # count of the last tied member so both routes see the same ranks.
    ranks = np.arange(1, n + 1, dtype=float)
    tie_next = np.r_[order[1:] == order[:-1], False]
    for i in range(n - 2, -1, -1):
        if tie_next[i]:
            ranks[i] = ranks[i + 1]

    if route == "stepup":
        passing = pvals <= ranks * alpha / (n * c)
    elif route == "plugin":
        with np.errstate(divide="ignore"):
            fdr_hat = n * c * pvals / ranks
        passing = fdr_hat <= alpha
    else:
        raise DomainError(f"unknown route {route!r}")

    if not passing.any():
        return HurdleResult(math.inf, alpha, math.nan, method.lower(), feasible=False)
    k = int(np.max(np.nonzero(passing)[0]))  # last passing index: step-up
    hurdle = float(order[k])
    achieved = float(n * c * pvals[k] / ranks[k])
    return HurdleResult(hurdle, alpha, achieved, method.lower())


def empirical_fdr_counts(literature: Literature, h: float) -> float:
    """Share of false factors among those with |t| > h, from truth labels."""
    if literature.truth is None:
        raise DomainError("empirical FDR needs truth labels")
    exceed = np.abs(literature.t) > h
    n_exceed = int(exceed.sum())
    if n_exceed == 0:
        raise UndefinedRatioError(f"no t-stats exceed {h}")
    n_false = int((exceed & ~literature.truth).sum())
    return n_false / n_exceed


# ---------------------------------------------------------------------------
# Published-sample averages
# ---------------------------------------------------------------------------


def mean_published_shrinkage(tstats, params: ModelParams, signed: bool = False) -> float:
    """Mean shrinkage across a sample of published t-stats.

    Averaged over records rather than integrated against the model,
    mirroring how bootstrap replications evaluate the statistic on their
    own resampled published sample.
    """
    ts = np.asarray(tstats, dtype=float)
    if ts.size == 0:
        raise DomainError("empty published sample")
    if signed:
        if np.any(ts == 0):
            raise DomainError("signed shrinkage divides by t = 0")
        post = posterior_mean_mu(ts, params, signed=True)
        return float(np.mean((ts - post) / ts))
    ts = np.abs(ts)
    if np.any(ts == 0):
        raise DomainError("shrinkage divides by |t| = 0")
    post = posterior_mean_mu(ts, params, signed=False)
    return float(np.mean((ts - post) / ts))


def mean_published_local_fdr(tstats, params: ModelParams) -> float:
    """Mean local fdr across a sample of published t-stats."""
    ts = np.abs(np.asarray(tstats, dtype=float))
    if ts.size == 0:
        raise DomainError("empty published sample")
    return float(np.mean(local_fdr(ts, params)))


def mean_local_fdr_approx(alpha0: float, share_significant: float, pi_false: float) -> float:
    """Back-of-envelope published-sample FDR: alpha0 / share * pi_false.

    ``alpha0`` is the classical size (e.g. 0.05), ``share_significant``
    the fraction of all tested factors exceeding the classical hurdle.
    """
    if not 0.0 < share_significant <= 1.0:
        raise DomainError("share_significant must be in (0, 1]")
    return alpha0 / share_significant * pi_false
