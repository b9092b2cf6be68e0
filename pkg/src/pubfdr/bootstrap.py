"""Bootstrap uncertainty for fitted models and derived statistics.

Two schemes.  The nonparametric bootstrap resamples published t-stats
with replacement and refits, which preserves the selection bias baked
into the sample.  The semi-parametric cluster bootstrap draws whole
months of panel-return residuals (keeping cross-predictor correlation),
converts each drawn predictor's residuals into a sampling-noise draw,
simulates latent effects from a supplied point estimate, applies the
publication rule, and refits.

Every replication runs on its own spawned Philox stream, so results are
identical for a given seed regardless of how replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .errors import DomainError, NonConvergenceError, PubFdrError
from .model import ModelParams
from .mtstats import hurdle_for_fdr, mean_published_local_fdr, mean_published_shrinkage
from .qml import FitSpec, fit
from .litsim import make_rng

__all__ = [
    "BootConfig",
    "BootResult",
    "RepRecord",
    "PanelReturns",
    "bootstrap_nonparametric",
    "bootstrap_semiparametric",
    "draw_residual_panel",
    "summarize",
    "DEFAULT_STATS",
]

DEFAULT_STATS = ("hurdle5", "hurdle1", "shrink_pub", "fdr_pub")

#: Ratio of failed replications above which the whole run is rejected.
_MAX_FAILURE_SHARE = 0.20


@dataclass(frozen=True)
class BootConfig:
    """Replication count, fit spec, seed, and requested statistics.

    The baseline analysis uses 1000 replications; robustness variants use
    500.  ``signed_shrinkage`` defaults to the convention that symmetric
    latent families track the sign of t.
    """

    n_reps: int = 1000
    spec: FitSpec = field(default_factory=FitSpec)
    seed: int = 0
    stats_requested: tuple[str, ...] = DEFAULT_STATS
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_reps < 1:
            raise DomainError("n_reps must be >= 1")
        unknown = set(self.stats_requested) - set(DEFAULT_STATS)
        if unknown:
            raise DomainError(f"unknown statistics requested: {sorted(unknown)}")

    @property
    def signed_shrinkage(self) -> bool:
        return self.spec.latent_family in ("scaled-t", "mixture-normal")


@dataclass
class RepRecord:
    """One bootstrap replication: the refitted model and its statistics."""

    rep: int
    converged: bool
    values: dict[str, float]
    stats: dict[str, float]
    theta: ModelParams | None = None


@dataclass
class BootResult:
    reps: list[RepRecord]
    n_requested: int
    n_failed: int
    seed: int
    stats_requested: tuple[str, ...]

    @property
    def ok_reps(self) -> list[RepRecord]:
        return [r for r in self.reps if r.converged]


def _rep_statistics(theta: ModelParams, published_t: np.ndarray,
                    requested, signed: bool) -> dict[str, float]:
    """Requested statistics at one fitted theta, averaged over that
    replication's own published sample where applicable."""
    out: dict[str, float] = {}
    if "hurdle5" in requested:
        out["hurdle5"] = hurdle_for_fdr(0.05, theta).hurdle
    if "hurdle1" in requested:
        out["hurdle1"] = hurdle_for_fdr(0.01, theta).hurdle
    if "shrink_pub" in requested:
        out["shrink_pub"] = mean_published_shrinkage(published_t, theta, signed=signed)
    if "fdr_pub" in requested:
        out["fdr_pub"] = mean_published_local_fdr(published_t, theta)
    return out


def _finish(reps: list[RepRecord], config: BootConfig) -> BootResult:
    n_failed = sum(not r.converged for r in reps)
    if n_failed > _MAX_FAILURE_SHARE * config.n_reps:
        raise NonConvergenceError(
            f"{n_failed}/{config.n_reps} bootstrap replications failed "
            f"(limit {_MAX_FAILURE_SHARE:.0%})"
        )
    return BootResult(
        reps=reps, n_requested=config.n_reps, n_failed=n_failed,
        seed=config.seed, stats_requested=tuple(config.stats_requested),
    )


def bootstrap_nonparametric(tstats, config: BootConfig,
                            resample: bool = True) -> BootResult:
    """Resample published t-stats with replacement, refit, recompute stats.

    ``resample=False`` runs every replication on the original sample (the
    identity resample), which is the degenerate single-rep sanity check.
    Replications whose fit does not converge are recorded with
    ``converged=False`` and excluded from summaries; more than 20%
    failures aborts the run.
    """
    ts = np.asarray(tstats, dtype=float)
    if ts.size == 0:
        raise DomainError("empty t-stat sample")
    children = np.random.SeedSequence(config.seed).spawn(config.n_reps)

    def one_rep(i):
        rng = make_rng(children[i])
        sample = ts[rng.integers(0, ts.size, ts.size)] if resample else ts
        try:
            res = fit(sample, config.spec, seed=int(rng.integers(2**31)))
            stats = _rep_statistics(res.theta, sample, config.stats_requested,
                                    config.signed_shrinkage)
            return RepRecord(i, res.converged, res.values, stats, res.theta)
        except PubFdrError:
            return RepRecord(i, False, {}, {})

    reps = Parallel(n_jobs=config.n_jobs)(
        delayed(one_rep)(i) for i in range(config.n_reps)
    )
    return _finish(reps, config)


# ---------------------------------------------------------------------------
# Semi-parametric cluster bootstrap over panel returns
# ---------------------------------------------------------------------------


@dataclass
class PanelReturns:
    """Monthly returns, one row per predictor, NaN where unobserved."""

    values: np.ndarray
    predictor_ids: tuple[str, ...]
    months: tuple[str, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DomainError("panel must be 2-D (predictors x months)")
        n_pred, n_mon = self.values.shape
        if n_pred < 2 or n_mon < 2:
            raise DomainError("panel needs at least 2 predictors and 2 months")
        if len(self.predictor_ids) != n_pred or len(self.months) != n_mon:
            raise DomainError("panel labels must match the value matrix")

    def residuals(self) -> np.ndarray:
        """Returns demeaned within predictor over observed months."""
        with np.errstate(invalid="ignore"):
            means = np.nanmean(self.values, axis=1, keepdims=True)
        return self.values - means


def draw_residual_panel(panel: PanelReturns, rng, n_predictors: int,
                        n_months: int, min_obs: int = 24) -> np.ndarray:
    """One cluster-bootstrap draw of the residual panel.

    Months are drawn once (with replacement) and shared by every drawn
    predictor, preserving cross-predictor correlation; predictor draws
    with fewer than ``min_obs`` observed months among the drawn months
    are redrawn.
    """
    res = panel.residuals()
    n_src, n_mon = res.shape
    month_idx = rng.integers(0, n_mon, n_months)
    drawn = res[:, month_idx]
    counts = np.sum(~np.isnan(drawn), axis=1)
    eligible = np.nonzero(counts >= min_obs)[0]
    if eligible.size == 0:
        raise DomainError(
            f"no predictor has {min_obs} observed months in this month draw"
        )
    ok = np.isin(np.arange(n_src), eligible)
    pred_idx = rng.integers(0, n_src, n_predictors)
    bad = ~ok[pred_idx]
    while bad.any():
        pred_idx[bad] = rng.integers(0, n_src, int(bad.sum()))
        bad = ~ok[pred_idx]
    return drawn[pred_idx]


def _noise_from_residuals(res_panel: np.ndarray) -> np.ndarray:
    """t-stat sampling noise: mean / sd * sqrt(n_obs) per drawn predictor."""
    n_obs = np.sum(~np.isnan(res_panel), axis=1)
    mean = np.nanmean(res_panel, axis=1)
    sd = np.nanstd(res_panel, axis=1, ddof=1)
    return mean / sd * np.sqrt(n_obs)


def bootstrap_semiparametric(panel: PanelReturns, point: ModelParams,
                             config: BootConfig, n_predictors: int = 5000,
                             n_months: int = 350, min_obs: int = 24) -> BootResult:
    """Cluster bootstrap of panel residuals combined with a parametric draw.

    Per replication: resample the residual panel, convert each drawn
    predictor into a sampling-noise draw, simulate truth status and
    latent effects from ``point``, form t = mu + eps, apply the point
    estimate's publication rule, and refit on the published |t|.
    """
    if point.pub is None:
        raise DomainError("semi-parametric bootstrap needs a publication rule")
    children = np.random.SeedSequence(config.seed).spawn(config.n_reps)

    def one_rep(i):
        rng = make_rng(children[i])
        try:
            res_panel = draw_residual_panel(panel, rng, n_predictors, n_months, min_obs)
            eps = _noise_from_residuals(res_panel)
            truth = rng.random(n_predictors) >= point.pi_false
            mu = np.zeros(n_predictors)
            if truth.any():
                mu[truth] = point.latent.rvs(rng, int(truth.sum()))
            t = mu + eps
            prob = point.pub.s_bar * point.pub.relative_prob(np.abs(t))
            published = rng.random(n_predictors) < prob
            pub_t = t[published]
            if pub_t.size == 0:
                raise DomainError("empty published sample in replication")
            res = fit(pub_t, config.spec, seed=int(rng.integers(2**31)))
            stats = _rep_statistics(res.theta, pub_t[np.abs(pub_t) > config.spec.inclusion_cutoff],
                                    config.stats_requested, config.signed_shrinkage)
            return RepRecord(i, res.converged, res.values, stats, res.theta)
        except PubFdrError:
            return RepRecord(i, False, {}, {})

    reps = Parallel(n_jobs=config.n_jobs)(
        delayed(one_rep)(i) for i in range(config.n_reps)
    )
    return _finish(reps, config)


def summarize(result: BootResult, percentiles=(5, 25, 50, 75, 95)) -> dict:
    """Percentile table (linear interpolation) over converged replications.

    Returns {statistic: {percentile: value}} for every requested
    statistic and every fitted parameter.
    """
    ok = result.ok_reps
    if not ok:
        raise DomainError("no converged replications to summarize")
    names: list[str] = list(result.stats_requested) + list(ok[0].values.keys())
    table: dict[str, dict[int, float]] = {}
    for name in names:
        if name in result.stats_requested:
            vals = np.array([r.stats[name] for r in ok])
        else:
            vals = np.array([r.values[name] for r in ok])
        qs = np.percentile(vals, percentiles, method="linear")
        table[name] = {int(p): float(q) for p, q in zip(percentiles, qs)}
    return table
