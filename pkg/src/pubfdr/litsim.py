"""Monte Carlo generation of synthetic literatures.

Literatures are generated in two steps: draw each factor's truth status
and latent effect, add sampling noise, then publish with probability
s(|t|).  Sampling noise can be AR1-correlated across factor indexes,

    eps_0 ~ Normal(0, 1),    eps_i ~ Normal(rho * eps_{i-1}, sqrt(1 - rho^2)),

which keeps the marginal distribution exactly standard normal while
inducing cross-factor correlation rho.

A second, deliberately simple model adds "supporting evidence" z to the
publication decision (publish iff t > t_cut and z > z_min, one-sided and
unfolded) to study the bias from fitting selection models that ignore z.

All randomness flows through numpy's Philox generator, a counter-based
RNG whose streams are reproducible across platforms; replications derive
child streams by spawning the seed sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import math
import numpy as np
from scipy import optimize, signal, special

from .errors import DomainError, NoSolutionError
from .model import LatentDist, Literature, ModelParams

__all__ = [
    "SimConfig",
    "EvidenceSimConfig",
    "EvidenceRecords",
    "simulate",
    "simulate_published",
    "simulate_evidence",
    "truncated_mean_t",
    "estimate_lambda_misspecified",
    "posterior_mean_ignoring_evidence",
    "posterior_mean_with_evidence",
    "shrinkage_bias_study",
    "EvidenceCell",
]


def make_rng(seed) -> np.random.Generator:
    """Philox generator for the given seed or SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SimConfig:
    """Configuration for one simulated literature."""

    n_factors: int
    params: ModelParams
    rho: float = 0.0
    seed: int = 0
    apply_publication: bool = True

    def __post_init__(self):
        if self.n_factors < 1:
            raise DomainError("n_factors must be >= 1")
        if not abs(self.rho) < 1.0:
            raise DomainError("AR1 coefficient must satisfy |rho| < 1")


def _ar1_noise(rng, n: int, rho: float) -> np.ndarray:
    z = rng.standard_normal(n)
    if rho == 0.0 or n == 1:
        return z
    drive = z.copy()
    drive[1:] *= math.sqrt(1.0 - rho * rho)
    return signal.lfilter([1.0], [1.0, -rho], drive)


def simulate(config: SimConfig) -> Literature:
    """Draw one literature: truth labels, latent effects, AR1 noise, flags."""
    rng = make_rng(config.seed)
    params = config.params
    n = config.n_factors
    truth = rng.random(n) >= params.pi_false  # True = true factor
    mu = np.zeros(n)
    n_true = int(truth.sum())
    if n_true:
        mu[truth] = params.latent.rvs(rng, n_true)
    eps = _ar1_noise(rng, n, config.rho)
    t = mu + eps
    published = None
    if config.apply_publication and params.pub is not None:
        prob = params.pub.s_bar * params.pub.relative_prob(np.abs(t))
        published = rng.random(n) < prob
    return Literature(
        t=t, truth=truth, published=published, mu=mu,
        meta={"seed": config.seed, "rho": config.rho, "n_factors": n},
    )


def simulate_published(params: ModelParams, n_published: int, seed: int = 0,
                       rho: float = 0.0, batch: int = 4096) -> np.ndarray:
    """Signed t-stats of the first ``n_published`` published factors.

    Draws factor batches until enough pass the publication rule; the
    underlying literature is discarded.
    """
    if params.pub is None:
        raise DomainError("simulate_published needs a publication rule")
    if n_published < 1:
        raise DomainError("n_published must be >= 1")
    out: list[np.ndarray] = []
    got = 0
    ss = np.random.SeedSequence(seed)
    while got < n_published:
        (child,) = ss.spawn(1)
        lit = simulate(SimConfig(batch, params, rho=rho, seed=child,
                                 apply_publication=True))
        pub_t = lit.t[lit.published]
        out.append(pub_t)
        got += pub_t.size
    return np.concatenate(out)[:n_published]


# ---------------------------------------------------------------------------
# Supporting-evidence model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvidenceSimConfig:
    """Simulation where publication requires both t > t_cut and z > z_min.

    The latent effect is Normal(0, lambda_var); t and z are each
    Normal(mu, 1) with conditional correlation rho_tz.  Selection is
    one-sided in t (no absolute value).
    """

    n_factors: int
    lambda_var: float
    rho_tz: float = 0.0
    z_min: float = 0.0
    t_cut: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.n_factors < 1:
            raise DomainError("n_factors must be >= 1")
        if not self.lambda_var > 0:
            raise DomainError("lambda_var must be > 0")
        if not 0.0 <= self.rho_tz <= 0.6:
            raise DomainError("rho_tz must lie in [0, 0.6]")


@dataclass(eq=False)
class EvidenceRecords:
    t: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    published: np.ndarray


def simulate_evidence(config: EvidenceSimConfig) -> EvidenceRecords:
    """Draw (t, z, mu) and the joint-cutoff publication flag.

    z is drawn from its conditional law given (t, mu), which keeps the
    noise correlation exact: z | t, mu ~ Normal(mu + rho (t - mu),
    1 - rho^2).
    """
    rng = make_rng(config.seed)
    n = config.n_factors
    mu = rng.normal(0.0, math.sqrt(config.lambda_var), n)
    t = mu + rng.standard_normal(n)
    rho = config.rho_tz
    z = mu + rho * (t - mu) + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    published = (t > config.t_cut) & (z > config.z_min)
    return EvidenceRecords(t=t, z=z, mu=mu, published=published)


def truncated_mean_t(lambda_var: float, t_cut: float) -> float:
    """E(t | t > t_cut) when t ~ Normal(0, 1 + lambda_var): no-evidence moment."""
    sigma = math.sqrt(1.0 + lambda_var)
    x = t_cut / sigma
    sf = float(special.ndtr(-x))
    if sf <= 0.0:
        raise DomainError("cutoff too deep in the tail")
    return sigma * math.exp(-0.5 * x * x) / (math.sqrt(2 * math.pi) * sf)


def estimate_lambda_misspecified(published_t, t_cut: float = 2.5,
                                 bracket: tuple[float, float] = (0.01, 50.0)) -> float:
    """Latent variance matching the mean published t while ignoring evidence.

    Solves mean(published t) = E(t | t > t_cut; lambda) by bisection; the
    moment is increasing in lambda, so a target outside the bracket's
    moment range has no solution.
    """
    ts = np.asarray(published_t, dtype=float)
    if ts.size == 0:
        raise DomainError("empty published sample")
    target = float(ts.mean())
    lo, hi = bracket
    m_lo, m_hi = truncated_mean_t(lo, t_cut), truncated_mean_t(hi, t_cut)
    if target < m_lo:
        raise NoSolutionError(
            f"mean published t {target:.4f} below the lambda -> {lo} moment {m_lo:.4f}"
        )
    if target > m_hi:
        raise NoSolutionError(
            f"mean published t {target:.4f} above the lambda -> {hi} moment {m_hi:.4f}"
        )
    return float(optimize.brentq(
        lambda lam: truncated_mean_t(lam, t_cut) - target, lo, hi, xtol=1e-10
    ))


def posterior_mean_ignoring_evidence(t, lambda_var: float):
    """E(mu | t; lambda): conjugate posterior mean using t alone."""
    return np.asarray(t, dtype=float) * lambda_var / (1.0 + lambda_var)


def posterior_mean_with_evidence(t, z, lambda_var: float, rho_tz: float):
    """E(mu | t, z; lambda): closed-form bivariate-normal posterior mean."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    return lambda_var * (t + z) / (1.0 + rho_tz + 2.0 * lambda_var)


@dataclass(frozen=True)
class EvidenceCell:
    """One grid cell of the misspecification study."""

    lambda_var: float
    rho_tz: float
    z_min: float
    n_published: int
    lambda_hat: float
    shrinkage_estimated: float
    shrinkage_actual: float
    frac_underestimates: float  # share of published records with E(mu|t) <= E(mu|t,z)


def shrinkage_bias_study(lambda_grid, rho_grid, zmin_grid, n_factors: int = 200_000,
                         t_cut: float = 2.5, seed: int = 0) -> list[EvidenceCell]:
    """Estimated vs actual shrinkage across the evidence-model grid.

    Per cell: simulate, estimate lambda ignoring z, form the misspecified
    posterior means, and report shrinkage as one minus the ratio of mean
    estimated (or actual) mu to mean t among published records.  The
    per-record posterior comparison uses the true lambda on both sides.
    """
    ss = np.random.SeedSequence(seed)
    cells = []
    for lam in lambda_grid:
        for rho in rho_grid:
            for zmin in zmin_grid:
                (child,) = ss.spawn(1)
                cfg = EvidenceSimConfig(
                    n_factors=n_factors, lambda_var=lam, rho_tz=rho,
                    z_min=zmin, t_cut=t_cut, seed=child,
                )
                rec = simulate_evidence(cfg)
                pub = rec.published
                t_pub, z_pub, mu_pub = rec.t[pub], rec.z[pub], rec.mu[pub]
                if t_pub.size == 0:
                    raise DomainError(
                        f"no published records in cell {(lam, rho, zmin)}"
                    )
                lam_hat = estimate_lambda_misspecified(t_pub, t_cut)
                mu_hat = posterior_mean_ignoring_evidence(t_pub, lam_hat)
                est = 1.0 - float(mu_hat.mean()) / float(t_pub.mean())
                act = 1.0 - float(mu_pub.mean()) / float(t_pub.mean())
                ign = posterior_mean_ignoring_evidence(t_pub, lam)
                full = posterior_mean_with_evidence(t_pub, z_pub, lam, rho)
                frac = float(np.mean(ign <= full))
                cells.append(EvidenceCell(
                    lambda_var=lam, rho_tz=rho, z_min=zmin,
                    n_published=int(t_pub.size), lambda_hat=lam_hat,
                    shrinkage_estimated=est, shrinkage_actual=act,
                    frac_underestimates=frac,
                ))
    return cells
