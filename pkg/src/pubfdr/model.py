"""Mixture model of t-statistics under selective publication.

A literature of hypothesis tests ("factors") is modeled in two steps.
First an unbiased t-stat is generated for each factor:

    t | mu ~ Normal(mu, 1)

where the latent effect ``mu`` is zero for false factors (drawn with
probability ``pi_false``) and follows a parametric distribution for true
factors.  Second, the factor is published with probability ``s(|t|)``, a
weakly increasing function that is flat at its maximum ``s_bar`` above a
threshold ``t_good`` (the "well-observed" region).

This module defines the parameter types and computes exact densities and
tail probabilities of ``|t|`` conditional on truth status and publication.
Latent integrals use composite Gauss-Legendre quadrature on a node grid
that combines latent quantile panels (resolving peaked priors) with
unit-width panels over the region reached by the Normal(mu, 1) kernel.
All t-stat normalization integrals truncate at ``|t| = 20``, beyond which
densities are negligible for empirically relevant parameters.

All functions here are pure; every parameter type is a frozen dataclass,
so quadrature rules can be cached and shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .errors import DegenerateModelError, DomainError, QuadratureError, TailUnderflowError

__all__ = [
    "T_SUPPORT_MAX",
    "LogNormalLatent",
    "ExponentialLatent",
    "ScaledTLatent",
    "MixtureNormalLatent",
    "LatentDist",
    "StaircaseRule",
    "ThreeStepRule",
    "LogisticRule",
    "PubRule",
    "ModelParams",
    "Literature",
    "density_false",
    "density_true",
    "density_marginal",
    "density_published",
    "tail_prob",
    "published_mass",
    "posterior_mean_mu",
    "identification_epsilon",
    "conditional_cdf_well_observed",
    "hlz_benchmark",
    "lognormal_benchmark",
]

#: Upper end of the t-stat support used for normalization integrals.
T_SUPPORT_MAX = 20.0

# Latent probability mass clipped per tail when bracketing the support.
_TAIL_CLIP = 1e-11
# Reach of the standard normal kernel: phi(9) ~ 1e-18.
_KERNEL_SPAN = 9.0

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def _norm_cdf(x):
    return special.ndtr(x)


def _norm_sf(x):
    return special.ndtr(-np.asarray(x, dtype=float))


def _check_finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


# ---------------------------------------------------------------------------
# Latent effect distributions g(. | lambda) for true factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogNormalLatent:
    """Log-normal latent effect: log(mu) ~ Normal(log_mean, log_sd)."""

    log_mean: float
    log_sd: float

    def __post_init__(self):
        _check_finite("log_mean", self.log_mean)
        if not self.log_sd > 0:
            raise DomainError(f"log_sd must be > 0, got {self.log_sd}")

    has_negative_support = False

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(x) - self.log_mean) / self.log_sd
            out = np.exp(-0.5 * z * z) / (x * self.log_sd * _SQRT_2PI)
        return np.where(x > 0, out, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(x) - self.log_mean) / self.log_sd
        return np.where(x > 0, _norm_cdf(z), 0.0)

    def ppf(self, u):
        return np.exp(self.log_mean + self.log_sd * special.ndtri(u))

    def mean(self):
        return math.exp(self.log_mean + 0.5 * self.log_sd**2)

    def sd(self):
        v = self.log_sd**2
        return math.sqrt((math.exp(v) - 1.0) * math.exp(2.0 * self.log_mean + v))

    def rvs(self, rng, size):
        return rng.lognormal(self.log_mean, self.log_sd, size)


@dataclass(frozen=True)
class ExponentialLatent:
    """Exponential latent effect with the given mean, in t-stat units."""

    mean_: float

    def __post_init__(self):
        if not self.mean_ > 0:
            raise DomainError(f"exponential mean must be > 0, got {self.mean_}")

    has_negative_support = False

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-x / self.mean_) / self.mean_, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-x / self.mean_), 0.0)

    def ppf(self, u):
        return -self.mean_ * np.log1p(-np.asarray(u, dtype=float))

    def mean(self):
        return self.mean_

    def sd(self):
        return self.mean_

    def rvs(self, rng, size):
        return rng.exponential(self.mean_, size)


@dataclass(frozen=True)
class ScaledTLatent:
    """Student-t latent effect scaled by ``scale``; symmetric around zero."""

    scale: float
    dof: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale must be > 0, got {self.scale}")
        if not self.dof > 2:
            raise DomainError(f"dof must be > 2 (finite variance), got {self.dof}")

    has_negative_support = True

    def pdf(self, x):
        z = np.asarray(x, dtype=float) / self.scale
        nu = self.dof
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return np.exp(logc - 0.5 * (nu + 1) * np.log1p(z * z / nu)) / self.scale

    def cdf(self, x):
        return special.stdtr(self.dof, np.asarray(x, dtype=float) / self.scale)

    def ppf(self, u):
        return self.scale * special.stdtrit(self.dof, np.asarray(u, dtype=float))

    def mean(self):
        return 0.0

    def sd(self):
        return self.scale * math.sqrt(self.dof / (self.dof - 2.0))

    def rvs(self, rng, size):
        return self.scale * rng.standard_t(self.dof, size)


@dataclass(frozen=True)
class MixtureNormalLatent:
    """Two-component normal mixture: ``weight`` on Normal(mean1, sd1)."""

    weight: float
    mean1: float
    sd1: float
    mean2: float
    sd2: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise DomainError(f"weight must be in [0, 1], got {self.weight}")
        if not (self.sd1 > 0 and self.sd2 > 0):
            raise DomainError("mixture component sds must be > 0")
        _check_finite("mean1", self.mean1)
        _check_finite("mean2", self.mean2)

    has_negative_support = True

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        p1 = _norm_pdf((x - self.mean1) / self.sd1) / self.sd1
        p2 = _norm_pdf((x - self.mean2) / self.sd2) / self.sd2
        return self.weight * p1 + (1.0 - self.weight) * p2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        c1 = _norm_cdf((x - self.mean1) / self.sd1)
        c2 = _norm_cdf((x - self.mean2) / self.sd2)
        return self.weight * c1 + (1.0 - self.weight) * c2

    def mean(self):
        return self.weight * self.mean1 + (1.0 - self.weight) * self.mean2

    def sd(self):
        m2 = self.weight * (self.mean1**2 + self.sd1**2) + (1.0 - self.weight) * (
            self.mean2**2 + self.sd2**2
        )
        return math.sqrt(m2 - self.mean() ** 2)

    def rvs(self, rng, size):
        pick1 = rng.random(size) < self.weight
        draws = np.where(
            pick1,
            rng.normal(self.mean1, self.sd1, size),
            rng.normal(self.mean2, self.sd2, size),
        )
        return draws


LatentDist = Union[LogNormalLatent, ExponentialLatent, ScaledTLatent, MixtureNormalLatent]


def _latent_support(latent) -> tuple[float, float]:
    """Bracket of the latent support leaving < 1e-10 total tail mass outside."""
    if isinstance(latent, LogNormalLatent):
        lo = latent.ppf(_TAIL_CLIP)
        hi = latent.ppf(1.0 - _TAIL_CLIP)
    elif isinstance(latent, ExponentialLatent):
        lo = 0.0
        hi = latent.ppf(1.0 - _TAIL_CLIP)
    elif isinstance(latent, ScaledTLatent):
        hi = float(latent.ppf(1.0 - _TAIL_CLIP))
        lo = -hi
    else:
        z = -special.ndtri(_TAIL_CLIP)
        lo = min(latent.mean1 - z * latent.sd1, latent.mean2 - z * latent.sd2)
        hi = max(latent.mean1 + z * latent.sd1, latent.mean2 + z * latent.sd2)
    return float(lo), float(hi)


def _quantile_edges(latent, k: int) -> np.ndarray:
    """Panel edges adapted to the latent shape.

    Gaussian-flavored latents use edges uniform in the underlying normal
    score (equal-mass edges leave an unresolved boundary layer in the
    compressed log-normal left tail); the others use equal-mass edges.
    """
    z_max = -special.ndtri(_TAIL_CLIP)
    z = np.linspace(-z_max, z_max, k + 1)
    if isinstance(latent, LogNormalLatent):
        return np.exp(latent.log_mean + latent.log_sd * z)
    if isinstance(latent, MixtureNormalLatent):
        e1 = latent.mean1 + latent.sd1 * z
        e2 = latent.mean2 + latent.sd2 * z
        return np.union1d(e1, e2)
    if isinstance(latent, ScaledTLatent):
        # Power-law tails need geometrically spaced panels; equal-mass
        # edges leave one panel spanning several decades.
        core = latent.ppf(np.linspace(0.05, 0.95, k + 1))
        start = float(latent.ppf(0.95))
        hi = float(latent.ppf(1.0 - _TAIL_CLIP))
        n_tail = max(int(k), int(math.ceil(math.log(hi / start) / math.log(1.15))))
        tail = start * (hi / start) ** (np.arange(n_tail + 1) / n_tail)
        return np.union1d(core, np.union1d(tail, -tail))
    # Exponential: edges uniform in decay lengths, so every panel sees the
    # same relative pdf variation (equal-mass edges leave one long panel
    # spanning many decay lengths at the top).
    return latent.mean_ * np.linspace(0.0, -math.log(_TAIL_CLIP), k + 1)


# ---------------------------------------------------------------------------
# Latent quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _gl_nodes(order: int):
    return leggauss(order)


def _panel_rule(edges: np.ndarray, order: int = 6):
    """Composite Gauss-Legendre nodes/weights over consecutive panel edges."""
    x, w = _gl_nodes(order)
    a = edges[:-1]
    b = edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (half[:, None] * x + mid[:, None]).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


@dataclass(frozen=True)
class _LatentRule:
    nodes: np.ndarray
    weights: np.ndarray  # Gauss weight times latent pdf; sums to ~1


@lru_cache(maxsize=256)
def latent_rule(latent: LatentDist) -> _LatentRule:
    """Quadrature rule integrating h against the latent density.

    ``sum(rule.weights * h(rule.nodes))`` approximates ``E[h(mu)]``.  The
    panel grid is the union of latent quantile edges (adapted by doubling
    until the latent mass is recovered to 1e-9) and unit-spaced edges over
    the window where the Normal(mu, 1) kernel can reach t-stats below
    ``T_SUPPORT_MAX``; the quantile construction doubles as the
    compactifying change of variables needed by heavy-tailed latents.
    """
    lo, hi = _latent_support(latent)
    target = float(latent.cdf(hi) - latent.cdf(lo))

    k_lo = -T_SUPPORT_MAX - _KERNEL_SPAN if latent.has_negative_support else 0.0
    a, b = max(lo, k_lo), min(hi, T_SUPPORT_MAX + _KERNEL_SPAN)
    if a < b:
        kernel_edges = np.linspace(a, b, int(math.ceil((b - a) / 1.75)) + 1)
    else:
        kernel_edges = np.empty(0)

    k = 16
    err = math.inf
    while k <= 1024:
        edges = np.union1d(_quantile_edges(latent, k), kernel_edges)
        edges = edges[(edges >= lo) & (edges <= hi)]
        edges = np.union1d(edges, [lo, hi])
        nodes, weights = _panel_rule(edges)
        gw = weights * latent.pdf(nodes)
        err = abs(float(gw.sum()) - target)
        if err < 1e-9:
            return _LatentRule(nodes, gw)
        k *= 2
    raise QuadratureError(
        f"latent quadrature did not converge for {latent!r}", achieved=err
    )


def _fold_kernel_sum(t, nodes, gw, signed=False, block=2048):
    """sum_j gw_j * K(t, mu_j) with K the (folded) Normal(mu, 1) density."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, dtype=float)
    for i in range(0, t.size, block):
        tt = t[i : i + block, None]
        k = _norm_pdf(tt - nodes)
        if not signed:
            k = k + _norm_pdf(tt + nodes)
        out[i : i + block] = k @ gw
    return out


def _true_interval_prob(a, b, latent):
    """Pr(a < |t| <= b | true factor); ``b`` may be +inf."""
    rule = latent_rule(latent)
    mu = rule.nodes
    if math.isinf(b):
        upper = _norm_sf(a - mu) + _norm_cdf(-a - mu)
        return float(rule.weights @ upper)
    core = _norm_cdf(b - mu) - _norm_cdf(a - mu) + _norm_cdf(-a - mu) - _norm_cdf(-b - mu)
    return float(rule.weights @ core)


def _false_interval_prob(a, b):
    """Pr(a < |t| <= b | false factor) in closed form."""
    if math.isinf(b):
        return float(2.0 * _norm_sf(a))
    return float(2.0 * (_norm_cdf(b) - _norm_cdf(a)))


# ---------------------------------------------------------------------------
# Publication rules s(|t|), expressed relative to the flat maximum s_bar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StaircaseRule:
    """Two-level staircase: nothing below 1.96, haircut ``eta`` up to ``t_good``.

    ``relative_prob`` returns s(|t|)/s_bar; the absolute publication
    probability is ``s_bar * relative_prob`` and only matters for
    simulation -- s_bar cancels out of every conditional statistic.
    """

    eta: float
    t_good: float = 2.58
    s_bar: float = 1.0

    marginal_cutoff = 1.96

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must be in [0, 1], got {self.eta}")
        if not self.t_good > self.marginal_cutoff:
            raise DomainError(f"t_good must exceed {self.marginal_cutoff}")
        if not 0.0 < self.s_bar <= 1.0:
            raise DomainError("s_bar must be in (0, 1]")

    def steps(self):
        return (
            (0.0, self.marginal_cutoff, 0.0),
            (self.marginal_cutoff, self.t_good, self.eta),
            (self.t_good, math.inf, 1.0),
        )

    def relative_prob(self, t_abs):
        t = np.asarray(t_abs, dtype=float)
        return np.select(
            [t > self.t_good, t > self.marginal_cutoff], [1.0, self.eta], default=0.0
        )


@dataclass(frozen=True)
class ThreeStepRule:
    """Four-level staircase admitting t-stats below 1.96.

    Levels ``eta_a <= eta_b <= eta_c`` apply below 1.50, on (1.50, 1.96],
    and on (1.96, t_good]; above ``t_good`` the rule is flat at s_bar.
    """

    eta_a: float
    eta_b: float
    eta_c: float
    t_good: float = 2.58
    s_bar: float = 1.0

    low_cutoff = 1.50
    marginal_cutoff = 1.96

    def __post_init__(self):
        for name in ("eta_a", "eta_b", "eta_c"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v}")
        if not (self.eta_a <= self.eta_b + 1e-12 and self.eta_b <= self.eta_c + 1e-12):
            raise DomainError("staircase levels must be weakly increasing")
        if not self.t_good > self.marginal_cutoff:
            raise DomainError(f"t_good must exceed {self.marginal_cutoff}")
        if not 0.0 < self.s_bar <= 1.0:
            raise DomainError("s_bar must be in (0, 1]")

    def steps(self):
        return (
            (0.0, self.low_cutoff, self.eta_a),
            (self.low_cutoff, self.marginal_cutoff, self.eta_b),
            (self.marginal_cutoff, self.t_good, self.eta_c),
            (self.t_good, math.inf, 1.0),
        )

    def relative_prob(self, t_abs):
        t = np.asarray(t_abs, dtype=float)
        return np.select(
            [t > self.t_good, t > self.marginal_cutoff, t > self.low_cutoff],
            [1.0, self.eta_c, self.eta_b],
            default=self.eta_a,
        )


@dataclass(frozen=True)
class LogisticRule:
    """Smooth logistic selection: s(|t|)/s_bar = expit(slope * (|t| - center)).

    The rule only approaches flatness, so ``t_good`` is defined
    operationally as the point where it reaches 99.9% of s_bar.
    """

    center: float
    slope: float
    s_bar: float = 1.0

    def __post_init__(self):
        _check_finite("center", self.center)
        if not self.slope > 0:
            raise DomainError(f"slope must be > 0, got {self.slope}")
        if not 0.0 < self.s_bar <= 1.0:
            raise DomainError("s_bar must be in (0, 1]")

    @property
    def t_good(self) -> float:
        return self.center + math.log(0.999 / 0.001) / self.slope

    def steps(self):
        return None

    def relative_prob(self, t_abs):
        t = np.asarray(t_abs, dtype=float)
        return special.expit(self.slope * (t - self.center))


PubRule = Union[StaircaseRule, ThreeStepRule, LogisticRule]


# ---------------------------------------------------------------------------
# Full parameter vector and literature container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Share of false factors, latent distribution, and publication rule.

    ``pub=None`` models a literature without selective publication
    (s identically 1), used for simulation checks and unselected fits.
    """

    pi_false: float
    latent: LatentDist
    pub: PubRule | None = None

    def __post_init__(self):
        if not 0.0 <= self.pi_false <= 1.0:
            raise DomainError(f"pi_false must be in [0, 1], got {self.pi_false}")


@dataclass(eq=False)
class Literature:
    """A collection of factors: signed t-stats plus optional labels.

    ``truth[i]`` is True for true factors (nonzero latent effect) and is
    None for ingested data without labels; likewise ``published``.  ``mu``
    carries the simulated latent effects when known.
    """

    t: np.ndarray
    truth: np.ndarray | None = None
    published: np.ndarray | None = None
    mu: np.ndarray | None = None
    meta: dict | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if not np.all(np.isfinite(self.t)):
            raise DomainError("t-stats must be finite")
        for name in ("truth", "published"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=bool)
                if v.shape != self.t.shape:
                    raise DomainError(f"{name} must match t in length")
                setattr(self, name, v)
        if self.mu is not None:
            self.mu = np.asarray(self.mu, dtype=float)

    def __len__(self):
        return self.t.size

    @property
    def published_t(self) -> np.ndarray:
        if self.published is None:
            return self.t
        return self.t[self.published]


# ---------------------------------------------------------------------------
# Densities of |t|
# ---------------------------------------------------------------------------


def _ret(t, out):
    out = np.asarray(out)
    return out if np.ndim(t) else float(out[0] if out.ndim else out)


def _check_t_abs(t_abs) -> np.ndarray:
    t = np.asarray(t_abs, dtype=float)
    if np.any(t < 0):
        raise DomainError("absolute t-stat must be >= 0")
    return t


def density_false(t_abs):
    """Density of |t| for false factors: the folded standard normal 2*phi."""
    t = _check_t_abs(t_abs)
    return _ret(t_abs, 2.0 * _norm_pdf(np.atleast_1d(t)))


def density_true(t_abs, latent: LatentDist):
    """Density of |t| for true factors: the latent mixed over the folded kernel."""
    t = _check_t_abs(t_abs)
    rule = latent_rule(latent)
    return _ret(t_abs, _fold_kernel_sum(t, rule.nodes, rule.weights))


def density_marginal(t_abs, params: ModelParams):
    """Unconditional density of |t| across false and true factors."""
    t = _check_t_abs(t_abs)
    pi = params.pi_false
    t1 = np.atleast_1d(t)
    out = pi * 2.0 * _norm_pdf(t1)
    if pi < 1.0:
        rule = latent_rule(params.latent)
        out = out + (1.0 - pi) * _fold_kernel_sum(t1, rule.nodes, rule.weights)
    return _ret(t_abs, out)


def _marginal_interval_prob(a, b, params):
    pi = params.pi_false
    p = pi * _false_interval_prob(a, b)
    if pi < 1.0:
        p += (1.0 - pi) * _true_interval_prob(a, b, params.latent)
    return p


def _published_interval_mass(params, a, b):
    """Integral of s(|t|)/s_bar times the marginal density over (a, b]."""
    pub = params.pub
    if pub is None:
        return _marginal_interval_prob(a, b, params)
    steps = pub.steps()
    if steps is not None:
        total = 0.0
        for lo, hi, level in steps:
            inner_lo, inner_hi = max(a, lo), min(b, hi)
            if level > 0.0 and inner_lo < inner_hi:
                total += level * _marginal_interval_prob(inner_lo, inner_hi, params)
        return total
    # Smooth rule: integrate over t numerically up to the truncation point,
    # then add the flat-region tail exactly (the rule is ~constant there).
    total = 0.0
    hi = min(b, T_SUPPORT_MAX)
    if a < hi:
        edges = np.linspace(a, hi, int(math.ceil((hi - a) / 0.25)) + 1)
        nodes, weights = _panel_rule(edges)
        vals = pub.relative_prob(nodes) * np.atleast_1d(density_marginal(nodes, params))
        total += float(weights @ vals)
    if b > T_SUPPORT_MAX:
        lo_tail = max(a, T_SUPPORT_MAX)
        total += float(pub.relative_prob(lo_tail)) * _marginal_interval_prob(
            lo_tail, b, params
        )
    return total


def published_mass(params: ModelParams, t_low: float = 0.0) -> float:
    """Normalizer of the published density: integral of s/s_bar * f above t_low."""
    return _published_interval_mass(params, t_low, math.inf)


def density_published(t_abs, params: ModelParams):
    """Density of |t| conditional on publication.

    Equals ``s(|t|) f(|t|)`` renormalized over [0, inf); the flat maximum
    ``s_bar`` cancels, so only relative selection probabilities matter.
    """
    t = _check_t_abs(t_abs)
    pub = params.pub
    t1 = np.atleast_1d(t)
    f = np.atleast_1d(density_marginal(t1, params))
    if pub is None:
        return _ret(t_abs, f)
    z = published_mass(params)
    if z < 1e-12:
        raise DegenerateModelError(
            "publication rule assigns (near-)zero probability everywhere"
        )
    return _ret(t_abs, pub.relative_prob(t1) * f / z)


def tail_prob(t_low, t_high, params: ModelParams, condition: str = "all") -> float:
    """Pr(|t| in (t_low, t_high] | condition).

    ``condition`` is one of ``"all"``, ``"false"``, ``"true"``, or
    ``"published"``; ``t_high`` may be ``inf``.
    """
    if t_low < 0 or t_high < t_low:
        raise DomainError(f"need 0 <= t_low <= t_high, got ({t_low}, {t_high})")
    cond = condition.lower()
    if cond == "false":
        return _false_interval_prob(t_low, t_high)
    if cond == "true":
        return _true_interval_prob(t_low, t_high, params.latent)
    if cond == "all":
        return _marginal_interval_prob(t_low, t_high, params)
    if cond == "published":
        z = published_mass(params)
        if z < 1e-12:
            raise DegenerateModelError(
                "publication rule assigns (near-)zero probability everywhere"
            )
        return _published_interval_mass(params, t_low, t_high) / z
    raise DomainError(f"unknown condition {condition!r}")


def posterior_mean_mu(t, params: ModelParams, signed: bool = False):
    """E(mu | |t| = t) under the full mixture (false factors contribute mu = 0).

    With ``signed=True`` the conditioning is on the signed t-stat, for
    latent families that place mass on negative effects.
    """
    rule = latent_rule(params.latent)
    pi = params.pi_false
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if not signed:
        if np.any(tt < 0):
            raise DomainError("unsigned posterior mean needs |t| >= 0")
    num = (1.0 - pi) * _fold_kernel_sum(tt, rule.nodes, rule.nodes * rule.weights, signed=signed)
    f_true = _fold_kernel_sum(tt, rule.nodes, rule.weights, signed=signed)
    f_false = _norm_pdf(tt) if signed else 2.0 * _norm_pdf(tt)
    den = pi * f_false + (1.0 - pi) * f_true
    if np.any(den < 1e-300):
        raise TailUnderflowError("posterior density underflow at requested t")
    return _ret(t, num / den)


# ---------------------------------------------------------------------------
# Identification diagnostics
# ---------------------------------------------------------------------------


def _require_t_good(params) -> float:
    if params.pub is None:
        raise DomainError("identification diagnostics need a publication rule")
    return params.pub.t_good


def identification_epsilon(params: ModelParams, t_grid=None) -> float:
    """Distinctness bound: max over t > t_good of the false/true interval-probability ratio.

    Small values mean false factors rarely reach the well-observed region
    relative to true factors, which makes pi_false weakly identified but
    the true-factor parameters strongly identified.
    """
    t_good = _require_t_good(params)
    if t_grid is None:
        t_grid = np.linspace(t_good + 1e-3, T_SUPPORT_MAX, 400)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= t_good):
        raise DomainError("epsilon grid must lie strictly above t_good")
    ratios = [
        _false_interval_prob(t_good, tb) / _true_interval_prob(t_good, tb, params.latent)
        for tb in t_grid
    ]
    return float(max(ratios))


def conditional_cdf_well_observed(t_bar, params: ModelParams) -> float:
    """Pr(|t| <= t_bar | |t| > t_good), the shape of the well-observed region."""
    t_good = _require_t_good(params)
    if t_bar <= t_good:
        return 0.0
    num = _marginal_interval_prob(t_good, t_bar, params)
    den = _marginal_interval_prob(t_good, math.inf, params)
    if den < 1e-12:
        raise TailUnderflowError("no mass above t_good")
    return num / den


# ---------------------------------------------------------------------------
# Reference parameterizations
# ---------------------------------------------------------------------------


def hlz_benchmark() -> ModelParams:
    """Harvey-Liu-Zhu (2016) style benchmark: pi_false 0.444, exponential
    latent with mean 2.0, 50% haircut between 1.96 and 2.57."""
    return ModelParams(
        pi_false=0.444,
        latent=ExponentialLatent(2.0),
        pub=StaircaseRule(eta=0.5, t_good=2.57),
    )


def lognormal_benchmark() -> ModelParams:
    """Log-normal point estimate typical of the cross-sectional predictor
    literature: nearly all factors true, E(mu|T) = 2.66, SD(mu|T) = 2.29."""
    e_mu, sd_mu = 2.66, 2.29
    v = math.log1p((sd_mu / e_mu) ** 2)
    return ModelParams(
        pi_false=0.01,
        latent=LogNormalLatent(log_mean=math.log(e_mu) - 0.5 * v, log_sd=math.sqrt(v)),
        pub=StaircaseRule(eta=2.0 / 3.0, t_good=2.58),
    )
