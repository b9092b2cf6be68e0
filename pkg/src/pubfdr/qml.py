"""Quasi-maximum-likelihood fitting of the publication-bias model.

The estimator maximizes the mean log marginal likelihood of published
|t|-stats.  The flat publication maximum s_bar cancels from the
conditional likelihood and is not estimated; the likelihood is further
conditioned on the sample inclusion region (|t| above a cutoff), so the
same code fits the baseline sample, the small-t extensions, and
selection-free data.

Optimization is derivative-free: Nelder-Mead on an unconstrained
reparameterization (scaled logit of each box-bounded coordinate), from
Latin-hypercube start points.  Fits are deterministic given the seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize
from scipy.stats import qmc

from .errors import (
    DegenerateModelError,
    DomainError,
    LikelihoodSupportError,
    NonConvergenceError,
)
from .model import (
    ExponentialLatent,
    LogisticRule,
    LogNormalLatent,
    MixtureNormalLatent,
    ModelParams,
    ScaledTLatent,
    StaircaseRule,
    ThreeStepRule,
    density_marginal,
    published_mass,
)

__all__ = ["FitSpec", "FitResult", "spec_variant", "neg_mean_loglik", "fit",
           "profile_loglik", "SPEC_VARIANTS"]

_LATENT_PARAMS = {
    "lognormal": ("log_mean", "log_sd"),
    "exponential": ("mean",),
    "scaled-t": ("scale", "dof"),
    "mixture-normal": ("weight", "mean1", "sd1", "mean2", "sd2"),
}
_PUB_PARAMS = {
    "staircase": ("eta",),
    "three-step": ("eta_a", "eta_b", "eta_c"),
    "logistic": ("center", "slope"),
    None: (),
}

# Latent bounds encode the modeling premise that true effects are distinct
# from zero: without them the likelihood admits a null-mimicking latent
# (mass piled near mu = 0) along which the mixture weight is unidentified
# even absent publication bias.  All bounds are per-spec overridable.
_DEFAULT_BOUNDS = {
    "pi_false": (0.01, 0.99),
    "log_mean": (0.0, 3.0),
    "log_sd": (0.05, 1.1),
    "mean": (0.5, 20.0),
    "scale": (0.5, 20.0),
    "dof": (2.1, 100.0),
    "weight": (0.0, 1.0),
    "mean1": (-10.0, 10.0),
    "sd1": (0.25, 10.0),
    "mean2": (-10.0, 10.0),
    "sd2": (0.25, 10.0),
    "eta": (1.0 / 3.0, 2.0 / 3.0),
    "eta_a": (0.0, 1.0),
    "eta_b": (0.0, 1.0),
    "eta_c": (0.0, 1.0),
    "center": (0.0, 6.0),
    "slope": (0.2, 20.0),
}

# Objective value used to steer the simplex away from invalid regions
# (non-monotone staircases, numerically degenerate densities).
_BIG = 1e6


@dataclass(frozen=True)
class FitSpec:
    """What to fit and how: families, bounds, inclusion region, optimizer knobs.

    A bound with ``lo == hi`` pins the parameter at that value and removes
    it from the optimization.  ``inclusion_cutoff`` is the strict lower
    bound on |t| for records entering the likelihood; the likelihood
    conditions on this region.
    """

    latent_family: str = "lognormal"
    pub_family: str | None = "staircase"
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    include_small_t: bool = False
    inclusion_cutoff: float = 1.96
    t_good: float = 2.58
    n_starts: int = 10
    tol: float = 1e-9
    max_iter: int = 500

    def __post_init__(self):
        if self.latent_family not in _LATENT_PARAMS:
            raise DomainError(f"unknown latent family {self.latent_family!r}")
        if self.pub_family not in _PUB_PARAMS:
            raise DomainError(f"unknown publication family {self.pub_family!r}")
        if self.include_small_t and self.inclusion_cutoff > 0.5:
            raise DomainError("small-t specs use an inclusion cutoff of 0.50")
        for name in self.bounds:
            if name not in self.param_names():
                raise DomainError(f"bound for unknown parameter {name!r}")

    def param_names(self) -> tuple[str, ...]:
        return ("pi_false",) + _LATENT_PARAMS[self.latent_family] + _PUB_PARAMS[self.pub_family]

    def bound(self, name: str) -> tuple[float, float]:
        return self.bounds.get(name, _DEFAULT_BOUNDS[name])

    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names() if self.bound(n)[0] < self.bound(n)[1])

    def build_params(self, values: dict[str, float]) -> ModelParams:
        lf = self.latent_family
        if lf == "lognormal":
            latent = LogNormalLatent(values["log_mean"], values["log_sd"])
        elif lf == "exponential":
            latent = ExponentialLatent(values["mean"])
        elif lf == "scaled-t":
            latent = ScaledTLatent(values["scale"], values["dof"])
        else:
            latent = MixtureNormalLatent(values["weight"], values["mean1"],
                                         values["sd1"], values["mean2"], values["sd2"])
        pf = self.pub_family
        if pf is None:
            pub = None
        elif pf == "staircase":
            pub = StaircaseRule(values["eta"], t_good=self.t_good)
        elif pf == "three-step":
            pub = ThreeStepRule(values["eta_a"], values["eta_b"], values["eta_c"],
                                t_good=self.t_good)
        else:
            pub = LogisticRule(values["center"], values["slope"])
        return ModelParams(pi_false=values["pi_false"], latent=latent, pub=pub)


def spec_variant(name: str) -> FitSpec:
    """Named estimation variants: the baseline plus ten robustness rows."""
    try:
        return SPEC_VARIANTS[name]()
    except KeyError:
        raise DomainError(
            f"unknown spec variant {name!r}; choose from {sorted(SPEC_VARIANTS)}"
        ) from None


SPEC_VARIANTS = {
    # (1) lognormal latent, one haircut in (1.96, 2.58], eta in [1/3, 2/3]
    "baseline": lambda: FitSpec(),
    # (2) include 0.5 < |t| < 1.96 with a free three-step rule
    "three-step": lambda: FitSpec(pub_family="three-step", include_small_t=True,
                                  inclusion_cutoff=0.5),
    # (3) same, but the two lowest steps are capped at 1/3
    "three-step-tight": lambda: FitSpec(
        pub_family="three-step", include_small_t=True, inclusion_cutoff=0.5,
        bounds={"eta_a": (0.0, 1.0 / 3.0), "eta_b": (0.0, 1.0 / 3.0),
                "eta_c": (1.0 / 3.0, 2.0 / 3.0)},
    ),
    # (4)-(5) floors on the share of false factors
    "pif-min-10": lambda: FitSpec(bounds={"pi_false": (0.10, 0.99)}),
    "pif-min-20": lambda: FitSpec(bounds={"pi_false": (0.20, 0.99)}),
    # (6)-(7) haircut pinned at 1/2, or allowed up to 1
    "eta-half": lambda: FitSpec(bounds={"eta": (0.5, 0.5)}),
    "eta-wide": lambda: FitSpec(bounds={"eta": (1.0 / 3.0, 1.0)}),
    # (8) smooth logistic selection
    "logistic": lambda: FitSpec(pub_family="logistic"),
    # (9)-(11) alternative latent families
    "exponential": lambda: FitSpec(latent_family="exponential"),
    "scaled-t": lambda: FitSpec(latent_family="scaled-t"),
    "mixture-normal": lambda: FitSpec(latent_family="mixture-normal"),
}


@dataclass
class FitResult:
    """Point estimate with convergence and bound-activity diagnostics."""

    theta: ModelParams
    values: dict[str, float]
    loglik: float  # mean log conditional likelihood at the optimum
    converged: bool
    n_obs: int
    spec: FitSpec
    bounds_active: tuple[str, ...] = ()
    n_starts_converged: int = 0


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def neg_mean_loglik(theta: ModelParams, tstats, spec: FitSpec) -> float:
    """Negative mean log likelihood of published |t| on the inclusion region.

    The density of each observation is s(|t|) f(|t|) normalized by the
    integral of s f above the inclusion cutoff, so both the selection
    scale s_bar and the truncation share cancel against the normalizer.
    """
    ts = np.abs(np.asarray(tstats, dtype=float))
    if np.any(ts <= spec.inclusion_cutoff):
        raise DomainError(
            f"observations at or below the inclusion cutoff {spec.inclusion_cutoff}"
        )
    f = np.atleast_1d(density_marginal(ts, theta))
    if theta.pub is not None:
        srel = theta.pub.relative_prob(ts)
        if np.any(srel <= 0.0):
            raise LikelihoodSupportError(
                "observations in a zero-publication-probability region"
            )
        f = f * srel
    z = published_mass(theta, t_low=spec.inclusion_cutoff)
    if z < 1e-300:
        raise DegenerateModelError("model places no mass on the inclusion region")
    with np.errstate(divide="ignore"):
        ll = np.log(f) - math.log(z)
    if not np.all(np.isfinite(ll)):
        return math.inf
    return -float(ll.mean())


# ---------------------------------------------------------------------------
# Box-constrained Nelder-Mead via scaled-logit reparameterization
# ---------------------------------------------------------------------------


def _expit(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _filter_tstats(tstats, spec: FitSpec) -> np.ndarray:
    ts = np.abs(np.asarray(tstats, dtype=float))
    return ts[ts > spec.inclusion_cutoff]


def _objective_factory(ts, spec):
    names = spec.param_names()
    free = spec.free_names()
    lo = np.array([spec.bound(n)[0] for n in free])
    hi = np.array([spec.bound(n)[1] for n in free])
    fixed = {n: spec.bound(n)[0] for n in names if n not in free}

    def unpack(zvec):
        vals = dict(fixed)
        x = lo + (hi - lo) * _expit(np.asarray(zvec, dtype=float))
        vals.update(zip(free, x))
        return vals

    def objective(zvec):
        vals = unpack(zvec)
        try:
            theta = spec.build_params(vals)
            return neg_mean_loglik(theta, ts, spec)
        except (DomainError, DegenerateModelError, LikelihoodSupportError):
            # e.g. a non-monotone staircase proposal: steer the simplex away
            return _BIG
    return objective, unpack, free, lo, hi


def _start_points(spec: FitSpec, seed: int, d: int) -> np.ndarray:
    sampler = qmc.LatinHypercube(d=d, seed=seed)
    u = np.clip(sampler.random(spec.n_starts), 0.02, 0.98)
    return np.log(u) - np.log1p(-u)


def _sorted_staircase_starts(u_z, free):
    # Project three-step starts into the monotone region by sorting levels.
    idx = [i for i, n in enumerate(free) if n in ("eta_a", "eta_b", "eta_c")]
    if len(idx) > 1:
        u_z[:, idx] = np.sort(u_z[:, idx], axis=1)
    return u_z


def fit(tstats, spec: FitSpec, seed: int = 0, n_jobs: int = 1) -> FitResult:
    """Best of ``spec.n_starts`` local optimizations of the mean log likelihood.

    Observations outside the inclusion region are dropped; fewer than 30
    usable observations triggers a small-sample warning.  Raises
    :class:`NonConvergenceError` if no start converges.  Deterministic
    given (data, spec, seed), including under start-level parallelism.
    """
    ts = _filter_tstats(tstats, spec)
    if ts.size == 0:
        raise DomainError("no observations inside the inclusion region")
    if ts.size < 30:
        warnings.warn(
            f"only {ts.size} observations in the inclusion region; "
            "estimates will be unstable", stacklevel=2,
        )
    objective, unpack, free, lo, hi = _objective_factory(ts, spec)
    d = len(free)
    if d == 0:
        raise DomainError("all parameters are fixed; nothing to fit")
    z0s = _sorted_staircase_starts(_start_points(spec, seed, d), free)

    def run_start(z0):
        res = optimize.minimize(
            objective, z0, method="Nelder-Mead",
            options={"maxiter": spec.max_iter, "fatol": spec.tol, "xatol": 1e-4},
        )
        return res

    results = Parallel(n_jobs=n_jobs)(delayed(run_start)(z0) for z0 in z0s)
    ok = [r for r in results if r.success and r.fun < _BIG]
    if not ok:
        raise NonConvergenceError(
            "no start converged",
            diagnostics=[f"start {i}: {r.message} (f={r.fun:.6g})"
                         for i, r in enumerate(results)],
        )
    best_idx = min(range(len(results)), key=lambda i: (results[i].fun, i))
    best = results[best_idx]
    values = unpack(best.x)
    theta = spec.build_params(values)
    active = tuple(
        n for n in free
        if min(abs(values[n] - spec.bound(n)[0]), abs(values[n] - spec.bound(n)[1])) < 1e-6
    )
    return FitResult(
        theta=theta, values={n: float(values[n]) for n in spec.param_names()},
        loglik=-float(best.fun), converged=bool(best.success),
        n_obs=int(ts.size), spec=spec, bounds_active=active,
        n_starts_converged=len(ok),
    )


def profile_loglik(tstats, spec: FitSpec, param_name: str, grid,
                   seed: int = 0, n_jobs: int = 1) -> list[tuple[float, float]]:
    """Profile of the mean log likelihood over one parameter.

    Each grid value pins the parameter (bounds collapsed to a point) and
    refits the rest; returns (value, mean loglik) pairs.
    """
    if param_name not in spec.param_names():
        raise DomainError(f"{param_name!r} is not a parameter of this spec")
    lo, hi = spec.bound(param_name)
    out = []
    for v in np.asarray(grid, dtype=float):
        if not lo <= v <= hi:
            raise DomainError(f"grid value {v} outside bounds for {param_name}")
        pinned = dict(spec.bounds)
        pinned[param_name] = (float(v), float(v))
        res = fit(tstats, replace(spec, bounds=pinned), seed=seed, n_jobs=n_jobs)
        out.append((float(v), res.loglik))
    return out
