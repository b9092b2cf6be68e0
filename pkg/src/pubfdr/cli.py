"""Command-line driver: simulate, fit, stats, and bootstrap workflows.

Every command takes an explicit seed, writes deterministic data files
into --out-dir, and pairs them with a manifest recording flags, seed,
and input digests.  Exit codes: 0 success, 2 usage error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import (
    BootConfig,
    bootstrap_nonparametric,
    bootstrap_semiparametric,
    summarize,
)
from .errors import DataFormatError, DomainError, PubFdrError
from .io import (
    boot_reps_csv,
    fmt,
    params_from_dict,
    params_to_dict,
    read_literature_csv,
    read_panel_csv,
    write_json,
    write_literature_csv,
    write_manifest,
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
    hlz_benchmark,
    tail_prob,
)
from .mtstats import fdr_bayes, fnr, hurdle_for_fdr, local_fdr, shrinkage
from .qml import FitSpec, SPEC_VARIANTS, fit, spec_variant
from .litsim import SimConfig, simulate

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _parse_floats(raw: str, n_expected: int, what: str) -> list[float]:
    try:
        vals = [float(x) for x in raw.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated floats, got {raw!r}") from None
    if len(vals) != n_expected:
        raise UsageError(f"{what}: expected {n_expected} values, got {len(vals)}")
    return vals


_LATENT_ARG_COUNT = {"lognormal": 2, "exp": 1, "scaled-t": 2, "mixture": 5}
_PUB_ARG_COUNT = {"staircase": 1, "three-step": 3, "logistic": 2, "none": 0}


def _build_latent(family: str, raw_args: str):
    vals = _parse_floats(raw_args, _LATENT_ARG_COUNT[family], "--latent-args")
    if family == "lognormal":
        return LogNormalLatent(*vals)
    if family == "exp":
        return ExponentialLatent(*vals)
    if family == "scaled-t":
        return ScaledTLatent(*vals)
    return MixtureNormalLatent(*vals)


def _build_pub(family: str, raw_args: str, t_good: float, s_bar: float):
    if family == "none":
        return None
    vals = _parse_floats(raw_args, _PUB_ARG_COUNT[family], "--pub-args")
    if family == "staircase":
        return StaircaseRule(vals[0], t_good=t_good, s_bar=s_bar)
    if family == "three-step":
        return ThreeStepRule(*vals, t_good=t_good, s_bar=s_bar)
    return LogisticRule(*vals, s_bar=s_bar)


def _params_from_flags(args) -> ModelParams:
    latent = _build_latent(args.latent, args.latent_args)
    pub = _build_pub(args.pub, args.pub_args, args.t_good, args.s_bar)
    return ModelParams(pi_false=args.pi_f, latent=latent, pub=pub)


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--pi-f", type=float, default=0.01,
                   help="share of false factors (default 0.01)")
    p.add_argument("--latent", choices=sorted(_LATENT_ARG_COUNT), default="lognormal")
    p.add_argument("--latent-args", default="0.701,0.745",
                   help="lognormal: log-mean,log-sd | exp: mean | "
                        "scaled-t: scale,dof | mixture: w,m1,s1,m2,s2")
    p.add_argument("--pub", choices=sorted(_PUB_ARG_COUNT), default="staircase")
    p.add_argument("--pub-args", default="0.667",
                   help="staircase: eta | three-step: eta_a,eta_b,eta_c | "
                        "logistic: center,slope")
    p.add_argument("--t-good", type=float, default=2.58)
    p.add_argument("--s-bar", type=float, default=1.0)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="parallel workers")
    p.add_argument("--out-dir", default=".", help="output directory")


def _spec_from_args(args) -> FitSpec:
    spec = spec_variant(args.spec)
    if args.n_starts is not None:
        spec = FitSpec(**{**spec.__dict__, "n_starts": args.n_starts})
    return spec


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.time()
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    params = _params_from_flags(args)
    lit = simulate(SimConfig(
        n_factors=args.n, params=params, rho=args.rho, seed=args.seed,
        apply_publication=not args.no_publication,
    ))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "literature.csv"
    write_literature_csv(lit, out)
    write_manifest(out_dir, "simulate", vars(args), args.seed, [], [out], started)
    print(f"wrote {out} ({len(lit)} factors, "
          f"{int(lit.published.sum()) if lit.published is not None else len(lit)} published)")
    return 0


def _load_tstats(path) -> np.ndarray:
    lit = read_literature_csv(path)
    if lit.published is not None:
        return lit.t[lit.published]
    return lit.t


def cmd_fit(args) -> int:
    started = time.time()
    ts = _load_tstats(args.input)
    spec = _spec_from_args(args)
    usable = np.abs(ts)[np.abs(ts) > spec.inclusion_cutoff]
    if usable.size == 0:
        raise DataFormatError(
            f"all rows excluded by the inclusion cutoff {spec.inclusion_cutoff}"
        )
    res = fit(ts, spec, seed=args.seed, n_jobs=args.threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "fit.json"
    write_json({
        "theta": params_to_dict(res.theta),
        "values": res.values,
        "e_mu_true": res.theta.latent.mean(),
        "sd_mu_true": res.theta.latent.sd(),
        "loglik": res.loglik,
        "converged": res.converged,
        "n_obs": res.n_obs,
        "bounds_active": list(res.bounds_active),
        "spec": args.spec,
    }, out)
    write_manifest(out_dir, "fit", vars(args), args.seed, [args.input], [out], started)
    print(f"wrote {out} (n_obs={res.n_obs}, loglik={res.loglik:.6f}, "
          f"converged={res.converged})")
    return 0


def _stats_payload(params: ModelParams, grid_max: float, grid_step: float):
    h5 = hurdle_for_fdr(0.05, params)
    h1 = hurdle_for_fdr(0.01, params)
    grid = np.arange(grid_step, grid_max + 0.5 * grid_step, grid_step)
    dens = np.atleast_1d(density_marginal(grid, params))
    lf = np.atleast_1d(local_fdr(grid, params))
    rows = []
    for i, t in enumerate(grid):
        rows.append({
            "t": t,
            "density": dens[i],
            "local_fdr": lf[i],
            "fdr_tail": fdr_bayes(t, params),
            "fnr": fnr(t, params),
            "shrinkage": shrinkage(float(t), params).shrinkage,
        })
    payload = {
        "hurdle5": h5.hurdle, "hurdle5_feasible": h5.feasible,
        "hurdle1": h1.hurdle, "hurdle1_feasible": h1.feasible,
        "params": params_to_dict(params),
    }
    return payload, rows


def _hist_probs(params: ModelParams, edges: np.ndarray) -> list[float]:
    return [tail_prob(a, b, params, "all") for a, b in zip(edges[:-1], edges[1:])]


def cmd_stats(args) -> int:
    started = time.time()
    inputs = []
    if args.params:
        import json as _json

        params = params_from_dict(_json.loads(Path(args.params).read_text())["theta"])
        inputs.append(args.params)
    else:
        params = _params_from_flags(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload, rows = _stats_payload(params, args.grid_max, args.grid_step)
    curves = out_dir / "stats_curves.csv"
    with curves.open("w") as fh:
        cols = ["t", "density", "local_fdr", "fdr_tail", "fnr", "shrinkage"]
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in cols) + "\n")
    outputs = [curves, out_dir / "stats.json"]
    write_json(payload, out_dir / "stats.json")

    if args.hlz_demo:
        base = hlz_benchmark()
        no_false = ModelParams(0.0, base.latent, base.pub)
        edges = np.arange(0.0, 10.0 + 0.25, 0.25)
        demo = {
            "baseline": {
                "hurdle5": hurdle_for_fdr(0.05, base).hurdle,
                "params": params_to_dict(base),
            },
            "no_false": {
                "hurdle5": hurdle_for_fdr(0.05, no_false).hurdle,
                "params": params_to_dict(no_false),
            },
            "bin_edges": list(edges),
        }
        hist = out_dir / "hlz_demo_hist.csv"
        pb = _hist_probs(base, edges)
        pn = _hist_probs(no_false, edges)
        with hist.open("w") as fh:
            fh.write("bin_lo,bin_hi,baseline_prob,no_false_prob\n")
            for j in range(len(edges) - 1):
                fh.write(f"{fmt(edges[j])},{fmt(edges[j+1])},{fmt(pb[j])},{fmt(pn[j])}\n")
        write_json(demo, out_dir / "hlz_demo.json")
        outputs += [hist, out_dir / "hlz_demo.json"]

    write_manifest(out_dir, "stats", vars(args), args.seed, inputs, outputs, started)
    print(f"wrote {', '.join(str(o) for o in outputs)}")
    return 0


def cmd_bootstrap(args) -> int:
    started = time.time()
    spec = _spec_from_args(args)
    config = BootConfig(
        n_reps=args.reps, spec=spec, seed=args.seed,
        stats_requested=tuple(args.stats.split(",")), n_jobs=args.threads,
    )
    inputs = []
    if args.mode == "nonparam":
        if not args.input:
            raise UsageError("--mode nonparam requires --input")
        ts = _load_tstats(args.input)
        inputs.append(args.input)
        result = bootstrap_nonparametric(ts, config)
    else:
        if not args.panel:
            raise UsageError("--mode semiparam requires --panel")
        if not args.point:
            raise UsageError("--mode semiparam requires --point (fit JSON)")
        import json as _json

        panel = read_panel_csv(args.panel)
        point = params_from_dict(_json.loads(Path(args.point).read_text())["theta"])
        inputs += [args.panel, args.point]
        result = bootstrap_semiparametric(
            panel, point, config,
            n_predictors=args.n_predictors, n_months=args.n_months,
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reps_path = out_dir / "boot_reps.csv"
    boot_reps_csv(result, reps_path)
    summary = summarize(result)
    write_json({
        "percentiles": summary,
        "n_requested": result.n_requested,
        "n_failed": result.n_failed,
    }, out_dir / "boot_summary.json")
    outputs = [reps_path, out_dir / "boot_summary.json"]
    write_manifest(out_dir, "bootstrap", vars(args), args.seed, inputs, outputs, started)
    print(f"wrote {reps_path} ({result.n_requested} reps, {result.n_failed} failed)")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pubfdr",
        description="Multiple testing statistics for t-stat literatures "
                    "under publication bias",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic literature CSV")
    p_sim.add_argument("--n", type=int, required=True, help="number of factors")
    p_sim.add_argument("--rho", type=float, default=0.0, help="AR1 noise correlation")
    p_sim.add_argument("--no-publication", action="store_true",
                       help="emit all factors without publication flags")
    _add_model_flags(p_sim)
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="QML fit of the selection model to a t-stat CSV")
    p_fit.add_argument("--input", required=True, help="literature CSV (column t)")
    p_fit.add_argument("--spec", choices=sorted(SPEC_VARIANTS), default="baseline")
    p_fit.add_argument("--n-starts", type=int, default=None)
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_stats = sub.add_parser("stats", help="hurdles and statistic curves for a model")
    p_stats.add_argument("--params", default=None, help="fit JSON from the fit command")
    p_stats.add_argument("--grid-max", type=float, default=10.0)
    p_stats.add_argument("--grid-step", type=float, default=0.01)
    p_stats.add_argument("--hlz-demo", action="store_true",
                         help="also emit the benchmark comparison (baseline vs "
                              "no-false-factor hurdles and binned densities)")
    _add_model_flags(p_stats)
    _add_common(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    p_boot = sub.add_parser("bootstrap", help="bootstrap fitted statistics")
    p_boot.add_argument("--mode", choices=["nonparam", "semiparam"], default="nonparam")
    p_boot.add_argument("--input", default=None, help="literature CSV (nonparam)")
    p_boot.add_argument("--panel", default=None, help="panel CSV (semiparam)")
    p_boot.add_argument("--point", default=None, help="point-estimate fit JSON (semiparam)")
    p_boot.add_argument("--reps", type=int, default=1000)
    p_boot.add_argument("--spec", choices=sorted(SPEC_VARIANTS), default="baseline")
    p_boot.add_argument("--n-starts", type=int, default=None)
    p_boot.add_argument("--stats", default="hurdle5,hurdle1,shrink_pub,fdr_pub")
    p_boot.add_argument("--n-predictors", type=int, default=5000)
    p_boot.add_argument("--n-months", type=int, default=350)
    _add_common(p_boot)
    p_boot.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PubFdrError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
