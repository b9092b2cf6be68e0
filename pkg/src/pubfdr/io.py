"""CSV/JSON interchange and run manifests.

Data files are deterministic: floats are serialized with 15 significant
digits, keys are sorted, and rows keep input order, so re-running a
command reproduces byte-identical outputs.  Manifests carry everything
needed to reproduce a run (command, flags, seed, input digests) and are
the only outputs allowed to differ between identical runs (timestamps).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError
from .bootstrap import BootResult, PanelReturns
from .model import (
    ExponentialLatent,
    Literature,
    LogisticRule,
    LogNormalLatent,
    MixtureNormalLatent,
    ModelParams,
    ScaledTLatent,
    StaircaseRule,
    ThreeStepRule,
)

__all__ = [
    "fmt",
    "read_literature_csv",
    "write_literature_csv",
    "read_panel_csv",
    "params_to_dict",
    "params_from_dict",
    "write_json",
    "write_manifest",
    "sha256_file",
]


def fmt(x: float) -> str:
    """15-significant-digit decimal form used in every data file."""
    return format(float(x), ".15g")


def _parse_flag(raw: str, line: int, column: str):
    s = raw.strip().lower()
    if s == "":
        return None
    if s in ("1", "true", "t", "yes"):
        return True
    if s in ("0", "false", "f", "no"):
        return False
    raise DataFormatError(f"column {column!r}: cannot parse flag {raw!r}", line=line)


def read_literature_csv(path) -> Literature:
    """Load t-stats with optional truth/published flags.

    The only required column is ``t``; ``truth``, ``published``, and
    ``mu`` are optional and may be blank row by row (blank means
    unknown; a column with any parseable flags is kept).
    """
    path = Path(path)
    ts: list[float] = []
    truth: list = []
    published: list = []
    mus: list = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t" not in reader.fieldnames:
            raise DataFormatError(f"{path}: missing required column 't'", line=1)
        has_truth = "truth" in reader.fieldnames
        has_pub = "published" in reader.fieldnames
        has_mu = "mu" in reader.fieldnames
        for i, row in enumerate(reader, start=2):
            raw_t = (row.get("t") or "").strip()
            try:
                t = float(raw_t)
            except ValueError:
                raise DataFormatError(f"column 't': cannot parse {raw_t!r}", line=i) from None
            if not math.isfinite(t):
                raise DataFormatError(f"column 't': non-finite value {raw_t!r}", line=i)
            ts.append(t)
            if has_truth:
                truth.append(_parse_flag(row.get("truth") or "", i, "truth"))
            if has_pub:
                published.append(_parse_flag(row.get("published") or "", i, "published"))
            if has_mu:
                raw_mu = (row.get("mu") or "").strip()
                mus.append(float(raw_mu) if raw_mu else math.nan)
    if not ts:
        raise DataFormatError(f"{path}: no data rows", line=2)

    def flags(vals):
        if not vals or all(v is None for v in vals):
            return None
        if any(v is None for v in vals):
            raise DataFormatError(f"{path}: partially labeled flag column")
        return np.array(vals, dtype=bool)

    return Literature(
        t=np.array(ts), truth=flags(truth), published=flags(published),
        mu=np.array(mus) if mus else None, meta={"source": str(path)},
    )


def write_literature_csv(lit: Literature, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "t", "truth", "published", "mu"])
        n = len(lit)
        for i in range(n):
            writer.writerow([
                i,
                fmt(lit.t[i]),
                "" if lit.truth is None else int(lit.truth[i]),
                "" if lit.published is None else int(lit.published[i]),
                "" if lit.mu is None else fmt(lit.mu[i]),
            ])


def read_panel_csv(path) -> PanelReturns:
    """Long-format panel: columns predictor, month, return."""
    path = Path(path)
    cells: dict[tuple[str, str], float] = {}
    predictors: list[str] = []
    months: list[str] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"predictor", "month", "return"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataFormatError(
                f"{path}: panel CSV needs columns predictor,month,return", line=1
            )
        for i, row in enumerate(reader, start=2):
            pred = (row.get("predictor") or "").strip()
            month = (row.get("month") or "").strip()
            raw = (row.get("return") or "").strip()
            if not pred or not month:
                raise DataFormatError("empty predictor or month", line=i)
            if raw == "":
                continue  # explicit missing cell
            try:
                val = float(raw)
            except ValueError:
                raise DataFormatError(f"column 'return': cannot parse {raw!r}", line=i) from None
            if (pred, month) in cells:
                raise DataFormatError(f"duplicate cell ({pred}, {month})", line=i)
            cells[pred, month] = val
            if pred not in predictors:
                predictors.append(pred)
            if month not in months:
                months.append(month)
    if not cells:
        raise DataFormatError(f"{path}: no data rows", line=2)
    values = np.full((len(predictors), len(months)), np.nan)
    for (pred, month), val in cells.items():
        values[predictors.index(pred), months.index(month)] = val
    return PanelReturns(values, tuple(predictors), tuple(months))


# ---------------------------------------------------------------------------
# Model parameter (de)serialization
# ---------------------------------------------------------------------------

_LATENT_TAGS = {
    LogNormalLatent: "lognormal",
    ExponentialLatent: "exponential",
    ScaledTLatent: "scaled-t",
    MixtureNormalLatent: "mixture-normal",
}
_PUB_TAGS = {StaircaseRule: "staircase", ThreeStepRule: "three-step",
             LogisticRule: "logistic"}


def params_to_dict(params: ModelParams) -> dict:
    latent = params.latent
    lat = {"family": _LATENT_TAGS[type(latent)]}
    lat.update({k: v for k, v in latent.__dict__.items()})
    out = {"pi_false": params.pi_false, "latent": lat}
    if params.pub is None:
        out["pub"] = None
    else:
        pub = {"family": _PUB_TAGS[type(params.pub)]}
        pub.update({k: v for k, v in params.pub.__dict__.items()})
        out["pub"] = pub
    return out


def params_from_dict(d: dict) -> ModelParams:
    lat = dict(d["latent"])
    family = lat.pop("family")
    if family == "lognormal":
        latent = LogNormalLatent(**lat)
    elif family == "exponential":
        latent = ExponentialLatent(**lat)
    elif family == "scaled-t":
        latent = ScaledTLatent(**lat)
    elif family == "mixture-normal":
        latent = MixtureNormalLatent(**lat)
    else:
        raise DomainError(f"unknown latent family {family!r}")
    pub_d = d.get("pub")
    pub = None
    if pub_d is not None:
        pub_d = dict(pub_d)
        pfam = pub_d.pop("family")
        if pfam == "staircase":
            pub = StaircaseRule(**pub_d)
        elif pfam == "three-step":
            pub = ThreeStepRule(**pub_d)
        elif pfam == "logistic":
            pub = LogisticRule(**pub_d)
        else:
            raise DomainError(f"unknown publication family {pfam!r}")
    return ModelParams(pi_false=d["pi_false"], latent=latent, pub=pub)


def _round15(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round15(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _round15(obj.item())
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_round15(obj), indent=2, sort_keys=True) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(out_dir, command: str, args: dict, seed, inputs: list,
                   outputs: list, started: float) -> Path:
    """Reproducibility record paired with a command's outputs."""
    from . import __version__

    config = {k: v for k, v in args.items()
              if isinstance(v, (int, float, str, bool, type(None)))}
    manifest = {
        "command": command,
        "config": _round15(config),
        "seed": seed,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "wall_clock_s": round(time.time() - started, 3),
        "created_unix": round(time.time(), 3),
    }
    path = Path(out_dir) / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def boot_reps_csv(result: BootResult, path) -> None:
    """Per-replication table with the fixed column contract."""
    cols = ["rep", "pi_f", "e_mu", "sd_mu", "eta", "hurdle5", "hurdle1",
            "shrink_pub", "fdr_pub", "converged"]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in result.reps:
            if r.converged and r.theta is not None:
                e_mu, sd_mu = r.theta.latent.mean(), r.theta.latent.sd()
                eta = r.values.get("eta", r.values.get("eta_c", math.nan))
                row = [r.rep, fmt(r.values["pi_false"]), fmt(e_mu), fmt(sd_mu),
                       fmt(eta) if not math.isnan(eta) else "",
                       fmt(r.stats.get("hurdle5", math.nan)),
                       fmt(r.stats.get("hurdle1", math.nan)),
                       fmt(r.stats.get("shrink_pub", math.nan)),
                       fmt(r.stats.get("fdr_pub", math.nan)), 1]
            else:
                row = [r.rep, "", "", "", "", "", "", "", "", 0]
            writer.writerow(row)
