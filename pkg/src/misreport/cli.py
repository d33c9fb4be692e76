"""Command-line front end.

``misreport bounds|estimate|simulate|verify`` reads one YAML config (plus an
optional built-in profile), applies environment and flag overrides, runs the
requested computation and writes CSV, JSON and fixed-width text reports.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .bounds import RESTRICTIONS, AssumptionSet, check_testable_implications, compute_bounds
from .data import Sample, estimate_cond_prob, make_binning
from .errors import BudgetExceededError, ConfigError, DataError, MisreportError
from .has import fit_has
from .moments import (LINKS, LinkFunction, ModelSpec, build_hypercubes, design_matrix,
                      hypercube_count_for, moment_data)
from .setest import BetaGrid, estimate_identified_set
from .sim import DESIGNS, ERRORS, MCSettings, format_mc_table, run_monte_carlo
from .verify import VerifyProfile, run_verification

log = logging.getLogger("misreport")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
SUBCOMMANDS = ("bounds", "estimate", "simulate", "verify")
FLOAT_FORMAT = "%.17g"

DEFAULT_SCENARIOS = [[d, e, n] for d in ("Z", "W") for n in (500, 1000, 2000) for e in ERRORS]

DEFAULTS = {
    "seed": 12345,
    "threads": 1,
    "output": {"dir": "misreport-out", "formats": ["csv", "json", "txt"]},
    "data": {"path": None, "schema": None, "y": "y", "x": [], "z": None, "w": None,
             "w_order": None, "college_years": 16},
    "bounds": {"mode": "Z", "restriction": "none", "abar0": 1.0, "abar1": 1.0,
               "cells_per_dim": 4, "min_cell_count": 10, "tau": 0.02},
    "model": {"kind": "semiparametric", "link": "normal", "link_scale": 1.0, "intercept": True,
              "include_z": True, "normalize": None, "norm_value": 1.0, "grid": {},
              "grid_budget": 2_000_000, "kappa": 1.0, "cubes": "auto", "has": True,
              "has_starts": 5},
    "simulate": {"scenarios": DEFAULT_SCENARIOS, "replications": 100, "half_width": 1.0,
                 "step": 0.05, "kappa": 1.0, "cells_per_dim": 4, "min_cell_count": 10,
                 "has": True, "has_starts": 5},
    "verify": {"oracle_instances": 10, "witness_instances": 100, "delta": 0.01,
               "designs": ["Z", "W", "ZW"], "errors": list(ERRORS), "run_oracle": True,
               "run_witness": True, "run_population": True},
}

# keys whose values are free-form mappings rather than fixed sections
FREE_KEYS = {("model", "grid")}


# --------------------------------------------------------------------------
# configuration

def _merge(base: dict, update: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        where = ".".join(path + (str(key),))
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and (path + (key,)) not in FREE_KEYS:
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], val, path + (key,))
        else:
            out[key] = copy.deepcopy(val)
    return out


def _read_yaml(text: str, origin: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {origin}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{origin} must hold a mapping at the top level")
    return doc


def resource_text(name: str) -> str:
    return resources.files("misreport").joinpath("resources", name).read_text()


def resource_path(name: str) -> Path:
    return Path(str(resources.files("misreport").joinpath("resources", name)))


def load_profile(name: str) -> dict:
    try:
        text = resource_text(f"profile_{name}.yaml")
    except FileNotFoundError:
        raise ConfigError(f"unknown profile {name!r}") from None
    return _read_yaml(text, f"profile {name!r}")


@dataclass
class RunConfig:
    """Merged configuration for one subcommand run."""

    subcommand: str
    settings: dict
    quiet: bool = False

    def __getitem__(self, key):
        return self.settings[key]

    @property
    def out_dir(self) -> Path:
        return Path(self.settings["output"]["dir"])

    @classmethod
    def build(cls, subcommand: str, *, config_path=None, profile=None, overrides=None,
              environ=None) -> "RunConfig":
        """Defaults, then profile, config file, environment and flag overrides."""
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        settings = copy.deepcopy(DEFAULTS)
        if profile:
            settings = _merge(settings, load_profile(profile))
        if config_path:
            try:
                text = Path(config_path).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
            settings = _merge(settings, _read_yaml(text, str(config_path)))
        env = os.environ if environ is None else environ
        for var, key in (("MISREPORT_SEED", "seed"), ("MISREPORT_THREADS", "threads")):
            if env.get(var):
                try:
                    settings[key] = int(env[var])
                except ValueError:
                    raise ConfigError(f"{var} must be an integer") from None
        for path, val in (overrides or {}).items():
            node = settings
            for k in path[:-1]:
                node = node[k]
            node[path[-1]] = val
        cfg = cls(subcommand, settings)
        cfg.validate()
        return cfg

    def validate(self):
        s = self.settings
        if int(s["threads"]) < 1:
            raise ConfigError("threads must be at least 1")
        b = s["bounds"]
        if b["mode"] not in ("Z", "W", "ZW"):
            raise ConfigError(f"bounds.mode must be Z, W or ZW, got {b['mode']!r}")
        if b["restriction"] not in RESTRICTIONS:
            raise ConfigError(f"bounds.restriction must be one of {RESTRICTIONS}")
        if int(b["cells_per_dim"]) < 1 or int(b["min_cell_count"]) < 1:
            raise ConfigError("cells_per_dim and min_cell_count must be positive")
        m = s["model"]
        if m["link"] not in LINKS:
            raise ConfigError(f"model.link must be one of {LINKS}")
        if m["cubes"] != "auto" and (not isinstance(m["cubes"], int) or m["cubes"] < 1):
            raise ConfigError("model.cubes must be 'auto' or a positive integer")
        for sc in s["simulate"]["scenarios"]:
            if len(sc) != 3 or sc[0] not in DESIGNS or sc[1] not in ERRORS:
                raise ConfigError(f"bad scenario {sc!r}; expected [design, error, n]")
        fmts = set(s["output"]["formats"])
        if not fmts or not fmts <= {"csv", "json", "txt"}:
            raise ConfigError("output.formats must be a nonempty subset of csv, json, txt")
        if self.subcommand in ("bounds", "estimate") and not s["data"]["path"]:
            raise ConfigError(f"{self.subcommand} needs a data path (data.path or --data)")

    def prepare_output(self) -> Path:
        out = self.out_dir
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {out} is not writable: {exc}") from None
        return out


# --------------------------------------------------------------------------
# data import

def _load_schema(name: str) -> dict:
    try:
        text = resource_text(f"{name}_schema.yaml")
    except FileNotFoundError:
        path = Path(name)
        if not path.exists():
            raise ConfigError(f"unknown schema {name!r}") from None
        text = path.read_text()
    return _read_yaml(text, f"schema {name!r}")


def validate_schema(df: pd.DataFrame, schema: dict) -> None:
    """Raise :class:`DataError` when the frame does not match the schema."""
    problems = []
    for col, spec in schema.get("columns", {}).items():
        if col not in df.columns:
            if spec.get("required", False):
                problems.append(f"missing column {col!r}")
            continue
        vals = pd.to_numeric(df[col], errors="coerce")
        bad_text = vals.isna() & df[col].notna()
        if bad_text.any():
            problems.append(f"column {col!r} has non-numeric values")
        if vals.isna().any() and not spec.get("missing", False):
            problems.append(f"column {col!r} has missing values")
        v = vals.dropna()
        if spec.get("type") == "binary" and not v.isin([0, 1]).all():
            problems.append(f"column {col!r} must be 0/1")
        if "min" in spec and (v < spec["min"]).any():
            problems.append(f"column {col!r} below {spec['min']}")
        if "max" in spec and (v > spec["max"]).any():
            problems.append(f"column {col!r} above {spec['max']}")
    if problems:
        raise DataError("schema mismatch: " + "; ".join(problems))


def derive_card_columns(df: pd.DataFrame, college_years: float = 16) -> tuple[pd.DataFrame, int]:
    """Model variables from raw Card columns; existing derived columns are kept.

    Rows with neither parent's education are dropped; their count is returned.
    """
    df = df.copy()
    if "college" not in df.columns:
        df["college"] = (pd.to_numeric(df["educ"]) >= college_years).astype(int)
    if "parent_educ" not in df.columns:
        df["parent_educ"] = df[["fatheduc", "motheduc"]].apply(pd.to_numeric).mean(axis=1)
    keep = df["parent_educ"].notna()
    return df[keep].reset_index(drop=True), int((~keep).sum())


def read_frame(cfg: RunConfig) -> tuple[pd.DataFrame, int]:
    """The input table after schema validation and derivation, plus rows dropped."""
    d = cfg["data"]
    try:
        df = pd.read_csv(d["path"])
    except (OSError, pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read {d['path']}: {exc}") from None
    dropped = 0
    if d["schema"]:
        schema = _load_schema(d["schema"])
        validate_schema(df, schema)
        if schema.get("name") == "card":
            df, dropped = derive_card_columns(df, d["college_years"])
            if dropped:
                log.warning("dropping %d rows without parental education", dropped)
    return df, dropped


def load_sample(cfg: RunConfig) -> tuple[Sample, int]:
    """Sample from the configured columns; missing values are rejected."""
    d = cfg["data"]
    df, dropped = read_frame(cfg)
    xs = list(d["x"] or [])
    used = [d["y"]] + xs + [c for c in (d["z"], d["w"]) if c]
    missing = [c for c in used if c not in df.columns]
    if missing:
        raise ConfigError(f"columns not in data: {missing}")
    mode = cfg["bounds"]["mode"]
    if mode in ("Z", "ZW") and not d["z"]:
        raise ConfigError(f"mode {mode} needs data.z")
    if mode in ("W", "ZW") and not d["w"]:
        raise ConfigError(f"mode {mode} needs data.w")
    sub = df[used]
    holes = sub.isna().sum()
    if holes.any():
        raise DataError(f"missing values in {holes[holes > 0].to_dict()}")
    if sub.empty:
        raise DataError("no rows left")
    y = pd.to_numeric(sub[d["y"]], errors="coerce")
    if y.isna().any() or not y.isin([0, 1]).all():
        raise DataError(f"non-binary outcome: column {d['y']!r} must be 0/1")
    try:
        x = sub[xs].apply(pd.to_numeric).to_numpy(float) if xs else np.empty((len(sub), 0))
    except (ValueError, TypeError):
        raise DataError("covariates must be numeric") from None
    z = sub[d["z"]].to_numpy() if d["z"] else None
    w = sub[d["w"]].to_numpy() if d["w"] else None
    sample = Sample(y=y.to_numpy(int), x=x, z=z, w=w,
                    w_levels=tuple(d["w_order"]) if d["w_order"] else None, x_names=tuple(xs))
    return sample, dropped


def assumptions_from(cfg: RunConfig) -> AssumptionSet:
    b = cfg["bounds"]
    try:
        return AssumptionSet(b["mode"], b["restriction"], float(b["abar0"]), float(b["abar1"]))
    except MisreportError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# output helpers

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(float(obj)) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_reports(cfg: RunConfig, stem: str, frame: pd.DataFrame, payload: dict, text: str,
                  stdout=True) -> list[Path]:
    """Write ``stem.csv``/``.json``/``.txt``; the JSON carries the table rows too."""
    out = cfg.prepare_output()
    fmts = set(cfg["output"]["formats"])
    written = []
    if "csv" in fmts:
        p = out / f"{stem}.csv"
        frame.to_csv(p, index=False, float_format=FLOAT_FORMAT)
        written.append(p)
    if "json" in fmts:
        p = out / f"{stem}.json"
        body = dict(payload)
        body.setdefault("rows", frame.to_dict(orient="records"))
        p.write_text(json.dumps(_clean(body), indent=2))
        written.append(p)
    if "txt" in fmts:
        p = out / f"{stem}.txt"
        p.write_text(text + "\n")
        written.append(p)
    if stdout:
        print(text)
    return written


def read_bounds_csv(path) -> pd.DataFrame:
    """Re-import a bounds CSV written by ``bounds`` (floats round-trip exactly)."""
    return pd.read_csv(path, float_precision="round_trip", keep_default_na=True)


def _fmt(v, nd=3) -> str:
    return "nan" if v is None or not np.isfinite(v) else f"{v:.{nd}f}"


# --------------------------------------------------------------------------
# subcommands

def bounds_frame(sample: Sample, cfg: RunConfig):
    b = cfg["bounds"]
    a = assumptions_from(cfg)
    binning = make_binning(sample, int(b["cells_per_dim"]))
    table = estimate_cond_prob(sample, binning, int(b["min_cell_count"]))
    bounds = compute_bounds(table, a, tau=float(b["tau"]))
    report = check_testable_implications(bounds, table, a)
    p, weight, _ = table.p_xz()
    if a.mode == "ZW":
        # the joint interval refers to the top w value
        pw, ww, _ = table.p_xw()
        p, weight = pw[:, :, -1:], ww[:, :, -1:]
    z_labels = sample.z_levels or ("",)
    violated = {(v.cell, v.z_pos): v.check for v in report.violations}
    rows = []
    for c in range(binning.n_cells):
        ranges = binning.cell_ranges(c)
        for zi, zl in enumerate(z_labels):
            row = {"cell": c}
            for name, (lo, hi) in zip(sample.x_names, ranges):
                row[f"{name}_low"] = lo
                row[f"{name}_high"] = hi
            row.update({"z": zl, "n_obs": int(weight[c, zi, 0]), "p": float(p[c, zi, 0]),
                        "lower": float(bounds.lower[c, zi]), "upper": float(bounds.upper[c, zi]),
                        "defined": bool(bounds.defined[c, zi]), "method": bounds.method,
                        "restriction": a.tag,
                        "flags": "; ".join(bounds.cell_flags(c, zi)),
                        "testable_check": violated.get((c, zi), "")})
            rows.append(row)
    return pd.DataFrame(rows), bounds, report


def cmd_bounds(cfg: RunConfig) -> int:
    sample, dropped = load_sample(cfg)
    frame, bounds, report = bounds_frame(sample, cfg)
    lines = [f"Bounds on p*(x): {bounds.method}, n = {sample.n} ({dropped} rows dropped)"]
    xcols = [c for c in frame.columns if c.endswith("_low")]
    head = f"{'cell':>4} " + "".join(f"{c[:-4][:14]:>16}" for c in xcols) + \
        f" {'z':>6} {'n':>6} {'p':>7} {'lower':>7} {'upper':>7}  flags"
    lines += [head, "-" * len(head)]
    for r in frame.itertuples(index=False):
        rd = r._asdict()
        rng = "".join(f"{'[' + _fmt(rd[c], 2) + ',' + _fmt(rd[c[:-4] + '_high'], 2) + ']':>16}"
                      for c in xcols)
        lines.append(f"{r.cell:>4} {rng} {str(r.z):>6} {r.n_obs:>6} {_fmt(r.p):>7} "
                     f"{_fmt(r.lower):>7} {_fmt(r.upper):>7}  {r.flags}")
    lines.append("testable implications: " + ("none violated" if report.ok else
                                               ", ".join(sorted(report.checks()))))
    payload = {"method": bounds.method, "restriction": bounds.assumptions.tag, "n": sample.n,
               "dropped_rows": dropped,
               "testable": {"ok": report.ok, "violations": [v.__dict__ for v in report.violations]},
               "config": cfg.settings}
    write_reports(cfg, "bounds", frame, payload, "\n".join(lines), not cfg.quiet)
    return EXIT_OK


def _model_setup(sample: Sample, cfg: RunConfig):
    m = cfg["model"]
    mode = cfg["bounds"]["mode"]
    if mode not in ("Z", "W"):
        raise ConfigError("estimate supports bounds.mode Z or W")
    X, names = design_matrix(sample, bool(m["intercept"]), bool(m["include_z"]) and mode == "Z")
    if names and names[-1] == "z" and cfg["data"]["z"]:
        names = names[:-1] + (cfg["data"]["z"],)
    norm = m["normalize"]
    if norm is None:
        norm = names[0]
    if norm not in names:
        raise ConfigError(f"model.normalize {norm!r} is not a coefficient; have {names}")
    link = LinkFunction(m["link"], 0.0, float(m["link_scale"]))
    model = ModelSpec(len(names), m["kind"], link if m["kind"] == "parametric" else None,
                      names.index(norm), float(m["norm_value"]), names)
    grid_spec = m["grid"] or {}
    lows, highs, steps = [], [], []
    for k in model.free:
        spec = grid_spec.get(names[k])
        if spec is None or len(spec) != 3:
            raise ConfigError(f"model.grid needs [low, high, step] for {names[k]!r}")
        lows.append(float(spec[0]))
        highs.append(float(spec[1]))
        steps.append(float(spec[2]))
    extra = set(grid_spec) - {names[k] for k in model.free}
    if extra:
        raise ConfigError(f"model.grid names unknown or fixed coefficients: {sorted(extra)}")
    grid = BetaGrid(model, tuple(lows), tuple(highs), tuple(steps), budget=int(m["grid_budget"]))
    return X, names, model, grid, mode


def estimate_table_text(names, ident, has_beta, norm_name) -> str:
    width = max(18, max(len(n) for n in names) + 2)
    lines = [f"{'':<14}" + "".join(f"{n:>{width}}" for n in names)]
    cells = []
    for n in names:
        lo, hi = ident.endpoints()[n]
        cells.append("1" if n == norm_name and lo == hi else f"[{lo:.3f}, {hi:.3f}]")
    lines.append(f"{'set estimate':<14}" + "".join(f"{c:>{width}}" for c in cells))
    if has_beta is not None:
        lines.append(f"{'HAS':<14}" + "".join(f"{b:>{width}.3f}" for b in has_beta))
    return "\n".join(lines)


def cmd_estimate(cfg: RunConfig) -> int:
    sample, dropped = load_sample(cfg)
    X, names, model, grid, mode = _model_setup(sample, cfg)
    b, m = cfg["bounds"], cfg["model"]
    data = moment_data(sample, mode, cells_per_dim=int(b["cells_per_dim"]),
                       min_cell_count=int(b["min_cell_count"]), X=X, names=names)
    count = hypercube_count_for(data.n) if m["cubes"] == "auto" else int(m["cubes"])
    cubes = build_hypercubes(sample, count, mode)
    ident = estimate_identified_set(data, model, grid, cubes, float(m["kappa"]))
    has = None
    if m["has"]:
        has = fit_has(X, sample.y, LinkFunction.normal(), n_starts=int(m["has_starts"]),
                      seed=int(cfg["seed"]))
    norm_name = names[model.norm_index]
    rows = []
    for n, (lo, hi) in ident.endpoints().items():
        rows.append({"estimator": "set", "coefficient": n, "lower": lo, "upper": hi})
    if has is not None:
        for n, v in zip(names, has.beta):
            rows.append({"estimator": "HAS", "coefficient": n, "lower": float(v), "upper": float(v)})
    frame = pd.DataFrame(rows)
    text = estimate_table_text(names, ident, None if has is None else has.beta, norm_name)
    text += (f"\nn = {data.n} used ({dropped} rows dropped, {data.n_excluded} outside estimable "
             f"cells); grid {grid.size} points, {int(ident.accepted.sum())} accepted; "
             f"Q min {ident.q_min:.4g}, cutoff {ident.cutoff:.4g}")
    if has is not None:
        text += f"\nHAS rates: alpha0 = {has.alpha0:.4f}, alpha1 = {has.alpha1:.4f}"
    payload = {"identified_set": ident.summary(), "normalized": norm_name,
               "has": None if has is None else {"alpha0": has.alpha0, "alpha1": has.alpha1,
                                                "beta": dict(zip(names, has.beta)),
                                                "loglik": has.loglik,
                                                "n_converged": has.n_converged},
               "config": cfg.settings}
    write_reports(cfg, "estimate", frame, payload, text, not cfg.quiet)
    if "csv" in cfg["output"]["formats"]:
        ident.to_frame().to_csv(cfg.out_dir / "identified_set.csv", index=False,
                                float_format=FLOAT_FORMAT)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    s = cfg["simulate"]
    settings = MCSettings(replications=int(s["replications"]), seed=int(cfg["seed"]),
                          half_width=float(s["half_width"]), step=float(s["step"]),
                          kappa=float(s["kappa"]), cells_per_dim=int(s["cells_per_dim"]),
                          min_cell_count=int(s["min_cell_count"]), has_starts=int(s["has_starts"]),
                          run_has=bool(s["has"]))
    if settings.replications < 1:
        raise ConfigError("simulate.replications must be at least 1")
    scenarios = [(d, e, int(n)) for d, e, n in s["scenarios"]]
    df = run_monte_carlo(scenarios, settings, workers=int(cfg["threads"]))
    payload = {"settings": settings.__dict__, "config": cfg.settings}
    write_reports(cfg, "mc", df, payload, format_mc_table(df), not cfg.quiet)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    v = cfg["verify"]
    profile = VerifyProfile(oracle_instances=int(v["oracle_instances"]),
                            witness_instances=int(v["witness_instances"]),
                            delta=float(v["delta"]), designs=tuple(v["designs"]),
                            errors=tuple(v["errors"]), seed=int(cfg["seed"]),
                            run_oracle=bool(v["run_oracle"]), run_witness=bool(v["run_witness"]),
                            run_population=bool(v["run_population"]))
    report = run_verification(profile)
    payload = {"ok": report.ok, "failing_checks": report.failing_checks(),
               "seconds": report.seconds, "config": cfg.settings}
    write_reports(cfg, "verify", report.to_frame(), payload, report.format_text(),
                  not cfg.quiet)
    if not report.ok:
        print("verification failed: " + ", ".join(report.failing_checks()), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "estimate": cmd_estimate, "simulate": cmd_simulate,
            "verify": cmd_verify}


# --------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _grid_item(text: str):
    try:
        name, rng = text.split("=", 1)
        lo, hi, st = (float(v) for v in rng.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid spec {text!r} is not NAME=LOW:HIGH:STEP") from None
    return name, [lo, hi, st]


def _scenario(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"scenario {text!r} is not DESIGN:ERROR:N")
    try:
        return [parts[0], parts[1], int(parts[2])]
    except ValueError:
        raise argparse.ArgumentTypeError(f"scenario size in {text!r} is not an integer") from None


# flag destination -> config path
FLAG_PATHS = {
    "out": ("output", "dir"), "formats": ("output", "formats"), "seed": ("seed",),
    "threads": ("threads",),
    "data": ("data", "path"), "schema": ("data", "schema"), "y": ("data", "y"),
    "x": ("data", "x"), "z": ("data", "z"), "w": ("data", "w"), "w_order": ("data", "w_order"),
    "mode": ("bounds", "mode"), "restriction": ("bounds", "restriction"),
    "abar0": ("bounds", "abar0"), "abar1": ("bounds", "abar1"),
    "cells_per_dim": ("bounds", "cells_per_dim"), "min_cell_count": ("bounds", "min_cell_count"),
    "tau": ("bounds", "tau"),
    "kind": ("model", "kind"), "link": ("model", "link"), "normalize": ("model", "normalize"),
    "kappa": ("model", "kappa"), "cubes": ("model", "cubes"),
    "has_starts": ("model", "has_starts"),
    "scenario": ("simulate", "scenarios"), "replications": ("simulate", "replications"),
    "half_width": ("simulate", "half_width"), "step": ("simulate", "step"),
    "design": ("verify", "designs"), "error": ("verify", "errors"),
    "oracle_instances": ("verify", "oracle_instances"),
    "witness_instances": ("verify", "witness_instances"), "delta": ("verify", "delta"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="misreport", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--profile", help="built-in profile (card, smoke, full)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--formats", type=_csv_list, help="comma list of csv,json,txt")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker processes for Monte Carlo")
    common.add_argument("-q", "--quiet", action="store_true", help="do not echo the text table")
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--data", help="input CSV with header")
    data.add_argument("--schema", help="named schema (card) or schema YAML path")
    data.add_argument("--y", help="reported outcome column")
    data.add_argument("--x", type=_csv_list, help="comma list of covariate columns")
    data.add_argument("--z", help="instrument Z column")
    data.add_argument("--w", help="instrument W column")
    data.add_argument("--w-order", type=_csv_list, help="W labels in ascending order")
    data.add_argument("--mode", choices=("Z", "W", "ZW"))
    data.add_argument("--restriction", choices=RESTRICTIONS)
    data.add_argument("--abar0", type=float)
    data.add_argument("--abar1", type=float)
    data.add_argument("--cells-per-dim", type=int)
    data.add_argument("--min-cell-count", type=int)
    data.add_argument("--tau", type=float)

    sub.add_parser("bounds", parents=[common, data], help="per-cell bounds on p*(x)")

    est = sub.add_parser("estimate", parents=[common, data], help="identified set by grid search")
    est.add_argument("--kind", choices=("semiparametric", "parametric"))
    est.add_argument("--link", choices=LINKS)
    est.add_argument("--normalize", help="coefficient fixed at model.norm_value")
    est.add_argument("--grid", type=_grid_item, action="append", metavar="NAME=LOW:HIGH:STEP")
    est.add_argument("--kappa", type=float)
    est.add_argument("--cubes", type=int)
    est.add_argument("--no-has", action="store_true", help="skip the constant-rate MLE")
    est.add_argument("--has-starts", type=int)

    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo tables")
    sim.add_argument("--scenario", type=_scenario, action="append", metavar="DESIGN:ERROR:N")
    sim.add_argument("--replications", type=int)
    sim.add_argument("--half-width", type=float)
    sim.add_argument("--step", type=float)
    sim.add_argument("--no-has", action="store_true")

    ver = sub.add_parser("verify", parents=[common], help="oracle and population checks")
    ver.add_argument("--design", action="append", choices=DESIGNS)
    ver.add_argument("--error", action="append", choices=ERRORS)
    ver.add_argument("--oracle-instances", type=int)
    ver.add_argument("--witness-instances", type=int)
    ver.add_argument("--delta", type=float)
    ver.add_argument("--skip", action="append", choices=("oracle", "witness", "population"),
                     default=[])
    return parser


def overrides_from(args: argparse.Namespace) -> dict:
    out = {}
    for dest, path in FLAG_PATHS.items():
        val = getattr(args, dest, None)
        if val is not None:
            out[path] = val
    if getattr(args, "grid", None):
        out[("model", "grid")] = dict(args.grid)
    if getattr(args, "no_has", False):
        out[("model" if args.command == "estimate" else "simulate", "has")] = False
    for part in getattr(args, "skip", []) or []:
        out[("verify", f"run_{part}")] = False
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.build(args.command, config_path=args.config, profile=args.profile,
                              overrides=overrides_from(args))
        cfg.quiet = args.quiet
        return COMMANDS[args.command](cfg)
    except (ConfigError, BudgetExceededError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MisreportError as exc:
        # estimation and precondition failures come from the inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
