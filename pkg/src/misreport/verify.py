"""Verification suite behind ``misreport verify``.

Four families of checks, each producing named pass/fail rows:

* ``oracle_sharp`` / ``oracle_contained``: closed-form intervals against the
  brute-force grid oracle on random assumption-satisfying instances;
* ``witness``: endpoint-attaining constructions checked against the mixture
  identity and every maintained assumption;
* ``population_*``: exact population tables of the simulation designs, where
  the true ``p*`` must lie inside every applicable interval, the joint
  instruments must tighten the single-instrument intersection and the moment
  functions must be nonnegative at the true coefficients;
* testable implications on the same population tables, reported under the
  check name the bounds module assigns (``w_monotonicity`` and so on).
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .bounds import AssumptionSet, check_testable_implications, compute_bounds
from .errors import ConfigError, PreconditionError
from .oracle import (CONDITIONED_PROFILES, brute_force_prob_bounds, construct_sharpness_witness,
                     random_instance, verify_witness)
from .sim import (DESIGNS, ERRORS, DgpConfig, applicable_assumptions, population_moments,
                  population_points, population_table)

POP_TOL = 1e-6
MOMENT_TOL = 1e-8


@dataclass(frozen=True)
class OracleCase:
    """One family of random instances for the oracle comparison."""

    name: str
    assumptions: AssumptionSet | None  # None: a fresh bounded set per instance
    n_w: int
    z_range: tuple[int, int]
    sharp: bool
    restriction: str = "none"


SHARP_CASES = (
    OracleCase("instrument_z", AssumptionSet("Z"), 1, (2, 4), True),
    OracleCase("instrument_w_binary", AssumptionSet("W"), 2, (1, 2), True),
    OracleCase("one_sided_z_a0", AssumptionSet.one_sided("Z", True), 1, (2, 4), True),
    OracleCase("one_sided_z_a1", AssumptionSet.one_sided("Z", False), 1, (2, 4), True),
    OracleCase("one_sided_w_a0", AssumptionSet.one_sided("W", True), 2, (1, 2), True),
    OracleCase("one_sided_w_a1", AssumptionSet.one_sided("W", False), 2, (1, 2), True),
    OracleCase("two_instruments_binary", AssumptionSet("ZW"), 2, (2, 4), True),
)

CONTAINMENT_CASES = (
    OracleCase("bounded_z", None, 1, (2, 4), False, "bounded"),
    OracleCase("bounded_w", None, 2, (1, 2), False, "bounded"),
    OracleCase("monotone_z_a0_le_a1", AssumptionSet.monotone("Z", True), 1, (2, 4), False),
    OracleCase("monotone_z_a1_le_a0", AssumptionSet.monotone("Z", False), 1, (2, 4), False),
    OracleCase("monotone_w_a0_le_a1", AssumptionSet.monotone("W", True), 2, (1, 2), False),
    OracleCase("monotone_w_a1_le_a0", AssumptionSet.monotone("W", False), 2, (1, 2), False),
    OracleCase("instrument_w_three", AssumptionSet("W"), 3, (1, 2), False),
)

# (method, keyword arguments, instrument mode, number of w values)
WITNESS_CASES = (
    ("instrument_z", {}, "Z", 1, AssumptionSet("Z")),
    ("instrument_w_binary", {}, "W", 2, AssumptionSet("W")),
    ("one_sided", {"mode": "Z", "no_false_positives": True}, "Z", 1, AssumptionSet.one_sided("Z", True)),
    ("one_sided", {"mode": "Z", "no_false_positives": False}, "Z", 1, AssumptionSet.one_sided("Z", False)),
    ("one_sided", {"mode": "W", "no_false_positives": True}, "W", 2, AssumptionSet.one_sided("W", True)),
    ("one_sided", {"mode": "W", "no_false_positives": False}, "W", 2, AssumptionSet.one_sided("W", False)),
    ("two_instruments_binary", {}, "ZW", 2, AssumptionSet("ZW")),
)


@dataclass
class VerifyProfile:
    """Sizes and tolerances for one verification run."""

    oracle_instances: int = 10
    witness_instances: int = 100
    delta: float = 0.01
    tolerance_steps: float = 2.0
    designs: tuple[str, ...] = ("Z", "W", "ZW")
    errors: tuple[str, ...] = ERRORS
    population_cells: int = 4
    quadrature_nodes: int = 200
    point_cells: int = 9
    moment_points: int = 401
    seed: int = 20240601
    run_oracle: bool = True
    run_witness: bool = True
    run_population: bool = True

    def __post_init__(self):
        self.designs = tuple(self.designs)
        self.errors = tuple(self.errors)
        for d in self.designs:
            if d not in DESIGNS:
                raise ConfigError(f"unknown design {d!r}; expected one of {DESIGNS}")
        for e in self.errors:
            if e not in ERRORS:
                raise ConfigError(f"unknown error law {e!r}; expected one of {ERRORS}")
        if self.oracle_instances < 0 or self.witness_instances < 0:
            raise ConfigError("instance counts must be nonnegative")


@dataclass
class CheckResult:
    check: str
    case: str
    passed: bool
    n: int = 0
    n_failed: int = 0
    max_error: float = 0.0
    tolerance: float = 0.0
    detail: str = ""


@dataclass
class VerifyReport:
    results: list[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def failing_checks(self) -> list[str]:
        seen = []
        for r in self.results:
            if not r.passed and r.check not in seen:
                seen.append(r.check)
        return seen

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.results])

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "failing_checks": self.failing_checks(),
                           "seconds": self.seconds,
                           "results": [asdict(r) for r in self.results]}, indent=2)

    def format_text(self) -> str:
        head = f"{'check':<28} {'case':<46} {'result':<6} {'n':>5} {'fail':>5} {'max err':>11}"
        lines = [head, "-" * len(head)]
        for r in self.results:
            lines.append(f"{r.check:<28} {r.case:<46} {'PASS' if r.passed else 'FAIL':<6} "
                         f"{r.n:>5} {r.n_failed:>5} {r.max_error:>11.4g}")
        status = "all checks passed" if self.ok else "failing: " + ", ".join(self.failing_checks())
        lines.append(status)
        return "\n".join(lines)


# --------------------------------------------------------------------------
# oracle comparison

def _case_assumptions(case: OracleCase, rng) -> AssumptionSet:
    if case.assumptions is not None:
        return case.assumptions
    mode = "Z" if case.n_w == 1 else "W"
    caps = np.round(rng.uniform(0.1, 0.45, 2), 2)
    return AssumptionSet.bounded(mode, caps[0], caps[1])


def oracle_case_errors(case: OracleCase, n: int, rng, delta: float = 0.01):
    """Per-instance endpoint discrepancies for one case.

    Sharp cases return ``max |oracle - closed form|``.  Containment cases
    return how far the oracle interval pokes outside the closed form
    (zero when contained).  An infeasible oracle counts as infinite error.
    """
    errs = np.empty(n)
    for k in range(n):
        a = _case_assumptions(case, rng)
        n_z = int(rng.integers(case.z_range[0], case.z_range[1] + 1))
        inst, _ = random_instance(rng, a, n_z, case.n_w, delta, **CONDITIONED_PROFILES[a.mode])
        orc = brute_force_prob_bounds(inst)
        cf = inst.closed_form(tau=0.0)
        if not orc.feasible.all():
            errs[k] = np.inf
            continue
        lo_cf, hi_cf = cf.lower, cf.upper
        if case.sharp:
            errs[k] = max(np.abs(orc.lower - lo_cf).max(), np.abs(orc.upper - hi_cf).max())
        else:
            errs[k] = max(0.0, (lo_cf - orc.lower).max(), (orc.upper - hi_cf).max())
    return errs


def run_oracle_checks(profile: VerifyProfile) -> list[CheckResult]:
    tol = profile.tolerance_steps * profile.delta
    out = []
    cases = [(c, "oracle_sharp") for c in SHARP_CASES] + \
            [(c, "oracle_contained") for c in CONTAINMENT_CASES]
    for idx, (case, check) in enumerate(cases):
        rng = np.random.default_rng(np.random.SeedSequence([profile.seed, 1, idx]))
        errs = oracle_case_errors(case, profile.oracle_instances, rng, profile.delta)
        bad = int(np.sum(errs > tol))
        out.append(CheckResult(check, case.name, bad == 0, len(errs), bad,
                               float(errs.max()) if errs.size else 0.0, tol))
    return out


# --------------------------------------------------------------------------
# witnesses

def witness_case_errors(method: str, kw: dict, assumptions: AssumptionSet, n_w: int, n: int,
                        rng, tol: float = 1e-12):
    """Failures of the constructions on ``n`` random instances.

    Each instance yields both endpoint witnesses.  Besides the assumption
    checks, the witness's ``p*`` must equal the closed-form endpoint.
    """
    failures: list[str] = []
    worst = 0.0
    for _ in range(n):
        n_z = 2 if assumptions.mode != "W" else int(rng.integers(1, 3))
        inst, _ = random_instance(rng, assumptions, n_z, n_w, 0.01, max_rate=0.45, min_gap=0.05)
        p = inst.p[0]
        cf = inst.closed_form(tau=0.0)
        for which in ("lower", "upper"):
            try:
                wit = construct_sharpness_witness(p, which, method, **kw)
            except PreconditionError as exc:
                failures.append(f"construction: {exc}")
                continue
            rep = verify_witness(wit, p, tol)
            failures.extend(f"{name}: {detail}" for name, detail in rep.failures)
            target = cf.lower[0] if which == "lower" else cf.upper[0]
            err = float(np.abs(np.asarray(wit.p_star)[:, 0] - target).max())
            worst = max(worst, err)
            if err > 1e-9:
                failures.append(f"attains_endpoint: {which} off by {err:.3g}")
    return failures, worst


def run_witness_checks(profile: VerifyProfile) -> list[CheckResult]:
    out = []
    for idx, (method, kw, mode, n_w, a) in enumerate(WITNESS_CASES):
        rng = np.random.default_rng(np.random.SeedSequence([profile.seed, 2, idx]))
        fails, worst = witness_case_errors(method, kw, a, n_w, profile.witness_instances, rng)
        name = method if not kw else f"{method}_{kw['mode']}_" + \
            ("a0" if kw["no_false_positives"] else "a1")
        out.append(CheckResult("witness", name, not fails, profile.witness_instances,
                               len(fails), worst, 1e-12, "; ".join(sorted(set(fails))[:5])))
    return out


# --------------------------------------------------------------------------
# population tables

def _modes(config: DgpConfig) -> list[str]:
    return (["Z"] if config.has_z else []) + (["W"] if config.w_support else [])


def _containment(bounds, p_star) -> tuple[float, int]:
    d = bounds.defined
    gap = np.maximum(bounds.lower - p_star, p_star - bounds.upper)
    gap = np.where(d, gap, -np.inf)
    return float(gap.max()), int(np.sum(gap > POP_TOL))


def population_checks(config: DgpConfig, profile: VerifyProfile) -> list[CheckResult]:
    """Containment, tightening, moment validity and testable implications for one design."""
    label = f"{config.design}/{config.error}"
    out = []
    pop = population_table(config, profile.population_cells, profile.quadrature_nodes)
    xs = np.linspace(-1.0, 1.0, profile.point_cells + 2)[1:-1]
    pts = population_points(config, xs)
    targets = [("cells", pop)]
    if config.design == "ZW":
        # cell averaging mixes x values, which breaks the joint-instrument algebra
        targets.append(("points", pts))
    for where, tab in targets:
        modes = _modes(config) + (["ZW"] if config.design == "ZW" and where == "points" else [])
        for mode in modes:
            for a in applicable_assumptions(config, mode):
                b = compute_bounds(tab.table, a)
                case = f"{label}/{where}/{a.method_name()}"
                gap, bad = _containment(b, tab.p_star)
                out.append(CheckResult("population_containment", case, bad == 0,
                                       int(b.defined.sum()), bad, max(gap, 0.0), POP_TOL))
                rep = check_testable_implications(b, tab.table, a)
                if rep.ok:
                    out.append(CheckResult("testable_implications", case, True,
                                           int(b.defined.sum())))
                else:
                    for name in sorted(rep.checks()):
                        hits = [v for v in rep.violations if v.check == name]
                        out.append(CheckResult(name, case, False, int(b.defined.sum()), len(hits),
                                               detail=hits[0].detail))
    if config.design == "ZW":
        t = pts.table
        joint = compute_bounds(t, AssumptionSet("ZW"))
        bz = compute_bounds(t, AssumptionSet("Z"))
        bw = compute_bounds(t, AssumptionSet("W"))
        lo = np.maximum(bz.lower, bw.lower)
        hi = np.minimum(bz.upper, bw.upper)
        excess = np.maximum(lo - joint.lower, joint.upper - hi)
        excess = np.where(joint.defined, excess, -np.inf)
        bad = int(np.sum(excess > 1e-9))
        out.append(CheckResult("two_instrument_tighter", f"{label}/points", bad == 0,
                               int(joint.defined.sum()), bad, float(max(excess.max(), 0.0)), 1e-9))
    grid = np.linspace(-1.0, 1.0, profile.moment_points)
    for mode in _modes(config):
        g = population_moments(config, grid, mode)
        for kind, vals in g.items():
            low = float(np.nanmin(vals))
            bad = int(np.sum(vals < -MOMENT_TOL))
            out.append(CheckResult("moment_validity", f"{label}/{mode}/{kind}", bad == 0,
                                   int(vals.size), bad, max(-low, 0.0), MOMENT_TOL))
    return out


def run_population_checks(profile: VerifyProfile) -> list[CheckResult]:
    out = []
    for design in profile.designs:
        for error in profile.errors:
            out.extend(population_checks(DgpConfig(design, error=error), profile))
    return out


def run_verification(profile: VerifyProfile | None = None) -> VerifyReport:
    profile = profile or VerifyProfile()
    t0 = time.time()
    results: list[CheckResult] = []
    if profile.run_oracle and profile.oracle_instances:
        results += run_oracle_checks(profile)
    if profile.run_witness and profile.witness_instances:
        results += run_witness_checks(profile)
    if profile.run_population:
        results += run_population_checks(profile)
    return VerifyReport(results, time.time() - t0)
