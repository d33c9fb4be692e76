"""Brute-force feasibility oracle and explicit sharpness witnesses.

The oracle never uses the closed-form bounds.  It enumerates misreporting
rates ``(alpha0, alpha1)`` on a ``delta`` grid together with every grid
value of ``p*``.  A candidate is kept when the mixture identity
``p = (1 - alpha1 - alpha0) p* + alpha0`` reproduces each reported
probability to within ``delta / 2`` and all active assumptions hold.  The
min and max of ``p*`` over the kept candidates form the feasible interval.

Grid values are integers ``k`` standing for ``k / K`` with ``K = 1/delta``,
so degree and ordering constraints are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import (AssumptionSet, ProbBounds, compute_bounds, two_instrument_diagnostics)
from .data import CondProbTable
from .errors import BudgetExceededError, PreconditionError

DEFAULT_BUDGET = 100_000_000

# Instance generators for the sharpness comparison.  The delta/2 slack in the
# mixture identity moves an endpoint by up to delta/(1 - c) for the cap c on
# the relevant misreporting rate (and by delta/spread for the two-instrument
# ratio), so caps stay at or below one half, and with two instruments W must
# move misreporting substantially while z keeps the reported values apart.
CONDITIONED_PROFILES = {
    "Z": dict(max_rate=0.45, min_gap=0.2, max_cap=0.5),
    "W": dict(max_rate=0.45, max_cap=0.5),
    "ZW": dict(max_rate=0.5, min_gap=0.2, p_range=(0.1, 0.9), min_w_drop=0.6,
               min_spread=0.15),
}


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    """Reported probabilities ``p[cell, z, w]`` plus assumptions and grid step.

    In W mode each ``(cell, z)`` row is its own covariate value ``x``; in Z and
    ZW modes the misreporting rates are shared across z within a cell.
    """

    p: np.ndarray
    assumptions: AssumptionSet
    delta: float = 0.01

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        p = p.reshape(p.shape + (1,) * (3 - p.ndim))
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise PreconditionError("instance probabilities must lie in [0, 1]")
        if not 0 < self.delta <= 0.1:
            raise PreconditionError("grid step delta must lie in (0, 0.1]")
        k = round(1.0 / self.delta)
        if abs(k * self.delta - 1.0) > 1e-9:
            raise PreconditionError("1/delta must be an integer")
        mode = self.assumptions.mode
        if mode == "Z" and p.shape[2] != 1:
            raise PreconditionError("Z-mode instances have a single w column")
        if mode == "ZW" and (p.shape[1] < 2 or p.shape[2] < 2):
            raise PreconditionError("ZW-mode instances need at least two z and two w values")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def grid_size(self) -> int:
        return round(1.0 / self.delta)

    def table(self) -> CondProbTable:
        _, nz, nw = self.p.shape
        mode = self.assumptions.mode
        return CondProbTable.from_probabilities(
            self.p, z_levels=tuple(range(nz)) if mode in ("Z", "ZW") or nz > 1 else (),
            w_levels=tuple(range(nw)) if mode in ("W", "ZW") else None)

    def closed_form(self, tau: float = 0.0) -> ProbBounds:
        return compute_bounds(self.table(), self.assumptions, tau=tau)


@dataclass(frozen=True, eq=False)
class OracleResult:
    lower: np.ndarray
    upper: np.ndarray
    feasible: np.ndarray
    evaluated: int

    def interval(self, cell: int, z_pos: int = 0) -> tuple[float, float] | None:
        if not self.feasible[cell, z_pos]:
            return None
        return float(self.lower[cell, z_pos]), float(self.upper[cell, z_pos])


def _pair_mask(k: int, assumptions: AssumptionSet) -> np.ndarray:
    """Admissible ``(i0, i1)`` grid image: degree plus the single restriction."""
    i0, i1 = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    ok = i0 + i1 <= k
    r = assumptions.restriction
    if r == "one_sided_a0":
        ok &= i0 == 0
    elif r == "one_sided_a1":
        ok &= i1 == 0
    elif r == "bounded":
        ok &= (i0 <= assumptions.abar0 * k + 1e-9) & (i1 <= assumptions.abar1 * k + 1e-9)
    elif r == "monotone_a0_le_a1":
        ok &= i0 <= i1
    elif r == "monotone_a1_le_a0":
        ok &= i1 <= i0
    return ok


def _feasible_pstar(k: int, p_val: float, tol: float):
    """Boolean ``[i0, i1, j]``: does ``p* = j/K`` reproduce ``p_val`` at rates ``(i0, i1)/K``?"""
    g = np.arange(k + 1) / k
    slope = 1.0 - g[:, None] - g[None, :]
    resid = slope[:, :, None] * g[None, None, :] + g[:, None, None] - p_val
    return np.abs(resid) <= tol


def _j_range(feas: np.ndarray):
    """Min and max feasible ``j`` along the last axis (-1 / -2 when none)."""
    any_ = feas.any(axis=-1)
    k1 = feas.shape[-1]
    jmin = np.where(any_, feas.argmax(axis=-1), -1)
    jmax = np.where(any_, k1 - 1 - feas[..., ::-1].argmax(axis=-1), -2)
    return jmin, jmax


def _dominated(img: np.ndarray) -> np.ndarray:
    """Cells ``b`` with some ``a`` in ``img`` and ``a >= b`` componentwise."""
    rev = img[::-1, ::-1]
    rev = np.logical_or.accumulate(np.logical_or.accumulate(rev, axis=0), axis=1)
    return rev[::-1, ::-1]


def _oracle_z(p_cell: np.ndarray, k: int, tol: float, mask: np.ndarray):
    nz = p_cell.shape[0]
    jmin = np.empty((k + 1, k + 1, nz), dtype=int)
    jmax = np.empty_like(jmin)
    for z in range(nz):
        jmin[..., z], jmax[..., z] = _j_range(_feasible_pstar(k, p_cell[z, 0], tol))
    ok = mask & (jmin >= 0).all(axis=-1)
    if not ok.any():
        return np.full(nz, np.nan), np.full(nz, np.nan), np.zeros(nz, bool)
    return jmin[ok].min(axis=0) / k, jmax[ok].max(axis=0) / k, np.ones(nz, bool)


def _oracle_w(p_row: np.ndarray, k: int, tol: float, mask: np.ndarray):
    nw = p_row.shape[0]
    feas = np.stack([_feasible_pstar(k, p_row[w], tol) for w in range(nw)])  # [w, i0, i1, j]
    feas &= mask[None, :, :, None]
    feasible_j = []
    for j in range(k + 1):
        reach = feas[0, :, :, j]
        for w in range(1, nw):
            if not reach.any():
                break
            reach = feas[w, :, :, j] & _dominated(reach)
        if reach.any():
            feasible_j.append(j)
    if not feasible_j:
        return np.nan, np.nan, False
    return feasible_j[0] / k, feasible_j[-1] / k, True


def _oracle_zw(p_cell: np.ndarray, k: int, tol: float, mask: np.ndarray):
    nz, nw = p_cell.shape
    if nw != 2:
        raise BudgetExceededError("two-instrument enumeration supports binary W only")
    i0, i1 = np.nonzero(mask)
    jr = []
    for w in range(nw):
        lo = np.empty((i0.size, nz), dtype=int)
        hi = np.empty_like(lo)
        for z in range(nz):
            a, b = _j_range(_feasible_pstar(k, p_cell[z, w], tol))
            lo[:, z], hi[:, z] = a[i0, i1], b[i0, i1]
        jr.append((lo, hi))
    (lo_a, hi_a), (lo_b, hi_b) = jr  # a: lower w, b: top w
    live_a = (lo_a >= 0).all(axis=1)
    best_lo = np.full(nz, k + 1)
    best_hi = np.full(nz, -1)
    for b in np.nonzero((lo_b >= 0).all(axis=1))[0]:
        cand = live_a & (i0 >= i0[b]) & (i1 >= i1[b])
        if not cand.any():
            continue
        lo = np.maximum(lo_a[cand], lo_b[b])
        hi = np.minimum(hi_a[cand], hi_b[b])
        good = (lo <= hi).all(axis=1)
        if good.any():
            best_lo = np.minimum(best_lo, lo[good].min(axis=0))
            best_hi = np.maximum(best_hi, hi[good].max(axis=0))
    if best_hi[0] < 0:
        return np.full(nz, np.nan), np.full(nz, np.nan), np.zeros(nz, bool)
    return best_lo / k, best_hi / k, np.ones(nz, bool)


def _workload(instance: DiscreteInstance) -> int:
    k = instance.grid_size
    n_cell, nz, nw = instance.p.shape
    pairs = (k + 1) * (k + 2) // 2
    mode = instance.assumptions.mode
    if mode == "Z":
        return n_cell * pairs * (k + 1) * nz
    if mode == "W":
        return n_cell * nz * (k + 1) * (k + 1) ** 2 * nw
    if nw != 2:
        return 10 ** 18
    return n_cell * (pairs * (k + 1) * nz * nw + (k ** 4 // 24) * nz)


def brute_force_prob_bounds(instance: DiscreteInstance, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Feasible ``[min p*, max p*]`` per ``(cell, z)`` by exhaustive grid search.

    Cost grows like ``K^3 |Z|`` per cell for Z mode, ``K^3 |W|`` per x for W
    mode and ``K^4 |Z| / 24`` per cell for two instruments with binary W.
    At ``delta = 0.01`` one cell takes well under a second.  Larger problems
    raise :class:`BudgetExceededError` and are never silently truncated.
    """
    work = _workload(instance)
    if work > budget:
        raise BudgetExceededError(f"enumeration needs ~{work:.3g} evaluations, budget {budget:.3g}")
    k = instance.grid_size
    tol = instance.delta / 2 + 1e-12
    mask = _pair_mask(k, instance.assumptions)
    n_cell, nz, nw = instance.p.shape
    lo = np.full((n_cell, nz), np.nan)
    hi = np.full((n_cell, nz), np.nan)
    feas = np.zeros((n_cell, nz), dtype=bool)
    mode = instance.assumptions.mode
    for c in range(n_cell):
        if mode == "Z":
            lo[c], hi[c], feas[c] = _oracle_z(instance.p[c], k, tol, mask)
        elif mode == "W":
            for z in range(nz):
                lo[c, z], hi[c, z], feas[c, z] = _oracle_w(instance.p[c, z], k, tol, mask)
        else:
            lo[c], hi[c], feas[c] = _oracle_zw(instance.p[c], k, tol, mask)
    return OracleResult(lo, hi, feas, work)


# --------------------------------------------------------------------------
# witnesses

@dataclass(frozen=True, eq=False)
class Witness:
    """Candidate ``alpha0``, ``alpha1`` and ``p*`` on one cell's ``[z, w]`` grid."""

    alpha0: np.ndarray
    alpha1: np.ndarray
    p_star: np.ndarray
    mode: str
    assumptions: AssumptionSet = field(default_factory=AssumptionSet)

    def reported(self) -> np.ndarray:
        return (1.0 - self.alpha1) * self.p_star + self.alpha0 * (1.0 - self.p_star)


@dataclass(frozen=True)
class WitnessReport:
    failures: tuple[tuple[str, str], ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def checks(self) -> set[str]:
        return {f[0] for f in self.failures}


def _as_cell(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p.reshape(p.shape + (1,) * (2 - p.ndim))


def _witness_z(p, which):
    lo, hi = p.min(), p.max()
    if hi <= 0 or lo >= 1:
        raise PreconditionError("boundary condition fails: need max p > 0 and min p < 1")
    if which == "upper":
        a0, a1, ps = 0.0, 1.0 - hi, p / hi
    else:
        a0, a1, ps = lo, 0.0, (p - lo) / (1.0 - lo)
    return np.full_like(p, a0), np.full_like(p, a1), ps


def _witness_w_binary(p, which):
    if p.shape[1] != 2:
        raise PreconditionError("binary-W witness needs exactly two W values")
    if np.any((p <= 0) | (p >= 1)):
        raise PreconditionError("boundary condition fails: need 0 < p_W < 1")
    a0 = np.empty_like(p)
    a1 = np.empty_like(p)
    ps = np.empty_like(p)
    low, top = p[:, 0], p[:, 1]
    if which == "upper":
        hi = np.maximum(low, top)
        a1[:, 1], a0[:, 1] = 1.0 - hi, 0.0
        a1[:, 0], a0[:, 0] = 1.0 - low, low
        val = top / hi
    else:
        lo = np.minimum(low, top)
        a1[:, 1], a0[:, 1] = 0.0, lo
        a0[:, 0] = low
        a1[:, 0] = 1.0 - low
        val = (top - lo) / (1.0 - lo)
    ps[:] = val[:, None]
    return a0, a1, ps


def _witness_one_sided(p, which, mode, no_false_positives):
    if mode == "Z":
        if no_false_positives and which == "lower" or not no_false_positives and which == "upper":
            z = np.zeros_like(p)
            return z, z.copy(), p.copy()
        return _witness_z(p, which)
    # W mode, each row is its own x
    a0 = np.zeros_like(p)
    a1 = np.zeros_like(p)
    ps = np.empty_like(p)
    if no_false_positives:
        top = p.max(axis=1, keepdims=True)
        if which == "lower":
            a1[:] = 1.0 - p / top
            ps[:] = top
        else:
            a1[:] = 1.0 - p
            ps[:] = 1.0
    else:
        bottom = p.min(axis=1, keepdims=True)
        if which == "upper":
            ps[:] = bottom
            a0[:] = (p - bottom) / (1.0 - bottom)
        else:
            ps[:] = 0.0
            a0[:] = p
    return a0, a1, ps


def _witness_two(p, which):
    if p.shape[1] != 2 or p.shape[0] < 2:
        raise PreconditionError("two-instrument witness needs >= 2 z values and binary W")
    table = CondProbTable.from_probabilities(p[None], z_levels=tuple(range(p.shape[0])),
                                             w_levels=(0, 1))
    diag = two_instrument_diagnostics(table, tau=0.0)
    q1, q0 = diag.q1[0, 0], diag.q0[0, 0]
    if not np.isfinite(q1) or q1 <= 1:
        raise PreconditionError("two-instrument witness requires q1 > 1")
    u1, u0 = diag.u_alpha1[0], diag.u_alpha0[0]
    a0 = np.empty_like(p)
    a1 = np.empty_like(p)
    if which == "upper":
        a1[:, 1], a0[:, 1] = u1, 0.0
        a1[:, 0] = 1.0 - (1.0 - u1 + q0) / q1
        a0[:, 0] = q0 / q1
        ps = p[:, 1] / (1.0 - u1)
    else:
        a1[:, 1], a0[:, 1] = 0.0, u0
        a1[:, 0] = 1.0 - (1.0 + q0) / q1
        a0[:, 0] = (u0 + q0) / q1
        ps = (p[:, 1] - u0) / (1.0 - u0)
    return a0, a1, np.repeat(ps[:, None], 2, axis=1)


def construct_sharpness_witness(p, which: str, method: str, *,
                                no_false_positives: bool = True,
                                mode: str = "Z") -> Witness:
    """Rates and true probabilities that attain a bound endpoint.

    ``p`` is one cell's reported table ``[z, w]``.  ``method`` is one of
    ``instrument_z``, ``instrument_w_binary``, ``one_sided`` (with ``mode`` Z
    or W and the side picked by ``no_false_positives``) and
    ``two_instruments_binary``.
    """
    if which not in ("lower", "upper"):
        raise PreconditionError("which must be 'lower' or 'upper'")
    p = _as_cell(p)
    if method == "instrument_z":
        if p.shape[1] != 1:
            raise PreconditionError("instrument-Z witness takes a single w column")
        parts = _witness_z(p, which)
        assumptions = AssumptionSet("Z")
    elif method == "instrument_w_binary":
        parts = _witness_w_binary(p, which)
        assumptions = AssumptionSet("W")
    elif method == "one_sided":
        if mode not in ("Z", "W"):
            raise PreconditionError("one-sided witness mode must be Z or W")
        parts = _witness_one_sided(p, which, mode, no_false_positives)
        assumptions = AssumptionSet.one_sided(mode, no_false_positives)
    elif method == "two_instruments_binary":
        parts = _witness_two(p, which)
        assumptions = AssumptionSet("ZW")
    else:
        raise PreconditionError(f"unknown witness method {method!r}")
    return Witness(*parts, mode=assumptions.mode, assumptions=assumptions)


def verify_witness(witness: Witness, p, tol: float = 1e-12) -> WitnessReport:
    """Check the mixture identity and every assumption the witness's mode imposes."""
    p = _as_cell(p)
    a0, a1, ps = (np.broadcast_to(_as_cell(v), p.shape) for v in
                  (witness.alpha0, witness.alpha1, witness.p_star))
    fails: list[tuple[str, str]] = []

    def check(name, bad, detail):
        if np.any(bad):
            fails.append((name, detail))

    for name, v in (("alpha0", a0), ("alpha1", a1), ("p_star", ps)):
        check("range", (v < -tol) | (v > 1 + tol), f"{name} outside [0, 1]")
    err = np.abs(witness.reported() - p) if np.shape(witness.reported()) == p.shape \
        else np.abs((1 - a1) * ps + a0 * (1 - ps) - p)
    check("mixture", err > tol, f"max mixture error {err.max():.3g}")
    check("degree of misreporting", a0 + a1 > 1 + tol, f"max alpha0+alpha1 = {(a0 + a1).max():.6g}")
    mode = witness.mode
    if mode in ("Z", "ZW"):
        spread = max(np.ptp(a0, axis=0).max(), np.ptp(a1, axis=0).max())
        check("exclusion_z", spread > tol, f"rates vary across z by {spread:.3g}")
    if mode in ("W", "ZW"):
        spread = np.ptp(ps, axis=1).max()
        check("exclusion_w", spread > tol, f"p* varies across w by {spread:.3g}")
        rise = max(np.diff(a0, axis=1).max(initial=-1), np.diff(a1, axis=1).max(initial=-1))
        check("w_monotonicity", rise > tol, f"misreporting rises in w by {rise:.3g}")
    a = witness.assumptions
    if a.restriction == "one_sided_a0":
        check("one_sided", np.abs(a0) > tol, "alpha0 must be zero")
    elif a.restriction == "one_sided_a1":
        check("one_sided", np.abs(a1) > tol, "alpha1 must be zero")
    elif a.restriction == "bounded":
        check("bounded", (a0 > a.abar0 + tol) | (a1 > a.abar1 + tol), "rate above its known cap")
    elif a.restriction == "monotone_a0_le_a1":
        check("monotone_rates", a0 > a1 + tol, "alpha0 exceeds alpha1")
    elif a.restriction == "monotone_a1_le_a0":
        check("monotone_rates", a1 > a0 + tol, "alpha1 exceeds alpha0")
    return WitnessReport(tuple(fails))


# --------------------------------------------------------------------------
# random instances that satisfy a given assumption set

def random_witness(rng: np.random.Generator, assumptions: AssumptionSet, n_z: int = 2,
                   n_w: int = 1, max_rate: float = 0.35, min_gap: float = 0.05,
                   p_range: tuple[float, float] = (0.0, 1.0), min_w_drop: float = 0.0,
                   max_cap: float = 1.0, min_spread: float = 0.0,
                   max_tries: int = 10_000) -> Witness:
    """Draw a generating process that satisfies ``assumptions`` on one cell.

    Rates stay below ``max_rate`` so the slope ``1 - alpha0 - alpha1`` is
    bounded away from zero.  Distinct z values get true probabilities at least
    ``min_gap`` apart (instrument relevance).  ``p_range`` and ``min_w_drop``
    reject draws whose reported probabilities leave the range, or whose total
    misreporting falls by less than ``min_w_drop`` from the lowest to the top
    w.  ``max_cap`` rejects draws whose closed form uses a misreporting cap
    ``c0`` or ``c1`` above it (single-instrument modes only).  ``min_spread``
    rejects draws whose reported probabilities at some w span a range across z
    narrower than it, since the two-instrument ratio divides by that range.
    All of these keep the grid oracle well conditioned.
    """
    for _ in range(max_tries):
        wit = _draw_witness(rng, assumptions, n_z, n_w, max_rate, min_gap)
        rep = wit.reported()
        drop = (wit.alpha0[:, 0] + wit.alpha1[:, 0]) - (wit.alpha0[:, -1] + wit.alpha1[:, -1])
        if rep.min() >= p_range[0] and rep.max() <= p_range[1] and \
                (n_w < 2 or drop.min() >= min_w_drop) and \
                (n_z < 2 or np.ptp(rep, axis=0).min() >= min_spread) and \
                _caps_within(rep, assumptions, max_cap):
            return wit
    raise PreconditionError("could not draw an instance meeting the conditioning limits")


def _caps_within(rep: np.ndarray, assumptions: AssumptionSet, max_cap: float) -> bool:
    # Perturbing each reported value by delta/2 moves (p - c0)/(1 - c0) by at
    # most delta/(1 - c0) and p/(1 - c1) by at most delta/(1 - c1), so caps at
    # or below 1/2 keep the oracle's slack within 2 delta.  Endpoints clipped
    # at 0 or 1 cannot move outward and are exempt.
    if max_cap >= 1.0 or assumptions.mode == "ZW":
        return True
    cf = DiscreteInstance(rep[None], assumptions).closed_form()
    c0, c1 = cf.diagnostics["cap0"], cf.diagnostics["cap1"]
    if assumptions.mode == "W":
        # only the w value that attains each endpoint matters
        c0 = np.take_along_axis(c0, cf.diagnostics["binding_w_lower"][..., None], axis=-1)[..., 0]
        c1 = np.take_along_axis(c1, cf.diagnostics["binding_w_upper"][..., None], axis=-1)[..., 0]
    c0 = np.where(cf.lower > 0, np.broadcast_to(c0, cf.lower.shape), 0.0)
    c1 = np.where(cf.upper < 1, np.broadcast_to(c1, cf.upper.shape), 0.0)
    return bool(c0.max() <= max_cap and c1.max() <= max_cap)


def _draw_witness(rng, assumptions, n_z, n_w, max_rate, min_gap) -> Witness:
    mode = assumptions.mode
    r = assumptions.restriction

    def rates(size):
        a0 = rng.uniform(0, max_rate, size)
        a1 = rng.uniform(0, max_rate, size)
        if r == "one_sided_a0":
            a0[:] = 0
        elif r == "one_sided_a1":
            a1[:] = 0
        elif r == "bounded":
            a0 = np.minimum(a0, assumptions.abar0 * rng.uniform(0, 1, size))
            a1 = np.minimum(a1, assumptions.abar1 * rng.uniform(0, 1, size))
        elif r == "monotone_a0_le_a1":
            a0 = a1 * rng.uniform(0, 1, size)
        elif r == "monotone_a1_le_a0":
            a1 = a0 * rng.uniform(0, 1, size)
        return a0, a1

    def spread_probs(n):
        while True:
            v = rng.uniform(0.05, 0.95, n)
            if n < 2 or np.min(np.diff(np.sort(v))) >= min_gap:
                return v

    if mode == "Z":
        a0, a1 = rates(1)
        ps = spread_probs(n_z)[:, None]
        a0 = np.full((n_z, 1), a0[0])
        a1 = np.full((n_z, 1), a1[0])
    elif mode == "W":
        # per row (x): rates non-increasing in w
        a0 = np.empty((n_z, n_w))
        a1 = np.empty((n_z, n_w))
        for i in range(n_z):
            r0, r1 = rates(n_w)
            a0[i] = np.sort(r0)[::-1]
            a1[i] = np.sort(r1)[::-1]
            a0[i], a1[i] = _enforce_restriction(a0[i], a1[i], assumptions)
        ps = np.repeat(rng.uniform(0.05, 0.95, (n_z, 1)), n_w, axis=1)
    else:
        r0, r1 = rates(n_w)
        r0 = np.sort(r0)[::-1]
        r1 = np.sort(r1)[::-1]
        a0 = np.repeat(r0[None], n_z, axis=0)
        a1 = np.repeat(r1[None], n_z, axis=0)
        ps = np.repeat(spread_probs(n_z)[:, None], n_w, axis=1)
    return Witness(a0, a1, ps, mode, assumptions)


def _enforce_restriction(a0, a1, assumptions):
    r = assumptions.restriction
    if r == "monotone_a0_le_a1":
        a0 = np.minimum(a0, a1)
    elif r == "monotone_a1_le_a0":
        a1 = np.minimum(a1, a0)
    return a0, a1


def random_instance(rng: np.random.Generator, assumptions: AssumptionSet, n_z: int = 2,
                    n_w: int = 1, delta: float = 0.01, **kw) -> tuple[DiscreteInstance, Witness]:
    """Reported table generated by a random assumption-satisfying witness."""
    wit = random_witness(rng, assumptions, n_z, n_w, **kw)
    return DiscreteInstance(wit.reported()[None], assumptions, delta), wit
