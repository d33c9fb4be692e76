"""Identified intervals for the true choice probability ``p*(x)``.

Every interval here has the same shape.  The data imply caps on the two
misreporting rates, ``alpha0 <= c0`` (false positives) and
``alpha1 <= c1`` (false negatives).  The mixture identity
``p = (1 - alpha1) p* + alpha0 (1 - p*)`` then gives

    (p - c0) / (1 - c0)  <=  p*  <=  p / (1 - c1).

The instruments and the extra restrictions only change how the caps are
built.  Instrument W yields one cap pair per w value, and the intervals are
intersected across w.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .data import CondProbTable, EnvelopeW, EnvelopeZ, envelopes_w, envelopes_z
from .errors import PreconditionError

EPS = 1e-12

BOUNDARY = "boundary condition violated"
TESTABLE = "testable implication violated"
UNDEFINED = "undefined"
IRRELEVANT = "instrument Z irrelevant"
Q1_VIOLATION = "monotonicity/relevance implication violated"
DEGENERATE = "degenerate denominator"

Mode = Literal["Z", "W", "ZW"]
RESTRICTIONS = ("none", "one_sided_a0", "one_sided_a1", "bounded",
                "monotone_a0_le_a1", "monotone_a1_le_a0")


@dataclass(frozen=True)
class AssumptionSet:
    """Instrument configuration plus at most one misreporting restriction.

    ``one_sided_a0`` means no false positives (``alpha0 = 0``),
    ``one_sided_a1`` no false negatives.  ``bounded`` uses the known caps
    ``abar0``/``abar1``.  The monotone variants order the two rates.
    """

    mode: Mode = "Z"
    restriction: str = "none"
    abar0: float = 1.0
    abar1: float = 1.0

    def __post_init__(self):
        if self.mode not in ("Z", "W", "ZW"):
            raise PreconditionError(f"unknown instrument mode {self.mode!r}")
        if self.restriction not in RESTRICTIONS:
            raise PreconditionError(f"unknown restriction {self.restriction!r}")
        for v in (self.abar0, self.abar1):
            if not 0.0 <= v <= 1.0:
                raise PreconditionError("misreporting caps must lie in [0, 1]")
        if self.mode == "ZW" and self.restriction != "none":
            raise PreconditionError("restrictions are not combined with two instruments")

    @classmethod
    def one_sided(cls, mode: Mode, no_false_positives: bool = True) -> "AssumptionSet":
        return cls(mode, "one_sided_a0" if no_false_positives else "one_sided_a1")

    @classmethod
    def bounded(cls, mode: Mode, abar0: float, abar1: float) -> "AssumptionSet":
        return cls(mode, "bounded", float(abar0), float(abar1))

    @classmethod
    def monotone(cls, mode: Mode, a0_le_a1: bool = True) -> "AssumptionSet":
        return cls(mode, "monotone_a0_le_a1" if a0_le_a1 else "monotone_a1_le_a0")

    @property
    def tag(self) -> str:
        if self.restriction == "bounded":
            return f"bounded(a0<={self.abar0:g},a1<={self.abar1:g})"
        return self.restriction

    def method_name(self) -> str:
        base = {"Z": "instrument_z", "W": "instrument_w", "ZW": "two_instruments"}[self.mode]
        return base if self.restriction == "none" else f"{base}+{self.tag}"


@dataclass(frozen=True, eq=False)
class ProbBounds:
    """Per ``(cell, z)`` interval ``[lower, upper]`` for ``p*(x)``.

    Cells without enough data are ``defined=False`` (NaN bounds).  A defined
    cell with ``lower > upper`` carries the testable-implication flag and is
    reported, not repaired.
    """

    lower: np.ndarray
    upper: np.ndarray
    defined: np.ndarray
    method: str
    assumptions: AssumptionSet
    flags: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return self.defined & ~(self.lower > self.upper)

    def cell_flags(self, cell: int, z_pos: int = 0) -> list[str]:
        return list(self.flags.get((cell, z_pos), ()))

    def flagged(self, flag: str) -> list[tuple[int, int]]:
        return sorted(k for k, v in self.flags.items() if flag in v)


def interval_from_caps(p, cap0, cap1):
    """Bounds on ``p*`` from caps on ``alpha0`` and ``alpha1``.

    Vanishing denominators take their one-sided limits (lower bound 1 when
    ``cap0 -> 1``, upper bound 1 when ``cap1 -> 1``).  Results are clipped to
    ``[0, 1]``; clipping cannot reorder an ordered pair.
    """
    p = np.asarray(p, dtype=float)
    d0 = 1.0 - np.asarray(cap0, dtype=float)
    d1 = 1.0 - np.asarray(cap1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(d0 < EPS, 1.0, (p - cap0) / np.where(d0 < EPS, 1.0, d0))
        hi = np.where(d1 < EPS, 1.0, p / np.where(d1 < EPS, 1.0, d1))
    lo = np.where(np.isnan(p), np.nan, lo)
    hi = np.where(np.isnan(p), np.nan, hi)
    return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)


def misreport_caps(p_lo, p_hi, assumptions: AssumptionSet):
    """Caps ``(c0, c1)`` on ``(alpha0, alpha1)`` given the reported envelope.

    With no restriction the envelope alone gives ``alpha0 <= p_lo`` and
    ``alpha1 <= 1 - p_hi``; each restriction tightens one or both.
    """
    c0 = np.asarray(p_lo, dtype=float)
    c1 = 1.0 - np.asarray(p_hi, dtype=float)
    r = assumptions.restriction
    if r == "one_sided_a0":
        c0 = np.where(np.isnan(c0), np.nan, 0.0)
    elif r == "one_sided_a1":
        c1 = np.where(np.isnan(c1), np.nan, 0.0)
    elif r == "bounded":
        c0 = np.minimum(c0, assumptions.abar0)
        c1 = np.minimum(c1, assumptions.abar1)
    elif r == "monotone_a0_le_a1":
        c0 = np.minimum(c0, c1)
    elif r == "monotone_a1_le_a0":
        c1 = np.minimum(c1, c0)
    return c0, c1


def _add_flag(flags: dict, key, flag: str):
    flags.setdefault(key, [])
    if flag not in flags[key]:
        flags[key].append(flag)


def _flag_boundary(flags: dict, bad: np.ndarray):
    cells = list(zip(*np.nonzero(bad)))
    for c, z in cells:
        _add_flag(flags, (int(c), int(z)), BOUNDARY)
    if cells:
        warnings.warn(f"{BOUNDARY} in {len(cells)} cell(s); bounds set to [0, 1]", stacklevel=3)


def _finish(lower, upper, defined, method, assumptions, flags, diagnostics) -> ProbBounds:
    lower = np.where(defined, lower, np.nan)
    upper = np.where(defined, upper, np.nan)
    for c, z in zip(*np.nonzero(defined & (lower > upper))):
        _add_flag(flags, (int(c), int(z)), TESTABLE)
    for c, z in zip(*np.nonzero(~defined)):
        _add_flag(flags, (int(c), int(z)), UNDEFINED)
    return ProbBounds(lower, upper, defined, method, assumptions, flags, diagnostics)


def _bounds_z(table: CondProbTable, env: EnvelopeZ, assumptions: AssumptionSet) -> ProbBounds:
    p, _, inc = table.p_xz()
    p = p[:, :, 0]
    defined = inc[:, :, 0] & env.defined[:, None]
    lo_env = env.lower[:, None]
    hi_env = env.upper[:, None]
    c0, c1 = misreport_caps(lo_env, hi_env, assumptions)
    c0, c1 = np.broadcast_to(c0, p.shape), np.broadcast_to(c1, p.shape)
    lower, upper = interval_from_caps(p, c0, c1)
    flags: dict = {}
    bad = defined & ((hi_env < EPS) | (lo_env > 1 - EPS))
    lower = np.where(bad, 0.0, lower)
    upper = np.where(bad, 1.0, upper)
    _flag_boundary(flags, bad)
    diag = {"p": p, "p_lower_z": env.lower, "p_upper_z": env.upper, "cap0": c0, "cap1": c1}
    return _finish(lower, upper, defined, assumptions.method_name(), assumptions, flags, diag)


def _bounds_w(table: CondProbTable, env: EnvelopeW, assumptions: AssumptionSet) -> ProbBounds:
    p, _, inc = table.p_xw()
    c0, c1 = misreport_caps(env.lower, env.upper, assumptions)
    lo_w, hi_w = interval_from_caps(p, c0, c1)
    defined = inc.any(axis=2)
    with np.errstate(invalid="ignore"):
        bad = (inc & ((p <= EPS) | (p >= 1 - EPS))).any(axis=2)
    lo_w = np.where(inc, lo_w, -np.inf)
    hi_w = np.where(inc, hi_w, np.inf)
    lower = lo_w.max(axis=2)
    upper = hi_w.min(axis=2)
    arg_lo = lo_w.argmax(axis=2)
    arg_hi = hi_w.argmin(axis=2)
    flags: dict = {}
    bad &= defined
    lower = np.where(bad, 0.0, lower)
    upper = np.where(bad, 1.0, upper)
    _flag_boundary(flags, bad)
    diag = {"p_w": p, "binding_w_lower": arg_lo, "binding_w_upper": arg_hi,
            "cap0": c0, "cap1": c1}
    return _finish(lower, upper, defined, assumptions.method_name(), assumptions, flags, diag)


def bounds_instrument_z(table: CondProbTable, env: EnvelopeZ | None = None) -> ProbBounds:
    """Sharp interval when Z shifts only the true outcome."""
    return _bounds_z(table, env or envelopes_z(table), AssumptionSet("Z"))


def bounds_instrument_w(table: CondProbTable, env: EnvelopeW | None = None) -> ProbBounds:
    """Interval when W shifts only misreporting, monotonically in the declared order.

    Sharp for binary W; for more W values it is valid but may be loose.
    """
    return _bounds_w(table, env or envelopes_w(table), AssumptionSet("W"))


def apply_restriction(table: CondProbTable, assumptions: AssumptionSet,
                      env: EnvelopeZ | EnvelopeW | None = None) -> ProbBounds:
    """Single-instrument interval under one extra misreporting restriction."""
    if assumptions.mode == "Z":
        return _bounds_z(table, env or envelopes_z(table), assumptions)
    if assumptions.mode == "W":
        return _bounds_w(table, env or envelopes_w(table), assumptions)
    raise PreconditionError("use two_instrument_diagnostics/bounds_two_instruments for ZW")


@dataclass(frozen=True, eq=False)
class TwoInstrumentDiagnostics:
    """Joint-instrument caps on misreporting at the largest W value.

    Arrays indexed ``[cell, j]`` refer to the comparison of ``w_j`` with the
    top value ``w_m`` (``j`` ranges over the lower W values).
    """

    q1: np.ndarray
    q0: np.ndarray
    residual: np.ndarray
    pair: np.ndarray
    term: np.ndarray
    u_alpha1: np.ndarray
    u_alpha0: np.ndarray
    defined: np.ndarray
    w_top: object
    flags: dict = field(default_factory=dict)


def two_instrument_diagnostics(table: CondProbTable, tau: float = 0.02) -> TwoInstrumentDiagnostics:
    """Ratios ``q1``, offsets ``q0`` and the resulting caps ``U_alpha0``, ``U_alpha1``.

    For each lower value ``w`` the z-pair with the widest spread of
    ``p_W(., w)`` is used; ``q0`` recomputed from every other z gives an
    overidentification residual that is reported but not enforced.  Pairs whose
    spread does not exceed ``tau`` mark the comparison irrelevant, and
    ``q1 <= 1`` (impossible in population) drops the comparison.
    """
    if not (table.has_z and table.has_w):
        raise PreconditionError("two-instrument bounds need both Z and W")
    p, _, inc = table.p_xw()
    n_cell, n_z, n_w = p.shape
    m = n_w - 1
    shape = (n_cell, max(m, 0))
    q1 = np.full(shape, np.nan)
    q0 = np.full(shape, np.nan)
    resid = np.full(shape, np.nan)
    term = np.full(shape, np.nan)
    pair = np.full(shape + (2,), -1, dtype=int)
    u1 = np.full(n_cell, np.nan)
    u0 = np.full(n_cell, np.nan)
    defined = np.zeros(n_cell, dtype=bool)
    flags: dict = {}
    any_relevant = False
    for c in range(n_cell):
        top = p[c, :, m]
        ok_top = inc[c, :, m]
        if not ok_top.any():
            _add_flag(flags, c, UNDEFINED)
            continue
        sup_terms = [np.nanmax(top)]
        inf_terms = [np.nanmin(top)]
        for j in range(m):
            zs = np.nonzero(inc[c, :, j] & ok_top)[0]
            if zs.size < 2:
                _add_flag(flags, (c, j), IRRELEVANT)
                continue
            col = p[c, zs, j]
            spread = np.abs(col[:, None] - col[None, :])
            a, b = np.unravel_index(np.argmax(spread), spread.shape)
            a, b = sorted((a, b))
            if spread[a, b] <= tau:
                _add_flag(flags, (c, j), IRRELEVANT)
                continue
            any_relevant = True
            z1, z2 = zs[a], zs[b]
            pair[c, j] = (z1, z2)
            r = (p[c, z1, m] - p[c, z2, m]) / (p[c, z1, j] - p[c, z2, j])
            off = r * p[c, z1, j] - p[c, z1, m]
            q1[c, j] = r
            q0[c, j] = off
            resid[c, j] = np.ptp(r * p[c, zs, j] - p[c, zs, m])
            if r <= 1.0:
                _add_flag(flags, (c, j), Q1_VIOLATION)
                continue
            term[c, j] = off / (r - 1.0)
            sup_terms.append(term[c, j])
            inf_terms.append(term[c, j])
        u1[c] = np.clip(1.0 - max(sup_terms), 0.0, 1.0)
        u0[c] = np.clip(min(inf_terms), 0.0, 1.0)
        defined[c] = True
    if m > 0 and not any_relevant:
        raise PreconditionError(f"{IRRELEVANT}: no z-pair spread exceeds tau={tau}")
    top_label = table.w_levels[m]
    return TwoInstrumentDiagnostics(q1, q0, resid, pair, term, u1, u0, defined, top_label, flags)


def bounds_two_instruments(diag: TwoInstrumentDiagnostics, table: CondProbTable) -> ProbBounds:
    """Interval at the top W value using the joint misreporting caps."""
    p, _, inc = table.p_xw()
    m = p.shape[2] - 1
    pm = p[:, :, m]
    defined = inc[:, :, m] & diag.defined[:, None]
    c0 = np.broadcast_to(diag.u_alpha0[:, None], pm.shape)
    c1 = np.broadcast_to(diag.u_alpha1[:, None], pm.shape)
    lower, upper = interval_from_caps(pm, c0, c1)
    flags: dict = {}
    bad = defined & ((c0 >= 1 - EPS) | (c1 >= 1 - EPS))
    lower = np.where(bad, 0.0, lower)
    upper = np.where(bad, 1.0, upper)
    for c, z in zip(*np.nonzero(bad)):
        _add_flag(flags, (int(c), int(z)), DEGENERATE)
    assumptions = AssumptionSet("ZW")
    return _finish(lower, upper, defined, assumptions.method_name(), assumptions, flags,
                   {"p_top": pm, "u_alpha0": diag.u_alpha0, "u_alpha1": diag.u_alpha1})


@dataclass(frozen=True)
class Violation:
    cell: int
    z_pos: int
    check: str
    detail: str


@dataclass(frozen=True)
class TestableReport:
    violations: tuple[Violation, ...]

    __test__ = False  # keep pytest from collecting this class

    @property
    def ok(self) -> bool:
        return not self.violations

    def checks(self) -> set[str]:
        return {v.check for v in self.violations}


def _order_check_name(mode: str) -> str:
    return {"Z": "z_interval_nonempty", "W": "w_monotonicity", "ZW": "two_instrument_nonempty"}[mode]


def check_testable_implications(bounds: ProbBounds, table: CondProbTable,
                                assumptions: AssumptionSet | None = None,
                                tol: float = 0.0) -> TestableReport:
    """Cells whose data contradict the maintained assumptions.

    Every mode flags empty intervals.  Under W the empty interval is the
    observable trace of non-monotone misreporting (the check is named
    ``w_monotonicity``).  One-sided misreporting with W also forces
    ``p_W(x, .)`` to move one way in w, and that is checked directly.
    """
    assumptions = assumptions or bounds.assumptions
    out = []
    name = _order_check_name(assumptions.mode)
    for c, z in zip(*np.nonzero(bounds.defined & (bounds.lower > bounds.upper + tol))):
        out.append(Violation(int(c), int(z), name,
                             f"lower {bounds.lower[c, z]:.6g} > upper {bounds.upper[c, z]:.6g}"))
    if assumptions.mode == "W" and assumptions.restriction in ("one_sided_a0", "one_sided_a1"):
        p, _, inc = table.p_xw()
        sign = 1.0 if assumptions.restriction == "one_sided_a0" else -1.0
        for c in range(p.shape[0]):
            for z in range(p.shape[1]):
                seq = p[c, z][inc[c, z]]
                steps = sign * np.diff(seq)
                if np.any(steps < -tol):
                    direction = "increasing" if sign > 0 else "decreasing"
                    out.append(Violation(c, z, "one_sided_monotone_pw",
                                         f"p_W not {direction} in w: {np.round(seq, 6).tolist()}"))
    return TestableReport(tuple(out))


def compute_bounds(table: CondProbTable, assumptions: AssumptionSet, tau: float = 0.02) -> ProbBounds:
    """Dispatch on instrument mode and restriction."""
    if assumptions.mode == "ZW":
        return bounds_two_instruments(two_instrument_diagnostics(table, tau), table)
    return apply_restriction(table, assumptions)
