import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from misreport.bounds import (BOUNDARY, DEGENERATE, IRRELEVANT, AssumptionSet,
                              bounds_instrument_w, bounds_instrument_z, bounds_two_instruments,
                              check_testable_implications, compute_bounds,
                              two_instrument_diagnostics)
from misreport.data import CondProbTable
from misreport.errors import PreconditionError
from misreport.sim import DgpConfig, population_table

from conftest import w_table, z_table

# two-instrument example: rows z1, z2; columns (w, w_m)
TWO = np.array([[0.52, 0.56], [0.31, 0.305]])


def two_table(p=TWO):
    return CondProbTable.from_probabilities(np.asarray(p)[None], z_levels=(1, 2), w_levels=(0, 1))


def interval(b, cell=0, pos=0):
    return b.lower[cell, pos], b.upper[cell, pos]


# --- instrument Z ----------------------------------------------------------

def test_instrument_z_example():
    b = bounds_instrument_z(z_table([0.3, 0.6]))
    assert interval(b, 0, 1) == pytest.approx((0.3 / 0.7, 1.0))
    assert interval(b, 0, 0) == pytest.approx((0.0, 0.5))
    assert b.method == "instrument_z"


def test_instrument_z_point_identification():
    b = bounds_instrument_z(z_table([0.0, 0.4, 1.0]))
    np.testing.assert_allclose(b.lower[0], [0.0, 0.4, 1.0])
    np.testing.assert_allclose(b.upper[0], [0.0, 0.4, 1.0])


def test_instrument_z_single_z_uninformative():
    b = bounds_instrument_z(z_table([0.37]))
    assert interval(b) == (0.0, 1.0)


def test_instrument_z_boundary_flag():
    with pytest.warns(UserWarning):
        b = bounds_instrument_z(z_table([0.0, 0.0]))
    assert interval(b) == (0.0, 1.0)
    assert BOUNDARY in b.cell_flags(0, 0)


# --- instrument W ----------------------------------------------------------

def test_instrument_w_example():
    b = bounds_instrument_w(w_table([0.4, 0.5]))
    assert b.lower[0, 0] == pytest.approx(1 / 6)
    assert b.upper[0, 0] == pytest.approx(1.0)


def test_instrument_w_constant_uninformative():
    b = bounds_instrument_w(w_table([0.45, 0.45, 0.45]))
    assert interval(b) == pytest.approx((0.0, 1.0))


def test_instrument_w_boundary_flag():
    with pytest.warns(UserWarning):
        b = bounds_instrument_w(w_table([0.0, 0.5]))
    assert BOUNDARY in b.cell_flags(0, 0)


def test_instrument_w_population_containment():
    cfg = DgpConfig("W")
    pop = population_table(cfg, cells=6)
    b = bounds_instrument_w(pop.table)
    ps = pop.p_star[:, 0]
    assert np.all(b.lower[:, 0] <= ps + 1e-9) and np.all(ps <= b.upper[:, 0] + 1e-9)


# --- restrictions ----------------------------------------------------------

def test_one_sided_z_bounds():
    b = compute_bounds(z_table([0.3, 0.6]), AssumptionSet.one_sided("Z"))
    assert interval(b, 0, 1) == pytest.approx((0.6, 1.0))
    b = compute_bounds(z_table([0.3, 0.6]), AssumptionSet.one_sided("Z", False))
    assert interval(b, 0, 1) == pytest.approx((0.3 / 0.7, 0.6))


def test_one_sided_w_bounds():
    t = w_table([0.4, 0.5])
    b = compute_bounds(t, AssumptionSet.one_sided("W"))
    assert b.lower[0, 0] == pytest.approx(0.5)
    b = compute_bounds(t, AssumptionSet.one_sided("W", False))
    assert b.upper[0, 0] == pytest.approx(0.4)


def test_bounded_bounded():
    b = compute_bounds(z_table([0.3, 0.6]), AssumptionSet.bounded("Z", 0.1, 0.2))
    assert interval(b, 0, 1) == pytest.approx((0.5 / 0.9, 0.75))


def test_bounded_no_misreporting_point():
    b = compute_bounds(z_table([0.3, 0.6]), AssumptionSet.bounded("Z", 0.0, 0.0))
    np.testing.assert_allclose(b.lower[0], [0.3, 0.6])
    np.testing.assert_allclose(b.upper[0], [0.3, 0.6])


def test_monotone_monotone():
    t = z_table([0.5, 0.7, 0.9])
    base = compute_bounds(t, AssumptionSet("Z"))
    mono = compute_bounds(t, AssumptionSet.monotone("Z", a0_le_a1=True))
    assert base.lower[0, 1] == pytest.approx(0.4)
    assert mono.lower[0, 1] == pytest.approx(0.6 / 0.9)
    assert mono.upper[0, 1] == base.upper[0, 1]


def test_monotone_other_direction_tightens_upper():
    t = z_table([0.1, 0.3, 0.5])
    base = compute_bounds(t, AssumptionSet("Z"))
    mono = compute_bounds(t, AssumptionSet.monotone("Z", a0_le_a1=False))
    assert mono.upper[0, 1] < base.upper[0, 1]
    assert mono.lower[0, 1] == base.lower[0, 1]


@given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=4),
       st.floats(0, 0.5), st.floats(0, 0.5), st.sampled_from(["Z", "W"]))
@settings(max_examples=80, deadline=None)
def test_restrictions_nest_inside_base(ps, a0, a1, mode):
    t = z_table(ps) if mode == "Z" else w_table(sorted(ps))
    base = compute_bounds(t, AssumptionSet(mode))
    for a in (AssumptionSet.one_sided(mode), AssumptionSet.one_sided(mode, False),
              AssumptionSet.bounded(mode, a0, a1), AssumptionSet.monotone(mode),
              AssumptionSet.monotone(mode, False)):
        r = compute_bounds(t, a)
        ok = r.valid
        assert np.all(r.lower[ok] >= base.lower[ok] - 1e-12)
        assert np.all(r.upper[ok] <= base.upper[ok] + 1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 0.6), st.floats(0, 0.6))
@settings(max_examples=80, deadline=None)
def test_bounded_shrinks_with_caps(p1, p2, c0, c1):
    t = z_table([p1, p2])
    wide = compute_bounds(t, AssumptionSet.bounded("Z", min(c0 + 0.2, 1), min(c1 + 0.2, 1)))
    tight = compute_bounds(t, AssumptionSet.bounded("Z", c0, c1))
    assert np.all(tight.lower >= wide.lower - 1e-12)
    assert np.all(tight.upper <= wide.upper + 1e-12)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=80, deadline=None)
def test_comparative_statics_instrument_z(p, a, b):
    lo, hi = sorted((a, b))
    t1 = z_table([min(lo, p), max(hi, p), p])
    t2 = z_table([min(lo, p), min(max(hi, p) + 0.005, 1.0), p])
    b1, b2 = bounds_instrument_z(t1), bounds_instrument_z(t2)
    assert b2.upper[0, 2] <= b1.upper[0, 2] + 1e-12
    assert np.all(b1.lower <= b1.upper + 1e-12)
    assert np.all((b1.lower >= 0) & (b1.upper <= 1))


def test_zw_rejects_restrictions():
    with pytest.raises(PreconditionError):
        AssumptionSet("ZW", "bounded", 0.1, 0.1)


def test_bad_caps_rejected():
    with pytest.raises(PreconditionError):
        AssumptionSet.bounded("Z", 1.2, 0.1)


# --- two instruments -------------------------------------------------------

def test_two_instrument_caps_example():
    d = two_instrument_diagnostics(two_table(), tau=0.0)
    assert d.q1[0, 0] == pytest.approx(0.255 / 0.21)
    assert d.q0[0, 0] == pytest.approx(0.0714286, abs=1e-6)
    assert d.term[0, 0] == pytest.approx(1 / 3)
    assert d.residual[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert d.u_alpha1[0] == pytest.approx(0.44)
    assert d.u_alpha0[0] == pytest.approx(0.305)
    # true rates at w_m are inside the caps
    assert 0.1 <= d.u_alpha1[0] and 0.05 <= d.u_alpha0[0]


def test_two_instruments_example():
    t = two_table()
    b = bounds_two_instruments(two_instrument_diagnostics(t, 0.0), t)
    assert interval(b, 0, 0) == pytest.approx((0.255 / 0.695, 1.0))
    assert interval(b, 0, 1) == pytest.approx((0.0, 0.305 / 0.56))
    assert b.lower[0, 0] <= 0.6 <= b.upper[0, 0]
    assert b.lower[0, 1] <= 0.3 <= b.upper[0, 1]


def test_two_instruments_no_misreporting():
    ps = np.array([0.6, 0.3])
    t = two_table(np.column_stack([ps, ps + 1e-3 * np.array([1, -1])]))
    b = compute_bounds(t, AssumptionSet("ZW"), tau=0.0)
    assert np.all(b.lower[0] <= t.prob[0, :, 1] + 1e-12)
    assert np.all(t.prob[0, :, 1] <= b.upper[0] + 1e-12)


def test_two_instruments_collinear_irrelevant():
    with pytest.raises(PreconditionError, match=IRRELEVANT):
        two_instrument_diagnostics(two_table([[0.4, 0.5], [0.4, 0.5]]), tau=0.02)


def test_two_instruments_tighter_than_intersection():
    cfg = DgpConfig("ZW")
    pop = population_table(cfg, cells=3)
    zw = compute_bounds(pop.table, AssumptionSet("ZW"), tau=0.0)
    zw_lo, zw_hi = zw.lower, zw.upper
    assert np.all(zw_lo <= zw_hi + 1e-12)
    assert not zw.flagged(DEGENERATE)


# --- testable implications -------------------------------------------------

def test_consistent_cell_not_flagged():
    b = bounds_instrument_z(z_table([0.3, 0.6]))
    assert check_testable_implications(b, z_table([0.3, 0.6])).ok


def test_w_violation_flagged():
    # misreporting that rises in w produces a crossing interval at the top value
    t = w_table([0.2, 0.9, 0.3])
    b = bounds_instrument_w(t)
    rep = check_testable_implications(b, t)
    assert "w_monotonicity" in rep.checks()


def test_one_sided_decreasing_flagged():
    t = w_table([0.6, 0.4])
    a = AssumptionSet.one_sided("W")
    rep = check_testable_implications(compute_bounds(t, a), t, a)
    assert "one_sided_monotone_pw" in rep.checks()


def test_violating_population_design_flagged():
    pop = population_table(DgpConfig("W_violating"), cells=4)
    b = bounds_instrument_w(pop.table)
    assert "w_monotonicity" in check_testable_implications(b, pop.table).checks()
