import numpy as np
import pytest

from misreport.bounds import AssumptionSet, check_testable_implications, compute_bounds
from misreport.data import estimate_cond_prob
from misreport.errors import ConfigError
from misreport.sim import (DgpConfig, MCSettings, applicable_assumptions, dgp_w, dgp_z,
                           format_mc_table, population_table, run_monte_carlo, simulate,
                           uniform_binning)


def test_z_rates_at_endpoints():
    cfg = DgpConfig("Z")
    assert cfg.alpha1(1.0) == pytest.approx(0.0) and cfg.alpha0(1.0) == pytest.approx(0.4)
    assert cfg.alpha1(-1.0) == pytest.approx(0.2) and cfg.alpha0(-1.0) == pytest.approx(0.2)


def test_w_rates():
    cfg = DgpConfig("W")
    a0 = cfg.alpha0(0.0, np.array([1, 2, 3, 4, 5]))
    assert a0[0] == pytest.approx(1 / 1.3) and a0[-1] == pytest.approx(1 / 8.5)
    assert np.all(np.diff(a0) < 0)
    assert cfg.alpha1(1.0) == pytest.approx(0.0)


@pytest.mark.parametrize("design", ["Z", "W", "ZW", "W_violating"])
def test_rates_valid_on_support(design):
    cfg = DgpConfig(design)
    xs = np.linspace(-1, 1, 201)
    for w in (cfg.w_support or (None,)):
        a0, a1 = cfg.alpha0(xs, w), cfg.alpha1(xs, w)
        assert np.all((a0 >= 0) & (a1 >= 0) & (a0 + a1 <= 1))
    if design == "W":
        assert float(cfg.alpha0(-1.0, 1) + cfg.alpha1(-1.0)) == pytest.approx(0.2 + 1 / 1.3)


@pytest.mark.parametrize("design", ["Z", "W"])
def test_latent_bookkeeping_and_determinism(design):
    cfg = DgpConfig(design, n=5000, seed=7)
    s = simulate(cfg)
    lat = s.latent
    np.testing.assert_array_equal(s.y, lat.m1 * lat.y_star + (1 - lat.m0) * (1 - lat.y_star))
    np.testing.assert_array_equal(s.y, simulate(cfg).y)
    assert not np.array_equal(s.y, simulate(DgpConfig(design, n=5000, seed=8)).y)


def test_design_specific_generators():
    assert dgp_z(DgpConfig("Z", n=10)).has_z
    assert dgp_w(DgpConfig("W", n=10)).has_w
    with pytest.raises(ConfigError):
        dgp_z(DgpConfig("W", n=10))
    with pytest.raises(ConfigError):
        DgpConfig("Z", error="t")
    with pytest.raises(ConfigError):
        DgpConfig("Z", beta0=(1.0, 2.0))


@pytest.mark.parametrize("design", ["Z", "W"])
def test_large_sample_matches_population(design):
    # two x cells times five instrument values leaves about 1e5 draws per
    # cell, so 0.005 is more than three standard errors
    cfg = DgpConfig(design, n=1_000_000, seed=1)
    s = simulate(cfg)
    t = estimate_cond_prob(s, uniform_binning(2), min_cell_count=10)
    pop = population_table(cfg, cells=2)
    assert np.max(np.abs(t.prob - pop.table.prob)) < 0.005


@pytest.mark.parametrize("design", ["Z", "W"])
def test_population_containment(design):
    cfg = DgpConfig(design)
    pop = population_table(cfg, cells=6)
    for a in applicable_assumptions(cfg, design):
        b = compute_bounds(pop.table, a)
        assert np.all(b.lower <= pop.p_star + 1e-6), a.tag
        assert np.all(pop.p_star <= b.upper + 1e-6), a.tag


def test_applicable_assumptions():
    tags = [a.tag for a in applicable_assumptions(DgpConfig("Z"), "Z")]
    assert tags == ["none", "bounded(a0<=0.4,a1<=0.2)", "monotone_a1_le_a0"]
    tags = [a.tag for a in applicable_assumptions(DgpConfig("W_violating"), "W")]
    assert "one_sided_a1" in tags and "bounded(a0<=0.6,a1<=0)" in tags
    assert [a.tag for a in applicable_assumptions(DgpConfig("ZW"), "ZW")] == ["none"]


def test_violating_design_detected():
    cfg = DgpConfig("W_violating")
    pop = population_table(cfg, cells=4)
    b = compute_bounds(pop.table, AssumptionSet("W"))
    rep = check_testable_implications(b, pop.table)
    assert not rep.ok


def test_monte_carlo_smoke():
    st = MCSettings(replications=1, step=0.1, has_starts=2)
    df = run_monte_carlo([("Z", "normal", 500)], st)
    assert set(df.estimator) == {"set_lower", "set_upper", "has"}
    assert set(df.coefficient) == {"beta2", "beta3"}
    assert (df.rmse >= 0).all() and (df.mad >= 0).all()
    assert "Design Z, coefficient beta2" in format_mc_table(df)


def test_monte_carlo_workers_do_not_change_results():
    st = MCSettings(replications=2, step=0.2, run_has=False)
    a = run_monte_carlo([("W", "normal", 500)], st, workers=1)
    b = run_monte_carlo([("W", "normal", 500)], st, workers=2)
    np.testing.assert_array_equal(a.rmse.to_numpy(), b.rmse.to_numpy())
