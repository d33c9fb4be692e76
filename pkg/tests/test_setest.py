import dataclasses

import numpy as np
import pytest

from misreport.data import Sample
from misreport.errors import BudgetExceededError, ConfigError, EstimationError
from misreport.moments import LinkFunction, ModelSpec, build_hypercubes, moment_data
from misreport.setest import BetaGrid, cutoff_value, estimate_identified_set, mc_metrics
from misreport.sim import DgpConfig, simulate

# Choice probabilities stay inside (0.1, 0.9).  In a cube where every
# sampled y equals 1, the parametric companion moment is a small negative
# constant whose standardized mean does not shrink with n, so near-degenerate
# designs would reject the truth at the log(n)/n cutoff.
BETA = (0.25, 0.5, -0.5)
LOWER, UPPER = (0.0, 0.2, -0.8), (0.5, 0.8, -0.2)


@pytest.fixture(scope="module")
def clean_setup():
    """Parametric model, no misreporting, every coefficient free."""
    rng = np.random.default_rng(21)
    n = 10_000
    x = rng.uniform(-1, 1, n)
    z = rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0], n)
    y = (BETA[0] + BETA[1] * x + BETA[2] * z >= rng.normal(size=n)).astype(int)
    s = Sample(y=y, x=x[:, None], z=z)
    model = ModelSpec(3, "parametric", LinkFunction.normal(), norm_index=None)
    return s, model, moment_data(s, "Z"), build_hypercubes(s, 50)


def test_clean_endpoints_bracket_truth(clean_setup):
    s, model, data, cubes = clean_setup
    ident = estimate_identified_set(data, model, BetaGrid(model, LOWER, UPPER, 0.05), cubes)
    assert not ident.is_empty
    assert np.all(ident.lower <= np.asarray(BETA) + 1e-9)
    assert np.all(np.asarray(BETA) <= ident.upper + 1e-9)


def test_degenerate_envelopes_concentrate(clean_setup):
    s, model, data, cubes = clean_setup
    data = dataclasses.replace(data, p_lo=np.zeros(s.n), p_hi=np.ones(s.n))
    ident = estimate_identified_set(data, model, BetaGrid(model, LOWER, UPPER, 0.05), cubes)
    assert np.all(ident.lower <= np.asarray(BETA) + 1e-9)
    assert np.all(np.asarray(BETA) <= ident.upper + 1e-9)
    assert np.all(ident.upper - ident.lower <= 0.2 + 1e-9)


def test_single_point_grid(clean_setup):
    _, model, data, cubes = clean_setup
    ident = estimate_identified_set(data, model, BetaGrid.single(model, [1.0, 0.3, 0.2]), cubes)
    assert ident.accepted.all()
    np.testing.assert_allclose(ident.lower, [1.0, 0.3, 0.2])
    np.testing.assert_allclose(ident.upper, ident.lower)


def test_kappa_monotone_and_refinement(clean_setup):
    _, model, data, cubes = clean_setup
    coarse = BetaGrid(model, (0.0, 0.0, -1.0), (1.0, 1.0, 0.0), 0.2)
    fine = BetaGrid(model, (0.0, 0.0, -1.0), (1.0, 1.0, 0.0), 0.1)
    a = estimate_identified_set(data, model, coarse, cubes, kappa=0.5)
    b = estimate_identified_set(data, model, coarse, cubes, kappa=5.0)
    assert np.all(b.accepted[a.accepted])
    assert np.all(a.lower <= a.upper)
    f = estimate_identified_set(data, model, fine, cubes)
    assert f.q_min <= a.q_min + 1e-12


def test_deterministic(clean_setup):
    _, model, data, cubes = clean_setup
    grid = BetaGrid(model, LOWER, UPPER, 0.1)
    a = estimate_identified_set(data, model, grid, cubes)
    b = estimate_identified_set(data, model, grid, cubes)
    np.testing.assert_array_equal(a.q, b.q)


def test_identified_set_exports(clean_setup):
    _, model, data, cubes = clean_setup
    ident = estimate_identified_set(data, model, BetaGrid(model, LOWER, UPPER, 0.1), cubes)
    df = ident.to_frame()
    assert list(df.columns) == list(model.names) + ["Q", "accepted"]
    assert '"endpoints"' in ident.to_json()


def test_grid_validation():
    m = ModelSpec(3)
    with pytest.raises(ConfigError):
        BetaGrid(m, (1.0, 0.0), (0.0, 1.0), 0.1)
    with pytest.raises(ConfigError):
        BetaGrid(m, (0.0, 0.0), (1.0, 1.0), -0.1)
    with pytest.raises(BudgetExceededError):
        BetaGrid(m, (0.0, 0.0), (1.0, 1.0), 0.001, budget=1000)
    g = BetaGrid(m, (0.0, 0.0), (1.0, 1.0), 0.25)
    assert g.size == 25 and g.points().shape == (25, 3)


def test_cutoff():
    assert cutoff_value(0.5, 100, 2.0) == pytest.approx(0.5 + 2 * np.log(100) / 100)
    with pytest.raises(ConfigError):
        cutoff_value(0.0, 10, -1)


def test_mc_metrics_examples():
    rep = mc_metrics({"est": [[1.4], [1.6]]}, [1.5])
    assert rep.rmse["est"][0] == pytest.approx(0.1)
    assert rep.mad["est"][0] == pytest.approx(0.1)
    rep = mc_metrics({"est": [[1.5], [1.5], None]}, [1.5])
    assert rep.rmse["est"][0] == 0 and rep.n_failed["est"] == 1


def test_mc_metrics_all_failed():
    with pytest.raises(EstimationError):
        mc_metrics({"est": [None, None]}, [1.0])


def test_semiparametric_set_contains_truth_population_scale():
    cfg = DgpConfig("Z", n=20_000, seed=4)
    s = simulate(cfg)
    model = ModelSpec(3)
    ident = estimate_identified_set(moment_data(s, "Z"), model,
                                    BetaGrid.around(model, cfg.beta0, 0.5, 0.1),
                                    build_hypercubes(s, 50))
    assert np.all(ident.lower[1:] <= np.asarray(cfg.beta0)[1:])
    assert np.all(np.asarray(cfg.beta0)[1:] <= ident.upper[1:])
