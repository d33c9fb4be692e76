import json

import numpy as np

from misreport.errors import ConfigError
from misreport.sim import DgpConfig
from misreport.verify import (CONTAINMENT_CASES, SHARP_CASES, VerifyProfile, oracle_case_errors,
                              population_checks, run_verification, witness_case_errors)

import pytest


def test_sharp_cases_within_two_steps():
    rng = np.random.default_rng(0)
    for case in SHARP_CASES:
        err = oracle_case_errors(case, 3, rng, delta=0.02)
        assert np.nanmax(err) <= 0.04 + 1e-12, case.name


def test_containment_cases_hold():
    rng = np.random.default_rng(1)
    for case in CONTAINMENT_CASES:
        err = oracle_case_errors(case, 2, rng, delta=0.02)
        assert np.nanmax(err) <= 0.04 + 1e-12, case.name


def test_population_checks_pass_for_simulation_designs():
    prof = VerifyProfile(population_cells=3, moment_points=41)
    for design in ("Z", "W", "ZW"):
        for r in population_checks(DgpConfig(design), prof):
            assert r.passed, (design, r)


def test_violating_design_fails_named_checks():
    prof = VerifyProfile(run_oracle=False, run_witness=False, designs=("W_violating",),
                         errors=("normal",))
    rep = run_verification(prof)
    assert not rep.ok
    assert "w_monotonicity" in rep.failing_checks()


def test_small_run_report_formats():
    prof = VerifyProfile(oracle_instances=1, witness_instances=3, delta=0.05, designs=("Z",),
                         errors=("normal",))
    rep = run_verification(prof)
    assert rep.ok, rep.format_text()
    assert json.loads(rep.to_json())["ok"] is True
    assert rep.format_text().splitlines()[-1] == "all checks passed"
    assert len(rep.to_frame()) == len(rep.results)


def test_profile_validation():
    with pytest.raises(ConfigError):
        VerifyProfile(designs=("Q",))
