import numpy as np
import pytest

from misreport.data import CondProbTable


def z_table(p_by_z, weight=None):
    """One covariate cell with reported probabilities over z."""
    p = np.asarray(p_by_z, dtype=float)[None, :, None]
    return CondProbTable.from_probabilities(p, weight, z_levels=tuple(range(p.shape[1])))


def w_table(p_by_w):
    """One covariate cell with reported probabilities over ordered w."""
    p = np.asarray(p_by_w, dtype=float)[None, None, :]
    return CondProbTable.from_probabilities(p, w_levels=tuple(range(1, p.shape[2] + 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


# acceptance criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance run")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
