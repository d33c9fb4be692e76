"""Partial identification and set estimation for binary choice with misreported outcomes."""

__version__ = "0.1.0"

from .bounds import (AssumptionSet, ProbBounds, TestableReport, apply_restriction,
                     bounds_instrument_w, bounds_instrument_z, bounds_two_instruments,
                     check_testable_implications, compute_bounds, two_instrument_diagnostics)
from .data import (Binning, CondProbTable, Sample, build_sample, envelopes_w, envelopes_z,
                   estimate_cond_prob, make_binning)
from .errors import (BudgetExceededError, ConfigError, DataError, EstimationError,
                     InsufficientDataError, MisreportError, PreconditionError,
                     UnknownCategoryError)
from .has import HasEstimate, fit_has, has_loglik
from .moments import (InstrumentalFunctions, LinkFunction, ModelSpec, build_hypercubes,
                      criterion, moment_data, moment_parametric, moment_semiparametric)
from .oracle import (DiscreteInstance, Witness, brute_force_prob_bounds,
                     construct_sharpness_witness, random_instance, verify_witness)
from .setest import BetaGrid, IdentifiedSet, MCReport, estimate_identified_set, mc_metrics
from .sim import DgpConfig, MCSettings, dgp_w, dgp_z, population_table, run_monte_carlo

__all__ = [
    "AssumptionSet", "ProbBounds", "TestableReport", "apply_restriction", "bounds_instrument_w",
    "bounds_instrument_z", "bounds_two_instruments", "check_testable_implications",
    "compute_bounds", "two_instrument_diagnostics",
    "Binning", "CondProbTable", "Sample", "build_sample", "envelopes_w", "envelopes_z",
    "estimate_cond_prob", "make_binning",
    "BudgetExceededError", "ConfigError", "DataError", "EstimationError", "InsufficientDataError",
    "MisreportError", "PreconditionError", "UnknownCategoryError",
    "HasEstimate", "fit_has", "has_loglik",
    "InstrumentalFunctions", "LinkFunction", "ModelSpec", "build_hypercubes", "criterion",
    "moment_data", "moment_parametric", "moment_semiparametric",
    "DiscreteInstance", "Witness", "brute_force_prob_bounds", "construct_sharpness_witness",
    "random_instance", "verify_witness",
    "BetaGrid", "IdentifiedSet", "MCReport", "estimate_identified_set", "mc_metrics",
    "DgpConfig", "MCSettings", "dgp_w", "dgp_z", "population_table", "run_monte_carlo",
]
