"""Grid search for the identified set of coefficients and Monte Carlo metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import BudgetExceededError, ConfigError, EstimationError
from .moments import (InstrumentalFunctions, ModelSpec, MomentData, build_hypercubes,
                      criterion_batch)

DEFAULT_GRID_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class BetaGrid:
    """Rectangular grid over the free coordinates of a :class:`ModelSpec`.

    Each free axis runs from ``lower`` to ``upper`` (inclusive, up to float
    rounding) in steps of ``step``.  ``values`` overrides the ranges with an
    explicit list of free-coordinate points.
    """

    model: ModelSpec
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    step: tuple[float, ...] = ()
    values: np.ndarray | None = None
    budget: int = DEFAULT_GRID_BUDGET

    def __post_init__(self):
        k = len(self.model.free)
        if self.values is not None:
            v = np.atleast_2d(np.asarray(self.values, dtype=float))
            if v.shape[1] != k or v.shape[0] == 0:
                raise ConfigError(f"explicit grid needs rows of {k} free coordinates")
            object.__setattr__(self, "values", v)
        else:
            step = tuple(self.step) if np.ndim(self.step) else (float(self.step),) * k
            object.__setattr__(self, "step", step)
            if not (len(self.lower) == len(self.upper) == len(step) == k):
                raise ConfigError(f"grid needs lower/upper/step for {k} free coordinates")
            for lo, hi, st in zip(self.lower, self.upper, step):
                if not lo < hi:
                    raise ConfigError("grid lower bound must be below upper bound")
                if not st > 0:
                    raise ConfigError("grid step must be positive")
        if self.size > self.budget:
            raise BudgetExceededError(f"grid has {self.size} points, budget {self.budget}")

    @classmethod
    def single(cls, model: ModelSpec, free_point) -> "BetaGrid":
        return cls(model, values=np.atleast_2d(free_point))

    @classmethod
    def around(cls, model: ModelSpec, beta0, half_width: float = 1.0, step: float = 0.05,
               **kw) -> "BetaGrid":
        """Box ``beta0 +/- half_width`` on every free coordinate."""
        b = np.asarray(beta0, dtype=float)[list(model.free)]
        return cls(model, tuple(b - half_width), tuple(b + half_width), step, **kw)

    def axes(self) -> list[np.ndarray]:
        if self.values is not None:
            return [np.unique(self.values[:, j]) for j in range(self.values.shape[1])]
        out = []
        for lo, hi, st in zip(self.lower, self.upper, self.step):
            m = int(np.floor((hi - lo) / st + 1e-9)) + 1
            out.append(lo + st * np.arange(m))
        return out

    @property
    def size(self) -> int:
        if self.values is not None:
            return int(self.values.shape[0])
        return int(np.prod([a.size for a in self.axes()], dtype=np.int64))

    def free_points(self) -> np.ndarray:
        if self.values is not None:
            return self.values
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def points(self) -> np.ndarray:
        """Full coefficient vectors, one row per grid point."""
        return self.model.full_beta(self.free_points())


@dataclass(frozen=True, eq=False)
class IdentifiedSet:
    """Accepted grid points ``{beta : Q(beta) <= c_n}`` and their coordinate ranges."""

    points: np.ndarray
    q: np.ndarray
    accepted: np.ndarray
    cutoff: float
    q_min: float
    kappa: float
    n: int
    names: tuple[str, ...]
    n_excluded: int = 0
    n_empty_cubes: int = 0
    n_cubes: int = 0

    @property
    def is_empty(self) -> bool:
        return not bool(self.accepted.any())

    @property
    def lower(self) -> np.ndarray:
        return self.points[self.accepted].min(axis=0) if not self.is_empty else \
            np.full(self.points.shape[1], np.nan)

    @property
    def upper(self) -> np.ndarray:
        return self.points[self.accepted].max(axis=0) if not self.is_empty else \
            np.full(self.points.shape[1], np.nan)

    def endpoints(self) -> dict[str, tuple[float, float]]:
        return {n: (float(lo), float(hi)) for n, lo, hi in zip(self.names, self.lower, self.upper)}

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.points, columns=list(self.names))
        df["Q"] = self.q
        df["accepted"] = self.accepted
        return df

    def summary(self) -> dict:
        return {"endpoints": {k: list(v) for k, v in self.endpoints().items()},
                "cutoff": self.cutoff, "q_min": self.q_min, "kappa": self.kappa, "n": self.n,
                "n_grid": int(self.points.shape[0]), "n_accepted": int(self.accepted.sum()),
                "n_excluded_obs": self.n_excluded, "n_cubes": self.n_cubes,
                "n_empty_cubes": self.n_empty_cubes}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def cutoff_value(q_min: float, n: int, kappa: float = 1.0) -> float:
    """Level-set cutoff ``min Q + kappa log(n) / n``."""
    if kappa < 0:
        raise ConfigError("kappa must be nonnegative")
    return float(q_min + kappa * np.log(n) / n)


def estimate_identified_set(data: MomentData, model: ModelSpec, grid: BetaGrid,
                            cubes: InstrumentalFunctions, kappa: float = 1.0) -> IdentifiedSet:
    """Evaluate the criterion on every grid point and keep the near-minimizers.

    The minimizer always satisfies the cutoff, so the set is never empty.
    """
    if grid.model != model:
        raise ConfigError("grid was built for a different model")
    pts = grid.points()
    q = criterion_batch(pts, data, model, cubes)
    q_min = float(q.min())
    c = cutoff_value(q_min, data.n, kappa)
    names = model.names
    return IdentifiedSet(pts, q, q <= c, c, q_min, kappa, data.n, names, data.n_excluded,
                         cubes.n_empty, cubes.n_cubes)


def estimate_from_sample(sample, model: ModelSpec, grid: BetaGrid, mode: str = "Z", *,
                         cube_count: int = 50, cells_per_dim: int = 4, kappa: float = 1.0,
                         min_cell_count: int = 10, X=None, names=()) -> IdentifiedSet:
    """Convenience wrapper: envelopes, hypercubes and the grid search in one call."""
    from .moments import moment_data
    data = moment_data(sample, mode, cells_per_dim=cells_per_dim, min_cell_count=min_cell_count,
                       X=X, names=names)
    cubes = build_hypercubes(sample, cube_count, mode)
    return estimate_identified_set(data, model, grid, cubes, kappa)


# --------------------------------------------------------------------------
# Monte Carlo metrics

@dataclass(frozen=True)
class MCReport:
    """Per-estimator, per-coordinate rMSE and MAD against the true coefficients."""

    rmse: dict[str, np.ndarray]
    mad: dict[str, np.ndarray]
    n_success: dict[str, int]
    n_failed: dict[str, int]
    names: tuple[str, ...]
    replications: int

    def table(self) -> pd.DataFrame:
        rows = []
        for est in self.rmse:
            for j, name in enumerate(self.names):
                rows.append({"estimator": est, "coefficient": name,
                             "rmse": float(self.rmse[est][j]), "mad": float(self.mad[est][j]),
                             "successes": self.n_success[est], "failures": self.n_failed[est]})
        return pd.DataFrame(rows)


def mc_metrics(outputs: Mapping[str, Sequence], beta0, names: Sequence[str] | None = None,
               coords: Sequence[int] | None = None) -> MCReport:
    """rMSE and MAD per coordinate from replication outputs.

    ``outputs[estimator]`` is a list with one coefficient vector per
    replication, ``None`` marking a failed replication.  Failures are
    excluded and counted.
    """
    beta0 = np.asarray(beta0, dtype=float)
    coords = list(range(beta0.size)) if coords is None else list(coords)
    names = tuple(names) if names is not None else tuple(f"beta{k}" for k in coords)
    rmse, mad, ok, bad = {}, {}, {}, {}
    reps = 0
    for est, vals in outputs.items():
        vals = list(vals)
        reps = max(reps, len(vals))
        good = [np.asarray(v, dtype=float) for v in vals
                if v is not None and np.all(np.isfinite(np.asarray(v, dtype=float)[coords]))]
        ok[est] = len(good)
        bad[est] = len(vals) - len(good)
        if not good:
            raise EstimationError(f"all replications failed for estimator {est!r}")
        dev = np.stack(good)[:, coords] - beta0[coords]
        rmse[est] = np.sqrt(np.mean(dev ** 2, axis=0))
        mad[est] = np.median(np.abs(dev), axis=0)
    return MCReport(rmse, mad, ok, bad, names, reps)
