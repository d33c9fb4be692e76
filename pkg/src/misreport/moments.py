"""Conditional moment inequalities and the hypercube criterion.

Each bound on ``p*(x)`` becomes a pair of moment functions whose conditional
expectations are nonnegative at the true coefficients.  Nuisance envelopes
(the min/max reported probabilities over an instrument) are plug-in cell
frequencies, computed once per sample and held fixed while ``beta`` varies.
Indicator functions of hypercubes in the conditioning space turn the
conditional restrictions into finitely many unconditional ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .data import (DEFAULT_MIN_CELL_COUNT, Binning, Sample, envelopes_w, envelopes_z,
                   equal_mass_cuts, estimate_cond_prob, make_binning)
from .errors import BudgetExceededError, ConfigError, DataError

SIGMA_FLOOR = 1e-6
LINKS = ("normal", "logistic", "cauchy")


@dataclass(frozen=True)
class LinkFunction:
    """Known error distribution ``F_eps`` for the parametric model."""

    variant: str = "normal"
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.variant not in LINKS:
            raise ConfigError(f"unknown link {self.variant!r}; expected one of {LINKS}")
        if not self.scale > 0:
            raise ConfigError("link scale must be positive")

    @classmethod
    def normal(cls) -> "LinkFunction":
        return cls("normal")

    @classmethod
    def logistic(cls) -> "LinkFunction":
        return cls("logistic")

    @classmethod
    def cauchy(cls, location: float = 0.0, scale: float = 0.5) -> "LinkFunction":
        return cls("cauchy", location, scale)

    def cdf(self, v):
        u = (np.asarray(v, dtype=float) - self.location) / self.scale
        if self.variant == "normal":
            return special.ndtr(u)
        if self.variant == "logistic":
            return special.expit(u)
        return 0.5 + np.arctan(u) / np.pi

    def dist(self):
        """Matching frozen ``scipy.stats`` distribution (for sampling)."""
        if self.variant == "normal":
            return stats.norm(self.location, self.scale)
        if self.variant == "logistic":
            return stats.logistic(self.location, self.scale)
        return stats.cauchy(self.location, self.scale)


@dataclass(frozen=True)
class ModelSpec:
    """Index model ``Y* = 1{X'beta >= eps}`` over a ``dim``-vector of coefficients.

    ``norm_index`` pins one coordinate at ``norm_value`` (scale
    normalization); the remaining coordinates are free and searched over.
    """

    dim: int
    kind: str = "semiparametric"
    link: LinkFunction | None = None
    norm_index: int | None = 0
    norm_value: float = 1.0
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("parametric", "semiparametric"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "parametric" and self.link is None:
            object.__setattr__(self, "link", LinkFunction())
        if self.dim < 1:
            raise ConfigError("coefficient dimension must be positive")
        if self.norm_index is not None:
            if not 0 <= self.norm_index < self.dim:
                raise ConfigError("normalization index outside coefficient dimension")
            if self.norm_value == 0:
                raise ConfigError("normalized coefficient must be nonzero")
        elif self.kind == "semiparametric":
            raise ConfigError("semiparametric models need a scale normalization")
        names = tuple(self.names) or tuple(f"beta{k}" for k in range(self.dim))
        if len(names) != self.dim:
            raise ConfigError("coefficient names do not match dimension")
        object.__setattr__(self, "names", names)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.dim) if k != self.norm_index)

    def full_beta(self, free_values) -> np.ndarray:
        """Embed free coordinates (last axis) into full coefficient vectors."""
        v = np.asarray(free_values, dtype=float)
        out = np.empty(v.shape[:-1] + (self.dim,))
        out[..., list(self.free)] = v
        if self.norm_index is not None:
            out[..., self.norm_index] = self.norm_value
        return out


def design_matrix(sample: Sample, intercept: bool = True, include_z: bool = True):
    """Regressors ``[1, x_tilde..., z]`` and their names.

    The instrument z enters the index when it is numeric; W never does
    (it only moves misreporting).
    """
    cols = []
    names = []
    if intercept:
        cols.append(np.ones(sample.n))
        names.append("const")
    cols.extend(sample.x.T)
    names.extend(sample.x_names)
    if include_z and sample.has_z:
        if sample.z.dtype.kind not in "iufb":
            raise DataError("instrument z must be numeric to enter the index")
        cols.append(sample.z.astype(float))
        names.append("z")
    return np.column_stack(cols), tuple(names)


# --------------------------------------------------------------------------
# moment functions on plain arrays

def g_parametric(y, f, p_lo, p_hi):
    """``(y - F p_hi, F + p_lo (1 - F) - y)`` with ``F = F_eps(x'beta)``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    return np.stack([y - f * p_hi, f + p_lo * (1.0 - f) - y], axis=-1)


def g_semiparametric(y, index, p_lo, p_hi):
    """Sign-preserving transforms of the parametric pair for ``eps`` with median zero.

    Only the sign of ``x'beta`` relative to zero matters, so each bound is
    compared with one half and weighted by the index on its side.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(index, dtype=float)
    g1 = v * (v >= 0) * (y - 0.5 * p_hi)
    g2 = v * (v <= 0) * (y - 0.5 * p_lo - 0.5)
    return np.stack([g1, g2], axis=-1)


@dataclass(frozen=True, eq=False)
class MomentData:
    """Observations with their frozen nuisance envelopes.

    ``keep`` marks observations whose envelope cell is defined; the rest are
    excluded from every moment and counted in ``n_excluded``.
    """

    y: np.ndarray
    X: np.ndarray
    p_lo: np.ndarray
    p_hi: np.ndarray
    keep: np.ndarray
    mode: str
    names: tuple[str, ...] = ()
    binning: Binning | None = None

    @property
    def n(self) -> int:
        return int(self.keep.sum())

    @property
    def n_excluded(self) -> int:
        return int((~self.keep).sum())

    def subset(self):
        k = self.keep
        return self.y[k], self.X[k], self.p_lo[k], self.p_hi[k]


def moment_data(sample: Sample, mode: str, *, binning: Binning | None = None,
                cells_per_dim: int = 4, min_cell_count: int = DEFAULT_MIN_CELL_COUNT,
                X: np.ndarray | None = None, names: tuple[str, ...] = (),
                intercept: bool = True) -> MomentData:
    """Attach plug-in envelopes to every observation.

    ``mode='Z'`` uses ``min/max_z p(x_tilde, z)``; ``mode='W'`` uses the
    running envelopes ``p_W(x, w)`` over ``w' <= w`` in the declared order.
    """
    if mode not in ("Z", "W"):
        raise ConfigError("moment mode must be 'Z' or 'W'")
    binning = binning or make_binning(sample, cells_per_dim)
    table = estimate_cond_prob(sample, binning, min_cell_count)
    cells = binning.assign(sample.x)
    if mode == "Z":
        env = envelopes_z(table)
        lo, hi = env.lower[cells], env.upper[cells]
        ok = env.defined[cells]
        # the observation's own (cell, z) must also be estimable
        _, _, inc = table.p_xz()
        ok = ok & inc[cells, sample.z_index, 0]
    else:
        env = envelopes_w(table)
        zi = sample.z_index if sample.z_index is not None else np.zeros(sample.n, np.intp)
        lo = env.lower[cells, zi, sample.w_index]
        hi = env.upper[cells, zi, sample.w_index]
        _, _, inc = table.p_xw()
        ok = inc[cells, zi, sample.w_index]
    if X is None:
        X, names = design_matrix(sample, intercept=intercept, include_z=(mode == "Z"))
    return MomentData(sample.y.astype(float), np.asarray(X, dtype=float), np.nan_to_num(lo),
                      np.nan_to_num(hi), np.asarray(ok), mode, tuple(names), binning)


def moment_parametric(data: MomentData, beta, link: LinkFunction) -> np.ndarray:
    """``[n_kept, 2]`` parametric moment pair at ``beta``."""
    y, X, lo, hi = data.subset()
    return g_parametric(y, link.cdf(X @ np.asarray(beta, dtype=float)), lo, hi)


def moment_semiparametric(data: MomentData, beta) -> np.ndarray:
    """``[n_kept, 2]`` semiparametric moment pair at ``beta``."""
    y, X, lo, hi = data.subset()
    return g_semiparametric(y, X @ np.asarray(beta, dtype=float), lo, hi)


# --------------------------------------------------------------------------
# hypercubes

@dataclass(frozen=True, eq=False)
class InstrumentalFunctions:
    """Partition of the conditioning space into axis-aligned hypercubes.

    ``cube`` gives each observation's cube id; the family is a partition, so
    every observation lies in exactly one cube.
    """

    cube: np.ndarray
    n_cubes: int
    counts: np.ndarray
    intervals_per_dim: int
    n_discrete: int
    target: int
    cuts: tuple[np.ndarray, ...] = ()

    @property
    def n_empty(self) -> int:
        return int((self.counts == 0).sum())


def _is_discrete(col: np.ndarray, max_levels: int) -> bool:
    return np.unique(col).size <= max_levels


def build_hypercubes(sample: Sample, count: int, mode: str = "Z",
                     max_discrete_levels: int = 2) -> InstrumentalFunctions:
    """Equal-mass intervals on continuous covariates crossed with discrete levels.

    The discrete part is every instrument level combination (z for Z mode,
    z and w for W mode) together with covariates taking at most
    ``max_discrete_levels`` values.  With ``K`` discrete cells and ``d``
    continuous covariates, each continuous axis gets
    ``m = floor((count / K) ** (1/d))`` intervals, so the family never
    exceeds ``count``.
    """
    if mode not in ("Z", "W"):
        raise ConfigError("hypercube mode must be 'Z' or 'W'")
    keys = []
    if sample.has_z:
        keys.append(np.asarray(sample.z_index))
    if mode == "W":
        if not sample.has_w:
            raise DataError("W-mode hypercubes need a W instrument")
        keys.append(np.asarray(sample.w_index))
    cont = []
    for j in range(sample.d):
        col = sample.x[:, j]
        if _is_discrete(col, max_discrete_levels):
            keys.append(np.searchsorted(np.unique(col), col))
        else:
            cont.append(col)
    n_disc = 1
    for k in keys:
        n_disc *= int(k.max()) + 1
    if count < n_disc:
        raise ConfigError(f"hypercube count {count} below the {n_disc} discrete categories")
    d = len(cont)
    m = int(np.floor((count / n_disc) ** (1.0 / d) + 1e-9)) if d else 1
    cuts = tuple(equal_mass_cuts(col, m) for col in cont)
    parts = [np.searchsorted(c, col, side="right") for c, col in zip(cuts, cont)]
    sizes = [c.size + 1 for c in cuts]
    for k in keys:
        parts.append(k)
        sizes.append(int(k.max()) + 1)
    if parts:
        cube = np.ravel_multi_index(parts, sizes).astype(np.intp)
        n_cubes = int(np.prod(sizes))
    else:
        cube = np.zeros(sample.n, dtype=np.intp)
        n_cubes = 1
    counts = np.bincount(cube, minlength=n_cubes)
    return InstrumentalFunctions(cube, n_cubes, counts, m, n_disc, int(count), cuts)


def hypercube_count_for(n: int, mapping: dict[int, int] | None = None) -> int:
    """Configured cube count for sample size ``n`` (nearest key from below)."""
    mapping = mapping or {500: 30, 1000: 40, 2000: 50}
    keys = sorted(mapping)
    eligible = [k for k in keys if k <= n]
    return mapping[eligible[-1] if eligible else keys[0]]


# --------------------------------------------------------------------------
# criterion

def criterion_from_moments(g: np.ndarray, cube: np.ndarray, n_cubes: int):
    """``Q`` from moment values ``g[n, 2]`` (or ``g[n, G, 2]`` for G parameters).

    Returns ``(Q, m_bar, sigma)``.  Means and standard deviations are over all
    kept observations of ``g * 1{cube j}`` (population-style, ``ddof=0``).
    """
    g = np.asarray(g, dtype=float)
    single = g.ndim == 2
    if single:
        g = g[:, None, :]
    n = g.shape[0]
    onehot = np.zeros((n_cubes, n))
    onehot[cube, np.arange(n)] = 1.0
    flat = g.reshape(n, -1)
    s1 = onehot @ flat
    s2 = onehot @ (flat * flat)
    m_bar = (s1 / n).reshape(n_cubes, *g.shape[1:])
    var = np.maximum(s2 / n - (s1 / n) ** 2, 0.0).reshape(m_bar.shape)
    sigma = np.maximum(np.sqrt(var), SIGMA_FLOOR)
    nonempty = np.bincount(cube, minlength=n_cubes) > 0
    viol = np.maximum(-m_bar / sigma, 0.0) ** 2
    q = viol[nonempty].sum(axis=(0, 2))
    if single:
        return float(q[0]), m_bar[:, 0], sigma[:, 0]
    return q, m_bar, sigma


def _moments_batch(data: MomentData, betas: np.ndarray, model: ModelSpec) -> np.ndarray:
    y, X, lo, hi = data.subset()
    index = X @ betas.T  # [n, G]
    yy, ll, hh = y[:, None], lo[:, None], hi[:, None]
    if model.kind == "parametric":
        return g_parametric(yy, model.link.cdf(index), ll, hh)
    return g_semiparametric(yy, index, ll, hh)


def criterion(beta, data: MomentData, model: ModelSpec, cubes: InstrumentalFunctions) -> float:
    """Sum of squared standardized negative cube moments at one ``beta``."""
    return float(criterion_batch(np.atleast_2d(beta), data, model, cubes)[0])


def criterion_batch(betas, data: MomentData, model: ModelSpec, cubes: InstrumentalFunctions,
                    chunk_cells: int = 4_000_000) -> np.ndarray:
    """``Q`` at every row of ``betas`` (full coefficient vectors)."""
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if betas.shape[1] != data.X.shape[1]:
        raise ConfigError(f"beta has {betas.shape[1]} coordinates, design has {data.X.shape[1]}")
    cube = cubes.cube[data.keep]
    if data.n == 0:
        raise DataError("no observation has defined envelopes")
    step = max(1, chunk_cells // max(data.n, 1))
    out = np.empty(betas.shape[0])
    for s in range(0, betas.shape[0], step):
        g = _moments_batch(data, betas[s:s + step], model)
        out[s:s + step] = criterion_from_moments(g, cube, cubes.n_cubes)[0]
    return out


@dataclass(frozen=True)
class CriterionSummary:
    """Bookkeeping for one criterion setup: exclusions and empty cubes."""

    n_used: int
    n_excluded: int
    n_cubes: int
    n_empty_cubes: int
    notes: tuple[str, ...] = field(default=())
