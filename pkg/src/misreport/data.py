"""Sample containers, covariate binning and reported-probability tables.

Everything downstream works on dense arrays indexed ``[cell, z, w]``:
``cell`` is the covariate cell from a :class:`Binning`, ``z`` and ``w`` are
positions in the sorted instrument supports.  A missing instrument is a
length-one axis, so the same code path serves Z-only, W-only and two
instrument tables.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, InsufficientDataError, UnknownCategoryError

DEFAULT_MIN_CELL_COUNT = 10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Latent:
    """Simulation-only truth: true outcome and reporting indicators."""

    y_star: np.ndarray
    m0: np.ndarray
    m1: np.ndarray


@dataclass(frozen=True, eq=False)
class Sample:
    """Observed reported outcomes, covariates and optional instruments.

    ``w_levels`` is the declared ascending order of the W support; it is
    substantive (misreporting is assumed non-increasing along it), so it is
    never inferred from non-numeric labels.
    """

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray | None = None
    w: np.ndarray | None = None
    w_levels: tuple | None = None
    x_names: tuple[str, ...] = ()
    latent: Latent | None = None
    z_levels: tuple = field(init=False)
    z_index: np.ndarray | None = field(init=False)
    w_index: np.ndarray | None = field(init=False)

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1 or y.size == 0:
            raise DataError("sample must contain at least one observation")
        if not np.all(np.isin(y, (0, 1))):
            raise DataError("non-binary outcome: y must take values in {0, 1}")
        n = y.size
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(n, -1) if x.size else np.empty((n, 0))
        if x.shape[0] != n:
            raise DataError(f"covariates have {x.shape[0]} rows, outcome has {n}")
        if not np.all(np.isfinite(x)):
            raise DataError("covariates contain missing or non-finite values")
        object.__setattr__(self, "y", _frozen(y.astype(np.int8)))
        object.__setattr__(self, "x", _frozen(x))
        names = tuple(self.x_names) or tuple(f"x{k + 1}" for k in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DataError("x_names length does not match covariate dimension")
        object.__setattr__(self, "x_names", names)

        z_levels: tuple = ()
        z_index = None
        if self.z is not None:
            z = np.asarray(self.z)
            if z.shape != (n,):
                raise DataError("instrument z must have one value per observation")
            if z.dtype.kind == "f" and not np.all(np.isfinite(z)):
                raise DataError("instrument z contains missing values")
            z_levels = tuple(np.unique(z).tolist())
            z_index = np.searchsorted(np.asarray(z_levels), z)
            object.__setattr__(self, "z", _frozen(z))
            z_index = _frozen(z_index)
        object.__setattr__(self, "z_levels", z_levels)
        object.__setattr__(self, "z_index", z_index)

        w_index = None
        if self.w is not None:
            w = np.asarray(self.w)
            if w.shape != (n,):
                raise DataError("instrument w must have one value per observation")
            levels = self.w_levels
            if levels is None:
                if w.dtype.kind not in "iuf":
                    raise DataError("non-numeric W labels need an explicit order")
                levels = tuple(np.unique(w).tolist())
            levels = tuple(levels)
            if len(set(levels)) != len(levels):
                raise DataError("duplicate W category labels in declared order")
            lookup = {lab: k for k, lab in enumerate(levels)}
            try:
                w_index = np.array([lookup[v] for v in w.tolist()], dtype=np.intp)
            except KeyError as exc:
                raise UnknownCategoryError(f"W value {exc.args[0]!r} not in declared order") from None
            object.__setattr__(self, "w", _frozen(w))
            object.__setattr__(self, "w_levels", levels)
            w_index = _frozen(w_index)
        elif self.w_levels is not None:
            raise DataError("w_levels given without w values")
        object.__setattr__(self, "w_index", w_index)

        if self.latent is not None:
            lat = Latent(*(_frozen(np.asarray(a).astype(np.int8)) for a in
                           (self.latent.y_star, self.latent.m0, self.latent.m1)))
            implied = lat.m1 * lat.y_star + (1 - lat.m0) * (1 - lat.y_star)
            if lat.y_star.shape != (n,) or not np.array_equal(implied, self.y):
                raise DataError("latent fields inconsistent with reported outcome")
            object.__setattr__(self, "latent", lat)

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    @property
    def has_z(self) -> bool:
        return self.z is not None

    @property
    def has_w(self) -> bool:
        return self.w is not None

    @property
    def n_z(self) -> int:
        return max(len(self.z_levels), 1)

    @property
    def n_w(self) -> int:
        return len(self.w_levels) if self.w_levels is not None else 1


def build_sample(records: Iterable[Sequence], *, w_order: Sequence | None = None,
                 x_names: Sequence[str] = ()) -> Sample:
    """Validate row records ``(y, x_tilde[, z[, w]])`` into a :class:`Sample`.

    ``x_tilde`` may be a scalar, a sequence, or ``None``/empty for no
    covariates.  ``z`` may be ``None`` to omit the instrument; it must then be
    ``None`` on every row.
    """
    rows = list(records)
    if not rows:
        raise DataError("no records supplied")
    ys, xs, zs, ws = [], [], [], []
    width = None
    for i, rec in enumerate(rows):
        rec = tuple(rec)
        if len(rec) < 2 or len(rec) > 4:
            raise DataError(f"record {i} must have 2 to 4 fields")
        y, xt = rec[0], rec[1]
        if y not in (0, 1, True, False):
            raise DataError(f"non-binary outcome {y!r} in record {i}")
        xt = [] if xt is None else np.atleast_1d(np.asarray(xt, dtype=float)).tolist()
        if width is None:
            width = len(xt)
        elif len(xt) != width:
            raise DataError(f"ragged covariate rows: record {i} has {len(xt)} values, expected {width}")
        ys.append(int(y))
        xs.append(xt)
        zs.append(rec[2] if len(rec) > 2 else None)
        ws.append(rec[3] if len(rec) > 3 else None)

    def column(vals, name):
        present = [v is not None for v in vals]
        if not any(present):
            return None
        if not all(present):
            raise DataError(f"instrument {name} missing on some rows")
        return np.asarray(vals)

    x = np.asarray(xs, dtype=float).reshape(len(rows), width)
    return Sample(y=np.asarray(ys), x=x, z=column(zs, "z"), w=column(ws, "w"),
                  w_levels=None if w_order is None else tuple(w_order),
                  x_names=tuple(x_names))


def equal_mass_cuts(values: np.ndarray, k: int) -> np.ndarray:
    """Interior cut points splitting ``values`` into ``k`` equal-mass intervals.

    Discrete data with at most ``k`` distinct values get midpoint cuts, so
    every value is its own interval.  Ties can merge quantiles, in which case
    fewer than ``k - 1`` cuts come back.
    """
    v = np.asarray(values, dtype=float)
    uniq = np.unique(v)
    if k <= 1 or uniq.size <= 1:
        return np.empty(0)
    if uniq.size <= k:
        return (uniq[:-1] + uniq[1:]) / 2.0
    cuts = np.unique(np.quantile(v, np.arange(1, k) / k))
    # a cut at the minimum would leave the first interval empty (ties go right)
    return cuts[cuts > uniq[0]]


@dataclass(frozen=True, eq=False)
class Binning:
    """Axis-aligned partition of covariate space.

    A value ``v`` in dimension ``j`` falls in interval
    ``searchsorted(cuts[j], v, side="right")``.
    """

    cuts: tuple[np.ndarray, ...]
    lows: tuple[float, ...] = ()
    highs: tuple[float, ...] = ()
    collapsed: tuple[bool, ...] = ()

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.size + 1 for c in self.cuts)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape, dtype=int)) if self.cuts else 1

    @property
    def any_collapsed(self) -> bool:
        return any(self.collapsed)

    def assign(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        if not self.cuts:
            return np.zeros(n, dtype=np.intp)
        x = x.reshape(n, -1)
        if x.shape[1] != len(self.cuts):
            raise DataError("covariate dimension does not match binning")
        idx = [np.searchsorted(c, x[:, j], side="right") for j, c in enumerate(self.cuts)]
        return np.ravel_multi_index(idx, self.shape).astype(np.intp)

    def cell_ranges(self, cell: int) -> list[tuple[float, float]]:
        """Per-dimension ``(low, high)`` of a cell, ends taken from the data range."""
        if not self.cuts:
            return []
        pos = np.unravel_index(int(cell), self.shape)
        out = []
        for j, (c, k) in enumerate(zip(self.cuts, pos)):
            edges = np.concatenate(([self.lows[j]], c, [self.highs[j]]))
            out.append((float(edges[k]), float(edges[k + 1])))
        return out


def make_binning(sample: Sample | np.ndarray, cells_per_dim: int) -> Binning:
    """Equal-mass (quantile) cells per covariate dimension."""
    if int(cells_per_dim) < 1:
        raise DataError("cells_per_dim must be a positive integer")
    x = sample.x if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    cuts, lows, highs, collapsed = [], [], [], []
    for j in range(x.shape[1]):
        col = x[:, j]
        c = equal_mass_cuts(col, int(cells_per_dim))
        degenerate = np.unique(col).size == 1 and cells_per_dim > 1
        if degenerate:
            warnings.warn(f"covariate {j} is constant; using a single cell", stacklevel=2)
        cuts.append(_frozen(c))
        lows.append(float(col.min()))
        highs.append(float(col.max()))
        collapsed.append(bool(degenerate))
    return Binning(tuple(cuts), tuple(lows), tuple(highs), tuple(collapsed))


@dataclass(frozen=True, eq=False)
class CondProbTable:
    """Reported-choice frequencies on the ``[cell, z, w]`` grid.

    ``weight`` holds observation counts for estimated tables (or probability
    masses for population tables).  A view at any granularity marks a cell
    included when its aggregated weight reaches ``min_cell_count``;
    excluded cells carry NaN probabilities.
    """

    prob: np.ndarray
    weight: np.ndarray
    min_cell_count: float = DEFAULT_MIN_CELL_COUNT
    z_levels: tuple = ()
    w_levels: tuple | None = None
    binning: Binning | None = None

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        weight = np.asarray(self.weight, dtype=float)
        if prob.ndim != 3 or prob.shape != weight.shape:
            raise DataError("prob and weight must share a (cell, z, w) shape")
        ok = weight > 0
        if np.any((prob[ok] < 0) | (prob[ok] > 1)):
            raise DataError("probabilities must lie in [0, 1]")
        prob = np.where(ok, prob, np.nan)
        object.__setattr__(self, "prob", _frozen(prob))
        object.__setattr__(self, "weight", _frozen(weight))

    @classmethod
    def from_probabilities(cls, prob, weight=None, *, z_levels=(), w_levels=None,
                           binning=None) -> "CondProbTable":
        """Table built from known probabilities (population or hand-made)."""
        prob = np.asarray(prob, dtype=float)
        prob = prob.reshape(prob.shape + (1,) * (3 - prob.ndim))
        weight = np.ones_like(prob) if weight is None else np.broadcast_to(weight, prob.shape)
        return cls(prob, weight, 0.0, tuple(z_levels), None if w_levels is None else tuple(w_levels),
                   binning)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.prob.shape

    @property
    def n(self) -> float:
        return float(self.weight.sum())

    @property
    def has_z(self) -> bool:
        return len(self.z_levels) > 0

    @property
    def has_w(self) -> bool:
        return self.w_levels is not None

    def _view(self, axes: tuple[int, ...]):
        w = self.weight.sum(axis=axes, keepdims=True) if axes else self.weight
        ones = np.nansum(self.prob * self.weight, axis=axes, keepdims=True) if axes \
            else np.nan_to_num(self.prob * self.weight)
        inc = (w > 0) & (w >= self.min_cell_count)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(inc, ones / w, np.nan)
        return p, w, inc

    def p_xw(self):
        """``(p, weight, included)`` on the full ``[cell, z, w]`` grid."""
        return self._view(())

    def p_xz(self):
        """Marginal over w, shape ``[cell, z, 1]``."""
        return self._view((2,))

    def p_x(self):
        """Marginal over z and w, shape ``[cell, 1, 1]``."""
        return self._view((1, 2))

    def w_position(self, label) -> int:
        if self.w_levels is None:
            raise UnknownCategoryError("table has no W instrument")
        try:
            return self.w_levels.index(label)
        except ValueError:
            raise UnknownCategoryError(f"unknown W category {label!r}") from None


def estimate_cond_prob(sample: Sample, binning: Binning,
                       min_cell_count: int = DEFAULT_MIN_CELL_COUNT) -> CondProbTable:
    """Within-cell frequency of ``Y = 1`` for every ``(cell, z, w)``."""
    if int(min_cell_count) < 1:
        raise DataError("min_cell_count must be a positive integer")
    cells = binning.assign(sample.x)
    shape = (binning.n_cells, sample.n_z, sample.n_w)
    zi = sample.z_index if sample.z_index is not None else np.zeros(sample.n, np.intp)
    wi = sample.w_index if sample.w_index is not None else np.zeros(sample.n, np.intp)
    flat = np.ravel_multi_index((cells, zi, wi), shape)
    size = int(np.prod(shape))
    counts = np.bincount(flat, minlength=size).reshape(shape).astype(float)
    ones = np.bincount(flat, weights=sample.y.astype(float), minlength=size).reshape(shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        prob = np.where(counts > 0, ones / np.maximum(counts, 1), np.nan)
    table = CondProbTable(prob, counts, float(min_cell_count), sample.z_levels,
                          sample.w_levels, binning)
    if not np.any(table.p_xw()[2]):
        raise InsufficientDataError(
            f"insufficient data: no cell reaches min_cell_count={min_cell_count}")
    return table


@dataclass(frozen=True, eq=False)
class EnvelopeZ:
    """Per covariate cell: min and max reported probability over z."""

    lower: np.ndarray
    upper: np.ndarray
    defined: np.ndarray


@dataclass(frozen=True, eq=False)
class EnvelopeW:
    """Running min/max of ``p_W(x, w)`` over ``w' <= w`` on the ``[cell, z, w]`` grid."""

    lower: np.ndarray
    upper: np.ndarray
    defined: np.ndarray
    w_levels: tuple

    def at(self, cell: int, z_pos: int, w_label) -> tuple[float, float]:
        try:
            k = self.w_levels.index(w_label)
        except ValueError:
            raise UnknownCategoryError(f"unknown W category {w_label!r}") from None
        return float(self.lower[cell, z_pos, k]), float(self.upper[cell, z_pos, k])


def envelopes_z(table: CondProbTable) -> EnvelopeZ:
    if not table.has_z:
        raise DataError("envelopes over z need a Z instrument")
    p, _, inc = table.p_xz()
    p = p[:, :, 0]
    defined = inc[:, :, 0].any(axis=1)
    lo = np.full(p.shape[0], np.nan)
    hi = np.full(p.shape[0], np.nan)
    lo[defined] = np.nanmin(p[defined], axis=1)
    hi[defined] = np.nanmax(p[defined], axis=1)
    return EnvelopeZ(_frozen(lo), _frozen(hi), _frozen(defined))


def envelopes_w(table: CondProbTable) -> EnvelopeW:
    if not table.has_w:
        raise DataError("running envelopes need a W instrument with declared order")
    p, _, _ = table.p_xw()
    # fmin/fmax skip NaN, so excluded w' do not break the running extrema
    lo = np.fmin.accumulate(p, axis=2)
    hi = np.fmax.accumulate(p, axis=2)
    return EnvelopeW(_frozen(lo), _frozen(hi), _frozen(~np.isnan(lo)), table.w_levels)
