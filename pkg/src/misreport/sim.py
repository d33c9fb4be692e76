"""Simulation designs, exact population tables and the Monte Carlo driver.

Two designs are the simulation setups used for comparison: instrument Z shifting
the true outcome, and instrument W shifting only false positives.  Two more
designs support verification.  ``ZW`` carries both instruments at once, and
``W_violating`` makes misreporting non-monotone in w so that the testable
implication fails.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .data import Binning, CondProbTable, Latent, Sample, envelopes_w, envelopes_z
from .errors import ConfigError, MisreportError
from .has import fit_has
from .moments import (LinkFunction, ModelSpec, build_hypercubes, design_matrix, g_parametric,
                      g_semiparametric, hypercube_count_for, moment_data)
from .setest import BetaGrid, estimate_identified_set, mc_metrics

log = logging.getLogger(__name__)

DESIGNS = ("Z", "W", "ZW", "W_violating")
ERRORS = ("normal", "cauchy")
Z_SUPPORT = (-1.0, -0.5, 0.0, 0.5, 1.0)
W_SUPPORT = (1, 2, 3, 4, 5)
DEFAULT_BETA = {"Z": (1.0, 1.5, -1.5), "W": (1.0, 1.5), "ZW": (1.0, 1.5, -1.5),
                "W_violating": (-0.85, 0.2)}
# non-monotone false-positive rates by w for the violating design
VIOLATING_ALPHA0 = (0.0, 0.6, 0.175)


@dataclass(frozen=True)
class DgpConfig:
    design: str = "Z"
    n: int = 2000
    error: str = "normal"
    seed: int = 0
    beta0: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ConfigError(f"unknown design {self.design!r}; expected one of {DESIGNS}")
        if self.error not in ERRORS:
            raise ConfigError(f"unknown error law {self.error!r}; expected one of {ERRORS}")
        if int(self.n) < 1:
            raise ConfigError("sample size must be at least 1")
        beta = DEFAULT_BETA[self.design] if self.beta0 is None else tuple(map(float, self.beta0))
        if len(beta) != len(DEFAULT_BETA[self.design]):
            raise ConfigError(f"design {self.design} takes {len(DEFAULT_BETA[self.design])} coefficients")
        object.__setattr__(self, "beta0", beta)

    @property
    def link(self) -> LinkFunction:
        return LinkFunction.normal() if self.error == "normal" else LinkFunction.cauchy(0.0, 0.5)

    @property
    def has_z(self) -> bool:
        return self.design in ("Z", "ZW")

    @property
    def w_support(self) -> tuple | None:
        return {"W": W_SUPPORT, "ZW": (1, 2), "W_violating": (1, 2, 3)}.get(self.design)

    @property
    def z_support(self) -> tuple | None:
        return Z_SUPPORT if self.has_z else None

    def alpha1(self, xt, w=None):
        """False-negative rate ``P(M1 = 0 | x, w)``."""
        xt = np.asarray(xt, dtype=float)
        if self.design == "W_violating":
            return np.zeros_like(xt)
        return 0.1 - 0.1 * xt

    def alpha0(self, xt, w=None):
        """False-positive rate ``P(M0 = 0 | x, w)``."""
        xt = np.asarray(xt, dtype=float)
        if self.design == "Z":
            return 0.3 + 0.1 * xt
        w = np.asarray(w, dtype=float)
        if self.design == "W_violating":
            table = np.asarray(VIOLATING_ALPHA0)
            return np.broadcast_to(table[w.astype(int) - 1], np.broadcast(xt, w).shape).astype(float)
        return np.broadcast_to(1.0 / (1.0 + 0.3 * w ** 2), np.broadcast(xt, w).shape).astype(float)

    def index(self, xt, z=None):
        b = self.beta0
        v = b[0] + b[1] * np.asarray(xt, dtype=float)
        if self.has_z:
            v = v + b[2] * np.asarray(z, dtype=float)
        return v

    def p_star(self, xt, z=None):
        """True choice probability ``F(x'beta0)``."""
        return self.link.cdf(self.index(xt, z))

    def reported(self, xt, z=None, w=None):
        a0 = self.alpha0(xt, w)
        a1 = self.alpha1(xt, w)
        ps = self.p_star(xt, z)
        return a0 + (1.0 - a0 - a1) * ps


def simulate(config: DgpConfig) -> Sample:
    """One sample with latent truth retained."""
    rng = np.random.default_rng(config.seed)
    n = int(config.n)
    xt = rng.uniform(-1.0, 1.0, n)
    z = rng.choice(np.asarray(config.z_support), n) if config.has_z else None
    w = rng.choice(np.asarray(config.w_support), n) if config.w_support else None
    eps = config.link.dist().rvs(size=n, random_state=rng)
    y_star = (config.index(xt, z) >= eps).astype(int)
    m1 = (rng.uniform(size=n) >= config.alpha1(xt, w)).astype(int)
    m0 = (rng.uniform(size=n) >= config.alpha0(xt, w)).astype(int)
    y = m1 * y_star + (1 - m0) * (1 - y_star)
    return Sample(y=y, x=xt[:, None], z=z, w=w, w_levels=config.w_support,
                  x_names=("x",), latent=Latent(y_star, m0, m1))


def dgp_z(config: DgpConfig) -> Sample:
    if config.design != "Z":
        raise ConfigError("dgp_z needs the Z design")
    return simulate(config)


def dgp_w(config: DgpConfig) -> Sample:
    if config.design != "W":
        raise ConfigError("dgp_w needs the W design")
    return simulate(config)


# --------------------------------------------------------------------------
# population tables

@dataclass(frozen=True, eq=False)
class PopulationTable:
    """Exact cell probabilities with the true ``p*`` per ``(cell, z)``."""

    table: CondProbTable
    p_star: np.ndarray
    config: DgpConfig


def uniform_binning(k: int, low: float = -1.0, high: float = 1.0) -> Binning:
    """Equal-width (hence equal-mass under the uniform law) cells on ``[low, high]``."""
    cuts = np.linspace(low, high, k + 1)[1:-1]
    return Binning((cuts,), (low,), (high,), (False,))


def population_table(config: DgpConfig, cells: int = 4, nodes: int = 200) -> PopulationTable:
    """Cell-averaged reported and true probabilities by Gauss-Legendre quadrature.

    ``x_tilde`` is uniform, so the cell average is the plain integral over
    the cell divided by its width.  With 200 nodes per cell the integrands
    (smooth cdfs) are resolved far below 1e-6.
    """
    binning = uniform_binning(cells)
    edges = np.linspace(-1.0, 1.0, cells + 1)
    t, wts = np.polynomial.legendre.leggauss(nodes)
    zs = config.z_support or (None,)
    ws = config.w_support or (None,)
    prob = np.empty((cells, len(zs), len(ws)))
    pstar = np.empty((cells, len(zs)))
    for c in range(cells):
        a, b = edges[c], edges[c + 1]
        x = 0.5 * (b - a) * t + 0.5 * (a + b)
        q = wts / 2.0  # weights averaging over the cell
        for i, z in enumerate(zs):
            pstar[c, i] = q @ config.p_star(x, z)
            for j, w in enumerate(ws):
                prob[c, i, j] = q @ config.reported(x, z, w)
    weight = np.full(prob.shape, 1.0 / prob.size)
    table = CondProbTable(prob, weight, 0.0, tuple(config.z_support or ()),
                          config.w_support, binning)
    return PopulationTable(table, pstar, config)


def population_points(config: DgpConfig, xs) -> PopulationTable:
    """Population table with one cell per covariate value in ``xs``."""
    xs = np.asarray(xs, dtype=float)
    zs = config.z_support or (None,)
    ws = config.w_support or (None,)
    prob = np.empty((xs.size, len(zs), len(ws)))
    pstar = np.empty((xs.size, len(zs)))
    for i, z in enumerate(zs):
        pstar[:, i] = config.p_star(xs, z)
        for j, w in enumerate(ws):
            prob[:, i, j] = config.reported(xs, z, w)
    table = CondProbTable(prob, np.ones_like(prob), 0.0, tuple(config.z_support or ()),
                          config.w_support, None)
    return PopulationTable(table, pstar, config)


def population_moments(config: DgpConfig, xs, mode: str, beta=None) -> dict[str, np.ndarray]:
    """Conditional expectations of both moment pairs at point cells.

    The moment functions are linear in ``y``, so ``E[g | x]`` is ``g``
    evaluated at ``y = p(x)`` with exact pointwise envelopes.  Returns arrays
    ``[cell, z, w, 2]`` (``w`` axis of length one in Z mode) keyed by model
    kind.
    """
    xs = np.asarray(xs, dtype=float)
    beta = config.beta0 if beta is None else tuple(beta)
    pt = population_points(config, xs)
    t = pt.table
    zs = np.asarray(config.z_support if config.has_z else [0.0], dtype=float)
    cfg = replace(config, beta0=beta)
    index = cfg.index(xs[:, None], zs[None, :])[:, :, None]
    if mode == "Z":
        if not config.has_z:
            raise ConfigError("Z-mode moments need a design with instrument Z")
        p = t.p_xz()[0]
        env = envelopes_z(t)
        lo, hi = env.lower[:, None, None], env.upper[:, None, None]
    elif mode == "W":
        if not config.w_support:
            raise ConfigError("W-mode moments need a design with instrument W")
        p = t.p_xw()[0]
        env = envelopes_w(t)
        lo, hi = env.lower, env.upper
    else:
        raise ConfigError("mode must be 'Z' or 'W'")
    f = config.link.cdf(index)
    return {"parametric": g_parametric(p, f, lo, hi),
            "semiparametric": g_semiparametric(p, index, lo, hi)}


def applicable_assumptions(config: DgpConfig, mode: str, resolution: int = 201) -> list:
    """Assumption sets the design's misreporting rates satisfy in ``mode``.

    Rates are scanned on a fine ``x_tilde`` grid at every w.  Known caps for
    the bounded restriction are the largest rates rounded up to two decimals.
    """
    from .bounds import AssumptionSet
    xt = np.linspace(-1.0, 1.0, resolution)
    ws = np.asarray(config.w_support or (1,), dtype=float)
    xx, ww = np.meshgrid(xt, ws, indexing="ij")
    a0 = config.alpha0(xx, ww)
    a1 = config.alpha1(xx, ww)
    out = [AssumptionSet(mode)]
    if mode == "ZW":
        return out
    if np.all(a0 == 0):
        out.append(AssumptionSet.one_sided(mode, True))
    if np.all(a1 == 0):
        out.append(AssumptionSet.one_sided(mode, False))
    # adding 0.0 turns a rounded -0.0 into 0.0
    cap0 = float(np.clip(np.ceil(a0.max() * 100 - 1e-9) / 100, 0.0, 1.0)) + 0.0
    cap1 = float(np.clip(np.ceil(a1.max() * 100 - 1e-9) / 100, 0.0, 1.0)) + 0.0
    if cap0 + cap1 < 1.0:
        out.append(AssumptionSet.bounded(mode, cap0, cap1))
    if np.all(a0 <= a1 + 1e-12):
        out.append(AssumptionSet.monotone(mode, True))
    if np.all(a1 <= a0 + 1e-12):
        out.append(AssumptionSet.monotone(mode, False))
    return out


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class MCSettings:
    """Everything a Monte Carlo scenario needs beyond the DGP."""

    replications: int = 100
    seed: int = 12345
    half_width: float = 1.0
    step: float = 0.05
    kappa: float = 1.0
    cells_per_dim: int = 4
    min_cell_count: int = 10
    cube_counts: dict = field(default_factory=lambda: {500: 30, 1000: 40, 2000: 50})
    has_starts: int = 5
    run_has: bool = True


def coefficient_names(design: str) -> tuple[str, ...]:
    # 1-based labels: beta1 is the (normalized) intercept
    return tuple(f"beta{k + 1}" for k in range(len(DEFAULT_BETA[design])))


def replicate(config: DgpConfig, settings: MCSettings):
    """One replication: set endpoints and the constant-rate MLE coefficients."""
    sample = simulate(config)
    mode = "Z" if config.design in ("Z",) else "W"
    names = coefficient_names(config.design)
    model = ModelSpec(len(config.beta0), "semiparametric", norm_index=0, norm_value=1.0, names=names)
    grid = BetaGrid.around(model, config.beta0, settings.half_width, settings.step)
    data = moment_data(sample, mode, cells_per_dim=settings.cells_per_dim,
                       min_cell_count=settings.min_cell_count)
    cubes = build_hypercubes(sample, hypercube_count_for(config.n, settings.cube_counts), mode)
    ident = estimate_identified_set(data, model, grid, cubes, settings.kappa)
    out = {"set_lower": ident.lower, "set_upper": ident.upper}
    if settings.run_has:
        X, _ = design_matrix(sample, include_z=config.has_z)
        est = fit_has(X, sample.y, LinkFunction.normal(), n_starts=settings.has_starts,
                      seed=config.seed)
        out["has"] = est.beta
    return out


def _replicate_safe(config: DgpConfig, settings: MCSettings, r: int) -> dict:
    try:
        return replicate(config, settings)
    except (MisreportError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.warning("replication %d of %s/%s/n=%d failed: %s", r, config.design, config.error,
                    config.n, exc)
        return {}


def run_monte_carlo(scenarios, settings: MCSettings = MCSettings(), workers: int = 1) -> pd.DataFrame:
    """Replicate each ``(design, error, n)`` scenario and tabulate rMSE/MAD.

    Each replication gets its own seed from a ``SeedSequence`` keyed by the
    scenario position and replication number, so results do not depend on
    execution order or on ``workers`` (processes used for replications).
    Failed replications are logged, excluded and counted.
    """
    rows = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for s_idx, (design, error, n) in enumerate(scenarios):
            base = DgpConfig(design, int(n), error)
            seeds = np.random.SeedSequence([settings.seed, s_idx]).generate_state(
                settings.replications)
            cfgs = [replace(base, seed=int(sd)) for sd in seeds]
            t0 = time.time()
            idx = range(len(cfgs))
            if pool is None:
                results = [_replicate_safe(c, settings, r) for r, c in zip(idx, cfgs)]
            else:
                results = list(pool.map(_replicate_safe, cfgs, [settings] * len(cfgs), idx))
            keys = ["set_lower", "set_upper"] + (["has"] if settings.run_has else [])
            outputs = {k: [res.get(k) for res in results] for k in keys}
            names = coefficient_names(design)
            free = list(range(1, len(names)))
            rep = mc_metrics(outputs, base.beta0, [names[k] for k in free], free)
            df = rep.table()
            df.insert(0, "n", int(n))
            df.insert(0, "error", error)
            df.insert(0, "design", design)
            df["seconds"] = time.time() - t0
            rows.append(df)
            log.info("scenario %s/%s/n=%d done in %.1fs", design, error, n, time.time() - t0)
    finally:
        if pool is not None:
            pool.shutdown()
    return pd.concat(rows, ignore_index=True)


def format_mc_table(df: pd.DataFrame) -> str:
    """Fixed-width text tables of rMSE and MAD.

    One block per design and coefficient; within it one row per ``(n, error)``
    with rMSE and MAD for the lower endpoint, upper endpoint and the MLE.
    """
    lines = []
    for (design, coef), block in df.groupby(["design", "coefficient"], sort=False):
        lines.append(f"Design {design}, coefficient {coef}")
        head = f"{'n':>6} {'error':<8}" + "".join(
            f"{lab + ' rMSE':>13}{lab + ' MAD':>12}" for lab in ("lower", "upper", "HAS"))
        lines.append(head)
        lines.append("-" * len(head))
        for (n, err), g in block.groupby(["n", "error"], sort=False):
            vals = {r.estimator: r for r in g.itertuples()}
            cells = ""
            for est in ("set_lower", "set_upper", "has"):
                r = vals.get(est)
                cells += f"{r.rmse:13.3f}{r.mad:12.3f}" if r is not None else f"{'':>13}{'':>12}"
            lines.append(f"{n:>6} {err:<8}" + cells)
        lines.append("")
    return "\n".join(lines)
