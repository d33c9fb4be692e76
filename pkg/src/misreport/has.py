"""Constant-misreporting maximum likelihood baseline.

The reported outcome has probability ``pi = alpha0 + (1 - alpha0 - alpha1) F(x'beta)``
with constant rates.  The fit maximizes the binary log-likelihood by
Nelder-Mead from several starts.  The rates are mapped onto the region
``alpha0 + alpha1 <= 1 - eps`` through a softmax, so the search is
unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import EstimationError, PreconditionError
from .moments import LinkFunction

EPS_SIMPLEX = 1e-6
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class HasEstimate:
    alpha0: float
    alpha1: float
    beta: np.ndarray
    loglik: float
    converged: bool
    n_converged: int
    n_starts: int

    def as_row(self, names) -> dict:
        row = {"alpha0": self.alpha0, "alpha1": self.alpha1, "loglik": self.loglik}
        row.update({n: float(b) for n, b in zip(names, self.beta)})
        return row


def has_loglik(alpha0: float, alpha1: float, beta, X, y, link: LinkFunction | None = None) -> float:
    """Binary log-likelihood of the constant-rate mixture."""
    if not (0.0 <= alpha0 <= 1.0 and 0.0 <= alpha1 <= 1.0):
        raise PreconditionError("misreporting rates must lie in [0, 1]")
    if alpha0 + alpha1 > 1.0 - EPS_SIMPLEX + 1e-15:
        raise PreconditionError("need alpha0 + alpha1 <= 1 - eps")
    return _loglik(alpha0, alpha1, np.asarray(beta, dtype=float), np.asarray(X, dtype=float),
                   np.asarray(y, dtype=float), link or LinkFunction())


def _loglik(a0, a1, beta, X, y, link):
    pi = a0 + (1.0 - a0 - a1) * link.cdf(X @ beta)
    pi = np.clip(pi, PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(np.sum(y * np.log(pi) + (1.0 - y) * np.log1p(-pi)))


def _rates(u0, u1):
    # softmax with a zero reference: both rates positive, sum below 1 - eps
    m = max(u0, u1, 0.0)
    e0, e1, e2 = np.exp(u0 - m), np.exp(u1 - m), np.exp(-m)
    s = e0 + e1 + e2
    scale = 1.0 - EPS_SIMPLEX
    return scale * e0 / s, scale * e1 / s


def _unrates(a0, a1):
    rest = 1.0 - a0 - a1
    return np.log(a0 / rest), np.log(a1 / rest)


def _probit_start(X, y, link):
    def nll(b):
        return -_loglik(0.0, 0.0, b, X, y, link)
    res = optimize.minimize(nll, np.zeros(X.shape[1]), method="BFGS")
    return res.x


def fit_has(X, y, link: LinkFunction | None = None, *, n_starts: int = 5, seed: int = 0,
            maxiter: int = 4000, jitter: float = 0.5) -> HasEstimate:
    """Multi-start Nelder-Mead maximum likelihood.

    The first start is the no-misreporting fit with rates near zero.  Other
    starts perturb its coefficients by ``jitter`` normal noise and draw rates
    uniformly inside the simplex; the seed fixes every start.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise PreconditionError("X must be an (n, k) matrix matching y")
    link = link or LinkFunction()
    rng = np.random.default_rng(seed)
    b0 = _probit_start(X, y, link)
    starts = [np.concatenate([_unrates(0.01, 0.01), b0])]
    for _ in range(n_starts - 1):
        a = rng.dirichlet([1.0, 1.0, 2.0])[:2] * 0.9 + 0.001
        starts.append(np.concatenate([_unrates(*a), b0 + rng.normal(0, jitter, b0.size)]))

    def nll(theta):
        a0, a1 = _rates(theta[0], theta[1])
        return -_loglik(a0, a1, theta[2:], X, y, link)

    best = None
    n_conv = 0
    for s in starts:
        res = optimize.minimize(nll, s, method="Nelder-Mead",
                                options={"maxiter": maxiter, "maxfev": 2 * maxiter,
                                         "xatol": 1e-6, "fatol": 1e-9, "adaptive": True})
        if not np.isfinite(res.fun):
            continue
        n_conv += int(res.success)
        # ties go to the earlier start, which keeps the result deterministic
        if res.success and (best is None or res.fun < best.fun - 1e-12):
            best = res
    if best is None:
        raise EstimationError("no start of the constant-misreporting fit converged")
    a0, a1 = _rates(best.x[0], best.x[1])
    return HasEstimate(float(a0), float(a1), best.x[2:].copy(), float(-best.fun), True,
                       n_conv, len(starts))
