"""Random-intercept models with a single grouping factor.

Gaussian responses are fit by maximum likelihood with the variance ratio
profiled out (1-D search); binomial responses use a Laplace approximation
around penalized-IRLS modes. Both expose the fixed intercept and per-level
conditional modes that target encoders consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_LAMBDA_BOUNDS = (math.log(1e-10), math.log(1e10))
LOG_TAU2_BOUNDS = (math.log(1e-8), math.log(1e6))
OUTER_TOL = 1e-9          # log-parameter tolerance for the outer search
INNER_TOL = 1e-10         # objective-change tolerance for inner Newton
OUTER_MAX_ITER = 200
INNER_MAX_ITER = 100
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class NonConvergenceError(RuntimeError):
    """Inner Newton failed to make progress; carries the last iterate."""

    def __init__(self, message, beta0=None, modes=None):
        super().__init__(message)
        self.beta0 = beta0
        self.modes = modes


@dataclass(frozen=True)
class RandomInterceptFit:
    beta0: float
    sigma2: float          # residual variance; NaN for binomial
    tau2: float
    modes: np.ndarray      # conditional mode per level index
    level_index: dict      # level code -> position in modes
    family: str            # "gaussian" | "binomial"
    converged: bool
    n_iter: int

    def encoded_value(self, level_code) -> float:
        """Link-scale encoding beta0 + u_l; beta0 alone for unseen levels."""
        pos = self.level_index.get(level_code)
        if pos is None:
            return self.beta0
        return self.beta0 + float(self.modes[pos])


@dataclass(frozen=True)
class GroupedGaussian:
    """Sufficient statistics of a Gaussian one-factor layout."""

    counts: np.ndarray     # N_l per level
    means: np.ndarray      # level means of y
    ss_within: float       # total within-level sum of squares
    n: int

    @classmethod
    def from_codes(cls, codes: np.ndarray, y: np.ndarray) -> "GroupedGaussian":
        uniq, inv = np.unique(codes, return_inverse=True)
        counts = np.bincount(inv).astype(float)
        sums = np.bincount(inv, weights=y)
        means = sums / counts
        ss_within = float(np.sum((y - means[inv]) ** 2))
        return cls(counts, means, ss_within, len(y)), uniq


def profile_deviance_gaussian(data: GroupedGaussian,
                              lam: float) -> tuple[float, float, float]:
    """-2 log-likelihood at fixed lambda = tau^2/sigma^2, profiled over the
    intercept and the residual variance.

    beta0(lambda) is the precision-weighted mean of level means with weights
    N_l / (1 + lambda N_l); sigma^2(lambda) comes from the profiled residual
    quadratic form.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if data.n < 2:
        raise ValueError("need at least 2 rows")
    w = data.counts / (1.0 + lam * data.counts)
    beta0 = float(np.sum(w * data.means) / np.sum(w))
    quad = data.ss_within + float(np.sum(w * (data.means - beta0) ** 2))
    if quad <= 0.0:
        raise ValueError("degenerate zero-variance layout at lambda=0")
    sigma2 = quad / data.n
    logdet = float(np.sum(np.log1p(lam * data.counts)))
    dev = data.n * math.log(2.0 * math.pi * sigma2) + logdet + data.n
    return dev, beta0, sigma2


def _golden_section(f, lo, hi, tol, max_iter):
    """Golden-section minimization on [lo, hi]; returns (x, n_iter, hit_tol)."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for it in range(max_iter):
        if b - a < tol:
            return (a + b) / 2.0, it, True
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (a + b) / 2.0, max_iter, b - a < tol


def _bracket_minimum(f, lo, hi, n_grid=41):
    """Coarse scan to bracket the minimizer; returns (left, right, edge)."""
    xs = np.linspace(lo, hi, n_grid)
    fs = [f(x) for x in xs]
    k = int(np.argmin(fs))
    if k == 0:
        return xs[0], xs[1], "lower"
    if k == n_grid - 1:
        return xs[-2], xs[-1], "upper"
    return xs[k - 1], xs[k + 1], None


def fit_gaussian_ranint(codes: np.ndarray, y: np.ndarray) -> RandomInterceptFit:
    """Maximum-likelihood Gaussian random-intercept fit.

    Searches log(lambda) by bracketing plus golden section; conditional modes
    follow the BLUP formula u_l = N_l lambda / (1 + N_l lambda) (ybar_l - beta0).
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite target values")
    if len(y) < 2:
        raise ValueError("need at least 2 rows")
    data, uniq = GroupedGaussian.from_codes(np.asarray(codes), y)
    level_index = {int(c): i for i, c in enumerate(uniq)}

    if np.unique(y).size < 2:
        # Degenerate: no variance to partition.
        return RandomInterceptFit(float(y[0]), 0.0, 0.0,
                                  np.zeros(len(uniq)), level_index,
                                  "gaussian", True, 0)

    def dev_at(loglam):
        return profile_deviance_gaussian(data, math.exp(loglam))[0]

    lo, hi = LOG_LAMBDA_BOUNDS
    left, right, edge = _bracket_minimum(dev_at, lo, hi)
    if edge == "lower":
        lam = 0.0
        n_iter = 0
        converged = True
    else:
        loglam, n_iter, converged = _golden_section(
            dev_at, left, right, OUTER_TOL, OUTER_MAX_ITER)
        lam = math.exp(loglam)
    _, beta0, sigma2 = profile_deviance_gaussian(data, lam)
    shrink = data.counts * lam / (1.0 + data.counts * lam)
    modes = shrink * (data.means - beta0)
    tau2 = lam * sigma2
    return RandomInterceptFit(beta0, sigma2, tau2, modes, level_index,
                              "gaussian", converged, n_iter)


# ---------------------------------------------------------------------------
# Binomial family


def _penalized_loglik(y, inv, beta0, u, tau2):
    eta = beta0 + u[inv]
    # log(1 + e^eta) computed stably
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    if tau2 > 0:
        ll -= float(np.sum(u ** 2)) / (2.0 * tau2)
    return ll


def _penalized_modes(y, inv, n_levels, tau2, beta0=0.0, u=None):
    """Maximize the penalized binomial log-likelihood over (beta0, u).

    The Newton system is diagonal plus rank one, solved exactly via the
    Schur complement of the intercept. Steps are halved until the objective
    improves.
    """
    if u is None:
        u = np.zeros(n_levels)
    else:
        u = u.copy()
    obj = -_penalized_loglik(y, inv, beta0, u, tau2)
    n_iter = 0
    for _ in range(INNER_MAX_ITER):
        eta = beta0 + u[inv]
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        resid = y - p
        g_beta = float(np.sum(resid))
        g_u = np.bincount(inv, weights=resid, minlength=n_levels) - u / tau2
        if max(abs(g_beta), float(np.max(np.abs(g_u)))) < 1e-10:
            break
        w_l = np.bincount(inv, weights=w, minlength=n_levels)
        d = w_l + 1.0 / tau2
        a = float(np.sum(w_l))
        # Solve [[a, w_l^T], [w_l, diag(d)]] [db, du] = [g_beta, g_u]
        s = a - float(np.sum(w_l ** 2 / d))
        if s <= 0:
            s = max(s, 1e-12)
        db = (g_beta - float(np.sum(w_l * g_u / d))) / s
        du = (g_u - w_l * db) / d
        step = 1.0
        improved = False
        for _ in range(60):
            cand_b = beta0 + step * db
            cand_u = u + step * du
            cand_obj = -_penalized_loglik(y, inv, cand_b, cand_u, tau2)
            if cand_obj < obj + 1e-14:
                improved = True
                break
            step /= 2.0
        if not improved:
            # Residual-sum gradients scale with sqrt(n) under noise, so the
            # stationarity tolerance must too, or near-converged warm starts
            # stall the line search and spuriously raise.
            stall_tol = 1e-6 * max(1.0, float(np.sqrt(len(y))))
            if max(abs(g_beta), float(np.max(np.abs(g_u)))) < stall_tol:
                break  # stationary up to floating-point noise
            raise NonConvergenceError(
                "penalized IRLS failed to reduce the objective",
                beta0=beta0, modes=u)
        delta = obj - cand_obj
        beta0, u, obj = cand_b, cand_u, cand_obj
        n_iter += 1
        if delta < INNER_TOL:
            break
    return beta0, u, n_iter


def laplace_deviance_binomial(codes: np.ndarray, y: np.ndarray, tau2: float,
                              warm=None):
    """Laplace-approximate -2 log marginal likelihood at fixed tau^2.

    Returns (deviance, beta0, modes array, level codes). tau2 = 0 reduces to
    the intercept-only logistic model.
    """
    y = np.asarray(y, dtype=float)
    uniq, inv = np.unique(np.asarray(codes), return_inverse=True)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("both classes must be present")
    n_levels = len(uniq)
    if tau2 < 0:
        raise ValueError("tau2 must be >= 0")
    if tau2 == 0.0:
        pbar = float(np.mean(y))
        beta0 = math.log(pbar / (1.0 - pbar))
        u = np.zeros(n_levels)
        dev = -2.0 * _penalized_loglik(y, inv, beta0, u, 0.0)
        return dev, beta0, u, uniq
    if warm is not None:
        beta0, u, _ = _penalized_modes(y, inv, n_levels, tau2,
                                       beta0=warm[0], u=warm[1])
    else:
        beta0, u, _ = _penalized_modes(y, inv, n_levels, tau2)
    eta = beta0 + u[inv]
    p = 1.0 / (1.0 + np.exp(-eta))
    h_l = np.bincount(inv, weights=p * (1.0 - p), minlength=n_levels)
    lpen = _penalized_loglik(y, inv, beta0, u, tau2)
    dev = -2.0 * (lpen - 0.5 * float(np.sum(np.log1p(tau2 * h_l))))
    return dev, beta0, u, uniq


def fit_binomial_ranint(codes: np.ndarray, y: np.ndarray) -> RandomInterceptFit:
    """Laplace-ML binomial random-intercept fit.

    Outer golden-section search on log(tau^2), warm-starting the inner Newton
    solver from the previous modes.
    """
    y = np.asarray(y, dtype=float)
    codes = np.asarray(codes)
    uniq = np.unique(codes)
    level_index = {int(c): i for i, c in enumerate(uniq)}
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("both classes must be present")

    warm_state = {"beta0": 0.0, "u": np.zeros(len(uniq))}

    def dev_at(logtau2):
        tau2 = math.exp(logtau2)
        dev, b0, u, _ = laplace_deviance_binomial(
            codes, y, tau2, warm=(warm_state["beta0"], warm_state["u"]))
        warm_state["beta0"], warm_state["u"] = b0, u
        return dev

    lo, hi = LOG_TAU2_BOUNDS
    left, right, edge = _bracket_minimum(dev_at, lo, hi)
    if edge == "lower":
        tau2 = 0.0
        n_iter = 0
        converged = True
    else:
        logtau2, n_iter, converged = _golden_section(
            dev_at, left, right, OUTER_TOL, OUTER_MAX_ITER)
        tau2 = math.exp(logtau2)
    _, beta0, modes, _ = laplace_deviance_binomial(
        codes, y, tau2, warm=(warm_state["beta0"], warm_state["u"]))
    return RandomInterceptFit(beta0, float("nan"), tau2, modes, level_index,
                              "binomial", converged, n_iter)
