"""Convolution-rate classification, its quadrature oracle, and exponent fits.

The central object is the integral

    I(alpha, beta, t) = int_1^{t-1} s^-alpha (t-s)^-beta ds,

whose large-t behaviour falls into three classes depending on
delta = max(alpha, beta):  t^-gamma for delta > 1, t^-gamma log t for
delta = 1, and t^{1-alpha-beta} for delta < 1, with gamma = min(alpha, beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class RateClass:
    """Decay class t^(-exponent) (log t if has_log); negative exponent = growth."""

    exponent: float
    has_log: bool
    theta: float          # sup of admissible rates in the corollary form

    @property
    def t_power(self):
        """The literal power of t, i.e. -exponent."""
        return -self.exponent


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log v = log(amplitude) + exponent*log t (+ log-term).

    `exponent` is the literal power of t (negative means decay).  `residual`
    is the rms misfit in log-log space.  Degenerate data (values at zero
    within floor) set `degenerate` and leave the other fields at 0/None.
    """

    exponent: float
    amplitude: float
    log_coefficient: float | None
    residual: float
    window: tuple
    degenerate: bool = False


def convolution_rate_class(alpha, beta):
    """Classify the large-t behaviour of I(alpha, beta, t) (three rows)."""
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    gamma = min(alpha, beta)
    delta = max(alpha, beta)
    theta = min(alpha, beta, alpha + beta - 1.0)
    if delta > 1.0:
        return RateClass(exponent=gamma, has_log=False, theta=theta)
    if delta == 1.0:
        return RateClass(exponent=gamma, has_log=True, theta=theta)
    return RateClass(exponent=alpha + beta - 1.0, has_log=False, theta=theta)


def convolution_integral(alpha, beta, t):
    """Adaptive quadrature of I(alpha, beta, t) for t >= 2.

    The interval is split at t/2 (the integrand peaks at both ends); the two
    halves are computed as mirror images, which makes the alpha/beta symmetry
    exact by construction.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    if t < 2:
        raise DomainError("t must be >= 2")
    if t == 2:
        return 0.0

    def half(x, y):
        val, _ = quad(lambda s: s ** (-x) * (t - s) ** (-y), 1.0, t / 2.0,
                      epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    return half(alpha, beta) + half(beta, alpha)


def fit_rate(samples, allow_log=False, degenerate_floor=1e-14):
    """Fit a power law (optionally with a log factor) to (t, value) samples."""
    pts = [(float(t), float(v)) for t, v in samples]
    if len(pts) < 8:
        raise ConfigurationError("need at least 8 samples for a rate fit")
    ts = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.any(ts <= 0):
        raise DomainError("sample times must be positive")
    window = (float(ts.min()), float(ts.max()))
    if np.log10(window[1] / window[0]) < 0.9:
        raise ConfigurationError("fit window must span at least one decade")
    scale = np.max(np.abs(vs))
    if scale <= degenerate_floor:
        return RateFit(0.0, 0.0, None, 0.0, window, degenerate=True)
    if np.any(vs <= 0):
        raise DomainError("sample values must be positive for a log-log fit")
    lt = np.log(ts)
    lv = np.log(vs)
    cols = [np.ones_like(lt), lt]
    if allow_log:
        if np.any(ts <= 1.0):
            raise DomainError("log-factor fits need t > 1")
        cols.append(np.log(np.log(ts)))
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - lv) ** 2)))
    return RateFit(
        exponent=float(coef[1]),
        amplitude=float(np.exp(coef[0])),
        log_coefficient=float(coef[2]) if allow_log else None,
        residual=resid,
        window=window,
        degenerate=False,
    )


def rate_table(pairs, t_lo=1e2, t_hi=1e5, n_samples=13):
    """Sweep (alpha, beta) pairs: predicted class vs quadrature-fitted exponent.

    Returns one dict per pair with keys alpha, beta, predicted_exponent
    (literal t-power), fitted_exponent, log_flag, residual.
    """
    rows = []
    ts = np.geomspace(t_lo, t_hi, n_samples)
    for alpha, beta in pairs:
        rc = convolution_rate_class(alpha, beta)
        samples = [(t, convolution_integral(alpha, beta, t)) for t in ts]
        fit = fit_rate(samples, allow_log=rc.has_log)
        rows.append({
            "alpha": alpha,
            "beta": beta,
            "predicted_exponent": rc.t_power,
            "fitted_exponent": fit.exponent,
            "log_flag": rc.has_log,
            "residual": fit.residual,
        })
    return rows
