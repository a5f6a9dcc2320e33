"""Method-of-moments statistics and estimators from unit increments of X.

The statistics are

    R1 = (1/T) sum_{k=1}^{T} (X_k - X_{k-1})^2,
    R2 = (1/T) sum_{k=2}^{T} (X_k - X_{k-1})(X_{k-1} - X_{k-2}),

both normalized by the number of unit increments T.  Their limits are the
moment functions Phi1 and Phi2 of :mod:`oukb.model`; the estimators invert
those limits, clamping to the parameter box instead of failing when the
noisy statistics land outside the admissible range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError
from .model import (
    ModelSpec,
    h_dec,
    h_dec_inv,
    h_inc_inv,
    moment_functions,
)

__all__ = ["MomentStats", "MmeResult", "r_statistics", "mme_scalar", "mme_af", "mme_ab"]


@dataclass(frozen=True)
class MomentStats:
    """Empirical unit-increment moments; ``t_count`` is the number used."""

    r1: float
    r2: float
    t_count: int


@dataclass(frozen=True)
class MmeResult:
    """A moment estimate, its box-clamping flag, and the residual
    ``|R - Phi(theta*)|`` actually achieved (euclidean norm when both
    moments are matched)."""

    theta_star: float | np.ndarray
    clamped: bool
    residual: float


def r_statistics(increments: np.ndarray) -> MomentStats:
    """Mean squared increment and mean lag-1 increment product."""
    d = np.asarray(increments, float)
    t = d.size
    if t < 2:
        raise InsufficientDataError(f"need at least 2 unit increments, got {t}")
    r1 = float(np.mean(d * d))
    r2 = float(np.sum(d[1:] * d[:-1]) / t)
    return MomentStats(r1=r1, r2=r2, t_count=t)


def _clamp(value: float, lo: float, hi: float) -> tuple[float, bool]:
    if value < lo:
        return lo, True
    if value > hi:
        return hi, True
    return value, False


def mme_scalar(spec: ModelSpec, stats: MomentStats) -> MmeResult:
    """Scalar MME by inversion of R1 = Phi1(theta).

    Case F:  f* = sqrt(a^3 (R1 - sigma^2) / (b^2 (e^{-a} - 1 + a)))
    Case B:  the f <-> b mirror of case F
    Case A:  a* = h_dec_inv((R1 - sigma^2) / (f^2 b^2))
    GEN:     argmin over the box of |R1 - Phi1(theta)|, 1000-point grid
             scan refined by golden-section search.

    A non-invertible statistic (for instance R1 <= sigma^2 in cases F/B)
    produces a boundary estimate with ``clamped=True`` rather than an
    exception, so long Monte Carlo runs survive rare bad draws.
    """
    if spec.dim != 1:
        raise DomainError(f"mme_scalar expects a scalar case, got {spec.case}")
    lo, hi = spec.theta_box
    excess = stats.r1 - spec.sigma**2

    if spec.case in ("F", "B"):
        # Phi1 - sigma^2 = theta^2 other^2 h_dec(a), solved for theta.
        a = spec.knowns["a"]
        other = spec.knowns["b"] if spec.case == "F" else spec.knowns["f"]
        if excess <= 0.0:
            est, clamped = lo, True
        else:
            est, clamped = _clamp(float(np.sqrt(excess / (other**2 * h_dec(a)))), lo, hi)
    elif spec.case == "A":
        f, b = spec.knowns["f"], spec.knowns["b"]
        y = excess / (f * f * b * b)
        if y <= 0.0:
            est, clamped = hi, True  # Phi1 decreases to sigma^2 as a grows
        else:
            est, clamped = _clamp(h_dec_inv(y), lo, hi)
    else:  # GEN
        est, clamped = _argmin_scan(spec, stats.r1, lo, hi)

    phi1, _, _ = moment_functions(spec, est)
    return MmeResult(theta_star=float(est), clamped=clamped, residual=abs(stats.r1 - phi1))


def _argmin_scan(spec: ModelSpec, r1: float, lo: float, hi: float, n_grid: int = 1000):
    """Grid scan of |R1 - Phi1| followed by golden-section refinement."""
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([abs(r1 - moment_functions(spec, th)[0]) for th in grid])
    k = int(np.argmin(vals))
    a_br = grid[max(k - 1, 0)]
    b_br = grid[min(k + 1, n_grid - 1)]
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    fun = lambda th: abs(r1 - moment_functions(spec, th)[0])
    x1 = b_br - gr * (b_br - a_br)
    x2 = a_br + gr * (b_br - a_br)
    f1, f2 = fun(x1), fun(x2)
    while b_br - a_br > 1e-12:
        if f1 <= f2:
            b_br, x2, f2 = x2, x1, f1
            x1 = b_br - gr * (b_br - a_br)
            f1 = fun(x1)
        else:
            a_br, x1, f1 = x1, x2, f2
            x2 = a_br + gr * (b_br - a_br)
            f2 = fun(x2)
    est = 0.5 * (a_br + b_br)
    clamped = est <= lo + 1e-12 or est >= hi - 1e-12
    return float(est), bool(clamped)


def _invert_two_moment(stats: MomentStats, known: float, sigma: float, box) -> tuple[np.ndarray, bool]:
    """Shared two-step inversion: a* from the moment ratio, then the free
    amplitude coefficient from Phi2.

        (R1 - sigma^2) / (2 R2) = h_inc(a*)
        amp* = sqrt(2 a*^3 R2) / (known (1 - e^{-a*}))

    The amplitude formula is the exact positive solution of
    Phi2(a*, amp*) = R2; it and the ratio equation reproduce theta exactly
    when fed noiseless moments.
    """
    (lo_a, hi_a), (lo_2, hi_2) = box
    excess = stats.r1 - sigma**2
    clamped = False
    if stats.r2 <= 0.0 or excess <= 0.0 or excess / (2.0 * stats.r2) <= 0.5:
        # ratio at or below the x -> 0+ limit of h_inc: no interior solution
        a_est, clamped = lo_a, True
    else:
        a_est, clamped = _clamp(h_inc_inv(excess / (2.0 * stats.r2)), lo_a, hi_a)
    if stats.r2 > 0.0:
        amp = float(np.sqrt(2.0 * a_est**3 * stats.r2) / (known * (-np.expm1(-a_est))))
        amp, cl2 = _clamp(amp, lo_2, hi_2)
        clamped = clamped or cl2
    else:
        amp, clamped = lo_2, True
    return np.array([a_est, amp]), clamped


def _two_dim_result(spec: ModelSpec, stats: MomentStats, est: np.ndarray, clamped: bool) -> MmeResult:
    phi1, phi2, _ = moment_functions(spec, est)
    residual = float(np.hypot(stats.r1 - phi1, stats.r2 - phi2))
    return MmeResult(theta_star=est, clamped=clamped, residual=residual)


def mme_af(spec: ModelSpec, stats: MomentStats) -> MmeResult:
    """Two-dimensional MME for theta = (a, f) with b known."""
    if spec.case != "AF":
        raise DomainError(f"mme_af expects case AF, got {spec.case}")
    est, clamped = _invert_two_moment(stats, spec.knowns["b"], spec.sigma, spec.theta_box)
    return _two_dim_result(spec, stats, est, clamped)


def mme_ab(spec: ModelSpec, stats: MomentStats) -> MmeResult:
    """Two-dimensional MME for theta = (a, b) with f known (f <-> b mirror
    of :func:`mme_af`; the observation law depends on f and b only through
    their product)."""
    if spec.case != "AB":
        raise DomainError(f"mme_ab expects case AB, got {spec.case}")
    est, clamped = _invert_two_moment(stats, spec.knowns["f"], spec.sigma, spec.theta_box)
    return _two_dim_result(spec, stats, est, clamped)
