"""Kalman-Bucy filtering at a known parameter point.

The conditional mean m(theta, t) and variance gamma(theta, t) of the hidden
state satisfy

    dm = -(a + gamma f^2 / sigma^2) m dt + (gamma f / sigma^2) dX,
    dgamma/dt = -2 a gamma - gamma^2 f^2 / sigma^2 + b^2.

The variance equation has the closed-form solution used throughout
(`riccati_closed`); it is never advanced by Euler stepping.  The stationary
regime works with M(theta, t) = f(theta) m(theta, t), which obeys
``dM = -r M dt + big_gamma dX`` with constant coefficients, and with its
parameter derivative Mdot, which obeys
``dMdot = -r Mdot dt - r_dot M dt + big_gamma_dot dX``.

Quadrature conventions: integrals against dX use left-point (Ito) sums,
integrals against ds use the trapezoid rule, both on the simulation grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError
from .model import DerivedQuantities, ModelSpec, derived_quantities

__all__ = [
    "FilterPath",
    "StationaryFilterPath",
    "riccati_closed",
    "kb_filter",
    "stationary_filter_with_derivative",
    "initial_values_at_tau",
    "filter_path_to_csv",
    "stationary_path_to_csv",
]


@dataclass(frozen=True)
class FilterPath:
    """Conditional mean and variance on the grid, plus initial values."""

    theta: object
    dt: float
    m: np.ndarray
    gamma: np.ndarray
    m0: float
    gamma0: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m.size) * self.dt


@dataclass(frozen=True)
class StationaryFilterPath:
    """Stationary-regime filter output M and its parameter derivative Mdot.

    ``big_m_dot`` has shape ``(n,)`` in scalar cases and ``(n, 2)`` when the
    parameter has two coordinates (one derivative sequence per coordinate).
    ``t_start`` is the time of the first entry.
    """

    theta: object
    dt: float
    t_start: float
    big_m: np.ndarray
    big_m_dot: np.ndarray
    init_m: float
    init_m_dot: float | np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.big_m.size) * self.dt


def riccati_closed(dq: DerivedQuantities, f: float, sigma: float, gamma0: float, t) -> float | np.ndarray:
    """Closed-form filter variance gamma(theta, t) from gamma(theta, 0) = gamma0.

        gamma(t) = e^{-2 r t} / [ 1/(gamma0 - gamma*) +
                    f^2 (1 - e^{-2 r t}) / (2 r sigma^2) ] + gamma*

    with the fixed point returned exactly when gamma0 == gamma*.  The
    bracket cannot vanish for gamma0 >= 0, so the formula is singularity
    free on the admissible domain.  Accepts scalar or array ``t``.
    """
    if gamma0 < 0.0:
        raise DomainError(f"gamma0 must be >= 0, got {gamma0}")
    t = np.asarray(t, float)
    if np.any(t < 0.0):
        raise DomainError("riccati_closed requires t >= 0")
    gs = dq.gamma_star
    if gamma0 == gs:
        out = np.full_like(t, gs, dtype=float)
        return float(out) if out.ndim == 0 else out
    e = np.exp(-2.0 * dq.r * t)
    bracket = 1.0 / (gamma0 - gs) + f * f * (1.0 - e) / (2.0 * dq.r * sigma**2)
    out = e / bracket + gs
    return float(out) if out.ndim == 0 else out


def _tv_mean_recursion(phi: np.ndarray, u: np.ndarray, y0: float) -> np.ndarray:
    """y_{k+1} = phi_k y_k + u_k with time-varying phi; returns y_0..y_n."""
    out = np.empty(phi.size + 1)
    out[0] = y0
    y = float(y0)
    ofl = out  # local alias; plain Python loop, inputs as lists for speed
    pl = phi.tolist()
    ul = u.tolist()
    for k in range(len(pl)):
        y = pl[k] * y + ul[k]
        ofl[k + 1] = y
    return out


def kb_filter(traj_x: np.ndarray, spec: ModelSpec, theta, m0: float, gamma0: float, dt: float) -> FilterPath:
    """Run the filter for the observation sequence ``traj_x`` (grid values of X).

    The mean is advanced by Euler-Maruyama on its linear equation; the
    variance is evaluated exactly at the grid times via
    :func:`riccati_closed` (never Euler-stepped).
    """
    f, a, b = spec.coefficients(theta)
    dq = derived_quantities(spec, theta)
    x = np.asarray(traj_x, float)
    n = x.size - 1
    gamma = riccati_closed(dq, f, spec.sigma, gamma0, np.arange(n + 1) * dt)
    gamma = np.atleast_1d(gamma)
    dx = np.diff(x)
    s2 = spec.sigma**2
    gain = gamma[:-1] * f / s2
    phi = 1.0 - (a + gamma[:-1] * f * f / s2) * dt
    m = _tv_mean_recursion(phi, gain * dx, m0)
    return FilterPath(theta=theta, dt=dt, m=m, gamma=gamma, m0=m0, gamma0=gamma0)


def stationary_filter_with_derivative(
    traj_x: np.ndarray,
    spec: ModelSpec,
    theta,
    init_m: float,
    init_m_dot,
    dt: float,
    t_start: float = 0.0,
) -> StationaryFilterPath:
    """Advance M and Mdot by Euler-Maruyama with shared dX increments.

    Discrete updates (left-point in M for the Mdot drift):

        M_{k+1}    = M_k (1 - r dt) + big_gamma dX_k
        Mdot_{k+1} = Mdot_k (1 - r dt) - r_dot M_k dt + big_gamma_dot dX_k

    In the two-parameter cases ``init_m_dot`` is a length-2 array and the
    two derivative sequences are driven by the per-coordinate
    ``(r_dot_i, big_gamma_dot_i)``.
    """
    dq = derived_quantities(spec, theta)
    x = np.asarray(traj_x, float)
    dx = np.diff(x)
    decay = 1.0 - dq.r * dt
    coef = np.array([1.0])
    denom = np.array([1.0, -decay])

    m_rest, _ = lfilter(coef, denom, dq.big_gamma * dx, zi=np.array([decay * init_m]))
    big_m = np.concatenate(([init_m], m_rest))

    r_dot = np.atleast_1d(dq.r_dot)
    g_dot = np.atleast_1d(dq.big_gamma_dot)
    init_dot = np.atleast_1d(np.asarray(init_m_dot, float))
    m_prev = big_m[:-1]
    dots = np.empty((big_m.size, r_dot.size))
    for i in range(r_dot.size):
        drive = -r_dot[i] * m_prev * dt + g_dot[i] * dx
        d_rest, _ = lfilter(coef, denom, drive, zi=np.array([decay * init_dot[i]]))
        dots[0, i] = init_dot[i]
        dots[1:, i] = d_rest
    if spec.dim == 1:
        big_m_dot = dots[:, 0]
        init_out: float | np.ndarray = float(init_dot[0])
    else:
        big_m_dot = dots
        init_out = init_dot
    return StationaryFilterPath(
        theta=theta,
        dt=dt,
        t_start=t_start,
        big_m=big_m,
        big_m_dot=big_m_dot,
        init_m=init_m,
        init_m_dot=init_out,
    )


def initial_values_at_tau(
    x_learn: np.ndarray,
    spec: ModelSpec,
    theta_star,
    tau: float,
    dt: float,
    m_init: float = 0.0,
    m_dot_init=0.0,
):
    """Reconstruct M(theta*, tau) and Mdot(theta*, tau) from the stored path
    X on [0, tau].

    With I1 = int_0^tau e^{-r (tau - s)} X_s ds and
    I2 = int_0^tau (tau - s) e^{-r (tau - s)} X_s ds (trapezoid rule):

        M(tau)    = M(0) e^{-r tau} + big_gamma (X_tau - r I1)
        Mdot(tau) = (Mdot(0) - M(0) r_dot tau) e^{-r tau}
                    + big_gamma_dot X_tau
                    - (big_gamma_dot r + big_gamma r_dot) I1
                    + big_gamma r_dot r I2

    The unobservable values at time 0 default to zero; their contribution
    decays like e^{-r tau}.  Two-parameter cases return a scalar M(tau) and
    a length-2 Mdot(tau).
    """
    x = np.asarray(x_learn, float)
    n = x.size - 1
    if n < 1:
        raise DomainError("initial_values_at_tau needs the full path on [0, tau]")
    if abs(n * dt - tau) > 1e-9 * max(1.0, tau):
        raise DomainError(f"path length {n} * dt {dt} does not match tau={tau}")
    dq = derived_quantities(spec, theta_star)
    s = np.arange(n + 1) * dt
    w = np.exp(-dq.r * (tau - s)) * x
    i1 = np.trapezoid(w, dx=dt)
    i2 = np.trapezoid((tau - s) * w, dx=dt)
    x_tau = x[-1]
    decay = np.exp(-dq.r * tau)

    m_tau = m_init * decay + dq.big_gamma * (x_tau - dq.r * i1)

    r_dot = np.atleast_1d(dq.r_dot)
    g_dot = np.atleast_1d(dq.big_gamma_dot)
    d_init = np.atleast_1d(np.asarray(m_dot_init, float)) * np.ones(r_dot.size)
    m_dot_tau = (
        (d_init - m_init * r_dot * tau) * decay
        + g_dot * x_tau
        - (g_dot * dq.r + dq.big_gamma * r_dot) * i1
        + dq.big_gamma * r_dot * dq.r * i2
    )
    if spec.dim == 1:
        return float(m_tau), float(m_dot_tau[0])
    return float(m_tau), m_dot_tau


def filter_path_to_csv(path: FilterPath, out) -> None:
    """Write ``t,m,gamma`` rows at full double precision."""
    np.savetxt(
        out,
        np.column_stack([path.times, path.m, path.gamma]),
        delimiter=",",
        header="t,m,gamma",
        comments="",
        fmt="%.17g",
    )


def stationary_path_to_csv(path: StationaryFilterPath, out) -> None:
    """Write ``t,M,Mdot`` (scalar) or ``t,M,Mdot,Mdot_f`` (two-parameter)."""
    dot = path.big_m_dot if path.big_m_dot.ndim == 2 else path.big_m_dot[:, None]
    header = "t,M,Mdot" if dot.shape[1] == 1 else "t,M,Mdot,Mdot_f"
    np.savetxt(
        out,
        np.column_stack([path.times, path.big_m, dot]),
        delimiter=",",
        header=header,
        comments="",
        fmt="%.17g",
    )
