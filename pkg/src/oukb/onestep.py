"""One-step MLE-process: preliminary moment estimate on a short learning
interval, then a single Newton-type correction evolving in time.

Construction on observations over [0, T] with learning time
tau = floor(T^delta), delta in (1/2, 1):

1. theta*_tau: scalar-case MME from R1 (or the (R1, R2) inversion in the
   (a, f) case) on the unit increments of [0, tau].
2. M(theta*, tau), Mdot(theta*, tau): quadrature reconstruction from the
   stored learning path with zero values at time 0.
3. M, Mdot advanced over (tau, T] with the same dX.
4. The estimator process

       theta_t = theta*_tau + I(theta*_tau)^{-1} S(t) / (t - tau),
       S(t) = int_tau^t Mdot / sigma^2 [dX - M ds]   (Ito sums),

   with Fisher information frozen at theta*_tau.  The recurrent variant
   divides by (t - tau + eps*) instead; on the grid it is integrated in the
   exactly telescoping form, so with eps* = 0 it reproduces the integral
   variant to rounding.

A grid likelihood maximizer and Bayes estimator over a fixed parameter grid
are provided as reference implementations (`grid_mle_and_bayes`); they are
expensive by design and exist to benchmark the one-step process against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateInformationError, DomainError, InsufficientDataError
from .kalman import initial_values_at_tau, stationary_filter_with_derivative
from .model import ModelSpec, derived_quantities, fisher_matrix, fisher_scalar
from .moments import MmeResult, mme_ab, mme_af, mme_scalar, r_statistics
from .simulate import Trajectory, unit_increments

__all__ = [
    "LearningConfig",
    "EstimatorPath",
    "preliminary_estimate",
    "onestep_process",
    "eta_process",
    "grid_mle_and_bayes",
    "estimator_path_to_csv",
]

_MIN_SCALAR_INFO = 1e-12
_MAX_MATRIX_COND = 1e12


@dataclass(frozen=True)
class LearningConfig:
    """Learning-interval layout: tau = floor(T^delta), delta in (1/2, 1).

    ``epsilon_star`` regularizes the recurrent-form denominator near tau;
    the integral form ignores it.
    """

    delta: float = 0.6
    epsilon_star: float = 0.5

    def __post_init__(self):
        if not 0.5 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (1/2, 1), got {self.delta}")
        if self.epsilon_star < 0.0:
            raise DomainError(f"epsilon_star must be >= 0, got {self.epsilon_star}")

    def tau(self, horizon: float) -> int:
        t = int(math.floor(horizon**self.delta))
        if t < 2:
            raise InsufficientDataError(
                f"horizon {horizon} gives tau={t} < 2; too short for the preliminary MME"
            )
        if t >= horizon:
            raise DomainError(f"tau={t} must be smaller than the horizon {horizon}")
        return t


@dataclass(frozen=True)
class EstimatorPath:
    """The one-step estimator process over (tau, T].

    ``times``/``theta_star_path`` hold the thinned output grid (every
    ``thin`` time units); ``dense_times``/``dense_path`` keep the full
    integration grid for downstream consumers such as the adaptive filter.
    ``theta_star_path`` has shape ``(n,)`` or ``(n, 2)``.
    """

    preliminary: MmeResult
    tau: float
    dt: float
    times: np.ndarray
    theta_star_path: np.ndarray
    fisher_used: float | np.ndarray
    dense_times: np.ndarray
    dense_path: np.ndarray

    def at_time(self, t: float) -> float | np.ndarray:
        """Dense-path value at grid time t (nearest grid point)."""
        k = int(round((t - self.dense_times[0]) / self.dt))
        if k < 0 or k >= self.dense_times.size:
            raise DomainError(f"t={t} outside the estimator path range")
        return self.dense_path[k]


def preliminary_estimate(traj: Trajectory, spec: ModelSpec, tau: int) -> MmeResult:
    """Case-appropriate MME from the unit increments of [0, tau]."""
    stats = r_statistics(unit_increments(traj, upto=tau))
    if spec.case == "AF":
        return mme_af(spec, stats)
    if spec.case == "AB":
        return mme_ab(spec, stats)
    return mme_scalar(spec, stats)


def _frozen_information(spec: ModelSpec, theta):
    if spec.dim == 1:
        info = fisher_scalar(spec, theta)
        if not info > _MIN_SCALAR_INFO:
            raise DegenerateInformationError(
                f"Fisher information {info} at preliminary estimate {theta!r} is degenerate"
            )
        return info
    info = fisher_matrix(spec, theta)
    if np.linalg.cond(info) > _MAX_MATRIX_COND:
        raise DegenerateInformationError(
            f"Fisher matrix at preliminary estimate {theta!r} has condition number "
            f"{np.linalg.cond(info):.3g}"
        )
    return info


def onestep_process(
    traj: Trajectory,
    spec: ModelSpec,
    cfg: LearningConfig,
    form: str = "integral",
    thin: float = 0.1,
) -> EstimatorPath:
    """Build the one-step estimator process from a trajectory.

    ``form`` selects the denominator: ``"integral"`` uses (t - tau),
    ``"recurrent"`` uses (t - tau + eps*).  The underlying integration
    always runs at the trajectory step; only the emitted path is thinned.
    """
    if form not in ("integral", "recurrent"):
        raise DomainError(f"unknown form {form!r}")
    tau = cfg.tau(traj.horizon)
    dt = traj.dt
    i_tau = int(round(tau / dt))

    prelim = preliminary_estimate(traj, spec, tau)
    theta_p = prelim.theta_star
    info = _frozen_information(spec, theta_p)

    m_tau, mdot_tau = initial_values_at_tau(traj.x[: i_tau + 1], spec, theta_p, tau, dt)
    sf = stationary_filter_with_derivative(
        traj.x[i_tau:], spec, theta_p, m_tau, mdot_tau, dt, t_start=tau
    )

    dx = np.diff(traj.x[i_tau:])
    s2 = spec.sigma**2
    m = sf.big_m[:-1]
    resid = dx - m * dt
    if spec.dim == 1:
        score = np.cumsum(sf.big_m_dot[:-1] * resid) / s2
        correction = score / info
    else:
        drive = sf.big_m_dot[:-1, :] * resid[:, None]
        score = np.cumsum(drive, axis=0) / s2
        correction = np.linalg.solve(info, score.T).T

    n_out = dx.size
    t_rel = (np.arange(1, n_out + 1)) * dt  # t - tau on the dense grid
    denom = t_rel if form == "integral" else t_rel + cfg.epsilon_star
    if spec.dim == 1:
        dense = theta_p + correction / denom
    else:
        dense = np.asarray(theta_p)[None, :] + correction / denom[:, None]
    dense_times = tau + t_rel

    stride = max(int(round(thin / dt)), 1)
    sel = np.arange(stride - 1, n_out, stride)
    return EstimatorPath(
        preliminary=prelim,
        tau=float(tau),
        dt=dt,
        times=dense_times[sel],
        theta_star_path=dense[sel],
        fisher_used=info,
        dense_times=dense_times,
        dense_path=dense,
    )


def eta_process(path: EstimatorPath, theta0, spec: ModelSpec, v_grid, horizon: float) -> np.ndarray:
    """Normalized estimation-error process at the requested v points:

        eta(v) = v sqrt(T I(theta0)) (theta_{vT} - theta0)

    (scalar parameter only; this is the quantity whose limit is a standard
    Wiener process in v).
    """
    if spec.dim != 1:
        raise DomainError("eta_process is defined for scalar parameters")
    eps_t = path.tau / horizon
    v_grid = np.atleast_1d(np.asarray(v_grid, float))
    if np.any(v_grid <= eps_t) or np.any(v_grid > 1.0 + 1e-12):
        raise DomainError(
            f"v grid must lie in (tau/T, 1] = ({eps_t:.4g}, 1], got {v_grid!r}"
        )
    info0 = fisher_scalar(spec, theta0)
    out = np.empty(v_grid.size)
    for i, v in enumerate(v_grid):
        out[i] = v * math.sqrt(horizon * info0) * (path.at_time(v * horizon) - theta0)
    return out


def _parabolic_refine(grid: np.ndarray, values: np.ndarray) -> float:
    """Vertex of the parabola through the top grid point and its neighbors."""
    k = int(np.argmax(values))
    if k == 0 or k == grid.size - 1:
        return float(grid[k])
    y0, y1, y2 = values[k - 1], values[k], values[k + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0.0:
        return float(grid[k])
    shift = 0.5 * (y0 - y2) / denom
    step = grid[k + 1] - grid[k]
    return float(grid[k] + shift * step)


def _bayes_from_loglik(grid: np.ndarray, loglik: np.ndarray, prior: np.ndarray) -> float:
    """Posterior mean under trapezoid quadrature, overflow-safe."""
    w = np.exp(loglik - np.max(loglik)) * prior
    qw = np.ones_like(grid)
    qw[0] = qw[-1] = 0.5  # trapezoid weights on a uniform grid
    denom = np.sum(w * qw)
    if denom <= 0.0 or not np.isfinite(denom):
        raise DegenerateInformationError("likelihood vanished numerically on the whole grid")
    return float(np.sum(grid * w * qw) / denom)


def grid_mle_and_bayes(
    traj: Trajectory,
    spec: ModelSpec,
    theta_grid: np.ndarray,
    prior_density=None,
):
    """Reference grid MLE and Bayes estimator for a scalar parameter.

    For every grid theta the stationary filter M(theta, .) is run from
    M(theta, 0) = 0 and the log likelihood ratio

        log L(theta) = int M dX / sigma^2 - int M^2 ds / (2 sigma^2)

    accumulated with Ito and trapezoid sums.  Returns ``(mle, bayes,
    loglik)`` where the MLE is the grid argmax refined by a parabolic fit
    through the top three points and the Bayes point is the posterior mean
    under the supplied prior (uniform by default).
    """
    theta_grid = np.asarray(theta_grid, float)
    if theta_grid.size < 50:
        raise DomainError(f"theta grid needs at least 50 points, got {theta_grid.size}")
    if spec.dim != 1:
        raise DomainError("grid_mle_and_bayes handles scalar parameters")
    dx = traj.dx()
    dt = traj.dt
    s2 = spec.sigma**2
    loglik = np.empty(theta_grid.size)
    for i, th in enumerate(theta_grid):
        dq = derived_quantities(spec, th)
        decay = 1.0 - dq.r * dt
        m_rest, _ = lfilter([1.0], [1.0, -decay], dq.big_gamma * dx, zi=np.array([0.0]))
        m = np.concatenate(([0.0], m_rest))
        ito = np.dot(m[:-1], dx)
        leb = np.trapezoid(m * m, dx=dt)
        loglik[i] = ito / s2 - leb / (2.0 * s2)
    if not np.any(np.isfinite(loglik)):
        raise DegenerateInformationError("all grid log likelihoods are non-finite")
    prior = (
        np.ones_like(theta_grid)
        if prior_density is None
        else np.asarray([prior_density(th) for th in theta_grid], float)
    )
    mle = _parabolic_refine(theta_grid, loglik)
    bayes = _bayes_from_loglik(theta_grid, loglik, prior)
    return mle, bayes, loglik


def estimator_path_to_csv(path: EstimatorPath, out) -> None:
    """Write ``t,theta_star[,theta_star_2]`` rows (thinned grid)."""
    th = path.theta_star_path
    if th.ndim == 1:
        data = np.column_stack([path.times, th])
        header = "t,theta_star"
    else:
        data = np.column_stack([path.times, th[:, 0], th[:, 1]])
        header = "t,theta_star,theta_star_2"
    np.savetxt(out, data, delimiter=",", header=header, comments="", fmt="%.17g")
