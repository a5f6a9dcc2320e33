"""Model definitions and closed-form derived quantities.

The observation model is the linear partially observed pair

    dX_t = f(theta) * Y_t dt + sigma dW_t,        X_0 = 0,
    dY_t = -a(theta) * Y_t dt + b(theta) dV_t,    Y_0 ~ N(0, b^2 / 2a),

with independent Wiener processes W, V and an unknown parameter theta
restricted to a closed box.  Everything that can be written in closed form
lives here: the effective filter decay rate ``r``, the steady-state filter
variance ``gamma_star``, Fisher informations, the moment functions matched
by the method-of-moments estimators, and the monotone functions whose
inverses those estimators need.

Five named parameterizations are supported (plus a user-supplied one):

========  =====================  =========================
case      unknown theta          known coefficients
========  =====================  =========================
``F``     f = theta              a, b
``A``     a = theta              f, b
``B``     b = theta              f, a
``AF``    (a, f) = theta         b
``AB``    (a, b) = theta         f
``GEN``   scalar, via callables  --
========  =====================  =========================

All functions are pure; nothing here owns mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateInformationError, DomainError, InvalidModelError

__all__ = [
    "ModelSpec",
    "DerivedQuantities",
    "make_spec",
    "derived_quantities",
    "fisher_scalar",
    "fisher_matrix_af",
    "fisher_matrix",
    "moment_functions",
    "moment_function_slope",
    "k11_variance",
    "mme_asymptotic_variance",
    "h_dec",
    "h_dec_prime",
    "h_dec_inv",
    "h_inc",
    "h_inc_inv",
]

_SCALAR_CASES = ("F", "A", "B", "GEN")
_TWO_DIM_CASES = ("AF", "AB")

#: Absolute x-tolerance for the bisection inversions.  Monotonicity of both
#: target functions is strict, so bisection cannot stall.
_BISECT_XTOL = 1e-12


# --------------------------------------------------------------------------
# Specification of a parameterized model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A parameter case, its fixed coefficients, and its parameter box.

    Attributes
    ----------
    case:
        One of ``F, A, B, AF, AB, GEN``.
    sigma:
        Observation noise level, > 0.
    knowns:
        The fixed coefficients among ``f, a, b`` required by the case.
    theta_box:
        Closed box: ``(lo, hi)`` for scalar cases, ``((lo1, hi1), (lo2, hi2))``
        for the two-parameter cases.  The box for an ``a``-coordinate must
        have a strictly positive lower edge.
    coeff:
        ``theta -> (f, a, b)``.
    coeff_dot:
        ``theta -> rows of d(f, a, b)/d theta_i``, shape ``(dim, 3)``.
    coeff_ddot:
        Optional second derivatives, same layout; only needed when a caller
        wants to run smoothness diagnostics on a ``GEN`` model.
    """

    case: str
    sigma: float
    knowns: dict = field(default_factory=dict)
    theta_box: tuple = (0.1, 5.0)
    coeff: Callable = None
    coeff_dot: Callable = None
    coeff_ddot: Callable | None = None

    @property
    def dim(self) -> int:
        return 2 if self.case in _TWO_DIM_CASES else 1

    def box_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper box edges as arrays of length ``dim``."""
        if self.dim == 1:
            lo, hi = self.theta_box
            return np.array([lo], float), np.array([hi], float)
        (l1, h1), (l2, h2) = self.theta_box
        return np.array([l1, l2], float), np.array([h1, h2], float)

    def contains(self, theta) -> bool:
        lo, hi = self.box_arrays()
        th = np.atleast_1d(np.asarray(theta, float))
        return th.size == self.dim and bool(np.all(th >= lo) and np.all(th <= hi))

    def require_in_box(self, theta) -> None:
        th = np.atleast_1d(np.asarray(theta, float))
        if th.size != self.dim:
            raise DomainError(
                f"case {self.case} expects a {self.dim}-dimensional parameter, "
                f"got shape {th.shape}"
            )
        if not self.contains(theta):
            raise DomainError(f"theta={theta!r} outside the closed box {self.theta_box}")

    def coefficients(self, theta) -> tuple[float, float, float]:
        """Validated ``(f, a, b)`` at ``theta``; raises on a degenerate model."""
        self.require_in_box(theta)
        f, a, b = self.coeff(theta)
        if not (a > 0.0) or f == 0.0 or b == 0.0:
            raise InvalidModelError(
                f"coefficients (f={f}, a={a}, b={b}) at theta={theta!r} violate "
                "a > 0, f != 0, b != 0"
            )
        return float(f), float(a), float(b)


def _box_grid(spec: ModelSpec, n: int = 41):
    """Grid of admissible theta values covering the closed box."""
    lo, hi = spec.box_arrays()
    if spec.dim == 1:
        return np.linspace(lo[0], hi[0], n)
    g1 = np.linspace(lo[0], hi[0], n)
    g2 = np.linspace(lo[1], hi[1], n)
    return [np.array([u, v]) for u in g1 for v in g2]


def make_spec(
    case: str,
    *,
    sigma: float,
    theta_box,
    f: float | None = None,
    a: float | None = None,
    b: float | None = None,
    coeff: Callable | None = None,
    coeff_dot: Callable | None = None,
    coeff_ddot: Callable | None = None,
) -> ModelSpec:
    """Build a validated :class:`ModelSpec` for one of the named cases.

    For the named cases the coefficient maps and their derivatives are
    assembled here; ``GEN`` requires explicit ``coeff`` and ``coeff_dot``
    callables.  Positivity of ``a`` and non-vanishing of ``f, b`` are
    checked on a grid over the closed box at construction time.
    """
    if sigma <= 0.0:
        raise InvalidModelError(f"sigma must be > 0, got {sigma}")
    case = case.upper() if case != "GEN" else case
    if case == "GEN":
        if coeff is None or coeff_dot is None:
            raise InvalidModelError("GEN case requires coeff and coeff_dot callables")
        knowns = {}
        cdot = coeff_dot
        _coeff = coeff
    elif case == "F":
        _need(a, "a", case), _need(b, "b", case)
        knowns = {"a": float(a), "b": float(b)}
        _coeff = lambda th: (float(th), knowns["a"], knowns["b"])
        cdot = lambda th: ((1.0, 0.0, 0.0),)
    elif case == "A":
        _need(f, "f", case), _need(b, "b", case)
        knowns = {"f": float(f), "b": float(b)}
        _coeff = lambda th: (knowns["f"], float(th), knowns["b"])
        cdot = lambda th: ((0.0, 1.0, 0.0),)
    elif case == "B":
        _need(f, "f", case), _need(a, "a", case)
        knowns = {"f": float(f), "a": float(a)}
        _coeff = lambda th: (knowns["f"], knowns["a"], float(th))
        cdot = lambda th: ((0.0, 0.0, 1.0),)
    elif case == "AF":
        _need(b, "b", case)
        knowns = {"b": float(b)}
        _coeff = lambda th: (float(th[1]), float(th[0]), knowns["b"])
        cdot = lambda th: ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
    elif case == "AB":
        _need(f, "f", case)
        knowns = {"f": float(f)}
        _coeff = lambda th: (knowns["f"], float(th[0]), float(th[1]))
        cdot = lambda th: ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    else:
        raise InvalidModelError(f"unknown case {case!r}")

    spec = ModelSpec(
        case=case,
        sigma=float(sigma),
        knowns=knowns,
        theta_box=_normalize_box(theta_box, 2 if case in _TWO_DIM_CASES else 1),
        coeff=_coeff,
        coeff_dot=cdot,
        coeff_ddot=coeff_ddot,
    )
    for th in _box_grid(spec, 21):
        spec.coefficients(th)  # raises InvalidModelError on violation
    return spec


def _need(value, name, case):
    if value is None:
        raise InvalidModelError(f"case {case} requires the fixed coefficient {name!r}")


def _normalize_box(box, dim):
    if dim == 1:
        lo, hi = float(box[0]), float(box[1])
        if not lo < hi:
            raise InvalidModelError(f"box bounds must satisfy lo < hi, got {box}")
        return (lo, hi)
    (l1, h1), (l2, h2) = box
    if not (l1 < h1 and l2 < h2):
        raise InvalidModelError(f"box bounds must satisfy lo < hi per coordinate, got {box}")
    if l1 <= 0.0:
        raise InvalidModelError("the a-coordinate box must have a positive lower edge")
    return ((float(l1), float(h1)), (float(l2), float(h2)))


# --------------------------------------------------------------------------
# Derived quantities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DerivedQuantities:
    """Closed-form quantities attached to one parameter point.

    ``r = sqrt(a^2 + f^2 b^2 / sigma^2)`` is the decay rate of the
    stationary filter, ``gamma_star`` the positive root of the stationary
    Riccati equation, ``big_gamma = gamma_star f^2 / sigma^2 = r - a``, and
    ``filter_gain = big_gamma / f`` the steady-state gain on dX.

    Derivative fields are floats in the scalar cases and arrays of length 2
    (one entry per parameter coordinate) in the AF/AB cases.
    """

    f: float
    a: float
    b: float
    sigma: float
    r: float
    gamma_star: float
    big_gamma: float
    filter_gain: float
    r_dot: float | np.ndarray
    big_gamma_dot: float | np.ndarray
    gain_dot: float | np.ndarray


def derived_quantities(spec: ModelSpec, theta) -> DerivedQuantities:
    """Evaluate r, gamma_star, big_gamma, the gain, and their theta-derivatives.

    Derivatives come from the chain rule through ``spec.coeff_dot``:

        r_dot_i  = (a adot_i + (f fdot_i b^2 + f^2 b bdot_i)/sigma^2) / r
        Gdot_i   = r_dot_i - adot_i
        Bdot_i   = Gdot_i / f - big_gamma fdot_i / f^2
    """
    f, a, b = spec.coefficients(theta)
    s2 = spec.sigma**2
    r = math.sqrt(a * a + f * f * b * b / s2)
    big_gamma = r - a
    gamma_star = s2 * big_gamma / (f * f)
    gain = big_gamma / f

    rows = spec.coeff_dot(theta)
    r_dot = np.empty(spec.dim)
    g_dot = np.empty(spec.dim)
    b_dot = np.empty(spec.dim)
    for i, (fd, ad, bd) in enumerate(rows):
        r_dot[i] = (a * ad + (f * fd * b * b + f * f * b * bd) / s2) / r
        g_dot[i] = r_dot[i] - ad
        b_dot[i] = g_dot[i] / f - big_gamma * fd / (f * f)
    if spec.dim == 1:
        r_dot, g_dot, b_dot = float(r_dot[0]), float(g_dot[0]), float(b_dot[0])
    return DerivedQuantities(
        f=f,
        a=a,
        b=b,
        sigma=spec.sigma,
        r=r,
        gamma_star=gamma_star,
        big_gamma=big_gamma,
        filter_gain=gain,
        r_dot=r_dot,
        big_gamma_dot=g_dot,
        gain_dot=b_dot,
    )


# --------------------------------------------------------------------------
# Fisher information
# --------------------------------------------------------------------------


def _fisher_bilinear(a: float, r: float, adot, rdot, i: int, j: int) -> float:
    # E[Mdot_i Mdot_j] / sigma^2 for the stationary derivative processes
    # Mdot_i(t) = sigma * int_{-inf}^t (-adot_i e^{-a u} + rdot_i e^{-r u}) dWbar.
    return (
        adot[i] * adot[j] / (2.0 * a)
        - (adot[i] * rdot[j] + adot[j] * rdot[i]) / (a + r)
        + rdot[i] * rdot[j] / (2.0 * r)
    )


def fisher_scalar(spec: ModelSpec, theta) -> float:
    """Fisher information for a scalar parameter.

        I(theta) = adot^2/(2a) - 2 adot rdot/(a + r) + rdot^2/(2r).
    """
    if spec.dim != 1:
        raise DomainError(f"fisher_scalar expects a scalar case, got {spec.case}")
    dq = derived_quantities(spec, theta)
    (fd, ad, bd), = spec.coeff_dot(theta)
    return _fisher_bilinear(dq.a, dq.r, [ad], [dq.r_dot], 0, 0)


def fisher_matrix(spec: ModelSpec, theta) -> np.ndarray:
    """Fisher information matrix for a two-parameter case.

    Entries follow the same bilinear form as the scalar information,
    evaluated on the per-coordinate derivative pairs (adot_i, rdot_i).
    """
    if spec.dim != 2:
        raise DomainError(f"fisher_matrix expects a 2-dim case, got {spec.case}")
    dq = derived_quantities(spec, theta)
    rows = spec.coeff_dot(theta)
    adot = [row[1] for row in rows]
    rdot = list(np.atleast_1d(dq.r_dot))
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            out[i, j] = out[j, i] = _fisher_bilinear(dq.a, dq.r, adot, rdot, i, j)
    if not (out[0, 0] > 0.0 and np.linalg.det(out) > 0.0):
        raise DegenerateInformationError(
            f"Fisher matrix not positive definite at theta={theta!r}: {out!r}"
        )
    return out


def fisher_matrix_af(spec: ModelSpec, theta) -> np.ndarray:
    """Fisher matrix for the (a, f) case.

    The (2, 2) entry coincides with the scalar information of the
    f-parameter case, and the cross entry reduces to

        I_12 = f b^2 (a^2 + a r - 2 r^2) / (2 sigma^2 r^3 (a + r)).
    """
    if spec.case != "AF":
        raise DomainError(f"fisher_matrix_af expects case AF, got {spec.case}")
    return fisher_matrix(spec, theta)


# --------------------------------------------------------------------------
# Moment functions and the MME limit variance
# --------------------------------------------------------------------------


def _em1p(a: float) -> float:
    # e^{-a} - 1 + a, accurate near 0
    return a + math.expm1(-a)


def moment_functions(spec: ModelSpec, theta) -> tuple[float, float, float]:
    """The limits (Phi1, Phi2, Psi) of the unit-increment moment statistics.

        Phi1 = (f b)^2 / a^3 * (e^{-a} - 1 + a) + sigma^2
        Phi2 = (f b)^2 / (2 a^3) * (1 - e^{-a})^2

    Psi, the function whose inversion defines the generic scalar MME, is
    Phi1 itself: it is the a.s. limit of the mean squared unit increment.
    """
    f, a, b = spec.coefficients(theta)
    fb2 = (f * b) ** 2
    phi1 = fb2 / a**3 * _em1p(a) + spec.sigma**2
    phi2 = fb2 / (2.0 * a**3) * (-math.expm1(-a)) ** 2
    return phi1, phi2, phi1


def moment_function_slope(spec: ModelSpec, theta) -> float | np.ndarray:
    """d Phi1 / d theta via the chain rule (scalar: float; 2-dim: length-2).

    Writing Phi1 = (f b)^2 h_dec(a) + sigma^2,

        Phi1_dot_i = 2 f b (fdot_i b + f bdot_i) h_dec(a)
                     + (f b)^2 h_dec'(a) adot_i.
    """
    f, a, b = spec.coefficients(theta)
    rows = spec.coeff_dot(theta)
    out = np.array(
        [
            2.0 * f * b * (fd * b + f * bd) * h_dec(a) + (f * b) ** 2 * h_dec_prime(a) * ad
            for (fd, ad, bd) in rows
        ]
    )
    return float(out[0]) if spec.dim == 1 else out


def k11_variance(spec: ModelSpec, theta) -> float:
    """Limit of T * Var(R1): the asymptotic variance of the mean squared
    unit increment.

    Four contributions: the per-increment variance of the squared smoothed
    state, the geometric sum of its lagged covariances
    (Cov = (fb)^4 e^{2a} (1-e^{-a})^4 e^{-2a d} / (2 a^6) at lag d >= 1,
    summed over d to (fb)^4 (1-e^{-a})^3 / (a^6 (1+e^{-a}))), the
    state-times-observation-noise cross term, and the pure observation
    noise term 2 sigma^4.
    """
    f, a, b = spec.coefficients(theta)
    fb4 = (f * b) ** 4
    em = math.exp(-a)
    t1 = 2.0 * fb4 / a**6 * _em1p(a) ** 2
    t2 = fb4 * (1.0 - em) ** 3 / (a**6 * (1.0 + em))
    t3 = 4.0 * f**2 * spec.sigma**2 * b**2 / a**3 * _em1p(a)
    t4 = 2.0 * spec.sigma**4
    return t1 + t2 + t3 + t4


def mme_asymptotic_variance(spec: ModelSpec, theta) -> float:
    """Limit variance D^2 of sqrt(T) (theta*_T - theta) for the scalar MME.

    Delta method through the moment equation R1 = Phi1(theta):
    D^2 = K11 / Phi1_dot^2.  For case A this is K11 / (h_dec'(a)^2 f^4 b^4);
    for cases F and B it reduces to K11 / (4 f^2 b^4 h_dec(a)^2) and its
    f <-> b mirror.
    """
    if spec.dim != 1:
        raise DomainError("mme_asymptotic_variance is defined for scalar cases")
    slope = moment_function_slope(spec, theta)
    if abs(slope) < 1e-14:
        raise DegenerateInformationError(f"moment function slope vanishes at {theta!r}")
    return k11_variance(spec, theta) / slope**2


# --------------------------------------------------------------------------
# Monotone inversion helpers
# --------------------------------------------------------------------------


def h_dec(x: float) -> float:
    """Strictly decreasing h(x) = x^{-3} (x - 1 + e^{-x}), x > 0.

    Ranges over (0, inf); h(x) ~ 1/(2x) near 0 and ~ x^{-2} at infinity.
    """
    if x <= 0.0:
        raise DomainError(f"h_dec requires x > 0, got {x}")
    return _em1p(x) / x**3


def h_dec_prime(x: float) -> float:
    """Derivative of :func:`h_dec`: x^{-4} (3 - 2x - (3 + x) e^{-x}) < 0."""
    if x <= 0.0:
        raise DomainError(f"h_dec_prime requires x > 0, got {x}")
    return (3.0 - 2.0 * x - (3.0 + x) * math.exp(-x)) / x**4


def h_inc(x: float) -> float:
    """Strictly increasing h(x) = (e^{-x} - 1 + x) / (1 - e^{-x})^2, x > 0.

    Tends to 1/2 as x -> 0+ and grows like x at infinity.
    """
    if x <= 0.0:
        raise DomainError(f"h_inc requires x > 0, got {x}")
    return _em1p(x) / math.expm1(-x) ** 2


def _bisect(fun: Callable[[float], float], y: float, lo: float, hi: float, increasing: bool) -> float:
    # fun is strictly monotone on (lo, hi); bracket already straddles y.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _BISECT_XTOL:
            return mid
        if (fun(mid) < y) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def h_dec_inv(y: float) -> float:
    """Inverse of :func:`h_dec` on (0, inf), bisection to 1e-12 in x."""
    if not y > 0.0:
        raise DomainError(f"h_dec_inv requires y > 0, got {y}")
    lo, hi = 1.0, 1.0
    while h_dec(lo) < y:
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError(f"h_dec_inv: no bracket for y={y}")
    while h_dec(hi) > y:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError(f"h_dec_inv: no bracket for y={y}")
    return _bisect(h_dec, y, lo, hi, increasing=False)


def h_inc_inv(y: float) -> float:
    """Inverse of :func:`h_inc` on (1/2, inf), bisection to 1e-12 in x."""
    if not y > 0.5:
        raise DomainError(f"h_inc_inv requires y > 1/2 (the x->0+ limit), got {y}")
    lo, hi = 1.0, 1.0
    while h_inc(lo) > y:
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError(f"h_inc_inv: no bracket for y={y}")
    while h_inc(hi) < y:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError(f"h_inc_inv: no bracket for y={y}")
    return _bisect(h_inc, y, lo, hi, increasing=True)
