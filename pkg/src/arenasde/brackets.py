"""Moment and distribution-function brackets for the coupled states.

Every bracket reduces to one of three quadrature shapes (see `quadrature`):
Gaussian-weighted half-line integrals for moments, wedge integrals against the
(endpoint, extremum) joint law for CDFs, and one product-law 3D shape for the
prey bounds that couple both drivers.  The deterministic constants k_p, K_p,
k, K come from `model.logistic_constants` applied to the prey baseline
(a = a1) and the predator baseline.

Predator-constant sign convention ("K2 variant")
------------------------------------------------
The predator baseline is a logistic diffusion with drift rate -a2, so its
bracket constants should carry the exponent -(a2 + sigma2^2/2) t.  The source
display of the system-level bounds instead prints them with (a2 - sigma2^2/2) t.
Both conventions are implemented behind `K2Variant`: AS_PRINTED evaluates the
constants exactly as displayed, CORRECTED uses the decaying rate -a2.  The
Monte Carlo containment suite arbitrates: only CORRECTED passes the
predator-side checks, and it is therefore the default.  The flag reaches every
operation that touches predator constants.

Prey CDF lower bound
--------------------
The lower bound on P(X(t) <= z1) is the minimum-wedge functional of the prey
baseline: X <= L1 gives P(X <= z1) >= P(L1 <= z1), which is in turn lower
bounded by the law of k1 e^(sigma1 B) / (1 + b1 K1 e^(sigma1 m)).  (The
maximum-wedge functional bounds P(L1 <= z1) from above and cannot serve as a
lower bound; it saturates at 1 at a finite level.)

Regime tags
-----------
The system-level bounds that the source states under a regime condition
(a1 > phi for the product lower moment and the joint CDF upper bound,
a1 < phi for the 3D prey bounds) are computed for all parameters; outside
their stated regime the result carries `regime_warning` instead of failing.
Order-zero moments short-circuit to exactly 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .brownian import GaussianKernel
from .model import (LogisticParams, ModelParams, expm1_over,
                    logistic_constants, phi)
from .quadrature import (QuadratureResult, _adaptive_gk, _Counter,
                         _wedge_integral, full_region, halfline_gauss,
                         region_integral_3d)

__all__ = [
    "K2Variant",
    "DEFAULT_K2_VARIANT",
    "OutOfDomainError",
    "Bracket",
    "BoundResult",
    "logistic_moment_bracket",
    "logistic_cdf_bracket",
    "joint_moment_upper",
    "joint_moment_lower",
    "moment_lower_x",
    "moment_lower_y",
    "cdf_lower_x",
    "cdf_lower_y",
    "cdf_joint_upper",
    "cdf_upper_x",
    "cdf_upper_y",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL_1D = 1e-6
DEFAULT_TOL_2D = 1e-5
DEFAULT_TOL_3D = 1e-4


class K2Variant(str, Enum):
    """Sign convention of the predator bracket constants (see module docs)."""

    AS_PRINTED = "as-printed"
    CORRECTED = "corrected"


DEFAULT_K2_VARIANT = K2Variant.CORRECTED


class OutOfDomainError(ValueError):
    """A bound was requested outside the parameter domain it is stated for."""


@dataclass(frozen=True)
class Bracket:
    """Validated (lower, upper) pair with quadrature error estimates."""

    lower: float
    upper: float
    lower_err: float
    upper_err: float
    source: str

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError(f"non-finite bracket {self.lower}, {self.upper}")
        if self.lower < -1e-12 or self.upper < -1e-12:
            raise ValueError(f"negative bracket {self.lower}, {self.upper}")
        if self.lower - self.lower_err > self.upper + self.upper_err + 1e-12:
            raise ValueError(
                f"inverted bracket [{self.lower}, {self.upper}] "
                f"(errs {self.lower_err}, {self.upper_err})")

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return (self.lower - self.lower_err - slack <= value
                <= self.upper + self.upper_err + slack)


@dataclass(frozen=True)
class BoundResult:
    """One-sided bound value with its error estimate and regime tag."""

    value: float
    err_est: float
    source: str
    regime_warning: str | None = None
    clamped: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite bound value {self.value!r}")


def predator_lp(params: ModelParams, variant: K2Variant) -> LogisticParams:
    """Predator baseline parameters under the requested sign convention."""
    a = -params.a2 if variant is K2Variant.CORRECTED else params.a2
    return LogisticParams(a=a, b=params.b2, sigma=params.sigma2, lam=params.y0)


def _exponent(params: ModelParams) -> float:
    return params.c2 / (params.beta * params.b1)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _halfline_moment(b: float, big_k: float, sigma: float, p: float, t: float,
                     sign: float, tol: float) -> tuple[float, float, int]:
    """int_0^inf (1 + b K e^(sign sigma z))^(-p) N_t(z) dz.

    Exactly 1/2 at p = 0 or b K = 0 (the integrand is identically one).
    """
    bk = b * big_k
    if p == 0.0 or bk == 0.0:
        return 0.5, 0.0, 0
    ln_bk = math.log(bk)

    def f(z):
        return np.exp(-p * _softplus(ln_bk + sign * sigma * z))

    res = halfline_gauss(f, t, tol)
    return res.value, res.err_est, res.n_evals


def _wedge_cdf(k: float, bk: float, sigma: float, ln_z: float, t: float,
               which: str, tol: float) -> tuple[float, float, int]:
    """Wedge integral of the level set {k e^(sigma u) / (1 + bK e^(sigma v)) <= z}.

    with_max (region over {v > 0, u < v}) upper-bounds the CDF of the
    corresponding baseline; with_min lower-bounds it.  The with_max form is
    identically 1 once z >= k/(bK): the wedge constraint u < v already forces
    the functional below that level, and the short circuit returns exactly 1.
    """
    ln_k = math.log(k)
    if which == "with_max" and bk > 0.0 and ln_z >= ln_k - math.log(bk):
        return 1.0, 0.0, 0
    if bk > 0.0:
        ln_bk = math.log(bk)

        def region(u, v):
            return sigma * u + ln_k <= ln_z + _softplus(ln_bk + sigma * v)
    else:
        def region(u, v):
            return sigma * u + ln_k <= ln_z + np.zeros_like(np.asarray(v, float))

    counter = _Counter()
    value, err = _wedge_integral(None, region, which, t, tol, counter)
    return value, err, counter.n


def _clamp01(value: float) -> tuple[float, float]:
    clipped = min(1.0, max(0.0, value))
    clamp = abs(value - clipped)
    if clamp > 0.0:
        logger.debug("CDF bound clamped by %.3e", clamp)
    return clipped, clamp


# ---------------------------------------------------------------------------
# logistic baseline brackets
# ---------------------------------------------------------------------------

def logistic_moment_bracket(lp: LogisticParams, p: float, t: float,
                            tol: float = DEFAULT_TOL_1D) -> Bracket:
    """Two-sided bracket for E[L(t)^p].

        upper = 2 k_p int_0^inf (1 + b K_p e^(-sigma z))^(-p) N_t(z) dz
        lower =   same with e^(+sigma z)

    The running extremum of the driver bounds the integral of the geometric
    factor from both sides, which freezes the denominator at e^(sigma m) and
    e^(sigma M) respectively.  Order p = 0 returns exactly (1, 1); b = 0
    collapses both sides to the geometric moment k_p.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    if p < 0.0:
        raise ValueError(f"p must be >= 0, got {p}")
    if p == 0.0:
        return Bracket(1.0, 1.0, 0.0, 0.0, source="logistic-moment")
    c = logistic_constants(lp, p, t)
    up, up_err, _ = _halfline_moment(lp.b, c.K_p, lp.sigma, p, t, -1.0, tol)
    lo, lo_err, _ = _halfline_moment(lp.b, c.K_p, lp.sigma, p, t, +1.0, tol)
    return Bracket(lower=2.0 * c.k_p * lo, upper=2.0 * c.k_p * up,
                   lower_err=2.0 * c.k_p * lo_err,
                   upper_err=2.0 * c.k_p * up_err,
                   source="logistic-moment")


def logistic_cdf_bracket(lp: LogisticParams, z: float, t: float,
                         tol: float = DEFAULT_TOL_2D) -> Bracket:
    """Two-sided bracket for P(L(t) <= z), z > 0.

    Both sides integrate the joint (endpoint, extremum) law over the level
    set of k e^(sigma u) / (1 + b K e^(sigma v)); the running maximum gives
    the upper bound, the running minimum the lower.  The upper bound is
    exactly 1 whenever z >= k/(b K).
    """
    if t <= 0.0 or z <= 0.0:
        raise ValueError(f"need z > 0 and t > 0, got z={z}, t={t}")
    c = logistic_constants(lp, 0.0, t)
    ln_z = math.log(z)
    up, up_err, _ = _wedge_cdf(c.k, lp.b * c.K, lp.sigma, ln_z, t,
                               "with_max", tol)
    lo, lo_err, _ = _wedge_cdf(c.k, lp.b * c.K, lp.sigma, ln_z, t,
                               "with_min", tol)
    up, _ = _clamp01(up)
    lo, _ = _clamp01(lo)
    return Bracket(lower=lo, upper=up, lower_err=lo_err, upper_err=up_err,
                   source="logistic-cdf")


# ---------------------------------------------------------------------------
# system-level moment bounds
# ---------------------------------------------------------------------------

def joint_moment_upper(params: ModelParams, p: float, q: float, t: float,
                       k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                       tol: float = DEFAULT_TOL_1D) -> BoundResult:
    """Upper bound for E[X(t)^p Y(t)^q], valid when q c2/(beta b1) - p >= 1.

    The predator envelope turns Y^q into L2^q times a power of the prey
    G-integral; the leftover power n = q c2/(beta b1) - p is handled with a
    triangle-plus-Minkowski bound, which needs n >= 1.
    """
    _check_orders_time(p, q, t)
    n = q * _exponent(params) - p
    if n < 1.0:
        raise OutOfDomainError(
            f"needs q*c2/(beta*b1) - p >= 1, got {n:.6g}")
    c1p = logistic_constants(params.prey_logistic, p, t)
    c2q = logistic_constants(predator_lp(params, k2_variant), q, t)
    eta = params.a1 + (q * _exponent(params) + p - 1.0) \
        * 0.5 * params.sigma1 ** 2
    minkowski = math.exp(n * math.log1p(params.b1 * params.x0
                                        * expm1_over(eta, t)))
    h_val, h_err, _ = _halfline_moment(params.b2, c2q.K_p, params.sigma2,
                                       q, t, -1.0, tol)
    scale = 2.0 * c1p.k_p * c2q.k_p * minkowski
    return BoundResult(value=scale * h_val, err_est=scale * h_err,
                       source="joint-moment-upper")


def joint_moment_lower(params: ModelParams, p: float, q: float, t: float,
                       k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                       tol: float = DEFAULT_TOL_1D) -> BoundResult:
    """Lower bound for E[X(t)^p Y(t)^q]:

        4 e^(-p c1 t) k_{1,p} k_{2,q}
          * int (1 + b1 K_{1,p} e^(sigma1 z))^(-p) N_t dz
          * int (1 + b2 K_{2,q} e^(sigma2 z))^(-q) N_t dz.

    Stated for a1 > phi, where the prey floor L1 e^(-c1 t) is sharp, but the
    floor itself holds for all parameters, so outside that regime the value
    is returned with a warning instead of an error.  Exactly 1 at p = q = 0.
    """
    _check_orders_time(p, q, t)
    c1p = logistic_constants(params.prey_logistic, p, t)
    c2q = logistic_constants(predator_lp(params, k2_variant), q, t)
    h1, e1, _ = _halfline_moment(params.b1, c1p.K_p, params.sigma1,
                                 p, t, +1.0, tol)
    h2, e2, _ = _halfline_moment(params.b2, c2q.K_p, params.sigma2,
                                 q, t, +1.0, tol)
    scale = 4.0 * math.exp(-p * params.c1 * t) * c1p.k_p * c2q.k_p
    value = scale * h1 * h2
    err = scale * (e1 * h2 + h1 * e2 + e1 * e2)
    return BoundResult(value=value, err_est=err, source="joint-moment-lower",
                       regime_warning=_warn_unless(params.a1 > phi(params),
                                                   "stated for a1 > phi"))


def moment_lower_y(params: ModelParams, q: float, t: float,
                   k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                   tol: float = DEFAULT_TOL_1D) -> BoundResult:
    """Lower bound 2 k_{2,q} int (1 + b2 K_{2,q} e^(sigma2 z))^(-q) N_t dz
    for E[Y(t)^q]; the p = 0 slice of the product lower bound, valid for all
    parameters since Y >= L2 always.
    """
    res = joint_moment_lower(params, 0.0, q, t, k2_variant=k2_variant, tol=tol)
    return BoundResult(value=res.value, err_est=res.err_est,
                       source="moment-lower-y", regime_warning=None)


def moment_lower_x(params: ModelParams, p: float, t: float,
                   k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                   tol: float = DEFAULT_TOL_3D) -> BoundResult:
    """Lower bound for E[X(t)^p] from the two-driver prey floor (a1 < phi).

    Integrates, over the product law of (B1, M1) x M2,

        k1^p e^(p sigma1 u1 - p (c1/(beta b2)) Q(v1) W(v2))
            / (1 + b1 K1 e^(sigma1 v1))^p

    with Q(v1) = (1 + b1 K1 e^(sigma1 v1))^(c2/(beta b1)) and
    W(v2) = ln(1 + b2 K2 e^(sigma2 v2)).  Exactly 1 at p = 0.
    """
    _check_orders_time(p, 0.0, t)
    warning = _warn_unless(params.a1 < phi(params), "stated for a1 < phi")
    if p == 0.0:
        return BoundResult(1.0, 0.0, "moment-lower-x", regime_warning=warning)
    k1 = logistic_constants(params.prey_logistic, 0.0, t)
    k2 = logistic_constants(predator_lp(params, k2_variant), 0.0, t)
    ln_b1k1 = math.log(params.b1 * k1.K)
    ln_b2k2 = math.log(params.b2 * k2.K)
    ex = _exponent(params)
    shrink = params.c1 / (params.beta * params.b2)
    s1, s2 = params.sigma1, params.sigma2

    def payload(u1, v1, v2):
        sp1 = _softplus(ln_b1k1 + s1 * v1)
        grow = np.exp(ex * sp1)
        w = _softplus(ln_b2k2 + s2 * v2)
        return np.exp(p * s1 * u1 - p * shrink * grow * w - p * sp1)

    res = region_integral_3d(payload, full_region, t, tol)
    scale = k1.k ** p
    return BoundResult(value=scale * res.value, err_est=scale * res.err_est,
                       source="moment-lower-x", regime_warning=warning)


# ---------------------------------------------------------------------------
# system-level CDF bounds
# ---------------------------------------------------------------------------

def cdf_lower_x(params: ModelParams, z1: float, t: float,
                tol: float = DEFAULT_TOL_2D) -> BoundResult:
    """Lower bound for P(X(t) <= z1) via P(L1 <= z1) and its min-wedge bound."""
    _check_level_time(z1, t)
    c = logistic_constants(params.prey_logistic, 0.0, t)
    value, err, _ = _wedge_cdf(c.k, params.b1 * c.K, params.sigma1,
                               math.log(z1), t, "with_min", tol)
    value, clamp = _clamp01(value)
    return BoundResult(value=value, err_est=err, source="cdf-lower-x",
                       clamped=clamp)


def cdf_upper_y(params: ModelParams, z2: float, t: float,
                k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                tol: float = DEFAULT_TOL_2D) -> BoundResult:
    """Upper bound for P(Y(t) <= z2) via Y >= L2 and the max-wedge bound.

    Exactly 1 once z2 clears the k2/(b2 K2) saturation level.
    """
    _check_level_time(z2, t)
    c = logistic_constants(predator_lp(params, k2_variant), 0.0, t)
    value, err, _ = _wedge_cdf(c.k, params.b2 * c.K, params.sigma2,
                               math.log(z2), t, "with_max", tol)
    value, clamp = _clamp01(value)
    return BoundResult(value=value, err_est=err, source="cdf-upper-y",
                       clamped=clamp)


def cdf_joint_upper(params: ModelParams, z1: float, z2: float, t: float,
                    k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                    tol: float = DEFAULT_TOL_2D) -> BoundResult:
    """Upper bound for P(X(t) <= z1, Y(t) <= z2) (stated for a1 > phi).

    The floors X >= L1 e^(-c1 t) and Y >= L2 are independent, so the joint
    probability is at most the product of the max-wedge CDF bounds of L1 at
    z1 e^(c1 t) and of L2 at z2.
    """
    _check_level_time(z1, t)
    _check_level_time(z2, t)
    c1c = logistic_constants(params.prey_logistic, 0.0, t)
    c2c = logistic_constants(predator_lp(params, k2_variant), 0.0, t)
    v1, e1, _ = _wedge_cdf(c1c.k, params.b1 * c1c.K, params.sigma1,
                           math.log(z1) + params.c1 * t, t, "with_max", tol)
    v2, e2, _ = _wedge_cdf(c2c.k, params.b2 * c2c.K, params.sigma2,
                           math.log(z2), t, "with_max", tol)
    value, clamp = _clamp01(v1 * v2)
    err = e1 * v2 + v1 * e2 + e1 * e2
    return BoundResult(value=value, err_est=err, source="cdf-joint-upper",
                       clamped=clamp,
                       regime_warning=_warn_unless(params.a1 > phi(params),
                                                   "stated for a1 > phi"))


def cdf_upper_x(params: ModelParams, z1: float, t: float,
                k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                tol: float = DEFAULT_TOL_3D) -> BoundResult:
    """Upper bound for P(X(t) <= z1) from the two-driver prey floor (a1 < phi).

    Integrates the (B1, M1) x M2 product law over the set where the floor
    functional k1 e^(sigma1 u1 - (c1/(beta b2)) Q(v1) W(v2)) / (1 + b1 K1
    e^(sigma1 v1)) falls below z1.
    """
    _check_level_time(z1, t)
    warning = _warn_unless(params.a1 < phi(params), "stated for a1 < phi")
    k1 = logistic_constants(params.prey_logistic, 0.0, t)
    k2 = logistic_constants(predator_lp(params, k2_variant), 0.0, t)
    ln_k1 = math.log(k1.k)
    ln_b1k1 = math.log(params.b1 * k1.K)
    ln_b2k2 = math.log(params.b2 * k2.K)
    ln_z1 = math.log(z1)
    ex = _exponent(params)
    shrink = params.c1 / (params.beta * params.b2)
    s1, s2 = params.sigma1, params.sigma2

    def region(u1, v1, v2):
        sp1 = _softplus(ln_b1k1 + s1 * v1)
        grow = np.exp(ex * sp1)
        w = _softplus(ln_b2k2 + s2 * v2)
        return s1 * u1 - shrink * grow * w + ln_k1 <= ln_z1 + sp1

    res = region_integral_3d(None, region, t, tol)
    value, clamp = _clamp01(res.value)
    return BoundResult(value=value, err_est=res.err_est, source="cdf-upper-x",
                       clamped=clamp, regime_warning=warning)


def cdf_lower_y(params: ModelParams, z2: float, t: float,
                k2_variant: K2Variant = DEFAULT_K2_VARIANT,
                tol: float = DEFAULT_TOL_2D) -> BoundResult:
    """Lower bound for P(Y(t) <= z2).

    Conditioning on the predator driver and bounding the prey G-integral by
    its maximum-based envelope leaves a one-dimensional integral over the
    baseline level zeta of [min-wedge CDF lower bound of L2 at zeta] times
    the density of the prey ceiling crossing, up to the saturation level
    zeta_max = z2 (1 + b1 K1)^(-c2/(beta b1)).  The integration runs in
    tau = ln(zeta) where the integrand decays like a Gaussian tail.
    """
    _check_level_time(z2, t)
    if params.sigma1 <= 0.0 or params.c2 <= 0.0:
        raise ValueError("cdf_lower_y requires sigma1 > 0 and c2 > 0")
    k1 = logistic_constants(params.prey_logistic, 0.0, t)
    c2c = logistic_constants(predator_lp(params, k2_variant), 0.0, t)
    b1k1 = params.b1 * k1.K
    ln_b1k1 = math.log(b1k1)
    ex = _exponent(params)
    inv_ex = 1.0 / ex
    prefactor = 2.0 * params.beta * params.b1 / (params.sigma1 * params.c2)
    ln_z2 = math.log(z2)
    ln_zeta_max = ln_z2 - ex * math.log1p(b1k1)
    kern = GaussianKernel(t)
    inner_tol = tol / 4.0
    counter = _Counter()

    def integrand(tau):
        tau = np.asarray(tau, dtype=float)
        vals = np.empty_like(tau)
        errs = np.empty_like(tau)
        for i, ln_zeta in enumerate(tau):
            f2, f2_err, n = _wedge_cdf(c2c.k, params.b2 * c2c.K, params.sigma2,
                                       float(ln_zeta), t, "with_min", inner_tol)
            counter.n += n
            rho = inv_ex * (ln_z2 - float(ln_zeta))  # ln (z2/zeta)^(beta b1/c2)
            ln_rm1 = rho + math.log1p(-math.exp(-rho))
            g = (ln_rm1 - ln_b1k1) / params.sigma1
            ratio = -1.0 / math.expm1(-rho)
            weight = prefactor * float(kern.pdf(g)) * ratio
            vals[i] = weight * f2
            errs[i] = weight * f2_err
        return vals, errs

    # depth in tau at which the Gaussian argument g clears the truncation
    # radius; below it the integrand is pure Gaussian tail
    rt = math.sqrt(t)
    rho_far = max(math.log(2.0), ln_b1k1 + params.sigma1 * (8.0 * rt) + 1.0)
    depth = max(5.0, ln_zeta_max - (ln_z2 - ex * rho_far))
    fracs = np.array([1.0, 0.6, 0.35, 0.2, 0.12, 0.07, 0.04, 0.02,
                      0.01, 0.005, 0.002, 0.0])
    breakpoints = ln_zeta_max - depth * fracs
    value, err, inner_err = _adaptive_gk(integrand, breakpoints, tol,
                                         counter=counter, two_channel=True,
                                         max_panels=1024)
    tail = prefactor * params.sigma1 * ex * rt \
        * 0.5 * math.erfc(8.0 / math.sqrt(2.0))
    value, clamp = _clamp01(value)
    return BoundResult(value=value, err_est=err + inner_err + tail,
                       source="cdf-lower-y", clamped=clamp)


# ---------------------------------------------------------------------------

def _check_orders_time(p: float, q: float, t: float):
    if p < 0.0 or q < 0.0:
        raise ValueError(f"moment orders must be >= 0, got p={p}, q={q}")
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")


def _check_level_time(z: float, t: float):
    if z <= 0.0:
        raise ValueError(f"level must be > 0, got {z}")
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")


def _warn_unless(condition: bool, text: str) -> str | None:
    return None if condition else text
