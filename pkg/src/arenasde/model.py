"""Model parameters, regime classification, and closed-form constants.

The coupled system describes a prey density X and a predator density Y with
logistic self-limitation, multiplicative Gaussian noise, and a foraging-arena
interaction X*Y/(beta + Y):

    dX = [X(a1 - b1 X) - c1 X Y/(beta + Y)] dt + sigma1 X dB1
    dY = [Y(-a2 - b2 Y) + c2 X Y/(beta + Y)] dt + sigma2 Y dB2

Removing the interaction (c1 = c2 = 0) decouples the system into two logistic
diffusions dL = L(a - b L) dt + sigma L dB, one with a = a1 (prey baseline) and
one with a = -a2 (predator baseline).  Everything in this module is a pure
function of the parameters: the persistence threshold phi, the long-run regime
tag, the exponential-moment (Novikov) threshold for a drift removal, the
growth/decay constants entering the moment and distribution brackets, and the
stationary Gamma law of the logistic diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "ModelParams",
    "LogisticParams",
    "RegimeTag",
    "Regime",
    "NovikovCheck",
    "GammaLaw",
    "LogisticConstants",
    "PARAM_KEYS",
    "phi",
    "classify_regime",
    "novikov_threshold",
    "logistic_constants",
    "gamma_stationary",
]

# Removable-singularity guard on (e^{d t} - 1)/d denominators, in 1/time units.
DENOM_EPS = 1e-9

# Config keys, in canonical order, for the flat key-value round trip.
PARAM_KEYS = ("a1", "b1", "c1", "a2", "b2", "c2", "beta",
              "sigma1", "sigma2", "x0", "y0")


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _check_positive(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if value <= 0.0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value


def _check_nonnegative(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the coupled system.

    a1: prey growth rate (1/time); b1: prey self-competition; c1: predation
    coefficient; a2: predator death rate; b2: predator self-competition;
    c2: trophic conversion; beta: arena saturation density; sigma1, sigma2:
    noise intensities; x0, y0: initial densities.

    Rates, competition coefficients, beta and the initial densities must be
    strictly positive.  The noise intensities and the interaction coefficients
    c1, c2 are allowed to be zero so that the noiseless reference run and the
    decoupled comparison system are expressible with the same type.
    """

    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float
    beta: float
    sigma1: float
    sigma2: float
    x0: float
    y0: float

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2", "beta", "x0", "y0"):
            _check_positive(name, getattr(self, name))
        for name in ("c1", "c2", "sigma1", "sigma2"):
            _check_nonnegative(name, getattr(self, name))

    @property
    def prey_logistic(self) -> "LogisticParams":
        """Logistic baseline of the prey (the system with c1 = 0)."""
        return LogisticParams(a=self.a1, b=self.b1, sigma=self.sigma1,
                              lam=self.x0)

    @property
    def predator_logistic(self) -> "LogisticParams":
        """Logistic baseline of the predator (the system with c2 = 0).

        The drift rate is -a2: the predator declines without trophic input.
        """
        return LogisticParams(a=-self.a2, b=self.b2, sigma=self.sigma2,
                              lam=self.y0)

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in PARAM_KEYS}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "ModelParams":
        missing = [k for k in PARAM_KEYS if k not in d]
        if missing:
            raise ValueError(f"missing parameter keys: {', '.join(missing)}")
        return cls(**{k: float(d[k]) for k in PARAM_KEYS})

    def to_config_text(self) -> str:
        """Flat key-value form, one `key = value` line per parameter."""
        return "\n".join(f"{k} = {getattr(self, k)!r}" for k in PARAM_KEYS) + "\n"


@dataclass(frozen=True)
class LogisticParams:
    """Parameters of the logistic diffusion dL = L(a - b L)dt + sigma L dB.

    `a` may be negative (the predator baseline uses a = -a2).  `b = 0` gives
    plain geometric Brownian motion and `sigma = 0` the deterministic logistic
    equation; both degenerate cases are accepted.
    """

    a: float
    b: float
    sigma: float
    lam: float  # initial value L(0)

    def __post_init__(self):
        _check_finite("a", self.a)
        _check_nonnegative("b", self.b)
        _check_nonnegative("sigma", self.sigma)
        _check_positive("lam", self.lam)


class RegimeTag(str, Enum):
    PREY_EXTINCTION = "PreyExtinction"
    PREDATOR_EXTINCTION = "PredatorExtinction"
    STATIONARY = "Stationary"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class Regime:
    """Long-run classification of the coupled system.

    `stationary_threshold` is phi/(1 - sigma2^2/(2 c2) - a2/c2), present only
    when that denominator is positive (equivalently a2 + sigma2^2/2 < c2).
    """

    tag: RegimeTag
    phi: float
    stationary_threshold: float | None


@dataclass(frozen=True)
class NovikovCheck:
    """Exponential-moment threshold for removing the interaction drift.

    The drift removal that maps the decoupled pair onto the coupled system is
    licensed only when beta >= c2*sigma1/(b1*sigma2); below that threshold the
    required exponential moment is infinite and the measure-change route is
    unavailable.
    """

    threshold: float
    satisfied: bool


@dataclass(frozen=True)
class GammaLaw:
    """Stationary law Gamma(shape, rate) of a supercritical logistic diffusion."""

    shape: float
    rate: float

    def __post_init__(self):
        _check_positive("shape", self.shape)
        _check_positive("rate", self.rate)

    @property
    def mean(self) -> float:
        return self.shape / self.rate


@dataclass(frozen=True)
class LogisticConstants:
    """Deterministic constants entering the moment and CDF brackets.

    For order p >= 0 and horizon t >= 0:

        k_p = lam^p exp(p(a - sigma^2/2) t + p^2 sigma^2 t / 2)
        K_p = lam (exp((a - sigma^2/2 + p sigma^2) t) - 1)/(a - sigma^2/2 + p sigma^2)
        k   = lam exp((a - sigma^2/2) t)
        K   = lam (exp((a - sigma^2/2) t) - 1)/(a - sigma^2/2)

    k_p is the p-th moment of the geometric part at time t; K_p and K are
    drift-shifted time integrals of its mean.  The removable singularity of
    (e^{d t} - 1)/d at d = 0 is series-expanded below DENOM_EPS.
    """

    k_p: float
    K_p: float
    k: float
    K: float


def expm1_over(d: float, t: float) -> float:
    """(exp(d*t) - 1)/d with a series guard near the removable singularity."""
    if abs(d) < DENOM_EPS:
        dt = d * t
        return t * (1.0 + dt / 2.0 + dt * dt / 6.0)
    return math.expm1(d * t) / d


def phi(params: ModelParams) -> float:
    """Persistence threshold sigma1^2/2 + b1*beta*a2/c2 + b1*beta*sigma2^2/(2 c2).

    Prey growth below phi forces predator extinction.  With c2 = 0 there is no
    trophic transfer at all and the threshold is infinite.
    """
    if params.c2 == 0.0:
        return math.inf
    bb = params.b1 * params.beta / params.c2
    return 0.5 * params.sigma1 ** 2 + bb * (params.a2 + 0.5 * params.sigma2 ** 2)


def classify_regime(params: ModelParams) -> Regime:
    """Assign the long-run regime tag.

    PreyExtinction      iff a1 < sigma1^2/2 (everything dies out),
    PredatorExtinction  iff sigma1^2/2 < a1 < phi (prey persists on average),
    Stationary          iff a1 > phi/(1 - sigma2^2/(2 c2) - a2/c2) and
                            a2 + sigma2^2/2 < c2,
    Unclassified        otherwise, including all boundary equalities and the
                        open gap phi < a1 < stationary_threshold.
    """
    phi_val = phi(params)
    half_var = 0.5 * params.sigma1 ** 2

    stationary_threshold = None
    if params.c2 > 0.0:
        denom = 1.0 - 0.5 * params.sigma2 ** 2 / params.c2 - params.a2 / params.c2
        if denom > 0.0:
            stationary_threshold = phi_val / denom

    if params.a1 < half_var:
        tag = RegimeTag.PREY_EXTINCTION
    elif half_var < params.a1 < phi_val:
        tag = RegimeTag.PREDATOR_EXTINCTION
    elif (stationary_threshold is not None
          and params.a1 > stationary_threshold
          and params.a2 + 0.5 * params.sigma2 ** 2 < params.c2):
        tag = RegimeTag.STATIONARY
    else:
        tag = RegimeTag.UNCLASSIFIED

    return Regime(tag=tag, phi=phi_val,
                  stationary_threshold=stationary_threshold)


def novikov_threshold(params: ModelParams) -> NovikovCheck:
    """Threshold c2*sigma1/(b1*sigma2) and whether beta reaches it.

    `satisfied=False` means the exponential moment backing the drift-removal
    construction diverges for every horizon.  Boundary equality counts as
    satisfied.  Requires sigma2 > 0 (the threshold divides by it).
    """
    if params.sigma2 <= 0.0:
        raise ValueError("novikov_threshold requires sigma2 > 0")
    threshold = params.c2 * params.sigma1 / (params.b1 * params.sigma2)
    return NovikovCheck(threshold=threshold, satisfied=params.beta >= threshold)


def logistic_constants(lp: LogisticParams, p: float, t: float) -> LogisticConstants:
    """Evaluate the bracket constants k_p, K_p, k, K at order p and time t."""
    if p < 0.0:
        raise ValueError(f"moment order p must be >= 0, got {p}")
    if t < 0.0:
        raise ValueError(f"time t must be >= 0, got {t}")
    drift = lp.a - 0.5 * lp.sigma ** 2
    var = lp.sigma ** 2
    k_p = lp.lam ** p * math.exp(p * drift * t + 0.5 * p * p * var * t)
    K_p = lp.lam * expm1_over(drift + p * var, t)
    k = lp.lam * math.exp(drift * t)
    K = lp.lam * expm1_over(drift, t)
    return LogisticConstants(k_p=k_p, K_p=K_p, k=k, K=K)


def gamma_stationary(lp: LogisticParams) -> GammaLaw:
    """Stationary law Gamma(2a/sigma^2 - 1, 2b/sigma^2) of the logistic diffusion.

    Exists only in the supercritical regime a > sigma^2/2 (with b, sigma > 0);
    the boundary a = sigma^2/2 is rejected since the shape degenerates to 0.
    The mean is (a - sigma^2/2)/b, the long-run time average of the path.
    """
    if lp.sigma <= 0.0 or lp.b <= 0.0:
        raise ValueError("gamma_stationary requires sigma > 0 and b > 0")
    if lp.a <= 0.5 * lp.sigma ** 2:
        raise ValueError(
            f"no stationary law: need a > sigma^2/2, got a={lp.a}, "
            f"sigma^2/2={0.5 * lp.sigma ** 2}")
    var = lp.sigma ** 2
    return GammaLaw(shape=2.0 * lp.a / var - 1.0, rate=2.0 * lp.b / var)
