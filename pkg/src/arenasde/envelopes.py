"""Almost-sure envelopes around the coupled states, and containment audits.

On every noise realization the coupled states are pinched between functionals
of the decoupled baselines:

    L2(t)           <=  Y(t)  <=  L2(t) (1 + b1 int_0^t G1)^(c2/(beta b1))
    L1(t) F(t)      <=  X(t)  <=  L1(t)

with the combined prey floor

    F(t) = max( exp(-c1 t),
                exp(-(c1/(beta b2)) (1 + b1 int G1)^(c2/(beta b1))
                     * ln(1 + b2 int G2)) ).

The first branch caps the predator response at one ("saturated"), the second
at Y/beta ("linear"); the max of the two is valid for all parameters and is
always at least as tight as either branch alone.  The envelopes are exact
almost surely in the continuum, so any discrete violation is a discretization
artifact; the audit counts violations beyond a relative tolerance and they
must shrink under step refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .brownian import sample_path
from .model import ModelParams
from .simulate import (SEED_STRIDE, TrajectoryBundle, log_drift,
                       simulate_system, system_seeds)

__all__ = [
    "BRANCH_LINEAR",
    "BRANCH_SATURATED",
    "EnvelopeSample",
    "ViolationReport",
    "envelope_y",
    "envelope_x",
    "envelope_samples",
    "audit",
    "audit_paths",
]

BRANCH_LINEAR = "linear"        # response bounded by Y/beta
BRANCH_SATURATED = "saturated"  # response bounded by 1

_RNG_BLOCK = 2048  # time steps drawn per batch in the streaming audit


@dataclass(frozen=True)
class EnvelopeSample:
    """Envelope values at one grid time."""

    t: float
    y_lo: float
    y_hi: float
    x_lo: float
    x_hi: float
    regime_used: str


@dataclass(frozen=True)
class ViolationReport:
    """Containment audit over a collection of bundles.

    A grid point is a violation when a state leaves its envelope by more than
    tol_rel in relative terms; worst_rel_excess is the largest relative
    excursion seen anywhere (0 when containment held everywhere).
    """

    n_points: int
    n_viol_y: int
    n_viol_x: int
    worst_rel_excess: float
    dt: float
    tol_rel: float

    @property
    def violation_fraction(self) -> float:
        if self.n_points == 0:
            return 0.0
        return (self.n_viol_x + self.n_viol_y) / (2.0 * self.n_points)


def _exponent(params: ModelParams) -> float:
    return params.c2 / (params.beta * params.b1)


def _prey_floor_factors(params: ModelParams, t_grid, int_g1, int_g2):
    """The two lower-branch factors for X, saturated and linear."""
    ex = _exponent(params)
    shrink = params.c1 / (params.beta * params.b2)
    fac_sat = np.exp(-params.c1 * np.asarray(t_grid, dtype=float))
    with np.errstate(over="ignore"):
        grow = np.exp(ex * np.log1p(params.b1 * np.asarray(int_g1, dtype=float)))
        fac_lin = np.exp(-shrink * grow
                         * np.log1p(params.b2 * np.asarray(int_g2, dtype=float)))
    return fac_sat, fac_lin


def envelope_y(bundle: TrajectoryBundle, params: ModelParams):
    """Per-grid predator envelope (y_lo, y_hi)."""
    ex = _exponent(params)
    with np.errstate(over="ignore"):
        y_hi = bundle.l2 * np.exp(ex * np.log1p(params.b1 * bundle.int_g1))
    return bundle.l2.copy(), y_hi


def envelope_x(bundle: TrajectoryBundle, params: ModelParams):
    """Per-grid prey envelope (x_lo, x_hi, regime_used).

    The floor always takes the combined max of the two branches; regime_used
    records which branch won at each grid point (ties go to "linear", which
    both branches realize at t = 0).
    """
    fac_sat, fac_lin = _prey_floor_factors(
        params, bundle.t_grid, bundle.int_g1, bundle.int_g2)
    x_lo = bundle.l1 * np.maximum(fac_sat, fac_lin)
    regime_used = np.where(fac_lin >= fac_sat, BRANCH_LINEAR, BRANCH_SATURATED)
    return x_lo, bundle.l1.copy(), regime_used


def envelope_samples(bundle: TrajectoryBundle,
                     params: ModelParams) -> list[EnvelopeSample]:
    y_lo, y_hi = envelope_y(bundle, params)
    x_lo, x_hi, used = envelope_x(bundle, params)
    return [EnvelopeSample(t=float(t), y_lo=float(a), y_hi=float(b),
                           x_lo=float(c), x_hi=float(d), regime_used=str(u))
            for t, a, b, c, d, u in zip(bundle.t_grid, y_lo, y_hi,
                                        x_lo, x_hi, used)]


def _excess(value, lo, hi):
    """Largest relative excursion outside [lo, hi], elementwise, >= 0."""
    over = value / hi - 1.0
    under = lo / value - 1.0
    return np.maximum(np.maximum(over, under), 0.0)


def audit(bundles: Iterable[TrajectoryBundle], params: ModelParams,
          tol_rel: float = 1e-2) -> ViolationReport:
    """Count envelope violations beyond tol_rel across explicit bundles."""
    n_points = 0
    n_viol_x = 0
    n_viol_y = 0
    worst = 0.0
    dt = None
    for bundle in bundles:
        if dt is None:
            dt = bundle.dt
        y_lo, y_hi = envelope_y(bundle, params)
        x_lo, x_hi, _ = envelope_x(bundle, params)
        exc_x = _excess(bundle.x, x_lo, x_hi)
        exc_y = _excess(bundle.y, y_lo, y_hi)
        n_points += len(bundle.t_grid)
        n_viol_x += int(np.count_nonzero(exc_x > tol_rel))
        n_viol_y += int(np.count_nonzero(exc_y > tol_rel))
        worst = max(worst, float(exc_x.max()), float(exc_y.max()))
    if dt is None:
        raise ValueError("audit needs at least one bundle")
    return ViolationReport(n_points=n_points, n_viol_y=n_viol_y,
                           n_viol_x=n_viol_x, worst_rel_excess=worst,
                           dt=dt, tol_rel=tol_rel)


def audit_paths(params: ModelParams, n_bundles: int, t_end: float, dt: float,
                seed_base: int, tol_rel: float = 1e-2,
                rho: float = 0.0) -> ViolationReport:
    """Streaming containment audit over freshly simulated bundles.

    Equivalent to auditing `simulate_system` bundles with driver seeds
    `system_seeds(seed_base, i)`, but evolves all bundles in lockstep and
    never stores full trajectories, so thousand-bundle runs stay cheap.
    """
    if n_bundles < 1:
        raise ValueError("n_bundles must be >= 1")
    n_steps = int(round(t_end / dt))
    if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"t_end {t_end} is not a multiple of dt {dt}")
    p = params
    ex = _exponent(p)
    shrink = p.c1 / (p.beta * p.b2)
    sq = math.sqrt(dt)
    corr = math.sqrt(1.0 - rho * rho)

    gens1 = [np.random.Generator(np.random.PCG64(seed_base + i))
             for i in range(n_bundles)]
    gens2 = [np.random.Generator(np.random.PCG64(seed_base + i + SEED_STRIDE))
             for i in range(n_bundles)]

    lx = np.full(n_bundles, math.log(p.x0))
    ly = np.full(n_bundles, math.log(p.y0))
    ll1 = lx.copy()
    ll2 = ly.copy()
    lg1 = lx.copy()
    lg2 = ly.copy()
    g1 = np.full(n_bundles, p.x0)
    g2 = np.full(n_bundles, p.y0)
    int_g1 = np.zeros(n_bundles)
    int_g2 = np.zeros(n_bundles)

    n_viol_x = n_viol_y = 0
    worst = 0.0
    done = 0
    while done < n_steps:
        m = min(_RNG_BLOCK, n_steps - done)
        d_b1 = np.stack([g.standard_normal(m) for g in gens1]) * sq
        d_b2 = np.stack([g.standard_normal(m) for g in gens2]) * sq
        if rho != 0.0:
            d_b2 = rho * d_b1 + corr * d_b2
        for j in range(m):
            x = np.exp(lx)
            y = np.exp(ly)
            l1 = np.exp(ll1)
            l2 = np.exp(ll2)
            lx += (log_drift(p.a1, p.sigma1, p.b1, x)
                   - p.c1 * (y / (p.beta + y))) * dt + p.sigma1 * d_b1[:, j]
            ly += (log_drift(-p.a2, p.sigma2, p.b2, y)
                   + p.c2 * x / (p.beta + y)) * dt + p.sigma2 * d_b2[:, j]
            ll1 += (log_drift(p.a1, p.sigma1, p.b1, l1) - 0.0) * dt \
                + p.sigma1 * d_b1[:, j]
            ll2 += (log_drift(-p.a2, p.sigma2, p.b2, l2) + 0.0) * dt \
                + p.sigma2 * d_b2[:, j]
            lg1 += (p.a1 - 0.5 * p.sigma1 ** 2) * dt + p.sigma1 * d_b1[:, j]
            lg2 += (-p.a2 - 0.5 * p.sigma2 ** 2) * dt + p.sigma2 * d_b2[:, j]
            g1_new = np.exp(lg1)
            g2_new = np.exp(lg2)
            int_g1 += 0.5 * dt * (g1 + g1_new)
            int_g2 += 0.5 * dt * (g2 + g2_new)
            g1 = g1_new
            g2 = g2_new

            t = (done + j + 1) * dt
            x = np.exp(lx)
            y = np.exp(ly)
            l1 = np.exp(ll1)
            l2 = np.exp(ll2)
            with np.errstate(over="ignore"):
                grow = np.exp(ex * np.log1p(p.b1 * int_g1))
                y_hi = l2 * grow
                floor = np.maximum(math.exp(-p.c1 * t),
                                   np.exp(-shrink * grow * np.log1p(p.b2 * int_g2)))
            exc_x = _excess(x, l1 * floor, l1)
            exc_y = _excess(y, l2, y_hi)
            n_viol_x += int(np.count_nonzero(exc_x > tol_rel))
            n_viol_y += int(np.count_nonzero(exc_y > tol_rel))
            worst = max(worst, float(exc_x.max()), float(exc_y.max()))
        done += m

    n_points = n_bundles * (n_steps + 1)  # t = 0 included, always contained
    return ViolationReport(n_points=n_points, n_viol_y=n_viol_y,
                           n_viol_x=n_viol_x, worst_rel_excess=worst,
                           dt=dt, tol_rel=tol_rel)


def audit_from_seeds(params: ModelParams, n_bundles: int, t_end: float,
                     dt: float, seed_base: int, tol_rel: float = 1e-2,
                     rho: float = 0.0) -> ViolationReport:
    """Reference audit that materializes each bundle via simulate_system."""
    n_steps = int(round(t_end / dt))

    def bundles():
        for i in range(n_bundles):
            s1, s2 = system_seeds(seed_base, i)
            yield simulate_system(params,
                                  sample_path(t_end, n_steps, s1),
                                  sample_path(t_end, n_steps, s2), rho=rho)

    return audit(bundles(), params, tol_rel=tol_rel)
