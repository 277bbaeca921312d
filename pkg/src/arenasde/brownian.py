"""Discretized Brownian paths and the closed-form laws of their extrema.

A path is sampled on a uniform grid with i.i.d. Gaussian increments and
carries its running maximum M and minimum m.  The reflection principle gives
the marginal densities

    f_M(z) = 2 N_t(z) on z >= 0,      f_m(z) = 2 N_t(z) on z <= 0,

and the joint densities with the endpoint B(t)

    f_{B,M}(u, v) = -2 N_t'(2v - u) on {v > 0, u < v},
    f_{B,m}(u, v) = -2 N_t'(u - 2v) on {v < 0, u > v},

where N_t is the centred Gaussian density with variance t and N_t' its
derivative.  These are the only distributional inputs the bracket integrals
need.  Running extrema are tracked on the discrete grid only, so the discrete
maximum slightly underestimates the continuous one; tests control that bias by
step refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "GaussianKernel",
    "BrownianPath",
    "sample_path",
    "coarsen_path",
    "density_extremum",
    "joint_density",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianKernel:
    """Centred Gaussian density with variance t, and its derivative."""

    t: float

    def __post_init__(self):
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise ValueError(f"GaussianKernel needs t > 0, got {self.t!r}")

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r * r / (2.0 * self.t)) / (_SQRT_2PI * math.sqrt(self.t))

    def dpdf(self, r):
        r = np.asarray(r, dtype=float)
        return -(r / self.t) * self.pdf(r)


@dataclass(frozen=True)
class BrownianPath:
    """One Brownian trajectory on a uniform grid, with running extrema.

    values[0] = 0, values[i+1] - values[i] = increments[i], and
    run_min[i] <= values[i] <= run_max[i] with run_min <= 0 <= run_max.
    Arrays are read-only; a path can be shared freely across threads.
    """

    t_grid: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    run_max: np.ndarray
    run_min: np.ndarray
    seed: int
    dt: float

    def __post_init__(self):
        for arr in (self.t_grid, self.values, self.increments,
                    self.run_max, self.run_min):
            arr.flags.writeable = False

    @property
    def n_steps(self) -> int:
        return len(self.increments)

    @property
    def t_end(self) -> float:
        return float(self.t_grid[-1])


def _build_path(t_end: float, increments: np.ndarray, seed: int) -> BrownianPath:
    n = len(increments)
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return BrownianPath(
        t_grid=np.linspace(0.0, t_end, n + 1),
        values=values,
        increments=increments,
        run_max=np.maximum.accumulate(values),
        run_min=np.minimum.accumulate(values),
        seed=seed,
        dt=t_end / n,
    )


def sample_path(t_end: float, n_steps: int, seed: int) -> BrownianPath:
    """Sample a Brownian path on n_steps uniform steps over [0, t_end].

    Increments are i.i.d. N(0, dt) drawn from PCG64(seed); the same seed
    always reproduces the same path bit for bit.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    dt = t_end / n_steps
    increments = rng.standard_normal(n_steps) * math.sqrt(dt)
    return _build_path(t_end, increments, seed)


def coarsen_path(path: BrownianPath, factor: int) -> BrownianPath:
    """Restrict a path to every `factor`-th grid point (increments summed).

    The coarse path is the same Brownian trajectory seen on a grid `factor`
    times wider; extrema are recomputed on the coarse grid.
    """
    if factor < 1 or path.n_steps % factor != 0:
        raise ValueError(
            f"factor {factor} must divide n_steps {path.n_steps}")
    if factor == 1:
        return path
    increments = path.increments.reshape(-1, factor).sum(axis=1)
    return _build_path(path.t_end, increments, path.seed)


def density_extremum(z, t: float, which: Literal["max", "min"]):
    """Density of the running maximum (z >= 0) or minimum (z <= 0) at time t.

    Equals twice the Gaussian density on the corresponding half-line and zero
    elsewhere; by reflection the two laws are mirror images.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    z = np.asarray(z, dtype=float)
    kern = GaussianKernel(t)
    if which == "max":
        inside = z >= 0.0
    elif which == "min":
        inside = z <= 0.0
    else:
        raise ValueError(f"which must be 'max' or 'min', got {which!r}")
    out = np.where(inside, 2.0 * kern.pdf(z), 0.0)
    return out if out.ndim else float(out)


def joint_density(u, v, t: float, which: Literal["with_max", "with_min"]):
    """Joint density of (B(t), M(t)) or (B(t), m(t)).

    with_max: -2 N_t'(2v - u) on {v > 0, u < v}; with_min: -2 N_t'(u - 2v)
    on {v < 0, u > v}; zero outside.  The kernel argument is positive inside
    each region, so the value is nonnegative everywhere.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    kern = GaussianKernel(t)
    if which == "with_max":
        inside = (v > 0.0) & (u < v)
        arg = 2.0 * v - u
    elif which == "with_min":
        inside = (v < 0.0) & (u > v)
        arg = u - 2.0 * v
    else:
        raise ValueError(f"which must be 'with_max' or 'with_min', got {which!r}")
    out = np.where(inside, -2.0 * kern.dpdf(np.where(inside, arg, 1.0)), 0.0)
    return out if out.ndim else float(out)
