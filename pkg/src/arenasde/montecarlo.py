"""Independent Monte Carlo estimators for bracket validation.

The brackets are deterministic quadrature of closed forms; the estimators
here use only path simulation (the log-Euler scheme for the coupled system,
the explicit solution for the logistic baseline), so the two channels share
nothing but the Brownian increments and can cross-check each other.

Seed partitioning: path i of a batch draws its first driver from
PCG64(seed_base + i) and its second from PCG64(seed_base + i + SEED_STRIDE),
the same convention as `simulate.system_seeds`.  Estimates are reproducible
to the digit for a given (seed_base, n_paths, dt, horizon), and a batch of
n1 + n2 paths equals the weighted merge of consecutive sub-batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .brownian import sample_path
from .logistic import logistic_exact
from .model import LogisticParams, ModelParams
from .simulate import SEED_STRIDE, log_drift

__all__ = [
    "McEstimate",
    "McOverflowError",
    "mc_moment",
    "mc_cdf",
    "mc_ergodic_average",
    "mc_system_time_average",
    "logistic_sample_values",
    "system_sample_values",
]

# floats per RNG draw block; bounds peak memory of the increment matrices
_CHUNK_TARGET = 8_000_000


class McOverflowError(OverflowError):
    """A sampled functional left the double range (reported, not clamped)."""


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n_paths: int
    seed_base: int


def _grid_index(t: float, dt: float) -> int:
    idx = int(round(t / dt))
    if not math.isclose(idx * dt, t, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"t={t} does not lie on the dt={dt} grid")
    return idx


def logistic_sample_values(lp: LogisticParams, times: Sequence[float],
                           n_paths: int, seed_base: int,
                           dt: float = 1e-3) -> np.ndarray:
    """Exact-formula samples L(t) for each requested time, shape (n_paths, n_times).

    Only the trapezoid rule for int G carries discretization error; the
    map from the Brownian path to L is otherwise exact.
    """
    times = list(times)
    idx = np.array([_grid_index(t, dt) for t in times])
    n_steps = int(idx.max())
    if n_steps < 1:
        raise ValueError("need at least one positive recording time")
    t_grid = np.linspace(0.0, n_steps * dt, n_steps + 1)
    drift = (lp.a - 0.5 * lp.sigma ** 2) * t_grid
    sq = math.sqrt(dt)

    out = np.empty((n_paths, len(times)))
    chunk = max(32, min(4096, _CHUNK_TARGET // (n_steps + 1)))
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        gens = [np.random.Generator(np.random.PCG64(seed_base + done + i))
                for i in range(m)]
        d_b = np.stack([g.standard_normal(n_steps) for g in gens]) * sq
        b = np.concatenate([np.zeros((m, 1)), np.cumsum(d_b, axis=1)], axis=1)
        g_vals = lp.lam * np.exp(drift[None, :] + lp.sigma * b)
        int_g = np.concatenate(
            [np.zeros((m, 1)),
             np.cumsum(0.5 * dt * (g_vals[:, 1:] + g_vals[:, :-1]), axis=1)],
            axis=1)
        out[done:done + m] = (g_vals[:, idx] / (1.0 + lp.b * int_g[:, idx]))
        done += m
    return out


def system_sample_values(params: ModelParams, times: Sequence[float],
                         n_paths: int, seed_base: int, dt: float = 1e-3,
                         rho: float = 0.0,
                         time_average_x: bool = False):
    """Log-Euler samples of (X, Y) at the requested grid times.

    Returns (x_vals, y_vals) of shape (n_paths, n_times); with
    time_average_x also the per-path trapezoid time average of X over the
    whole horizon, as a third array.
    """
    times = list(times)
    idx = [_grid_index(t, dt) for t in times]
    n_steps = max(idx)
    if n_steps < 1:
        raise ValueError("need at least one positive recording time")
    record_at = {k: j for j, k in enumerate(idx)}
    p = params
    sq = math.sqrt(dt)
    corr = math.sqrt(1.0 - rho * rho)

    gens1 = [np.random.Generator(np.random.PCG64(seed_base + i))
             for i in range(n_paths)]
    gens2 = [np.random.Generator(np.random.PCG64(seed_base + i + SEED_STRIDE))
             for i in range(n_paths)]
    lx = np.full(n_paths, math.log(p.x0))
    ly = np.full(n_paths, math.log(p.y0))
    x = np.exp(lx)
    y = np.exp(ly)
    x_out = np.empty((n_paths, len(times)))
    y_out = np.empty((n_paths, len(times)))
    if 0 in record_at:
        x_out[:, record_at[0]] = x
        y_out[:, record_at[0]] = y
    avg = np.zeros(n_paths) if time_average_x else None

    block = max(16, min(1024, _CHUNK_TARGET // max(n_paths, 1)))
    done = 0
    while done < n_steps:
        m = min(block, n_steps - done)
        d_b1 = np.stack([g.standard_normal(m) for g in gens1]) * sq
        d_b2 = np.stack([g.standard_normal(m) for g in gens2]) * sq
        if rho != 0.0:
            d_b2 = rho * d_b1 + corr * d_b2
        for j in range(m):
            x_prev = x
            lx = lx + (log_drift(p.a1, p.sigma1, p.b1, x)
                       - p.c1 * (y / (p.beta + y))) * dt \
                + p.sigma1 * d_b1[:, j]
            ly = ly + (log_drift(-p.a2, p.sigma2, p.b2, y)
                       + p.c2 * x / (p.beta + y)) * dt + p.sigma2 * d_b2[:, j]
            x = np.exp(lx)
            y = np.exp(ly)
            if avg is not None:
                avg += 0.5 * dt * (x_prev + x)
            k = done + j + 1
            if k in record_at:
                x_out[:, record_at[k]] = x
                y_out[:, record_at[k]] = y
        done += m

    if time_average_x:
        return x_out, y_out, avg / (n_steps * dt)
    return x_out, y_out


def mc_moment(params: ModelParams, p: float, q: float, t: float,
              n_paths: int, seed_base: int, dt: float = 1e-3,
              rho: float = 0.0) -> McEstimate:
    """Sample estimate of E[X(t)^p Y(t)^q] with its standard error."""
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    x_vals, y_vals = system_sample_values(params, [t], n_paths, seed_base,
                                          dt=dt, rho=rho)
    vals = x_vals[:, 0] ** p * y_vals[:, 0] ** q
    if not np.isfinite(vals).all():
        raise McOverflowError(
            f"X^{p} Y^{q} overflowed on {np.count_nonzero(~np.isfinite(vals))} "
            f"of {n_paths} paths")
    return McEstimate(mean=float(vals.mean()),
                      std_err=float(vals.std(ddof=1) / math.sqrt(n_paths)),
                      n_paths=n_paths, seed_base=seed_base)


def mc_cdf(params: ModelParams, levels, t: float, n_paths: int,
           seed_base: int, marginal: Literal["x", "y", "joint"] = "x",
           dt: float = 1e-3, rho: float = 0.0) -> list[McEstimate]:
    """Empirical CDF values with binomial standard errors.

    `levels` is a sequence of z values for the marginals, or of (z1, z2)
    pairs for the joint frequency P(X <= z1, Y <= z2).
    """
    x_vals, y_vals = system_sample_values(params, [t], n_paths, seed_base,
                                          dt=dt, rho=rho)
    x1 = x_vals[:, 0]
    y1 = y_vals[:, 0]
    out = []
    for level in levels:
        if marginal == "x":
            hits = x1 <= level
        elif marginal == "y":
            hits = y1 <= level
        elif marginal == "joint":
            z1, z2 = level
            hits = (x1 <= z1) & (y1 <= z2)
        else:
            raise ValueError(f"marginal must be x, y or joint, got {marginal!r}")
        freq = float(hits.mean())
        se = math.sqrt(freq * (1.0 - freq) / n_paths)
        out.append(McEstimate(mean=freq, std_err=se, n_paths=n_paths,
                              seed_base=seed_base))
    return out


def mc_ergodic_average(model: ModelParams | LogisticParams, t_end: float,
                       dt: float, seed: int) -> float:
    """Trapezoid time average of the prey baseline over [0, t_end], one path.

    In the persistent regime a > sigma^2/2 the average converges to the
    stationary mean (a - sigma^2/2)/b.  t_end = 0 returns the initial value.
    """
    lp = model.prey_logistic if isinstance(model, ModelParams) else model
    if t_end == 0.0:
        return lp.lam
    n_steps = int(round(t_end / dt))
    path = sample_path(t_end, n_steps, seed)
    l_vals = logistic_exact(lp, path).l
    total = path.dt * (0.5 * l_vals[0] + l_vals[1:-1].sum() + 0.5 * l_vals[-1])
    return float(total / t_end)


def mc_system_time_average(params: ModelParams, t_end: float, dt: float,
                           n_paths: int, seed_base: int) -> np.ndarray:
    """Per-path trapezoid time averages of X over [0, t_end]."""
    _, _, avg = system_sample_values(params, [t_end], n_paths, seed_base,
                                     dt=dt, time_average_x=True)
    return avg
