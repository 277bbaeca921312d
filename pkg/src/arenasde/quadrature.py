"""Deterministic quadrature backends for the bracket integrals.

Three integral shapes cover every bound formula in the package:

* ``halfline_gauss``     -- int_0^inf f(z) N_t(z) dz with N_t the Gaussian
  density of variance t.  Substituting z = sqrt(t) s turns the weight into the
  standard normal density and the domain into [0, 8] (8 standard deviations;
  the discarded tail is added to the error estimate).

* ``region_integral_2d`` -- integrals of h against the joint law of the
  Brownian endpoint and its running maximum (or minimum), restricted to an
  indicator region.  The wedge {v > 0, u < v} maps onto the positive quadrant
  via s = v, w = v - u (mirrored for the minimum), where the density becomes
  kappa(s + w) with kappa(r) = 2 (r/t) N_t(r).  For each outer node s the
  w-section of the region is located by bisection on the region predicate, so
  the payload h is only ever evaluated inside the region and the indicator
  discontinuity costs no accuracy.  kappa has the exact antiderivative
  -2 N_t, which integrates h == 1 sections in closed form.

* ``region_integral_3d`` -- the product of the 2D wedge law with an
  independent running-maximum factor 2 N_t(v2) on v2 > 0, integrated as a
  nested 1D(outer, v2) x 2D(wedge) rule.

All drivers are adaptive Gauss-Kronrod (G7, K15) bisection on panels; the
a-posteriori error estimate per panel is |K15 - G7| and the total must reach
the requested tolerance or a ``QuadratureError`` is raised.  Integrands and
region predicates must accept numpy arrays; panels are evaluated in batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .brownian import GaussianKernel

__all__ = [
    "QuadratureResult",
    "QuadratureError",
    "halfline_gauss",
    "region_integral_2d",
    "region_integral_3d",
    "full_region",
]

# Truncation radius for Gaussian-weighted domains, in standard deviations.
TRUNC_SDS = 8.0

# Gauss-Kronrod (7, 15) nodes on [-1, 1] and the paired weight sets.
_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_GK_WG = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])

_BISECT_ITERS = 52          # resolves section endpoints to ~1 ulp of the width
_INNER_PANELS = 8           # fixed K15 panels per located section interval
_PROBE_FRACS = np.unique(np.concatenate((
    [0.0], np.geomspace(1e-6, 1.0, 28), np.linspace(0.05, 1.0, 16))))


class QuadratureError(RuntimeError):
    """Raised when a tolerance cannot be met within the subdivision budget."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    err_est: float
    n_evals: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise QuadratureError(f"non-finite integral value {self.value!r}")


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod driver (vectorized over panels)
# ---------------------------------------------------------------------------

class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def _adaptive_gk(f, breakpoints, tol, *, max_panels=8192, counter=None,
                 two_channel=False):
    """Adaptively integrate a vectorized f over [breakpoints[0], breakpoints[-1]].

    f maps an array of abscissae to values, or to (values, co_values) when
    two_channel is set; the nonnegative co channel (used for nested inner
    error estimates) is integrated alongside with the same panels.  Returns
    (value, err_est, co_value).
    """
    lefts = np.asarray(breakpoints[:-1], dtype=float)
    rights = np.asarray(breakpoints[1:], dtype=float)

    def eval_panels(a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        xs = mid[:, None] + half[:, None] * _GK_NODES[None, :]
        if counter is not None:
            counter.n += xs.size
        out = f(xs.ravel())
        if two_channel:
            vals, co = out
            co = np.asarray(co, dtype=float).reshape(xs.shape)
        else:
            vals, co = out, None
        vals = np.asarray(vals, dtype=float).reshape(xs.shape)
        k = half * (vals * _GK_WK).sum(axis=1)
        g = half * (vals * _GK_WG).sum(axis=1)
        co_k = half * (co * _GK_WK).sum(axis=1) if co is not None else np.zeros_like(k)
        return k, np.abs(k - g), co_k

    vals, errs, cos = eval_panels(lefts, rights)
    while True:
        total = float(vals.sum())
        total_err = float(errs.sum())
        scale_floor = 5e-15 * float(np.abs(vals).sum() + 1e-300)
        if total_err <= max(tol, scale_floor):
            return total, total_err, float(cos.sum())
        if len(lefts) >= max_panels:
            raise QuadratureError(
                f"no convergence: {len(lefts)} panels, err {total_err:.3e} "
                f"> tol {tol:.3e}")
        split = errs > tol / (2.0 * len(lefts))
        if not split.any():
            split = errs >= errs.max()
        mids = 0.5 * (lefts[split] + rights[split])
        new_l = np.concatenate((lefts[split], mids))
        new_r = np.concatenate((mids, rights[split]))
        nv, ne, nc = eval_panels(new_l, new_r)
        lefts = np.concatenate((lefts[~split], new_l))
        rights = np.concatenate((rights[~split], new_r))
        vals = np.concatenate((vals[~split], nv))
        errs = np.concatenate((errs[~split], ne))
        cos = np.concatenate((cos[~split], nc))


# ---------------------------------------------------------------------------
# half-line Gaussian integral
# ---------------------------------------------------------------------------

def halfline_gauss(f, t: float, tol: float = 1e-6) -> QuadratureResult:
    """int_0^inf f(z) N_t(z) dz for bounded vectorized f.

    The domain is truncated at 8 sqrt(t); the discarded Gaussian mass, scaled
    by |f| at the cut, joins the error estimate.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    rt = math.sqrt(t)
    counter = _Counter()

    def g(s):
        return np.asarray(f(rt * s), dtype=float) * _std_normal_pdf(s)

    breakpoints = np.array([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0,
                            5.0, 6.0, TRUNC_SDS])
    value, err, _ = _adaptive_gk(g, breakpoints, tol, counter=counter)
    tail_mass = _std_normal_tail(TRUNC_SDS)
    f_cut = float(np.max(np.abs(np.asarray(f(np.array([rt * TRUNC_SDS]))))))
    err += tail_mass * max(1.0, f_cut)
    if err > tol:
        raise QuadratureError(f"halfline_gauss: err {err:.3e} > tol {tol:.3e}")
    return QuadratureResult(value=value, err_est=err, n_evals=counter.n)


def _std_normal_pdf(s):
    return np.exp(-0.5 * np.asarray(s, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)


def _std_normal_tail(s: float) -> float:
    return 0.5 * math.erfc(s / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# wedge integrals against the (endpoint, extremum) joint law
# ---------------------------------------------------------------------------

def full_region(*coords):
    """Region predicate that accepts everything (the unrestricted wedge)."""
    return np.ones_like(np.asarray(coords[0], dtype=float), dtype=bool)


def _wedge_transform(which: str):
    """Map quadrant coordinates (s, w) to wedge coordinates (u, v)."""
    if which == "with_max":
        return lambda s, w: (s - w, s)
    if which == "with_min":
        return lambda s, w: (w - s, -s)
    raise ValueError(f"which must be 'with_max' or 'with_min', got {which!r}")


def _locate_sections(region_sw, s_vals, w_caps):
    """Find, per s, the w-intervals where the region predicate holds.

    Probes the predicate on a fixed fraction grid of [0, w_cap] and bisects
    every sign change; returns a list of (w_lo, w_hi) interval lists.
    """
    n_s = len(s_vals)
    probes = w_caps[:, None] * _PROBE_FRACS[None, :]
    mask = region_sw(np.repeat(s_vals, probes.shape[1]),
                     probes.ravel()).reshape(probes.shape)

    flips = mask[:, 1:] != mask[:, :-1]
    idx_s, idx_p = np.nonzero(flips)
    lo = probes[idx_s, idx_p].copy()
    hi = probes[idx_s, idx_p + 1].copy()
    left_val = mask[idx_s, idx_p]
    s_cross = s_vals[idx_s]
    for _ in range(_BISECT_ITERS):
        if len(lo) == 0:
            break
        mid = 0.5 * (lo + hi)
        pm = region_sw(s_cross, mid)
        go_right = pm == left_val
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    cross_w = 0.5 * (lo + hi)

    # the state at w = 0 plus the ordered crossings determine the sections
    sections: list[list[tuple[float, float]]] = []
    per_s_crossings: list[list[float]] = [[] for _ in range(n_s)]
    for i, w in zip(idx_s, cross_w):
        per_s_crossings[i].append(float(w))
    for i in range(n_s):
        cuts = [0.0] + sorted(per_s_crossings[i]) + [float(w_caps[i])]
        inside = bool(mask[i, 0])
        ivals = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if inside and b > a:
                ivals.append((a, b))
            inside = not inside
        sections.append(ivals)
    return sections


def _wedge_inner(h_uv, region_uv, which, t, trunc_r, counter):
    """Build the outer integrand: s-array -> (inner values, inner errors)."""
    kern = GaussianKernel(t)
    to_uv = _wedge_transform(which)
    hmax_cell = [1.0]

    def region_sw(s, w):
        u, v = to_uv(s, w)
        return np.asarray(region_uv(u, v), dtype=bool)

    def inner(s_vals):
        s_vals = np.asarray(s_vals, dtype=float)
        w_caps = np.maximum(trunc_r - s_vals, 0.0)
        vals = np.zeros_like(s_vals)
        errs = np.zeros_like(s_vals)
        live = w_caps > 0.0
        if not live.any():
            return vals, errs
        s_live = s_vals[live]
        sections = _locate_sections(region_sw, s_live, w_caps[live])

        if h_uv is None:
            # closed-form inner integral: int kappa(s+w) dw = 2(N(r1) - N(r2))
            acc = np.zeros_like(s_live)
            for i, ivals in enumerate(sections):
                for (w1, w2) in ivals:
                    acc[i] += 2.0 * float(kern.pdf(s_live[i] + w1)
                                          - kern.pdf(s_live[i] + w2))
            vals[live] = acc
            return vals, errs

        # generic payload: fixed K15 panels per located interval
        pan_owner, pan_a, pan_b = [], [], []
        for i, ivals in enumerate(sections):
            for (w1, w2) in ivals:
                edges = np.linspace(w1, w2, _INNER_PANELS + 1)
                for j in range(_INNER_PANELS):
                    pan_owner.append(i)
                    pan_a.append(edges[j])
                    pan_b.append(edges[j + 1])
        acc = np.zeros_like(s_live)
        acc_err = np.zeros_like(s_live)
        if pan_owner:
            owner = np.array(pan_owner)
            a = np.array(pan_a)
            b = np.array(pan_b)
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            w_nodes = mid[:, None] + half[:, None] * _GK_NODES[None, :]
            s_nodes = np.broadcast_to(s_live[owner][:, None], w_nodes.shape)
            u, v = to_uv(s_nodes.ravel(), w_nodes.ravel())
            counter.n += u.size
            hv = np.asarray(h_uv(u, v), dtype=float).reshape(w_nodes.shape)
            hmax_cell[0] = max(hmax_cell[0], float(np.abs(hv).max(initial=0.0)))
            fv = hv * (2.0 * (s_nodes + w_nodes) / t) * kern.pdf(s_nodes + w_nodes)
            k = half * (fv * _GK_WK).sum(axis=1)
            g = half * (fv * _GK_WG).sum(axis=1)
            np.add.at(acc, owner, k)
            np.add.at(acc_err, owner, np.abs(k - g))
        vals[live] = acc
        errs[live] = acc_err
        return vals, errs

    return inner, hmax_cell


def _wedge_integral(h_uv, region_uv, which, t, tol, counter):
    """2D wedge integral in quadrant coordinates; returns (value, err_est)."""
    trunc_r = TRUNC_SDS * math.sqrt(t)
    inner, hmax_cell = _wedge_inner(h_uv, region_uv, which, t, trunc_r, counter)
    breakpoints = np.linspace(0.0, trunc_r, 13)
    value, err, inner_err = _adaptive_gk(
        inner, breakpoints, tol, counter=counter, two_channel=True)
    # mass of the joint law beyond the truncation radius, scaled by sup|h|
    phi8 = _std_normal_pdf(np.array([TRUNC_SDS]))[0]
    tail = 2.0 * TRUNC_SDS * phi8 + 2.0 * _std_normal_tail(TRUNC_SDS)
    err_total = err + inner_err + tail * hmax_cell[0]
    return value, err_total


def region_integral_2d(h, region, t: float,
                       which: Literal["with_max", "with_min"],
                       tol: float = 1e-5) -> QuadratureResult:
    """Integrate h against the (B(t), extremum) joint law over a region.

    ``region(u, v)`` is a vectorized predicate on the original coordinates
    (endpoint u, extremum v); it must cut each w-section of the wedge into
    finitely many intervals (any intersection of half-plane-like constraints
    does).  ``h(u, v)`` is the vectorized payload, or None for h == 1, in
    which case the inner integral uses the exact kernel antiderivative.  The
    payload is evaluated only inside the region.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    counter = _Counter()
    value, err = _wedge_integral(h, region, which, t, tol, counter)
    if err > tol:
        raise QuadratureError(f"region_integral_2d: err {err:.3e} > tol {tol:.3e}")
    return QuadratureResult(value=value, err_est=err, n_evals=counter.n)


def region_integral_3d(h, region, t: float, tol: float = 1e-4) -> QuadratureResult:
    """Integrate h against the product law (B1(t), M1(t)) x M2(t) over a region.

    The density factorizes as [wedge law in (u1, v1)] x [2 N_t(v2) on v2 > 0],
    so the integral nests a with_max wedge integral (inner) inside an adaptive
    half-line rule in v2 (outer).  ``region(u1, v1, v2)`` and ``h(u1, v1, v2)``
    are vectorized; h may be None for h == 1.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    counter = _Counter()
    kern = GaussianKernel(t)
    trunc = TRUNC_SDS * math.sqrt(t)
    inner_tol = tol / 6.0

    def outer(v2_arr):
        v2_arr = np.asarray(v2_arr, dtype=float)
        vals = np.empty_like(v2_arr)
        errs = np.empty_like(v2_arr)
        for i, v2 in enumerate(v2_arr):
            h2 = None if h is None else (
                lambda u, v, _v2=v2: h(u, v, np.full_like(u, _v2)))
            reg2 = (lambda u, v, _v2=v2:
                    region(u, v, np.full_like(np.asarray(u, dtype=float), _v2)))
            val, err = _wedge_integral(h2, reg2, "with_max", t,
                                       inner_tol, counter)
            weight = 2.0 * float(kern.pdf(v2))
            vals[i] = weight * val
            errs[i] = weight * err
        return vals, errs

    breakpoints = np.linspace(0.0, trunc, 9)
    value, err, inner_err = _adaptive_gk(
        outer, breakpoints, tol, counter=counter, two_channel=True,
        max_panels=512)
    err_total = err + inner_err + 2.0 * _std_normal_tail(TRUNC_SDS)
    if err_total > tol:
        raise QuadratureError(f"region_integral_3d: err {err_total:.3e} > tol {tol:.3e}")
    return QuadratureResult(value=value, err_est=err_total, n_evals=counter.n)
