"""Batch command-line front end.

Verbs:
  regime    -- classify the configured parameters, print thresholds
  simulate  -- write trajectory CSVs with envelope columns
  bounds    -- evaluate moment/CDF brackets into a CSV, optionally MC-checked
  validate  -- run the validation battery; nonzero exit on any failure

Every command is a pure function of its config file (all seeds included), so
reruns reproduce outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .brackets import (K2Variant, OutOfDomainError, cdf_joint_upper,
                       cdf_lower_x, cdf_lower_y, cdf_upper_x, cdf_upper_y,
                       joint_moment_lower, joint_moment_upper,
                       moment_lower_x, moment_lower_y)
from .brownian import sample_path
from .config import (ConfigError, RunConfig, load_config, reference_config,
                     reference_params, REFERENCE_SIGMA_PAIRS)
from .csvio import BRACKET_HEADER, MC_HEADER, write_bundle_csv, write_csv
from .model import classify_regime, gamma_stationary, novikov_threshold
from .montecarlo import mc_cdf, mc_moment
from .simulate import simulate_system, system_seeds
from .validation import CHECK_NAMES, run_all


def _add_common(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="config file (flat key=value text or JSON); "
                             "defaults to the built-in reference set at "
                             "sigma=(0.5, 0.3)")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: config out_dir)")
    parser.add_argument("--k2-variant", choices=[v.value for v in K2Variant],
                        default=None,
                        help="predator-constant sign convention; 'corrected' "
                             "(the validated default) or 'as-printed'")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else reference_config()
    if args.k2_variant:
        cfg = replace(cfg, k2_variant=K2Variant(args.k2_variant))
    if args.out:
        cfg = replace(cfg, out_dir=str(args.out))
    return cfg


def _regime_payload(cfg: RunConfig) -> dict:
    params = cfg.params
    regime = classify_regime(params)
    payload = {
        "regime": regime.tag.value,
        "phi": regime.phi,
        "stationary_threshold": regime.stationary_threshold,
        "novikov": None,
        "prey_gamma_law": None,
    }
    if params.sigma2 > 0.0:
        nov = novikov_threshold(params)
        payload["novikov"] = {"threshold": nov.threshold,
                              "satisfied": nov.satisfied}
    try:
        law = gamma_stationary(params.prey_logistic)
        payload["prey_gamma_law"] = {"shape": law.shape, "rate": law.rate,
                                     "mean": law.mean}
    except ValueError:
        pass
    return payload


def cmd_regime(args) -> int:
    cfg = _load(args)
    payload = _regime_payload(cfg)
    if args.json:
        print(json.dumps(payload, indent=2))
        return 0
    print(f"regime: {payload['regime']}")
    print(f"phi: {payload['phi']:.6g}")
    st = payload["stationary_threshold"]
    print(f"stationary threshold: "
          f"{'undefined (a2 + sigma2^2/2 >= c2)' if st is None else f'{st:.6g}'}")
    nov = payload["novikov"]
    if nov is None:
        print("novikov threshold: undefined (sigma2 = 0)")
    else:
        print(f"novikov threshold: {nov['threshold']:.6g} "
              f"(beta {'satisfies' if nov['satisfied'] else 'violates'} it)")
    law = payload["prey_gamma_law"]
    if law is None:
        print("prey baseline: no stationary law (a1 <= sigma1^2/2)")
    else:
        print(f"prey baseline stationary law: Gamma(shape={law['shape']:.6g}, "
              f"rate={law['rate']:.6g}), mean {law['mean']:.6g}")
    return 0


def _write_preset_runs(cfg: RunConfig, out: Path) -> list[Path]:
    """The two reference noise pairs plus a noiseless run, shared seeds."""
    n_steps = int(round(cfg.t_end / cfg.dt))
    written = []
    s1, s2 = system_seeds(cfg.seed_base, 0)
    bp1 = sample_path(cfg.t_end, n_steps, s1)
    bp2 = sample_path(cfg.t_end, n_steps, s2)
    for sig1, sig2 in REFERENCE_SIGMA_PAIRS:
        params = reference_params(sig1, sig2)
        bundle = simulate_system(params, bp1, bp2, rho=cfg.rho)
        dest = out / f"preset_sigma_{sig1}_{sig2}.csv"
        write_bundle_csv(bundle, params, dest)
        written.append(dest)
    det = reference_params(0.5, 0.3, sigma1=0.0, sigma2=0.0)
    bundle = simulate_system(det, bp1, bp2, rho=cfg.rho)
    dest = out / "preset_deterministic.csv"
    write_bundle_csv(bundle, det, dest)
    written.append(dest)
    return written


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.figure2:
            written = _write_preset_runs(cfg, out)
        else:
            n_paths = args.n_paths or cfg.n_paths
            n_steps = int(round(cfg.t_end / cfg.dt))
            written = []
            for i in range(n_paths):
                s1, s2 = system_seeds(cfg.seed_base, i)
                bundle = simulate_system(
                    cfg.params,
                    sample_path(cfg.t_end, n_steps, s1),
                    sample_path(cfg.t_end, n_steps, s2), rho=cfg.rho)
                dest = out / f"bundle_{i:05d}.csv"
                write_bundle_csv(bundle, cfg.params, dest)
                written.append(dest)
    except OSError as exc:
        print(f"error: cannot write outputs under {out}: {exc}",
              file=sys.stderr)
        return 1
    for dest in written:
        print(dest)
    return 0


def _parse_moment_spec(spec: str):
    try:
        p, q, t = (float(x) for x in spec.split(","))
        return p, q, t
    except ValueError:
        raise SystemExit(f"bad --moment spec {spec!r}; expected P,Q,T")


def _parse_cdf_spec(spec: str):
    try:
        kind, rest = spec.split(":", 1)
        levels, t = rest.split("@")
        zs = tuple(float(x) for x in levels.split(","))
        t = float(t)
    except ValueError:
        raise SystemExit(f"bad --cdf spec {spec!r}; expected "
                         f"x:Z@T, y:Z@T or joint:Z1,Z2@T")
    if kind not in ("x", "y", "joint") or \
            len(zs) != (2 if kind == "joint" else 1):
        raise SystemExit(f"bad --cdf spec {spec!r}")
    return kind, zs, t


def _bracket_rows(cfg: RunConfig, moments, cdfs, validate_mc: bool):
    params = cfg.params
    tag = classify_regime(params).tag.value
    variant = cfg.k2_variant

    def mc_verdict(kind, side, value, err, mc_est):
        slack = 3.0 * mc_est.std_err + err
        if side == "lower":
            ok = value - slack <= mc_est.mean
        else:
            ok = mc_est.mean <= value + slack
        return mc_est.mean, mc_est.std_err, "inside" if ok else "OUTSIDE"

    for p, q, t in moments:
        mc_est = None
        if validate_mc:
            mc_est = mc_moment(params, p, q, t, cfg.n_paths, cfg.seed_base,
                               dt=cfg.dt, rho=cfg.rho)
        ops = [("upper", lambda: joint_moment_upper(params, p, q, t, variant,
                                                    tol=cfg.tol_1d)),
               ("lower", lambda: joint_moment_lower(params, p, q, t, variant,
                                                    tol=cfg.tol_1d))]
        if q == 0:
            ops.append(("lower", lambda: moment_lower_x(params, p, t, variant,
                                                        tol=cfg.tol_3d)))
        if p == 0:
            ops.append(("lower", lambda: moment_lower_y(params, q, t, variant,
                                                        tol=cfg.tol_1d)))
        for side, op in ops:
            row = {"p": p, "q": q, "z1": None, "z2": None, "t": t,
                   "k2_variant": variant.value, "regime_tag": tag}
            try:
                res = op()
            except OutOfDomainError as exc:
                yield {**row, "quantity": "joint-moment-upper",
                       "validity_warning": f"out of domain: {exc}"}
                continue
            row["quantity"] = res.source
            row[side] = res.value
            row["err_lo" if side == "lower" else "err_hi"] = res.err_est
            row["validity_warning"] = res.regime_warning
            if mc_est is not None:
                m, s, verdict = mc_verdict("moment", side, res.value,
                                           res.err_est, mc_est)
                row.update(mc_estimate=m, mc_std_err=s, mc_verdict=verdict)
            yield row

    for kind, zs, t in cdfs:
        if kind == "x":
            ops = [("lower", lambda: cdf_lower_x(params, zs[0], t,
                                                 tol=cfg.tol_2d)),
                   ("upper", lambda: cdf_upper_x(params, zs[0], t, variant,
                                                 tol=cfg.tol_3d))]
        elif kind == "y":
            ops = [("lower", lambda: cdf_lower_y(params, zs[0], t, variant,
                                                 tol=cfg.tol_2d)),
                   ("upper", lambda: cdf_upper_y(params, zs[0], t, variant,
                                                 tol=cfg.tol_2d))]
        else:
            ops = [("upper", lambda: cdf_joint_upper(params, zs[0], zs[1], t,
                                                     variant,
                                                     tol=cfg.tol_2d))]
        mc_est = None
        if validate_mc:
            levels = [zs[0] if kind != "joint" else (zs[0], zs[1])]
            mc_est = mc_cdf(params, levels, t, cfg.n_paths, cfg.seed_base,
                            marginal=kind, dt=cfg.dt, rho=cfg.rho)[0]
        for side, op in ops:
            res = op()
            row = {"quantity": res.source, "p": None, "q": None,
                   "z1": zs[0], "z2": zs[1] if kind == "joint" else None,
                   "t": t, side: res.value,
                   ("err_lo" if side == "lower" else "err_hi"): res.err_est,
                   "regime_tag": tag, "k2_variant": variant.value,
                   "validity_warning": res.regime_warning}
            if mc_est is not None:
                m, s, verdict = mc_verdict("cdf", side, res.value,
                                           res.err_est, mc_est)
                row.update(mc_estimate=m, mc_std_err=s, mc_verdict=verdict)
            yield row


def cmd_bounds(args) -> int:
    cfg = _load(args)
    moments = [_parse_moment_spec(s) for s in args.moment or []]
    cdfs = [_parse_cdf_spec(s) for s in args.cdf or []]
    if not moments and not cdfs:
        print("error: give at least one --moment P,Q,T or --cdf spec",
              file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    rows = []
    for row in _bracket_rows(cfg, moments, cdfs, args.validate_mc):
        rows.append([row.get(k) for k in BRACKET_HEADER])
    dest = out / "bounds.csv"
    write_csv(dest, "brackets", BRACKET_HEADER, rows)
    print(dest)
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    results = run_all(cfg, quick=args.quick, fault=args.inject_fault,
                      only=args.only or None)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:26s} "
              f"[{r.seconds:6.1f}s]  {r.detail}")
    verdict = {
        "all_passed": all(r.passed for r in results),
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail,
                    "seconds": r.seconds, "metrics": r.metrics}
                   for r in results],
    }
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / "validation.json"
    dest.write_text(json.dumps(verdict, indent=2, default=str))
    print(f"verdict written to {dest}")
    return 0 if verdict["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arenasde",
        description="stochastic foraging-arena predator-prey toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regime", help="classify parameters and thresholds")
    _add_common(p)
    p.add_argument("--json", action="store_true", help="machine-readable form")
    p.set_defaults(fn=cmd_regime)

    p = sub.add_parser("simulate", help="write trajectory CSVs with envelopes")
    _add_common(p)
    p.add_argument("--figure2", action="store_true",
                   help="run the built-in reproduction preset: both reference "
                        "noise pairs plus a noiseless run on shared seeds")
    p.add_argument("--n-paths", type=int, default=None,
                   help="override the number of bundles")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("bounds", help="evaluate brackets into a CSV")
    _add_common(p)
    p.add_argument("--moment", action="append", metavar="P,Q,T",
                   help="moment order pair and horizon (repeatable)")
    p.add_argument("--cdf", action="append", metavar="SPEC",
                   help="CDF level spec: x:Z@T, y:Z@T or joint:Z1,Z2@T "
                        "(repeatable)")
    p.add_argument("--validate-mc", action="store_true",
                   help="add Monte Carlo estimates and containment verdicts")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("validate", help="run the validation battery")
    _add_common(p)
    p.add_argument("--quick", action="store_true",
                   help="reduced path counts (same checks)")
    p.add_argument("--only", action="append", choices=CHECK_NAMES,
                   help="run only the named checks (repeatable)")
    p.add_argument("--inject-fault", default=None,
                   help="testing aid: named fault, e.g. flip-envelope")
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
