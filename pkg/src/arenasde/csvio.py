"""CSV emission with a stable, versioned schema.

Every file starts with a `# schema=...` line naming the format version and
the row kind, followed by a header row.  Values are comma separated with '.'
decimals, written at full double precision.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from .brownian import BrownianPath
from .envelopes import envelope_samples
from .model import ModelParams
from .simulate import TrajectoryBundle

__all__ = [
    "SCHEMA_VERSION",
    "write_csv",
    "write_brownian_csv",
    "write_bundle_csv",
    "BRACKET_HEADER",
    "MC_HEADER",
]

SCHEMA_VERSION = "arenasde-csv/1"

BRACKET_HEADER = ["quantity", "p", "q", "z1", "z2", "t", "lower", "upper",
                  "err_lo", "err_hi", "regime_tag", "validity_warning",
                  "k2_variant", "mc_estimate", "mc_std_err", "mc_verdict"]
MC_HEADER = ["quantity", "level", "estimate", "std_err", "n_paths",
             "seed_base"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return "" if value is None else str(value)


def write_csv(dest: str | Path, kind: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with dest.open("w", newline="") as fh:
        fh.write(f"# schema={SCHEMA_VERSION} kind={kind}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_brownian_csv(path: BrownianPath, dest: str | Path) -> None:
    """Columns t, B, M, m (running max and min)."""
    rows = zip(path.t_grid, path.values, path.run_max, path.run_min)
    write_csv(dest, "brownian-path", ["t", "B", "M", "m"], rows)


def write_bundle_csv(bundle: TrajectoryBundle, params: ModelParams,
                     dest: str | Path, envelopes: bool = True) -> None:
    """Trajectory states plus, by default, the envelope columns."""
    if envelopes:
        samples = envelope_samples(bundle, params)
        header = ["t", "X", "Y", "L1", "L2", "G1", "G2", "intG1", "intG2",
                  "y_lo", "y_hi", "x_lo", "x_hi", "regime_used"]
        rows = (
            (t, x, y, l1, l2, g1, g2, ig1, ig2,
             s.y_lo, s.y_hi, s.x_lo, s.x_hi, s.regime_used)
            for t, x, y, l1, l2, g1, g2, ig1, ig2, s in zip(
                bundle.t_grid, bundle.x, bundle.y, bundle.l1, bundle.l2,
                bundle.g1, bundle.g2, bundle.int_g1, bundle.int_g2, samples))
    else:
        header = ["t", "X", "Y", "L1", "L2", "G1", "G2", "intG1", "intG2"]
        rows = zip(bundle.t_grid, bundle.x, bundle.y, bundle.l1, bundle.l2,
                   bundle.g1, bundle.g2, bundle.int_g1, bundle.int_g2)
    write_csv(dest, "trajectory", header, rows)
