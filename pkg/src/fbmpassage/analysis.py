"""Least-squares fits and table assembly for decay-rate studies.

The central question these fits answer: how fast does the gap between the
fractional and Brownian passage functionals close as the Hurst index
approaches 1/2 from above?  A linear fit of gap against (H - 1/2) measures
proportionality; a log-log fit measures the decay exponent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RegressionFit",
    "linear_fit",
    "rate_exponent",
    "assemble_gap_table",
    "pivot_wide",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RegressionFit:
    """Ordinary least squares y = intercept + slope * x.

    Residuals are y - fitted, kept in input order; slope_se is the usual
    OLS standard error (zero when n == 2 leaves no residual freedom).
    """

    slope: float
    intercept: float
    r_squared: float
    residuals: np.ndarray
    n: int
    slope_se: float


def linear_fit(xs, ys, weights=None) -> RegressionFit:
    """Least-squares line through (xs, ys), optionally weighted.

    Unweighted by default; pass `weights` (e.g. 1/se^2) for a weighted fit.
    Requires at least two points with non-degenerate x spread.  Residuals
    satisfy sum(w * r) = 0 and sum(w * r * x) = 0 up to roundoff.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or y.shape != x.shape:
        raise ValueError(f"x and y must be 1-d of equal length, got {x.shape} vs {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least two points, got {n}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("fit inputs must be finite")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape or not np.isfinite(w).all() or np.any(w <= 0.0):
            raise ValueError("weights must be positive, finite and match x in length")
    sw = w.sum()
    x_bar = float((w * x).sum() / sw)
    y_bar = float((w * y).sum() / sw)
    dx = x - x_bar
    sxx = float((w * dx * dx).sum())
    if sxx <= 0.0:
        raise ValueError("x values are degenerate (no spread); cannot fit a slope")
    slope = float((w * dx * (y - y_bar)).sum() / sxx)
    intercept = y_bar - slope * x_bar
    residuals = y - (intercept + slope * x)
    ss_res = float((w * residuals * residuals).sum())
    ss_tot = float((w * (y - y_bar) ** 2).sum())
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    slope_se = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    return RegressionFit(slope, intercept, r_squared, residuals, n, slope_se)


def rate_exponent(h_values, gaps, gap_ses=None) -> RegressionFit:
    """Log-log fit log(gap) = const + beta * log(H - 1/2).

    The slope beta estimates the decay exponent of the gap as H approaches
    1/2.  Gaps that are non-positive, or within two standard errors of zero
    when `gap_ses` is given, carry no log-scale signal and are dropped with
    a log note.
    """
    h = np.asarray(h_values, dtype=float)
    g = np.asarray(gaps, dtype=float)
    if h.shape != g.shape:
        raise ValueError(f"H and gap arrays must match, got {h.shape} vs {g.shape}")
    if np.any(h <= 0.5):
        raise ValueError("rate fit requires every H strictly above 1/2")
    keep = g > 0.0
    if gap_ses is not None:
        ses = np.asarray(gap_ses, dtype=float)
        if ses.shape != g.shape:
            raise ValueError("gap_ses must match gaps in length")
        keep &= g >= 2.0 * ses
    if not keep.all():
        logger.warning(
            "rate fit dropped %d gap(s) at H=%s (non-positive or within 2 SE of zero)",
            int((~keep).sum()),
            np.array2string(h[~keep], precision=4),
        )
    if keep.sum() < 2:
        raise ValueError("fewer than two usable gaps for the log-log rate fit")
    return linear_fit(np.log(h[keep] - 0.5), np.log(g[keep]))


def assemble_gap_table(estimates, reference_row) -> list[dict]:
    """Flatten a (H x lambda) grid of estimates into gap-table rows.

    Args:
        estimates: sequence of rows, one per Hurst value, each a sequence of
            LaplaceEstimate (or None for a missing cell) ordered by lambda.
        reference_row: per-lambda references (floats or LaplaceEstimate),
            typically the H = 1/2 row.

    Returns:
        Rows as dicts with keys (hurst, lam, value, std_error, gap, gap_se),
        sorted by Hurst then lambda.

    Raises:
        ValueError: listing every missing cell, or on lambda mismatches.
    """
    from .estimate import gap_estimate  # local import: estimate depends on analysis

    missing = []
    rows = []
    n_cols = len(reference_row)
    for i, est_row in enumerate(estimates):
        if len(est_row) != n_cols:
            raise ValueError(
                f"row {i} has {len(est_row)} cells but the reference has {n_cols}"
            )
        for j, est in enumerate(est_row):
            if est is None:
                missing.append((i, j))
                continue
            gap, gap_se = gap_estimate(est, reference_row[j])
            rows.append(
                {
                    "hurst": est.hurst,
                    "lam": est.lam,
                    "value": est.value,
                    "std_error": est.std_error,
                    "gap": gap,
                    "gap_se": gap_se,
                }
            )
    if missing:
        raise ValueError(f"gap table has missing cells at (row, column): {missing}")
    rows.sort(key=lambda r: (r["hurst"], r["lam"]))
    return rows


def pivot_wide(rows: list[dict]) -> tuple[list[str], list[list[float]]]:
    """Pivot gap-table rows into one row per H: [H, value, gap, value, gap, ...].

    Column count is 2 * (number of lambdas) + 1, mirroring a side-by-side
    transform/gap table layout.
    """
    lams = sorted({r["lam"] for r in rows})
    header = ["H"]
    for lam in lams:
        header += [f"value_lam{lam:g}", f"gap_lam{lam:g}"]
    by_h: dict[float, dict[float, dict]] = {}
    for r in rows:
        by_h.setdefault(r["hurst"], {})[r["lam"]] = r
    table = []
    for h in sorted(by_h):
        cells = by_h[h]
        if sorted(cells) != lams:
            raise ValueError(f"incomplete lambda set for H={h}: {sorted(cells)}")
        line = [h]
        for lam in lams:
            line += [cells[lam]["value"], cells[lam]["gap"]]
        table.append(line)
    return header, table
