"""Monte Carlo functionals of first-passage outcomes.

Estimators here reduce per-path quantities (hit times, suprema, argmax
times) to tables: Laplace transforms with standard errors, gaps against a
reference, hit-time histograms, truncated argmax moments and survival-tail
fits.  Censored paths contribute zero to Laplace functionals, which biases
every estimate downward by at most exp(-lambda * horizon); internally a
censored path carries +inf as its hit time so exp(-lambda * inf) = 0 falls
out of the same vectorized expression.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import runner
from .analysis import RegressionFit, linear_fit
from .fgn import Hurst, TimeGrid
from .passage import PassageOutcome

__all__ = [
    "NoHitsError",
    "LaplaceEstimate",
    "DensityHistogram",
    "SupremumStats",
    "laplace_estimator",
    "laplace_from_times",
    "gap_estimate",
    "density_histogram",
    "density_from_times",
    "supremum_stats",
    "conjecture_moment",
    "conjecture_moments",
    "tail_exponent",
    "tail_exponent_from_times",
]

logger = logging.getLogger(__name__)


class NoHitsError(ValueError):
    """Raised when an estimator needs hits and every path was censored."""


@dataclass(frozen=True)
class LaplaceEstimate:
    """Mean of exp(-lam * tau) over the sample, with its standard error.

    Censored paths contribute zero, so `value` underestimates the true
    transform; `censored` counts them.  `estimator` records which detector
    produced the hit times ('simple' or 'bridge').
    """

    value: float
    std_error: float
    lam: float
    hurst: float | None
    samples: int
    censored: int
    estimator: str = "simple"

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"Laplace estimate must lie in [0, 1], got {self.value}")
        if self.std_error < 0.0:
            raise ValueError(f"standard error must be non-negative, got {self.std_error}")
        if self.samples < 1:
            raise ValueError(f"need at least one sample, got {self.samples}")
        if not 0 <= self.censored <= self.samples:
            raise ValueError(f"censored count {self.censored} outside [0, {self.samples}]")


def _times_from_outcomes(outcomes) -> np.ndarray:
    times = np.empty(len(outcomes))
    for i, o in enumerate(outcomes):
        times[i] = o.hit_time if o.is_hit else np.inf
    return times


def laplace_from_times(
    times: np.ndarray,
    lam: float,
    hurst: float | None = None,
    estimator: str = "simple",
) -> LaplaceEstimate:
    """Laplace estimate from an array of hit times (+inf marks censoring)."""
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValueError(f"lambda must be positive, got {lam}")
    m = len(times)
    if m < 1:
        raise ValueError("cannot estimate from an empty sample")
    w = np.exp(-lam * times)
    s1 = math.fsum(w)
    s2 = math.fsum(w * w)
    value = s1 / m
    if m > 1:
        var = max(0.0, (s2 - s1 * s1 / m) / (m - 1))
        se = math.sqrt(var / m)
    else:
        se = 0.0
    censored = int(np.isinf(times).sum())
    return LaplaceEstimate(value, se, float(lam), hurst, m, censored, estimator)


def laplace_estimator(
    outcomes,
    lam: float,
    hurst: float | None = None,
    estimator: str = "simple",
) -> LaplaceEstimate:
    """Monte Carlo Laplace transform (1/M) sum of exp(-lam * tau).

    Args:
        outcomes: sequence of PassageOutcome; censored entries contribute 0.
        lam: transform argument, > 0.
        hurst, estimator: metadata recorded on the estimate.
    """
    return laplace_from_times(_times_from_outcomes(outcomes), lam, hurst, estimator)


def gap_estimate(estimate: LaplaceEstimate, reference) -> tuple[float, float]:
    """Gap reference - estimate and its standard error.

    `reference` is either an exact value (float, zero error contribution)
    or another LaplaceEstimate at the same lambda, whose error is combined
    in quadrature.
    """
    if isinstance(reference, LaplaceEstimate):
        if reference.lam != estimate.lam:
            raise ValueError(
                f"lambda mismatch between estimate ({estimate.lam}) and reference ({reference.lam})"
            )
        return reference.value - estimate.value, math.hypot(
            estimate.std_error, reference.std_error
        )
    return float(reference) - estimate.value, estimate.std_error


# ---------------------------------------------------------------------------
# hit-time density
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityHistogram:
    """Histogram of hit times normalized against the full sample count.

    mass[i] is a density height; sum(mass * widths) equals the fraction of
    samples that hit inside the window, so censored paths (and hits beyond
    the window) flatten the histogram instead of renormalizing it.
    """

    bin_edges: np.ndarray
    mass: np.ndarray
    samples: int
    hits: int
    censored: int


def density_from_times(
    times: np.ndarray, horizon: float, bins: int = 200, upper: float | None = None
) -> DensityHistogram:
    """Histogram from a hit-time array (+inf marks censoring)."""
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    m = len(times)
    if m < 1:
        raise ValueError("cannot histogram an empty sample")
    finite = np.isfinite(times)
    hits = int(finite.sum())
    if hits == 0:
        raise NoHitsError("every path was censored; no hit times to histogram")
    if upper is None:
        upper = min(horizon, 10.0)
    edges = np.linspace(0.0, upper, bins + 1)
    counts, _ = np.histogram(times[finite], bins=edges)
    widths = np.diff(edges)
    mass = counts / (m * widths)
    return DensityHistogram(edges, mass, m, hits, m - hits)


def density_histogram(outcomes, bins: int = 200, upper: float | None = None) -> DensityHistogram:
    """Hit-time histogram over [0, min(horizon, 10)] by default.

    The default window drops the far tail where the Laplace weights at the
    default lambda range are negligible; pass `upper` to widen it.
    """
    if len(outcomes) < 1:
        raise ValueError("cannot histogram an empty sample")
    horizon = outcomes[0].horizon
    return density_from_times(_times_from_outcomes(outcomes), horizon, bins, upper)


# ---------------------------------------------------------------------------
# running supremum and argmax
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupremumStats:
    """Supremum of a path over [0, r] and the first time attaining it."""

    r: float
    sup_value: float
    argmax_time: float


def supremum_stats(path, r: float) -> SupremumStats:
    """Grid supremum and first-argmax over [0, r]; ties resolve to the earliest index."""
    if r <= 0.0:
        raise ValueError(f"window must be positive, got {r}")
    n = path.grid.time_index(r)
    segment = path.values[: n + 1]
    i = int(segment.argmax())
    return SupremumStats(float(r), float(segment[i]), i * path.grid.step)


def conjecture_moments(
    h: Hurst,
    eta: float,
    p: float,
    r_values,
    grid: TimeGrid,
    samples: int,
    seed: int,
    workers: int = 1,
) -> list[tuple[float, float, float]]:
    """Truncated argmax moments E[1{sup <= 1 + eta} * argmax^{H*p}] for several windows.

    All windows share one set of simulated paths (each r reads a prefix of
    the same path), so estimates across r are coupled: differences between
    them are smoother than independent-run noise.

    Returns:
        List of (r, moment, std_error), in the order of r_values.
    """
    if not 2.0 < p < 3.0:
        raise ValueError(f"moment order p must lie in (2, 3), got {p}")
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    r_values = [float(r) for r in r_values]
    indices = tuple(grid.time_index(r) for r in r_values)
    for r in r_values:
        if r <= 0.0:
            raise ValueError(f"window must be positive, got {r}")
    sups, arg_times = runner.path_extremes(
        h, grid, samples, seed, indices, workers=workers
    )
    out = []
    exponent = h.value * p
    for j, r in enumerate(r_values):
        contrib = np.where(sups[:, j] <= 1.0 + eta, arg_times[:, j] ** exponent, 0.0)
        m = len(contrib)
        s1 = math.fsum(contrib)
        s2 = math.fsum(contrib * contrib)
        value = s1 / m
        var = max(0.0, (s2 - s1 * s1 / m) / (m - 1)) if m > 1 else 0.0
        out.append((r, value, math.sqrt(var / m)))
    return out


def conjecture_moment(
    h: Hurst,
    eta: float,
    p: float,
    r: float,
    grid: TimeGrid,
    samples: int,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    """Single-window truncated argmax moment; see conjecture_moments."""
    (_, value, se), = conjecture_moments(h, eta, p, [r], grid, samples, seed, workers)
    return value, se


# ---------------------------------------------------------------------------
# survival tail
# ---------------------------------------------------------------------------

def tail_exponent_from_times(times: np.ndarray, t_values) -> RegressionFit:
    """Log-log fit of the survival function P(tau >= t) against t.

    Survival estimates equal to 0 or 1 carry no log-scale information and
    are excluded (with a log note).  Censored paths count as surviving all
    t below the horizon.
    """
    t_values = np.asarray(list(t_values), dtype=float)
    if len(t_values) < 2:
        raise ValueError("need at least two time points for the tail fit")
    if np.any(t_values <= 0.0):
        raise ValueError("tail fit times must be positive")
    m = len(times)
    if m < 1:
        raise ValueError("cannot fit a tail from an empty sample")
    survival = np.array([(times >= t).sum() / m for t in t_values])
    usable = (survival > 0.0) & (survival < 1.0)
    if not usable.all():
        logger.warning(
            "tail fit dropped %d of %d survival points at the {0,1} boundary",
            int((~usable).sum()),
            len(t_values),
        )
    if usable.sum() < 2:
        raise NoHitsError("fewer than two usable survival estimates for the tail fit")
    return linear_fit(np.log(t_values[usable]), np.log(survival[usable]))


def tail_exponent(outcomes, t_values) -> RegressionFit:
    """Survival-tail exponent from passage outcomes; see tail_exponent_from_times."""
    return tail_exponent_from_times(_times_from_outcomes(outcomes), t_values)
