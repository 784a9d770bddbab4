"""Deterministic chunked Monte Carlo driver.

Paths are indexed 0..samples-1.  Consecutive indices (2k, 2k+1) form a pair
drawn from one complex FFT whose Gaussian stream is keyed by (master_seed,
GAUSSIAN_STREAM, k); bridge uniforms for path m come from (master_seed,
UNIFORM_STREAM, m).  Every per-path output therefore depends only on the
master seed and the path index, so results are identical for any worker
count and any chunk size; chunking exists purely to bound memory and to
let chunks run on separate processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fgn import Hurst, TimeGrid, circulant_spectrum, _sample_pair_raw
from .passage import _bridge_hit_times_batch, _simple_hit_times_batch
from .rng import GAUSSIAN_STREAM, UNIFORM_STREAM, substream
from .sde import (
    Coefficients,
    _euler_batch,
    build_lamperti,
    diffusion_from_name,
    drift_from_name,
    threshold_transform,
)

__all__ = ["SimulationJob", "SimulationResult", "run_simulation", "passage_times", "marginal_values", "path_extremes"]

DEFAULT_CHUNK_PAIRS = 128


@dataclass(frozen=True)
class SimulationJob:
    """Complete, picklable description of one Monte Carlo experiment.

    Workers reconstruct everything (spectrum, reduction map) from this
    record, so a chunk can be computed anywhere and the result depends only
    on the job and the chunk index.
    """

    hurst: float
    horizon: float
    steps: int
    samples: int
    master_seed: int
    threshold: float = 1.0
    x0: float = 0.0
    drift: str = "zero"
    diffusion: str = "one"
    map_lo: float | None = None
    map_hi: float | None = None
    want_simple: bool = True
    want_bridge: bool = False
    marginal_indices: tuple[int, ...] = ()
    extreme_indices: tuple[int, ...] = ()
    chunk_pairs: int = DEFAULT_CHUNK_PAIRS

    @property
    def is_pure(self) -> bool:
        """True when the path is raw fBm shifted by x0 (no drift, unit diffusion)."""
        return self.drift == "zero" and self.diffusion == "one"


@dataclass(eq=False)
class SimulationResult:
    """Per-path outputs assembled in path-index order."""

    tau_simple: np.ndarray | None = None
    tau_bridge: np.ndarray | None = None
    marginals: np.ndarray | None = None
    sup_values: np.ndarray | None = None
    argmax_times: np.ndarray | None = None


@lru_cache(maxsize=16)
def _spectrum_cached(hurst: float, horizon: float, steps: int) -> np.ndarray:
    return circulant_spectrum(Hurst(hurst), TimeGrid(horizon, steps))


@lru_cache(maxsize=8)
def _reduction_cached(drift: str, diffusion: str, x0: float, threshold: float, lo: float, hi: float):
    coeffs = Coefficients(drift_from_name(drift), diffusion_from_name(diffusion))
    lamperti = build_lamperti(coeffs, x0, (lo, hi))
    return lamperti, threshold_transform(lamperti, threshold)


def _auto_range(x0: float, threshold: float) -> tuple[float, float]:
    # wide enough that typical excursions stay tabulated; extension warnings
    # flag the rest
    d = max(1.0, abs(threshold - x0))
    return (min(x0, threshold) - 10.0 * d, max(x0, threshold) + 10.0 * d)


def _reduced_threshold(job: SimulationJob) -> float:
    if job.is_pure:
        return job.threshold - job.x0
    lo, hi = job.map_lo, job.map_hi
    if lo is None or hi is None:
        lo, hi = _auto_range(job.x0, job.threshold)
    _, thr = _reduction_cached(job.drift, job.diffusion, job.x0, job.threshold, lo, hi)
    return thr


def _chunk_compute(job: SimulationJob, chunk_index: int):
    """All per-path outputs for one chunk of consecutive path pairs."""
    grid = TimeGrid(job.horizon, job.steps)
    steps, step = job.steps, grid.step
    pairs_total = (job.samples + 1) // 2
    p0 = chunk_index * job.chunk_pairs
    pc = min(job.chunk_pairs, pairs_total - p0)
    spectrum = _spectrum_cached(job.hurst, job.horizon, job.steps)

    inc = np.empty((2 * pc, steps))
    for i in range(pc):
        gen = substream(job.master_seed, GAUSSIAN_STREAM, p0 + i)
        a, b = _sample_pair_raw(spectrum, steps, gen)
        inc[2 * i] = a
        inc[2 * i + 1] = b
    values = np.empty((2 * pc, steps + 1))
    values[:, 0] = 0.0
    np.cumsum(inc, axis=1, out=values[:, 1:])

    lamperti = None
    if job.is_pure:
        paths = values
        if job.x0 != 0.0:
            paths += job.x0
        thr = job.threshold
    else:
        lo, hi = job.map_lo, job.map_hi
        if lo is None or hi is None:
            lo, hi = _auto_range(job.x0, job.threshold)
        lamperti, thr = _reduction_cached(job.drift, job.diffusion, job.x0, job.threshold, lo, hi)
        paths = _euler_batch(lamperti.reduced_drift, 0.0, values, step)

    first_path = 2 * p0
    n_valid = min(2 * pc, job.samples - first_path)
    paths = paths[:n_valid]

    tau_simple = tau_bridge = marginals = sups = args = None
    if job.want_simple:
        tau_simple = _simple_hit_times_batch(paths, thr, step)
    if job.want_bridge:
        uniforms = np.empty((n_valid, steps))
        for j in range(n_valid):
            uniforms[j] = substream(job.master_seed, UNIFORM_STREAM, first_path + j).random(steps)
        step_var = step ** (2.0 * job.hurst)
        tau_bridge = _bridge_hit_times_batch(paths, thr, step, step_var, uniforms)
    if job.marginal_indices:
        marginals = paths[:, list(job.marginal_indices)].copy()
        if lamperti is not None:
            marginals = lamperti.inverse(marginals)
    if job.extreme_indices:
        k = len(job.extreme_indices)
        sups = np.empty((n_valid, k))
        args = np.empty((n_valid, k))
        for c, ri in enumerate(job.extreme_indices):
            segment = paths[:, : ri + 1]
            sups[:, c] = segment.max(axis=1)
            args[:, c] = segment.argmax(axis=1) * step
        if lamperti is not None:
            # the state map is strictly increasing, so suprema and argmax
            # locations carry over to the original coordinates
            sups = lamperti.inverse(sups)
    return chunk_index, tau_simple, tau_bridge, marginals, sups, args


def _chunk_worker(payload):
    return _chunk_compute(*payload)


def run_simulation(job: SimulationJob, workers: int = 1) -> SimulationResult:
    """Execute a job, optionally across processes, and assemble results.

    Chunks are merged in chunk-index order; since every per-path output is
    a pure function of (job, path index), the assembled arrays are
    byte-identical for any `workers` and `chunk_pairs`.
    """
    if job.samples < 1:
        raise ValueError(f"need at least one sample path, got {job.samples}")
    if job.chunk_pairs < 1:
        raise ValueError(f"chunk_pairs must be positive, got {job.chunk_pairs}")
    bad = [i for i in (*job.marginal_indices, *job.extreme_indices) if not 0 <= i <= job.steps]
    if bad:
        raise ValueError(f"grid indices outside [0, {job.steps}]: {bad}")
    if not job.is_pure:
        _reduced_threshold(job)  # validate the reduction up front
    pairs_total = (job.samples + 1) // 2
    n_chunks = math.ceil(pairs_total / job.chunk_pairs)
    payloads = [(job, i) for i in range(n_chunks)]
    if workers <= 1:
        chunks = [_chunk_compute(job, i) for i in range(n_chunks)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_chunk_worker, payloads))
    chunks.sort(key=lambda c: c[0])

    def _stack(col: int):
        parts = [c[col] for c in chunks]
        if parts[0] is None:
            return None
        return np.concatenate(parts, axis=0)

    return SimulationResult(
        tau_simple=_stack(1),
        tau_bridge=_stack(2),
        marginals=_stack(3),
        sup_values=_stack(4),
        argmax_times=_stack(5),
    )


# ---------------------------------------------------------------------------
# convenience wrappers
# ---------------------------------------------------------------------------

def passage_times(
    h: Hurst,
    grid: TimeGrid,
    samples: int,
    seed: int,
    threshold: float = 1.0,
    x0: float = 0.0,
    drift: str = "zero",
    diffusion: str = "one",
    estimators: tuple[str, ...] = ("simple",),
    workers: int = 1,
    chunk_pairs: int = DEFAULT_CHUNK_PAIRS,
) -> dict[str, np.ndarray]:
    """Hit-time arrays (+inf censored) keyed by estimator name."""
    unknown = set(estimators) - {"simple", "bridge"}
    if unknown:
        raise ValueError(f"unknown estimator(s): {sorted(unknown)}")
    job = SimulationJob(
        hurst=h.value,
        horizon=grid.horizon,
        steps=grid.steps,
        samples=samples,
        master_seed=seed,
        threshold=threshold,
        x0=x0,
        drift=drift,
        diffusion=diffusion,
        want_simple="simple" in estimators,
        want_bridge="bridge" in estimators,
        chunk_pairs=chunk_pairs,
    )
    result = run_simulation(job, workers=workers)
    out = {}
    if result.tau_simple is not None:
        out["simple"] = result.tau_simple
    if result.tau_bridge is not None:
        out["bridge"] = result.tau_bridge
    return out


def marginal_values(
    h: Hurst,
    grid: TimeGrid,
    samples: int,
    seed: int,
    time_indices,
    workers: int = 1,
    chunk_pairs: int = DEFAULT_CHUNK_PAIRS,
) -> np.ndarray:
    """Path values at the given grid indices, shape (samples, len(indices))."""
    job = SimulationJob(
        hurst=h.value,
        horizon=grid.horizon,
        steps=grid.steps,
        samples=samples,
        master_seed=seed,
        want_simple=False,
        marginal_indices=tuple(int(i) for i in time_indices),
        chunk_pairs=chunk_pairs,
    )
    return run_simulation(job, workers=workers).marginals


def path_extremes(
    h: Hurst,
    grid: TimeGrid,
    samples: int,
    seed: int,
    time_indices,
    workers: int = 1,
    chunk_pairs: int = DEFAULT_CHUNK_PAIRS,
) -> tuple[np.ndarray, np.ndarray]:
    """Suprema and first-argmax times over [0, index * step] per path."""
    job = SimulationJob(
        hurst=h.value,
        horizon=grid.horizon,
        steps=grid.steps,
        samples=samples,
        master_seed=seed,
        want_simple=False,
        extreme_indices=tuple(int(i) for i in time_indices),
        chunk_pairs=chunk_pairs,
    )
    result = run_simulation(job, workers=workers)
    return result.sup_values, result.argmax_times
