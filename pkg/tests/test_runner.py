"""Deterministic chunked Monte Carlo driver.

Covers:
  - Bit-identical results across worker counts and chunk sizes.
  - Seed separation: different seeds decorrelate, same seed reproduces.
  - Shift invariance of the pure zero-drift case: moving the start is the
    same as moving the threshold.
  - Marginal extraction: shapes, variance statistics, index validation.
  - Suprema / argmax windows: pathwise monotonicity in the window length.
  - Job validation and the pure-case fast path.
"""

import numpy as np
import pytest

from fbmpassage import (
    Hurst,
    SimulationJob,
    TimeGrid,
    marginal_values,
    passage_times,
    path_extremes,
    run_simulation,
)


def _job(**kw):
    base = dict(
        hurst=0.6,
        horizon=5.0,
        steps=256,
        samples=300,
        master_seed=42,
        threshold=1.0,
    )
    base.update(kw)
    return SimulationJob(**base)


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

def test_worker_count_is_observationally_irrelevant():
    job = _job(want_bridge=True)
    serial = run_simulation(job, workers=1)
    pooled = run_simulation(job, workers=3)
    assert np.array_equal(serial.tau_simple, pooled.tau_simple)
    assert np.array_equal(serial.tau_bridge, pooled.tau_bridge)


def test_chunk_size_is_observationally_irrelevant():
    a = run_simulation(_job(chunk_pairs=16, want_bridge=True))
    b = run_simulation(_job(chunk_pairs=128, want_bridge=True))
    assert np.array_equal(a.tau_simple, b.tau_simple)
    assert np.array_equal(a.tau_bridge, b.tau_bridge)


def test_same_seed_reproduces_different_seed_changes():
    a = run_simulation(_job())
    b = run_simulation(_job())
    c = run_simulation(_job(master_seed=43))
    assert np.array_equal(a.tau_simple, b.tau_simple)
    assert not np.array_equal(a.tau_simple, c.tau_simple)


def test_sample_prefix_stability():
    """The first paths of a longer run are exactly a shorter run."""
    small = run_simulation(_job(samples=100))
    large = run_simulation(_job(samples=300))
    assert np.array_equal(large.tau_simple[:100], small.tau_simple)


# ---------------------------------------------------------------------------
# pure-case reductions
# ---------------------------------------------------------------------------

def test_start_shift_equals_threshold_shift():
    """With zero drift and unit diffusion only threshold - x0 matters."""
    shifted = passage_times(
        Hurst(0.55), TimeGrid(5.0, 512), 400, 4711, threshold=1.0, x0=0.2
    )["simple"]
    rebased = passage_times(
        Hurst(0.55), TimeGrid(5.0, 512), 400, 4711, threshold=0.8, x0=0.0
    )["simple"]
    assert np.array_equal(shifted, rebased)


def test_is_pure_flag():
    assert _job().is_pure
    assert not _job(drift="ou:0.5").is_pure
    assert not _job(diffusion="const:2").is_pure
    assert _job(x0=0.3).is_pure  # a start shift keeps the fast path


def test_drifted_run_hits_earlier_on_average():
    # a positive constant push toward the threshold can only speed hits up
    pure = passage_times(Hurst(0.5), TimeGrid(5.0, 256), 400, 31, estimators=("simple",))
    pushed = passage_times(
        Hurst(0.5), TimeGrid(5.0, 256), 400, 31,
        drift="linear:0,0.5", estimators=("simple",),
    )
    frac_pure = np.isfinite(pure["simple"]).mean()
    frac_pushed = np.isfinite(pushed["simple"]).mean()
    assert frac_pushed > frac_pure


# ---------------------------------------------------------------------------
# marginals and extremes
# ---------------------------------------------------------------------------

def test_marginal_values_shape_and_variance():
    grid = TimeGrid(4.0, 512)
    h = Hurst(0.7)
    idx = [grid.time_index(1.0), grid.time_index(4.0)]
    marg = marginal_values(h, grid, 4000, 2020, idx)
    assert marg.shape == (4000, 2)
    for col, t in zip(range(2), (1.0, 4.0)):
        var = marg[:, col].var(ddof=1)
        want = t ** (2.0 * h.value)
        z = (var - want) / (want * np.sqrt(2.0 / (len(marg) - 1)))
        assert abs(z) < 5.0, f"t={t}: variance z = {z:.2f}"


def test_path_extremes_window_monotonicity():
    grid = TimeGrid(10.0, 1024)
    idx = [grid.time_index(2.0), grid.time_index(5.0), grid.time_index(10.0)]
    sups, args = path_extremes(Hurst(0.6), grid, 500, 808, idx)
    assert sups.shape == (500, 3)
    assert (np.diff(sups, axis=1) >= 0.0).all(), "sup grows with the window"
    assert (np.diff(args, axis=1) >= 0.0).all(), "first argmax never moves left"
    assert (args[:, 0] <= 2.0 + 1e-12).all()
    assert (sups[:, 0] >= 0.0).all()  # paths start at zero


def test_extremes_argmax_is_first_attaining_time():
    grid = TimeGrid(10.0, 256)
    sups, args = path_extremes(Hurst(0.5), grid, 200, 11, [grid.steps])
    marg = marginal_values(Hurst(0.5), grid, 200, 11, list(range(grid.steps + 1)))
    for i in range(200):
        j = int(np.flatnonzero(marg[i] == sups[i, 0])[0])
        assert args[i, 0] == pytest.approx(j * grid.step, abs=1e-12)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_job_validation():
    with pytest.raises(ValueError):
        run_simulation(_job(samples=0))
    with pytest.raises(ValueError):
        run_simulation(_job(chunk_pairs=0))
    with pytest.raises(ValueError):
        run_simulation(_job(hurst=1.2))
    with pytest.raises(ValueError):
        run_simulation(_job(marginal_indices=(9999,)))  # off the grid


def test_start_at_threshold_hits_immediately():
    """Degenerate but well defined: every path is over the line at t=0."""
    res = run_simulation(_job(x0=1.0, samples=50))
    assert np.array_equal(res.tau_simple, np.zeros(50))


def test_passage_times_estimator_selection():
    out = passage_times(Hurst(0.5), TimeGrid(2.0, 128), 100, 5, estimators=("simple",))
    assert set(out) == {"simple"}
    both = passage_times(
        Hurst(0.5), TimeGrid(2.0, 128), 100, 5, estimators=("simple", "bridge")
    )
    assert set(both) == {"simple", "bridge"}
    with pytest.raises(ValueError):
        passage_times(Hurst(0.5), TimeGrid(2.0, 128), 100, 5, estimators=("typo",))
