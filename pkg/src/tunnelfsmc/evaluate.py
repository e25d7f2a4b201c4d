"""Model-vs-measurement agreement: binned-mean MSE, per-state transition
comparisons, and the interval-length x state-count sweep.

MSE is computed between spatial-bin means of the two traces (bins empty
on either side are skipped and reported through a coverage fraction),
evaluated on a holdout trace that took no part in fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError, ToolkitError
from .markov import FsmcInterval, build_model, estimate_matrix, to_states
from .quantizer import QuantizerConfig
from .simulate import Trajectory, simulate
from .trace import IntervalSlice, MeasurementTrace


def bin_means(distances, values, bin_width: float,
              origin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``values`` within each occupied spatial bin.

    Returns (bin indices, means), bins keyed by floor((d - origin)/width).
    """
    if bin_width <= 0:
        raise DomainError("bin_width must be positive")
    d = np.asarray(distances, dtype=float)
    v = np.asarray(values, dtype=float)
    idx = np.floor((d - origin) / bin_width).astype(np.int64)
    uniq, inverse = np.unique(idx, return_inverse=True)
    sums = np.bincount(inverse, weights=v)
    counts = np.bincount(inverse)
    return uniq, sums / counts


@dataclass(frozen=True)
class MseResult:
    mse: float
    n_common_bins: int
    coverage_fraction: float


def mse_details(trace_a, trace_b, bin_width: float) -> MseResult:
    """Binned-mean MSE with overlap diagnostics.

    Accepts anything exposing ``distances`` and ``snrs`` (measured or
    simulated traces); symmetric in its two trace arguments.
    """
    bins_a, means_a = bin_means(trace_a.distances, trace_a.snrs, bin_width)
    bins_b, means_b = bin_means(trace_b.distances, trace_b.snrs, bin_width)
    common, ia, ib = np.intersect1d(bins_a, bins_b, return_indices=True)
    if common.size == 0:
        raise DataError("traces share no spatial bins; nothing to compare")
    union = np.union1d(bins_a, bins_b).size
    diff = means_a[ia] - means_b[ib]
    return MseResult(float(np.mean(diff * diff)), int(common.size),
                     float(common.size / union))


def mse_trace(sim, measured, bin_width: float) -> float:
    """Mean squared difference of binned means over bins both traces hit."""
    return mse_details(sim, measured, bin_width).mse


@dataclass(frozen=True)
class ComparisonRow:
    """Model-vs-empirical transition triple for one state.

    Triples are (p_{k,k-1}, p_{k,k}, p_{k,k+1}); entries off the state
    range are None, and ``empirical`` is None for states with no observed
    outgoing transition.
    """

    state: int
    model: tuple
    empirical: tuple | None
    abs_diffs: tuple | None
    max_abs_diff: float | None


def _triple_diffs(model_t: tuple, emp_t: tuple):
    diffs = tuple(None if m is None or e is None else abs(m - e)
                  for m, e in zip(model_t, emp_t))
    present = [x for x in diffs if x is not None]
    return diffs, (max(present) if present else None)


def compare_matrices(model_interval: FsmcInterval,
                     sl: IntervalSlice) -> list[ComparisonRow]:
    """Per-state comparison of the model's transition triples against ones
    re-estimated from a measured slice under the model's own levels."""
    seq = to_states(sl, model_interval.levels)
    n = model_interval.matrix.n_states
    empirical = estimate_matrix(seq, n)
    outgoing = np.bincount(seq.states[:-1] - 1, minlength=n)
    rows = []
    for k in range(1, n + 1):
        model_t = model_interval.matrix.triple(k)
        if outgoing[k - 1] == 0:
            rows.append(ComparisonRow(k, model_t, None, None, None))
            continue
        emp_t = empirical.triple(k)
        diffs, max_diff = _triple_diffs(model_t, emp_t)
        rows.append(ComparisonRow(k, model_t, emp_t, diffs, max_diff))
    return rows


@dataclass(frozen=True)
class SweepCell:
    """One (interval length, state count) evaluation; ``mse`` is None when
    the cell failed, with the reason in ``error``."""

    interval_m: float
    n_states: int
    mse: float | None
    seed: int
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    """Everything the report formats carry; sections may be empty."""

    mse: float | None = None
    bin_width: float | None = None
    coverage_fraction: float | None = None
    comparison: tuple = ()
    sweep: tuple = ()


def derive_cell_seed(base_seed: int, interval_length: float,
                     n_states: int) -> int:
    """Stable per-cell seed so sweep cells are independent of evaluation
    order and of which subset of cells runs."""
    ss = np.random.SeedSequence(
        [int(base_seed), int(round(interval_length * 1000)), int(n_states)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sweep(trace_fit: MeasurementTrace, trace_holdout: MeasurementTrace,
          interval_lengths, state_counts, cfg: QuantizerConfig | None = None,
          base_seed: int = 0, bin_width: float | None = None,
          sim_step: float | None = None, family_policy: str = "auto",
          min_fit_samples: int = 10, origin: float = 0.0) -> list[SweepCell]:
    """Grid evaluation: fit on one trace, score binned-mean MSE against a
    holdout trace, for every (interval length, state count) pair.

    The simulation step defaults to the holdout's median sample spacing
    (the pitch the transition probabilities were estimated at); the MSE
    bin width defaults to the simulation step. Build or simulation
    failures land in the cell's ``error`` instead of aborting the grid.
    """
    lengths = list(interval_lengths)
    counts = list(state_counts)
    if not lengths or not counts:
        raise DomainError("interval_lengths and state_counts must be non-empty")
    cells = []
    for delta in lengths:
        for n_states in counts:
            seed = derive_cell_seed(base_seed, delta, n_states)
            try:
                cells.append(_sweep_cell(
                    trace_fit, trace_holdout, float(delta), int(n_states),
                    cfg, seed, bin_width, sim_step, family_policy,
                    min_fit_samples, origin))
            except ToolkitError as exc:
                cells.append(SweepCell(float(delta), int(n_states), None,
                                       seed, error=str(exc)))
    return cells


def _holdout_step(trace_holdout: MeasurementTrace, delta: float) -> float:
    diffs = np.diff(trace_holdout.distances)
    diffs = diffs[diffs > 0]
    if diffs.size == 0:
        return delta / 50.0
    return float(np.median(diffs))


def _sweep_cell(trace_fit, trace_holdout, delta, n_states, cfg, seed,
                bin_width, sim_step, family_policy, min_fit_samples,
                origin) -> SweepCell:
    model = build_model(trace_fit, delta, n_states, cfg=cfg,
                        family_policy=family_policy, origin=origin,
                        min_fit_samples=min_fit_samples)
    step = sim_step if sim_step is not None else _holdout_step(trace_holdout, delta)
    lo, hi = model.coverage
    start = max(float(trace_holdout.distances[0]), lo)
    end = min(float(trace_holdout.distances[-1]), hi)
    if not start < end:
        raise DataError("holdout trace does not overlap the model coverage")
    sim = simulate(model, Trajectory(start, end, step), seed)
    width = bin_width if bin_width is not None else step
    return SweepCell(delta, n_states, mse_trace(sim, trace_holdout, width),
                     seed)


__all__ = [
    "bin_means", "MseResult", "mse_details", "mse_trace", "ComparisonRow",
    "compare_matrices", "SweepCell", "EvaluationReport", "derive_cell_seed",
    "sweep",
]
