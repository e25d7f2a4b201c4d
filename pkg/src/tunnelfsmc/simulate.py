"""Seed-reproducible synthetic SNR traces from a fitted model.

The chain takes one Markov step per spatial step. Entering a new interval
re-quantizes the current representative SNR under the new interval's
levels (no random draw), which preserves SNR continuity across interval
boundaries. Output SNR is always the representative value of the current
state, so simulated values live on the model's reconstruction grid.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._kernels import chain_steps, pick_index
from ._version import __version__
from .errors import DomainError, ParseError
from .markov import PRNG_NAME, FsmcModel, StateSequence, estimate_matrix
from .quantizer import quantize
from .trace import MeasurementTrace

DEFAULT_STEP_FRACTION = 50  # default spatial step = interval_length / 50


@dataclass(frozen=True)
class Trajectory:
    """Arithmetic position sweep: start, start+step, ... up to end."""

    start: float
    end: float
    step: float

    def __post_init__(self):
        if not self.start < self.end:
            raise DomainError("trajectory requires start < end")
        if not self.step > 0:
            raise DomainError("trajectory step must be positive")

    def positions(self) -> np.ndarray:
        count = int(math.floor((self.end - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


def default_step(model: FsmcModel) -> float:
    return model.interval_length / DEFAULT_STEP_FRACTION


@dataclass(frozen=True)
class SimulatedTrace:
    """Synthetic (distance, state, SNR) sequence; states are 1-based."""

    distances: np.ndarray
    states: np.ndarray
    snrs: np.ndarray
    seed: int | None
    model_fingerprint: str = ""
    prng: str = PRNG_NAME

    def __post_init__(self):
        object.__setattr__(self, "distances", np.asarray(self.distances, float))
        object.__setattr__(self, "states", np.asarray(self.states, np.int64))
        object.__setattr__(self, "snrs", np.asarray(self.snrs, float))
        if not (self.distances.size == self.states.size == self.snrs.size):
            raise DomainError("simulated trace arrays must share one length")
        if self.distances.size == 0:
            raise DomainError("simulated trace is empty")

    def __len__(self):
        return self.distances.size


def simulate(model: FsmcModel, traj: Trajectory, seed: int) -> SimulatedTrace:
    """Run the location-dependent chain along a trajectory.

    The initial state is drawn from the starting interval's state
    probabilities; every subsequent within-interval step consumes one
    uniform. Output is bit-identical for identical (model, traj, seed).
    """
    lo, hi = model.coverage
    if traj.start < lo or traj.end > hi + 1e-9:
        raise DomainError(
            f"trajectory [{traj.start}, {traj.end}] outside model coverage "
            f"[{lo}, {hi}]")
    positions = traj.positions()
    interval_idx = np.clip(
        np.floor((positions - model.origin) / model.interval_length).astype(int) + 1,
        1, model.n_intervals)

    rng = np.random.default_rng(seed)
    states = np.empty(positions.size, dtype=np.int64)  # 0-based while filling

    # consecutive runs of equal interval index
    boundaries = np.flatnonzero(np.diff(interval_idx)) + 1
    run_starts = np.concatenate(([0], boundaries))
    run_ends = np.concatenate((boundaries, [positions.size]))

    state = -1
    cum_cache: dict[int, np.ndarray] = {}
    for run_no, (begin, end) in enumerate(zip(run_starts, run_ends)):
        iv = model.intervals[interval_idx[begin] - 1]
        if run_no == 0:
            u = rng.random()
            state = pick_index(np.cumsum(iv.state_probs), u)
        else:
            prev_iv = model.intervals[interval_idx[begin - 1] - 1]
            rep = float(prev_iv.levels.representatives[state])
            state = quantize(rep, iv.levels) - 1
        states[begin] = state
        n_steps = end - begin - 1
        if n_steps > 0:
            cum = cum_cache.get(iv.index)
            if cum is None:
                cum = np.cumsum(iv.matrix.entries, axis=1)
                cum_cache[iv.index] = cum
            run = chain_steps(cum, state, rng.random(n_steps))
            states[begin + 1:end] = run
            state = int(run[-1])

    reps = np.stack([model.intervals[l - 1].levels.representatives
                     for l in range(1, model.n_intervals + 1)])
    snrs = reps[interval_idx - 1, states]
    return SimulatedTrace(positions, states + 1, snrs, seed,
                          model_fingerprint=model.fingerprint())


@dataclass(frozen=True)
class IntervalStats:
    """Empirical occupancy and transition frequencies of one interval of a
    simulated trace. ``transition_freqs`` is None when the interval holds
    fewer than two samples."""

    index: int
    occupancy: np.ndarray
    transition_counts: np.ndarray
    transition_freqs: np.ndarray | None
    visited_rows: np.ndarray


def empirical_stats(sim: SimulatedTrace, model: FsmcModel) -> dict:
    """Per-interval occupancy and transition-frequency estimates, keyed by
    interval index. Only intervals the trajectory visited appear."""
    n = model.n_states
    interval_idx = np.clip(
        np.floor((sim.distances - model.origin) / model.interval_length).astype(int) + 1,
        1, model.n_intervals)
    stats: dict[int, IntervalStats] = {}
    for l in np.unique(interval_idx):
        mask = interval_idx == l
        states = sim.states[mask]
        occupancy = np.bincount(states - 1, minlength=n) / states.size
        counts = np.zeros((n, n))
        freqs = None
        if states.size >= 2:
            src = states[:-1] - 1
            dst = states[1:] - 1
            flat = np.bincount(src * n + dst, minlength=n * n)
            counts = flat.reshape(n, n).astype(float)
            freqs = estimate_matrix(StateSequence(states, int(l)), n).entries
        visited = counts.sum(axis=1) > 0
        stats[int(l)] = IntervalStats(int(l), occupancy, counts, freqs, visited)
    return stats


def serialize_sim_csv(sim: SimulatedTrace) -> str:
    lines = [
        f"# seed: {sim.seed}",
        f"# model: {sim.model_fingerprint}",
        f"# prng: {sim.prng}",
        f"# toolkit_version: {__version__}",
        "distance_m,state,snr",
    ]
    lines.extend(f"{d!r},{s},{v!r}" for d, s, v in
                 zip(sim.distances.tolist(), sim.states.tolist(),
                     sim.snrs.tolist()))
    return "\n".join(lines) + "\n"


def save_sim_csv(sim: SimulatedTrace, target) -> None:
    text = serialize_sim_csv(sim)
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def load_sim_csv(source) -> SimulatedTrace:
    """Read a simulated-trace CSV written by save_sim_csv."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    meta = {}
    distances, states, snrs = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line.lstrip("# ").partition(":")
                meta[key.strip()] = value.strip()
            continue
        if line.lower().replace(" ", "") == "distance_m,state,snr":
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'distance,state,snr', got {raw!r}",
                             line=lineno)
        try:
            distances.append(float(parts[0]))
            states.append(int(parts[1]))
            snrs.append(float(parts[2]))
        except ValueError:
            raise ParseError(f"non-numeric field in {raw!r}", line=lineno) from None
    seed = meta.get("seed")
    return SimulatedTrace(
        np.array(distances), np.array(states, dtype=np.int64), np.array(snrs),
        seed=int(seed) if seed not in (None, "None") else None,
        model_fingerprint=meta.get("model", ""),
        prng=meta.get("prng", PRNG_NAME))


def as_measurement_trace(sim: SimulatedTrace,
                         metadata: dict | None = None) -> MeasurementTrace:
    meta = {"seed": sim.seed, "model": sim.model_fingerprint}
    meta.update(metadata or {})
    return MeasurementTrace(sim.distances.copy(), sim.snrs.copy(), meta)


__all__ = [
    "Trajectory", "SimulatedTrace", "IntervalStats", "simulate",
    "empirical_stats", "default_step", "serialize_sim_csv", "save_sim_csv",
    "load_sim_csv", "as_measurement_trace", "DEFAULT_STEP_FRACTION",
]
