"""Per-interval transition-matrix estimation and model assembly.

State indices are 1-based throughout the public surface (matching the
threshold numbering); array storage is 0-based. Transitions are counted
only between consecutive samples inside one interval, and jumps farther
than one state are reassigned to the adjacent state in the jump's
direction so matrices stay tridiagonal without losing counts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._version import __version__
from .distfit import (FAMILIES, FamilyParams, SnrPdf, select_model, snr_pdf,
                      fit_rayleigh, fit_rice, fit_nakagami)
from .errors import (DataError, DomainError, InsufficientDataError,
                     ModelBuildError, ToolkitError)
from .quantizer import LevelSet, QuantizerConfig, lloyd_max, quantize_array
from .trace import IntervalSlice, MeasurementTrace, partition

MODEL_FORMAT_VERSION = 1
PRNG_NAME = "pcg64"

_ROW_SUM_TOL = 1e-12
_FITTERS = {"rayleigh": fit_rayleigh, "rice": fit_rice, "nakagami": fit_nakagami}


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic tridiagonal matrix; entry [i, j] is the probability
    of moving from state i+1 to state j+1."""

    entries: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise DomainError("transition matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise DomainError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
            raise DomainError("matrix rows must sum to 1")
        n = p.shape[0]
        off = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 1
        if np.any(p[off] != 0.0):
            raise DomainError("matrix must be tridiagonal")

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    def triple(self, state: int) -> tuple:
        """(p_{k,k-1}, p_{k,k}, p_{k,k+1}) for 1-based state k; entries
        off the state range are None."""
        i = state - 1
        n = self.n_states
        down = float(self.entries[i, i - 1]) if i > 0 else None
        up = float(self.entries[i, i + 1]) if i < n - 1 else None
        return down, float(self.entries[i, i]), up


@dataclass(frozen=True)
class StateSequence:
    """Quantized SNR states (1-based) of one interval's samples, in trace
    order."""

    states: np.ndarray
    interval_index: int

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int64)
        object.__setattr__(self, "states", s)
        if s.size == 0:
            raise InsufficientDataError("state sequence is empty")
        if np.any(s < 1):
            raise DomainError("state indices are 1-based")

    def __len__(self):
        return self.states.size


@dataclass(frozen=True)
class FsmcInterval:
    """One interval's fitted pieces: level set, transition matrix, state
    probabilities, SNR density, and the AICc-selected family."""

    index: int
    levels: LevelSet
    matrix: TransitionMatrix
    state_probs: np.ndarray
    snr_pdf: SnrPdf
    sample_count: int
    family: FamilyParams | None = None

    def __post_init__(self):
        p = np.asarray(self.state_probs, dtype=float)
        object.__setattr__(self, "state_probs", p)
        n = self.matrix.n_states
        if p.size != n or self.levels.n_levels != n:
            raise DomainError("interval pieces disagree on the state count")
        if abs(float(p.sum()) - 1.0) > _ROW_SUM_TOL or np.any(p < 0):
            raise DomainError("state probabilities must form a distribution")


@dataclass(frozen=True)
class FsmcModel:
    """Location-dependent finite-state Markov channel model."""

    interval_length: float
    origin: float
    n_states: int
    intervals: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if self.interval_length <= 0:
            raise DomainError("interval length must be positive")
        if not self.intervals:
            raise DomainError("model needs at least one interval")
        for pos, iv in enumerate(self.intervals, start=1):
            if iv.index != pos:
                raise DomainError("interval indices must run contiguously from 1")
            if iv.matrix.n_states != self.n_states:
                raise DomainError("state count must be uniform across intervals")

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def coverage(self) -> tuple:
        return self.origin, self.origin + self.n_intervals * self.interval_length

    def interval_index_at(self, distance: float) -> int:
        lo, hi = self.coverage
        if not lo <= distance <= hi:
            raise DomainError(
                f"distance {distance} outside model coverage [{lo}, {hi}]")
        l = int(math.floor((distance - self.origin) / self.interval_length)) + 1
        return min(l, self.n_intervals)

    def interval_at(self, distance: float) -> FsmcInterval:
        return self.intervals[self.interval_index_at(distance) - 1]

    def fingerprint(self) -> str:
        digest = hashlib.sha256(serialize_model(self).encode("utf-8"))
        return digest.hexdigest()[:12]


def to_states(sl: IntervalSlice, levels: LevelSet) -> StateSequence:
    """Quantize a slice's SNR samples, in order."""
    if len(sl) == 0:
        raise InsufficientDataError(f"interval slice {sl.index} is empty")
    return StateSequence(quantize_array(sl.snrs, levels), sl.index)


def _transition_counts(states0: np.ndarray, n_states: int) -> np.ndarray:
    """Pair counts with off-tridiagonal jumps clamped to the adjacent state
    in the jump's direction. Total count is preserved exactly."""
    src = states0[:-1]
    dst = states0[1:]
    clamped = src + np.clip(dst - src, -1, 1)
    flat = np.bincount(src * n_states + clamped, minlength=n_states * n_states)
    return flat.reshape(n_states, n_states).astype(float)


def estimate_matrix(seq: StateSequence, n_states: int) -> TransitionMatrix:
    """Maximum-likelihood tridiagonal transition matrix from consecutive
    pairs. Rows with no observed transitions become self-loops."""
    states = seq.states
    if states.size < 2:
        raise InsufficientDataError(
            "need at least 2 states to estimate transitions")
    if np.any(states > n_states):
        raise DomainError(f"state index exceeds n_states={n_states}")
    counts = _transition_counts(states - 1, n_states)
    totals = counts.sum(axis=1)
    entries = np.zeros_like(counts)
    seen = totals > 0
    entries[seen] = counts[seen] / totals[seen, None]
    idle = np.flatnonzero(~seen)
    entries[idle, idle] = 1.0
    return TransitionMatrix(entries)


def state_probabilities(seq: StateSequence, n_states: int) -> np.ndarray:
    """Empirical state occupancy frequencies."""
    states = seq.states
    if np.any(states > n_states):
        raise DomainError(f"state index exceeds n_states={n_states}")
    return np.bincount(states - 1, minlength=n_states) / states.size


@dataclass(frozen=True)
class StationaryResult:
    pi: np.ndarray
    reducible: bool


def _gth(p: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman stationary solve (no subtractions, stable)."""
    a = p.astype(float).copy()
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        s = a[k, :k].sum()
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def stationary_distribution(matrix: TransitionMatrix) -> StationaryResult:
    """Stationary distribution of a row-stochastic matrix.

    Reducible chains are flagged and solved on the closed communicating
    class reached from state 1, with zeros elsewhere.
    """
    p = matrix.entries
    n = matrix.n_states
    n_comp, labels = connected_components(p > 0, directed=True,
                                          connection="strong")
    reducible = n_comp > 1
    members = np.flatnonzero(labels == labels[0])
    # walk to a closed class: a class is closed when no mass leaves it
    visited = set()
    while True:
        leak = p[np.ix_(members, np.setdiff1d(np.arange(n), members))]
        if leak.size == 0 or not np.any(leak > 0):
            break
        visited.add(labels[members[0]])
        outside = np.setdiff1d(np.arange(n), members)
        exits = outside[np.any(p[np.ix_(members, outside)] > 0, axis=0)]
        next_label = labels[exits.min()]
        if next_label in visited:
            raise DomainError("could not locate a closed recurrent class")
        members = np.flatnonzero(labels == next_label)
    sub = p[np.ix_(members, members)]
    sub = sub / sub.sum(axis=1, keepdims=True)
    pi = np.zeros(n)
    pi[members] = _gth(sub) if members.size > 1 else 1.0
    return StationaryResult(pi, reducible)


def _nearest_donor(index: int, donors: list) -> int:
    return min(donors, key=lambda d: (abs(d - index), d))


def _fit_family(policy: str, snrs: np.ndarray) -> FamilyParams:
    if policy == "auto":
        return select_model(snrs).params
    return _FITTERS[policy](snrs).params


def build_model(trace: MeasurementTrace, interval_length: float,
                n_states: int, cfg: QuantizerConfig | None = None,
                family_policy: str = "auto", origin: float = 0.0,
                min_fit_samples: int = 10,
                metadata: dict | None = None) -> FsmcModel:
    """Full fitting pipeline: partition, per-interval family selection and
    SNR density fit, Lloyd-Max levels, transition matrix, and state
    probabilities.

    Intervals with fewer than ``min_fit_samples`` samples (or no spread)
    are rebuilt from the nearest adequate interval's data; their indices
    are recorded under metadata["filled_intervals"].
    """
    if n_states < 2:
        raise DomainError("model needs at least 2 states")
    if family_policy != "auto" and family_policy not in FAMILIES:
        raise DomainError(f"unknown family policy {family_policy!r}")
    cfg = cfg or QuantizerConfig()
    slices = partition(trace, interval_length, origin)

    def deficient(sl: IntervalSlice) -> bool:
        return len(sl) < min_fit_samples or float(np.ptp(sl.snrs)) == 0.0

    donors = [sl.index for sl in slices if not deficient(sl)]
    if not donors:
        raise ModelBuildError(
            f"every interval is deficient (fewer than {min_fit_samples} "
            "samples or no SNR spread); enlarge the interval length")

    # family used to refit deficient intervals: the most frequent winner
    # among adequate intervals (ties toward the fixed family order)
    win_counts = dict.fromkeys(FAMILIES, 0)
    families: dict[int, FamilyParams] = {}
    for sl in slices:
        if sl.index not in donors:
            continue
        try:
            params = _fit_family(family_policy, sl.snrs)
        except ToolkitError as exc:
            raise ModelBuildError(f"interval {sl.index}: {exc}") from exc
        families[sl.index] = params
        win_counts[params.family] += 1
    global_family = max(FAMILIES, key=lambda f: (win_counts[f], -FAMILIES.index(f)))

    filled: dict[str, int] = {}
    intervals = []
    for sl in slices:
        if sl.index in families:
            data = sl.snrs
            params = families[sl.index]
        else:
            donor = _nearest_donor(sl.index, donors)
            filled[str(sl.index)] = donor
            data = next(s.snrs for s in slices if s.index == donor)
            try:
                params = _FITTERS[global_family](data).params
            except ToolkitError as exc:
                raise ModelBuildError(
                    f"interval {sl.index} (filled from {donor}): {exc}") from exc
        try:
            pdf = snr_pdf(data)
            support = (float(np.min(data)), float(np.max(data)))
            levels = lloyd_max(pdf, n_states,
                               dataclasses.replace(cfg, support=support))
            seq = StateSequence(quantize_array(data, levels), sl.index)
            matrix = estimate_matrix(seq, n_states)
            probs = state_probabilities(seq, n_states)
        except ToolkitError as exc:
            raise ModelBuildError(f"interval {sl.index}: {exc}") from exc
        intervals.append(FsmcInterval(sl.index, levels, matrix, probs, pdf,
                                      sample_count=len(sl), family=params))

    meta = {
        "toolkit_version": __version__,
        "prng": PRNG_NAME,
        "family_policy": family_policy,
        "min_fit_samples": min_fit_samples,
        "source": trace.metadata.get("source", ""),
        "filled_intervals": filled,
    }
    meta.update(metadata or {})
    return FsmcModel(float(interval_length), float(origin), n_states,
                     tuple(intervals), meta)


def _model_payload(model: FsmcModel) -> dict:
    intervals = []
    for iv in model.intervals:
        family = {"name": iv.family.family, **iv.family.params} if iv.family else None
        intervals.append({
            "index": iv.index,
            "sample_count": iv.sample_count,
            "snr_pdf": {"m": iv.snr_pdf.m, "mean_snr": iv.snr_pdf.mean_snr},
            "family": family,
            "thresholds": iv.levels.thresholds.tolist(),
            "representatives": iv.levels.representatives.tolist(),
            "distortion": iv.levels.distortion,
            "state_probs": iv.state_probs.tolist(),
            "matrix": iv.matrix.entries.tolist(),
        })
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "interval_length_m": model.interval_length,
        "origin_m": model.origin,
        "n_states": model.n_states,
        "metadata": model.metadata,
        "intervals": intervals,
    }


def serialize_model(model: FsmcModel) -> str:
    """Model JSON with fixed field order and full-precision floats."""
    return json.dumps(_model_payload(model), indent=2) + "\n"


def save_model(model: FsmcModel, target) -> None:
    text = serialize_model(model)
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def load_model(source) -> FsmcModel:
    """Parse and fully validate a model JSON file."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.load(source)
    try:
        if payload["format_version"] != MODEL_FORMAT_VERSION:
            raise DataError(
                f"unsupported model format_version {payload['format_version']!r}")
        intervals = []
        for entry in payload["intervals"]:
            fam = entry.get("family")
            params = None
            if fam is not None:
                fam = dict(fam)
                params = FamilyParams(fam.pop("name"), fam)
            levels = LevelSet(np.array(entry["thresholds"], dtype=float),
                              np.array(entry["representatives"], dtype=float),
                              float(entry["distortion"]))
            matrix = TransitionMatrix(np.array(entry["matrix"], dtype=float))
            pdf = SnrPdf(float(entry["snr_pdf"]["m"]),
                         float(entry["snr_pdf"]["mean_snr"]))
            intervals.append(FsmcInterval(
                int(entry["index"]), levels, matrix,
                np.array(entry["state_probs"], dtype=float), pdf,
                sample_count=int(entry["sample_count"]), family=params))
        return FsmcModel(float(payload["interval_length_m"]),
                         float(payload["origin_m"]),
                         int(payload["n_states"]),
                         tuple(intervals), dict(payload["metadata"]))
    except ToolkitError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc}") from exc


__all__ = [
    "TransitionMatrix", "StateSequence", "FsmcInterval", "FsmcModel",
    "StationaryResult", "to_states", "estimate_matrix",
    "state_probabilities", "stationary_distribution", "build_model",
    "serialize_model", "save_model", "load_model",
    "MODEL_FORMAT_VERSION", "PRNG_NAME",
]
