"""Distance-stamped SNR traces: loading, validation, spatial partitioning.

Trace CSV format (UTF-8): an optional header line ``distance_m,snr``,
lines starting with ``#`` ignored, then one ``distance,snr`` pair per
line. Distances must be non-decreasing. The SNR unit is carried opaquely;
no dB/linear conversion is ever applied.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.constants

from .errors import DomainError, EmptyTraceError, OrderingError, ParseError

HEADER = "distance_m,snr"


class TraceSample(NamedTuple):
    distance: float
    snr: float


@dataclass(frozen=True)
class MeasurementTrace:
    """Ordered (distance, SNR) samples from one measurement run.

    Samples are stored as parallel float arrays; ``metadata`` is free-form
    (source file, frequency, run id, ...). Instances are immutable and safe
    to share across threads.
    """

    distances: np.ndarray
    snrs: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        s = np.asarray(self.snrs, dtype=float)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "snrs", s)
        if d.ndim != 1 or s.shape != d.shape:
            raise DomainError("distances and snrs must be 1-d arrays of equal length")
        if d.size == 0:
            raise EmptyTraceError("trace has no samples")
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(s)):
            raise DomainError("trace contains non-finite values")
        if d[0] < 0:
            raise DomainError("distances must be non-negative")
        if np.any(np.diff(d) < 0):
            raise OrderingError("distances decrease in sequence order")

    def __len__(self):
        return self.distances.size

    def __iter__(self):
        for d, s in zip(self.distances, self.snrs):
            yield TraceSample(float(d), float(s))

    def __eq__(self, other):
        if not isinstance(other, MeasurementTrace):
            return NotImplemented
        return (np.array_equal(self.distances, other.distances)
                and np.array_equal(self.snrs, other.snrs)
                and self.metadata == other.metadata)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.distances[0]), float(self.distances[-1])


@dataclass(frozen=True)
class IntervalPartition:
    """Uniform spatial partition: ``count`` intervals of ``interval_length``
    metres starting at ``origin``."""

    interval_length: float
    origin: float
    count: int

    def index_of(self, distance: float) -> int:
        """1-based index of the interval containing ``distance`` (half-open
        cells; the right coverage edge maps onto the last interval)."""
        l = int(math.floor((distance - self.origin) / self.interval_length)) + 1
        return min(max(l, 1), self.count)

    def bounds(self, index: int) -> tuple[float, float]:
        lo = self.origin + (index - 1) * self.interval_length
        return lo, lo + self.interval_length

    @property
    def coverage_end(self) -> float:
        return self.origin + self.count * self.interval_length


@dataclass(frozen=True)
class IntervalSlice:
    """The sub-sequence of trace samples falling in one interval."""

    index: int
    distances: np.ndarray
    snrs: np.ndarray

    def __len__(self):
        return self.distances.size


def load_trace(source, fmt: str = "csv") -> MeasurementTrace:
    """Parse a trace from a path, byte stream, or text stream.

    Raises ParseError (with line number) on malformed rows, OrderingError
    on decreasing distances, EmptyTraceError when no data rows remain.
    """
    if fmt != "csv":
        raise DomainError(f"unsupported trace format: {fmt!r}")
    text, name = _read_text(source)
    distances: list[float] = []
    snrs: list[float] = []
    seen_content = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not seen_content and _is_header(line):
            seen_content = True
            continue
        seen_content = True
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'distance,snr', got {raw!r}", line=lineno)
        try:
            d, s = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError(f"non-numeric field in {raw!r}", line=lineno) from None
        if not (math.isfinite(d) and math.isfinite(s)):
            raise ParseError(f"non-finite value in {raw!r}", line=lineno)
        if d < 0:
            raise ParseError(f"negative distance {d!r}", line=lineno)
        if distances and d < distances[-1]:
            raise OrderingError(
                f"distance {d!r} decreases below {distances[-1]!r}", line=lineno)
        distances.append(d)
        snrs.append(s)
    if not distances:
        raise EmptyTraceError("no data rows in trace input")
    metadata = {"source": name} if name else {}
    return MeasurementTrace(np.array(distances), np.array(snrs), metadata)


def save_trace(trace: MeasurementTrace, target) -> None:
    """Write a trace in canonical CSV form (header + shortest round-trip
    float repr). Canonical files round-trip bit-identically through
    load_trace/save_trace."""
    text = serialize_trace(trace)
    if hasattr(target, "write"):
        _write_stream(target, text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def serialize_trace(trace: MeasurementTrace) -> str:
    lines = [HEADER]
    lines.extend(f"{d!r},{s!r}" for d, s in zip(trace.distances.tolist(),
                                                trace.snrs.tolist()))
    return "\n".join(lines) + "\n"


def interval_length_from_wavelengths(n_wavelengths: float,
                                     carrier_frequency: float) -> float:
    """Interval length in metres for a count of carrier wavelengths."""
    if n_wavelengths <= 0:
        raise DomainError("n_wavelengths must be positive")
    if carrier_frequency <= 0:
        raise DomainError("carrier_frequency must be positive")
    return n_wavelengths * scipy.constants.c / carrier_frequency


def plan_partition(trace: MeasurementTrace, interval_length: float,
                   origin: float = 0.0) -> IntervalPartition:
    """Interval count covering the trace's farthest sample.

    Half-open binning means a sample sitting exactly on the last boundary
    opens one further interval.
    """
    if interval_length <= 0:
        raise DomainError("interval length must be positive")
    max_d = float(trace.distances[-1])
    if max_d < origin:
        raise DomainError("trace lies entirely before the partition origin")
    count = max(1, int(math.floor((max_d - origin) / interval_length)) + 1)
    return IntervalPartition(float(interval_length), float(origin), count)


def partition(trace: MeasurementTrace, interval_length: float,
              origin: float = 0.0) -> list[IntervalSlice]:
    """Split a trace into contiguous interval slices (1..L, empty slices
    preserved). Every sample lands in exactly one slice."""
    plan = plan_partition(trace, interval_length, origin)
    idx = np.floor((trace.distances - origin) / interval_length).astype(int)
    if np.any(idx < 0):
        raise DomainError("samples precede the partition origin")
    slices = []
    for l in range(plan.count):
        mask = idx == l
        slices.append(IntervalSlice(l + 1, trace.distances[mask], trace.snrs[mask]))
    return slices


def _is_header(line: str) -> bool:
    fields = [f.strip().lower() for f in line.split(",")]
    return fields == ["distance_m", "snr"]


def _read_text(source) -> tuple[str, str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8"), os.fspath(source)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data, getattr(source, "name", "")


def _write_stream(stream, text: str) -> None:
    try:
        stream.write(text)
    except TypeError:
        stream.write(text.encode("utf-8"))


__all__ = [
    "TraceSample", "MeasurementTrace", "IntervalPartition", "IntervalSlice",
    "load_trace", "save_trace", "serialize_trace",
    "interval_length_from_wavelengths", "plan_partition", "partition",
]
