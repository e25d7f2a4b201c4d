"""Synthetic ground-truth traces: path-loss curve plus fading.

Every acceptance-grade check needs controllable data, so generation is a
first-class module rather than test scaffolding. The mean-SNR-vs-distance
curve is piecewise linear between control points; fading multiplies the
mean (normalized power gain) or adds a centered, scaled disturbance.
Spatial correlation uses AR(1) Gaussian components, which keeps the
marginal family exact.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, DomainError
from .markov import FsmcModel
from .simulate import Trajectory, as_measurement_trace, simulate
from .trace import MeasurementTrace

_FADING_FAMILIES = ("nakagami", "rayleigh", "rice")


@dataclass(frozen=True)
class FadingSpec:
    """Fading family, strength, and spatial correlation.

    ``mode`` "multiplicative" scales the local mean SNR by a unit-mean
    power gain; "additive" adds ``sd`` times the centered, unit-variance
    gain (useful when the trace unit is logarithmic). ``coherence_m`` is
    the AR(1) correlation length of the underlying Gaussian components
    (0 = independent samples). Correlated Nakagami needs 2m integral.
    """

    family: str = "nakagami"
    mode: str = "multiplicative"
    m: float = 1.0
    nu: float = 0.0
    sigma: float = 1.0
    sd: float | None = None
    coherence_m: float = 0.0

    def __post_init__(self):
        if self.family not in _FADING_FAMILIES:
            raise DomainError(f"unknown fading family {self.family!r}")
        if self.mode not in ("multiplicative", "additive"):
            raise DomainError(f"unknown fading mode {self.mode!r}")
        if self.family == "nakagami" and not self.m >= 0.5:
            raise DomainError("nakagami fading needs m >= 0.5")
        if self.family == "rice" and not (self.nu >= 0 and self.sigma > 0):
            raise DomainError("rice fading needs nu >= 0 and sigma > 0")
        if self.coherence_m < 0:
            raise DomainError("coherence_m must be non-negative")
        if self.mode == "additive" and not (self.sd and self.sd > 0):
            raise DomainError("additive fading needs a positive sd")
        if self.family == "nakagami" and self.coherence_m > 0:
            if abs(2 * self.m - round(2 * self.m)) > 1e-12:
                raise DomainError(
                    "correlated nakagami fading needs 2m to be an integer")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic measurement run starting at distance 0."""

    path_loss: tuple
    fading: FadingSpec
    span: float
    sample_spacing: float
    seed: int

    def __post_init__(self):
        pts = tuple((float(d), float(v)) for d, v in self.path_loss)
        object.__setattr__(self, "path_loss", pts)
        if not pts:
            raise DomainError("path_loss needs at least one control point")
        dists = [d for d, _ in pts]
        if sorted(dists) != dists:
            raise DomainError("path_loss control points must be sorted by distance")
        if not self.span > 0:
            raise DomainError("span must be positive")
        if not self.sample_spacing > 0:
            raise DomainError("sample_spacing must be positive")


def _ar1_normals(rng: np.random.Generator, n: int, rho: float) -> np.ndarray:
    eps = rng.standard_normal(n)
    if rho == 0.0:
        return eps
    x = eps * math.sqrt(1.0 - rho * rho)
    x[0] = eps[0]  # stationary start
    return lfilter([1.0], [1.0, -rho], x)


def _power_gain(fading: FadingSpec, rng: np.random.Generator, n: int,
                spacing: float) -> np.ndarray:
    """Unit-mean power gain samples with the requested marginal family."""
    rho = 0.0
    if fading.coherence_m > 0:
        rho = math.exp(-spacing / fading.coherence_m)
    family = fading.family
    m = 1.0 if family == "rayleigh" else fading.m
    if family in ("nakagami", "rayleigh"):
        if rho == 0.0:
            return rng.gamma(m, 1.0 / m, size=n)
        k = int(round(2 * m))
        acc = np.zeros(n)
        for _ in range(k):
            z = _ar1_normals(rng, n, rho)
            acc += z * z
        return acc / k
    # rice: LOS amplitude nu plus complex scatter
    z1 = _ar1_normals(rng, n, rho)
    z2 = _ar1_normals(rng, n, rho)
    power = (fading.nu + fading.sigma * z1) ** 2 + (fading.sigma * z2) ** 2
    return power / (fading.nu ** 2 + 2.0 * fading.sigma ** 2)


def _gain_std(fading: FadingSpec) -> float:
    if fading.family in ("nakagami", "rayleigh"):
        m = 1.0 if fading.family == "rayleigh" else fading.m
        return math.sqrt(1.0 / m)
    e = fading.nu ** 2 + 2.0 * fading.sigma ** 2
    var = 4.0 * fading.sigma ** 2 * fading.nu ** 2 + 4.0 * fading.sigma ** 4
    return math.sqrt(var) / e


def synth_trace(spec: SynthSpec) -> MeasurementTrace:
    """Generate one trace deterministically from the spec's seed."""
    count = int(math.floor(spec.span / spec.sample_spacing + 1e-9)) + 1
    positions = spec.sample_spacing * np.arange(count)
    cp_d = np.array([d for d, _ in spec.path_loss])
    cp_v = np.array([v for _, v in spec.path_loss])
    mean = np.interp(positions, cp_d, cp_v)

    rng = np.random.default_rng(spec.seed)
    gain = _power_gain(spec.fading, rng, count, spec.sample_spacing)
    if spec.fading.mode == "multiplicative":
        snrs = mean * gain
    else:
        snrs = mean + spec.fading.sd * (gain - 1.0) / _gain_std(spec.fading)
    if np.any(snrs <= 0):
        raise DomainError(
            "fading drives SNR non-positive; reduce the fading sd or raise "
            "the path-loss curve")
    meta = {"synthetic": True, "seed": spec.seed,
            "fading": spec.fading.family, "mode": spec.fading.mode}
    return MeasurementTrace(positions, snrs, meta)


def synth_from_model(model: FsmcModel, samples_per_interval: int,
                     seed: int) -> MeasurementTrace:
    """Representative-valued samples from the model's own simulator,
    ``samples_per_interval`` per interval at uniform spacing, packaged as
    a measurement trace (round-trip oracle input)."""
    if samples_per_interval < 1:
        raise DomainError("samples_per_interval must be at least 1")
    spacing = model.interval_length / samples_per_interval
    lo, hi = model.coverage
    # half-offset keeps every position strictly inside an interval
    traj = Trajectory(lo + spacing / 2.0, hi - spacing / 2.0, spacing)
    sim = simulate(model, traj, seed)
    expected = model.n_intervals * samples_per_interval
    if len(sim) != expected:
        raise DomainError(
            f"internal spacing error: {len(sim)} samples, expected {expected}")
    return as_measurement_trace(sim, {"samples_per_interval": samples_per_interval})


def spec_to_payload(spec: SynthSpec) -> dict:
    fading = {"family": spec.fading.family, "mode": spec.fading.mode}
    if spec.fading.family in ("nakagami", "rayleigh"):
        fading["m"] = spec.fading.m
    else:
        fading["nu"] = spec.fading.nu
        fading["sigma"] = spec.fading.sigma
    if spec.fading.sd is not None:
        fading["sd"] = spec.fading.sd
    fading["coherence_m"] = spec.fading.coherence_m
    return {
        "span_m": spec.span,
        "sample_spacing_m": spec.sample_spacing,
        "seed": spec.seed,
        "path_loss": [[d, v] for d, v in spec.path_loss],
        "fading": fading,
    }


def serialize_spec(spec: SynthSpec) -> str:
    return json.dumps(spec_to_payload(spec), indent=2) + "\n"


def load_spec(source) -> SynthSpec:
    """Parse a SynthSpec JSON document."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.load(source)
    try:
        fad = dict(payload["fading"])
        fading = FadingSpec(
            family=fad["family"], mode=fad.get("mode", "multiplicative"),
            m=float(fad.get("m", 1.0)), nu=float(fad.get("nu", 0.0)),
            sigma=float(fad.get("sigma", 1.0)),
            sd=float(fad["sd"]) if "sd" in fad else None,
            coherence_m=float(fad.get("coherence_m", 0.0)))
        return SynthSpec(
            path_loss=tuple((float(d), float(v))
                            for d, v in payload["path_loss"]),
            fading=fading,
            span=float(payload["span_m"]),
            sample_spacing=float(payload["sample_spacing_m"]),
            seed=int(payload["seed"]))
    except DomainError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed synth spec: {exc}") from exc


__all__ = ["FadingSpec", "SynthSpec", "synth_trace", "synth_from_model",
           "spec_to_payload", "serialize_spec", "load_spec"]
