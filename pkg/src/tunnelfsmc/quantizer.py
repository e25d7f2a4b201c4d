"""Lloyd-Max scalar quantization of SNR under a fitted density.

The quantizer works against any density object exposing
``partial_moment(a, b, order)`` for orders 0..2 (``distfit.SnrPdf`` does;
test oracles provide their own). The squared-error criterion is fixed.
Boundary thresholds stay pinned to the support endpoints; only interior
thresholds iterate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCellError, DomainError

_MASS_FLOOR = 1e-6   # minimum density mass on the requested support
_CELL_FLOOR = 1e-12  # minimum per-cell share of the support mass


@dataclass(frozen=True)
class QuantizerConfig:
    """Convergence controls and quantizer support in SNR units."""

    tol: float = 1e-6
    max_iter: int = 500
    support: tuple | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if self.support is not None:
            a, b = self.support
            if not a < b:
                raise DomainError(f"support requires a < b, got {self.support}")


@dataclass(frozen=True)
class LevelSet:
    """SNR thresholds, cell representatives, and achieved distortion.

    ``thresholds`` has N+1 strictly increasing entries; ``representatives``
    has N entries, each strictly inside its cell. ``converged`` is False
    when the iteration cap was reached before the movement tolerance
    (a warning-grade condition, not an error). ``distortion_trace`` keeps
    the per-iteration distortion sequence.
    """

    thresholds: np.ndarray
    representatives: np.ndarray
    distortion: float
    converged: bool = True
    iterations: int = 0
    distortion_trace: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        r = np.asarray(self.representatives, dtype=float)
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "representatives", r)
        if t.ndim != 1 or r.ndim != 1 or t.size != r.size + 1 or r.size < 1:
            raise DomainError("need N+1 thresholds and N representatives")
        if np.any(np.diff(t) <= 0):
            raise DomainError("thresholds must be strictly increasing")
        if np.any(r <= t[:-1]) or np.any(r >= t[1:]):
            raise DomainError("each representative must lie inside its cell")
        if self.distortion < 0:
            raise DomainError("distortion must be non-negative")

    @property
    def n_levels(self) -> int:
        return self.representatives.size


def quantize(x: float, levels: LevelSet) -> int:
    """State index (1..N) of an SNR value; half-open cells, values outside
    the support clamp to the nearest edge state."""
    return int(quantize_array(np.asarray([x], dtype=float), levels)[0])


def quantize_array(values, levels: LevelSet) -> np.ndarray:
    """Vectorized quantize; returns 1-based int64 state indices."""
    v = np.asarray(values, dtype=float)
    idx = np.searchsorted(levels.thresholds, v, side="right")
    return np.clip(idx, 1, levels.n_levels).astype(np.int64)


def _cell_moments(pdf, edges: np.ndarray):
    n = edges.size - 1
    m0 = np.empty(n)
    m1 = np.empty(n)
    m2 = np.empty(n)
    for k in range(n):
        a, b = float(edges[k]), float(edges[k + 1])
        m0[k] = pdf.partial_moment(a, b, 0)
        m1[k] = pdf.partial_moment(a, b, 1)
        m2[k] = pdf.partial_moment(a, b, 2)
    return m0, m1, m2


def _centroids(pdf, edges: np.ndarray, total_mass: float) -> np.ndarray:
    m0, m1, _ = _cell_moments(pdf, edges)
    if np.any(m0 < _CELL_FLOOR * total_mass):
        k = int(np.argmin(m0))
        raise DegenerateCellError(
            f"cell {k + 1} of {m0.size} holds no probability mass on "
            f"[{edges[k]:.6g}, {edges[k + 1]:.6g}]; reduce the level count")
    reps = m1 / m0
    # numerical safety: conditional means can only leave their open cell
    # through rounding; nudge back inside
    width = np.diff(edges)
    return np.clip(reps, edges[:-1] + 1e-12 * width, edges[1:] - 1e-12 * width)


def _distortion_for(pdf, edges: np.ndarray, reps: np.ndarray,
                    total_mass: float) -> float:
    m0, m1, m2 = _cell_moments(pdf, edges)
    per_cell = reps * reps * m0 - 2.0 * reps * m1 + m2
    return float(np.sum(per_cell) / total_mass)


def _equiprobable_thresholds(pdf, a: float, b: float, n: int,
                             total_mass: float) -> np.ndarray:
    """Initial thresholds with equal cell mass, found by bisection on the
    density's CDF restricted to [a, b]."""
    edges = np.empty(n + 1)
    edges[0], edges[n] = a, b
    for k in range(1, n):
        target = total_mass * k / n
        lo, hi = a, b
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if pdf.partial_moment(a, mid, 0) < target:
                lo = mid
            else:
                hi = mid
        edges[k] = 0.5 * (lo + hi)
    if np.any(np.diff(edges) <= 0):
        raise DegenerateCellError(
            "equiprobable initialization collapsed adjacent thresholds; "
            "reduce the level count")
    return edges


def lloyd_max(pdf, n_levels: int, cfg: QuantizerConfig,
              init_thresholds=None) -> LevelSet:
    """Minimum-distortion level design by Lloyd-Max iteration.

    Alternates the centroid condition (representative = conditional mean
    of its cell) with the midpoint condition for interior thresholds.
    Distortion is non-increasing across iterations. Initialization is
    equiprobable unless ``init_thresholds`` is given.
    """
    if n_levels < 1:
        raise DomainError("need at least one level")
    if cfg.support is None:
        raise DomainError("QuantizerConfig.support must be set for level design")
    a, b = float(cfg.support[0]), float(cfg.support[1])
    total_mass = pdf.partial_moment(a, b, 0)
    if total_mass <= _MASS_FLOOR:
        raise DomainError(
            f"density mass {total_mass:.3g} on [{a:.6g}, {b:.6g}] is too small")

    if init_thresholds is not None:
        edges = np.asarray(init_thresholds, dtype=float).copy()
        if edges.size != n_levels + 1 or np.any(np.diff(edges) <= 0):
            raise DomainError("init_thresholds must be N+1 increasing values")
        edges[0], edges[-1] = a, b
    else:
        edges = _equiprobable_thresholds(pdf, a, b, n_levels, total_mass)

    reps = _centroids(pdf, edges, total_mass)
    dist = _distortion_for(pdf, edges, reps, total_mass)
    trace = [dist]
    converged = n_levels == 1
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        if n_levels == 1:
            break
        new_edges = edges.copy()
        new_edges[1:-1] = 0.5 * (reps[:-1] + reps[1:])
        movement = float(np.max(np.abs(new_edges - edges)))
        edges = new_edges
        reps = _centroids(pdf, edges, total_mass)
        dist = _distortion_for(pdf, edges, reps, total_mass)
        trace.append(dist)
        if movement < cfg.tol:
            converged = True
            break
    return LevelSet(edges, reps, dist, converged=converged,
                    iterations=iterations, distortion_trace=tuple(trace))


def distortion(pdf, levels: LevelSet) -> float:
    """Expected squared quantization error of ``levels`` under ``pdf``
    restricted (renormalized) to the level-set span."""
    edges = levels.thresholds
    total_mass = pdf.partial_moment(float(edges[0]), float(edges[-1]), 0)
    if total_mass <= 0:
        raise DomainError("density carries no mass on the level-set span")
    return _distortion_for(pdf, edges, levels.representatives, total_mass)


__all__ = ["QuantizerConfig", "LevelSet", "lloyd_max", "distortion",
           "quantize", "quantize_array"]
