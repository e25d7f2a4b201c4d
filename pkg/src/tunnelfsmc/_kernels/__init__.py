"""Markov stepping kernels: compiled extension with pure-Python fallback.

The compiled backend is preferred when the extension built; both produce
bit-identical state sequences for identical inputs. ``BACKEND`` names the
active one ("cython" or "python"); ``available_backends()`` exposes both
for benchmarking and equivalence tests.
"""

from __future__ import annotations

import numpy as np

from . import _chain_py

try:
    from . import _chainsim
    BACKEND = "cython"
    _impl = _chainsim.chain_steps_impl
except ImportError:
    _chainsim = None
    BACKEND = "python"
    _impl = _chain_py.chain_steps_impl


def available_backends() -> dict:
    backends = {"python": _chain_py.chain_steps_impl}
    if _chainsim is not None:
        backends["cython"] = _chainsim.chain_steps_impl
    return backends


def chain_steps(cum_rows: np.ndarray, state: int, uniforms: np.ndarray,
                impl=None) -> np.ndarray:
    """States (0-based) after each of ``len(uniforms)`` chain steps.

    ``cum_rows`` holds cumulative transition-row sums; each uniform picks
    the first column whose cumulative value strictly exceeds it.
    """
    cum = np.ascontiguousarray(cum_rows, dtype=np.float64)
    u = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.empty(u.size, dtype=np.int64)
    (impl or _impl)(cum, int(state), u, out)
    return out


def pick_index(cum_row: np.ndarray, u: float) -> int:
    """Single draw with the same selection rule as the stepping kernels."""
    idx = int(np.searchsorted(cum_row, u, side="right"))
    return min(idx, cum_row.size - 1)


__all__ = ["BACKEND", "available_backends", "chain_steps", "pick_index"]
