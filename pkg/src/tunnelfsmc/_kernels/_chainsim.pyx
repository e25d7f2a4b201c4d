# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Markov stepping kernel.

Semantics must stay bit-identical to ``_chain_py.chain_steps_impl``:
given cumulative transition rows, each uniform picks the first column
whose cumulative value exceeds it (strict), clamped to the last state.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def chain_steps_impl(double[:, ::1] cum_rows, Py_ssize_t state,
                     double[::1] uniforms, cnp.int64_t[::1] out):
    """Advance the chain once per uniform; returns the final state."""
    cdef Py_ssize_t n_last = cum_rows.shape[0] - 1
    cdef Py_ssize_t k = uniforms.shape[0]
    cdef Py_ssize_t i, j
    cdef double u
    for i in range(k):
        u = uniforms[i]
        j = 0
        while j < n_last and u >= cum_rows[state, j]:
            j += 1
        state = j
        out[i] = j
    return state
