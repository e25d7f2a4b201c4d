"""Pure-Python Markov stepping kernel (fallback backend).

Must stay bit-identical to the compiled twin in ``_chainsim.pyx``: the
same strict comparisons against the same cumulative rows.
"""


def chain_steps_impl(cum_rows, state, uniforms, out):
    """Advance the chain once per uniform; returns the final state."""
    rows = cum_rows.tolist()
    n_last = len(rows) - 1
    states = []
    append = states.append
    row = rows[state]
    for u in uniforms.tolist():
        j = 0
        while j < n_last and u >= row[j]:
            j += 1
        row = rows[j]
        state = j
        append(j)
    out[:len(states)] = states
    return state
