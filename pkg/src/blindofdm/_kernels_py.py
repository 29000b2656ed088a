"""Numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``BLINDOFDM_PURE_PYTHON`` is set.
"""

import numpy as np


def fir_stream(x, h, state):
    """Causal FIR filter with carried state.

    ``state`` holds the last ``len(h) - 1`` input samples of the previous
    call (oldest first).  Returns ``(y, new_state)``.
    """
    x = np.asarray(x, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    state = np.asarray(state, dtype=np.complex128)
    n_mem = h.size - 1
    if state.size != n_mem:
        raise ValueError(f"state must have {n_mem} samples, got {state.size}")
    ext = np.concatenate([state, x])
    y = np.convolve(ext, h, mode="valid") if x.size else np.zeros(0, complex)
    new_state = ext[ext.size - n_mem:] if n_mem else ext[:0]
    return y, new_state.copy()


def region_decide(z, region, table):
    """Nearest point of ``table[region[i]]`` to ``z[i]`` for every ``i``."""
    cand = table[region]
    best = np.argmin(np.abs(cand - z[:, None]), axis=1)
    return cand[np.arange(z.size), best]
