# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def fir_stream(x, h, state):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef const double complex[::1] hv = np.ascontiguousarray(h, dtype=np.complex128)
    cdef const double complex[::1] sv = np.ascontiguousarray(state, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0], taps = hv.shape[0], mem = taps - 1
    cdef Py_ssize_t t, l, src
    cdef double complex acc
    if sv.shape[0] != mem:
        raise ValueError(f"state must have {mem} samples, got {sv.shape[0]}")
    y = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] yv = y
    for t in range(n):
        acc = 0
        for l in range(taps):
            src = t - l
            if src >= 0:
                acc = acc + hv[l] * xv[src]
            else:
                acc = acc + hv[l] * sv[mem + src]
        yv[t] = acc
    new_state = np.empty(mem, dtype=np.complex128)
    cdef double complex[::1] nv = new_state
    for l in range(mem):
        src = n - mem + l
        nv[l] = xv[src] if src >= 0 else sv[mem + src]
    return y, new_state


def region_decide(z, region, table):
    cdef const double complex[::1] zv = np.ascontiguousarray(z, dtype=np.complex128)
    cdef const cnp.int64_t[::1] rv = np.ascontiguousarray(region, dtype=np.int64)
    cdef const double complex[:, ::1] tv = np.ascontiguousarray(table, dtype=np.complex128)
    cdef Py_ssize_t n = zv.shape[0], q = tv.shape[1], nreg = tv.shape[0]
    cdef Py_ssize_t i, j, r, best_j
    cdef double best, d, dr, di
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] ov = out
    for i in range(n):
        r = rv[i]
        if r < 0 or r >= nreg:
            raise IndexError(f"region {r} out of range")
        best = 1e300
        best_j = 0
        for j in range(q):
            dr = zv[i].real - tv[r, j].real
            di = zv[i].imag - tv[r, j].imag
            d = dr * dr + di * di
            if d < best:
                best = d
                best_j = j
        ov[i] = tv[r, best_j]
    return out
