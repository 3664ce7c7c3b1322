# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernel: the contingency grid scan.

Twin of ``_core_py``; same tie-breaking and operation order so results
are interchangeable with the pure backend.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

MEASURE_ERR = 0
MEASURE_F1 = 1
MEASURE_PRBEP = 2


def best_contingency_cell(pos_prefix, neg_prefix, int measure_code):
    """See ``_core_py.best_contingency_cell``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sp = np.ascontiguousarray(pos_prefix, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sn = np.ascontiguousarray(neg_prefix, dtype=np.float64)
    cdef Py_ssize_t p = sp.shape[0] - 1
    cdef Py_ssize_t q = sn.shape[0] - 1
    cdef double n = <double>(p + q)
    cdef double sp_total = sp[p]
    cdef double sn_total = sn[q]
    cdef Py_ssize_t a, b, a0, best_a = 0, best_b = 0
    cdef double obj, delta, row, col, best = -np.inf
    if measure_code == MEASURE_PRBEP:
        a0 = p - q if p > q else 0
        for a in range(a0, p + 1):
            b = p - a
            row = 2.0 * sp[a] - sp_total
            col = 2.0 * sn[b] - sn_total
            obj = (100.0 * (1.0 - (<double>a) / (<double>p)) + row) + col
            if obj > best:
                best = obj
                best_a = a
                best_b = b
        return best_a, best_b, best
    if measure_code != 0 and measure_code != 1:
        raise ValueError(f"unknown measure code {measure_code}")
    cdef bint is_err = measure_code == 0
    with nogil:
        for a in range(p + 1):
            row = 2.0 * sp[a] - sp_total
            for b in range(q + 1):
                col = 2.0 * sn[b] - sn_total
                if is_err:
                    delta = 100.0 * ((<double>(p - a)) + (<double>b)) / n
                else:
                    delta = 100.0 * (1.0 - 2.0 * (<double>a) / ((<double>a) + (<double>b) + (<double>p)))
                obj = (delta + row) + col
                if obj > best:
                    best = obj
                    best_a = a
                    best_b = b
    return best_a, best_b, best
