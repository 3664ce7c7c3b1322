"""Pure numpy twin of the compiled hot kernel.

Drop-in replacement for ``_core``; selected at import time by
:mod:`perfadapt.kernels` when the extension is unavailable (or when
``PERFADAPT_PURE=1``).  Tie-breaking and operation order match the
compiled version so both backends return identical results.
"""

from __future__ import annotations

import numpy as np

MEASURE_ERR = 0
MEASURE_F1 = 1
MEASURE_PRBEP = 2


def best_contingency_cell(pos_prefix, neg_prefix, measure_code):
    """Maximize loss(a, b) + 2*SP[a] + 2*SN[b] - SP[p] - SN[q] over the grid.

    ``pos_prefix``/``neg_prefix`` are prefix sums (length p+1 and q+1) of
    the positive/negative scores sorted descending.  Cell (a, b) means the
    top-a positives and top-b negatives are predicted +1.  Ties break to
    the first cell in row-major (a, b) order.  Returns (a, b, objective).
    """
    sp = np.asarray(pos_prefix, dtype=np.float64)
    sn = np.asarray(neg_prefix, dtype=np.float64)
    p = sp.size - 1
    q = sn.size - 1
    n = p + q
    row = 2.0 * sp - sp[p]
    col = 2.0 * sn - sn[q]
    if measure_code == MEASURE_PRBEP:
        a = np.arange(max(0, p - q), p + 1)
        b = p - a
        obj = (100.0 * (1.0 - a / p) + row[a]) + col[b]
        k = int(np.argmax(obj))
        return int(a[k]), int(b[k]), float(obj[k])
    a = np.arange(p + 1, dtype=np.float64)[:, None]
    b = np.arange(q + 1, dtype=np.float64)[None, :]
    if measure_code == MEASURE_ERR:
        delta = 100.0 * ((p - a) + b) / n
    elif measure_code == MEASURE_F1:
        delta = 100.0 * (1.0 - 2.0 * a / (a + b + p))
    else:
        raise ValueError(f"unknown measure code {measure_code}")
    obj = (delta + row[:, None]) + col[None, :]
    flat = int(np.argmax(obj))
    best_a, best_b = divmod(flat, q + 1)
    return int(best_a), int(best_b), float(obj.flat[flat])
