"""Backend selection for the hot kernels.

The compiled extension (``perfadapt._core``, Cython) is preferred; the
pure numpy twins in ``_core_py`` are used when it is missing or when the
environment variable ``PERFADAPT_PURE=1`` forces them (handy for the
backend benchmark and for differential testing).
"""

from __future__ import annotations

import os

from . import _core_py

MEASURE_ERR = _core_py.MEASURE_ERR
MEASURE_F1 = _core_py.MEASURE_F1
MEASURE_PRBEP = _core_py.MEASURE_PRBEP

if os.environ.get("PERFADAPT_PURE", "") == "1":
    _impl = _core_py
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _core_py
        BACKEND = "pure"

best_contingency_cell = _impl.best_contingency_cell


def backends():
    """The active backend plus both implementations, for benchmarks/tests."""
    out = {"active": BACKEND, "pure": _core_py}
    if BACKEND == "compiled":
        out["compiled"] = _impl
    else:
        try:
            from . import _core  # type: ignore[attr-defined]

            out["compiled"] = _core
        except ImportError:
            pass
    return out
