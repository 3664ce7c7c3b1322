#!/usr/bin/env python3
"""Compare the compiled kernel against the pure numpy twin.

Times the contingency grid scan (the hot inner kernel of constraint
generation) at several class-size splits, plus one end-to-end training
run per backend.  Run after `pip install -e .`:

    python benchmarks/bench_kernels.py

Force the pure backend globally with PERFADAPT_PURE=1 to benchmark a
full pure-python session.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from perfadapt import _core_py
from perfadapt.kernels import MEASURE_ERR, MEASURE_F1, MEASURE_PRBEP, backends

DATA = Path(__file__).resolve().parent.parent / "data" / "splicelike.train"

TRAIN_SNIPPET = """
import time
from perfadapt.dataset import load_svmlight
from perfadapt.kernels import BACKEND
from perfadapt.measures import MeasureSpec
from perfadapt.solver import Hyperparams, cutting_plane_train
data = load_svmlight({data_path!r})
t0 = time.perf_counter()
model = cutting_plane_train(data, MeasureSpec.from_name("err"), Hyperparams(C=0.25))
print(f"{{BACKEND:>10}}: {{time.perf_counter() - t0:.2f}}s "
      f"({{model.stats.iterations}} iterations)")
"""


def time_grid(impl, p, q, repeats):
    rng = np.random.default_rng(0)
    sp = np.concatenate([[0.0], np.cumsum(np.sort(rng.normal(size=p))[::-1])])
    sn = np.concatenate([[0.0], np.cumsum(np.sort(rng.normal(size=q))[::-1])])
    results = {}
    for code, name in ((MEASURE_ERR, "err"), (MEASURE_F1, "f1"), (MEASURE_PRBEP, "prbep")):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            impl.best_contingency_cell(sp, sn, code)
            best = min(best, time.perf_counter() - t0)
        results[name] = best
    return results


def time_training(backend_name):
    env = dict(os.environ, PERFADAPT_PURE="1" if backend_name == "pure" else "0")
    snippet = TRAIN_SNIPPET.format(data_path=str(DATA))
    out = subprocess.run(
        [sys.executable, "-c", snippet], env=env, capture_output=True, text=True
    )
    print(out.stdout, end="")
    if out.returncode != 0:
        print(out.stderr, end="")


def main():
    found = backends()
    print(f"active backend: {found['active']}")
    impls = {"pure": _core_py}
    if "compiled" in found:
        impls["compiled"] = found["compiled"]
    else:
        print("compiled extension not built; showing pure timings only")

    print("\ngrid-scan kernel (best of 5, seconds)")
    header = f"{'p x q':>12}  {'measure':>7}  " + "  ".join(f"{n:>10}" for n in impls)
    print(header)
    for p, q in ((200, 200), (500, 500), (500, 1500)):
        rows = {name: time_grid(impl, p, q, repeats=5) for name, impl in impls.items()}
        for measure in ("err", "f1", "prbep"):
            cells = "  ".join(f"{rows[name][measure] * 1e3:>9.3f}ms" for name in impls)
            print(f"{p:>5} x {q:<5}  {measure:>7}  {cells}")

    if DATA.exists():
        print("\nend-to-end training on splicelike (err, C=0.25)")
        for name in impls:
            time_training(name)


if __name__ == "__main__":
    main()
