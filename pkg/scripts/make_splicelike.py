#!/usr/bin/env python3
"""Build data/splicelike.{train,test} from the PMLB 'splice' table.

PMLB's splice is the 3-class UCI splice-junction dataset (EI / IE /
neither) with per-column integer-coded nucleotides.  This script drops
rows containing ambiguity codes (any per-column symbol outside the four
dominant ones), maps the clean codes to 1..4, binarizes the target
(junction present = +1, neither = -1), and writes a seeded 1000/rest
train/test split in SVMlight format.

The result is a desk-scale DNA splice-site task of the same shape as the
benchmark splice data (60 features, ~3175 usable rows) but NOT the same
train/test split, so it is used for smoke/integration runs only --
quantitative benchmark anchors stay tied to the real files fetched by
fetch_splice.py.

Usage: make_splicelike.py <pmlb-splice.tsv> [seed]
PMLB source (MIT license):
https://github.com/EpistasisLab/pmlb/raw/master/datasets/splice/splice.tsv.gz
"""

import sys
from pathlib import Path

import numpy as np

TRAIN_ROWS = 1000


def main():
    if len(sys.argv) < 2:
        raise SystemExit(__doc__)
    source = Path(sys.argv[1])
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 20240501
    rows = [line.split("\t") for line in source.read_text().splitlines()]
    arr = np.array([[int(v) for v in r] for r in rows[1:]])
    X, y = arr[:, :-1], arr[:, -1]

    clean = np.ones(X.shape[0], dtype=bool)
    mapped = np.zeros_like(X)
    for col in range(X.shape[1]):
        values, counts = np.unique(X[:, col], return_counts=True)
        dominant = values[np.argsort(-counts, kind="stable")[:4]]
        dominant = np.sort(dominant)
        is_dominant = np.isin(X[:, col], dominant)
        clean &= is_dominant
        # dominant codes ascending = nucleotides in alphabetical order -> 1..4
        for rank, code in enumerate(dominant, start=1):
            mapped[X[:, col] == code, col] = rank
    # equally spaced values in [-1, 1], the usual scaling of these files
    scaled = (mapped - 2.5) / 1.5

    X, y = scaled[clean], y[clean]
    labels = np.where(y == 2, -1, 1)  # classes 0/1 = junction, 2 = neither
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    out_dir = Path(__file__).resolve().parent.parent / "data"
    out_dir.mkdir(exist_ok=True)

    def write(path, idx):
        # trailing constant column: the structural models have no intercept,
        # so the data carries one
        bias_col = X.shape[1] + 1
        with open(path, "w", encoding="utf-8") as fh:
            for i in idx:
                feats = " ".join(
                    f"{j + 1}:{X[i, j]:.7g}" for j in range(X.shape[1])
                )
                fh.write(f"{'+1' if labels[i] == 1 else '-1'} {feats} {bias_col}:1\n")

    write(out_dir / "splicelike.train", order[:TRAIN_ROWS])
    write(out_dir / "splicelike.test", order[TRAIN_ROWS:])
    print(
        f"clean rows: {X.shape[0]} (dropped {np.sum(~clean)}), "
        f"train {TRAIN_ROWS}, test {X.shape[0] - TRAIN_ROWS}, "
        f"positives {np.sum(labels == 1)}"
    )


if __name__ == "__main__":
    main()
