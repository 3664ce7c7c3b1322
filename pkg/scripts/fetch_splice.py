#!/usr/bin/env python3
"""Download the LIBSVM binary splice train/test files into data/.

The quantitative acceptance checks (tests/test_acceptance.py, criteria on
the splice benchmark) run only when data/splice.train and data/splice.test
exist; this script fetches them in environments with network access and
validates the expected shapes (60 features, 1000 train / 2175 test rows).
"""

import sys
import urllib.request
from pathlib import Path

SOURCES = [
    # (train URL, test URL)
    (
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/splice",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/splice.t",
    ),
]

EXPECTED = {"splice.train": 1000, "splice.test": 2175}


def fetch(url, dest):
    print(f"fetching {url} -> {dest}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        dest.write_bytes(resp.read())


def validate(path, expected_rows):
    rows = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(rows) != expected_rows:
        raise SystemExit(f"{path}: expected {expected_rows} rows, found {len(rows)}")
    width = max(int(tok.split(":")[0]) for ln in rows for tok in ln.split()[1:])
    if width != 60:
        raise SystemExit(f"{path}: expected 60 features, found {width}")
    print(f"{path}: OK ({len(rows)} rows, {width} features)")


def main():
    out = Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    train = out / "splice.train"
    test = out / "splice.test"
    if train.exists() and test.exists():
        print("files already present")
    else:
        last_error = None
        for train_url, test_url in SOURCES:
            try:
                fetch(train_url, train)
                fetch(test_url, test)
                break
            except OSError as exc:
                last_error = exc
                print(f"  failed: {exc}")
        else:
            raise SystemExit(f"could not download splice: {last_error}")
    validate(train, EXPECTED["splice.train"])
    validate(test, EXPECTED["splice.test"])


if __name__ == "__main__":
    sys.exit(main())
