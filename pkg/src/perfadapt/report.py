"""Run reports: deterministic JSON plus an aligned plain-text table.

Identical config + seed must give byte-identical files; wall-clock
durations therefore live only under the JSON ``timing`` key and never in
the text table.
"""

from __future__ import annotations

import json
import os

MEASURE_ORDER = ("err", "f1", "prbep", "auc")


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_table(headers, rows):
    """Fixed-width text table; rows are sequences matching headers."""
    cells = [[_fmt(c) for c in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(headers)
    ]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()

    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in cells)
    return "\n".join(out) + "\n"


def metrics_table(columns):
    """Table with one row per measure.

    ``columns`` is an ordered mapping of column name -> {measure: value};
    values may carry a parenthesized companion (value, raw) for the
    adapted-vs-auxiliary layout.
    """
    headers = ["measure"] + list(columns)
    rows = []
    for m in MEASURE_ORDER:
        row = [m]
        for col in columns.values():
            value = col.get(m)
            if isinstance(value, tuple):
                main, raw = value
                row.append(f"{_fmt(main)} ({_fmt(raw)})")
            else:
                row.append(value)
        rows.append(row)
    return render_table(headers, rows)


def write_report(report, out_dir, text, name="report"):
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, f"{name}.json")
    txt_path = os.path.join(out_dir, f"{name}.txt")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return json_path, txt_path
