"""Grid fan-out across workers and deterministic CSV assembly.

Grid points are independent tasks; results are gathered by index so the
output is byte-identical for any worker count. Floats are formatted with 9
significant digits.
"""

from __future__ import annotations

import concurrent.futures
import math
from pathlib import Path

FLOAT_FORMAT = "%.9g"

_progress_hook = None


def set_progress_hook(hook) -> None:
    """Install a callable(done, total) invoked per completed grid point."""
    global _progress_hook
    _progress_hook = hook


def parallel_map(fn, tasks, workers: int = 1):
    """Map fn over tasks, preserving order; workers <= 1 runs inline.

    Results are collected in task order regardless of completion order, so
    downstream artifacts do not depend on the worker count.
    """
    tasks = list(tasks)
    results = []
    if workers <= 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            results.append(fn(task))
            if _progress_hook:
                _progress_hook(i + 1, len(tasks))
        return results
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, math.ceil(len(tasks) / (4 * workers)))
        for i, result in enumerate(pool.map(fn, tasks, chunksize=chunk)):
            results.append(result)
            if _progress_hook:
                _progress_hook(i + 1, len(tasks))
    return results


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(path, header, rows) -> Path:
    """Write rows of scalars with a header line; LF endings, deterministic."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path):
    """Read a CSV written by write_csv: (header, column dict of float lists).

    Non-numeric cells are kept as strings.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    columns = {name: [] for name in header}
    for ln in lines[1:]:
        cells = ln.split(",")
        for name, cell in zip(header, cells):
            try:
                columns[name].append(float(cell))
            except ValueError:
                columns[name].append(cell)
    return header, columns
