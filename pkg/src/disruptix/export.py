"""CSV writers for every table the command line emits.

All files are UTF-8, comma-delimited, with a header row and ``\\n`` line
endings.  Floats use the shortest round-trip repr and missing values are
written as empty fields, so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .artefacts import FrequencyTable
from .cdindex import CdResult, YearSeries
from .graph import CitationGraph
from .histogram import Histogram


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_rows(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_cd(path, graph: CitationGraph, values: CdResult) -> Path:
    """Per-node table; ``n_r`` is the raw count before normalization."""
    refs = graph.out_degree
    rows = (
        (graph.keys[i], int(graph.year[i]), int(refs[i]), int(values.n_cites[i]), int(values.n_f[i]),
         int(values.n_b[i]), int(values.n_r[i]),
         float(values.value[i]) if values.defined[i] else None, bool(values.defined[i]))
        for i in range(graph.n)
    )
    return write_rows(path, ("id", "year", "n_refs", "n_cites_window", "n_f", "n_b", "n_r", "cd", "defined"), rows)


def write_series(path, series: list[YearSeries]) -> Path:
    rows = []
    for s in series:
        for j in range(len(s)):
            rows.append((s.group, int(s.year[j]), s.mean[j], int(s.count[j]), s.stderr[j], s.ci_low[j], s.ci_high[j]))
    return write_rows(path, ("group", "year", "mean", "count", "stderr", "ci_low", "ci_high"), rows)


def write_frequency(path, table: FrequencyTable) -> Path:
    rows = zip(table.year.tolist(), table.denominator.tolist(), table.numerator.tolist(), table.share.tolist())
    return write_rows(path, ("year", "n_defined", "n_flagged", "share"), rows)


def write_histogram(path, hist: Histogram) -> Path:
    rows = zip(hist.edges[:-1].tolist(), hist.edges[1:].tolist(), hist.counts.tolist())
    return write_rows(path, ("bin_lo", "bin_hi", "count"), rows)


def write_zscores(path, graph: CitationGraph, table) -> Path:
    obs = table.observed
    rows = ((graph.keys[i], obs.value[i] if obs.defined[i] else None, table.mu[i], table.sigma[i], table.z[i])
            for i in range(graph.n))
    return write_rows(path, ("id", "observed", "mu", "sigma", "z"), rows)


def write_key_values(path, items) -> Path:
    return write_rows(path, ("key", "value"), items)
