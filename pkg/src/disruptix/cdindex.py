"""CD index variants and per-year aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Literal, NamedTuple

import numpy as np

from . import kernels
from .errors import SchemaError
from .graph import FULL_DATE, YEAR_ONLY, CitationGraph, add_years

RAW = "raw"
ENTITY = "entity"
FIELD_YEAR = "fieldyear"
NORMALIZATIONS = (RAW, ENTITY, FIELD_YEAR)
MAX = "max"

_NO_UPPER = np.iinfo(np.int64).max
_Z95 = 1.96


@dataclass(frozen=True)
class CdConfig:
    window: int | Literal["max"] = 5
    resolution: str = FULL_DATE
    normalization: str = RAW

    def __post_init__(self):
        if self.window != MAX and (not isinstance(self.window, (int, np.integer)) or self.window < 1):
            raise SchemaError(f"window must be a positive integer or 'max', got {self.window!r}")
        if self.resolution not in (FULL_DATE, YEAR_ONLY):
            raise SchemaError(f"resolution must be 'date' or 'year', got {self.resolution!r}")
        if self.normalization not in NORMALIZATIONS:
            raise SchemaError(f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")

    @property
    def label(self) -> str:
        return f"CD_{self.window}"


def _check_resolution(graph: CitationGraph, config: CdConfig) -> None:
    if graph.kind != config.resolution:
        raise SchemaError(
            f"config resolution {config.resolution!r} does not match the graph's date kind {graph.kind!r}"
        )


def shift_years(ordinals: np.ndarray, years: int) -> np.ndarray:
    """Vectorised :func:`add_years` on day ordinals."""
    from .graph import _EPOCH_ORDINAL

    d = (np.asarray(ordinals, dtype=np.int64) - _EPOCH_ORDINAL).astype("datetime64[D]")
    y = d.astype("datetime64[Y]")
    mon = d.astype("datetime64[M]")
    month_no = mon - y.astype("datetime64[M]")
    day_no = (d - mon.astype("datetime64[D]")).astype(np.int64)
    target = (y + np.timedelta64(years, "Y")).astype("datetime64[M]") + month_no
    month_len = ((target + 1).astype("datetime64[D]") - target.astype("datetime64[D]")).astype(np.int64)
    out = target.astype("datetime64[D]") + np.minimum(day_no, month_len - 1)
    return out.astype(np.int64) + _EPOCH_ORDINAL


def window_bounds(graph: CitationGraph, config: CdConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inclusive (fb_lo, r_lo, hi) bounds on citer time for every focal.

    Full dates: both sets drawn from (d, d + t years].  Year-only: F and B
    from [y, y + t], R from [y + 1, y + t].
    """
    _check_resolution(graph, config)
    t = graph.time
    if graph.kind == FULL_DATE:
        fb_lo = t + 1
        r_lo = fb_lo
        hi = np.full_like(t, _NO_UPPER) if config.window == MAX else shift_years(t, int(config.window))
    else:
        fb_lo = t.copy()
        r_lo = t + 1
        hi = np.full_like(t, _NO_UPPER) if config.window == MAX else t + int(config.window)
    return fb_lo, r_lo, hi


class Window(NamedTuple):
    """Forward window of a focal node.

    ``fb`` holds candidates for F and B, ``r`` candidates for R.  They are the
    same set for full-date corpora.
    """

    fb: frozenset
    r: frozenset


class CiterPartition(NamedTuple):
    n_f: int
    n_b: int
    n_r: int


def forward_window(graph: CitationGraph, focal: int, config: CdConfig) -> Window:
    _check_resolution(graph, config)
    t0 = int(graph.time[focal])
    if graph.kind == FULL_DATE:
        if config.window == MAX:
            upper = _NO_UPPER
        else:
            upper = add_years(date.fromordinal(t0), int(config.window)).toordinal()
        mask = (graph.time > t0) & (graph.time <= upper)
        members = frozenset(np.flatnonzero(mask).tolist())
        return Window(members, members)
    upper = _NO_UPPER if config.window == MAX else t0 + int(config.window)
    fb = (graph.time >= t0) & (graph.time <= upper)
    fb[focal] = False
    r = (graph.time > t0) & (graph.time <= upper)
    return Window(frozenset(np.flatnonzero(fb).tolist()), frozenset(np.flatnonzero(r).tolist()))


def classify_citers(graph: CitationGraph, focal: int, window: Window) -> CiterPartition:
    """Count F, B and R members, each citer at most once."""
    refs = set(graph.references(focal).tolist())
    focal_citers = set(graph.citers(focal).tolist())
    ref_citers: set[int] = set()
    for r in refs:
        ref_citers.update(graph.citers(r).tolist())
    ref_citers.discard(focal)
    n_f = n_b = n_r = 0
    for j in focal_citers & window.fb:
        if j in ref_citers:
            n_b += 1
        else:
            n_f += 1
    for j in (ref_citers - focal_citers) & window.r:
        n_r += 1
    return CiterPartition(n_f, n_b, n_r)


def field_year_mean_refs(graph: CitationGraph) -> dict[tuple[int, int], float]:
    """Mean reference count per (field code, year) cell over all labelled nodes."""
    labelled = graph.field_codes >= 0
    out: dict[tuple[int, int], float] = {}
    if not labelled.any():
        return out
    f = graph.field_codes[labelled]
    y = graph.year[labelled]
    refs = graph.out_degree[labelled].astype(np.float64)
    cells, inverse = np.unique(np.stack([f, y], axis=1), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.bincount(inverse, weights=refs)
    counts = np.bincount(inverse)
    for (fc, yr), s, c in zip(cells.tolist(), sums, counts):
        out[(fc, yr)] = s / c
    return out


def _adjusted_nr(graph: CitationGraph, nodes: np.ndarray, n_r: np.ndarray, config: CdConfig) -> np.ndarray:
    n_r = n_r.astype(np.float64)
    if config.normalization == RAW:
        return n_r
    if config.normalization == ENTITY:
        return np.maximum(n_r - graph.out_degree[nodes], 0.0)
    missing = nodes[graph.field_codes[nodes] < 0]
    if missing.size:
        raise SchemaError(f"field-year normalization needs a field label; node {graph.keys[missing[0]]!r} has none")
    cell = field_year_mean_refs(graph)
    mean_refs = np.array([cell[(int(graph.field_codes[i]), int(graph.year[i]))] for i in nodes], dtype=np.float64)
    return np.maximum(n_r - mean_refs, 0.0)


def _ratio(n_f, n_b, n_r_adj):
    denom = n_f + n_b + n_r_adj
    defined = denom > 0
    value = np.full(denom.shape, np.nan)
    np.divide(n_f - n_b, denom, out=value, where=defined)
    return value, defined


def cd(graph: CitationGraph, focal: int, config: CdConfig = CdConfig()) -> float | None:
    """CD index of one focal node; ``None`` when undefined."""
    part = classify_citers(graph, focal, forward_window(graph, focal, config))
    nodes = np.array([focal])
    n_r_adj = _adjusted_nr(graph, nodes, np.array([part.n_r]), config)
    value, defined = _ratio(np.array([part.n_f], dtype=np.float64), np.array([part.n_b], dtype=np.float64), n_r_adj)
    return float(value[0]) if defined[0] else None


@dataclass(frozen=True, eq=False)
class CdResult:
    """Per-node CD values with the underlying counts.

    ``n_r`` is the raw count; ``n_r_adj`` is what entered the denominator.
    ``value`` is NaN where ``defined`` is False.
    """

    config: CdConfig
    n_cites: np.ndarray
    n_f: np.ndarray
    n_b: np.ndarray
    n_r: np.ndarray
    n_r_adj: np.ndarray
    value: np.ndarray
    defined: np.ndarray

    def __len__(self) -> int:
        return self.value.shape[0]

    def get(self, i: int) -> float | None:
        return float(self.value[i]) if self.defined[i] else None


def cd_all(graph: CitationGraph, config: CdConfig = CdConfig(), backend: str | None = None) -> CdResult:
    """CD values for every node. Output is independent of the worker count."""
    fb_lo, r_lo, hi = window_bounds(graph, config)
    n_cites, n_b, n_r = kernels.partition_counts(
        graph.out_ptr, graph.out_idx, graph.in_ptr, graph.in_idx, graph.time, fb_lo, r_lo, hi,
        backend=backend,
    )
    n_f = n_cites - n_b
    n_r_adj = _adjusted_nr(graph, np.arange(graph.n), n_r, config)
    value, defined = _ratio(n_f.astype(np.float64), n_b.astype(np.float64), n_r_adj)
    return CdResult(config, n_cites, n_f, n_b, n_r, n_r_adj, value, defined)


@dataclass(frozen=True, eq=False)
class YearSeries:
    """Per-year mean with 95% normal-approximation bands.

    ``stderr`` (and with it the band) is NaN for years with a single value.
    """

    group: str
    year: np.ndarray
    mean: np.ndarray
    count: np.ndarray
    stderr: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def __len__(self) -> int:
        return self.year.shape[0]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.year.tolist(), self.mean.tolist()))


def series_from_values(years: np.ndarray, values: np.ndarray, group: str = "all") -> YearSeries:
    years = np.asarray(years, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    uniq, inverse = np.unique(years, return_inverse=True)
    inverse = inverse.ravel()
    count = np.bincount(inverse, minlength=uniq.size)
    mean = np.bincount(inverse, weights=values, minlength=uniq.size) / np.maximum(count, 1)
    sq = np.bincount(inverse, weights=(values - mean[inverse]) ** 2, minlength=uniq.size)
    stderr = np.full(uniq.size, np.nan)
    ok = count >= 2
    stderr[ok] = np.sqrt(sq[ok] / (count[ok] - 1)) / np.sqrt(count[ok])
    return YearSeries(group, uniq, mean, count, stderr, mean - _Z95 * stderr, mean + _Z95 * stderr)


def yearly_mean(values: CdResult, graph: CitationGraph, group: str | None = None,
                mask: np.ndarray | None = None) -> list[YearSeries]:
    """Mean CD per publication year over defined values.

    ``group="field"`` returns one series per field label (unlabelled nodes
    left out); otherwise a single series labelled ``"all"``.  ``mask``
    restricts the nodes considered.
    """
    keep = values.defined.copy()
    if mask is not None:
        keep &= mask
    if group is None:
        return [series_from_values(graph.year[keep], values.value[keep])]
    if group != "field":
        raise SchemaError(f"unknown grouping {group!r}; only 'field' is supported")
    out = []
    for code, name in enumerate(graph.field_names):
        sel = keep & (graph.field_codes == code)
        if sel.any():
            out.append(series_from_values(graph.year[sel], values.value[sel], group=name))
    return out
