"""Fixed-range histograms of CD values, with optional emulation of the
binwidth edge bug that silently discards values equal to the range maximum."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError

CORRECT = "correct"
BUG = "bug"


@dataclass(frozen=True)
class HistogramSpec:
    """Exactly one of ``bins`` and ``binwidth`` must be given.

    In ``correct`` mode the last bin is closed on the right.  In ``bug``
    mode every bin is half-open ``[a, b)``, so points sitting on the upper
    range limit fall outside the last bin and are dropped.
    """

    mode: str = CORRECT
    bins: int | None = None
    binwidth: float | None = None
    range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.mode not in (CORRECT, BUG):
            raise SchemaError(f"histogram mode must be {CORRECT!r} or {BUG!r}, got {self.mode!r}")
        if (self.bins is None) == (self.binwidth is None):
            raise SchemaError("give exactly one of bins and binwidth")
        if self.bins is not None and int(self.bins) < 1:
            raise SchemaError("bins must be a positive integer")
        if self.binwidth is not None and not self.binwidth > 0:
            raise SchemaError("binwidth must be positive")
        lo, hi = self.range
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise SchemaError(f"invalid histogram range {self.range}")

    def edges(self) -> np.ndarray:
        lo, hi = (float(x) for x in self.range)
        if self.bins is not None:
            return np.linspace(lo, hi, int(self.bins) + 1)
        w = float(self.binwidth)
        nb = max(1, math.ceil((hi - lo) / w - 1e-9))
        edges = lo + w * np.arange(nb + 1, dtype=np.float64)
        # a width that does not divide the range leaves a narrower last bin
        edges[-1] = hi
        return edges


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    dropped: int
    mode: str

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram(values, spec: HistogramSpec) -> Histogram:
    """Bin table of ``values``; ``dropped`` counts the points not in any bin."""
    v = np.asarray(values, dtype=np.float64).ravel()
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise SchemaError("histogram needs at least one value")
    edges = spec.edges()
    nb = edges.size - 1
    if spec.mode == CORRECT:
        inside = (v >= edges[0]) & (v <= edges[-1])
        counts, _ = np.histogram(v[inside], bins=edges)
    else:
        idx = np.searchsorted(edges, v, side="right") - 1
        inside = (idx >= 0) & (idx < nb)
        counts = np.bincount(idx[inside], minlength=nb)
    counts = counts.astype(np.int64)
    return Histogram(edges, counts, int(v.size - counts.sum()), spec.mode)
