"""Seeded synthetic citation corpora with a per-year zero-reference artefact schedule."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .cdindex import RAW, CdConfig, CdResult
from .errors import SchemaError
from .graph import FULL_DATE, YEAR_ONLY, CitationGraph, write_graph

REGULAR = "regular"
ARTEFACT = "artefact"
STRUCTURAL = "structural"

UNIFORM_PAST = "uniform"
PREFERENTIAL_PAST = "preferential"


def linear_schedule(n_years: int, start: float = 0.30, end: float = 0.05) -> tuple[float, ...]:
    if n_years == 1:
        return (float(start),)
    return tuple(float(x) for x in np.linspace(start, end, n_years))


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``ref_probs[k - 1]`` is the probability that a regular node makes ``k``
    references.  ``artefact_share`` defaults to a linear decline from 0.30
    to 0.05 over the year range.  References are drawn from the preceding
    ``lookback`` years.
    """

    seed: int = 0
    years: tuple[int, int] = (1980, 2009)
    nodes_per_year: int = 500
    artefact_share: tuple[float, ...] | None = None
    ref_probs: tuple[float, ...] = (0.05,) * 20
    attachment: str = UNIFORM_PAST
    lookback: int = 2
    fields: tuple[str, ...] = ("biology", "chemistry", "physics")
    field_probs: tuple[float, ...] | None = None
    max_authors: int = 8
    resolution: str = FULL_DATE

    def __post_init__(self):
        lo, hi = self.years
        if hi < lo:
            raise SchemaError(f"year range {self.years} is empty")
        if self.artefact_share is not None:
            if len(self.artefact_share) != hi - lo + 1:
                raise SchemaError(
                    f"artefact_share has {len(self.artefact_share)} entries for {hi - lo + 1} years")
            if any(not 0.0 <= s <= 1.0 for s in self.artefact_share):
                raise SchemaError("artefact shares must lie in [0, 1]")
        if self.nodes_per_year < 1:
            raise SchemaError("nodes_per_year must be positive")
        p = np.asarray(self.ref_probs, dtype=float)
        if p.size == 0 or (p < 0).any() or not np.isclose(p.sum(), 1.0):
            raise SchemaError("ref_probs must be a probability vector over 1..R references")
        if self.attachment not in (UNIFORM_PAST, PREFERENTIAL_PAST):
            raise SchemaError(f"attachment must be {UNIFORM_PAST!r} or {PREFERENTIAL_PAST!r}")
        if self.lookback < 1:
            raise SchemaError("lookback must be at least one year")
        if self.field_probs is not None and len(self.field_probs) != len(self.fields):
            raise SchemaError("field_probs must match fields")
        if self.resolution not in (FULL_DATE, YEAR_ONLY):
            raise SchemaError(f"resolution must be 'date' or 'year', got {self.resolution!r}")

    @property
    def schedule(self) -> tuple[float, ...]:
        if self.artefact_share is not None:
            return tuple(self.artefact_share)
        return linear_schedule(self.years[1] - self.years[0] + 1)


@dataclass(frozen=True, eq=False)
class SynthCorpus:
    graph: CitationGraph
    node_class: np.ndarray = field(repr=False)
    config: SynthConfig = field(repr=False)

    def class_mask(self, cls: str) -> np.ndarray:
        return self.node_class == cls

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"nodes": out / "nodes.csv", "edges": out / "edges.csv", "truth": out / "truth.csv"}
        write_graph(self.graph, paths["nodes"], paths["edges"])
        with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "class"])
            w.writerows(zip(self.graph.keys, self.node_class.tolist()))
        return paths


def read_truth(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["id"]: row["class"] for row in csv.DictReader(fh)}


def generate(config: SynthConfig = SynthConfig()) -> SynthCorpus:
    """Build a corpus whose every edge points strictly back in time.

    Artefact nodes make no references and each gets at least one citation
    from the following year; the final year has no later citers, so its
    schedule entry cannot be realised and no artefacts are planted there.
    Regular nodes in the first year have nothing to cite and are labelled
    structural.
    """
    rng = np.random.default_rng(config.seed)
    y0, y1 = config.years
    years = np.arange(y0, y1 + 1)
    per_year = config.nodes_per_year
    n = per_year * years.size
    schedule = config.schedule
    ref_k = np.arange(1, len(config.ref_probs) + 1)
    ref_p = np.asarray(config.ref_probs, dtype=float)
    ref_p = ref_p / ref_p.sum()

    node_year = np.repeat(years, per_year)
    node_class = np.empty(n, dtype=object)
    for yi in range(years.size):
        block = slice(yi * per_year, (yi + 1) * per_year)
        n_art = int(round(schedule[yi] * per_year)) if yi < years.size - 1 else 0
        if yi + 1 < years.size and n_art >= per_year:
            raise SchemaError(f"year {years[yi]}: artefact share 1.0 leaves no regular node to cite it")
        labels = np.array([ARTEFACT] * n_art + [REGULAR] * (per_year - n_art), dtype=object)
        node_class[block] = labels[rng.permutation(per_year)]
    node_class[:per_year][node_class[:per_year] == REGULAR] = STRUCTURAL

    in_deg = np.zeros(n, dtype=np.int64)
    src: list[int] = []
    dst: list[int] = []
    for yi in range(1, years.size):
        base = yi * per_year
        regular_here = base + np.flatnonzero(node_class[base:base + per_year] == REGULAR)
        designated: dict[int, list[int]] = {}
        prev = (yi - 1) * per_year
        for a in prev + np.flatnonzero(node_class[prev:prev + per_year] == ARTEFACT):
            citer = int(regular_here[rng.integers(regular_here.size)])
            designated.setdefault(citer, []).append(int(a))
        pool_lo = max(0, yi - config.lookback) * per_year
        pool = np.arange(pool_lo, base)
        for i in regular_here.tolist():
            fixed = designated.get(i, [])
            k = int(rng.choice(ref_k, p=ref_p))
            want = max(k - len(fixed), 0)
            take = min(want + len(fixed), pool.size)
            if config.attachment == PREFERENTIAL_PAST:
                w = (in_deg[pool] + 1).astype(float)
                drawn = rng.choice(pool, size=take, replace=False, p=w / w.sum())
            else:
                drawn = rng.choice(pool, size=take, replace=False)
            fixed_set = set(fixed)
            extra = [int(j) for j in drawn if int(j) not in fixed_set][:want]
            refs = fixed + extra
            src.extend([i] * len(refs))
            dst.extend(refs)
            in_deg[refs] += 1

    if config.resolution == FULL_DATE:
        starts = np.array([date(int(y), 1, 1).toordinal() for y in years])
        lengths = np.array([date(int(y) + 1, 1, 1).toordinal() for y in years]) - starts
        yi = node_year - y0
        time = starts[yi] + (rng.random(n) * lengths[yi]).astype(np.int64)
    else:
        time = node_year.astype(np.int64)

    if config.fields:
        fp = None if config.field_probs is None else np.asarray(config.field_probs, float) / np.sum(config.field_probs)
        fields = [config.fields[c] for c in rng.choice(len(config.fields), size=n, p=fp)]
    else:
        fields = None
    authors = rng.integers(1, config.max_authors + 1, size=n).astype(float)

    width = len(str(n - 1))
    keys = [f"n{i:0{width}d}" for i in range(n)]
    graph = CitationGraph.from_arrays(keys, time, config.resolution, src, dst, fields=fields, n_authors=authors)
    return SynthCorpus(graph=graph, node_class=node_class.astype(str), config=config)


def discontinuity_values(graph: CitationGraph, seed: int = 0, base: float = 0.3, slope: float = -0.005,
                         noise: float = 0.01) -> CdResult:
    """Constructed CD response: exactly 1 for zero-reference nodes, otherwise
    ``base + slope * n_refs`` plus Gaussian noise.  All values are defined.
    """
    rng = np.random.default_rng(seed)
    refs = graph.out_degree.astype(np.float64)
    value = base + slope * refs + rng.normal(0.0, noise, size=graph.n)
    value[refs == 0] = 1.0
    value = np.clip(value, -1.0, 1.0)
    zeros = np.zeros(graph.n, dtype=np.int64)
    return CdResult(
        config=CdConfig(resolution=graph.kind, normalization=RAW),
        n_cites=zeros, n_f=zeros, n_b=zeros, n_r=zeros, n_r_adj=zeros.astype(float),
        value=value, defined=np.ones(graph.n, dtype=bool),
    )


def discontinuity_corpus(seed: int = 0, max_refs: int = 30, zero_ref_share: float = 0.15,
                         years: Sequence[int] = (1990, 2009), nodes_per_year: int = 300) -> SynthCorpus:
    """Corpus for the regression diagnostics: a flat zero-reference share and
    reference counts spread over 1..max_refs."""
    n_years = years[1] - years[0] + 1
    return generate(SynthConfig(
        seed=seed, years=tuple(years), nodes_per_year=nodes_per_year,
        artefact_share=(zero_ref_share,) * n_years,
        ref_probs=(1.0 / max_refs,) * max_refs, lookback=3,
    ))
