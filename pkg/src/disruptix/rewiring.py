"""Degree- and year-preserving rewiring null model, z-scores and gap series."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._accel import worker_count
from .cdindex import CdConfig, CdResult, YearSeries, cd_all, yearly_mean
from .errors import SchemaError
from .graph import CitationGraph

_BATCH = 1 << 16


class RewireSaturationWarning(UserWarning):
    """The attempt cap was reached before the retained-swap target."""


@dataclass(frozen=True)
class RewireConfig:
    """Swap-walk settings.

    Run ``k`` draws from ``PCG64(seed + k)``.  A run stops after
    ``retained_multiplier * |E|`` retained swaps or
    ``max_attempts_multiplier * |E|`` attempts, whichever comes first.
    """

    seed: int = 0
    retained_multiplier: int = 100
    max_attempts_multiplier: int = 10_000
    runs: int = 10

    def __post_init__(self):
        if self.retained_multiplier < 1 or self.max_attempts_multiplier < 1 or self.runs < 1:
            raise SchemaError("retained_multiplier, max_attempts_multiplier and runs must be positive")


@dataclass(frozen=True, eq=False)
class RewireResult:
    graph: CitationGraph
    retained: int
    attempts: int
    seed: int
    run_index: int
    saturated: bool


def _strata(graph: CitationGraph):
    # (citer year, cited year) class of every edge slot
    key = graph.year[graph.citer] * (graph.year.max() - graph.year.min() + 1) + (graph.year[graph.cited] - graph.year.min())
    _, slot_stratum = np.unique(key, return_inverse=True)
    slot_stratum = slot_stratum.ravel().astype(np.int64)
    size = np.bincount(slot_stratum).astype(np.int64)
    start = np.zeros_like(size)
    np.cumsum(size[:-1], out=start[1:])
    edges = np.argsort(slot_stratum, kind="stable").astype(np.int64)
    return slot_stratum, start, size, edges


def rewire(graph: CitationGraph, config: RewireConfig = RewireConfig(), run_index: int = 0,
           backend: str | None = None) -> RewireResult:
    """One swap walk: A->B, C->D becomes A->D, C->B.

    Partners are drawn from the edges whose (citer year, cited year) matches
    the first edge, so only year-compatible swaps are proposed; a proposal
    creating a self-loop or duplicate edge counts as a failed attempt.
    """
    m = graph.m
    if m < 2:
        raise SchemaError("rewiring needs at least two edges")
    seed = int(config.seed) + int(run_index)
    rng = np.random.Generator(np.random.PCG64(seed))
    slot_stratum, start, size, edges = _strata(graph)
    slot_cited = np.array(graph.cited, dtype=np.int64)
    citer_of_slot = np.ascontiguousarray(graph.citer, dtype=np.int64)
    out_ptr = np.ascontiguousarray(graph.out_ptr, dtype=np.int64)
    target = config.retained_multiplier * m
    cap = config.max_attempts_multiplier * m
    attempts = retained = 0
    while retained < target and attempts < cap:
        batch = min(_BATCH, cap - attempts)
        first = rng.integers(0, m, size=batch, dtype=np.int64)
        second = rng.random(batch)
        used, retained = kernels.swap_walk(slot_cited, out_ptr, slot_stratum, start, size, edges,
                                           citer_of_slot, first, second, target, retained,
                                           backend=backend)
        attempts += int(used)
    retained = int(retained)
    saturated = retained < target
    if saturated:
        warnings.warn(f"run {run_index}: attempt cap {cap} reached after {retained} of {target} retained swaps",
                      RewireSaturationWarning, stacklevel=2)
    out = graph.with_edges(citer_of_slot, slot_cited)
    if out.m != m or not (np.array_equal(out.out_degree, graph.out_degree)
                          and np.array_equal(out.in_degree, graph.in_degree)):
        raise AssertionError("rewiring changed the degree sequence")
    return RewireResult(out, retained, attempts, seed, int(run_index), saturated)


def rewire_runs(graph: CitationGraph, config: RewireConfig = RewireConfig(),
                backend: str | None = None) -> list[RewireResult]:
    """All runs; independent generators, so they may execute concurrently."""
    workers = min(worker_count(), config.runs)
    if workers <= 1:
        return [rewire(graph, config, k, backend) for k in range(config.runs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda k: rewire(graph, config, k, backend), range(config.runs)))


def mean_over_runs(series: list[YearSeries]) -> YearSeries:
    years = np.unique(np.concatenate([s.year for s in series])) if series else np.empty(0, np.int64)
    table = np.full((len(series), years.size), np.nan)
    for r, s in enumerate(series):
        table[r, np.searchsorted(years, s.year)] = s.mean
    count = (~np.isnan(table)).sum(axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(table, axis=0)
        sd = np.nanstd(table, axis=0, ddof=1)
    stderr = np.where(count >= 2, sd / np.sqrt(np.maximum(count, 1)), np.nan)
    return YearSeries("rewired_mean", years, mean, count, stderr, mean - 1.96 * stderr, mean + 1.96 * stderr)


@dataclass(frozen=True, eq=False)
class RewiredSeries:
    per_run: list[YearSeries]
    mean: YearSeries
    results: list[RewireResult]
    values: list[CdResult]


def rewired_cd_series(graph: CitationGraph, config: RewireConfig = RewireConfig(),
                      cd_config: CdConfig = CdConfig(), backend: str | None = None) -> RewiredSeries:
    results = rewire_runs(graph, config, backend)
    values = [cd_all(r.graph, cd_config, backend=backend) for r in results]
    per_run = []
    for k, (r, v) in enumerate(zip(results, values)):
        s = yearly_mean(v, r.graph)[0]
        per_run.append(YearSeries(f"run{k}", s.year, s.mean, s.count, s.stderr, s.ci_low, s.ci_high))
    return RewiredSeries(per_run, mean_over_runs(per_run), results, values)


@dataclass(frozen=True, eq=False)
class ZScoreTable:
    observed: CdResult
    mu: np.ndarray
    sigma: np.ndarray
    z: np.ndarray
    n_runs_defined: np.ndarray

    @property
    def z_defined(self) -> np.ndarray:
        return ~np.isnan(self.z)


@dataclass(frozen=True, eq=False)
class YearlyZ:
    """Per-year average z, and the ratio of year means of numerator and sigma."""

    year: np.ndarray
    count: np.ndarray
    mean_z: np.ndarray
    mean_gap: np.ndarray
    mean_sigma: np.ndarray
    ratio_of_means: np.ndarray


def z_scores_from_values(observed: CdResult, rewired: list[CdResult]) -> ZScoreTable:
    """Per node (observed - mean rewired) / sd rewired, sd with n - 1.

    z is NaN when the observed value is undefined, fewer than two rewired
    values are defined, or the rewired values have zero spread.
    """
    vals = np.stack([r.value for r in rewired]) if rewired else np.empty((0, len(observed)))
    ok = ~np.isnan(vals)
    k = ok.sum(axis=0)
    total = np.where(ok, vals, 0.0).sum(axis=0)
    mu = np.full(vals.shape[1], np.nan)
    np.divide(total, k, out=mu, where=k > 0)
    dev = np.where(ok, vals - mu, 0.0)
    sigma = np.full(vals.shape[1], np.nan)
    np.divide((dev ** 2).sum(axis=0), k - 1, out=sigma, where=k > 1)
    sigma = np.sqrt(sigma)
    z = np.full(vals.shape[1], np.nan)
    good = observed.defined & (k >= 2) & (sigma > 0)
    z[good] = (observed.value[good] - mu[good]) / sigma[good]
    return ZScoreTable(observed, mu, sigma, z, k)


def z_scores(graph: CitationGraph, config: RewireConfig = RewireConfig(), cd_config: CdConfig = CdConfig(),
             backend: str | None = None) -> ZScoreTable:
    if config.runs < 2:
        raise SchemaError("z-scores need at least two rewired runs")
    observed = cd_all(graph, cd_config, backend=backend)
    rewired = [cd_all(r.graph, cd_config, backend=backend) for r in rewire_runs(graph, config, backend)]
    return z_scores_from_values(observed, rewired)


def yearly_z(table: ZScoreTable, graph: CitationGraph) -> YearlyZ:
    keep = table.z_defined
    years = np.unique(graph.year[keep])
    pos = np.searchsorted(years, graph.year[keep])
    count = np.bincount(pos, minlength=years.size)
    safe = np.maximum(count, 1)
    mean_z = np.bincount(pos, weights=table.z[keep], minlength=years.size) / safe
    gap = np.bincount(pos, weights=(table.observed.value - table.mu)[keep], minlength=years.size) / safe
    sig = np.bincount(pos, weights=table.sigma[keep], minlength=years.size) / safe
    return YearlyZ(years, count, mean_z, gap, sig, gap / sig)


@dataclass(frozen=True, eq=False)
class GapTable:
    year: np.ndarray
    observed: np.ndarray
    rewired: np.ndarray
    gap: np.ndarray
    dropped_years: tuple[int, ...]


def gap_series(observed: YearSeries, rewired_mean: YearSeries) -> GapTable:
    """Per-year rewired minus observed mean on the shared years."""
    common, io, ir = np.intersect1d(observed.year, rewired_mean.year, return_indices=True)
    dropped = tuple(sorted(set(observed.year.tolist()) ^ set(rewired_mean.year.tolist())))
    if dropped:
        warnings.warn(f"gap series: years without a counterpart dropped: {list(dropped)}", stacklevel=2)
    obs = observed.mean[io]
    rew = rewired_mean.mean[ir]
    return GapTable(common, obs, rew, rew - obs, dropped)
