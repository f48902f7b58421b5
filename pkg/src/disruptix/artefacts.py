"""Zero-reference / CD=1 artefact flags, frequency diagnostics, exclusion policies."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cdindex import CdResult, YearSeries, yearly_mean
from .graph import CitationGraph


class ExclusionPolicy(str, Enum):
    NONE = "none"
    DROP_CD_ONE = "cd1"
    DROP_ZERO_REF = "zeroref"
    DROP_ZERO_REF_CD_ONE = "zeroref-cd1"

    @classmethod
    def parse(cls, value) -> "ExclusionPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown exclusion policy {value!r}; choose from {choices}") from None


@dataclass(frozen=True, eq=False)
class ArtefactFlags:
    zero_ref: np.ndarray
    cd_eq_one: np.ndarray
    defined: np.ndarray

    @property
    def zero_ref_cd_one(self) -> np.ndarray:
        return self.zero_ref & self.cd_eq_one


def flag(graph: CitationGraph, values: CdResult) -> ArtefactFlags:
    zero_ref = graph.out_degree == 0
    cd_eq_one = values.defined & (values.value == 1.0)
    # a value of exactly 1 can only arise as N_F / N_F
    semantic = values.defined & (values.n_b == 0) & (values.n_r_adj == 0) & (values.n_f > 0)
    assert np.array_equal(cd_eq_one, semantic), "CD == 1 without N_B = N_R = 0"
    return ArtefactFlags(zero_ref=zero_ref, cd_eq_one=cd_eq_one, defined=values.defined.copy())


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Per-year ratio numerator / denominator; ``share`` NaN when denominator is 0."""

    year: np.ndarray
    denominator: np.ndarray
    numerator: np.ndarray
    share: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.year.tolist(), self.share.tolist()))


def _per_year(graph: CitationGraph, numerator: np.ndarray, denominator: np.ndarray) -> FrequencyTable:
    years = np.unique(graph.year)
    pos = np.searchsorted(years, graph.year)
    num = np.bincount(pos, weights=numerator, minlength=years.size).astype(np.int64)
    den = np.bincount(pos, weights=denominator, minlength=years.size).astype(np.int64)
    share = np.full(years.size, np.nan)
    np.divide(num, den, out=share, where=den > 0)
    return FrequencyTable(years, den, num, share)


def share_zero_ref_within_cd_one(flags: ArtefactFlags, graph: CitationGraph) -> tuple[float, FrequencyTable]:
    """Fraction of CD = 1 nodes that have zero references, overall and per year."""
    num = flags.zero_ref_cd_one
    den = flags.cd_eq_one
    total = int(den.sum())
    overall = float(num.sum()) / total if total else float("nan")
    return overall, _per_year(graph, num, den)


def relative_frequency_series(flags: ArtefactFlags, graph: CitationGraph) -> FrequencyTable:
    """Per year: (zero references and CD = 1) / defined CD values."""
    return _per_year(graph, flags.zero_ref_cd_one, flags.defined)


def exclusion_mask(flags: ArtefactFlags, policy) -> np.ndarray:
    policy = ExclusionPolicy.parse(policy)
    if policy is ExclusionPolicy.NONE:
        return np.ones_like(flags.zero_ref)
    if policy is ExclusionPolicy.DROP_CD_ONE:
        return ~flags.cd_eq_one
    if policy is ExclusionPolicy.DROP_ZERO_REF:
        return ~flags.zero_ref
    return ~flags.zero_ref_cd_one


def filtered_yearly_mean(values: CdResult, flags: ArtefactFlags, graph: CitationGraph, policy,
                         group: str | None = None) -> list[YearSeries]:
    return yearly_mean(values, graph, group=group, mask=exclusion_mask(flags, policy))
