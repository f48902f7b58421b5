"""Temporal citation graph: data model, delimited-text ingestion, validation."""
from __future__ import annotations

import csv
import re
import sys
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaError

FULL_DATE = "date"
YEAR_ONLY = "year"
DATE_KINDS = (FULL_DATE, YEAR_ONLY)

_YEAR_RE = re.compile(r"^-?\d{1,4}$")


@dataclass(frozen=True)
class Schema:
    """Column mapping for the node and edge files.

    ``field`` and ``n_authors`` are optional; they are read only when the
    header names them.  ``date_kind=None`` infers the kind from the data.
    """

    id: str = "id"
    date: str = "date"
    field: str | None = "field"
    n_authors: str | None = "n_authors"
    citer: str = "citer"
    cited: str = "cited"
    delimiter: str = ","
    date_kind: str | None = None


def add_years(d: date, years: int) -> date:
    """Same month/day ``years`` later; Feb 29 falls back to Feb 28."""
    try:
        return d.replace(year=d.year + years)
    except ValueError:
        return d.replace(year=d.year + years, day=28)


_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


def ordinal_to_year(ordinals: np.ndarray) -> np.ndarray:
    days = (np.asarray(ordinals, dtype=np.int64) - _EPOCH_ORDINAL).astype("datetime64[D]")
    return days.astype("datetime64[Y]").astype(np.int64) + 1970


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _csr(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    return ptr, dst[order].astype(np.int64)


@dataclass(frozen=True, eq=False)
class CitationGraph:
    """Immutable directed citation graph, edges citer -> cited.

    ``time`` holds the proleptic day ordinal for full dates and the bare
    year for year-only corpora.  Edges are unique, self-loop free and sorted
    by (citer, cited).  ``out_ptr/out_idx`` index references,
    ``in_ptr/in_idx`` index citers.
    """

    keys: tuple[str, ...]
    kind: str
    time: np.ndarray
    year: np.ndarray
    field_codes: np.ndarray
    field_names: tuple[str, ...]
    n_authors: np.ndarray
    citer: np.ndarray
    cited: np.ndarray
    out_ptr: np.ndarray
    out_idx: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    summary: dict = field(default_factory=dict)
    _index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_arrays(
        cls,
        keys: Sequence[str],
        time: Iterable[int],
        kind: str,
        citer: Iterable[int],
        cited: Iterable[int],
        fields: Sequence[str | None] | None = None,
        n_authors: Sequence[float] | None = None,
    ) -> "CitationGraph":
        if kind not in DATE_KINDS:
            raise SchemaError(f"date kind must be one of {DATE_KINDS}, got {kind!r}")
        keys = tuple(str(k) for k in keys)
        n = len(keys)
        index = {k: i for i, k in enumerate(keys)}
        if len(index) != n:
            seen = set()
            dup = next(k for k in keys if k in seen or seen.add(k))
            raise SchemaError(f"duplicate node id {dup!r}")
        time = np.asarray(list(time) if not isinstance(time, np.ndarray) else time, dtype=np.int64)
        if time.shape != (n,):
            raise SchemaError(f"expected {n} publication dates, got {time.shape[0]}")
        if kind == FULL_DATE:
            year = ordinal_to_year(time)
        else:
            year = time.copy()

        src = np.asarray(citer, dtype=np.int64).ravel()
        dst = np.asarray(cited, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise SchemaError("citer and cited arrays differ in length")
        if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise SchemaError("edge endpoint outside 0..n-1")
        raw_edges = int(src.size)
        loops = src == dst
        n_loops = int(loops.sum())
        src, dst = src[~loops], dst[~loops]
        code = np.unique(src * max(n, 1) + dst)
        n_dup = int(src.size - code.size)
        src, dst = code // max(n, 1), code % max(n, 1)

        if fields is None:
            field_names: tuple[str, ...] = ()
            field_codes = np.full(n, -1, dtype=np.int64)
        else:
            if len(fields) != n:
                raise SchemaError(f"expected {n} field labels, got {len(fields)}")
            field_names = tuple(sorted({f for f in fields if f not in (None, "")}))
            lookup = {f: c for c, f in enumerate(field_names)}
            field_codes = np.array([lookup.get(f, -1) if f not in (None, "") else -1 for f in fields],
                                   dtype=np.int64)
        if n_authors is None:
            authors = np.full(n, np.nan)
        else:
            authors = np.asarray(n_authors, dtype=np.float64)
            if authors.shape != (n,):
                raise SchemaError(f"expected {n} author counts, got {authors.shape[0]}")

        out_ptr, out_idx = _csr(src, dst, n)
        in_ptr, in_idx = _csr(dst, src, n)
        summary = {
            "nodes": n,
            "edges_read": raw_edges,
            "edges": int(src.size),
            "duplicate_edges": n_dup,
            "self_loops": n_loops,
        }
        return cls(
            keys=keys,
            kind=kind,
            time=_readonly(time),
            year=_readonly(year),
            field_codes=_readonly(field_codes),
            field_names=field_names,
            n_authors=_readonly(authors),
            citer=_readonly(src),
            cited=_readonly(dst),
            out_ptr=_readonly(out_ptr),
            out_idx=_readonly(out_idx),
            in_ptr=_readonly(in_ptr),
            in_idx=_readonly(in_idx),
            summary=summary,
            _index=index,
        )

    @property
    def n(self) -> int:
        return len(self.keys)

    @property
    def m(self) -> int:
        return int(self.citer.size)

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    @property
    def has_fields(self) -> bool:
        return bool(self.field_names)

    @property
    def has_authors(self) -> bool:
        return bool(self.n) and not np.isnan(self.n_authors).any()

    def node_id(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"unknown node {key!r}") from None

    def references(self, i: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[i]:self.out_ptr[i + 1]]

    def citers(self, i: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[i]:self.in_ptr[i + 1]]

    def field_of(self, i: int) -> str | None:
        c = self.field_codes[i]
        return None if c < 0 else self.field_names[c]

    def date_string(self, i: int) -> str:
        if self.kind == FULL_DATE:
            return date.fromordinal(int(self.time[i])).isoformat()
        return str(int(self.time[i]))

    def fields_list(self) -> list[str | None] | None:
        if not self.has_fields:
            return None
        return [self.field_of(i) for i in range(self.n)]

    def with_edges(self, citer: np.ndarray, cited: np.ndarray) -> "CitationGraph":
        """Same nodes, different edge set."""
        return CitationGraph.from_arrays(
            self.keys, self.time, self.kind, citer, cited,
            fields=self.fields_list(),
            n_authors=None if np.isnan(self.n_authors).all() else self.n_authors,
        )


@dataclass
class TemporalViolationReport:
    count: int
    sample: list[tuple[str, str]]


def validate_temporal(graph: CitationGraph, cap: int = 20) -> TemporalViolationReport:
    """Edges whose citer is not strictly later than the cited node.

    Year-only corpora allow same-year citations.
    """
    if graph.kind == FULL_DATE:
        bad = graph.time[graph.citer] <= graph.time[graph.cited]
    else:
        bad = graph.year[graph.citer] < graph.year[graph.cited]
    idx = np.flatnonzero(bad)
    sample = [(graph.keys[graph.citer[e]], graph.keys[graph.cited[e]]) for e in idx[:cap]]
    return TemporalViolationReport(count=int(idx.size), sample=sample)


def degrees(graph: CitationGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (in_degree, out_degree)."""
    return graph.in_degree.copy(), graph.out_degree.copy()


def _parse_date(raw: str, kind: str | None, where: str) -> tuple[str, int]:
    raw = raw.strip()
    is_year = bool(_YEAR_RE.match(raw))
    if kind is None:
        kind = YEAR_ONLY if is_year else FULL_DATE
    if kind == YEAR_ONLY:
        if not is_year:
            raise SchemaError(f"{where}: expected a bare year, got {raw!r}")
        return kind, int(raw)
    try:
        return kind, date.fromisoformat(raw).toordinal()
    except ValueError:
        raise SchemaError(f"{where}: unparseable date {raw!r}") from None


def _open_reader(path: Path, delimiter: str):
    fh = open(path, newline="", encoding="utf-8")
    return fh, csv.reader(fh, delimiter=delimiter)


def _header_index(header: list[str], name: str, path: Path, required: bool = True) -> int | None:
    if name in header:
        return header.index(name)
    if required:
        raise SchemaError(f"{path}: missing column {name!r} (header: {','.join(header)})")
    return None


def load_graph(nodes_path, edges_path, schema: Schema = Schema()) -> CitationGraph:
    """Read node and edge files into a validated :class:`CitationGraph`.

    Duplicate edges and self-loops are dropped and counted in
    ``graph.summary``.  Raises :class:`SchemaError` on unparseable rows,
    unknown edge endpoints, duplicate node ids and mixed date kinds.
    """
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    kind = schema.date_kind
    if kind is not None and kind not in DATE_KINDS:
        raise SchemaError(f"date kind must be one of {DATE_KINDS}, got {kind!r}")

    keys: list[str] = []
    times: list[int] = []
    fields: list[str | None] = []
    authors: list[float] = []
    fh, reader = _open_reader(nodes_path, schema.delimiter)
    with fh:
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{nodes_path}: empty file")
        header = [h.strip() for h in header]
        c_id = _header_index(header, schema.id, nodes_path)
        c_date = _header_index(header, schema.date, nodes_path)
        c_field = _header_index(header, schema.field, nodes_path, False) if schema.field else None
        c_auth = _header_index(header, schema.n_authors, nodes_path, False) if schema.n_authors else None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{nodes_path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            where = f"{nodes_path}:{lineno}"
            row_kind, t = _parse_date(row[c_date], kind, where)
            if kind is None:
                kind = row_kind
            keys.append(row[c_id].strip())
            times.append(t)
            if c_field is not None:
                fields.append(row[c_field].strip() or None)
            if c_auth is not None:
                raw = row[c_auth].strip()
                if raw == "":
                    authors.append(np.nan)
                else:
                    try:
                        a = int(raw)
                    except ValueError:
                        raise SchemaError(f"{where}: n_authors must be a non-negative integer, got {raw!r}") from None
                    if a < 0:
                        raise SchemaError(f"{where}: n_authors must be a non-negative integer, got {raw!r}")
                    authors.append(float(a))
    if kind is None:
        kind = FULL_DATE

    index: dict[str, int] = {}
    for i, k in enumerate(keys):
        if k in index:
            raise SchemaError(f"{nodes_path}: duplicate node id {k!r}")
        index[k] = i

    src: list[int] = []
    dst: list[int] = []
    fh, reader = _open_reader(edges_path, schema.delimiter)
    with fh:
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{edges_path}: empty file")
        header = [h.strip() for h in header]
        c_src = _header_index(header, schema.citer, edges_path)
        c_dst = _header_index(header, schema.cited, edges_path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{edges_path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            a, b = row[c_src].strip(), row[c_dst].strip()
            for k in (a, b):
                if k not in index:
                    raise SchemaError(f"{edges_path}:{lineno}: edge references unknown node {k!r}")
            src.append(index[a])
            dst.append(index[b])

    return CitationGraph.from_arrays(
        keys, np.array(times, dtype=np.int64), kind, src, dst,
        fields=fields if fields else None,
        n_authors=authors if authors else None,
    )


def write_graph(graph: CitationGraph, nodes_path, edges_path=None, delimiter: str = ",") -> None:
    """Write graph in the node/edge file format read by :func:`load_graph`."""
    has_auth = not np.isnan(graph.n_authors).all()
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        header = ["id", "date"] + (["field"] if graph.has_fields else []) + (["n_authors"] if has_auth else [])
        w.writerow(header)
        for i in range(graph.n):
            row = [graph.keys[i], graph.date_string(i)]
            if graph.has_fields:
                row.append(graph.field_of(i) or "")
            if has_auth:
                a = graph.n_authors[i]
                row.append("" if np.isnan(a) else str(int(a)))
            w.writerow(row)
    if edges_path is not None:
        write_edges(graph, edges_path, delimiter)


def write_edges(graph: CitationGraph, path, delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["citer", "cited"])
        keys = graph.keys
        w.writerows((keys[a], keys[b]) for a, b in zip(graph.citer.tolist(), graph.cited.tolist()))


def emit_summary(graph: CitationGraph, stream=None) -> None:
    stream = sys.stderr if stream is None else stream
    for k, v in graph.summary.items():
        print(f"{k}={v}", file=stream)
