"""Fixed-effects OLS adjustment of CD values with a zero-reference dummy."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .cdindex import CdResult
from .errors import NumericError, SchemaError
from .graph import CitationGraph

INTERCEPT = "intercept"
N_REFS = "n_refs"
CELL_N = "cell_n_entities"
CELL_REFS = "cell_mean_refs"
CELL_AUTHORS = "cell_mean_authors"
ZERO_REFS = "zero_refs"
CONTROLS = (N_REFS, CELL_N, CELL_REFS, CELL_AUTHORS)

# |R_jj| below this (unit-norm columns) marks a column as linearly dependent
_RANK_TOL = 1e-9


@dataclass(frozen=True)
class RegressionSpec:
    include_zero_ref_dummy: bool = False
    dummy_at_refcount: int | None = None
    year_effects: bool = True
    field_effects: bool = True
    controls: tuple[str, ...] = CONTROLS

    def __post_init__(self):
        if self.include_zero_ref_dummy and self.dummy_at_refcount is not None:
            raise SchemaError("include_zero_ref_dummy and dummy_at_refcount are mutually exclusive")
        if self.dummy_at_refcount is not None and self.dummy_at_refcount < 0:
            raise SchemaError("dummy_at_refcount must be non-negative")
        unknown = set(self.controls) - set(CONTROLS)
        if unknown:
            raise SchemaError(f"unknown controls: {sorted(unknown)}")


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    nodes: np.ndarray
    n_refs: np.ndarray
    years: np.ndarray
    reference_year: int | None
    reference_field: str | None
    excluded: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def _dummy_name(spec: RegressionSpec) -> str | None:
    if spec.include_zero_ref_dummy:
        return ZERO_REFS
    if spec.dummy_at_refcount is not None:
        return f"refs={spec.dummy_at_refcount}"
    return None


def build_design(graph: CitationGraph, values: CdResult, spec: RegressionSpec = RegressionSpec()) -> Design:
    """Design matrix for CD on year and field dummies plus controls.

    The first year and the lexicographically first field are the reference
    levels.  Cell controls are computed per (field, year) over the rows kept
    in the estimation sample.
    """
    notes: list[str] = []
    keep = values.defined.copy()
    excluded = {"undefined": int((~values.defined).sum())}
    use_fields = spec.field_effects and graph.has_fields
    if graph.has_fields:
        unlabelled = keep & (graph.field_codes < 0)
        excluded["no_field"] = int(unlabelled.sum())
        keep &= ~unlabelled
    elif spec.field_effects:
        notes.append("graph has no field labels; field fixed effects omitted")
    rows = np.flatnonzero(keep)
    n = rows.size
    year = graph.year[rows]
    fcode = graph.field_codes[rows] if use_fields else np.zeros(n, dtype=np.int64)
    refs = graph.out_degree[rows].astype(np.float64)

    cols: list[np.ndarray] = [np.ones(n)]
    names: list[str] = [INTERCEPT]
    uyears = np.unique(year)
    ref_year = int(uyears[0]) if uyears.size else None
    if spec.year_effects:
        for yv in uyears[1:]:
            cols.append((year == yv).astype(np.float64))
            names.append(f"year={int(yv)}")
    ref_field = None
    if use_fields:
        present = np.unique(fcode)
        ref_field = graph.field_names[present[0]] if present.size else None
        for c in present[1:]:
            cols.append((fcode == c).astype(np.float64))
            names.append(f"field={graph.field_names[c]}")

    cell_key = fcode * (int(year.max()) + 1 if n else 1) + year if n else year
    _, cell = np.unique(cell_key, return_inverse=True)
    cell = cell.ravel()
    cell_n = np.bincount(cell).astype(np.float64)
    for ctrl in spec.controls:
        if ctrl == N_REFS:
            col = refs
        elif ctrl == CELL_N:
            col = cell_n[cell]
        elif ctrl == CELL_REFS:
            col = (np.bincount(cell, weights=refs) / cell_n)[cell]
        else:
            auth = graph.n_authors[rows]
            if n == 0 or np.isnan(auth).any():
                notes.append("author counts missing; cell_mean_authors omitted")
                continue
            col = (np.bincount(cell, weights=auth) / cell_n)[cell]
        cols.append(np.asarray(col, dtype=np.float64))
        names.append(ctrl)
    dummy = _dummy_name(spec)
    if dummy is not None:
        k = 0 if spec.include_zero_ref_dummy else spec.dummy_at_refcount
        cols.append((refs == k).astype(np.float64))
        names.append(dummy)

    for note in notes:
        warnings.warn(note, stacklevel=2)
    X = np.column_stack(cols) if n else np.empty((0, len(cols)))
    return Design(X=X, y=values.value[rows].astype(np.float64), names=tuple(names), nodes=rows,
                  n_refs=graph.out_degree[rows].copy(), years=year, reference_year=ref_year,
                  reference_field=ref_field, excluded=excluded, notes=tuple(notes))


def independent_columns(X: np.ndarray) -> np.ndarray:
    """Boolean mask keeping, in column order, each column not spanned by earlier ones."""
    norms = np.linalg.norm(X, axis=0)
    keep = norms > 0
    if not keep.any():
        return keep
    scaled = np.where(norms > 0, X / np.where(norms > 0, norms, 1.0), 0.0)
    r = np.linalg.qr(scaled, mode="r")
    diag = np.abs(np.diag(r))
    keep &= diag > _RANK_TOL
    return keep


@dataclass(frozen=True, eq=False)
class RegressionFit:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    dropped: tuple[str, ...]
    n: int
    r2: float
    adjusted_r2: float
    sigma2: float
    residuals: np.ndarray
    design: Design = field(repr=False)

    @property
    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.names, self.coef.tolist()))

    def coef_of(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    @property
    def X(self) -> np.ndarray:
        kept = [self.design.names.index(nm) for nm in self.names]
        return self.design.X[:, kept]


def fit_ols(design: Design) -> RegressionFit:
    """Least squares through a Householder QR of the kept columns.

    Linearly dependent columns are dropped in column order with a warning.
    Adjusted R^2 uses p = number of kept non-intercept columns.
    """
    X, y = design.X, design.y
    if X.shape[0] <= X.shape[1]:
        raise NumericError(f"need more observations ({X.shape[0]}) than columns ({X.shape[1]})")
    keep = independent_columns(X)
    dropped = tuple(nm for nm, k in zip(design.names, keep) if not k)
    if dropped:
        warnings.warn(f"dropping linearly dependent columns: {', '.join(dropped)}", stacklevel=2)
    Xk = X[:, keep]
    names = tuple(nm for nm, k in zip(design.names, keep) if k)
    n, k = Xk.shape
    q, r = np.linalg.qr(Xk)
    beta = linalg.solve_triangular(r, q.T @ y)
    resid = y - Xk @ beta
    ssr = float(resid @ resid)
    centered = y - y.mean()
    sst = float(centered @ centered)
    r2 = 0.0 if sst == 0 else 1.0 - ssr / sst
    p = k - (1 if INTERCEPT in names else 0)
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1) if n - p - 1 > 0 else float("nan")
    dof = n - k
    sigma2 = ssr / dof
    rinv = linalg.solve_triangular(r, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(rinv ** 2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.nan)
    pval = 2.0 * stats.t.sf(np.abs(t), dof)
    return RegressionFit(names, beta, se, t, pval, dropped, n, r2, adj, sigma2, resid, design)


def fit(graph: CitationGraph, values: CdResult, spec: RegressionSpec = RegressionSpec()) -> RegressionFit:
    return fit_ols(build_design(graph, values, spec))


def squared_loss(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    r = y - X @ beta
    return float(r @ r)


def loss_gradient(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return -2.0 * X.T @ (y - X @ beta)


def orthogonality(fit: RegressionFit) -> float:
    """max_j |X_j' r| / (||X_j|| ||y||)."""
    X = fit.X
    scale = np.linalg.norm(X, axis=0) * max(np.linalg.norm(fit.design.y), np.finfo(float).tiny)
    return float(np.max(np.abs(X.T @ fit.residuals) / scale))


def rmse_by_refcount(fit: RegressionFit, graph: CitationGraph | None = None, cap: int = 100) -> dict:
    """Residual RMSE per exact reference count; counts above ``cap`` pooled under ``f">{cap}"``."""
    refs = fit.design.n_refs
    out: dict = {}
    for k in np.unique(refs[refs <= cap]).tolist():
        r = fit.residuals[refs == k]
        out[int(k)] = float(np.sqrt(np.mean(r ** 2)))
    tail = refs > cap
    if tail.any():
        out[f">{cap}"] = float(np.sqrt(np.mean(fit.residuals[tail] ** 2)))
    return out


def dummy_sweep(graph: CitationGraph, values: CdResult, k_max: int,
                base: RegressionSpec = RegressionSpec()) -> dict[int, float]:
    """Adjusted R^2 with a single refs==k dummy, for k = 0..k_max."""
    if k_max < 1:
        raise SchemaError("k_max must be at least 1")
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k in range(k_max + 1):
            spec = RegressionSpec(dummy_at_refcount=k, year_effects=base.year_effects,
                                  field_effects=base.field_effects, controls=base.controls)
            out[k] = fit(graph, values, spec).adjusted_r2
    return out


@dataclass(frozen=True, eq=False)
class AdjustedSeries:
    year: np.ndarray
    effect: np.ndarray
    se: np.ndarray
    adjusted: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


def adjusted_cd_series(fit: RegressionFit) -> AdjustedSeries:
    """Year effects (reference year at 0) shifted by the intercept, with 1.96 SE bands."""
    design = fit.design
    if design.reference_year is None or not any(nm.startswith("year=") for nm in design.names):
        raise SchemaError("fit has no year fixed effects")
    years = np.unique(design.years)
    effect = np.zeros(years.size)
    se = np.zeros(years.size)
    for i, yv in enumerate(years.tolist()[1:], start=1):
        nm = f"year={yv}"
        if nm in fit.names:
            effect[i] = fit.coef_of(nm)
            se[i] = fit.se_of(nm)
        else:
            effect[i] = se[i] = np.nan
    alpha = fit.coef_of(INTERCEPT) if INTERCEPT in fit.names else 0.0
    adjusted = alpha + effect
    return AdjustedSeries(years, effect, se, adjusted, adjusted - 1.96 * se, adjusted + 1.96 * se)


def _stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


_LABELS = {N_REFS: "beta1 (n_refs)", CELL_N: "gamma1 (cell n)", CELL_REFS: "gamma2 (cell mean refs)",
           CELL_AUTHORS: "gamma3 (cell mean authors)", ZERO_REFS: "zeta (zero refs)", INTERCEPT: "alpha"}


def format_report(fits: dict[str, RegressionFit]) -> str:
    """Side-by-side coefficient table, one column per model, stars from two-sided t-tests."""
    labels = list(fits)
    order: list[str] = []
    for f in fits.values():
        for nm in f.design.names:
            if nm not in order:
                order.append(nm)
    first_seen = {nm: i for i, nm in enumerate(order)}
    order.sort(key=lambda nm: (0 if nm.startswith("year=") else 1 if nm.startswith("field=") else
                               3 if nm == INTERCEPT else 2, first_seen[nm]))

    def cell(f: RegressionFit, nm: str) -> str:
        if nm not in f.names:
            return ""
        j = f.names.index(nm)
        c = f.coef[j]
        txt = f"{c:.2f}" if 0.01 <= abs(c) < 1000 else f"{c:.2e}"
        return txt + _stars(f.p[j])

    width = max([len(_LABELS.get(nm, nm)) for nm in order] + [18])
    lines = ["Variables".ljust(width) + "".join(f"{lab:>16}" for lab in labels)]
    lines.append("-" * len(lines[0]))
    for nm in order:
        lines.append(_LABELS.get(nm, nm).ljust(width) + "".join(f"{cell(f, nm):>16}" for f in fits.values()))
    lines.append("-" * len(lines[0]))
    lines.append("N".ljust(width) + "".join(f"{f.n:>16,}" for f in fits.values()))
    lines.append("Adjusted R^2".ljust(width) + "".join(f"{f.adjusted_r2:>16.2f}" for f in fits.values()))
    dropped = {lab: f.dropped for lab, f in fits.items() if f.dropped}
    for lab, d in dropped.items():
        lines.append(f"{lab}: dropped collinear {', '.join(d)}")
    lines.append("*** p<0.01, ** p<0.05, * p<0.1 (two-sided t-test, classical OLS variance)")
    return "\n".join(lines) + "\n"
