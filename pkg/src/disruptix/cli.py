"""Command-line entry point: ``disruptix <subcommand> [options]``.

Exit codes: 0 success, 1 other library error, 2 usage, 3 I/O, 4 schema or
configuration, 5 numeric.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__, export
from ._accel import apply_thread_cap
from .artefacts import ExclusionPolicy, filtered_yearly_mean, flag, relative_frequency_series, \
    share_zero_ref_within_cd_one
from .cdindex import ENTITY, FIELD_YEAR, MAX, RAW, CdConfig, cd_all, yearly_mean
from .errors import DisruptixError, SchemaError
from .graph import DATE_KINDS, Schema, emit_summary, load_graph, validate_temporal, write_edges
from .histogram import BUG, CORRECT, HistogramSpec, histogram

EXIT_IO = 3


def _window(raw: str):
    if raw.lower() == MAX:
        return MAX
    try:
        t = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be a positive integer or 'max', got {raw!r}") from None
    if t < 1:
        raise argparse.ArgumentTypeError("window must be positive")
    return t


def _input_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--input", type=Path, help="directory holding nodes.csv and edges.csv")
    g.add_argument("--nodes", type=Path, help="node file (overrides --input)")
    g.add_argument("--edges", type=Path, help="edge file (overrides --input)")
    g.add_argument("--delimiter", default=",", help="field delimiter; 'tab' for tab-separated")
    g.add_argument("--date-kind", choices=DATE_KINDS, help="force date parsing instead of auto-detection")


def _cd_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("CD index")
    g.add_argument("--window", type=_window, default=5, help="5, 10, any positive integer, or max")
    g.add_argument("--resolution", choices=DATE_KINDS, help="defaults to the graph's date kind")
    g.add_argument("--normalize", choices=(RAW, ENTITY, FIELD_YEAR), default=RAW)


def _out_arg(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--out", type=Path, required=required, help="output directory")


def _rewire_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("rewiring")
    g.add_argument("--runs", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--retained-multiplier", type=int, default=100)
    g.add_argument("--max-attempts-multiplier", type=int, default=10_000)


def _hist_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("histogram")
    g.add_argument("--hist-mode", choices=(CORRECT, BUG), default=CORRECT)
    x = g.add_mutually_exclusive_group()
    x.add_argument("--bins", type=int)
    x.add_argument("--binwidth", type=float)


def _hist_spec(args) -> HistogramSpec:
    if args.bins is None and args.binwidth is None:
        return HistogramSpec(mode=args.hist_mode, binwidth=0.05)
    return HistogramSpec(mode=args.hist_mode, bins=args.bins, binwidth=args.binwidth)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disruptix", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate node/edge files and print a summary")
    _input_args(p)
    _out_arg(p, required=False)

    p = sub.add_parser("cd", help="per-node CD values")
    _input_args(p)
    _cd_args(p)
    _out_arg(p)

    p = sub.add_parser("filter", help="artefact frequencies and filtered yearly means")
    _input_args(p)
    _cd_args(p)
    _out_arg(p)
    p.add_argument("--exclude", choices=[e.value for e in ExclusionPolicy], default="zeroref-cd1")

    p = sub.add_parser("rewire", help="rewired edge lists and observed-vs-rewired yearly series")
    _input_args(p)
    _cd_args(p)
    _rewire_args(p)
    _out_arg(p)

    p = sub.add_parser("zscore", help="per-node z-scores against rewired networks")
    _input_args(p)
    _cd_args(p)
    _rewire_args(p)
    _out_arg(p)

    p = sub.add_parser("regress", help="fixed-effects OLS with and without the zero-reference dummy")
    _input_args(p)
    _cd_args(p)
    _out_arg(p)
    p.add_argument("--dummy-sweep", type=int, metavar="K", help="also fit refs==k dummies for k = 0..K")
    p.add_argument("--rmse-cap", type=int, default=100, help="pool reference counts above this bucket")

    p = sub.add_parser("hist", help="histogram of defined CD values")
    _input_args(p)
    _cd_args(p)
    _hist_args(p)
    _out_arg(p)

    p = sub.add_parser("synth", help="write a synthetic corpus with planted zero-reference artefacts")
    _out_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--first-year", type=int, default=1980)
    p.add_argument("--last-year", type=int, default=2009)
    p.add_argument("--nodes-per-year", type=int, default=500)
    p.add_argument("--share-start", type=float, default=0.30, help="artefact share in the first year")
    p.add_argument("--share-end", type=float, default=0.05, help="artefact share in the last year")
    p.add_argument("--max-refs", type=int, default=20, help="regular nodes make 1..max-refs references")
    p.add_argument("--lookback", type=int, default=2)
    p.add_argument("--attachment", choices=("uniform", "preferential"), default="uniform")
    p.add_argument("--resolution", choices=DATE_KINDS, default="date")

    p = sub.add_parser("report", help="cd, filter, hist and yearly series in one directory")
    _input_args(p)
    _cd_args(p)
    _hist_args(p)
    _out_arg(p)
    p.add_argument("--exclude", choices=[e.value for e in ExclusionPolicy], default="zeroref-cd1")
    return ap


def _load(args):
    nodes = args.nodes or (args.input / "nodes.csv" if args.input else None)
    edges = args.edges or (args.input / "edges.csv" if args.input else None)
    if nodes is None or edges is None:
        raise SchemaError("give --input DIR or both --nodes and --edges")
    delim = "\t" if args.delimiter in ("tab", "\\t") else args.delimiter
    return load_graph(nodes, edges, Schema(delimiter=delim, date_kind=args.date_kind))


def _cd_config(args, graph) -> CdConfig:
    return CdConfig(window=args.window, resolution=args.resolution or graph.kind, normalization=args.normalize)


def _rewire_config(args):
    from .rewiring import RewireConfig
    return RewireConfig(seed=args.seed, retained_multiplier=args.retained_multiplier,
                        max_attempts_multiplier=args.max_attempts_multiplier, runs=args.runs)


def _series(graph, values, mask=None):
    out = yearly_mean(values, graph, mask=mask)
    if graph.has_fields:
        out += yearly_mean(values, graph, group="field", mask=mask)
    return out


def cmd_ingest(args) -> None:
    graph = _load(args)
    emit_summary(graph)
    report = validate_temporal(graph)
    print(f"temporal_violations={report.count}", file=sys.stderr)
    if args.out:
        export.write_key_values(args.out / "summary.csv",
                                list(graph.summary.items()) + [("temporal_violations", report.count)])
        export.write_rows(args.out / "temporal_violations.csv", ("citer", "cited"), report.sample)


def cmd_cd(args) -> None:
    graph = _load(args)
    values = cd_all(graph, _cd_config(args, graph))
    export.write_cd(args.out / "cd.csv", graph, values)


def _filter_outputs(out: Path, graph, values, policy) -> None:
    flags = flag(graph, values)
    export.write_frequency(out / "frequency.csv", relative_frequency_series(flags, graph))
    overall, table = share_zero_ref_within_cd_one(flags, graph)
    export.write_frequency(out / "zero_ref_share_of_cd1.csv", table)
    export.write_series(out / "series_none.csv", _series(graph, values))
    policy = ExclusionPolicy.parse(policy)
    if policy is not ExclusionPolicy.NONE:
        series = filtered_yearly_mean(values, flags, graph, policy)
        if graph.has_fields:
            series += filtered_yearly_mean(values, flags, graph, policy, group="field")
        export.write_series(out / f"series_{policy.value}.csv", series)
    print(f"cd1_zero_ref_share={export.fmt(overall)}", file=sys.stderr)


def cmd_filter(args) -> None:
    graph = _load(args)
    values = cd_all(graph, _cd_config(args, graph))
    _filter_outputs(args.out, graph, values, args.exclude)


def cmd_rewire(args) -> None:
    from .rewiring import gap_series, rewired_cd_series
    graph = _load(args)
    config = _rewire_config(args)
    cd_config = _cd_config(args, graph)
    observed = yearly_mean(cd_all(graph, cd_config), graph)[0]
    rs = rewired_cd_series(graph, config, cd_config)
    for r in rs.results:
        write_edges(r.graph, args.out / f"edges_run{r.run_index}.csv")
    export.write_rows(args.out / "runs.csv", ("run", "seed", "retained", "attempts", "saturated"),
                      [(r.run_index, r.seed, r.retained, r.attempts, r.saturated) for r in rs.results])
    export.write_series(args.out / "series_observed.csv", [observed])
    export.write_series(args.out / "series_rewired.csv", rs.per_run + [rs.mean])
    gap = gap_series(observed, rs.mean)
    export.write_rows(args.out / "gap.csv", ("year", "observed", "rewired", "gap"),
                      zip(gap.year.tolist(), gap.observed.tolist(), gap.rewired.tolist(), gap.gap.tolist()))


def cmd_zscore(args) -> None:
    from .rewiring import yearly_z, z_scores
    graph = _load(args)
    table = z_scores(graph, _rewire_config(args), _cd_config(args, graph))
    export.write_zscores(args.out / "zscores.csv", graph, table)
    yz = yearly_z(table, graph)
    export.write_rows(args.out / "zscore_yearly.csv",
                      ("year", "count", "mean_z", "mean_gap", "mean_sigma", "ratio_of_means"),
                      zip(yz.year.tolist(), yz.count.tolist(), yz.mean_z.tolist(), yz.mean_gap.tolist(),
                          yz.mean_sigma.tolist(), yz.ratio_of_means.tolist()))


def cmd_regress(args) -> None:
    from . import regression as reg
    graph = _load(args)
    values = cd_all(graph, _cd_config(args, graph))
    fits = {
        "no_dummy": reg.fit(graph, values, reg.RegressionSpec()),
        "zero_ref_dummy": reg.fit(graph, values, reg.RegressionSpec(include_zero_ref_dummy=True)),
    }
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "regression.txt").write_text(reg.format_report(fits), encoding="utf-8")
    coef_rows, diag_rows, rmse_rows, adj_rows = [], [], [], []
    for label, f in fits.items():
        coef_rows += [(label, nm, f.coef[j], f.se[j], f.t[j], f.p[j]) for j, nm in enumerate(f.names)]
        diag_rows += [(label, "n", f.n), (label, "r2", f.r2), (label, "adjusted_r2", f.adjusted_r2),
                      (label, "orthogonality", reg.orthogonality(f)),
                      (label, "dropped", ";".join(f.dropped))]
        diag_rows += [(label, f"excluded_{k}", v) for k, v in f.design.excluded.items()]
        rmse_rows += [(label, k, v) for k, v in reg.rmse_by_refcount(f, graph, cap=args.rmse_cap).items()]
        a = reg.adjusted_cd_series(f)
        adj_rows += [(label, int(a.year[i]), a.effect[i], a.se[i], a.adjusted[i], a.ci_low[i], a.ci_high[i])
                     for i in range(a.year.size)]
    export.write_rows(out / "coefficients.csv", ("model", "name", "coef", "se", "t", "p"), coef_rows)
    export.write_rows(out / "diagnostics.csv", ("model", "key", "value"), diag_rows)
    export.write_rows(out / "rmse_by_refcount.csv", ("model", "n_refs", "rmse"), rmse_rows)
    export.write_rows(out / "adjusted_series.csv",
                      ("model", "year", "effect", "se", "adjusted", "ci_low", "ci_high"), adj_rows)
    if args.dummy_sweep is not None:
        sweep = reg.dummy_sweep(graph, values, args.dummy_sweep)
        export.write_rows(out / "sweep.csv", ("k", "adjusted_r2"), sweep.items())


def _hist_outputs(out: Path, values, spec: HistogramSpec) -> None:
    h = histogram(values.value[values.defined], spec)
    export.write_histogram(out / "histogram.csv", h)
    print(f"histogram_mode={h.mode} total={h.total} dropped={h.dropped}", file=sys.stderr)


def cmd_hist(args) -> None:
    graph = _load(args)
    values = cd_all(graph, _cd_config(args, graph))
    _hist_outputs(args.out, values, _hist_spec(args))


def cmd_synth(args) -> None:
    from .synthgen import SynthConfig, generate, linear_schedule
    n_years = args.last_year - args.first_year + 1
    if n_years < 1:
        raise SchemaError("--last-year precedes --first-year")
    if args.max_refs < 1:
        raise SchemaError("--max-refs must be positive")
    config = SynthConfig(
        seed=args.seed, years=(args.first_year, args.last_year), nodes_per_year=args.nodes_per_year,
        artefact_share=linear_schedule(n_years, args.share_start, args.share_end),
        ref_probs=(1.0 / args.max_refs,) * args.max_refs, attachment=args.attachment,
        lookback=args.lookback, resolution=args.resolution,
    )
    generate(config).write(args.out)


def cmd_report(args) -> None:
    graph = _load(args)
    values = cd_all(graph, _cd_config(args, graph))
    export.write_cd(args.out / "cd.csv", graph, values)
    _filter_outputs(args.out, graph, values, args.exclude)
    _hist_outputs(args.out, values, _hist_spec(args))


COMMANDS = {
    "ingest": cmd_ingest, "cd": cmd_cd, "filter": cmd_filter, "rewire": cmd_rewire, "zscore": cmd_zscore,
    "regress": cmd_regress, "hist": cmd_hist, "synth": cmd_synth, "report": cmd_report,
}


def _one_line_warning(message, category, filename, lineno, line=None):
    return f"warning: {message}\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    previous = warnings.formatwarning
    warnings.formatwarning = _one_line_warning
    apply_thread_cap()
    try:
        if getattr(args, "out", None) is not None:
            args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args)
    except DisruptixError as exc:
        print(f"disruptix: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"disruptix: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # configuration values rejected by the library
        print(f"disruptix: error: {exc}", file=sys.stderr)
        return SchemaError.exit_code
    finally:
        warnings.formatwarning = previous
    return 0


if __name__ == "__main__":
    sys.exit(main())
