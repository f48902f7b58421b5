import warnings
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disruptix.cdindex import CdConfig, CdResult, YearSeries, cd_all, series_from_values, yearly_mean
from disruptix.errors import SchemaError
from disruptix.graph import FULL_DATE, YEAR_ONLY
from disruptix.rewiring import (RewireConfig, RewireSaturationWarning, gap_series, mean_over_runs, rewire,
                                rewire_runs, rewired_cd_series, yearly_z, z_scores, z_scores_from_values)

from conftest import make_graph
from oracle import random_graph

FAST = RewireConfig(seed=3, retained_multiplier=5, runs=3)


def edge_set(g):
    return set(zip(g.citer.tolist(), g.cited.tolist()))


def year_pairs(g):
    return Counter(zip(g.year[g.citer].tolist(), g.year[g.cited].tolist()))


def check_invariants(before, after):
    assert np.array_equal(before.out_degree, after.out_degree)
    assert np.array_equal(before.in_degree, after.in_degree)
    assert np.array_equal(before.time, after.time) and before.keys == after.keys
    assert year_pairs(before) == year_pairs(after)
    assert not (after.citer == after.cited).any()
    assert len(edge_set(after)) == after.m == before.m


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 60), st.sampled_from([FULL_DATE, YEAR_ONLY]))
def test_invariants_random_graphs(seed, n, kind):
    g = random_graph(np.random.default_rng(seed), n, kind=kind, years=(2000, 2003), p_edge=0.2)
    if g.m < 2:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RewireSaturationWarning)
        r = rewire(g, RewireConfig(seed=seed % 1000, retained_multiplier=3, max_attempts_multiplier=50))
    check_invariants(g, r.graph)
    assert r.retained <= r.attempts
    assert r.saturated == (r.retained < 3 * g.m)


def test_two_edge_year_mismatch_saturates():
    g = make_graph({"a": 2001, "b": 2000, "c": 2002, "d": 1999}, [("a", "b"), ("c", "d")])
    with pytest.warns(RewireSaturationWarning):
        r = rewire(g, RewireConfig(seed=0))
    assert r.saturated and r.retained == 0
    assert r.attempts == 10_000 * 2
    assert edge_set(r.graph) == edge_set(g)


def test_two_edge_swap_alternates_between_two_states():
    g = make_graph({"a": 2001, "c": 2001, "b": 2000, "d": 2000}, [("a", "b"), ("c", "d")])
    r = rewire(g, RewireConfig(seed=1))
    assert not r.saturated and r.retained == 200
    names = {(r.graph.keys[a], r.graph.keys[b]) for a, b in edge_set(r.graph)}
    assert names in ({("a", "b"), ("c", "d")}, {("a", "d"), ("c", "b")})


def test_duplicate_creating_swap_is_rejected():
    # A->B, A->D, C->D: swapping A->B with C->D would duplicate A->D
    g = make_graph({"A": 2001, "C": 2001, "B": 2000, "D": 2000}, [("A", "B"), ("A", "D"), ("C", "D")])
    with pytest.warns(RewireSaturationWarning):
        r = rewire(g, RewireConfig(seed=4, max_attempts_multiplier=20))
    assert r.retained == 0
    assert edge_set(r.graph) == edge_set(g)


def test_self_loop_creating_swap_is_rejected():
    # A->B, B->A within one (year, year) stratum; the swap gives A->A and B->B
    g = make_graph({"A": 2000, "B": 2000}, [("A", "B"), ("B", "A")])
    with pytest.warns(RewireSaturationWarning):
        r = rewire(g, RewireConfig(seed=0, max_attempts_multiplier=10))
    assert r.retained == 0


def test_needs_two_edges():
    with pytest.raises(SchemaError):
        rewire(make_graph({"a": 2001, "b": 2000}, [("a", "b")]))


def test_config_validation():
    with pytest.raises(SchemaError):
        RewireConfig(retained_multiplier=0)
    with pytest.raises(SchemaError):
        RewireConfig(runs=0)


def test_determinism_and_seed_offsets(synth_small):
    g = synth_small.graph
    a = rewire(g, FAST, run_index=1)
    b = rewire(g, FAST, run_index=1)
    c = rewire(g, RewireConfig(seed=4, retained_multiplier=5), run_index=0)
    assert a.seed == 4 and c.seed == 4
    assert np.array_equal(a.graph.cited, b.graph.cited)
    # seed + run index defines the stream
    assert np.array_equal(a.graph.cited, c.graph.cited)
    d = rewire(g, FAST, run_index=0)
    assert not np.array_equal(a.graph.cited, d.graph.cited)


def test_backends_bit_identical(synth_small):
    g = synth_small.graph
    a = rewire(g, FAST, backend="numba")
    b = rewire(g, FAST, backend="numpy")
    assert np.array_equal(a.graph.citer, b.graph.citer)
    assert np.array_equal(a.graph.cited, b.graph.cited)
    assert (a.retained, a.attempts) == (b.retained, b.attempts)


def test_parallel_runs_match_sequential(synth_small, monkeypatch):
    g = synth_small.graph
    par = rewire_runs(g, FAST)
    monkeypatch.setenv("DISRUPTIX_THREADS", "1")
    seq = rewire_runs(g, FAST)
    for p, s in zip(par, seq):
        assert np.array_equal(p.graph.cited, s.graph.cited)


def test_synthetic_invariants_and_zero_ref_persistence(synth_small):
    g = synth_small.graph
    observed = cd_all(g)
    zero_cited = (g.out_degree == 0) & observed.defined
    for r in rewire_runs(g, FAST):
        check_invariants(g, r.graph)
        assert r.retained == 5 * g.m
        v = cd_all(r.graph)
        assert np.array_equal(r.graph.out_degree == 0, g.out_degree == 0)
        assert (v.value[zero_cited] == 1.0).all() and v.defined[zero_cited].all()


def test_rewired_series_identity_on_unswappable_graph():
    g = make_graph({"a": 2001, "b": 2000, "c": 2002, "d": 1999}, [("a", "b"), ("c", "d")])
    cfg = RewireConfig(runs=1, max_attempts_multiplier=5)
    with pytest.warns(RewireSaturationWarning):
        rs = rewired_cd_series(g, cfg, CdConfig(resolution=YEAR_ONLY))
    obs = yearly_mean(cd_all(g, CdConfig(resolution=YEAR_ONLY)), g)[0]
    assert rs.per_run[0].as_dict() == obs.as_dict()
    assert rs.mean.as_dict() == obs.as_dict()


def test_mean_over_runs_lies_within_run_range(synth_small):
    rs = rewired_cd_series(synth_small.graph, FAST)
    table = np.array([s.mean for s in rs.per_run])
    assert (rs.mean.mean >= table.min(axis=0) - 1e-12).all()
    assert (rs.mean.mean <= table.max(axis=0) + 1e-12).all()
    assert len(rs.results) == len(rs.values) == 3


def values_of(vals):
    vals = np.asarray(vals, dtype=float)
    z = np.zeros(vals.size, dtype=np.int64)
    return CdResult(CdConfig(), z, z, z, z, z.astype(float), vals, ~np.isnan(vals))


def test_z_score_arithmetic():
    t = z_scores_from_values(values_of([0.0]), [values_of([0.25]), values_of([0.75])])
    assert t.mu[0] == pytest.approx(0.5)
    assert t.sigma[0] == pytest.approx(0.3535533906, rel=1e-9)
    assert t.z[0] == pytest.approx(-1.414213562, rel=1e-9)


def test_z_missing_cases():
    obs = values_of([0.2, np.nan, 0.3, 0.1])
    runs = [values_of([0.5, 0.1, 0.4, np.nan]), values_of([0.5, 0.3, np.nan, np.nan]),
            values_of([0.5, 0.2, np.nan, 0.4])]
    t = z_scores_from_values(obs, runs)
    assert np.isnan(t.z[0]) and t.sigma[0] == 0        # zero spread
    assert np.isnan(t.z[1])                             # observed undefined
    assert np.isnan(t.z[2]) and t.n_runs_defined[2] == 1  # one defined rewired value
    assert np.isnan(t.z[3]) and t.n_runs_defined[3] == 1
    assert t.n_runs_defined.tolist() == [3, 3, 1, 1]


def test_z_scores_zero_ref_degenerate(synth_small):
    g = synth_small.graph
    t = z_scores(g, FAST)
    zero = (g.out_degree == 0) & t.observed.defined
    assert np.isnan(t.z[zero]).all() and (t.sigma[zero] == 0).all()
    with pytest.raises(SchemaError):
        z_scores(g, RewireConfig(runs=1))
    yz = yearly_z(t, g)
    assert yz.count.sum() == int((~np.isnan(t.z)).sum())
    assert np.allclose(yz.ratio_of_means, yz.mean_gap / yz.mean_sigma)


def series(years, means):
    years = np.asarray(years)
    m = np.asarray(means, dtype=float)
    return YearSeries("x", years, m, np.ones(years.size, int), m * np.nan, m * np.nan, m * np.nan)


def test_gap_examples():
    a = series([2000, 2001, 2002], [0.4, 0.3, 0.2])
    assert np.allclose(gap_series(a, a).gap, 0)
    g = gap_series(a, series([2000, 2001, 2002], [0.5, 0.5, 0.5]))
    assert np.allclose(g.gap, [0.1, 0.2, 0.3])
    with pytest.warns(UserWarning, match="2003"):
        g = gap_series(a, series([2001, 2002, 2003], [0.5, 0.5, 0.5]))
    assert g.year.tolist() == [2001, 2002] and g.dropped_years == (2000, 2003)


def test_mean_over_runs_handles_missing_years():
    a = series_from_values([2000, 2000, 2001], [1.0, 0.0, 0.5])
    b = series_from_values([2001], [0.7])
    m = mean_over_runs([a, b])
    assert m.year.tolist() == [2000, 2001]
    assert m.mean.tolist() == pytest.approx([0.5, 0.6])
    assert m.count.tolist() == [1, 2] and np.isnan(m.stderr[0])
