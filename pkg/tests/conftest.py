from datetime import date

import numpy as np
import pytest

from disruptix.graph import FULL_DATE, YEAR_ONLY, CitationGraph
from disruptix.synthgen import SynthConfig, generate


def make_graph(nodes, edges, fields=None, authors=None):
    """Graph from ``{key: date-or-year}`` and ``[(citer, cited), ...]`` keyed by name."""
    keys = list(nodes)
    vals = [nodes[k] for k in keys]
    if all(isinstance(v, int) for v in vals):
        kind, time = YEAR_ONLY, vals
    else:
        kind = FULL_DATE
        time = [date.fromisoformat(v).toordinal() if isinstance(v, str) else v.toordinal() for v in vals]
    idx = {k: i for i, k in enumerate(keys)}
    src = [idx[a] for a, _ in edges]
    dst = [idx[b] for _, b in edges]
    f = [fields.get(k) for k in keys] if fields is not None else None
    a = [authors.get(k, np.nan) for k in keys] if authors is not None else None
    return CitationGraph.from_arrays(keys, time, kind, src, dst, fields=f, n_authors=a)


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    monkeypatch.setenv("DISRUPTIX_JIT", "1" if request.param == "numba" else "0")
    return request.param


@pytest.fixture(scope="session")
def synth_default():
    return generate(SynthConfig())


@pytest.fixture(scope="session")
def synth_small():
    return generate(SynthConfig(seed=3, years=(2000, 2009), nodes_per_year=120))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
