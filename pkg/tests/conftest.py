import numpy as np
import pytest

from dyadicwave.haar import build_haar
from dyadicwave.tree import build_uniform_tree


@pytest.fixture(scope="session")
def tri4():
    tree = build_uniform_tree(3, 4)
    return tree, build_haar(tree)


@pytest.fixture(scope="session")
def tri5():
    tree = build_uniform_tree(3, 5)
    return tree, build_haar(tree)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_function(tree, rng, complex_=True, zero_mean=False):
    v = rng.standard_normal(tree.n_leaves)
    if complex_:
        v = v + 1j * rng.standard_normal(tree.n_leaves)
    f = tree.function(v)
    if zero_mean:
        f = f - tree.constant(f.integral())
    return f


# -- acceptance report -------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(session, config, items):
    # the oracle gate (criterion 8) runs before every other suite
    gate = [it for it in items if _number(it) == 8]
    items[:] = gate + [it for it in items if _number(it) != 8]


def _number(item):
    m = item.get_closest_marker("criterion")
    return m.args[0] if m else None


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None or call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    n, title = m.args
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "notes": []})
    xfail = item.get_closest_marker("xfail")
    if call.excinfo is not None or xfail is not None:
        entry["ok"] = False
        why = xfail.kwargs.get("reason") if xfail is not None else f"{item.name} failed"
        entry["notes"].append(why)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        line = f"{'PASS' if e['ok'] else 'FAIL'} criterion {n}: {e['title']}"
        if e["notes"]:
            line += " -- " + "; ".join(e["notes"])
        tr.write_line(line)
