"""Collects per-criterion outcomes of the acceptance suite and prints one line for each."""

import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, budget): acceptance criterion with a time budget in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title, budget = marker.args
    entry = _criteria.setdefault(number, {"title": title, "budget": budget, "seconds": 0.0, "parts": {}})
    entry["seconds"] += rep.duration
    if rep.when == "call" or rep.outcome != "passed":
        if hasattr(rep, "wasxfail"):
            status = f"xfail ({rep.wasxfail.removeprefix('reason: ')})"
        else:
            status = rep.outcome
        # a failing setup or teardown must not be masked by a passing call
        if entry["parts"].get(item.name, "passed") == "passed":
            entry["parts"][item.name] = status


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        in_time = e["seconds"] <= e["budget"]
        ok = in_time and all(s == "passed" for s in e["parts"].values())
        tr.write_line(
            f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {e['title']}  "
            f"[{e['seconds']:.2f}s, budget {e['budget']}s{'' if in_time else ', OVER BUDGET'}]"
        )
        for name, status in e["parts"].items():
            if status != "passed":
                tr.write_line(f"    {name}: {status}")
