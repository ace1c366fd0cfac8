import csv
import json
import logging

import pytest

from lsqd.cli import RunConfig, run

_REPORT = []


def report(criterion, ok, detail):
    line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
    _REPORT.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    """Run a preset through the batch harness once per session and cache the parsed output."""
    cache = {}

    def get(name, P=(2, 3, 4, 5), splits=(0, 1, 2, 3)):
        key = (name, tuple(P), tuple(splits))
        if key not in cache:
            out = tmp_path_factory.mktemp(name.replace("/", "_"))
            logging.getLogger("lsqd").setLevel(logging.ERROR)
            code = run(RunConfig(preset=name, P_list=list(P), splits_list=list(splits), out=str(out)))
            with open(out / "results.csv") as fh:
                rows = list(csv.DictReader(fh))
            summary = json.loads((out / "summary.json").read_text())
            cache[key] = dict(code=code, rows=rows, summary=summary, out=out)
        return cache[key]

    return get


@pytest.fixture
def acceptance():
    return report
