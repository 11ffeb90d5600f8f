import pathlib

import numpy as np
import pytest
from hypothesis import settings

DATA = pathlib.Path(__file__).parent / "data"

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    label = (item.function.__doc__ or name).strip().splitlines()[0]
    failed = report.failed or hasattr(report, "wasxfail")
    prev = _ACCEPTANCE.get(num, (label, True))
    _ACCEPTANCE[num] = (label, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        label, ok = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {label}")
    if not all(ok for _, ok in _ACCEPTANCE.values()):
        terminalreporter.write_line("criteria marked xfail are known failures; see the "
                                    "decisions ledger")
