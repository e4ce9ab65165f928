import time
import traceback
from contextlib import contextmanager

import pytest

_RESULTS = {}


@contextmanager
def _record(number, title):
    start = time.perf_counter()
    notes = []
    try:
        yield notes
    except BaseException as exc:
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip().splitlines()[0]
        _RESULTS[number] = ("FAIL", title, time.perf_counter() - start, notes + [detail])
        raise
    _RESULTS[number] = ("PASS", title, time.perf_counter() - start, notes)


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion's outcome for the summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title, seconds, notes = _RESULTS[number]
        extra = f" ({'; '.join(notes)})" if notes else ""
        terminalreporter.write_line(f"[{status}] {number:>2}. {title} [{seconds:.1f}s]{extra}")
