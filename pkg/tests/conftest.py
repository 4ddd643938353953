import contextlib
import time

import pytest

# criterion number -> (title, passed, detail, seconds)
ACCEPTANCE: dict = {}


@contextlib.contextmanager
def criterion(number: int, title: str, budget_s: float):
    """Record the outcome of one acceptance criterion, including its runtime budget."""
    info = {"detail": ""}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        ACCEPTANCE[number] = (title, False, info["detail"] or str(exc).splitlines()[0], time.perf_counter() - start)
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget_s
    detail = info["detail"] if ok else f"{info['detail']}; runtime {elapsed:.1f}s over {budget_s:.0f}s budget"
    ACCEPTANCE[number] = (title, ok, detail, elapsed)
    assert ok, detail


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail, secs = ACCEPTANCE[k]
        terminalreporter.write_line(
            f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title}  [{secs:.1f}s]  {detail}"
        )


@pytest.fixture
def acceptance():
    return criterion
