import contextlib
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, passed, detail)
ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record the outcome of one acceptance criterion for the terminal summary."""
    info = {"detail": ""}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        ACCEPTANCE[number] = (title, False, f"{type(exc).__name__}: {str(exc).splitlines()[0][:120]}")
        raise
    ACCEPTANCE[number] = (title, True, f"{info['detail']} [{time.perf_counter() - start:.2f}s]".strip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
