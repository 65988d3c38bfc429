import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import time
from contextlib import contextmanager

import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager that times a block and logs one PASS/FAIL line for it."""
    lines = request.config.stash.setdefault(_LINES, [])

    @contextmanager
    def run(label: str, title: str):
        detail: dict = {}
        t0 = time.perf_counter()
        try:
            yield detail
        except BaseException:
            status = "FAIL"
            raise
        else:
            status = "PASS"
        finally:
            took = time.perf_counter() - t0
            extra = "; ".join(f"{k}={v}" for k, v in detail.items())
            line = f"criterion {label:<3} {status}  {title}  [{took:.2f}s]" + (f"  {extra}" if extra else "")
            lines.append(line)
            print(line)

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
