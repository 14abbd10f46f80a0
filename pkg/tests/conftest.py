import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, text = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture
def record():
    """``record(k, ok, text)`` stores the outcome of acceptance criterion ``k``."""
    def _record(key, ok, text):
        ACCEPTANCE_RESULTS[key] = (bool(ok), text)
        return bool(ok)
    return _record
