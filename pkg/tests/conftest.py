import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sepastar.graph import d7 as _d7  # noqa: E402


@pytest.fixture
def d7():
    return _d7()



def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, title, detail = results[num]
        terminalreporter.write_line(f"criterion {num} {'PASS' if ok else 'FAIL'}: {title} | {detail}")
