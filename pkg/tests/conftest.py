import re

import pytest

# (criterion key, passed, detail) in the order the checks ran
VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance check, print it, and fail the test when it did not pass."""

    def record(key, passed, detail):
        VERDICTS.append((str(key), bool(passed), detail))
        print(f"criterion {key}: {'PASS' if passed else 'FAIL'} - {detail}")
        assert passed, f"criterion {key}: {detail}"

    return record


def _criterion_number(key):
    return int(re.match(r"\d+", key).group())


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    grouped = {}
    for key, passed, detail in VERDICTS:
        grouped.setdefault(_criterion_number(key), []).append((key, passed, detail))
    terminalreporter.section("acceptance criteria")
    for number in sorted(grouped):
        parts = grouped[number]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"[{k}] {'ok' if p else 'FAILED'}: {d}" if len(parts) > 1 else d
                           for k, p, d in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
