import pytest

# criterion number -> list of (part, ok, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def record(num: int, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(num, []).append((part, ok, detail))
    print(f"criterion {num} [{part}]: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[num]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}")
        for part, pok, detail in parts:
            tr.write_line(f"    {'ok  ' if pok else 'FAIL'} {part}: {detail}")
