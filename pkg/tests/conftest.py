import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if rep.when == "call" and "criterion" in props:
                rows.append((props["criterion"], outcome, props.get("detail", "")))
    if rows:
        terminalreporter.section("acceptance criteria")
        for num, outcome, detail in sorted(rows):
            terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if outcome == 'passed' else 'FAIL'}  {detail}")
