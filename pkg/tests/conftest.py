"""Shared pytest wiring.

Prints one PASS/FAIL line per numbered acceptance criterion after the
run, grouping every test named ``test_cN_...`` in test_acceptance.py
under criterion N.
"""

import re

CRITERION_TITLES = {
    1: "least-squares matches normal-equation oracle",
    2: "panel density matches raw-event recount",
    3: "heteroskedasticity test calibrated",
    4: "generating coefficients recovered, WLS no noisier than OLS",
    5: "bundled-fixture regression sign pattern",
    6: "distribution functions match quadrature oracle",
    7: "randomized invariant suites",
    8: "bundled-fixture score histogram shares",
}

_PATTERN = re.compile(r"test_acceptance\.py::test_c(\d+)_")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            m = _PATTERN.search(nodeid)
            if not m:
                continue
            n = int(m.group(1))
            ok = status == "passed"
            outcomes[n] = outcomes.get(n, True) and ok
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERION_TITLES):
        if n not in outcomes:
            continue
        verdict = "PASS" if outcomes[n] else "FAIL"
        title = CRITERION_TITLES[n]
        terminalreporter.write_line(f"[acceptance] C{n}: {verdict}  {title}")
