import re

CRITERIA = {
    1: "first-crossing probability: MC pooled mean within 3 SE of 37/48 in "
       "< 10 s; quadrature oracle reproduces 11/48 to 1e-4",
    2: "winding jump identity W' = W - (m- + m+) exact at every step "
       "(1e6 steps, ring n=32)",
    3: "corridor max|delta| < 2pi/3 implies zero crossing integers, "
       "zero violations over the same run",
    4: "L1 Lyapunov non-increasing every step (both topologies); path n=50 "
       "reaches sum|delta| < 1e-6 within 1e7 steps",
    5: "detrended frame exactness: zeta-midpoint and psi-decrement within "
       "1e-12 per update; psi, R_t non-increasing; D_t < 1e-4 within 1e6 steps",
    6: "lift invariants (projection, increment, closing) at every re-sync "
       "checkpoint over 1e6 steps, tolerance 1e-9",
    7: "compensator: zero-sum within 1e-9*n; per-site L2 <= (2*pi*W0)^2 "
       "throughout; exact one-step expected drift identity to 1e-10",
    8: "sweep closed form equals simulated sweep (1e3 random inputs, "
       "n = 3..20, 1e-12); n=3 coefficients (1, 3/4, 1/2)",
    9: "geometric accumulation: closing value nondecreasing, gap <= "
       "(1-c)^m * gap0 for n = 4..16; limit within 1e-6 for n <= 10",
    10: "escape replay n=60, W0=3 reaches winding 0 within 1e7 steps; "
        "trace piecewise constant, decreasing only at logged crossings",
    11: "determinism: identical config twice gives byte-identical CSVs",
}


def _criterion_of(nodeid):
    m = re.search(r"test_acceptance\.py::test_c(\d+)", nodeid)
    return int(m.group(1)) if m else None


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(status, []):
            crit = _criterion_of(getattr(rep, "nodeid", ""))
            if crit is None:
                continue
            if getattr(rep, "when", "call") != "call" and status == "passed":
                continue
            outcomes.setdefault(crit, status.upper())
            if status in ("failed", "error"):
                outcomes[crit] = status.upper()
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(outcomes):
        label = {"PASSED": "PASS", "FAILED": "FAIL",
                 "SKIPPED": "SKIP", "ERROR": "FAIL"}[outcomes[crit]]
        terminalreporter.write_line(
            f"criterion {crit:2d}: {label} -- {CRITERIA[crit]}")
