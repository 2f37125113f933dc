import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n): ties a test to one shipping requirement")


def pytest_collection_modifyitems(config, items):
    mapping = {}
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            mapping[item.nodeid] = mark.args[0]
    config._criterion_by_nodeid = mapping


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mapping = getattr(config, "_criterion_by_nodeid", {})
    outcomes = {}
    for bucket, ok in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(bucket, []):
            n = mapping.get(getattr(report, "nodeid", None))
            if n is not None:
                outcomes[n] = outcomes.get(n, True) and ok
    if not outcomes:
        return
    terminalreporter.section("acceptance")
    for n in sorted(outcomes):
        verdict = "PASS" if outcomes[n] else "FAIL"
        terminalreporter.write_line(f"CRITERION {n}: {verdict}")
