import pytest

_acceptance: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.nodeid.split("::")[0].endswith("test_acceptance.py"):
        return
    if rep.when == "call" or (rep.failed and item.nodeid not in _acceptance):
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance[item.nodeid] = ("PASS" if rep.passed else "FAIL", label)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in sorted(_acceptance.values(), key=lambda s: s[1]):
        terminalreporter.write_line(f"{status}  criterion {label}")
    passed = sum(s == "PASS" for s, _ in _acceptance.values())
    terminalreporter.write_line(f"{passed}/{len(_acceptance)} criteria passed")
