from hypothesis import settings

# fixed example sequence so numerical tolerances are checked reproducibly
settings.register_profile("default", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
