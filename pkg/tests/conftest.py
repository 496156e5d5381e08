import pytest

from fixtures import write_condition_fixture, write_measurement_fixture


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One PASS/FAIL line per acceptance criterion, straight to the terminal."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__ == "test_acceptance":
        writer = item.config.get_terminal_writer()
        status = "PASS" if report.passed else "FAIL"
        writer.line(f"[acceptance] {item.name}: {status}")


@pytest.fixture(scope="session")
def condition_fixture(tmp_path_factory):
    """Input files for the nine-concept condition corpus (one per category)."""
    root = tmp_path_factory.mktemp("condition_inputs")
    return write_condition_fixture(root)


@pytest.fixture(scope="session")
def measurement_fixture(tmp_path_factory):
    """Input files for the worked measurement examples."""
    root = tmp_path_factory.mktemp("measurement_inputs")
    return write_measurement_fixture(root)
