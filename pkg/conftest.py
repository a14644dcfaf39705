import _pytest.python
import pytest

# Must be called before importing kmeq.cases.
pytest.register_assert_rewrite("kmeq.cases")

from kmeq.cases import _KmeqTestCase  # noqa: E402


def pytest_addoption(parser):
    """Called by pytest, registers CLI options passed to the pytest command."""
    parser.addoption(
        "--skip-slow",
        action="store_true",
        default=False,
        help="Skip tests marked slow (Monte-Carlo bound checks and table replicas).",
    )


def pytest_collection_modifyitems(session, config, items):
    """Called by pytest after finishing the test collection,
    and before actually running the tests.

    This function filters out slow tests when --skip-slow is given."""
    skip_slow = bool(config.getoption("skip_slow"))

    filtered_items = []

    # Iterate over each of the test functions (they are pytest "Nodes")
    for item in items:
        assert isinstance(item, _pytest.python.Function)

        if skip_slow and item.get_closest_marker("slow"):
            continue

        # and in this project, TestCase classes all inherit from _KmeqTestCase
        assert isinstance(item.parent, _pytest.python.Class)
        assert issubclass(item.parent.cls, _KmeqTestCase), item.parent.cls

        filtered_items.append(item)

    # Finally, rewrite in-place the list of tests pytest will run
    items[:] = filtered_items
