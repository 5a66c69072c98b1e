from __future__ import annotations

from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[list]()


class Verdicts:
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def __init__(self, store: list[str]) -> None:
        self.store = store

    def note(self, text: str) -> None:
        self.store.append(f"    {text}")

    @contextmanager
    def criterion(self, name: str):
        # the verdict line goes above any notes recorded while the criterion runs
        at = len(self.store)
        try:
            yield self
        except BaseException as exc:
            line = f"FAIL  {name}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            self.store.insert(at, line)
            print(line)
            raise
        line = f"PASS  {name}"
        self.store.insert(at, line)
        print(line)


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def verdicts(request) -> Verdicts:
    return Verdicts(request.config.stash[_RESULTS])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
