import os
import random
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def tiny(seed, **over):
    """Seeded tiny instance with varied shape (at most 4 flexible patients, 7 days)."""
    from ihtc_solver.generator import generate

    rng = random.Random(seed)
    knobs = dict(seed=seed, patients=4, days=rng.randint(3, 7), rooms=rng.randint(1, 3),
                 nurses=rng.randint(2, 4), occupants=rng.randint(0, 2),
                 shifts_per_nurse_day=rng.choice([1, 1, 2]))
    knobs.update(over)
    return generate(**knobs)
