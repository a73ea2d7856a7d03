from pathlib import Path

import numpy as np
import pytest

from skq.datasets import ISTANBUL_INPUTS, synthetic_market
from skq.evaluation import Dataset
from skq.model import FeatureSchema
from skq.parser import parse_theory

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def cart6_text():
    return (FIXTURES / "cart6.pl").read_text()


@pytest.fixture(scope="session")
def cart6(cart6_text):
    return parse_theory(cart6_text)


@pytest.fixture(scope="session")
def cart6_simplified():
    return parse_theory((FIXTURES / "cart6_simplified.pl").read_text())


@pytest.fixture(scope="session")
def creepy():
    return parse_theory((FIXTURES / "creepy_linear.pl").read_text())


@pytest.fixture(scope="session")
def market():
    return synthetic_market(536, seed=0)


@pytest.fixture(scope="session")
def market_split(market):
    return market.split(0.8, seed=0)


@pytest.fixture
def xy_schema():
    return FeatureSchema.continuous(("X", "Y"), "Z")


def uniform_dataset(schema: FeatureSchema, n: int, seed: int, low=-1.0, high=1.0, target=None):
    rng = np.random.default_rng(seed)
    cols = {name: rng.uniform(low, high, n) for name in schema.input_names}
    y = target(cols) if target is not None else np.zeros(n)
    return Dataset(schema, cols, y)


__all__ = ["ISTANBUL_INPUTS", "uniform_dataset"]


# one pass/fail line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
