import json

import pytest

from convecon.core import CostParams, EfficiencyParams
from convecon.oracle import GridSpec


@pytest.fixture
def std_efficiency():
    """A well-behaved instance used across suites: alpha > gamma2 > beta."""
    return EfficiencyParams(alpha=0.9, beta=0.3, gamma1=0.2, gamma2=0.5)


@pytest.fixture
def std_costs():
    return CostParams(c_query=10.0, c_feedback=2.0, c_assess=1.0)


@pytest.fixture
def light_grid():
    """Coarser search grid that keeps oracle-heavy tests fast."""
    return GridSpec(points=64, refinements=2)


@pytest.fixture
def params_file(tmp_path):
    """Write a params JSON file and return its path."""

    def write(name="params.json", **overrides):
        values = {
            "alpha": 0.9, "beta": 0.3, "gamma1": 0.2, "gamma2": 0.5,
            "c_query": 10.0, "c_feedback": 2.0, "c_assess": 1.0,
        }
        values.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(values))
        return path

    return write
