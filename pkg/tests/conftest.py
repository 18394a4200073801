import numpy as np
import pytest

from genbounds import DiscreteDist, FiniteProblem


def random_problem(
    rng: np.random.Generator,
    num_hypotheses: int,
    num_outcomes: int,
    n: int,
    binary: bool = False,
) -> FiniteProblem:
    """A random finite problem with [0, 1] (or {0, 1}) losses and interior mu."""
    if binary:
        losses = rng.integers(0, 2, size=(num_hypotheses, num_outcomes)).astype(float)
    else:
        losses = rng.random((num_hypotheses, num_outcomes))
    mu = DiscreteDist.from_weights(rng.random(num_outcomes) + 0.2)
    return FiniteProblem(losses=losses, mu=mu, n=n)


def random_dist(rng: np.random.Generator, size: int) -> DiscreteDist:
    return DiscreteDist.from_weights(rng.random(size) + 0.05)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
