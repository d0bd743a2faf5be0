import itertools

import numpy as np
import pytest

from modellink import Dataset, Gaussian, GaussianLinear, Learner, build_graph


def full_graph(dims, shared):
    """Every pair of learners tied on slots ``0..shared-1``."""
    M = len(dims)
    return build_graph(dims, [(a, b, [(s, s) for s in range(shared)]) for a, b in itertools.combinations(range(M), 2)])


def gaussian_learner(rng, n, beta, prior_var=4.0, sigma2=1.0):
    beta = np.asarray(beta, dtype=float)
    X = rng.standard_normal((n, beta.shape[0]))
    y = X @ beta + np.sqrt(sigma2) * rng.standard_normal(n)
    return Learner(Dataset(y, X), GaussianLinear(sigma2), Gaussian(0.0, prior_var))


@pytest.fixture
def toy():
    g = full_graph([1, 1, 1], 1)
    learners = [Learner(Dataset([y], [[1.0]]), GaussianLinear(1.0), Gaussian(0.0, 100.0)) for y in (2.0, -0.3, -2.0)]
    return g, learners
