import numpy as np
import pytest

from aronsson_lab import Jet


def random_jet(rng: np.random.Generator, N: int, n: int, scale: float = 1.0) -> Jet:
    """A consistent random jet: any (value, gradient, symmetric Hessian)
    triple is realized by a quadratic map."""
    hess = scale * rng.standard_normal((N, n, n))
    return Jet(
        point=rng.standard_normal(n),
        value=scale * rng.standard_normal(N),
        grad=scale * rng.standard_normal((N, n)),
        hess=0.5 * (hess + hess.transpose(0, 2, 1)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
