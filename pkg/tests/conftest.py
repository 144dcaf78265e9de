import numpy as np
import pytest

from divopt import (
    DistanceMatrix,
    Instance,
    ModularQuality,
    RngStream,
    UniformConstraint,
)


def random_metric_values(rng: np.random.Generator, n: int) -> np.ndarray:
    """Symmetric matrix with off-diagonal entries uniform on [1, 2]; any such
    matrix satisfies the triangle inequality."""
    values = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    values[iu] = 1.0 + rng.random(iu[0].size)
    return values + values.T


def random_instance(
    seed: int,
    n: int,
    k: int,
    lam: float = 1.0,
    diversity: str = "sum",
    exact: bool = False,
) -> Instance:
    rng = RngStream(seed).generator()
    if diversity in ("min", "mst"):
        exact = True
    return Instance(
        n=n,
        quality=ModularQuality(rng.random(n)),
        distance=DistanceMatrix(random_metric_values(rng, n)),
        lam=lam,
        constraint=UniformConstraint(k, exact=exact),
        diversity=diversity,
    )


@pytest.fixture
def tiny_instance() -> Instance:
    """Three items, hand-checkable: weights (0.5, 0.2, 0.1),
    d01=1, d02=1.2, d12=1, lambda=1, at most 2 items."""
    values = np.array([[0.0, 1.0, 1.2], [1.0, 0.0, 1.0], [1.2, 1.0, 0.0]])
    return Instance(
        n=3,
        quality=ModularQuality(np.array([0.5, 0.2, 0.1])),
        distance=DistanceMatrix(values),
        lam=1.0,
        constraint=UniformConstraint(2),
        diversity="sum",
    )
