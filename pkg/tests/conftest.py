"""Shared fixtures and instance generators."""

import numpy as np
import pytest

from randinf import ExperimentData, kernels


def random_instance(
    rng: np.random.Generator,
    n: int | None = None,
    k: int = 0,
    complier_frac: float | None = None,
    effect: float = 1.0,
    noise_sd: float = 1.0,
) -> ExperimentData:
    """A completely randomized experiment with three take-up strata."""
    if n is None:
        n = int(rng.integers(20, 61))
    if complier_frac is None:
        complier_frac = float(rng.uniform(0.3, 0.9))
    p_rest = 1.0 - complier_frac
    strata = rng.choice(
        [0, 1, 2], size=n, p=[p_rest / 2, complier_frac, p_rest / 2]
    )
    n1 = int(rng.integers(max(2, n // 3), n - max(2, n // 3) + 1))
    z = np.zeros(n)
    z[rng.permutation(n)[:n1]] = 1.0
    d = np.where(strata == 2, 1.0, np.where((strata == 1) & (z == 1.0), 1.0, 0.0))
    x = rng.standard_normal((n, k)) if k else None
    y = effect * d + noise_sd * rng.standard_normal(n)
    if k:
        y = y + x @ rng.uniform(-0.5, 0.5, size=k)
    return ExperimentData.from_arrays(y, d, z, x)


@pytest.fixture(params=kernels.available_backends())
def kernel_backend(request):
    """Run the test once per available kernel backend."""
    previous = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)
