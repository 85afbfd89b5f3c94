"""Seeded random instances for experiments.

All draws come from numpy's PCG64 generator.  A seed may be an integer,
a sequence of integers (hashed by ``SeedSequence``, so ``[seed, trial]``
gives independent per-trial streams) or an existing ``Generator``.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..recovery import LinearMap

__all__ = [
    "make_rng",
    "gaussian_matrix",
    "sparse_signal",
    "gaussian_map",
    "low_rank",
    "gaussian_noise",
    "sphere_noise",
    "gen_instance",
    "KINDS",
]


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _positive(**dims):
    for name, value in dims.items():
        if int(value) != value or value < 1:
            raise InvalidInputError(f"{name} must be a positive integer, got {value!r}")


def gaussian_matrix(n, p, seed=0, normalize=False):
    """``n x p`` matrix with N(0, 1/n) entries, or exactly unit columns if ``normalize``."""
    _positive(n=n, p=p)
    A = make_rng(seed).standard_normal((n, p)) / np.sqrt(n)
    if normalize:
        A /= np.linalg.norm(A, axis=0, keepdims=True)
    return A


def sparse_signal(p, k, seed=0, amplitude="unit"):
    """Vector with exactly ``k`` nonzeros on a uniformly random support.

    ``amplitude='unit'`` draws random signs; ``'gaussian'`` draws standard
    normal values (redrawn away from zero).
    """
    _positive(p=p, k=k)
    if k > p:
        raise InvalidInputError(f"k={k} exceeds p={p}")
    rng = make_rng(seed)
    support = rng.choice(p, size=k, replace=False)
    if amplitude == "unit":
        values = rng.choice([-1.0, 1.0], size=k)
    elif amplitude == "gaussian":
        values = rng.standard_normal(k)
        values[values == 0.0] = 1.0
    else:
        raise InvalidInputError(f"unknown amplitude {amplitude!r}")
    beta = np.zeros(p)
    beta[support] = values
    return beta


def gaussian_map(q, m, n, seed=0):
    """Linear map with N(0, 1/q) entries, so ``E ||M(X)||^2 = ||X||_F^2``."""
    _positive(q=q, m=m, n=n)
    return LinearMap(make_rng(seed).standard_normal((q, m * n)) / np.sqrt(q), m, n)


def low_rank(m, n, r, seed=0):
    """Product of ``m x r`` and ``r x n`` standard Gaussian factors."""
    _positive(m=m, n=n, r=r)
    if r > min(m, n):
        raise InvalidInputError(f"r={r} exceeds min(m, n)={min(m, n)}")
    rng = make_rng(seed)
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, n))


def gaussian_noise(dim, sigma, seed=0):
    _positive(dim=dim)
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    return sigma * make_rng(seed).standard_normal(dim)


def sphere_noise(dim, radius, seed=0):
    """Uniform draw from the sphere of the given radius."""
    z = gaussian_noise(dim, 1.0, seed)
    nrm = np.linalg.norm(z)
    return radius * z / nrm if nrm > 0 else z


KINDS = {
    "gaussian_matrix": gaussian_matrix,
    "sparse_signal": sparse_signal,
    "gaussian_map": gaussian_map,
    "low_rank": low_rank,
    "gaussian_noise": gaussian_noise,
}


def gen_instance(kind, seed=0, **params):
    """Dispatch by name, e.g. ``gen_instance('sparse_signal', 3, p=10, k=3)``."""
    try:
        fn = KINDS[kind]
    except KeyError:
        raise InvalidInputError(f"unknown instance kind {kind!r}") from None
    return fn(seed=seed, **params)
