"""Shared test utilities: independent oracles and instance builders."""

from __future__ import annotations

import numpy as np

from knapfair import Instance, Item


def brute_force_opt(inst: Instance) -> float:
    """Exhaustive 2^n knapsack optimum; independent of the DP under test.

    Enumerates all subsets by doubling weight/value arrays, so it stays
    vectorized up to n ~ 20. Feasibility uses the exact integer weight grid.
    """
    n = len(inst)
    if n > 22:
        raise ValueError("brute force capped at n = 22")
    wu = inst.weight_units
    vals = inst.values
    weights = np.zeros(1, dtype=np.int64)
    values = np.zeros(1)
    for j in range(n):
        weights = np.concatenate([weights, weights + wu[j]])
        values = np.concatenate([values, values + vals[j]])
    feasible = weights <= inst.granularity
    return float(values[feasible].max())


def uniform_instance(density: float, n: int, m: int, lower: float, upper: float) -> Instance:
    """n identical items of weight 1/m at the given density."""
    w = 1.0 / m
    return Instance(
        items=tuple(Item(density * w, w) for _ in range(n)),
        lower=lower,
        upper=upper,
        granularity=m,
        name=f"uniform-d{density:g}-n{n}",
    )


def dyadic_instance(rng: np.random.Generator, n: int, m: int = 64) -> Instance:
    """Random instance with dyadic weights and densities, L=1, U=5.

    Densities are multiples of 1/16 and weights multiples of 1/64, so every
    value is a multiple of 1/1024: all float sums are exact and the DP can
    be compared to brute force without tolerance.
    """
    wu = rng.integers(1, m // 2 + 1, size=n)
    dens16 = rng.integers(16, 81, size=n)  # densities in [1, 5] on the 1/16 grid
    items = tuple(
        Item(value=float(d16) / 16.0 * (int(w) / m), weight=int(w) / m)
        for d16, w in zip(dens16, wu)
    )
    return Instance(items=items, lower=1.0, upper=5.0, granularity=m, name="dyadic")


def random_instance(
    rng: np.random.Generator,
    n: int,
    m: int = 100,
    lower: float = 1.0,
    upper: float = 5.0,
    max_units: int | None = None,
) -> Instance:
    """Random instance on the 1/m grid with densities anywhere in [L, U]."""
    cap = max_units if max_units is not None else max(m // 20, 1)
    wu = rng.integers(1, cap + 1, size=n)
    dens = rng.uniform(lower, upper, size=n)
    items = tuple(Item(float(d) * (int(w) / m), int(w) / m) for d, w in zip(dens, wu))
    return Instance(items=items, lower=lower, upper=upper, granularity=m, name="random")
