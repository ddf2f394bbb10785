"""Instance generators and ingestion.

Covers the ramp family used for lower-bound experiments, the deterministic
gadgets behind the fairness demonstrations, synthetic cloud-style traces,
prediction simulation, and validated file ingestion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core import Instance, Item, read_instance, validate_instance
from .errors import ValidationError

GADGET_NAMES = ("duplicated_suffix", "small_then_large", "two_density")

DEFAULT_WEIGHT_MENU = (0.01, 0.03, 0.05)
DEFAULT_VALUE_RATIO = 50.0


def gen_x_nondecreasing(
    x: float,
    m: int,
    n_batches: int,
    lower: float,
    upper: float,
) -> Instance:
    """Ramp instance: batches of m unit-grid items with density stepping from L up to x.

    Batch i (1-based) holds m identical items of weight 1/m and density
    L + (i-1)*delta, delta = (U-L)/n_batches; the number of batches is
    ceil((x-L)/delta) + 1. Each batch alone fills the knapsack, and items
    arrive in non-decreasing density order, which is the hard arrival
    pattern for threshold policies.
    """
    if not lower <= x <= upper:
        raise ValidationError(f"x must lie in [L, U], got {x!r}")
    if m < 1 or n_batches < 1:
        raise ValidationError("m and n_batches must be positive")
    if upper > lower:
        delta = (upper - lower) / n_batches
        # guard the ceil against float noise when x sits exactly on the grid
        batches = math.ceil((x - lower) / delta - 1e-9) + 1
    else:
        batches = 1
    weight = 1.0 / m
    items: list[Item] = []
    for i in range(batches):
        d = lower + i * ((upper - lower) / n_batches) if upper > lower else lower
        value = d * weight
        items.extend([Item(value, weight)] * m)
    return Instance(
        items=tuple(items),
        lower=lower,
        upper=upper,
        granularity=m,
        name=f"ramp-x{x:.6g}-m{m}-N{n_batches}",
    )


def _gadget_two_density(params: Mapping[str, Any]) -> Instance:
    lower = float(params.get("L", 1.0))
    upper = float(params.get("U", 5.0))
    m = int(params.get("m", 100))
    weight = 1.0 / m
    n_high = round(m * lower / upper)
    items = [Item(lower * weight, weight)] * m + [Item(upper * weight, weight)] * n_high
    return Instance(
        items=tuple(items),
        lower=lower,
        upper=upper,
        granularity=m,
        name=f"two-density-L{lower:.6g}-U{upper:.6g}-m{m}",
    )


def _gadget_duplicated_suffix(params: Mapping[str, Any]) -> Instance:
    base = params.get("base")
    if base is None:
        raise ValidationError("duplicated_suffix needs a 'base' instance")
    if isinstance(base, Mapping):
        base = generate(GeneratorSpec.from_json_dict(base))
    elif isinstance(base, str):
        base = ingest(base)
    if not isinstance(base, Instance):
        raise ValidationError("duplicated_suffix 'base' must be an instance, generator spec, or path")
    if len(base) == 0:
        raise ValidationError("duplicated_suffix base instance is empty")
    return Instance(
        items=base.items + base.items,
        lower=base.lower,
        upper=base.upper,
        granularity=base.granularity,
        name=(base.name or "base") + "-duplicated",
    )


def _gadget_small_then_large(params: Mapping[str, Any]) -> Instance:
    w_delta = float(params.get("w_delta", 0.001))
    if not 0.0 < w_delta <= 0.5:
        raise ValidationError(f"w_delta must lie in (0, 0.5], got {w_delta!r}")
    # grid chosen so both w_delta and 1 - w_delta/2 are exact multiples of 1/m
    m = round(2.0 / w_delta)
    w_small = 2.0 / m
    lower = float(params.get("L", 1.0))
    upper = float(params.get("U", lower))
    dens = float(params.get("density", lower))
    if not lower <= dens <= upper:
        raise ValidationError(f"gadget density {dens!r} outside [L, U]")
    n_small = int(params.get("n_small", m // 2))
    if n_small < 1:
        raise ValidationError("small_then_large needs at least one small item")
    w_large = (m - 1) / m  # = 1 - w_delta/2
    items = [Item(dens * w_small, w_small)] * n_small + [Item(dens * w_large, w_large)]
    return Instance(
        items=tuple(items),
        lower=lower,
        upper=upper,
        granularity=m,
        name=f"small-then-large-w{w_small:.6g}-n{n_small}",
    )


def gen_gadget(name: str, params: Mapping[str, Any] | None = None) -> Instance:
    """Deterministic gadget instances for the fairness demonstrations.

    - ``two_density``: a full knapsack of floor-density items followed by
      ceiling-density items of total weight L/U.
    - ``duplicated_suffix``: a base instance followed by a copy of itself.
    - ``small_then_large``: many small equal-density items, then one item of
      weight 1 - w_delta/2 that no longer fits once any small item is taken.
    """
    if name not in GADGET_NAMES:
        raise ValidationError(f"unknown gadget {name!r}; expected one of {GADGET_NAMES}")
    params = params or {}
    if name == "two_density":
        return _gadget_two_density(params)
    if name == "duplicated_suffix":
        return _gadget_duplicated_suffix(params)
    return _gadget_small_then_large(params)


def synth_trace(
    n: int,
    mu: float,
    seed: int,
    weight_menu: tuple[float, ...] = DEFAULT_WEIGHT_MENU,
    value_ratio: float = DEFAULT_VALUE_RATIO,
    granularity: int = 100,
    innate: str = "loguniform",
) -> Instance:
    """Synthetic cloud-style job trace.

    Weights are drawn uniformly from the menu; each job gets an innate value
    iota (log-uniform on [1, value_ratio] by default) and a scaling factor
    tau uniform on [1, mu], with value tau*iota*weight. Densities therefore
    span [1, value_ratio*mu], which is the declared support: mu in
    {10, 25, 50} with the default ratio gives U/L of 500, 1250, 2500.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n!r}")
    if mu < 1:
        raise ValidationError(f"mu must be >= 1, got {mu!r}")
    if value_ratio < 1:
        raise ValidationError(f"value_ratio must be >= 1, got {value_ratio!r}")
    for w in weight_menu:
        scaled = w * granularity
        if abs(scaled - round(scaled)) > 1e-9 or not 0 < w <= 1:
            raise ValidationError(f"menu weight {w!r} is not on the 1/{granularity} grid")
    rng = np.random.default_rng(seed)
    weights = rng.choice(np.asarray(weight_menu, dtype=float), size=n)
    if innate == "loguniform":
        iota = np.exp(rng.uniform(0.0, math.log(value_ratio), size=n))
    elif innate == "uniform":
        iota = rng.uniform(1.0, value_ratio, size=n)
    else:
        raise ValidationError(f"unknown innate-value distribution {innate!r}")
    tau = rng.uniform(1.0, float(mu), size=n)
    values = tau * iota * weights
    items = tuple(Item(float(v), float(w)) for v, w in zip(values, weights))
    return Instance(
        items=items,
        lower=1.0,
        upper=value_ratio * float(mu),
        granularity=granularity,
        name=f"trace-n{n}-mu{mu:g}-seed{seed}",
        seed=seed,
    )


def sample_prediction_noise(sigma: float, seed: int, size: int = 1) -> np.ndarray:
    """Zero-mean normal multiplicative error draws, fully seeded."""
    if sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma!r}")
    return np.random.default_rng(seed).normal(0.0, sigma, size=size)


def simulate_prediction(d_star: float, sigma: float, seed: int, lower: float, upper: float) -> float:
    """Noisy prediction d_star * (1 + eta), eta ~ N(0, sigma), clamped to [L, U]."""
    eta = float(sample_prediction_noise(sigma, seed, size=1)[0])
    return min(max(d_star * (1.0 + eta), lower), upper)


def ingest(path: str | Path) -> Instance:
    """Read and validate an instance file pair.

    Raises ValidationError with the offending line for malformed rows or
    missing metadata, and with the full violation list when the parsed
    instance breaks its declared invariants. A header-only file yields an
    empty instance (valid, but flagged with a warning).
    """
    inst = read_instance(path)
    violations = validate_instance(inst)
    if violations:
        raise ValidationError(f"{path}: invalid instance: " + "; ".join(violations))
    if len(inst) == 0:
        warnings.warn(f"{path}: instance file contains a header but no items", stacklevel=2)
    return inst


# ---------------------------------------------------------------------------
# Declarative generator specs (CLI / experiment configs)

GENERATOR_KINDS = ("x_nondecreasing", "trace_synth", "gadget", "from_file")


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative instance source; JSON-serializable for configs."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ValidationError(
                f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}"
            )
        object.__setattr__(self, "params", dict(self.params))

    def to_json_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> "GeneratorSpec":
        if "kind" not in data:
            raise ValidationError("generator object needs a 'kind' field")
        return cls(kind=data["kind"], params=dict(data.get("params", {})))


def generate(spec: GeneratorSpec, seed: int | None = None) -> Instance:
    """Materialize a GeneratorSpec; ``seed`` overrides the spec's own seed."""
    p = dict(spec.params)
    if spec.kind == "x_nondecreasing":
        return gen_x_nondecreasing(
            x=float(p["x"]),
            m=int(p.get("m", 100)),
            n_batches=int(p.get("N", 50)),
            lower=float(p.get("L", 1.0)),
            upper=float(p.get("U", 5.0)),
        )
    if spec.kind == "trace_synth":
        return synth_trace(
            n=int(p.get("n", 1000)),
            mu=float(p.get("mu", 10.0)),
            seed=int(seed if seed is not None else p.get("seed", 0)),
            weight_menu=tuple(p.get("weight_menu", DEFAULT_WEIGHT_MENU)),
            value_ratio=float(p.get("value_ratio", DEFAULT_VALUE_RATIO)),
            granularity=int(p.get("m", 100)),
            innate=str(p.get("innate", "loguniform")),
        )
    if spec.kind == "gadget":
        name = p.pop("name", None)
        if name is None:
            raise ValidationError("gadget generator needs a 'name' parameter")
        return gen_gadget(str(name), p)
    return ingest(str(p["path"]))
