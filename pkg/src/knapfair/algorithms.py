"""The uniform online decision engine and the six admission policies.

A policy is a threshold rule: item j is accepted iff its value density
clears the policy's threshold at the arrival utilization (ties accept) and
the item still fits. The engine is a pure function of (policy, instance),
including the one-shot randomized policy, whose constant threshold is fully
determined by its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from .core import Decision, Instance, RunTrace
from .errors import ParameterError
from .numerics import (
    BoundContext,
    threshold_baseline,
    threshold_ect,
    threshold_laect,
    threshold_zcl,
)

POLICY_KINDS = ("constant", "zcl", "baseline", "ect", "zcl_randomized", "laect")

_MAX_SEED = 2**64


@dataclass(frozen=True)
class PolicySpec:
    """Algorithm identifier plus parameters; fully determines a run.

    Kinds and their parameters:

    - ``constant``: fixed threshold ``phi``
    - ``zcl``: exponential threshold, no parameters
    - ``baseline``: stretched exponential, fairness ``alpha``
    - ``ect``: flat-then-jump threshold, fairness ``alpha``
    - ``zcl_randomized``: one-shot random constant threshold, ``seed``
    - ``laect``: prediction-guided threshold, trust ``gamma`` and prediction
      ``d_hat`` (``d_hat=None`` means "filled in by the harness per instance")
    """

    kind: str
    phi: float | None = None
    alpha: float | None = None
    gamma: float | None = None
    d_hat: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ParameterError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind == "constant":
            if self.phi is None or not (math.isfinite(self.phi) and self.phi >= 0.0):
                raise ParameterError(f"constant policy needs a finite threshold phi >= 0, got {self.phi!r}")
        elif self.kind in ("baseline", "ect"):
            if self.alpha is None or not (0.0 < self.alpha <= 1.0):
                raise ParameterError(f"{self.kind} policy needs alpha in (0, 1], got {self.alpha!r}")
        elif self.kind == "zcl_randomized":
            if self.seed is None or not (0 <= int(self.seed) < _MAX_SEED):
                raise ParameterError(f"zcl_randomized needs a 64-bit seed, got {self.seed!r}")
        elif self.kind == "laect":
            if self.gamma is None or not (0.0 <= self.gamma <= 1.0):
                raise ParameterError(f"laect policy needs gamma in [0, 1], got {self.gamma!r}")

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, phi: float) -> "PolicySpec":
        return cls(kind="constant", phi=phi)

    @classmethod
    def zcl(cls) -> "PolicySpec":
        return cls(kind="zcl")

    @classmethod
    def baseline(cls, alpha: float) -> "PolicySpec":
        return cls(kind="baseline", alpha=alpha)

    @classmethod
    def ect(cls, alpha: float) -> "PolicySpec":
        return cls(kind="ect", alpha=alpha)

    @classmethod
    def zcl_randomized(cls, seed: int) -> "PolicySpec":
        return cls(kind="zcl_randomized", seed=seed)

    @classmethod
    def laect(cls, gamma: float, d_hat: float | None = None) -> "PolicySpec":
        return cls(kind="laect", gamma=gamma, d_hat=d_hat)

    # -- behavior ------------------------------------------------------
    def label(self) -> str:
        """Stable human-readable key used in reports and CSV output."""
        if self.kind == "constant":
            return f"Constant[{self.phi:.6g}]"
        if self.kind == "zcl":
            return "ZCL"
        if self.kind == "baseline":
            return f"Baseline[{self.alpha:.6g}]"
        if self.kind == "ect":
            return f"ECT[{self.alpha:.6g}]"
        if self.kind == "zcl_randomized":
            return "ZCL-Randomized"
        return f"LA-ECT[{self.gamma:.6g}]"

    def validate_for(self, lower: float, upper: float) -> None:
        """Range checks that need the instance's density support."""
        ctx = BoundContext(lower, upper)
        if self.kind == "constant" and self.phi is not None and self.phi > upper * (1.0 + 1e-12):
            raise ParameterError(f"constant threshold {self.phi!r} exceeds the density ceiling {upper!r}")
        if self.kind in ("baseline", "ect"):
            if self.alpha is None or self.alpha < ctx.alpha_min - 1e-12:
                raise ParameterError(
                    f"{self.kind} alpha {self.alpha!r} below the feasible minimum {ctx.alpha_min!r}"
                )
        if self.kind == "laect" and self.d_hat is None:
            raise ParameterError("laect policy needs a concrete prediction d_hat to run")

    def context_for(self, lower: float, upper: float) -> BoundContext:
        return BoundContext(lower, upper, alpha=self.alpha, gamma=self.gamma, d_hat=self.d_hat)

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for key in ("phi", "alpha", "gamma", "d_hat", "seed"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "PolicySpec":
        if "kind" not in data:
            raise ParameterError("policy object needs a 'kind' field")
        known = {"kind", "phi", "alpha", "gamma", "d_hat", "seed"}
        extra = set(data) - known
        if extra:
            raise ParameterError(f"unknown policy fields {sorted(extra)}")
        return cls(**data)


def zcl_threshold_pdf(x: float, lower: float, upper: float) -> float:
    """Density of the one-shot threshold distribution: c/L on [0, L], c/x on [L, U]."""
    c = 1.0 / (math.log(upper / lower) + 1.0)
    if x < 0.0 or x > upper:
        return 0.0
    if x <= lower:
        return c / lower
    return c / x


def zcl_threshold_cdf(x: float, lower: float, upper: float) -> float:
    """Closed-form CDF of the one-shot threshold distribution."""
    c = 1.0 / (math.log(upper / lower) + 1.0)
    if x <= 0.0:
        return 0.0
    if x <= lower:
        return c * x / lower
    if x >= upper:
        return 1.0
    return c + c * math.log(x / lower)


def _zcl_threshold_from_uniform(u: float, lower: float, upper: float) -> float:
    # inverse CDF: uniform piece below L, log piece on [L, U]
    c = 1.0 / (math.log(upper / lower) + 1.0)
    if u <= c:
        return u * lower / c
    return lower * math.exp((u - c) / c)


def sample_zcl_threshold(seed: int, lower: float, upper: float) -> float:
    """Draw the one-shot constant threshold; deterministic given the seed."""
    if not upper >= lower > 0:
        raise ParameterError(f"need U >= L > 0, got L={lower!r}, U={upper!r}")
    u = float(np.random.default_rng(seed).random())
    return _zcl_threshold_from_uniform(u, lower, upper)


def _threshold_fn(
    policy: PolicySpec, lower: float, upper: float
) -> tuple[Callable[[float], float], float | None]:
    """Resolve the policy to a utilization -> threshold map.

    Returns the map plus the sampled constant for the randomized policy
    (None otherwise). Sampling happens exactly once, before the first item.
    """
    if policy.kind == "constant":
        phi = float(policy.phi)  # type: ignore[arg-type]
        return (lambda z: phi), None
    if policy.kind == "zcl_randomized":
        phi = sample_zcl_threshold(int(policy.seed), lower, upper)  # type: ignore[arg-type]
        return (lambda z: phi), phi
    ctx = policy.context_for(lower, upper)
    if policy.kind == "zcl":
        return (lambda z: threshold_zcl(z, ctx)), None
    if policy.kind == "baseline":
        return (lambda z: threshold_baseline(z, ctx)), None
    if policy.kind == "ect":
        return (lambda z: threshold_ect(z, ctx)), None
    return (lambda z: threshold_laect(z, ctx)), None


def run(policy: PolicySpec, inst: Instance, record_decisions: bool = True) -> RunTrace:
    """Process the instance in arrival order under the policy's threshold.

    Item j is accepted iff density_j >= threshold(z_j) and z_j + w_j <= 1;
    an item that clears the threshold but would overflow is rejected and the
    run continues. ``record_decisions=False`` skips building the per-item
    decision list (the final tallies are unaffected); bulk experiments use
    it to keep memory flat.
    """
    policy.validate_for(inst.lower, inst.upper)
    theta, _ = _threshold_fn(policy, inst.lower, inst.upper)
    m = inst.granularity
    units = inst.weight_units.tolist()
    dens = inst.densities.tolist()
    vals = inst.values.tolist()
    used = 0
    total = 0.0
    decisions: list[Decision] = []
    for j in range(len(units)):
        z = used / m
        t = theta(z)
        w = units[j]
        ok = dens[j] >= t and used + w <= m
        if ok:
            used += w
            total += vals[j]
        if record_decisions:
            decisions.append(Decision(j + 1, ok, z, t, used / m))
    return RunTrace(
        policy=policy,
        decisions=tuple(decisions),
        final_value=total,
        final_utilization=used / m,
    )


@dataclass(frozen=True)
class RandomizedValueEstimate:
    """Monte Carlo summary of the randomized policy's final value."""

    mean: float
    ci_low: float
    ci_high: float
    stdev: float
    n_trials: int
    values: tuple[float, ...]


def expected_value_randomized(inst: Instance, n_trials: int, seed: int) -> RandomizedValueEstimate:
    """Run the one-shot randomized policy n_trials times with derived seeds.

    Returns the sample mean of the final value with a normal-approximation
    95% interval (degenerate for a single trial).
    """
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials!r}")
    trial_seeds = np.random.default_rng(seed).integers(0, 2**63, size=n_trials)
    values = [
        run(PolicySpec.zcl_randomized(int(s)), inst, record_decisions=False).final_value
        for s in trial_seeds
    ]
    arr = np.asarray(values)
    mean = float(arr.mean())
    stdev = float(arr.std(ddof=1)) if n_trials > 1 else 0.0
    half = 1.959963984540054 * stdev / math.sqrt(n_trials)
    return RandomizedValueEstimate(
        mean=mean,
        ci_low=mean - half,
        ci_high=mean + half,
        stdev=stdev,
        n_trials=n_trials,
        values=tuple(values),
    )


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent per-trial / per-instance seeds from a master seed."""
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**63, size=count)]


def with_seed(policy: PolicySpec, seed: int) -> PolicySpec:
    return replace(policy, seed=seed)
