"""Domain types for online knapsack runs: items, instances, decisions, traces.

The knapsack capacity is normalized to 1; any externally declared capacity
must be rescaled before items reach this layer. Weights are required to be
integer multiples of 1/m, where m is the instance granularity, so that
utilization accounting and the offline dynamic program are exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .algorithms import PolicySpec

# Densities within this relative slack of [L, U] are snapped onto the bound
# instead of rejected: trace synthesis multiplies three floats, so a density
# can land a few ulp outside the declared support.
DENSITY_CLAMP_RTOL = 1e-9

# Weights above this trip the non-fatal small-weight warning (the largest
# weight used by the cloud-trace synthesis menu).
SMALL_WEIGHT_WARN = 0.05

# |w*m - round(w*m)| beyond this counts as a granularity violation.
GRID_ATOL = 1e-9


@dataclass(frozen=True)
class Item:
    """A (value, weight) pair; weight is a fraction of the unit capacity."""

    value: float
    weight: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ValidationError(f"item value must be finite and >= 0, got {self.value!r}")
        if not (math.isfinite(self.weight) and 0.0 < self.weight <= 1.0):
            raise ValidationError(f"item weight must be in (0, 1], got {self.weight!r}")

    @property
    def density(self) -> float:
        return self.value / self.weight


def density(item: Item) -> float:
    """Value density value/weight, the admission criterion quantity."""
    if item.weight == 0:
        raise ValidationError("invalid item: weight is zero")
    return item.value / item.weight


@dataclass(frozen=True)
class Instance:
    """An ordered item sequence with declared density support [L, U].

    All weights must be integer multiples of 1/granularity. Instances are
    immutable after construction; the cached numpy views are marked
    read-only and safe to share across threads.
    """

    items: tuple[Item, ...]
    lower: float
    upper: float
    granularity: int
    name: str = ""
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValidationError("density bounds must be finite")
        if not (0.0 < self.lower <= self.upper):
            raise ValidationError(
                f"density bounds must satisfy 0 < L <= U, got L={self.lower!r}, U={self.upper!r}"
            )
        if self.granularity < 1:
            raise ValidationError(f"granularity must be a positive integer, got {self.granularity!r}")

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def values(self) -> np.ndarray:
        a = np.array([it.value for it in self.items], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def weights(self) -> np.ndarray:
        a = np.array([it.weight for it in self.items], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def weight_units(self) -> np.ndarray:
        """Weights in integer units of 1/m (rounded; validate_instance checks exactness)."""
        a = np.rint(self.weights * self.granularity).astype(np.int64)
        a.setflags(write=False)
        return a

    @cached_property
    def densities(self) -> np.ndarray:
        """Value densities with float noise snapped onto [L, U].

        Runs and validation use this view; ``density()`` stays the exact
        value/weight quotient.
        """
        if not self.items:
            a = np.empty(0, dtype=float)
            a.setflags(write=False)
            return a
        d = self.values / self.weights
        lo, hi = self.lower, self.upper
        d = np.where((d < lo) & (d >= lo * (1.0 - DENSITY_CLAMP_RTOL)), lo, d)
        d = np.where((d > hi) & (d <= hi * (1.0 + DENSITY_CLAMP_RTOL)), hi, d)
        d.setflags(write=False)
        return d

    @cached_property
    def fingerprint(self) -> str:
        """Short content hash used to key audit witnesses to instances."""
        h = hashlib.sha256()
        h.update(f"{self.lower!r},{self.upper!r},{self.granularity}".encode())
        for it in self.items:
            h.update(f"{it.value!r},{it.weight!r};".encode())
        return h.hexdigest()[:16]

    def total_weight(self) -> float:
        return float(self.weight_units.sum()) / self.granularity


def validate_instance(inst: Instance) -> list[str]:
    """Check every instance invariant; returns one message per violation.

    Pure and idempotent. Items heavier than SMALL_WEIGHT_WARN only trigger a
    non-fatal warning: the small-weight assumption is needed for the
    competitive guarantees but is not an input contract.
    """
    violations: list[str] = []
    lo, hi = inst.lower, inst.upper
    m = inst.granularity
    heavy: list[int] = []
    for i, item in enumerate(inst.items):
        d = float(inst.densities[i])
        if not lo <= d <= hi:
            violations.append(f"item {i + 1}: density {d!r} out of [L, U] = [{lo!r}, {hi!r}]")
        scaled = item.weight * m
        if abs(scaled - round(scaled)) > GRID_ATOL:
            violations.append(f"item {i + 1}: weight {item.weight!r} is not a multiple of 1/{m}")
        if item.weight > SMALL_WEIGHT_WARN:
            heavy.append(i + 1)
    if heavy:
        warnings.warn(
            f"instance {inst.name or inst.fingerprint}: items {heavy} have weight > "
            f"{SMALL_WEIGHT_WARN}; competitive guarantees assume small weights",
            stacklevel=2,
        )
    return violations


@dataclass(frozen=True)
class KnapsackState:
    """Utilization and accumulated value; advanced functionally via ``accept``."""

    granularity: int
    used_units: int = 0
    accumulated_value: float = 0.0

    @property
    def utilization(self) -> float:
        return self.used_units / self.granularity

    def accept(self, item: Item) -> "KnapsackState":
        units = int(round(item.weight * self.granularity))
        if self.used_units + units > self.granularity:
            raise ValidationError("accepting item would exceed capacity")
        return KnapsackState(
            self.granularity, self.used_units + units, self.accumulated_value + item.value
        )


@dataclass(frozen=True)
class Decision:
    """Outcome for one arriving item (index is the 1-based arrival position)."""

    index: int
    accepted: bool
    utilization_at_arrival: float
    threshold_at_arrival: float | None
    post_utilization: float


@dataclass(frozen=True)
class RunTrace:
    """Per-item decisions of a single policy run plus its final tallies."""

    policy: "PolicySpec"
    decisions: tuple[Decision, ...]
    final_value: float
    final_utilization: float

    def accepted_indices(self) -> tuple[int, ...]:
        return tuple(d.index for d in self.decisions if d.accepted)


def replay_trace(inst: Instance, trace: RunTrace) -> KnapsackState:
    """Re-apply a trace's accepted set; reconstructs the final tallies exactly."""
    state = KnapsackState(inst.granularity)
    for d in trace.decisions:
        if d.accepted:
            state = state.accept(inst.items[d.index - 1])
    return state


# ---------------------------------------------------------------------------
# Instance file format: line CSV `value,weight` plus a JSON metadata sidecar.

CSV_HEADER = ["value", "weight"]


def metadata_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta.json")


def write_instance(inst: Instance, path: str | Path) -> Path:
    """Write the CSV + sidecar pair. Floats use repr, so the round-trip is bit-exact."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for it in inst.items:
            w.writerow([repr(it.value), repr(it.weight)])
    meta = {
        "L": inst.lower,
        "U": inst.upper,
        "m": inst.granularity,
        "name": inst.name,
        "seed": inst.seed,
    }
    with open(metadata_path(path), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path


def read_instance(path: str | Path) -> Instance:
    """Parse a CSV + sidecar pair; raises ValidationError naming the bad line."""
    path = Path(path)
    mpath = metadata_path(path)
    if not mpath.exists():
        raise ValidationError(f"missing metadata sidecar {mpath}")
    try:
        meta = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{mpath}: invalid JSON ({exc})") from exc
    for key in ("L", "U", "m"):
        if key not in meta:
            raise ValidationError(f"{mpath}: missing required metadata key {key!r}")

    items: list[Item] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise ValidationError(f"{path}:1: empty file, expected header {CSV_HEADER}") from exc
        if [c.strip() for c in header] != CSV_HEADER:
            raise ValidationError(f"{path}:1: expected header {CSV_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                value, weight = float(row[0]), float(row[1])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
            try:
                items.append(Item(value, weight))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc

    return Instance(
        items=tuple(items),
        lower=float(meta["L"]),
        upper=float(meta["U"]),
        granularity=int(meta["m"]),
        name=str(meta.get("name", "") or ""),
        seed=meta.get("seed"),
    )
