"""Experiment harness: empirical competitive ratios, CDFs, bound curves, sweeps.

Per-instance empirical CR is OPT/ALG with OPT from the exact DP; a zero
algorithm value against a positive optimum is reported as the infinity
sentinel, serialized as the string "inf", excluded from means but included
in maxima and CDF tail mass.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .algorithms import PolicySpec, derive_seeds, run
from .core import Instance
from .errors import ParameterError, ResourceBudgetError, ValidationError
from .instances import GeneratorSpec, generate, simulate_prediction
from .numerics import (
    BoundContext,
    bound_baseline_cr,
    bound_laect_consistency,
    bound_laect_robustness,
    bound_pareto_beta,
)
from .oracles import OracleResult, compute_dstar, opt_dp


def empirical_cr(policy: PolicySpec, inst: Instance, opt: OracleResult | None = None) -> float:
    """Per-instance competitive ratio OPT/ALG (inf sentinel when ALG packs nothing)."""
    if opt is None:
        opt = opt_dp(inst)
    alg = run(policy, inst, record_decisions=False).final_value
    if opt.value <= 0.0:
        return 1.0
    if alg <= 0.0:
        return math.inf
    return opt.value / alg


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def _percentile(crs: Sequence[float], q: float) -> float:
    # order statistic rather than interpolation: safe with inf sentinels
    return float(np.percentile(np.asarray(crs, dtype=float), q, method="lower"))


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a reproducible experiment needs."""

    policies: tuple[PolicySpec, ...]
    generator: GeneratorSpec
    n_instances: int
    seed: int
    prediction_sigma: float = 0.0
    cell_budget: int = 10**8

    def __post_init__(self) -> None:
        if self.n_instances < 1:
            raise ValidationError(f"n_instances must be >= 1, got {self.n_instances!r}")
        if self.prediction_sigma < 0:
            raise ValidationError("prediction_sigma must be >= 0")
        object.__setattr__(self, "policies", tuple(self.policies))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "policies": [p.to_json_dict() for p in self.policies],
            "generator": self.generator.to_json_dict(),
            "n_instances": self.n_instances,
            "seed": self.seed,
            "prediction_sigma": self.prediction_sigma,
            "cell_budget": self.cell_budget,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "ExperimentSpec":
        try:
            return cls(
                policies=tuple(PolicySpec.from_json_dict(p) for p in data["policies"]),
                generator=GeneratorSpec.from_json_dict(data["generator"]),
                n_instances=int(data["n_instances"]),
                seed=int(data.get("seed", 0)),
                prediction_sigma=float(data.get("prediction_sigma", 0.0)),
                cell_budget=int(data.get("cell_budget", 10**8)),
            )
        except KeyError as exc:
            raise ValidationError(f"experiment config missing key {exc}") from exc


@dataclass
class PolicyResult:
    """Empirical CRs of one policy across the experiment's instances."""

    policy: PolicySpec
    crs: tuple[float, ...]

    @property
    def label(self) -> str:
        return self.policy.label()

    @property
    def finite(self) -> tuple[float, ...]:
        return tuple(c for c in self.crs if math.isfinite(c))

    @property
    def n_inf(self) -> int:
        return sum(1 for c in self.crs if math.isinf(c))

    def mean(self) -> float:
        f = self.finite
        return float(np.mean(f)) if f else math.inf

    def max(self) -> float:
        return max(self.crs) if self.crs else 1.0

    def cdf_points(self) -> list[tuple[float, float]]:
        """Non-decreasing (cr, cumulative fraction); infs appear as tail mass at 1."""
        n = len(self.crs)
        pts = [(c, (i + 1) / n) for i, c in enumerate(sorted(self.finite))]
        if self.n_inf:
            pts.append((math.inf, 1.0))
        return pts

    def summary(self) -> dict[str, Any]:
        crs = self.crs
        return {
            "policy": self.label,
            "n": len(crs),
            "n_inf": self.n_inf,
            "mean": _fmt(self.mean()),
            "max": _fmt(self.max()),
            "p50": _fmt(_percentile(crs, 50)),
            "p90": _fmt(_percentile(crs, 90)),
            "p99": _fmt(_percentile(crs, 99)),
        }


@dataclass
class ConsistencyCheck:
    """Per-instance prediction-quality ratio and the matching consistency bound."""

    instance_index: int
    policy: str
    rho: float
    gamma: float
    cr: float
    bound: float

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "instance_index": self.instance_index,
            "policy": self.policy,
            "rho": self.rho,
            "gamma": self.gamma,
            "cr": _fmt(self.cr),
            "bound": _fmt(self.bound),
        }


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    results: list[PolicyResult]
    consistency: list[ConsistencyCheck]
    skipped_instances: int

    def result_for(self, label: str) -> PolicyResult:
        for r in self.results:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_json(self) -> str:
        payload = {
            "spec": self.spec.to_json_dict(),
            "skipped_instances": self.skipped_instances,
            "policies": [
                {
                    **r.summary(),
                    "crs": [_fmt(c) for c in r.crs],
                    "cdf": [[_fmt(c), f] for c, f in r.cdf_points()],
                }
                for r in self.results
            ],
            "consistency": [c.to_json_dict() for c in self.consistency],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def write_cdf_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["policy", "cr", "cdf"])
            for r in sorted(self.results, key=lambda r: r.label):
                for c, f in r.cdf_points():
                    w.writerow([r.label, _fmt(c), repr(f)])
        return path


def _resolve_policy(
    policy: PolicySpec,
    inst: Instance,
    sigma: float,
    pred_seed: int,
    rand_seed: int,
    d_star_cache: dict[str, float],
) -> tuple[PolicySpec, float | None]:
    """Fill in per-instance pieces: predictions for laect, seeds for randomized.

    Returns the concrete policy and rho = d_max/d_star when a prediction was
    derived (None otherwise).
    """
    if policy.kind == "zcl_randomized":
        return replace(policy, seed=rand_seed), None
    if policy.kind == "laect" and policy.d_hat is None:
        if "d_star" not in d_star_cache:
            d_star_cache["d_star"] = compute_dstar(inst)
        d_star = d_star_cache["d_star"]
        d_hat = simulate_prediction(d_star, sigma, pred_seed, inst.lower, inst.upper)
        rho = float(inst.densities.max()) / d_star
        return replace(policy, d_hat=d_hat), rho
    return policy, None


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Generate instances with derived seeds, run every policy, assemble CDFs.

    For prediction-guided policies without a fixed prediction, the per
    instance cutoff d_star is extracted offline and perturbed with the
    spec's noise level. Instances whose exact DP would blow the cell budget
    are skipped and counted.
    """
    inst_seeds = derive_seeds(spec.seed, spec.n_instances)
    pred_seeds = derive_seeds(spec.seed ^ 0x5EED, spec.n_instances)
    rand_seeds = derive_seeds(spec.seed ^ 0xD1CE, spec.n_instances)
    crs: dict[int, list[float]] = {i: [] for i in range(len(spec.policies))}
    consistency: list[ConsistencyCheck] = []
    skipped = 0
    for i in range(spec.n_instances):
        inst = generate(spec.generator, seed=inst_seeds[i])
        try:
            opt = opt_dp(inst, cell_budget=spec.cell_budget)
        except ResourceBudgetError:
            skipped += 1
            continue
        d_star_cache: dict[str, float] = {}
        for k, policy in enumerate(spec.policies):
            concrete, rho = _resolve_policy(
                policy, inst, spec.prediction_sigma, pred_seeds[i], rand_seeds[i], d_star_cache
            )
            cr = empirical_cr(concrete, inst, opt=opt)
            crs[k].append(cr)
            if rho is not None:
                consistency.append(
                    ConsistencyCheck(
                        instance_index=i,
                        policy=policy.label(),
                        rho=rho,
                        gamma=float(policy.gamma),  # type: ignore[arg-type]
                        cr=cr,
                        bound=bound_laect_consistency(rho, float(policy.gamma)),  # type: ignore[arg-type]
                    )
                )
    results = [PolicyResult(policy=p, crs=tuple(crs[k])) for k, p in enumerate(spec.policies)]
    return ExperimentReport(
        spec=spec, results=results, consistency=consistency, skipped_instances=skipped
    )


# ---------------------------------------------------------------------------
# Adversarial ramp family helpers and bound-conformance tables


def ramp_family(
    lower: float, upper: float, m: int = 1000, n_points: int = 50
) -> list[Instance]:
    """The x-ramp instances on an n_points grid spanning [L, U]."""
    from .instances import gen_x_nondecreasing

    xs = np.linspace(lower, upper, n_points)
    n_batches = max(n_points - 1, 1)  # grid points sit exactly on batch densities
    return [gen_x_nondecreasing(float(x), m, n_batches, lower, upper) for x in xs]


def family_worst_cr(
    policy: PolicySpec,
    family: Sequence[Instance],
    opts: Sequence[OracleResult] | None = None,
) -> float:
    """Max empirical CR over a fixed instance family."""
    if opts is None:
        opts = [opt_dp(inst) for inst in family]
    return max(empirical_cr(policy, inst, opt=o) for inst, o in zip(family, opts))


class BoundViolation(AssertionError):
    """An empirical curve escaped its theoretical envelope."""


@dataclass
class CurveRow:
    alpha: float
    lower_bound: float
    baseline_bound: float
    ect_empirical: float


@dataclass
class CurvesTable:
    lower: float
    upper: float
    rows: list[CurveRow]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "lower_bound", "baseline_bound", "ect_empirical"])
            for r in self.rows:
                w.writerow([repr(r.alpha), _fmt(r.lower_bound), _fmt(r.baseline_bound), _fmt(r.ect_empirical)])
        return path

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.lower,
                "U": self.upper,
                "rows": [
                    {
                        "alpha": r.alpha,
                        "lower_bound": _fmt(r.lower_bound),
                        "baseline_bound": _fmt(r.baseline_bound),
                        "ect_empirical": _fmt(r.ect_empirical),
                    }
                    for r in self.rows
                ],
            },
            indent=2,
            sort_keys=True,
        )


def pareto_curves(
    lower: float,
    upper: float,
    alpha_grid: Sequence[float],
    m: int = 1000,
    n_points: int = 50,
    family: Sequence[Instance] | None = None,
    opts: Sequence[OracleResult] | None = None,
    check: bool = True,
    slack: float = 1.05,
) -> CurvesTable:
    """Fairness/competitiveness trade-off table over an alpha grid.

    Emits, per alpha: the Pareto-optimal lower bound, the stretched
    threshold's bound, and the flat-then-jump policy's worst empirical CR
    over the ramp family. With ``check`` the empirical column must sit
    within ``slack`` of the lower bound on both sides and below the
    baseline bound.
    """
    if family is None:
        family = ramp_family(lower, upper, m=m, n_points=n_points)
    if opts is None:
        opts = [opt_dp(inst) for inst in family]
    rows: list[CurveRow] = []
    for alpha in alpha_grid:
        ctx = BoundContext(lower, upper, alpha=float(alpha))
        lb = bound_pareto_beta(ctx)
        bb = bound_baseline_cr(ctx)
        emp = family_worst_cr(PolicySpec.ect(float(alpha)), family, opts)
        if check:
            if lb > emp * slack:
                raise BoundViolation(
                    f"alpha={alpha}: lower bound {lb} above empirical worst CR {emp} * {slack}"
                )
            if emp > lb * slack:
                raise BoundViolation(
                    f"alpha={alpha}: empirical worst CR {emp} above bound {lb} * {slack}"
                )
            if lb > bb * (1.0 + 1e-9):
                raise BoundViolation(f"alpha={alpha}: lower bound {lb} above baseline bound {bb}")
        rows.append(CurveRow(float(alpha), lb, bb, emp))
    return CurvesTable(lower=lower, upper=upper, rows=rows)


@dataclass
class SweepRow:
    gamma: float
    d_hat_choice: str
    d_hat: float
    worst_cr: float
    bound: float


@dataclass
class SweepTable:
    lower: float
    upper: float
    rows: list[SweepRow]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "d_hat_choice", "d_hat", "worst_cr", "bound"])
            for r in self.rows:
                w.writerow(
                    [repr(r.gamma), r.d_hat_choice, repr(r.d_hat), _fmt(r.worst_cr), _fmt(r.bound)]
                )
        return path

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.lower,
                "U": self.upper,
                "rows": [
                    {
                        "gamma": r.gamma,
                        "d_hat_choice": r.d_hat_choice,
                        "d_hat": r.d_hat,
                        "worst_cr": _fmt(r.worst_cr),
                        "bound": _fmt(r.bound),
                    }
                    for r in self.rows
                ],
            },
            indent=2,
            sort_keys=True,
        )


def threshold_table(
    policies: Sequence[PolicySpec],
    lower: float,
    upper: float,
    grid: int = 512,
) -> list[tuple[str, float, float]]:
    """Sampled threshold shapes, one (policy, z, threshold) row per grid point.

    Input for threshold-shape figures; the jump of the flat-then-jump policy
    and the flat prediction segment stay visible at the default resolution.
    """
    from .algorithms import _threshold_fn

    rows: list[tuple[str, float, float]] = []
    for policy in policies:
        policy.validate_for(lower, upper)
        theta, _ = _threshold_fn(policy, lower, upper)
        for z in np.linspace(0.0, 1.0, grid):
            rows.append((policy.label(), float(z), float(theta(float(z)))))
    return rows


def write_threshold_csv(
    rows: Sequence[tuple[str, float, float]], path: str | Path
) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "z", "threshold"])
        for label, z, t in rows:
            w.writerow([label, repr(z), repr(t)])
    return path


def robustness_sweep(
    gamma_grid: Sequence[float],
    d_hat_choices: Sequence[str] = ("L", "U", "random"),
    family: Sequence[Instance] | None = None,
    lower: float = 1.0,
    upper: float = 5.0,
    m: int = 1000,
    n_points: int = 50,
    seed: int = 0,
    opts: Sequence[OracleResult] | None = None,
    check: bool = True,
    slack: float = 1.05,
) -> SweepTable:
    """Worst empirical CR under adversarial predictions, per trust level.

    For gamma < 1 the worst CR must stay within ``slack`` of the robustness
    bound; full trust with a bad prediction is expected to blow up to the
    infinity sentinel and is reported, not checked.
    """
    if family is None:
        family = ramp_family(lower, upper, m=m, n_points=n_points)
    else:
        lower, upper = family[0].lower, family[0].upper
    if opts is None:
        opts = [opt_dp(inst) for inst in family]
    rng = np.random.default_rng(seed)
    rows: list[SweepRow] = []
    for gamma in gamma_grid:
        g = float(gamma)
        bound = bound_laect_robustness(BoundContext(lower, upper, gamma=g))
        for choice in d_hat_choices:
            if choice == "L":
                d_hat = lower
            elif choice == "U":
                d_hat = upper
            elif choice == "random":
                d_hat = float(rng.uniform(lower, upper))
            else:
                raise ParameterError(f"unknown d_hat choice {choice!r}")
            worst = family_worst_cr(PolicySpec.laect(g, d_hat), family, opts)
            if check and g < 1.0 and worst > bound * slack:
                raise BoundViolation(
                    f"gamma={g}, d_hat={choice}: worst CR {worst} above bound {bound} * {slack}"
                )
            rows.append(SweepRow(g, choice, d_hat, worst, bound))
    return SweepTable(lower=lower, upper=upper, rows=rows)
