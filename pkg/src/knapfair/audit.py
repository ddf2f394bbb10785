"""Empirical fairness audits.

The conditional time-independent fairness property says: over a utilization
subinterval A = [a, b], the decision for an item landing in A (arrival
utilization plus its own weight inside A) may depend only on its value
density, never on its arrival position. The auditor checks this by
replaying base instances with a probe item spliced in at many positions and
comparing the probe's decisions.

Probes whose landing utilization is inside A but whose *arrival*
utilization is still left of a are counted separately as boundary items and
excluded from the verdict: their threshold lookup happens outside the fair
region, an off-by-one-item-weight edge that vanishes with small weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .algorithms import PolicySpec, derive_seeds, run
from .core import Instance, Item
from .errors import ParameterError, ValidationError
from .instances import gen_gadget
from .numerics import BoundContext

# Absolute slack for interval membership; far below any 1/m grid step.
_EDGE_TOL = 1e-9


def default_interval(policy: PolicySpec, lower: float, upper: float, width: float | None = None) -> tuple[float, float]:
    """Candidate fair interval for a policy, optionally stretched to ``width``.

    The fairness definition quantifies existentially over A, so the audit
    has to know where to look: the flat region of each threshold. Constant
    and randomized policies are flat everywhere; the exponential threshold
    sits below the density floor up to 1/(ln(U/L)+1); the flat-then-jump
    and stretched thresholds are fair on [0, alpha]; the prediction-guided
    threshold is flat on [kappa, kappa+gamma].
    """
    ctx = BoundContext(lower, upper, alpha=policy.alpha, gamma=policy.gamma, d_hat=policy.d_hat)
    if policy.kind in ("constant", "zcl_randomized"):
        a, natural = 0.0, 1.0
    elif policy.kind == "zcl":
        a, natural = 0.0, ctx.alpha_min
    elif policy.kind in ("baseline", "ect"):
        a, natural = 0.0, float(policy.alpha)  # type: ignore[arg-type]
    elif policy.kind == "laect":
        if policy.d_hat is None:
            raise ParameterError("laect needs a concrete d_hat to locate its fair interval")
        a, natural = ctx.kappa, float(policy.gamma)  # type: ignore[arg-type]
    else:  # pragma: no cover
        raise ParameterError(f"no default interval for policy kind {policy.kind!r}")
    w = natural if width is None else width
    return a, min(a + w, 1.0)


@dataclass(frozen=True)
class ProbeOutcome:
    """One probe replay: where it landed and what the policy decided."""

    instance_name: str
    fingerprint: str
    density: float
    position: int
    z_arrival: float
    z_landing: float
    threshold: float | None
    accepted: bool
    in_interval: bool
    boundary: bool


@dataclass(frozen=True)
class Witness:
    """Two in-interval probes of equal density with different decisions."""

    fingerprint: str
    instance_name: str
    density: float
    position_a: int
    position_b: int
    accepted_a: bool
    accepted_b: bool
    z_a: float
    z_b: float

    def to_json_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class AuditReport:
    """Verdict plus the evidence behind it.

    ``verdict`` is "pass", "fail", or "inconclusive" (no probe ever landed
    in the tested interval, which is different from passing). A fail always
    carries at least one replayable witness. The scope note records that
    only the supplied instances and probe densities were exercised; the
    fairness property itself quantifies over all instances.
    """

    policy: PolicySpec
    interval: tuple[float, float]
    width: float
    verdict: str
    witnesses: tuple[Witness, ...]
    boundary_items: int
    probes_total: int
    probes_compared: int
    groups: list[dict[str, Any]] = field(default_factory=list)
    scope_note: str = ""

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "policy": self.policy.to_json_dict(),
            "interval": list(self.interval),
            "width": self.width,
            "verdict": self.verdict,
            "witnesses": [w.to_json_dict() for w in self.witnesses],
            "boundary_items": self.boundary_items,
            "probes_total": self.probes_total,
            "probes_compared": self.probes_compared,
            "groups": self.groups,
            "scope_note": self.scope_note,
        }


def probe_positions(inst: Instance, count: int = 13) -> list[int]:
    """Evenly spread insertion positions, always including the very front."""
    n = len(inst)
    return sorted(set(int(p) for p in np.linspace(0, n, num=min(n + 1, count))))


def probed_instance(inst: Instance, density: float, position: int) -> Instance:
    """Splice a probe item of the given density and weight 1/m before ``position``."""
    if not 0 <= position <= len(inst):
        raise ValidationError(f"probe position {position} outside [0, {len(inst)}]")
    w = 1.0 / inst.granularity
    probe = Item(density * w, w)
    items = inst.items[:position] + (probe,) + inst.items[position:]
    return Instance(
        items=items,
        lower=inst.lower,
        upper=inst.upper,
        granularity=inst.granularity,
        name=f"{inst.name or inst.fingerprint}+probe@{position}",
    )


def _run_probe(
    policy: PolicySpec,
    inst: Instance,
    density: float,
    position: int,
    interval: tuple[float, float],
    prepared: Instance | None = None,
) -> ProbeOutcome:
    a, b = interval
    probed = prepared if prepared is not None else probed_instance(inst, density, position)
    trace = run(policy, probed)
    decision = trace.decisions[position]
    w = 1.0 / inst.granularity
    z = decision.utilization_at_arrival
    landing = z + w
    in_interval = (a - _EDGE_TOL) <= landing <= (b + _EDGE_TOL)
    boundary = in_interval and z < a - _EDGE_TOL
    return ProbeOutcome(
        instance_name=inst.name,
        fingerprint=inst.fingerprint,
        density=density,
        position=position,
        z_arrival=z,
        z_landing=landing,
        threshold=decision.threshold_at_arrival,
        accepted=decision.accepted,
        in_interval=in_interval,
        boundary=boundary,
    )


def _deterministic_verdict(
    outcomes: list[ProbeOutcome],
) -> tuple[str, list[Witness], list[dict[str, Any]]]:
    compared = [o for o in outcomes if o.in_interval and not o.boundary]
    if not compared:
        return "inconclusive", [], []
    witnesses: list[Witness] = []
    groups: list[dict[str, Any]] = []
    for key in sorted({(o.fingerprint, o.density) for o in compared}):
        members = [o for o in compared if (o.fingerprint, o.density) == key]
        accepted = [o for o in members if o.accepted]
        rejected = [o for o in members if not o.accepted]
        groups.append(
            {
                "fingerprint": key[0],
                "instance": members[0].instance_name,
                "density": key[1],
                "probes": len(members),
                "accept_rate": len(accepted) / len(members),
            }
        )
        if accepted and rejected:
            a0, r0 = accepted[0], rejected[0]
            witnesses.append(
                Witness(
                    fingerprint=key[0],
                    instance_name=a0.instance_name,
                    density=key[1],
                    position_a=a0.position,
                    position_b=r0.position,
                    accepted_a=a0.accepted,
                    accepted_b=r0.accepted,
                    z_a=a0.z_arrival,
                    z_b=r0.z_arrival,
                )
            )
    return ("fail" if witnesses else "pass"), witnesses, groups


def audit_ctif(
    policy: PolicySpec,
    alpha: float,
    base_instances: Sequence[Instance],
    probe_densities: Sequence[float],
    trials: int = 1,
    seed: int = 0,
    interval: tuple[float, float] | None = None,
    positions: Sequence[int] | None = None,
) -> AuditReport:
    """Probe-replay audit of fairness at width ``alpha``.

    For each base instance and probe density, a probe item of weight 1/m is
    inserted at several positions; decisions are compared wherever the probe
    lands inside the candidate interval. Deterministic policies pass iff all
    in-interval decisions per (instance, density) agree; the randomized
    policy is delegated to the frequency-based audit with ``trials`` draws.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"audit width alpha must lie in [0, 1], got {alpha!r}")
    if not base_instances:
        raise ValidationError("audit needs at least one base instance")
    if not probe_densities:
        raise ValidationError("audit needs at least one probe density")
    if policy.kind == "zcl_randomized":
        return audit_randomized_ctif(
            policy,
            base_instances,
            probe_densities,
            trials=max(trials, 1000),
            seed=seed,
            interval=interval,
            positions=positions,
        )

    lo, up = base_instances[0].lower, base_instances[0].upper
    iv = interval if interval is not None else default_interval(policy, lo, up, width=alpha)
    outcomes: list[ProbeOutcome] = []
    for inst in base_instances:
        pos = list(positions) if positions is not None else probe_positions(inst)
        for x in probe_densities:
            for p in pos:
                outcomes.append(_run_probe(policy, inst, float(x), int(p), iv))

    verdict, witnesses, groups = _deterministic_verdict(outcomes)
    return AuditReport(
        policy=policy,
        interval=iv,
        width=alpha,
        verdict=verdict,
        witnesses=tuple(witnesses),
        boundary_items=sum(1 for o in outcomes if o.boundary),
        probes_total=len(outcomes),
        probes_compared=sum(1 for o in outcomes if o.in_interval and not o.boundary),
        groups=groups,
        scope_note=(
            f"checked {len(base_instances)} instance(s) x {len(probe_densities)} "
            "probe density(ies); the fairness property quantifies over all instances, "
            "an empirical audit can only refute it or fail to"
        ),
    )


def _binomial_ci(k: int, n: int, level: float) -> tuple[float, float]:
    """Clopper-Pearson interval."""
    from scipy.stats import beta as beta_dist

    a = (1.0 - level) / 2.0
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1.0 - a, k + 1, n - k))
    return lo, hi


def audit_randomized_ctif(
    policy: PolicySpec,
    base_instances: Sequence[Instance],
    probe_densities: Sequence[float],
    trials: int = 10_000,
    seed: int = 0,
    interval: tuple[float, float] | None = None,
    positions: Sequence[int] | None = None,
    ci_level: float = 0.99,
) -> AuditReport:
    """Frequency audit of the one-shot randomized policy.

    Estimates the probe acceptance frequency per arrival position across
    fresh threshold draws, conditioning on the probe landing in the
    interval. Passes iff, for every (instance, density), each position's
    Clopper-Pearson interval (Bonferroni-adjusted to a joint ``ci_level``)
    contains the pooled acceptance frequency.
    """
    if policy.kind != "zcl_randomized":
        raise ParameterError("audit_randomized_ctif only applies to the randomized policy")
    if trials < 1000:
        raise ParameterError(f"need at least 1000 trials for the frequency audit, got {trials}")
    if not base_instances:
        raise ValidationError("audit needs at least one base instance")

    lo, up = base_instances[0].lower, base_instances[0].upper
    iv = interval if interval is not None else default_interval(policy, lo, up)
    a, b = iv
    trial_seeds = derive_seeds(seed, trials)

    # counts[(fingerprint, density)][position] = [in_interval, accepted]
    counts: dict[tuple[str, float], dict[int, list[int]]] = {}
    boundary = 0
    total = 0
    names: dict[str, str] = {}
    for inst in base_instances:
        names[inst.fingerprint] = inst.name
        pos = list(positions) if positions is not None else probe_positions(inst, count=7)
        w = 1.0 / inst.granularity
        for x in probe_densities:
            key = (inst.fingerprint, float(x))
            per_pos = counts.setdefault(key, {p: [0, 0] for p in pos})
            prepared = {p: probed_instance(inst, float(x), int(p)) for p in pos}
            for s in trial_seeds:
                seeded = replace(policy, seed=s)
                for p in pos:
                    trace = run(seeded, prepared[p])
                    decision = trace.decisions[p]
                    z = decision.utilization_at_arrival
                    landing = z + w
                    total += 1
                    if not (a - _EDGE_TOL) <= landing <= (b + _EDGE_TOL):
                        continue
                    if z < a - _EDGE_TOL:
                        boundary += 1
                        continue
                    per_pos[p][0] += 1
                    per_pos[p][1] += int(decision.accepted)

    groups: list[dict[str, Any]] = []
    any_data = False
    failed: list[tuple[str, float, int, int]] = []
    for (fp, x), per_pos in sorted(counts.items()):
        live = {p: c for p, c in per_pos.items() if c[0] > 0}
        if not live:
            continue
        any_data = True
        pooled_n = sum(c[0] for c in live.values())
        pooled_k = sum(c[1] for c in live.values())
        pooled = pooled_k / pooled_n
        adj_level = 1.0 - (1.0 - ci_level) / max(len(live), 1)
        rates = {}
        ok = True
        for p, (n_in, k_acc) in sorted(live.items()):
            ci = _binomial_ci(k_acc, n_in, adj_level)
            rates[p] = {"n": n_in, "rate": k_acc / n_in, "ci": ci}
            if not ci[0] - _EDGE_TOL <= pooled <= ci[1] + _EDGE_TOL:
                ok = False
                failed.append((fp, x, p, n_in))
        groups.append(
            {
                "fingerprint": fp,
                "instance": names.get(fp, ""),
                "density": x,
                "pooled_rate": pooled,
                "positions": {str(p): r for p, r in rates.items()},
                "consistent": ok,
            }
        )

    if not any_data:
        verdict = "inconclusive"
    else:
        verdict = "fail" if failed else "pass"
    return AuditReport(
        policy=policy,
        interval=iv,
        width=b - a,
        verdict=verdict,
        witnesses=(),
        boundary_items=boundary,
        probes_total=total,
        probes_compared=sum(c[0] for per in counts.values() for c in per.values()),
        groups=groups,
        scope_note=(
            f"frequency audit across {trials} threshold draws at joint CI level {ci_level}; "
            "positions compared via Bonferroni-adjusted Clopper-Pearson intervals"
        ),
    )


def replay_witness(
    policy: PolicySpec,
    base_instances: Sequence[Instance],
    witness: Witness,
    interval: tuple[float, float],
) -> tuple[ProbeOutcome, ProbeOutcome]:
    """Re-run both probes of a witness; the differing decisions must reproduce."""
    by_fp = {inst.fingerprint: inst for inst in base_instances}
    inst = by_fp.get(witness.fingerprint)
    if inst is None:
        raise ValidationError(f"no base instance with fingerprint {witness.fingerprint}")
    out_a = _run_probe(policy, inst, witness.density, witness.position_a, interval)
    out_b = _run_probe(policy, inst, witness.density, witness.position_b, interval)
    return out_a, out_b


# ---------------------------------------------------------------------------
# Illustrations of why unconditional time-independence is unattainable


@dataclass
class TifDemonstration:
    """Position-dependent treatment of identical-density items on a gadget."""

    gadget: str
    policy: PolicySpec
    segments: list[dict[str, Any]]
    summary: str

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "gadget": self.gadget,
            "policy": self.policy.to_json_dict(),
            "segments": self.segments,
            "summary": self.summary,
        }


def demonstrate_tif_impossibility(
    gadget_name: str,
    gadget_params: dict[str, Any] | None = None,
    policy: PolicySpec | None = None,
) -> TifDemonstration:
    """Run a policy on an adversarial gadget and report per-segment acceptance.

    ``duplicated_suffix`` shows identical items accepted early and refused in
    the appended copy; ``small_then_large`` shows a large item crowded out by
    earlier small ones of the same density. Illustrations, not proofs.
    """
    if gadget_name not in ("duplicated_suffix", "small_then_large"):
        raise ValidationError(
            f"demonstrations cover 'duplicated_suffix' and 'small_then_large', got {gadget_name!r}"
        )
    if not gadget_params:
        raise ValidationError(f"gadget {gadget_name!r} needs explicit parameters")
    inst = gen_gadget(gadget_name, gadget_params)
    if gadget_name == "duplicated_suffix":
        half = len(inst) // 2
        bounds = [(0, half, "original"), (half, len(inst), "duplicated suffix")]
        pol = policy if policy is not None else PolicySpec.zcl()
    else:
        n_small = len(inst) - 1
        bounds = [(0, n_small, "small items"), (n_small, len(inst), "large item")]
        pol = policy if policy is not None else PolicySpec.constant(inst.lower)

    trace = run(pol, inst)
    accepted_idx = trace.accepted_indices()
    if gadget_name == "duplicated_suffix" and accepted_idx:
        # the accepted prefix is the clearest "early window" to contrast with
        bounds.insert(0, (0, max(accepted_idx), "early window"))
    segments: list[dict[str, Any]] = []
    lines = [f"{pol.label()} on {gadget_name} ({len(inst)} items):"]
    for start, stop, label in bounds:
        decisions = trace.decisions[start:stop]
        by_density: dict[float, list[bool]] = {}
        for d in decisions:
            dens = float(inst.densities[d.index - 1])
            by_density.setdefault(dens, []).append(d.accepted)
        for dens, accs in sorted(by_density.items()):
            rate = sum(accs) / len(accs)
            segments.append(
                {
                    "segment": label,
                    "first_index": start + 1,
                    "last_index": stop,
                    "density": dens,
                    "arrivals": len(accs),
                    "accepted": sum(accs),
                    "accept_rate": rate,
                }
            )
            lines.append(
                f"  {label} (items {start + 1}-{stop}), density {dens:.6g}: "
                f"{sum(accs)}/{len(accs)} accepted ({rate:.0%})"
            )
    rates = [s["accept_rate"] for s in segments]
    if len(rates) >= 2 and max(rates) > min(rates):
        lines.append(
            "  identical-density items received different treatment depending on position"
        )
    return TifDemonstration(
        gadget=gadget_name, policy=pol, segments=segments, summary="\n".join(lines)
    )
