import math

import pytest

from knapfair import (
    BoundContext,
    PolicySpec,
    ValidationError,
    audit_ctif,
    audit_randomized_ctif,
    default_interval,
    demonstrate_tif_impossibility,
    gen_x_nondecreasing,
    run,
    synth_trace,
)
from knapfair.audit import probe_positions, probed_instance, replay_witness

L, U = 1.0, 5.0
ALPHA0 = BoundContext(L, U).alpha_min


def ramp_to_ceiling(m=100, n_batches=10):
    return gen_x_nondecreasing(U, m=m, n_batches=n_batches, lower=L, upper=U)


def floor_stream(m=100):
    return gen_x_nondecreasing(L, m=m, n_batches=10, lower=L, upper=U)


class TestDefaultIntervals:
    def test_shapes(self):
        assert default_interval(PolicySpec.constant(2.0), L, U) == (0.0, 1.0)
        a, b = default_interval(PolicySpec.zcl(), L, U)
        assert a == 0.0 and b == pytest.approx(ALPHA0)
        assert default_interval(PolicySpec.ect(0.5), L, U) == (0.0, 0.5)
        pol = PolicySpec.laect(0.4, d_hat=2.0)
        a, b = default_interval(pol, L, U)
        ctx = BoundContext(L, U, gamma=0.4, d_hat=2.0)
        assert a == pytest.approx(ctx.kappa) and b == pytest.approx(ctx.kappa + 0.4)


class TestDeterministicAudits:
    def test_constant_policy_passes_full_width(self):
        report = audit_ctif(
            PolicySpec.constant(2.0),
            alpha=1.0,
            base_instances=[ramp_to_ceiling()],
            probe_densities=[1.0, 2.0, 3.5, 5.0],
        )
        assert report.verdict == "pass"
        assert report.witnesses == ()
        assert report.probes_compared > 0

    def test_zcl_fails_full_width_with_replayable_witness(self):
        base = ramp_to_ceiling()
        report = audit_ctif(
            PolicySpec.zcl(),
            alpha=1.0,
            base_instances=[base],
            probe_densities=[1.0, 1.5],
        )
        assert report.verdict == "fail"
        assert report.witnesses
        w = report.witnesses[0]
        out_a, out_b = replay_witness(PolicySpec.zcl(), [base], w, report.interval)
        assert out_a.accepted == w.accepted_a
        assert out_b.accepted == w.accepted_b
        assert out_a.accepted != out_b.accepted
        assert out_a.density == out_b.density

    def test_zcl_passes_on_its_flat_region(self):
        report = audit_ctif(
            PolicySpec.zcl(),
            alpha=ALPHA0,
            base_instances=[ramp_to_ceiling()],
            probe_densities=[1.0, 2.0, 5.0],
        )
        assert report.verdict == "pass"

    @pytest.mark.parametrize("alpha", [0.5, 0.66])
    def test_ect_passes_at_its_fairness_level(self, alpha):
        report = audit_ctif(
            PolicySpec.ect(alpha),
            alpha=alpha,
            base_instances=[floor_stream(), ramp_to_ceiling()],
            probe_densities=[1.0, 1.2, 3.0, 5.0],
        )
        assert report.verdict == "pass"

    @pytest.mark.parametrize("alpha", [0.5, 0.66])
    def test_ect_fails_just_above_its_fairness_level(self, alpha):
        # probe density sits in the jump gap (L, alpha*beta*L): accepted in
        # the greedy region, rejected right after the jump
        ctx = BoundContext(L, U, alpha=alpha)
        gap_density = (L + alpha * ctx.beta * L) / 2.0
        report = audit_ctif(
            PolicySpec.ect(alpha),
            alpha=alpha + 0.1,
            base_instances=[floor_stream()],
            probe_densities=[gap_density],
            positions=list(range(0, 101, 5)),
        )
        assert report.verdict == "fail"
        assert report.witnesses

    def test_laect_passes_on_flat_segment(self):
        gamma, d_hat = 0.4, 2.0
        policy = PolicySpec.laect(gamma, d_hat=d_hat)
        base = ramp_to_ceiling()
        ctx = BoundContext(L, U, gamma=gamma, d_hat=d_hat)
        # pick positions whose arrival utilization lands inside the flat region
        probe_trace = run(policy, base)
        inside, outside = [], [0]
        for d in probe_trace.decisions:
            z = d.utilization_at_arrival
            if ctx.kappa + 0.02 <= z <= ctx.kappa + gamma - 0.02 and len(inside) < 6:
                inside.append(d.index - 1)
            if z > ctx.kappa + gamma and len(outside) < 3:
                outside.append(d.index - 1)
        assert len(inside) >= 3
        report = audit_ctif(
            policy,
            alpha=gamma,
            base_instances=[base],
            probe_densities=[1.0, 1.9, 2.0, 3.0, 5.0],
            positions=inside + outside,
        )
        assert report.verdict == "pass"
        assert report.probes_compared > 0

    def test_boundary_probes_are_counted_not_compared(self):
        gamma, d_hat = 0.4, 2.0
        policy = PolicySpec.laect(gamma, d_hat=d_hat)
        base = ramp_to_ceiling()
        ctx = BoundContext(L, U, gamma=gamma, d_hat=d_hat)
        # position arriving just below kappa, landing just above it
        probe_trace = run(policy, base)
        boundary_pos = [
            d.index - 1
            for d in probe_trace.decisions
            if ctx.kappa - 1.0 / base.granularity < d.utilization_at_arrival < ctx.kappa
        ]
        if not boundary_pos:
            pytest.skip("no boundary-aligned position on this grid")
        report = audit_ctif(
            policy,
            alpha=gamma,
            base_instances=[base],
            probe_densities=[1.5],
            positions=boundary_pos,
        )
        assert report.boundary_items >= 1

    def test_no_probe_in_interval_is_inconclusive(self):
        report = audit_ctif(
            PolicySpec.zcl(),
            alpha=0.05,
            base_instances=[floor_stream()],
            probe_densities=[2.0],
            interval=(0.9, 0.95),
        )
        assert report.verdict == "inconclusive"

    def test_verdict_deterministic(self):
        base = ramp_to_ceiling()
        kwargs = dict(
            alpha=1.0, base_instances=[base], probe_densities=[1.0, 2.0], seed=5
        )
        a = audit_ctif(PolicySpec.zcl(), **kwargs)
        b = audit_ctif(PolicySpec.zcl(), **kwargs)
        assert a.to_json_dict() == b.to_json_dict()

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            audit_ctif(PolicySpec.zcl(), 0.5, [], [1.0])
        with pytest.raises(ValidationError):
            audit_ctif(PolicySpec.zcl(), 0.5, [floor_stream()], [])


@pytest.fixture(scope="module")
def randomized_report():
    base = synth_trace(14, 10.0, seed=2)  # slack capacity: conditioning stays flat
    return audit_randomized_ctif(
        PolicySpec.zcl_randomized(0),
        base_instances=[base],
        probe_densities=[1.0, 20.0, 500.0],
        trials=2000,
        seed=7,
        positions=[0, 5, 10, 14],
    )


class TestRandomizedAudit:
    def test_passes_joint_ci(self, randomized_report):
        assert randomized_report.verdict == "pass"

    def test_ceiling_density_always_accepted(self, randomized_report):
        grp = [g for g in randomized_report.groups if g["density"] == 500.0]
        assert grp and grp[0]["pooled_rate"] == pytest.approx(1.0)

    def test_floor_density_rate_matches_distribution_mass(self, randomized_report):
        # Pr[threshold <= L] = 1/(ln(U/L)+1)
        c = 1.0 / (math.log(500.0) + 1.0)
        grp = [g for g in randomized_report.groups if g["density"] == 1.0]
        n = sum(r["n"] for r in grp[0]["positions"].values())
        se = math.sqrt(c * (1 - c) / n)
        assert grp[0]["pooled_rate"] == pytest.approx(c, abs=4 * se)

    def test_dispatch_from_audit_ctif(self):
        base = synth_trace(10, 10.0, seed=3)
        report = audit_ctif(
            PolicySpec.zcl_randomized(0),
            alpha=1.0,
            base_instances=[base],
            probe_densities=[10.0],
            trials=1000,
            seed=1,
            positions=[0, 5],
        )
        assert report.scope_note.startswith("frequency audit")
        assert report.verdict == "pass"

    def test_trials_floor_enforced(self):
        with pytest.raises(Exception, match="1000"):
            audit_randomized_ctif(
                PolicySpec.zcl_randomized(0),
                [synth_trace(5, 10.0, seed=0)],
                [1.0],
                trials=10,
            )


class TestTifDemonstrations:
    def test_duplicated_suffix_shows_position_dependence(self):
        base = floor_stream()
        demo = demonstrate_tif_impossibility(
            "duplicated_suffix", {"base": base}, policy=PolicySpec.zcl()
        )
        by_label = {s["segment"]: s for s in demo.segments}
        assert by_label["early window"]["accept_rate"] == 1.0
        assert by_label["duplicated suffix"]["accept_rate"] == 0.0
        assert "different treatment" in demo.summary

    def test_small_then_large_capacity_crowding(self):
        demo = demonstrate_tif_impossibility("small_then_large", {"w_delta": 0.001})
        by_label = {s["segment"]: s for s in demo.segments}
        assert by_label["small items"]["accept_rate"] == 1.0
        assert by_label["large item"]["accept_rate"] == 0.0

    def test_empty_params_error(self):
        with pytest.raises(ValidationError):
            demonstrate_tif_impossibility("duplicated_suffix", {})
        with pytest.raises(ValidationError):
            demonstrate_tif_impossibility("duplicated_suffix", None)

    def test_unknown_gadget_error(self):
        with pytest.raises(ValidationError):
            demonstrate_tif_impossibility("two_density", {"L": 1.0})


class TestProbeMechanics:
    def test_probe_positions_cover_front(self):
        inst = floor_stream()
        pos = probe_positions(inst)
        assert pos[0] == 0 and pos[-1] == len(inst)

    def test_probed_instance_inserts_not_substitutes(self):
        inst = floor_stream()
        probed = probed_instance(inst, 2.0, 5)
        assert len(probed) == len(inst) + 1
        assert probed.items[5].weight == 1.0 / inst.granularity
        assert probed.items[:5] == inst.items[:5]
        assert probed.items[6:] == inst.items[5:]
