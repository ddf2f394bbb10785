import csv
import json
import math

import numpy as np
import pytest

from knapfair import (
    BoundContext,
    ExperimentSpec,
    GeneratorSpec,
    Instance,
    PolicySpec,
    bound_laect_robustness,
    empirical_cr,
    pareto_curves,
    ramp_family,
    robustness_sweep,
    run_experiment,
)
from knapfair.bench import BoundViolation, family_worst_cr
from knapfair.oracles import opt_dp

from .helpers import uniform_instance

L, U = 1.0, 5.0
ALPHA0 = BoundContext(L, U).alpha_min


class TestEmpiricalCR:
    def test_exact_one_when_policy_matches_optimum(self):
        inst = uniform_instance(2.0, n=150, m=100, lower=L, upper=U)
        assert empirical_cr(PolicySpec.constant(1.0), inst) == 1.0

    def test_empty_instance_defined_as_one(self):
        inst = Instance(items=(), lower=L, upper=U, granularity=10)
        assert empirical_cr(PolicySpec.zcl(), inst) == 1.0

    def test_zero_algorithm_value_is_infinity(self):
        inst = uniform_instance(1.0, n=50, m=100, lower=L, upper=U)
        assert math.isinf(empirical_cr(PolicySpec.constant(5.0), inst))

    def test_at_least_one(self):
        rng = np.random.default_rng(3)
        from .helpers import random_instance

        for _ in range(20):
            inst = random_instance(rng, n=60)
            for policy in (PolicySpec.zcl(), PolicySpec.ect(0.5)):
                assert empirical_cr(policy, inst) >= 1.0 - 1e-12


def small_spec(**over):
    kw = dict(
        policies=(
            PolicySpec.zcl(),
            PolicySpec.ect(0.5),
            PolicySpec.laect(1.0),
            PolicySpec.laect(0.5),
            PolicySpec.zcl_randomized(0),
            PolicySpec.constant(500.0),
        ),
        generator=GeneratorSpec("trace_synth", {"n": 120, "mu": 10.0}),
        n_instances=25,
        seed=42,
        prediction_sigma=0.0,
    )
    kw.update(over)
    return ExperimentSpec(**kw)


@pytest.fixture(scope="module")
def report():
    return run_experiment(small_spec())


class TestRunExperiment:
    def test_deterministic_report_bytes(self, report):
        again = run_experiment(small_spec())
        assert again.to_json() == report.to_json()

    def test_policy_order_does_not_change_content(self, report, tmp_path):
        spec = small_spec()
        flipped = ExperimentSpec(
            policies=tuple(reversed(spec.policies)),
            generator=spec.generator,
            n_instances=spec.n_instances,
            seed=spec.seed,
            prediction_sigma=spec.prediction_sigma,
        )
        other = run_experiment(flipped)
        for r in report.results:
            assert other.result_for(r.label).crs == r.crs
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        report.write_cdf_csv(p1)
        other.write_cdf_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_cdf_points_monotone_normalized(self, report):
        for r in report.results:
            pts = r.cdf_points()
            assert pts, r.label
            crs = [c for c, _ in pts]
            fracs = [f for _, f in pts]
            assert crs == sorted(crs)
            assert fracs == sorted(fracs)
            assert fracs[-1] == pytest.approx(1.0)
            assert all(c >= 1.0 - 1e-12 for c in crs if math.isfinite(c))

    def test_infinity_sentinel_in_tail(self, report):
        dead = report.result_for("Constant[500]")
        assert dead.n_inf == len(dead.crs)  # never matches a synthetic density
        assert dead.cdf_points() == [(math.inf, 1.0)]

    def test_csv_schema_and_inf_serialization(self, report, tmp_path):
        path = report.write_cdf_csv(tmp_path / "cdf.csv")
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["policy", "cr", "cdf"]
        infs = [r for r in rows[1:] if r[1] == "inf"]
        assert infs and all(float(r[2]) == 1.0 for r in infs)
        labels = {r[0] for r in rows[1:]}
        assert "ZCL" in labels and "LA-ECT[1]" in labels

    def test_consistency_rows_respect_bound(self, report):
        rows = [c for c in report.consistency if c.gamma > 0]
        assert rows
        for c in rows:
            assert c.rho >= 1.0 - 1e-12
            assert c.cr <= c.bound * (1.0 + 1e-9)

    def test_full_trust_with_exact_prediction_is_sharp(self, report):
        full = report.result_for("LA-ECT[1]")
        assert full.mean() <= 1.2

    def test_json_round_trips_spec(self):
        spec = small_spec()
        assert ExperimentSpec.from_json_dict(json.loads(json.dumps(spec.to_json_dict()))) == spec


@pytest.fixture(scope="module")
def small_family():
    fam = ramp_family(L, U, m=200, n_points=10)
    return fam, [opt_dp(inst) for inst in fam]


class TestParetoCurves:
    def test_columns_and_envelope(self, small_family):
        fam, opts = small_family
        table = pareto_curves(
            L, U, [ALPHA0, 0.5, 0.8], family=fam, opts=opts, check=True, slack=1.10
        )
        assert [r.alpha for r in table.rows] == [ALPHA0, 0.5, 0.8]
        for r in table.rows:
            assert r.lower_bound <= r.baseline_bound + 1e-9
            assert r.ect_empirical == pytest.approx(r.lower_bound, rel=0.10)

    def test_lower_bound_column_monotone(self, small_family):
        fam, opts = small_family
        grid = list(np.linspace(ALPHA0, 1.0, 12))
        table = pareto_curves(L, U, grid, family=fam, opts=opts, check=False)
        lbs = [r.lower_bound for r in table.rows]
        assert all(a <= b + 1e-9 for a, b in zip(lbs, lbs[1:]))
        assert lbs[0] == pytest.approx(math.log(5.0) + 1.0, abs=1e-9)
        assert lbs[-1] == pytest.approx(5.0, abs=1e-9)

    def test_csv_schema(self, small_family, tmp_path):
        fam, opts = small_family
        table = pareto_curves(L, U, [0.5], family=fam, opts=opts, check=False)
        path = table.write_csv(tmp_path / "curves.csv")
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["alpha", "lower_bound", "baseline_bound", "ect_empirical"]
        assert len(rows) == 2

    def test_violation_detected(self, small_family):
        fam, opts = small_family
        with pytest.raises(BoundViolation):
            pareto_curves(L, U, [0.5], family=fam, opts=opts, check=True, slack=1.0001)


class TestRobustnessSweep:
    def test_bounds_hold_and_sentinel_reported(self, small_family):
        fam, opts = small_family
        table = robustness_sweep(
            [0.0, 0.5, 1.0], family=fam, opts=opts, seed=3, check=True, slack=1.10
        )
        by_gamma = {}
        for r in table.rows:
            by_gamma.setdefault(r.gamma, []).append(r)
        for g, rows in by_gamma.items():
            if g < 1.0:
                bound = bound_laect_robustness(BoundContext(L, U, gamma=g))
                assert all(r.worst_cr <= bound * 1.10 for r in rows)
                assert all(r.bound == pytest.approx(bound) for r in rows)
        assert any(math.isinf(r.worst_cr) for r in by_gamma[1.0])

    def test_gamma_zero_matches_plain_threshold_bound(self, small_family):
        fam, opts = small_family
        worst = family_worst_cr(PolicySpec.zcl(), fam, opts)
        assert worst <= (math.log(5.0) + 1.0) * 1.05

    def test_csv_schema(self, small_family, tmp_path):
        fam, opts = small_family
        table = robustness_sweep([0.5], family=fam, opts=opts, check=False)
        path = table.write_csv(tmp_path / "sweep.csv")
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["gamma", "d_hat_choice", "d_hat", "worst_cr", "bound"]


class TestNoisyPredictionsStayComparable:
    def test_mid_trust_worst_cr_on_par_with_jump_threshold(self):
        # noisy predictions at several error levels: the gamma=0.33 policy's
        # worst CR stays within 25% of the jump threshold's
        gen = GeneratorSpec("trace_synth", {"n": 150, "mu": 10.0})
        worst_la, worst_ect = 0.0, 0.0
        for sigma in (0.0, 0.5, 1.0):
            spec = ExperimentSpec(
                policies=(PolicySpec.laect(0.33), PolicySpec.ect(0.33)),
                generator=gen,
                n_instances=30,
                seed=11,
                prediction_sigma=sigma,
            )
            rep = run_experiment(spec)
            worst_la = max(worst_la, rep.result_for("LA-ECT[0.33]").max())
            worst_ect = max(worst_ect, rep.result_for("ECT[0.33]").max())
        assert worst_la <= 1.25 * worst_ect
