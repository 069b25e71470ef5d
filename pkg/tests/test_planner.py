import numpy as np
import pytest

from fdw.density import DensityRecord
from fdw.fixtures import load_tables
from fdw.pipelines import enumerate_pipelines, parse_pipeline_name, pipeline_name
from fdw.planner import (
    EnergyModel,
    PlanError,
    SweepPlan,
    car_km,
    co2_grams,
    coarse_to_fine,
    default_power_watts,
    estimate_energy_wh,
    read_plan,
    recommendation,
    refine_plan,
    savings_estimate,
    write_plan,
)


class TestEnergy:
    def test_sgd_svm_row(self):
        wh = estimate_energy_wh(176.26, EnergyModel(power_watts=163, folds=10))
        assert wh == pytest.approx(79.81, abs=0.01)

    def test_cnn_row(self):
        wh = estimate_energy_wh(62361.45, EnergyModel(power_watts=250, folds=10))
        assert wh == pytest.approx(43306.56, abs=0.01)

    def test_unit_conversion(self):
        assert estimate_energy_wh(3600, EnergyModel(power_watts=1000, folds=1)) == 1000.0

    def test_reproduces_all_published_rows(self):
        for row in load_tables().table4:
            model = EnergyModel(power_watts=row.power_watts, folds=10)
            assert estimate_energy_wh(row.runtime_s, model) == pytest.approx(
                row.power_wh, abs=0.01
            )

    def test_linearity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            runtime = float(rng.uniform(0, 1e5))
            power = float(rng.uniform(1, 500))
            k = float(rng.uniform(0.1, 10))
            m1 = EnergyModel(power_watts=power)
            mk = EnergyModel(power_watts=power * k)
            assert estimate_energy_wh(runtime * k, m1) == pytest.approx(
                k * estimate_energy_wh(runtime, m1), rel=1e-12
            )
            assert estimate_energy_wh(runtime, mk) == pytest.approx(
                k * estimate_energy_wh(runtime, m1), rel=1e-12
            )

    def test_negative_runtime_rejected(self):
        with pytest.raises(ValueError):
            estimate_energy_wh(-1.0, EnergyModel())

    def test_neural_power_default(self):
        assert default_power_watts("mlp") == 250.0
        assert default_power_watts("cnn1") == 250.0
        assert default_power_watts("svm_sgd") == 163.0

    def test_model_validation(self):
        with pytest.raises(ValueError):
            EnergyModel(power_watts=0)
        with pytest.raises(ValueError):
            EnergyModel(folds=0)


class TestCo2:
    def test_large_model_savings_conversion(self):
        model = EnergyModel()
        grams = co2_grams(21.0, model)
        assert grams == 5775.0  # ~5.8 kg
        assert car_km(grams, model) == pytest.approx(47.3, abs=0.05)

    def test_zero_chain(self):
        model = EnergyModel()
        assert co2_grams(0.0, model) == 0.0
        assert car_km(0.0, model) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            co2_grams(-1.0, EnergyModel())
        with pytest.raises(ValueError):
            car_km(-1.0, EnergyModel())


class TestSavings:
    def test_sgd_svm_pruning(self):
        saved = savings_estimate(79.81, kept=38, total=68)
        assert saved == pytest.approx(35.2, abs=0.05)

    def test_nothing_skipped(self):
        assert savings_estimate(123.0, kept=68, total=68) == 0.0

    def test_cnn_uniform_model_vs_published(self):
        # uniform cost model lands ~19.1 kWh where ~21 kWh was reported;
        # within the 10% the uniform assumption is expected to cost
        saved = savings_estimate(43306.56, kept=38, total=68)
        assert saved == pytest.approx(19105.8, abs=1.0)
        assert abs(saved - 21000) / 21000 < 0.10

    def test_validation(self):
        with pytest.raises(ValueError):
            savings_estimate(1.0, kept=5, total=0)
        with pytest.raises(ValueError):
            savings_estimate(1.0, kept=9, total=8)


def fd_records(fds):
    specs = enumerate_pipelines()
    return [
        DensityRecord(pipeline=specs[i], unique_count=1, total_count=10, fd=fd)
        for i, fd in enumerate(fds)
    ]


class TestCoarseToFine:
    def test_probe_count_for_68_stride_4(self):
        records = fd_records([i / 100 for i in range(68)])
        plan = coarse_to_fine(records, stride=4, refine_radius=0.02, budget=68)
        assert len(plan.rounds[0]) == 18  # 17 strided + forced last
        names = [r.name for r in sorted(records, key=lambda r: (r.fd, r.name))]
        assert plan.rounds[0][0] == names[0]
        assert plan.rounds[0][-1] == names[-1]

    def test_stride_one_is_exhaustive(self):
        records = fd_records([i / 100 for i in range(10)])
        plan = coarse_to_fine(records, stride=1, refine_radius=0.05, budget=10)
        assert len(plan.rounds[0]) == 10
        assert plan.complete
        assert refine_plan(plan, {n: 0.5 for n in plan.rounds[0]}) == []

    def test_budget_too_small_rejected(self):
        records = fd_records([i / 100 for i in range(10)])
        with pytest.raises(PlanError, match="budget"):
            coarse_to_fine(records, stride=2, refine_radius=0.1, budget=3)

    def test_refinement_targets_best_neighborhood(self):
        records = fd_records([i / 100 for i in range(20)])
        plan = coarse_to_fine(records, stride=5, refine_radius=0.021, budget=20)
        round1 = plan.rounds[0]
        observed = {name: 0.5 for name in round1}
        best = round1[2]  # fd 0.10
        observed[best] = 0.9
        new_round = refine_plan(plan, observed)
        fd_by = plan.fd_by_name
        assert new_round
        assert all(abs(fd_by[n] - 0.10) <= 0.021 for n in new_round)
        assert not set(new_round) & set(round1)

    def test_refine_radius_zero_only_exact_matches(self):
        fds = [0.1, 0.1, 0.1, 0.2, 0.3]
        records = fd_records(fds)
        plan = coarse_to_fine(records, stride=2, refine_radius=0.0, budget=5)
        observed = {plan.rounds[0][0]: 0.9}
        for name in plan.rounds[0][1:]:
            observed[name] = 0.1
        new_round = refine_plan(plan, observed)
        assert all(plan.fd_by_name[n] == plan.fd_by_name[plan.rounds[0][0]] for n in new_round)

    def test_never_schedules_twice_and_respects_budget(self):
        records = fd_records([i / 68 for i in range(68)])
        plan = coarse_to_fine(records, stride=6, refine_radius=0.5, budget=20)
        observed = {n: 0.5 for n in plan.rounds[0]}
        while not plan.complete:
            new_round = refine_plan(plan, observed)
            for n in new_round:
                observed[n] = 0.4
        scheduled = plan.scheduled
        assert len(scheduled) == len(set(scheduled))
        assert len(scheduled) <= 20

    def test_plan_json_roundtrip(self, tmp_path):
        records = fd_records([i / 10 for i in range(8)])
        plan = coarse_to_fine(records, stride=3, refine_radius=0.1, budget=8)
        path = tmp_path / "plan.json"
        write_plan(plan, path)
        again = read_plan(path)
        assert again == plan

    def test_refine_needs_observations(self):
        records = fd_records([i / 10 for i in range(8)])
        plan = coarse_to_fine(records, stride=3, refine_radius=0.1, budget=8)
        with pytest.raises(PlanError, match="observed"):
            refine_plan(plan, {})


class TestRecommendation:
    def test_reference_band_with_fixture_densities(self):
        tables = load_tables()
        records = [
            DensityRecord(pipeline=parse_pipeline_name(r.pipeline),
                          unique_count=r.unique, total_count=r.total, fd=r.fd)
            for r in tables.table2
        ]
        rec = recommendation(records, 0.05, 0.15,
                             EnergyModel(power_watts=163, folds=10), runtime_s=176.26)
        assert rec["kept_count"] == 38
        assert rec["skipped_count"] == 30
        assert rec["estimated_savings"]["wh"] == pytest.approx(35.2, abs=0.05)
        assert rec["assumptions"]["uniform_cost_model"] is True

    def test_without_runtime_no_savings_block(self):
        records = fd_records([0.1, 0.2])
        rec = recommendation(records, 0.0, 0.15, EnergyModel())
        assert "estimated_savings" not in rec
        assert rec["kept"] and rec["skipped"]
