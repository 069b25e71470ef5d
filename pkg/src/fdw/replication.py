"""Reproduction checks that tie the shipped fixture tables together.

These checks re-derive every published number that can be re-derived without
the original corpus: density ratios, the productive-band count, the power
figures, and the FD-to-F1 correlations. They back both the
``replicate-paper`` CLI command and the acceptance test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .evaluation import pearson
from .fixtures import PaperTables, TABLE5_CLASSIFIERS, load_tables
from .planner import EnergyModel, car_km, co2_grams, estimate_energy_wh

FD_TOLERANCE = 5e-5            # published values carry 4 decimals
PRODUCTIVE_BAND = (0.05, 0.15)
EXPECTED_BAND_COUNT = 38
ENERGY_TOLERANCE_WH = 0.01
RHO_TOLERANCE = 0.05
COLUMN_MAX_TOLERANCE = 1e-3


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def check_fd_arithmetic(tables: PaperTables) -> Check:
    """unique/total must reproduce the published FD within 4-decimal rounding."""
    worst = 0.0
    worst_name = ""
    failures = []
    for row in tables.table2:
        diff = abs(row.unique / row.total - row.fd)
        if diff > worst:
            worst, worst_name = diff, row.pipeline
        if diff >= FD_TOLERANCE:
            failures.append(row.pipeline)
    return Check(
        name="fd-arithmetic",
        passed=not failures,
        detail=(
            f"all 68 ratios within {FD_TOLERANCE:g} of published FD "
            f"(worst {worst:.2e} at {worst_name})"
            if not failures
            else f"{len(failures)} rows off by >= {FD_TOLERANCE:g}: {failures[:5]}"
        ),
        data={"worst_abs_diff": worst, "worst_pipeline": worst_name, "failures": failures},
    )


def check_band_count(tables: PaperTables) -> Check:
    lo, hi = PRODUCTIVE_BAND
    kept = [r.pipeline for r in tables.table2 if lo <= r.fd <= hi]
    passed = len(kept) == EXPECTED_BAND_COUNT
    return Check(
        name="band-count",
        passed=passed,
        detail=f"band [{lo}, {hi}] keeps {len(kept)} of 68 (expected {EXPECTED_BAND_COUNT})",
        data={"kept": kept, "count": len(kept)},
    )


def check_energy_model(tables: PaperTables) -> Check:
    """Power x runtime x 10 folds / 3600 must reproduce every published Wh."""
    failures = []
    worst = 0.0
    for row in tables.table4:
        model = EnergyModel(power_watts=row.power_watts, folds=10)
        wh = estimate_energy_wh(row.runtime_s, model)
        diff = abs(wh - row.power_wh)
        worst = max(worst, diff)
        if diff > ENERGY_TOLERANCE_WH:
            failures.append((row.classifier, wh, row.power_wh))

    model = EnergyModel()
    grams = co2_grams(21.0, model)
    km = car_km(grams, model)
    co2_ok = abs(grams - 5775.0) < 1e-9 and abs(km - 47.3) < 0.05
    passed = not failures and co2_ok
    return Check(
        name="energy-model",
        passed=passed,
        detail=(
            f"12/12 Wh values within {ENERGY_TOLERANCE_WH} (worst {worst:.4f}); "
            f"21 kWh -> {grams / 1000:.3f} kg CO2e -> {km:.1f} car-km"
            if passed
            else f"failures: {failures or 'CO2 conversion'}"
        ),
        data={"worst_abs_diff_wh": worst, "co2_g_for_21kwh": grams, "car_km": km},
    )


def check_correlations(tables: PaperTables) -> Check:
    """rho(FD, F1) per classifier must match the published value within
    0.05 under at least one POSS-exclusion setting; record which."""
    fd = tables.fd_by_pipeline()
    rho_published = {r.classifier: r.rho for r in tables.table3}
    per_classifier = {}
    all_ok = True
    for clf in TABLE5_CLASSIFIERS:
        points_all = [(fd[name], cells[clf]) for name, cells in tables.table5.items()]
        points_ex = [
            (fd[name], cells[clf])
            for name, cells in tables.table5.items()
            if not name.startswith("POSS")
        ]
        rho_all = pearson([p[0] for p in points_all], [p[1] for p in points_all])
        rho_ex = pearson([p[0] for p in points_ex], [p[1] for p in points_ex])
        target = rho_published[clf]
        settings = []
        if abs(rho_all - target) <= RHO_TOLERANCE:
            settings.append("all-68")
        if abs(rho_ex - target) <= RHO_TOLERANCE:
            settings.append("poss-excluded")
        per_classifier[clf] = {
            "published": target,
            "rho_all_68": rho_all,
            "rho_poss_excluded": rho_ex,
            "matching_settings": settings,
        }
        if not settings:
            all_ok = False

    matched_by = {
        clf: info["matching_settings"][0] if info["matching_settings"] else None
        for clf, info in per_classifier.items()
    }
    n_excluded = sum(1 for s in matched_by.values() if s == "poss-excluded")
    return Check(
        name="rho-replication",
        passed=all_ok,
        detail=(
            f"12/12 classifiers within {RHO_TOLERANCE}; "
            f"{n_excluded} match under poss-excluded, "
            f"{12 - n_excluded} under all-68"
            if all_ok
            else "some classifier matches neither exclusion setting"
        ),
        data={"per_classifier": per_classifier, "matched_by": matched_by},
    )


def check_column_maxima(tables: PaperTables) -> Check:
    """Each classifier's best published F1 must equal its table5 column max."""
    failures = []
    best_published = {r.classifier: r.best_f1 for r in tables.table3}
    for clf in TABLE5_CLASSIFIERS:
        colmax = max(cells[clf] for cells in tables.table5.values())
        if abs(colmax - best_published[clf]) > COLUMN_MAX_TOLERANCE:
            failures.append((clf, colmax, best_published[clf]))
    return Check(
        name="column-maxima",
        passed=not failures,
        detail=(
            f"12/12 column maxima within {COLUMN_MAX_TOLERANCE} of published best F1"
            if not failures
            else f"failures: {failures}"
        ),
        data={"failures": failures},
    )


def run_all_checks(tables: PaperTables | None = None) -> list[Check]:
    if tables is None:
        tables = load_tables()
    return [
        check_fd_arithmetic(tables),
        check_band_count(tables),
        check_energy_model(tables),
        check_correlations(tables),
        check_column_maxima(tables),
    ]
