"""FD-guided experiment planning and the energy/CO2 accounting behind it.

The energy model multiplies declared device power by measured runtime and
the fold count; published per-classifier runtimes reproduce their published
watt-hour figures exactly under this rule. Savings from pruning use a
uniform per-variant cost model, labeled as an estimate wherever reported.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .density import DensityRecord, band_filter

# Device wattages for the two training regimes in the reference tables:
# CPU-bound classical models vs GPU-bound neural ones.
NON_NEURAL_POWER_W = 163.0
NEURAL_POWER_W = 250.0
NEURAL_KINDS = frozenset({"mlp", "cnn1", "cnn2"})

DEFAULT_GRID_INTENSITY = 275.0  # g CO2e per kWh (EU grid average, 2019)
DEFAULT_CAR_G_PER_KM = 122.0    # g CO2e per km, average new EU passenger car


class PlanError(ValueError):
    """A sweep plan argument is inconsistent (budget, stride, rounds)."""


@dataclass(frozen=True)
class EnergyModel:
    power_watts: float = NON_NEURAL_POWER_W
    folds: int = 10
    grid_intensity_g_per_kwh: float = DEFAULT_GRID_INTENSITY
    car_g_per_km: float = DEFAULT_CAR_G_PER_KM

    def __post_init__(self) -> None:
        for name in ("power_watts", "folds", "grid_intensity_g_per_kwh", "car_g_per_km"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def default_power_watts(classifier_kind: str) -> float:
    return NEURAL_POWER_W if classifier_kind in NEURAL_KINDS else NON_NEURAL_POWER_W


def estimate_energy_wh(runtime_s: float, model: EnergyModel) -> float:
    """Energy of a full cross-validated training run, in watt-hours.

    The runtime argument is one CV repetition; the model's fold count scales
    it to the full procedure: ``W * s * folds / 3600``.
    """
    if runtime_s < 0:
        raise ValueError(f"runtime must be >= 0, got {runtime_s}")
    return model.power_watts * runtime_s * model.folds / 3600.0


def co2_grams(energy_kwh: float, model: EnergyModel) -> float:
    if energy_kwh < 0:
        raise ValueError(f"energy must be >= 0, got {energy_kwh}")
    return energy_kwh * model.grid_intensity_g_per_kwh


def car_km(grams: float, model: EnergyModel) -> float:
    if grams < 0:
        raise ValueError(f"emissions must be >= 0, got {grams}")
    return grams / model.car_g_per_km


def savings_estimate(total_energy_wh: float, kept: int, total: int) -> float:
    """Watt-hours avoided by skipping ``total - kept`` of ``total`` variants,
    under the uniform per-variant cost assumption."""
    if total <= 0:
        raise ValueError("total variant count must be positive")
    if not 0 <= kept <= total:
        raise ValueError(f"kept count {kept} outside [0, {total}]")
    return total_energy_wh * (total - kept) / total


@dataclass
class SweepPlan:
    """Rounds of pipeline names for a coarse-to-fine sweep.

    Round one probes the FD axis at a fixed stride; later rounds, appended by
    :func:`refine_plan` once results exist, fill in unexplored variants whose
    FD lies within the refinement radius of the best observed one.
    """

    stride: int
    refine_radius: float
    budget: int
    fd_by_name: dict[str, float]
    rounds: list[list[str]] = field(default_factory=list)
    complete: bool = False

    @property
    def scheduled(self) -> list[str]:
        return [name for rnd in self.rounds for name in rnd]

    def to_json(self) -> str:
        return json.dumps(
            {
                "stride": self.stride,
                "refine_radius": self.refine_radius,
                "budget": self.budget,
                "fd_by_name": self.fd_by_name,
                "rounds": self.rounds,
                "complete": self.complete,
            },
            indent=1,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SweepPlan":
        obj = json.loads(text)
        return cls(
            stride=int(obj["stride"]),
            refine_radius=float(obj["refine_radius"]),
            budget=int(obj["budget"]),
            fd_by_name={k: float(v) for k, v in obj["fd_by_name"].items()},
            rounds=[list(r) for r in obj["rounds"]],
            complete=bool(obj["complete"]),
        )


def coarse_to_fine(
    records: Sequence[DensityRecord], stride: int, refine_radius: float, budget: int
) -> SweepPlan:
    """Build round one: every stride-th variant in FD order, always probing
    both the first and the last."""
    if stride < 1:
        raise PlanError(f"stride must be >= 1, got {stride}")
    if refine_radius < 0:
        raise PlanError(f"refine radius must be >= 0, got {refine_radius}")
    ordered = sorted(records, key=lambda r: (r.fd, r.name))
    names = [r.name for r in ordered]
    if len(set(names)) != len(names):
        raise PlanError("duplicate pipeline names in density records")
    probe_idx = list(range(0, len(names), stride))
    if names and probe_idx[-1] != len(names) - 1:
        probe_idx.append(len(names) - 1)
    round_one = [names[i] for i in probe_idx]
    if budget < len(round_one):
        raise PlanError(
            f"budget {budget} cannot cover the {len(round_one)} first-round probes"
        )
    plan = SweepPlan(
        stride=stride,
        refine_radius=refine_radius,
        budget=budget,
        fd_by_name={r.name: r.fd for r in ordered},
        rounds=[round_one],
        complete=len(round_one) == len(names),
    )
    return plan


def refine_plan(plan: SweepPlan, observed_mean_f1: Mapping[str, float]) -> list[str]:
    """Append the next refinement round from observed results.

    Candidates are unexplored variants with ``|fd - fd_best| <= radius``,
    where ``fd_best`` belongs to the scheduled variant with the highest
    observed mean F1 (ties toward lower FD). The round is truncated to the
    remaining budget; an empty candidate set marks the plan complete.
    """
    if plan.complete:
        return []
    scheduled = set(plan.scheduled)
    scored = [
        (name, f1) for name, f1 in observed_mean_f1.items() if name in scheduled
    ]
    if not scored:
        raise PlanError("no observed results for any scheduled pipeline yet")
    best_name, _ = max(scored, key=lambda kv: (kv[1], -plan.fd_by_name.get(kv[0], 0.0)))
    fd_best = plan.fd_by_name[best_name]

    remaining = plan.budget - len(plan.scheduled)
    candidates = [
        (abs(fd - fd_best), name)
        for name, fd in plan.fd_by_name.items()
        if name not in scheduled and abs(fd - fd_best) <= plan.refine_radius
    ]
    candidates.sort()
    next_round = [name for _, name in candidates[: max(0, remaining)]]
    if not next_round:
        plan.complete = True
        return []
    plan.rounds.append(next_round)
    if len(plan.scheduled) >= plan.budget or len(plan.scheduled) == len(plan.fd_by_name):
        plan.complete = True
    return next_round


def recommendation(
    records: Sequence[DensityRecord],
    lo: float,
    hi: float,
    model: EnergyModel,
    runtime_s: float | None = None,
) -> dict:
    """Band-prune the variants and estimate the energy the skips save.

    When a full-sweep runtime estimate is supplied, savings are quantified in
    watt-hours, grams of CO2, and car-kilometers; the uniform-cost assumption
    is stated in the output.
    """
    keep, skip = band_filter(list(records), lo, hi)
    out: dict = {
        "band": [lo, hi],
        "kept": [r.name for r in keep],
        "skipped": [r.name for r in skip],
        "kept_count": len(keep),
        "skipped_count": len(skip),
        "total_count": len(keep) + len(skip),
        "assumptions": {
            "power_watts": model.power_watts,
            "folds": model.folds,
            "grid_intensity_g_per_kwh": model.grid_intensity_g_per_kwh,
            "car_g_per_km": model.car_g_per_km,
            "uniform_cost_model": True,
        },
    }
    if runtime_s is not None and (keep or skip):
        total_wh = estimate_energy_wh(runtime_s, model)
        saved_wh = savings_estimate(total_wh, len(keep), len(keep) + len(skip))
        saved_g = co2_grams(saved_wh / 1000.0, model)
        out["estimated_full_sweep_wh"] = total_wh
        out["estimated_savings"] = {
            "wh": saved_wh,
            "co2_g": saved_g,
            "car_km": car_km(saved_g, model),
        }
    return out


def write_plan(plan: SweepPlan, path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(plan.to_json() + "\n")


def read_plan(path: str | os.PathLike[str]) -> SweepPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return SweepPlan.from_json(fh.read())
