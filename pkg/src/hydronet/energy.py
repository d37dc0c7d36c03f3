"""Pumping energy, cost, emissions and level-of-service accounting.

Energy uses steady hydraulic power with a constant wire-to-water efficiency:
P(t) = rho g Q(t) H_lift(t) / eta, with H_lift the delivery HGL minus the
suction-side water level, integrated over the run at its sampling step.
Tariff and emission factor are flat configurable rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .setpoint import LosStats, RunSummary, SetpointRun
from .units import GRAVITY, joules_to_kwh, m3_to_megalitres


@dataclass(frozen=True)
class EnergyConfig:
    pump_efficiency: float = 0.80
    water_density: float = 998.0      # kg/m3
    suction_hgl: float = 0.0          # m, source water level (datum-relative)
    tariff: float = 0.109             # currency per kWh
    emission_factor: float = 1.09     # kg CO2e per kWh

    def __post_init__(self):
        if not (0.0 < self.pump_efficiency <= 1.0):
            raise DataError("pump efficiency must be in (0, 1]")
        for name in ("water_density", "tariff", "emission_factor"):
            if getattr(self, name) <= 0:
                raise DataError(f"energy config: {name} must be positive")
        if not math.isfinite(self.suction_hgl):
            raise DataError("energy config: suction_hgl must be finite")


@dataclass
class EnergyFigures:
    energy_mwh: float
    cost: float
    ghg_tonnes: float
    volume_ml: float
    unit_kwh_per_ml: float | None  # None when nothing was pumped


def pumping_energy_from_arrays(
    flows_m3s, delivery_heads, step_s: float, cfg: EnergyConfig = EnergyConfig()
) -> EnergyFigures:
    q = np.asarray(flows_m3s, dtype=float)
    h = np.asarray(delivery_heads, dtype=float)
    if q.shape != h.shape:
        raise DataError("flow and delivery-head traces differ in length")
    lift = h - cfg.suction_hgl
    if np.any(lift < 0):
        raise DataError("negative pump lift: suction level above delivery head")
    power_w = cfg.water_density * GRAVITY * q * lift / cfg.pump_efficiency
    energy_kwh = joules_to_kwh(float(np.sum(power_w)) * step_s)
    volume_ml = m3_to_megalitres(float(np.sum(q)) * step_s)
    return EnergyFigures(
        energy_mwh=energy_kwh / 1000.0,
        cost=energy_kwh * cfg.tariff,
        ghg_tonnes=energy_kwh * cfg.emission_factor / 1000.0,
        volume_ml=volume_ml,
        unit_kwh_per_ml=(energy_kwh / volume_ml) if volume_ml > 0 else None,
    )


def pumping_energy(run: SetpointRun, cfg: EnergyConfig = EnergyConfig()) -> EnergyFigures:
    """Energy/cost/GHG/volume figures for one setpoint run."""
    return pumping_energy_from_arrays(
        run.system_flow_lps * 1e-3, run.delivery_heads, run.step, cfg
    )


def level_of_service(run: SetpointRun, service_head: float) -> LosStats:
    """Violation statistics against the minimum downstream pressure head.

    The duration of a violation episode is the time span between its first
    and last violating samples; steps with no active outlet never violate.
    """
    md = np.asarray(run.min_downstream, dtype=float)
    deficit = np.where(np.isfinite(md), np.maximum(0.0, service_head - md), 0.0)
    violating = deficit > 0
    max_duration = 0.0
    i, n = 0, violating.size
    while i < n:
        if not violating[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and violating[j + 1]:
            j += 1
        max_duration = max(max_duration, (j - i) * run.step)
        i = j + 1
    return LosStats(
        violation_steps=int(violating.sum()),
        max_deficit=float(deficit.max()) if deficit.size else 0.0,
        max_duration=max_duration,
    )


def summarize_run(
    run: SetpointRun,
    cfg: EnergyConfig = EnergyConfig(),
    service_head: float = 35.0,
) -> SetpointRun:
    """Attach the energy and level-of-service summary to a run (in place,
    also returned for chaining)."""
    fig = pumping_energy(run, cfg)
    run.summary = RunSummary(
        energy_mwh=fig.energy_mwh,
        cost=fig.cost,
        ghg_tonnes=fig.ghg_tonnes,
        volume_ml=fig.volume_ml,
        unit_kwh_per_ml=fig.unit_kwh_per_ml,
        avg_setpoint=float(np.mean(run.setpoints)),
        los=level_of_service(run, service_head),
    )
    return run
