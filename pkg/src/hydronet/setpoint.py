"""Pump pressure-setpoint selection and comparison.

Two controllers are provided. The baseline looks the setpoint up on a
flow-to-setpoint curve from the measured total system flow. The improved
scheme closes the loop on the critical outlet: each sampling interval it
simulates the network at the current setpoint, finds the minimum downstream
pressure head over active outlets, and moves the next setpoint by the
shortfall against the service head,

    r(t+1) = r(t) + lambda * (service_head - min_downstream(t)),

clamped to the allowed band. At the fixed point the critical outlet sits
exactly at the service head, which is the least pumping head that still
meets the service standard.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import DataError
from .network import FIXED_HEAD, Network
from .outlets import OutletLossModel, critical_pressure
from .solver import DEFAULT_CONFIG, SolverConfig, demand_matrix, solve_snapshot
from .timeseries import TimeTable

DEFAULT_BOUNDS = (81.9, 102.3)  # m, operating band of the historical curve
DEFAULT_SERVICE_HEAD = 35.0     # m, minimum at active outlets


@dataclass(frozen=True)
class SetpointCurve:
    """Piecewise-linear total-system-flow (L/s) -> setpoint (m) lookup."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.breakpoints:
            raise DataError("setpoint curve needs at least one breakpoint")
        flows = [b[0] for b in self.breakpoints]
        setps = [b[1] for b in self.breakpoints]
        if any(f2 <= f1 for f1, f2 in zip(flows, flows[1:])):
            raise DataError("setpoint curve flows must be strictly increasing")
        if any(s2 < s1 for s1, s2 in zip(setps, setps[1:])):
            raise DataError("setpoint curve must be non-decreasing")

    @classmethod
    def linear(cls, flow_range=(0.0, 3500.0), setpoint_range=DEFAULT_BOUNDS) -> "SetpointCurve":
        return cls(((flow_range[0], setpoint_range[0]), (flow_range[1], setpoint_range[1])))

    def interpolate(self, flows_lps) -> np.ndarray:
        """Lookup with clamping outside the breakpoint range."""
        xs = np.array([b[0] for b in self.breakpoints])
        ys = np.array([b[1] for b in self.breakpoints])
        return np.interp(np.asarray(flows_lps, dtype=float), xs, ys)


@dataclass
class LosStats:
    violation_steps: int
    max_deficit: float      # m
    max_duration: float     # s, span of the longest contiguous violation


@dataclass
class RunSummary:
    energy_mwh: float
    cost: float
    ghg_tonnes: float
    volume_ml: float
    unit_kwh_per_ml: float | None
    avg_setpoint: float     # m
    los: LosStats


@dataclass
class SetpointRun:
    """Per-step setpoint trace with the resulting critical-outlet pressures."""

    start: datetime
    step: float                       # s
    setpoints: np.ndarray             # r(t), m
    delivery_heads: np.ndarray        # station HGL = elevation + r(t), m
    min_downstream: np.ndarray        # m; NaN when no outlet active
    critical_outlet: list[str | None]
    system_flow_lps: np.ndarray
    infeasible_steps: list[int] = field(default_factory=list)
    summary: RunSummary | None = None

    def __len__(self) -> int:
        return len(self.setpoints)


@dataclass(frozen=True)
class SetpointConfig:
    service_head: float = DEFAULT_SERVICE_HEAD
    relaxation: float = 1.0           # step-size factor on the correction
    station_nodes: tuple[str, ...] | None = None  # None = every fixed-head node
    solver: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if not (0.0 < self.relaxation <= 1.0):
            raise DataError("relaxation must be in (0, 1]")


def _station_setup(net: Network, cfg: SetpointConfig):
    if cfg.station_nodes is None:
        stations = [n.id for n in net.fixed_nodes]
    else:
        stations = list(cfg.station_nodes)
        for s in stations:
            if net.node(s).kind != FIXED_HEAD:
                raise DataError(f"station node {s!r} is not a fixed-head node")
    if not stations:
        raise DataError("network has no fixed-head nodes to drive")
    idx = np.array([net.fixed_index(s) for s in stations])
    elev = np.array([net.node(s).elevation for s in stations])
    return idx, elev


def _run_loop(
    net: Network,
    demands: TimeTable,
    loss_model: OutletLossModel | None,
    cfg: SetpointConfig,
    setpoints_in: np.ndarray | None,
    r0: float | None,
    bounds: tuple[float, float],
) -> SetpointRun:
    dmat = demand_matrix(net, demands)
    T = len(demands)
    station_idx, station_elev = _station_setup(net, cfg)
    base_e = net.default_boundary_heads()

    lo, hi = bounds
    if not lo < hi:
        raise DataError(f"invalid setpoint bounds [{lo}, {hi}]")

    setpoints = np.empty(T)
    delivery = np.empty(T)
    min_down = np.full(T, np.nan)
    critical: list[str | None] = []
    sysflow = np.empty(T)
    infeasible: list[int] = []

    r = float(np.clip(r0, lo, hi)) if setpoints_in is None else None
    q0 = h0 = None
    for t in range(T):
        r_t = r if setpoints_in is None else float(setpoints_in[t])
        e = base_e.copy()
        e[station_idx] = station_elev + r_t
        state = solve_snapshot(net, dmat[t], e, cfg=cfg.solver, q0=q0, h0=h0)
        q0, h0 = state.q, state.h

        p_min, outlet_id = critical_pressure(net, state, dmat[t], loss_model)
        setpoints[t] = r_t
        delivery[t] = station_elev[0] + r_t
        critical.append(outlet_id)
        sysflow[t] = float(dmat[t].sum()) * 1e3
        if outlet_id is not None:
            min_down[t] = p_min
            if p_min < cfg.service_head - 1e-9 and r_t >= hi - 1e-9:
                infeasible.append(t)

        if setpoints_in is None:
            if outlet_id is None:
                r_next = r_t  # idle network: hold the setpoint
            else:
                r_next = r_t + cfg.relaxation * (cfg.service_head - p_min)
            r = float(np.clip(r_next, lo, hi))

    return SetpointRun(
        start=demands.start,
        step=float(demands.step),
        setpoints=setpoints,
        delivery_heads=delivery,
        min_downstream=min_down,
        critical_outlet=critical,
        system_flow_lps=sysflow,
        infeasible_steps=infeasible,
    )


def select_setpoints(
    net: Network,
    demands: TimeTable,
    r0: float,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    loss_model: OutletLossModel | None = None,
    cfg: SetpointConfig = SetpointConfig(),
) -> SetpointRun:
    """Run the closed-loop setpoint recurrence over the demand trace.

    Demands should be gridded at the control interval (15 min in normal
    operation). Steps where the setpoint is pinned at the upper bound while
    the service head is missed are recorded in ``infeasible_steps``.
    """
    if not demands.is_uniform:
        raise DataError("setpoint selection needs demands on a uniform grid")
    if not (bounds[0] <= r0 <= bounds[1]):
        raise DataError(f"initial setpoint {r0} outside bounds {bounds}")
    return _run_loop(net, demands, loss_model, cfg, None, r0, bounds)


def evaluate_setpoints(
    net: Network,
    demands: TimeTable,
    setpoints,
    loss_model: OutletLossModel | None = None,
    cfg: SetpointConfig = SetpointConfig(),
) -> SetpointRun:
    """Simulate a fixed setpoint trace (e.g. from the baseline curve) and
    record the same per-step quantities as :func:`select_setpoints`."""
    if not demands.is_uniform:
        raise DataError("setpoint evaluation needs demands on a uniform grid")
    arr = np.asarray(setpoints, dtype=float)
    if arr.shape != (len(demands),):
        raise DataError(f"setpoint trace has shape {arr.shape}, expected ({len(demands)},)")
    return _run_loop(net, demands, loss_model, cfg, arr, None,
                     (float(arr.min()) - 1.0, float(arr.max()) + 1.0))


def baseline_setpoints(curve: SetpointCurve, system_flow: TimeTable) -> np.ndarray:
    """Setpoint trace from the flow-feedback curve, one value per step."""
    if len(system_flow.keys) != 1:
        raise DataError("system-flow table must have exactly one column")
    flows = system_flow.column(system_flow.keys[0])
    if np.any(~np.isfinite(flows)):
        raise DataError("system-flow trace contains gaps; fill before lookup")
    return curve.interpolate(flows)


def total_demand_lps(net: Network, demands: TimeTable) -> np.ndarray:
    """Total junction withdrawal per step in L/s (the simulated system flow)."""
    return demand_matrix(net, demands).sum(axis=1) * 1e3


@dataclass
class ComparisonRow:
    old: float
    new: float
    delta: float      # old - new
    pct: float | None  # delta / old * 100


@dataclass
class ComparisonReport:
    rows: dict[str, ComparisonRow]
    avg_setpoint_reduction: float   # m
    los_old: LosStats
    los_new: LosStats


def compare_runs(run_old: SetpointRun, run_new: SetpointRun) -> ComparisonReport:
    """Side-by-side economics of two summarized runs over the same horizon."""
    if len(run_old) != len(run_new) or run_old.step != run_new.step:
        raise DataError("runs cover different horizons; cannot compare")
    if run_old.summary is None or run_new.summary is None:
        raise DataError("summarize both runs (energy + level of service) before comparing")
    so, sn = run_old.summary, run_new.summary

    def row(old: float | None, new: float | None) -> ComparisonRow:
        if old is None or new is None:
            return ComparisonRow(float("nan"), float("nan"), float("nan"), None)
        delta = old - new
        return ComparisonRow(old, new, delta, (delta / old * 100.0) if old != 0 else None)

    rows = {
        "average_setpoint_m": row(so.avg_setpoint, sn.avg_setpoint),
        "total_energy_mwh": row(so.energy_mwh, sn.energy_mwh),
        "total_energy_cost": row(so.cost, sn.cost),
        "volume_pumped_ml": row(so.volume_ml, sn.volume_ml),
        "unit_energy_kwh_per_ml": row(so.unit_kwh_per_ml, sn.unit_kwh_per_ml),
        "ghg_emissions_tonnes": row(so.ghg_tonnes, sn.ghg_tonnes),
    }
    return ComparisonReport(
        rows=rows,
        avg_setpoint_reduction=float(np.mean(run_old.setpoints - run_new.setpoints)),
        los_old=so.los,
        los_new=sn.los,
    )
