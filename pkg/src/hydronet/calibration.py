"""Grouped roughness calibration against observed pressure heads.

Decision variables are one roughness height per pipe material. The objective
is the time-averaged sum of squared pressure-head mismatches over the
observation sites,

    (1/T) sum_t sum_j (p_obs_j(t) - p_sim_j(t))^2   [m^2],

minimized with SLSQP under per-material bounds, using central finite
differences with a relative step of 1e-3. Steps with missing observations
drop out of both sums, with T adjusted per site.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DataError, ObjectiveEvaluationError, SolverError
from .network import Network
from .solver import DEFAULT_CONFIG, SolverConfig, simulate_period
from .timeseries import TimeTable

logger = logging.getLogger(__name__)

DEFAULT_BOUNDS_MM = (0.001, 50.0)


@dataclass
class RoughnessGroups:
    """Material -> roughness height (mm), with per-material bounds."""

    values: dict[str, float]
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for m in self.values:
            self.bounds.setdefault(m, DEFAULT_BOUNDS_MM)
        extra = set(self.bounds) - set(self.values)
        if extra:
            raise DataError(f"bounds given for unknown materials: {sorted(extra)}")
        for m, (lo, hi) in self.bounds.items():
            if not (0 <= lo < hi):
                raise DataError(f"material {m!r}: invalid bounds [{lo}, {hi}]")
            v = self.values[m]
            if not (lo <= v <= hi):
                raise DataError(f"material {m!r}: value {v} outside bounds [{lo}, {hi}]")

    @property
    def materials(self) -> tuple[str, ...]:
        return tuple(sorted(self.values))

    def as_vector(self) -> np.ndarray:
        return np.array([self.values[m] for m in self.materials], dtype=float)

    def with_vector(self, x) -> "RoughnessGroups":
        vals = {m: float(v) for m, v in zip(self.materials, x)}
        return RoughnessGroups(vals, dict(self.bounds))

    def bounds_list(self) -> list[tuple[float, float]]:
        return [self.bounds[m] for m in self.materials]

    def validate_for(self, net: Network) -> None:
        missing = [m for m in net.materials if m not in self.values]
        if missing:
            raise DataError(f"roughness groups missing network materials: {missing}")


@dataclass
class SiteMetrics:
    avg_observed: float   # m
    avg_simulated: float  # m
    pct_diff: float       # (obs - sim) / obs * 100
    rmse: float           # m
    mae: float            # m


@dataclass
class CalibrationResult:
    groups: RoughnessGroups
    objective: float                     # m^2
    per_site: dict[str, SiteMetrics]
    sum_rmse: float                      # m, sum of per-site RMSEs
    iterations: int
    converged: bool
    n_evaluations: int
    solver_failures: int                 # objective evaluations hit by solver failure


def _site_indices(net: Network, sites) -> dict[str, int]:
    out = {}
    for site in sites:
        out[site] = net.junction_index(site)
    return out


def simulated_pressures(
    net: Network,
    demands: TimeTable,
    boundary_heads,
    roughness,
    sites,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> TimeTable:
    """Simulated pressure heads (m) at the given junction ids, as a table on
    the demand grid."""
    idx = _site_indices(net, sites)
    states = simulate_period(net, demands, boundary_heads, roughness, cfg)
    z = net.junction_elevations()
    columns = {
        site: np.array([s.h[j] for s in states]) - z[j] for site, j in idx.items()
    }
    return TimeTable(demands.start, demands.times.copy(), columns, "m", demands.step)


def objective(
    net: Network,
    groups: RoughnessGroups,
    demands: TimeTable,
    observed: TimeTable,
    boundary_heads=None,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """Mean-squared pressure mismatch (m^2), summed over observation sites."""
    groups.validate_for(net)
    if observed.unit != "m":
        raise DataError(f"observed table must hold pressure heads in m, got {observed.unit!r}")
    if len(observed) != len(demands):
        raise DataError(
            f"observed table has {len(observed)} steps, demands have {len(demands)}"
        )
    try:
        sim = simulated_pressures(net, demands, boundary_heads, groups.values,
                                  observed.keys, cfg)
    except SolverError as exc:
        raise ObjectiveEvaluationError(str(exc)) from exc

    total = 0.0
    for site in observed.keys:
        obs = observed.column(site)
        err = obs - sim.column(site)
        valid = np.isfinite(err)
        t_site = int(valid.sum())
        if t_site == 0:
            logger.warning("site %s: no valid observations, excluded from objective", site)
            continue
        total += float(np.sum(err[valid] ** 2)) / t_site
    return total


def fit_metrics(observed: TimeTable, simulated: TimeTable, sites=None) -> dict[str, SiteMetrics]:
    """Per-site fit statistics between aligned observed/simulated tables."""
    if sites is None:
        sites = observed.keys
    if len(observed) != len(simulated):
        raise DataError(
            f"length mismatch: observed {len(observed)} vs simulated {len(simulated)}"
        )
    out: dict[str, SiteMetrics] = {}
    for site in sites:
        obs = observed.column(site)
        sim = simulated.column(site)
        valid = np.isfinite(obs) & np.isfinite(sim)
        if not valid.any():
            raise DataError(f"site {site!r}: no overlapping valid samples")
        o, s = obs[valid], sim[valid]
        err = o - s
        avg_o = float(o.mean())
        avg_s = float(s.mean())
        pct = float((avg_o - avg_s) / avg_o * 100.0) if avg_o != 0 else float("nan")
        out[site] = SiteMetrics(
            avg_observed=avg_o,
            avg_simulated=avg_s,
            pct_diff=pct,
            rmse=float(np.sqrt(np.mean(err**2))),
            mae=float(np.mean(np.abs(err))),
        )
    return out


@dataclass(frozen=True)
class CalibrationConfig:
    ftol: float = 1e-10
    max_iterations: int = 100
    fd_rel_step: float = 1e-3   # central differences
    multistart: int = 1         # total starts (1 = just the given init)
    seed: int = 0
    penalty: float = 1e12       # objective stand-in when the solver fails


def calibrate(
    net: Network,
    demands: TimeTable,
    observed: TimeTable,
    boundary_heads=None,
    init: RoughnessGroups | None = None,
    cfg: CalibrationConfig = CalibrationConfig(),
    solver_cfg: SolverConfig = DEFAULT_CONFIG,
) -> CalibrationResult:
    """Fit grouped roughness heights to observed pressures.

    Deterministic for fixed inputs and configuration; extra multistart
    points are drawn log-uniformly inside the bounds from a seeded RNG.
    """
    if init is None:
        init = RoughnessGroups({m: 1.0 for m in net.materials})
    init.validate_for(net)
    if len(observed.keys) < 2:
        logger.warning("calibrating against %d observation site(s); results may be "
                       "poorly constrained", len(observed.keys))

    evaluations: list[tuple[np.ndarray, float]] = []
    failures = [0]

    def fun(x: np.ndarray) -> float:
        groups = init.with_vector(np.asarray(x, dtype=float))
        try:
            value = objective(net, groups, demands, observed, boundary_heads, solver_cfg)
        except ObjectiveEvaluationError:
            failures[0] += 1
            value = cfg.penalty
        evaluations.append((np.array(x, dtype=float), value))
        return value

    bounds = init.bounds_list()
    starts = [init.as_vector()]
    if cfg.multistart > 1:
        rng = np.random.default_rng(cfg.seed)
        lo = np.log(np.array([b[0] for b in bounds]))
        hi = np.log(np.array([b[1] for b in bounds]))
        for _ in range(cfg.multistart - 1):
            starts.append(np.exp(rng.uniform(lo, hi)))

    best_res = None
    for x0 in starts:
        res = optimize.minimize(
            fun,
            x0,
            method="SLSQP",
            jac="3-point",
            bounds=bounds,
            options={
                "ftol": cfg.ftol,
                "maxiter": cfg.max_iterations,
                "finite_diff_rel_step": cfg.fd_rel_step,
            },
        )
        if best_res is None or res.fun < best_res.fun:
            best_res = res

    # never return a point worse than the best one actually evaluated
    best_x, best_f = min(evaluations, key=lambda e: e[1])
    if best_f < best_res.fun:
        final_x, final_f = best_x, best_f
    else:
        final_x, final_f = np.asarray(best_res.x, dtype=float), float(best_res.fun)
    final_x = np.clip(final_x, [b[0] for b in bounds], [b[1] for b in bounds])
    groups = init.with_vector(final_x)

    sim = simulated_pressures(net, demands, boundary_heads, groups.values,
                              observed.keys, solver_cfg)
    per_site = fit_metrics(observed, sim)
    return CalibrationResult(
        groups=groups,
        objective=final_f,
        per_site=per_site,
        sum_rmse=float(sum(m.rmse for m in per_site.values())),
        iterations=int(best_res.nit),
        converged=bool(best_res.success),
        n_evaluations=len(evaluations),
        solver_failures=failures[0],
    )


def validate(
    net: Network,
    groups: RoughnessGroups,
    demands: TimeTable,
    observed: TimeTable,
    boundary_heads=None,
    solver_cfg: SolverConfig = DEFAULT_CONFIG,
) -> tuple[dict[str, SiteMetrics], TimeTable]:
    """Held-out-period check: metrics at fixed roughness, no re-optimization.

    Returns the per-site metrics and the simulated pressure traces for
    export."""
    groups.validate_for(net)
    sim = simulated_pressures(net, demands, boundary_heads, groups.values,
                              observed.keys, solver_cfg)
    return fit_metrics(observed, sim), sim
