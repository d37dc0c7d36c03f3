"""Steady-state hydraulic solver (global gradient / Newton scheme).

Per time step the solver finds pipe flows q (m3/s) and junction heads h (m)
satisfying mass balance at every junction and the Darcy-Weisbach head-loss
relation along every pipe,

    A1' q = d
    phi(q) + A1 h + A2 e = 0,

where phi_i(q) = r_i(q) q|q| is the pipe head loss, d the junction demands
and e the fixed-node boundary heads. Each Newton step solves the Schur
complement system in h (sparse SPD for any network in which all junctions
reach a fixed-head node), then updates q by substitution. The friction
factor is frozen within an iteration and refreshed between iterations.

Friction regimes: Swamee-Jain above 2x the laminar threshold, Hagen-
Poiseuille (f = 64/Re) below the laminar threshold, and a linear blend in
Reynolds number between the two so the loss coefficient stays continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DataError, SingularSystemError
from .network import Network
from .timeseries import TimeTable
from .units import FLOW_UNIT_LPS, FLOW_UNIT_M3S, GRAVITY


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    flow_tolerance: float = 1e-6      # m3/s, componentwise mass imbalance
    head_tolerance: float = 1e-6      # m, componentwise pipe head-loss residual
    kinematic_viscosity: float = 1.004e-6  # m2/s, water at 20 C
    gravity: float = GRAVITY
    laminar_threshold: float = 2000.0
    min_flow_regularization: float = 1e-6  # m3/s floor inside the loss coefficients

    def __post_init__(self):
        for name in ("max_iterations", "flow_tolerance", "head_tolerance",
                     "kinematic_viscosity", "gravity", "laminar_threshold",
                     "min_flow_regularization"):
            if getattr(self, name) <= 0:
                raise DataError(f"solver config: {name} must be positive")

    @property
    def turbulent_threshold(self) -> float:
        """Reynolds number at which the Swamee-Jain branch fully applies."""
        return 2.0 * self.laminar_threshold


DEFAULT_CONFIG = SolverConfig()


@dataclass
class HydraulicState:
    """Converged snapshot solution."""

    q: np.ndarray            # pipe flows, m3/s, positive from from_node to to_node
    h: np.ndarray            # junction heads, m
    iterations: int
    residual_flow: float     # max junction mass imbalance, m3/s
    residual_head: float     # max pipe head-loss inconsistency, m


def friction_factor(roughness_mm, diameter, reynolds):
    """Swamee-Jain friction factor (turbulent branch).

    ``roughness_mm`` is the sand-grain roughness in mm, ``diameter`` in m.
    Vectorizes over numpy inputs.
    """
    eps = np.asarray(roughness_mm, dtype=float) * 1e-3
    d = np.asarray(diameter, dtype=float)
    re = np.asarray(reynolds, dtype=float)
    arg = eps / (3.7 * d) + 5.74 / re**0.9
    f = 0.25 / np.log10(arg) ** 2
    if f.ndim == 0:
        return float(f)
    return f


def reynolds(q, diameter, viscosity=DEFAULT_CONFIG.kinematic_viscosity):
    """Circular-pipe Reynolds number, Re = 4|q| / (pi D nu)."""
    re = 4.0 * np.abs(np.asarray(q, dtype=float)) / (np.pi * diameter * viscosity)
    if re.ndim == 0:
        return float(re)
    return re


def darcy_resistance(f, length, diameter, gravity=GRAVITY):
    """Darcy-Weisbach resistance r = f L / (2 g D A^2), units s2/m5."""
    area = np.pi * np.asarray(diameter, dtype=float) ** 2 / 4.0
    return f * length / (2.0 * gravity * diameter * area**2)


def laminar_coefficient(length, diameter, viscosity, gravity=GRAVITY):
    """Hagen-Poiseuille loss per unit flow: 128 nu L / (pi g D^4), s/m2."""
    return 128.0 * viscosity * length / (np.pi * gravity * np.asarray(diameter, float) ** 4)


def _loss_coefficients(q, lengths, diameters, roughness_mm, cfg: SolverConfig):
    """Secant loss coefficient g (with phi = g q) and derivative d(phi)/dq.

    Both stay continuous across flow regimes and bounded away from zero at
    q = 0, which keeps the Newton matrix well conditioned.
    """
    qa = np.maximum(np.abs(q), cfg.min_flow_regularization)
    re = 4.0 * qa / (np.pi * diameters * cfg.kinematic_viscosity)
    k_lam = laminar_coefficient(lengths, diameters, cfg.kinematic_viscosity, cfg.gravity)

    re_lo = cfg.laminar_threshold
    re_hi = cfg.turbulent_threshold
    f_turb = friction_factor(roughness_mm, diameters, np.maximum(re, re_lo))
    r_turb = darcy_resistance(f_turb, lengths, diameters, cfg.gravity)

    s = np.clip((re - re_lo) / (re_hi - re_lo), 0.0, 1.0)
    g = (1.0 - s) * k_lam + s * (r_turb * qa)
    dphi = (1.0 - s) * k_lam + s * (2.0 * r_turb * qa)
    return g, dphi


def resistance(pipe, q: float, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Effective resistance r of one pipe at flow q, such that the head loss
    is r q|q| (with |q| floored by the regularization flow near zero)."""
    g, _ = _loss_coefficients(
        np.array([q], dtype=float),
        np.array([pipe.length]),
        np.array([pipe.diameter]),
        np.array([pipe.roughness]),
        cfg,
    )
    qa = max(abs(q), cfg.min_flow_regularization)
    return float(g[0] / qa)


def resolve_roughness(net: Network, override=None) -> np.ndarray:
    """Per-pipe roughness in mm; ``override`` may be an array (per pipe) or a
    material -> mm mapping covering every material in the network."""
    if override is None:
        return net.roughness_mm()
    if isinstance(override, dict):
        missing = [m for m in net.materials if m not in override]
        if missing:
            raise DataError(f"roughness mapping missing materials: {missing}")
        return np.array([override[m] for m in net.pipe_materials()], dtype=float)
    arr = np.asarray(override, dtype=float)
    if arr.shape != (net.n_pipes,):
        raise DataError(f"roughness array must have one entry per pipe ({net.n_pipes})")
    return arr


def solve_snapshot(
    net: Network,
    demands,
    boundary_heads=None,
    roughness=None,
    cfg: SolverConfig = DEFAULT_CONFIG,
    q0=None,
    h0=None,
) -> HydraulicState:
    """Solve one steady state. ``demands`` is the junction withdrawal vector
    in m3/s; ``boundary_heads`` the fixed-node heads in m (defaults to the
    network's declared source heads).

    Raises :class:`ConvergenceError` when the iteration budget is exhausted
    and :class:`SingularSystemError` when the Schur system degenerates.
    """
    d = np.asarray(demands, dtype=float)
    if d.shape != (net.n_junctions,):
        raise DataError(
            f"demand vector has shape {d.shape}, expected ({net.n_junctions},)"
        )
    e = net.default_boundary_heads() if boundary_heads is None \
        else np.asarray(boundary_heads, dtype=float)
    if e.shape != (net.n_fixed,):
        raise DataError(
            f"boundary-head vector has shape {e.shape}, expected ({net.n_fixed},)"
        )
    if not np.all(np.isfinite(e)):
        raise DataError("boundary heads must be finite")
    eps_mm = resolve_roughness(net, roughness)

    lengths = net.pipe_lengths()
    diameters = net.pipe_diameters()
    A1 = net.A1
    A2 = net.A2
    A1T = A1.T.tocsr()
    a2e = A2 @ e

    q = np.full(net.n_pipes, 1e-3) if q0 is None else np.asarray(q0, dtype=float).copy()
    if h0 is None:
        h = np.full(net.n_junctions, float(np.mean(e)) if e.size else 0.0)
    else:
        h = np.asarray(h0, dtype=float).copy()

    res_flow = np.inf
    res_head = np.inf
    for it in range(cfg.max_iterations + 1):
        g, dphi = _loss_coefficients(q, lengths, diameters, eps_mm, cfg)
        phi = g * q
        energy = phi + A1 @ h + a2e
        mass = A1T @ q - d
        res_flow = float(np.max(np.abs(mass))) if mass.size else 0.0
        res_head = float(np.max(np.abs(energy))) if energy.size else 0.0
        if res_flow <= cfg.flow_tolerance and res_head <= cfg.head_tolerance:
            return HydraulicState(q, h, it, res_flow, res_head)
        if it == cfg.max_iterations:
            break

        inv_d = 1.0 / dphi
        if net.n_junctions:
            schur = (A1T @ sp.diags(inv_d) @ A1).tocsc()
            rhs = A1T @ (q - inv_d * (phi + a2e)) - d
            with np.errstate(all="ignore"):
                h = spla.spsolve(schur, rhs)
            if not np.all(np.isfinite(h)):
                raise SingularSystemError(
                    "singular Schur system: network degenerate or effectively disconnected"
                )
        q = q - inv_d * (phi + A1 @ h + a2e)

    raise ConvergenceError(cfg.max_iterations, res_flow, res_head)


def demand_matrix(net: Network, demands: TimeTable) -> np.ndarray:
    """(T x n_junctions) withdrawal matrix in m3/s from a demand table.

    Junctions without a demand column get zero; a declared column missing
    from the table, or NaNs in a used column, are data errors.
    """
    if demands.unit == FLOW_UNIT_LPS:
        scale = 1e-3
    elif demands.unit == FLOW_UNIT_M3S:
        scale = 1.0
    else:
        raise DataError(f"demand table must be a flow table, got unit {demands.unit!r}")
    T = len(demands)
    out = np.zeros((T, net.n_junctions))
    for j, node in enumerate(net.junctions):
        if node.demand_col is None:
            continue
        if node.demand_col not in demands.columns:
            raise DataError(
                f"demand table is missing column {node.demand_col!r} for node {node.id!r}"
            )
        col = demands.column(node.demand_col)
        if np.any(np.isnan(col)):
            raise DataError(
                f"demand column {node.demand_col!r} contains NaN; fill gaps before simulating"
            )
        out[:, j] = col * scale
    return out


def _boundary_for_step(net: Network, boundary_heads, t: int, T: int) -> np.ndarray:
    if boundary_heads is None:
        return net.default_boundary_heads()
    arr = np.asarray(boundary_heads, dtype=float)
    if arr.ndim == 1:
        return arr
    if arr.ndim == 2:
        if arr.shape != (T, net.n_fixed):
            raise DataError(
                f"per-step boundary heads have shape {arr.shape}, expected ({T}, {net.n_fixed})"
            )
        return arr[t]
    raise DataError("boundary_heads must be a vector or a (T, F) array")


def simulate_period(
    net: Network,
    demands: TimeTable,
    boundary_heads=None,
    roughness=None,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> list[HydraulicState]:
    """Extended-period simulation: one independent steady state per step,
    warm-started from the previous step's solution."""
    dmat = demand_matrix(net, demands)
    states: list[HydraulicState] = []
    q0 = h0 = None
    for t in range(len(demands)):
        e = _boundary_for_step(net, boundary_heads, t, len(demands))
        try:
            state = solve_snapshot(net, dmat[t], e, roughness, cfg, q0=q0, h0=h0)
        except ConvergenceError as exc:
            raise exc.with_step(t) from None
        states.append(state)
        q0, h0 = state.q, state.h
    return states


def pressure_heads(net: Network, state: HydraulicState) -> np.ndarray:
    """Junction pressure heads p = h - z, in m."""
    return state.h - net.junction_elevations()
