"""Irrigation-outlet head loss and critical-pressure search.

Head loss across an outlet assembly (control valve, meter, bends) is modeled
as a quadratic in the outlet flow. Coefficients were fitted for DN150
outlets; other nominal diameters reuse them scaled by (150/DN)^4, the
orifice-type dependence of losses on diameter at fixed flow. This scaling is
an assumption, overridable by supplying per-class coefficients.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .network import Network, Node
from .solver import HydraulicState

logger = logging.getLogger(__name__)

DN150_COEFFICIENTS = (5.95, 0.0456, 0.00221)  # a0 [m], a1 [m/(L/s)], a2 [m/(L/s)^2]
DN150_MAX_FLOW = 100.0  # L/s, warn-only validity bound of the fitted curve


@dataclass(frozen=True)
class OutletLossModel:
    a0: float = DN150_COEFFICIENTS[0]
    a1: float = DN150_COEFFICIENTS[1]
    a2: float = DN150_COEFFICIENTS[2]
    q_max: float = DN150_MAX_FLOW     # L/s, upper end of the fitted range
    diameter_class: str = "DN150"

    def __post_init__(self):
        for name in ("a0", "a1", "a2", "q_max"):
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"outlet loss model: {name} must be finite")
        if self.q_max <= 0:
            raise DataError("outlet loss model: q_max must be > 0")

    @classmethod
    def dn150(cls) -> "OutletLossModel":
        return cls()

    def for_class(self, diameter_class: str) -> "OutletLossModel":
        """Rescale to another DN class, loss ~ (D_ref/D)^4 at fixed flow."""
        if diameter_class == self.diameter_class:
            return self
        ref = _nominal_mm(self.diameter_class)
        dn = _nominal_mm(diameter_class)
        scale = (ref / dn) ** 4
        return OutletLossModel(
            a0=self.a0 * scale,
            a1=self.a1 * scale,
            a2=self.a2 * scale,
            q_max=self.q_max * (dn / ref) ** 2,
            diameter_class=diameter_class,
        )

    def headloss(self, q: float) -> float:
        return outlet_headloss(self, q)


def _nominal_mm(diameter_class: str) -> float:
    m = re.fullmatch(r"DN(\d+(?:\.\d+)?)", diameter_class.strip())
    if not m:
        raise DataError(f"cannot parse nominal diameter from class {diameter_class!r}")
    return float(m.group(1))


def outlet_headloss(model: OutletLossModel, q: float) -> float:
    """Head loss (m) across the outlet at flow q (L/s). Flows past the fitted
    range are still evaluated but logged as extrapolation."""
    if q < 0:
        raise DataError(f"outlet flow must be >= 0, got {q}")
    if q > model.q_max:
        logger.warning(
            "outlet flow %.1f L/s beyond fitted range of %s (%.1f L/s); extrapolating",
            q, model.diameter_class, model.q_max,
        )
    return model.a2 * q * q + model.a1 * q + model.a0


def downstream_pressure(upstream_head: float, q: float, model: OutletLossModel) -> float:
    """Pressure head (m) delivered downstream of the outlet assembly.

    Negative results are physically infeasible delivery and are flagged to
    the log; callers decide how to react."""
    p = upstream_head - outlet_headloss(model, q)
    if p < 0:
        logger.warning(
            "downstream pressure %.2f m is negative (upstream %.2f m, q=%.1f L/s)",
            p, upstream_head, q,
        )
    return p


def resolve_loss_model(
    node: Node,
    base: OutletLossModel | None = None,
    per_class: dict[str, OutletLossModel] | None = None,
) -> OutletLossModel:
    base = base or OutletLossModel.dn150()
    cls = node.outlet_class or base.diameter_class
    if per_class and cls in per_class:
        return per_class[cls]
    return base.for_class(cls)


def critical_pressure(
    net: Network,
    state: HydraulicState,
    demands_m3s,
    base_model: OutletLossModel | None = None,
    per_class: dict[str, OutletLossModel] | None = None,
) -> tuple[float, str | None]:
    """Minimum downstream pressure head over the outlets currently drawing
    water, with the outlet id (ties broken by lexicographic id).

    Returns (inf, None) when no outlet is active.
    """
    d = np.asarray(demands_m3s, dtype=float)
    best: tuple[float, str] | None = None
    z = net.junction_elevations()
    for node in net.outlets:
        j = net.junction_index(node.id)
        q_lps = d[j] * 1e3
        if q_lps <= 0:
            continue
        model = resolve_loss_model(node, base_model, per_class)
        upstream = state.h[j] - z[j]
        p = downstream_pressure(upstream, q_lps, model)
        if best is None or p < best[0] or (p == best[0] and node.id < best[1]):
            best = (p, node.id)
    if best is None:
        return (float("inf"), None)
    return best
