"""Deterministic synthetic networks and demand traces.

These generators exist for tests, benchmarks and worked examples: none of
them describe a real system, but their scales (pipe counts, diameters,
materials, flows) match the high-pressure irrigation setting the package
targets.
"""

from __future__ import annotations

from datetime import datetime

import numpy as np

from .network import FIXED_HEAD, JUNCTION, Network, Node, Pipe
from .timeseries import TimeTable

DEFAULT_START = datetime(2019, 12, 28)


def single_pipe_net(
    length: float = 1000.0,
    diameter: float = 0.3,
    material: str = "DICL",
    roughness: float = 0.26,
    z_source: float = 100.0,
    z_junction: float = 50.0,
) -> Network:
    nodes = (
        Node("R1", z_source, FIXED_HEAD),
        Node("J1", z_junction, JUNCTION, demand_col="J1"),
    )
    pipes = (Pipe("P1", "R1", "J1", length, diameter, material, roughness),)
    return Network(nodes, pipes)


def parallel_pipes_net(
    length: float = 800.0,
    diameter: float = 0.3,
    roughness: float = 0.5,
) -> Network:
    nodes = (
        Node("R1", 100.0, FIXED_HEAD),
        Node("J1", 40.0, JUNCTION, demand_col="J1"),
    )
    pipes = (
        Pipe("PA", "R1", "J1", length, diameter, "DICL", roughness),
        Pipe("PB", "R1", "J1", length, diameter, "DICL", roughness),
    )
    return Network(nodes, pipes)


def triangle_net() -> Network:
    """Three junctions in a loop plus a reservoir spur (4 pipes, A1 is 4x3)."""
    nodes = (
        Node("R1", 100.0, FIXED_HEAD),
        Node("J1", 50.0, JUNCTION, demand_col="J1"),
        Node("J2", 48.0, JUNCTION, demand_col="J2"),
        Node("J3", 46.0, JUNCTION, demand_col="J3"),
    )
    pipes = (
        Pipe("PS", "R1", "J1", 500.0, 0.6, "MSCL", 1.0),
        Pipe("P12", "J1", "J2", 900.0, 0.375, "DICL", 0.3),
        Pipe("P23", "J2", "J3", 900.0, 0.375, "DICL", 0.3),
        Pipe("P31", "J3", "J1", 900.0, 0.375, "DICL", 0.3),
    )
    return Network(nodes, pipes)


def ladder_net(n_bays: int = 167) -> Network:
    """Looped two-rail network: one source pipe, n rungs, 2(n-1) rail pipes.

    n_bays=167 gives exactly 500 pipes over 334 junctions, a convenient
    performance fixture.
    """
    nodes = [Node("PS", 55.0, FIXED_HEAD)]
    pipes = [Pipe("P0", "PS", "T1", 400.0, 1.2, "MSCL", 10.0)]
    for i in range(1, n_bays + 1):
        z = 50.0 + 5.0 * np.sin(i / 17.0)
        nodes.append(Node(f"T{i}", z, JUNCTION))
        nodes.append(Node(f"B{i}", z - 2.0, JUNCTION, demand_col=f"B{i}"))
        pipes.append(Pipe(f"R{i}", f"T{i}", f"B{i}", 250.0, 0.3, "DICL", 0.4))
        if i > 1:
            pipes.append(Pipe(f"T{i - 1}_{i}", f"T{i - 1}", f"T{i}", 300.0, 0.6, "GRP", 2.0))
            pipes.append(Pipe(f"B{i - 1}_{i}", f"B{i - 1}", f"B{i}", 300.0, 0.45, "mPVC", 0.05))
    return Network(tuple(nodes), tuple(pipes))


def counts_net() -> Network:
    """Two fixed-head delivery mains each feeding a branching tree; totals
    433 pipes over 435 nodes."""
    nodes = [Node("PS1", 52.0, FIXED_HEAD), Node("PS2", 52.0, FIXED_HEAD)]
    pipes = []

    def grow(prefix: str, root: str, count: int):
        parent = root
        for k in range(1, count + 1):
            nid = f"{prefix}{k}"
            z = 50.0 + 10.0 * ((k * 37) % 100) / 100.0
            nodes.append(Node(nid, z, JUNCTION))
            # branch off every fifth node to get a tree rather than a chain
            if k % 5 == 0 and k > 5:
                parent = f"{prefix}{k - 5}"
            pipes.append(
                Pipe(f"{prefix}P{k}", parent, nid, 350.0, 0.375, "DICL", 0.44)
            )
            parent = nid

    grow("A", "PS1", 217)
    grow("B", "PS2", 216)
    return Network(tuple(nodes), tuple(pipes))


def calibration_net(
    n_branches: int = 12,
    dicl_per_branch: int = 4,
    pvc_per_branch: int = 4,
    roughness: dict[str, float] | None = None,
) -> Network:
    """Four-material network: two parallel rising mains (MSCL), a trunk
    (GRP), distribution branches (DICL) ending in small-diameter laterals
    (mPVC) with metered outlets."""
    eps = {"MSCL": 10.6, "GRP": 2.91, "DICL": 0.44, "mPVC": 0.01}
    if roughness:
        eps.update(roughness)

    nodes = [Node("PS", 50.0, FIXED_HEAD)]
    pipes = []
    trunk = ["A1", "A2", "A3", "A4", "A5"]
    for i, nid in enumerate(trunk):
        nodes.append(Node(nid, 50.0 + 1.5 * i, JUNCTION))
    pipes.append(Pipe("M1", "PS", "A1", 1200.0, 1.2, "MSCL", eps["MSCL"]))
    pipes.append(Pipe("M2", "PS", "A1", 1200.0, 1.2, "MSCL", eps["MSCL"]))
    for i in range(len(trunk) - 1):
        pipes.append(
            Pipe(f"G{i + 1}", trunk[i], trunk[i + 1], 1500.0, 1.2, "GRP", eps["GRP"])
        )

    for b in range(1, n_branches + 1):
        takeoff = trunk[1 + (b - 1) % 4]  # branches tap A2..A5
        parent = takeoff
        z0 = 52.0 + (b % 3)
        for k in range(1, dicl_per_branch + 1):
            nid = f"B{b}_{k}"
            demand = f"B{b}_{k}" if k == 2 else None
            nodes.append(Node(nid, z0 + 0.5 * k, JUNCTION, demand_col=demand))
            pipes.append(Pipe(f"D{b}_{k}", parent, nid, 1200.0, 0.5, "DICL", eps["DICL"]))
            parent = nid
        for k in range(1, pvc_per_branch + 1):
            nid = f"C{b}_{k}"
            demand = f"C{b}_{k}" if k in (2, pvc_per_branch) else None
            outlet = "DN150" if k == pvc_per_branch else None
            nodes.append(Node(nid, z0 + 2.0 + 0.5 * k, JUNCTION,
                              demand_col=demand, outlet_class=outlet))
            pipes.append(Pipe(f"V{b}_{k}", parent, nid, 900.0, 0.225, "mPVC", eps["mPVC"]))
            parent = nid
    return Network(tuple(nodes), tuple(pipes))


CALIBRATION_SITES = ("A1", "A3", "A5", "B6_4", "C3_4", "C9_4")


def diurnal_profile(times_s: np.ndarray, peak_hour: float = 14.0) -> np.ndarray:
    """Smooth daily demand shape in [0.35, 1.0], peaking mid-afternoon."""
    hours = (times_s / 3600.0) % 24.0
    shape = np.cos((hours - peak_hour) / 24.0 * 2.0 * np.pi)
    return 0.675 + 0.325 * shape


def demand_table(
    net: Network,
    base_lps: float = 40.0,
    days: float = 1.0,
    step: float = 900.0,
    start: datetime = DEFAULT_START,
    seed: int | None = 7,
    jitter: float = 0.05,
) -> TimeTable:
    """Diurnal demand trace for every demand column of ``net`` (L/s)."""
    cols = [n.demand_col for n in net.junctions if n.demand_col is not None]
    T = int(round(days * 86400.0 / step))
    times = np.arange(T) * step
    profile = diurnal_profile(times)
    rng = np.random.default_rng(seed)
    columns = {}
    for i, key in enumerate(cols):
        scale = base_lps * (0.8 + 0.4 * ((i * 29) % 10) / 10.0)
        col = scale * profile
        if seed is not None and jitter > 0:
            col = col * (1.0 + jitter * rng.standard_normal(T))
        columns[key] = np.maximum(col, 0.5)
    return TimeTable(start, times, columns, "L/s", step)


def constant_demand_table(
    net: Network,
    value_lps: float,
    T: int = 24,
    step: float = 900.0,
    start: datetime = DEFAULT_START,
) -> TimeTable:
    cols = [n.demand_col for n in net.junctions if n.demand_col is not None]
    times = np.arange(T) * step
    columns = {key: np.full(T, value_lps) for key in cols}
    return TimeTable(start, times, columns, "L/s", step)
