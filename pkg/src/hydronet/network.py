"""Network domain model: nodes, pipes and incidence matrices.

Sign convention, used consistently by the solver and all tests: pipe flow is
positive from ``from_node`` to ``to_node``, and each incidence row carries
+1 at the receiving end (to) and -1 at the sending end (from). Junction
columns live in ``A1``, fixed-head columns in ``A2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DanglingReferenceError, DataError, DisconnectedNetworkError, DuplicateIdError

JUNCTION = "junction"
FIXED_HEAD = "fixed_head"

# Materials found in high-pressure irrigation mains; free-form names are
# accepted but normalized to these spellings when they match.
CANONICAL_MATERIALS = ("MSCL", "DICL", "GRP", "mPVC")
_MATERIAL_LOOKUP = {m.lower(): m for m in CANONICAL_MATERIALS}


def canonical_material(name: str) -> str:
    return _MATERIAL_LOOKUP.get(name.lower(), name)


@dataclass(frozen=True)
class Node:
    """A network node.

    ``elevation`` is the ground (or water-surface) elevation z in meters.
    ``demand_col`` names the demand time-series column feeding this junction;
    ``outlet_class`` is a nominal-diameter tag such as ``"DN150"`` and implies
    ``is_outlet``.
    """

    id: str
    elevation: float
    kind: str = JUNCTION
    demand_col: str | None = None
    is_outlet: bool = False
    outlet_class: str | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("node id must be non-empty")
        if not math.isfinite(self.elevation):
            raise DataError(f"node {self.id!r}: elevation must be finite")
        if self.kind not in (JUNCTION, FIXED_HEAD):
            raise DataError(f"node {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == FIXED_HEAD and self.demand_col is not None:
            raise DataError(f"node {self.id!r}: fixed-head nodes carry no demand")
        if self.outlet_class is not None and not self.is_outlet:
            object.__setattr__(self, "is_outlet", True)
        if self.is_outlet and self.kind != JUNCTION:
            raise DataError(f"node {self.id!r}: outlets must be junctions")


@dataclass(frozen=True)
class Pipe:
    """A pipe link. ``length`` and ``diameter`` in meters, ``roughness`` in mm."""

    id: str
    from_node: str
    to_node: str
    length: float
    diameter: float
    material: str
    roughness: float

    def __post_init__(self):
        if not self.id:
            raise DataError("pipe id must be non-empty")
        if self.length <= 0 or not math.isfinite(self.length):
            raise DataError(f"pipe {self.id!r}: length must be > 0")
        if self.diameter <= 0 or not math.isfinite(self.diameter):
            raise DataError(f"pipe {self.id!r}: diameter must be > 0")
        if self.roughness < 0 or not math.isfinite(self.roughness):
            raise DataError(f"pipe {self.id!r}: roughness must be >= 0")
        if self.from_node == self.to_node:
            raise DataError(f"pipe {self.id!r}: from and to nodes must differ")
        if not self.material:
            raise DataError(f"pipe {self.id!r}: material must be assigned")
        object.__setattr__(self, "material", canonical_material(self.material))

    @property
    def area(self) -> float:
        """Cross-sectional area in m2."""
        return math.pi * self.diameter**2 / 4.0


def build_incidence(nodes: list[Node], pipes: list[Pipe]) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Build the (P x N) junction and (P x F) fixed-head incidence matrices.

    Row i holds +1 in the column of pipe i's to-node and -1 in the column of
    its from-node, each entry landing in A1 or A2 according to the node kind.
    """
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                raise DuplicateIdError("node", i)
            seen.add(i)
    junctions = [n for n in nodes if n.kind == JUNCTION]
    fixed = [n for n in nodes if n.kind == FIXED_HEAD]
    jidx = {n.id: k for k, n in enumerate(junctions)}
    fidx = {n.id: k for k, n in enumerate(fixed)}

    P = len(pipes)
    rows1, cols1, vals1 = [], [], []
    rows2, cols2, vals2 = [], [], []
    for i, p in enumerate(pipes):
        for node_id, sign in ((p.to_node, 1.0), (p.from_node, -1.0)):
            if node_id in jidx:
                rows1.append(i); cols1.append(jidx[node_id]); vals1.append(sign)
            elif node_id in fidx:
                rows2.append(i); cols2.append(fidx[node_id]); vals2.append(sign)
            else:
                raise DanglingReferenceError(node_id, f"pipe {p.id!r}")
    A1 = sp.csr_matrix((vals1, (rows1, cols1)), shape=(P, len(junctions)))
    A2 = sp.csr_matrix((vals2, (rows2, cols2)), shape=(P, len(fixed)))
    return A1, A2


@dataclass(frozen=True)
class Network:
    """Immutable pipe network with cached incidence matrices.

    Construction validates ids, endpoint references and reachability: every
    junction must be reachable from at least one fixed-head node, otherwise
    the hydraulic system is singular.
    """

    nodes: tuple[Node, ...]
    pipes: tuple[Pipe, ...]
    source_heads: tuple[tuple[str, float], ...] = ()  # optional boundary-head overrides

    # derived fields, filled in __post_init__
    junctions: tuple[Node, ...] = field(init=False, compare=False, repr=False)
    fixed_nodes: tuple[Node, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "pipes", tuple(self.pipes))
        object.__setattr__(self, "source_heads", tuple(self.source_heads))
        junctions = tuple(n for n in self.nodes if n.kind == JUNCTION)
        fixed = tuple(n for n in self.nodes if n.kind == FIXED_HEAD)
        object.__setattr__(self, "junctions", junctions)
        object.__setattr__(self, "fixed_nodes", fixed)

        pids = set()
        for p in self.pipes:
            if p.id in pids:
                raise DuplicateIdError("pipe", p.id)
            pids.add(p.id)

        A1, A2 = build_incidence(list(self.nodes), list(self.pipes))
        object.__setattr__(self, "_A1", A1)
        object.__setattr__(self, "_A2", A2)
        object.__setattr__(self, "_jindex", {n.id: k for k, n in enumerate(junctions)})
        object.__setattr__(self, "_findex", {n.id: k for k, n in enumerate(fixed)})

        known = {n.id for n in self.nodes}
        for node_id, head in self.source_heads:
            if node_id not in known:
                raise DanglingReferenceError(node_id, "source entry")
            if node_id not in self._findex:
                raise DataError(f"source entry {node_id!r} is not a fixed-head node")
            if not math.isfinite(head):
                raise DataError(f"source entry {node_id!r}: head must be finite")

        if fixed and junctions:
            self._check_reachability()
        elif junctions and not fixed:
            raise DisconnectedNetworkError([n.id for n in junctions])

    def _check_reachability(self):
        adj: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for p in self.pipes:
            adj[p.from_node].append(p.to_node)
            adj[p.to_node].append(p.from_node)
        seen = {n.id for n in self.fixed_nodes}
        stack = list(seen)
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        missing = [n.id for n in self.junctions if n.id not in seen]
        if missing:
            raise DisconnectedNetworkError(missing)

    # -- shape ---------------------------------------------------------------

    @property
    def n_pipes(self) -> int:
        return len(self.pipes)

    @property
    def n_junctions(self) -> int:
        return len(self.junctions)

    @property
    def n_fixed(self) -> int:
        return len(self.fixed_nodes)

    @property
    def A1(self) -> sp.csr_matrix:
        return self._A1

    @property
    def A2(self) -> sp.csr_matrix:
        return self._A2

    # -- lookups -------------------------------------------------------------

    def junction_index(self, node_id: str) -> int:
        try:
            return self._jindex[node_id]
        except KeyError:
            raise KeyError(f"no junction named {node_id!r}") from None

    def fixed_index(self, node_id: str) -> int:
        try:
            return self._findex[node_id]
        except KeyError:
            raise KeyError(f"no fixed-head node named {node_id!r}") from None

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"no node named {node_id!r}")

    @property
    def outlets(self) -> tuple[Node, ...]:
        return tuple(n for n in self.junctions if n.is_outlet)

    @property
    def materials(self) -> tuple[str, ...]:
        """Distinct pipe materials in first-appearance order."""
        seen: dict[str, None] = {}
        for p in self.pipes:
            seen.setdefault(p.material, None)
        return tuple(seen)

    def roughness_mm(self) -> np.ndarray:
        return np.array([p.roughness for p in self.pipes], dtype=float)

    def pipe_lengths(self) -> np.ndarray:
        return np.array([p.length for p in self.pipes], dtype=float)

    def pipe_diameters(self) -> np.ndarray:
        return np.array([p.diameter for p in self.pipes], dtype=float)

    def pipe_materials(self) -> list[str]:
        return [p.material for p in self.pipes]

    def junction_elevations(self) -> np.ndarray:
        return np.array([n.elevation for n in self.junctions], dtype=float)

    def default_boundary_heads(self) -> np.ndarray:
        """Per fixed-head node: declared source head, or its elevation."""
        heads = np.array([n.elevation for n in self.fixed_nodes], dtype=float)
        for node_id, head in self.source_heads:
            heads[self._findex[node_id]] = head
        return heads
