"""Line-oriented sectioned network file format.

Sections, whitespace-delimited fields, ``#`` starts a comment:

    [NODES]    id  elevation_m  kind(junction|fixed_head)  [demand_col|-]  [outlet_class|-]
    [PIPES]    id  from  to  length_m  diameter_mm  material  roughness_mm
    [SOURCES]  node_id  [head_m]          # boundary-head override for fixed-head nodes
    [OUTLETS]  node_id  diameter_class    # alternative to the inline NODES field

Unknown sections are skipped with a warning. The parser raises structured
:class:`~hydronet.errors.NetworkFileError` subclasses and never lets raw
``ValueError``/``IndexError`` escape, whatever the input bytes.
"""

from __future__ import annotations

import math
import warnings

from .errors import (
    DanglingReferenceError,
    DataError,
    DuplicateIdError,
    NetworkFileError,
    NetworkSyntaxError,
)
from .network import FIXED_HEAD, JUNCTION, Network, Node, Pipe

KNOWN_SECTIONS = ("NODES", "PIPES", "SOURCES", "OUTLETS")

_PLACEHOLDER = "-"


def _parse_float(token: str, what: str, line_no: int, col: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NetworkSyntaxError(f"{what}: not a number: {token!r}", line_no, col) from None
    if math.isnan(value):
        raise NetworkSyntaxError(f"{what}: NaN not allowed", line_no, col)
    return value


def parse_network(text: str) -> Network:
    """Parse network-file content into a validated :class:`Network`."""
    if not isinstance(text, str):
        raise NetworkFileError("network file content must be text")

    nodes: list[Node] = []
    node_lines: dict[str, int] = {}
    pipes: list[Pipe] = []
    sources: list[tuple[str, float]] = []
    outlet_decls: dict[str, tuple[str, int]] = {}

    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise NetworkSyntaxError("unterminated section header", line_no)
            name = line[1:-1].strip().upper()
            if name not in KNOWN_SECTIONS:
                warnings.warn(f"ignoring unknown section [{name}] at line {line_no}")
                section = "IGNORED"
            else:
                section = name
            continue
        if section is None:
            raise NetworkSyntaxError("data before any section header", line_no)
        if section == "IGNORED":
            continue

        tokens = line.split()
        if section == "NODES":
            if len(tokens) < 3 or len(tokens) > 5:
                raise NetworkSyntaxError(
                    f"expected 'id elevation kind [demand_col] [outlet_class]', got {len(tokens)} fields",
                    line_no,
                )
            node_id = tokens[0]
            elevation = _parse_float(tokens[1], "elevation", line_no, 2)
            kind = tokens[2]
            if kind not in (JUNCTION, FIXED_HEAD):
                raise NetworkSyntaxError(
                    f"kind must be 'junction' or 'fixed_head', got {kind!r}", line_no, 3
                )
            demand_col = None
            if len(tokens) >= 4 and tokens[3] != _PLACEHOLDER:
                demand_col = tokens[3]
            outlet_class = None
            if len(tokens) == 5 and tokens[4] != _PLACEHOLDER:
                outlet_class = tokens[4]
            if node_id in node_lines:
                raise DuplicateIdError("node", node_id)
            node_lines[node_id] = line_no
            try:
                nodes.append(
                    Node(node_id, elevation, kind, demand_col=demand_col,
                         outlet_class=outlet_class)
                )
            except DataError as exc:
                raise NetworkSyntaxError(str(exc), line_no) from None
        elif section == "PIPES":
            if len(tokens) != 7:
                raise NetworkSyntaxError(
                    f"expected 'id from to length diameter_mm material roughness_mm', got {len(tokens)} fields",
                    line_no,
                )
            length = _parse_float(tokens[3], "length", line_no, 4)
            diameter_mm = _parse_float(tokens[4], "diameter", line_no, 5)
            roughness = _parse_float(tokens[6], "roughness", line_no, 7)
            try:
                pipes.append(
                    Pipe(tokens[0], tokens[1], tokens[2], length,
                         diameter_mm / 1000.0, tokens[5], roughness)
                )
            except DataError as exc:
                raise NetworkSyntaxError(str(exc), line_no) from None
        elif section == "SOURCES":
            if len(tokens) not in (1, 2):
                raise NetworkSyntaxError("expected 'node_id [head_m]'", line_no)
            head = None
            if len(tokens) == 2:
                head = _parse_float(tokens[1], "head", line_no, 2)
            sources.append((tokens[0], head))
        elif section == "OUTLETS":
            if len(tokens) != 2:
                raise NetworkSyntaxError("expected 'node_id diameter_class'", line_no)
            prev = outlet_decls.get(tokens[0])
            if prev is not None and prev[0] != tokens[1]:
                raise NetworkSyntaxError(
                    f"outlet {tokens[0]!r} redeclared with class {tokens[1]!r} "
                    f"(was {prev[0]!r} at line {prev[1]})",
                    line_no,
                )
            outlet_decls[tokens[0]] = (tokens[1], line_no)

    node_ids = {n.id for n in nodes}
    for node_id, (cls, line_no) in outlet_decls.items():
        if node_id not in node_ids:
            raise DanglingReferenceError(node_id, f"outlet declaration at line {line_no}")

    merged: list[Node] = []
    for n in nodes:
        decl = outlet_decls.get(n.id)
        if decl is None:
            merged.append(n)
            continue
        cls, line_no = decl
        if n.outlet_class is not None and n.outlet_class != cls:
            raise NetworkSyntaxError(
                f"outlet class conflict for {n.id!r}: {n.outlet_class!r} vs {cls!r}",
                line_no,
            )
        try:
            merged.append(
                Node(n.id, n.elevation, n.kind, demand_col=n.demand_col, outlet_class=cls)
            )
        except DataError as exc:
            raise NetworkSyntaxError(str(exc), line_no) from None

    resolved_sources = []
    elev = {n.id: n.elevation for n in merged}
    for node_id, head in sources:
        resolved_sources.append((node_id, elev.get(node_id, 0.0) if head is None else head))

    return Network(tuple(merged), tuple(pipes), tuple(resolved_sources))


def _scaled_repr(value: float, scale: float) -> str:
    """Decimal text t with float(t)/scale == value, for exact reparses."""
    w = value * scale
    if w / scale == value:
        return repr(w)
    step = math.ulp(w)
    for k in range(1, 64):
        for cand in (w + k * step, w - k * step):
            if cand / scale == value:
                return repr(cand)
    return repr(w)  # unreachable for finite inputs in practice


def serialize_network(net: Network) -> str:
    """Render a network in canonical file form (reparses to an equal Network)."""
    lines = ["[NODES]"]
    for n in net.nodes:
        lines.append(
            f"{n.id} {n.elevation!r} {n.kind} "
            f"{n.demand_col if n.demand_col is not None else _PLACEHOLDER} "
            f"{n.outlet_class if n.outlet_class is not None else _PLACEHOLDER}"
        )
    lines.append("[PIPES]")
    for p in net.pipes:
        lines.append(
            f"{p.id} {p.from_node} {p.to_node} {p.length!r} "
            f"{_scaled_repr(p.diameter, 1000.0)} {p.material} {p.roughness!r}"
        )
    if net.source_heads:
        lines.append("[SOURCES]")
        for node_id, head in net.source_heads:
            lines.append(f"{node_id} {head!r}")
    return "\n".join(lines) + "\n"


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        return parse_network(fh.read())


def save_network(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_network(net))
