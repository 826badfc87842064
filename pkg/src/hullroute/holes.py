"""Boundary rings: detection, orientation, outer holes, hulls, and bays.

A planarized graph ends up with two kinds of interesting faces: bounded
faces of four or more corners (the network grew around an obstacle) and
the outer face.  Both become rings here.  Classification tells them
apart by the sign of the total turn angle accumulated while walking the
ring, computed by the distributed protocols of the overlay module, so
the result is something the nodes themselves could know.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AssumptionViolationError,
    EmbeddingCorruptionError,
    GeometryInconsistencyError,
)
from .geometry import (
    Point,
    convex_hull_oracle,
    dist,
    polygon_perimeter,
    polygon_signed_area,
)
from .ldel import NodeId, PlanarGraph
from .overlay import (
    PointerJumpResult,
    RingProtocolResult,
    dominating_set,
    pointer_jumping,
    rank_ring,
    ring_protocol,
)
from .simengine import RoundEngine

KIND_INNER = "InnerHole"
KIND_OUTER_BOUNDARY = "OuterBoundary"
KIND_OUTER_HOLE = "OuterHole"

ANGLE_TOL = 1e-6


@dataclass
class HoleRing:
    """One boundary cycle, in the orientation the embedding walks it."""

    ring_id: int
    members: list[NodeId]
    kind: str | None = None
    orientation_sum: float = 0.0
    perimeter_length: float = 0.0
    enclosed_area: float = 0.0
    bounding_box_circumference: float = 0.0


@dataclass
class Bay:
    """Ring nodes strictly between two adjacent hull nodes."""

    edge: tuple[NodeId, NodeId]
    members: list[NodeId]


@dataclass
class HullAbstraction:
    ring_id: int
    hull_nodes: list[NodeId]  # counterclockwise
    bay_areas: list[Bay] = field(default_factory=list)
    dominating_sets: dict[int, set[NodeId]] = field(default_factory=dict)


def detect_boundary_nodes(g: PlanarGraph) -> set[NodeId]:
    """Nodes incident to any face of size >= 4, plus the outer face."""
    out: set[NodeId] = set()
    for fi, face in enumerate(g.faces):
        if fi == g.outer_face or len(face) >= 4:
            out.update(face)
    return out


def _measured_ring(rid: int, members: list[NodeId], points: dict[NodeId, Point]) -> HoleRing:
    pts = [points[v] for v in members]
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return HoleRing(
        ring_id=rid,
        members=list(members),
        perimeter_length=polygon_perimeter(pts),
        enclosed_area=abs(polygon_signed_area(pts)),
        bounding_box_circumference=2.0 * ((max(xs) - min(xs)) + (max(ys) - min(ys))),
    )


def form_rings(g: PlanarGraph, boundary: set[NodeId]) -> list[HoleRing]:
    """One ring per hole face and one for the outer face.

    Face walks come from the rotation system, which is the centralized
    equivalent of every node sorting its boundary neighbors by angle.
    The successor chain is re-verified edge by edge.
    """
    rings: list[HoleRing] = []
    for fi, face in enumerate(g.faces):
        if fi != g.outer_face and len(face) < 4:
            continue
        members = list(face)
        if len(set(members)) != len(members):
            raise AssumptionViolationError(
                f"face {fi} revisits a node; boundary cycles must be simple"
            )
        for i, u in enumerate(members):
            w = members[(i + 1) % len(members)]
            if not g.has_edge(u, w):
                raise EmbeddingCorruptionError(
                    f"ring successor {u}->{w} is not an edge of the graph"
                )
        rings.append(_measured_ring(len(rings), members, g.points))
    covered = set()
    for r in rings:
        covered.update(r.members)
    if covered != boundary:
        raise EmbeddingCorruptionError(
            "boundary nodes and ring membership disagree: "
            f"{sorted(boundary ^ covered)}"
        )
    return rings


def classify_rings(
    engine: RoundEngine, rings: list[HoleRing]
) -> dict[int, PointerJumpResult]:
    """Run election + exact ranking on each ring; set kind by angle sum.

    Rings run one after another through the engine.  Returns the jump
    results keyed by ring_id so later stages reuse the election.
    """
    jumps: dict[int, PointerJumpResult] = {}
    for r in rings:
        jump = pointer_jumping(engine, r.members)
        rank_ring(engine, r.members, jump)
        jumps[r.ring_id] = jump
        r.orientation_sum = jump.angle_total
        if abs(jump.angle_total - 360.0) <= ANGLE_TOL:
            r.kind = KIND_OUTER_BOUNDARY
        elif abs(jump.angle_total + 360.0) <= ANGLE_TOL:
            r.kind = KIND_INNER
        else:
            raise GeometryInconsistencyError(
                f"ring {r.ring_id} turn-angle total {jump.angle_total:.9f} "
                "is neither +360 nor -360"
            )
    return jumps


def hull_node_ids(points: dict[NodeId, Point], members: list[NodeId]) -> list[NodeId]:
    """Centralized hull of the member positions, as ccw node ids."""
    at = {points[v]: v for v in members}
    if len(at) != len(members):
        raise AssumptionViolationError("coincident ring nodes")
    return [at[p] for p in convex_hull_oracle([points[v] for v in members])]


def _hull_arcs(ring: HoleRing, hull_nodes: list[NodeId]) -> list[tuple[int, int]]:
    """Ring index ranges [a_i, b_i] between hull nodes adjacent on the ring.

    Hull vertices of a simple closed curve appear along the curve in
    hull order, so consecutive ring positions of hull nodes are exactly
    the hull edges.
    """
    k = len(ring.members)
    pos = {v: i for i, v in enumerate(ring.members)}
    missing = [h for h in hull_nodes if h not in pos]
    if missing:
        raise AssumptionViolationError(f"hull nodes {missing} not on ring")
    idxs = sorted(pos[h] for h in hull_nodes)
    return [
        (a, b)
        for a, b in zip(idxs, idxs[1:] + [idxs[0] + k])
    ]


def detect_outer_holes(
    g: PlanarGraph,
    outer: HoleRing,
    hull_nodes: list[NodeId] | None = None,
    radius: float = 1.0,
    first_id: int = 0,
) -> list[HoleRing]:
    """Sub-paths of the outer boundary under hull edges longer than radius.

    The hull edge itself is a virtual closing edge: the resulting ring
    is the boundary arc plus that chord, so perimeter and area are the
    closed polygon's.
    """
    if outer.kind != KIND_OUTER_BOUNDARY:
        raise AssumptionViolationError("outer holes hang off the outer boundary")
    if hull_nodes is None:
        hull_nodes = hull_node_ids(g.points, outer.members)
    k = len(outer.members)
    out: list[HoleRing] = []
    for a_i, b_i in _hull_arcs(outer, hull_nodes):
        a = outer.members[a_i % k]
        b = outer.members[b_i % k]
        if dist(g.points[a], g.points[b]) <= radius:
            continue
        arc = [outer.members[j % k] for j in range(a_i, b_i + 1)]
        ring = _measured_ring(first_id + len(out), arc, g.points)
        ring.kind = KIND_OUTER_HOLE
        ring.orientation_sum = 360.0 if polygon_signed_area(
            [g.points[v] for v in arc]
        ) < 0 else -360.0
        out.append(ring)
    return out


def compute_bays(ring: HoleRing, hull_nodes: list[NodeId]) -> list[Bay]:
    """One bay per adjacent hull pair with ring nodes strictly between."""
    k = len(ring.members)
    bays: list[Bay] = []
    for a_i, b_i in _hull_arcs(ring, hull_nodes):
        between = [ring.members[j % k] for j in range(a_i + 1, b_i)]
        if between:
            bays.append(Bay((ring.members[a_i % k], ring.members[b_i % k]), between))
    return bays


def build_hull_abstraction(
    engine: RoundEngine,
    ring: HoleRing,
    jump: PointerJumpResult | None = None,
    seed: int = 0,
) -> tuple[HullAbstraction, RingProtocolResult]:
    """Distributed hull, bays, and one dominating set per bay."""
    proto = ring_protocol(engine, ring.members, jump)
    bays = compute_bays(ring, proto.hull)
    sets: dict[int, set[NodeId]] = {}
    for i, bay in enumerate(bays):
        sets[i], _ = dominating_set(engine, bay.members, seed * 7919 + i)
    return HullAbstraction(ring.ring_id, proto.hull, bays, sets), proto


def hole_report(
    rings: list[HoleRing], abstractions: dict[int, HullAbstraction]
) -> list[dict]:
    """Per-ring summary; JSON-ready."""
    out = []
    for r in rings:
        ha = abstractions.get(r.ring_id)
        out.append(
            {
                "kind": r.kind,
                "size": len(r.members),
                "perimeter": r.perimeter_length,
                "area": r.enclosed_area,
                "bbox_circumference": r.bounding_box_circumference,
                "hull_size": len(ha.hull_nodes) if ha else 0,
                "bay_count": len(ha.bay_areas) if ha else 0,
            }
        )
    return out
