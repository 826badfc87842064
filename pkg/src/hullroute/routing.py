"""Path finding over the planarized radio network.

Three layers live here. `chew_route` walks the corridor of triangles that
the straight segment between two node positions crosses, and either reaches
the far endpoint or stops on the first node of an obstructing hole. Above
it sit two waypoint graphs over the hole hulls: a full visibility graph and
a constrained-Delaunay thinning of it. `Router` ties everything together:
it classifies a query into one of five cases by hull containment, fetches
waypoints from the selected backend, realizes every leg with `chew_route`,
and drives the actual transmission through the round engine so that data
only ever rides ad hoc links.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    AssumptionViolationError,
    DispatchError,
    GeometryInconsistencyError,
    NoPathError,
    NodeLookupError,
    NotReadyError,
)
from .geometry import (
    Point,
    convex_hull_oracle,
    cross,
    dist,
    point_in_polygon,
    segment_crosses_polygon,
    segment_polygon_params,
    segments_properly_intersect,
    _on_segment,
)
from .holes import (
    KIND_INNER,
    KIND_OUTER_BOUNDARY,
    KIND_OUTER_HOLE,
    HoleRing,
    HullAbstraction,
)
from .ldel import HybridTopology, NodeId, PlanarGraph, edge_key
from .simengine import Channel, RoundEngine

CHEW_BOUND = 5.9
CASE1_BOUND_VIS = 17.7
CASE1_BOUND_ODEL = 35.37

BACKEND_VIS = "visibility"
BACKEND_ODEL = "overlay-delaunay"

_CELL = 1.0  # spatial hash pitch; edges are never longer than the radio radius


# ---------------------------------------------------------------------------
# segment walking


@dataclass(frozen=True)
class ReachedTarget:
    """The walk arrived at the node sitting on the target position."""


@dataclass(frozen=True)
class HitHoleNode:
    """The walk stopped on a node of the blocking face."""

    node: NodeId
    face: int


def _cells_of_bbox(x0: float, y0: float, x1: float, y1: float) -> Iterable[tuple[int, int]]:
    for cx in range(int(math.floor(x0 / _CELL)), int(math.floor(x1 / _CELL)) + 1):
        for cy in range(int(math.floor(y0 / _CELL)), int(math.floor(y1 / _CELL)) + 1):
            yield cx, cy


def _walk_index(g: PlanarGraph):
    """Edge/face/node buckets on a unit grid, built once per graph."""
    idx = getattr(g, "_walk_index", None)
    if idx is not None:
        return idx
    ecell: dict[tuple[int, int], list[tuple[NodeId, NodeId]]] = {}
    for u, v in g.edges:
        pu, pv = g.points[u], g.points[v]
        for c in _cells_of_bbox(min(pu.x, pv.x), min(pu.y, pv.y), max(pu.x, pv.x), max(pu.y, pv.y)):
            ecell.setdefault(c, []).append((u, v))
    fcell: dict[tuple[int, int], list[int]] = {}
    for fi, cyc in enumerate(g.faces):
        if fi == g.outer_face:
            continue
        xs = [g.points[v].x for v in cyc]
        ys = [g.points[v].y for v in cyc]
        for c in _cells_of_bbox(min(xs), min(ys), max(xs), max(ys)):
            fcell.setdefault(c, []).append(fi)
    ncell: dict[tuple[int, int], list[NodeId]] = {}
    for v, p in g.points.items():
        ncell.setdefault((int(math.floor(p.x / _CELL)), int(math.floor(p.y / _CELL))), []).append(v)
    idx = (ecell, fcell, ncell)
    g._walk_index = idx
    return idx


def _segment_cells(ps: Point, pt: Point) -> set[tuple[int, int]]:
    # sample densely enough that no crossed cell is skipped, then widen by one
    length = dist(ps, pt)
    steps = max(2, int(length / (_CELL * 0.45)) + 2)
    seen: set[tuple[int, int]] = set()
    for i in range(steps + 1):
        t = i / steps
        x = ps.x + (pt.x - ps.x) * t
        y = ps.y + (pt.y - ps.y) * t
        cx, cy = int(math.floor(x / _CELL)), int(math.floor(y / _CELL))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                seen.add((cx + dx, cy + dy))
    return seen


def _locate_face(g: PlanarGraph, p: Point) -> int:
    _, fcell, _ = _walk_index(g)
    c = (int(math.floor(p.x / _CELL)), int(math.floor(p.y / _CELL)))
    for fi in fcell.get(c, ()):
        poly = [g.points[v] for v in g.faces[fi]]
        if point_in_polygon(p, poly, strict=True):
            return fi
    return g.outer_face


def _cut_param(ps: Point, pt: Point, pu: Point, pv: Point) -> float:
    denom = (pt.x - ps.x) * (pv.y - pu.y) - (pt.y - ps.y) * (pv.x - pu.x)
    return ((pu.x - ps.x) * (pv.y - pu.y) - (pu.y - ps.y) * (pv.x - pu.x)) / denom


def _vertex_on_segment(g: PlanarGraph, s: NodeId, t: NodeId) -> NodeId | None:
    """Earliest graph vertex lying strictly inside segment st, if any."""
    ps, pt = g.points[s], g.points[t]
    _, _, ncell = _walk_index(g)
    best: tuple[float, NodeId] | None = None
    for c in _segment_cells(ps, pt):
        for v in ncell.get(c, ()):
            if v == s or v == t:
                continue
            p = g.points[v]
            if not _on_segment(p, ps, pt):
                continue
            par = ((p.x - ps.x) * (pt.x - ps.x) + (p.y - ps.y) * (pt.y - ps.y)) / dist(ps, pt) ** 2
            if 1e-9 < par < 1.0 - 1e-9 and (best is None or (par, v) < best):
                best = (par, v)
    return best[1] if best else None


def chew_route(g: PlanarGraph, s: NodeId, target: Point) -> tuple[list[NodeId], object]:
    """Walk from s toward a node position along the crossed-face corridor.

    Returns (path, outcome). The path always starts at s; on ReachedTarget
    it ends at the node occupying `target`, on HitHoleNode it ends at a node
    of the first blocked face the segment enters.
    """
    if s not in g.points:
        raise NodeLookupError(f"unknown start node {s}")
    t = g.node_at(target)
    if t == s:
        return [s], ReachedTarget()
    if g.has_edge(s, t):
        return [s, t], ReachedTarget()

    # a vertex sitting exactly on the segment splits the walk in two
    mid = _vertex_on_segment(g, s, t)
    if mid is not None:
        p1, o1 = chew_route(g, s, g.points[mid])
        if not isinstance(o1, ReachedTarget):
            return p1, o1
        p2, o2 = chew_route(g, mid, target)
        return p1 + p2[1:], o2

    ps, pt = g.points[s], g.points[t]
    ecell, _, _ = _walk_index(g)
    seen: set[tuple[NodeId, NodeId]] = set()
    cuts: list[tuple[float, tuple[NodeId, NodeId]]] = []
    for c in _segment_cells(ps, pt):
        for e in ecell.get(c, ()):
            if e in seen:
                continue
            seen.add(e)
            u, v = e
            if u in (s, t) or v in (s, t):
                continue
            if segments_properly_intersect(ps, pt, g.points[u], g.points[v]):
                cuts.append((_cut_param(ps, pt, g.points[u], g.points[v]), e))
    cuts.sort(key=lambda c: c[0])

    # face of each interval between consecutive cuts; None marks slivers
    # too thin to probe (the walk never depends on them)
    bounds = [0.0] + [c[0] for c in cuts] + [1.0]
    region_faces: list[int | None] = []
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        if hi - lo < 1e-9:
            region_faces.append(None)
            continue
        m = (lo + hi) / 2.0
        region_faces.append(_locate_face(g, Point(ps.x + (pt.x - ps.x) * m, ps.y + (pt.y - ps.y) * m)))

    blocked_at = None
    for i, fi in enumerate(region_faces):
        if fi is not None and g.is_blocked_face(fi):
            blocked_at = i
            break

    upto = len(cuts) if blocked_at is None else blocked_at
    left: list[NodeId] = [s]
    right: list[NodeId] = [s]
    for _, (u, v) in cuts[:upto]:
        lu = cross(ps, pt, g.points[u]) > 0.0
        a, b = (u, v) if lu else (v, u)
        if left[-1] != a:
            left.append(a)
        if right[-1] != b:
            right.append(b)

    if blocked_at is None:
        left.append(t)
        right.append(t)
        path = min(left, right, key=lambda p: (_polyline_length(g, p), p))
        _check_walkable(g, path)
        return path, ReachedTarget()

    if blocked_at == 0:
        # segment leaves s straight into the blocked face; s borders it
        return [s], HitHoleNode(s, region_faces[0])

    face = region_faces[blocked_at]
    cands = []
    for chain in (left, right):
        if chain[-1] in g.faces[face]:
            cands.append(chain)
    if not cands:
        raise GeometryInconsistencyError(
            f"corridor walk {s}->{t}: no chain ends on blocked face {face}"
        )
    path = min(cands, key=lambda p: (_polyline_length(g, p), p))
    _check_walkable(g, path)
    return path, HitHoleNode(path[-1], face)


def _polyline_length(g: PlanarGraph, path: Sequence[NodeId]) -> float:
    return sum(dist(g.points[a], g.points[b]) for a, b in zip(path, path[1:]))


def _check_walkable(g: PlanarGraph, path: Sequence[NodeId]) -> None:
    for a, b in zip(path, path[1:]):
        if not g.has_edge(a, b):
            raise GeometryInconsistencyError(f"corridor chain uses non-edge {a}-{b}")


# ---------------------------------------------------------------------------
# waypoint graphs over hull polygons


@dataclass(frozen=True)
class HullPolygon:
    """Convex hull of one hole, as both node ids and positions (ccw)."""

    hole_id: int
    nodes: tuple[NodeId, ...]
    pts: tuple[Point, ...]


def hull_polygon(points: Mapping[NodeId, Point], hole_id: int, hull_nodes: Sequence[NodeId]) -> HullPolygon:
    return HullPolygon(hole_id, tuple(hull_nodes), tuple(points[v] for v in hull_nodes))


@dataclass
class VisibilityGraph:
    hulls: list[HullPolygon]
    positions: dict[NodeId, Point]
    adj: dict[NodeId, dict[NodeId, float]]


@dataclass
class OverlayDelaunay:
    hulls: list[HullPolygon]
    positions: dict[NodeId, Point]
    adj: dict[NodeId, dict[NodeId, float]]
    constraints: set[tuple[NodeId, NodeId]]


def _edges_cross_transversally(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    # strict sign changes on both supporting lines; collinear overlap (two
    # hulls sharing a tangent edge) keeps interiors disjoint and is fine
    sq = dist(q1, q2) ** 2
    sp = dist(p1, p2) ** 2
    if sp == 0.0 or sq == 0.0:
        return False
    eps = 1e-12
    t1, t2 = cross(q1, q2, p1) / sq, cross(q1, q2, p2) / sq
    t3, t4 = cross(p1, p2, q1) / sp, cross(p1, p2, q2) / sp
    return ((t1 > eps and t2 < -eps) or (t1 < -eps and t2 > eps)) and (
        (t3 > eps and t4 < -eps) or (t3 < -eps and t4 > eps)
    )


def _check_disjoint(hulls: Sequence[HullPolygon]) -> None:
    """Reject hull pairs whose interiors overlap; shared edges are allowed."""
    for i, a in enumerate(hulls):
        for b in hulls[i + 1 :]:
            bad = False
            for p in a.pts:
                if point_in_polygon(p, b.pts, strict=True):
                    bad = True
            for p in b.pts:
                if point_in_polygon(p, a.pts, strict=True):
                    bad = True
            na, nb = len(a.pts), len(b.pts)
            for ia in range(na):
                mid = Point(
                    (a.pts[ia].x + a.pts[(ia + 1) % na].x) / 2.0,
                    (a.pts[ia].y + a.pts[(ia + 1) % na].y) / 2.0,
                )
                if point_in_polygon(mid, b.pts, strict=True):
                    bad = True
                for ib in range(nb):
                    if _edges_cross_transversally(
                        a.pts[ia], a.pts[(ia + 1) % na], b.pts[ib], b.pts[(ib + 1) % nb]
                    ):
                        bad = True
            if bad:
                raise AssumptionViolationError(
                    f"hulls {a.hole_id} and {b.hole_id} intersect"
                )


def _blocked(a: Point, b: Point, hulls: Sequence[HullPolygon]) -> bool:
    return any(segment_crosses_polygon(a, b, h.pts) for h in hulls)


def _hull_vertex_sets(hulls: Sequence[HullPolygon]):
    positions: dict[NodeId, Point] = {}
    boundary: set[tuple[NodeId, NodeId]] = set()
    for h in hulls:
        k = len(h.nodes)
        for i, v in enumerate(h.nodes):
            positions[v] = h.pts[i]
            if k >= 2:
                boundary.add(edge_key(v, h.nodes[(i + 1) % k]))
    return positions, boundary


def build_visibility_graph(hulls: Sequence[HullPolygon]) -> VisibilityGraph:
    """All-pairs visibility over hull vertices; hull edges always included."""
    _check_disjoint(hulls)
    positions, boundary = _hull_vertex_sets(hulls)
    adj: dict[NodeId, dict[NodeId, float]] = {v: {} for v in positions}
    verts = sorted(positions)
    for i, u in enumerate(verts):
        for v in verts[i + 1 :]:
            if edge_key(u, v) in boundary or not _blocked(positions[u], positions[v], hulls):
                w = dist(positions[u], positions[v])
                adj[u][v] = w
                adj[v][u] = w
    return VisibilityGraph(list(hulls), positions, adj)


def _angle_at(w: Point, u: Point, v: Point) -> float:
    ax, ay = u.x - w.x, u.y - w.y
    bx, by = v.x - w.x, v.y - w.y
    na = math.hypot(ax, ay)
    nb = math.hypot(bx, by)
    if na == 0.0 or nb == 0.0:
        return math.pi
    c = (ax * bx + ay * by) / (na * nb)
    return math.acos(max(-1.0, min(1.0, c)))


def build_overlay_delaunay(hulls: Sequence[HullPolygon]) -> OverlayDelaunay:
    """Constrained Delaunay over hull vertices with hull edges forced.

    An edge uv admits an empty circle among the witness set iff the largest
    inscribed angle on its left plus the largest on its right stays below
    pi. Witnesses are restricted to vertices visible from both endpoints,
    which is what confines circles to the free space around the hulls.
    """
    _check_disjoint(hulls)
    positions, boundary = _hull_vertex_sets(hulls)
    verts = sorted(positions)
    n = len(verts)
    vis: dict[tuple[NodeId, NodeId], bool] = {}
    for i, u in enumerate(verts):
        for v in verts[i + 1 :]:
            e = edge_key(u, v)
            vis[e] = e in boundary or not _blocked(positions[u], positions[v], hulls)

    kept: list[tuple[NodeId, NodeId]] = []
    for i, u in enumerate(verts):
        for v in verts[i + 1 :]:
            e = edge_key(u, v)
            if not vis[e]:
                continue
            if e in boundary:
                kept.append(e)
                continue
            pu, pv = positions[u], positions[v]
            max_l = 0.0
            max_r = 0.0
            ok = True
            for w in verts:
                if w == u or w == v:
                    continue
                if not (vis[edge_key(u, w)] and vis[edge_key(v, w)]):
                    continue
                pw = positions[w]
                side = cross(pu, pv, pw)
                if abs(side) <= 1e-12:
                    if _on_segment(pw, pu, pv):
                        ok = False  # a point on the chord defeats every circle
                        break
                    continue
                ang = _angle_at(pw, pu, pv)
                if side > 0.0:
                    max_l = max(max_l, ang)
                else:
                    max_r = max(max_r, ang)
            if ok and max_l + max_r < math.pi - 1e-12:
                kept.append(e)

    # planarity pass: constraints always win; among the rest the longer
    # edge of a crossing pair dies, ties by lexicographic order
    def length(e):
        return dist(positions[e[0]], positions[e[1]])

    kept_sorted = sorted(kept, key=lambda e: (e not in boundary, length(e), e))
    final: list[tuple[NodeId, NodeId]] = []
    for e in kept_sorted:
        pa, pb = positions[e[0]], positions[e[1]]
        clash = False
        for f in final:
            if segments_properly_intersect(pa, pb, positions[f[0]], positions[f[1]]):
                clash = True
                break
        if not clash:
            final.append(e)

    if n >= 3 and len(final) > 3 * n - 6:
        raise GeometryInconsistencyError(
            f"overlay edge count {len(final)} exceeds planar bound for {n} vertices"
        )
    adj: dict[NodeId, dict[NodeId, float]] = {v: {} for v in positions}
    for u, v in final:
        w = length((u, v))
        adj[u][v] = w
        adj[v][u] = w
    return OverlayDelaunay(list(hulls), positions, adj, set(boundary))


_TEMP_SRC = -1
_TEMP_DST = -2


def overlay_shortest_path(graph, src: Point | NodeId, dst: Point | NodeId) -> list[Point]:
    """Euclidean shortest waypoint chain, lexicographic tie-break.

    Non-vertex endpoints are inserted temporarily with visibility edges to
    every graph vertex (and, when both ends are temporary, to each other).
    """
    pos: dict[NodeId, Point] = dict(graph.positions)
    adj: dict[NodeId, dict[NodeId, float]] = {v: dict(nb) for v, nb in graph.adj.items()}

    def insert(x: Point, tmp: NodeId) -> NodeId:
        pos[tmp] = x
        adj[tmp] = {}
        for v, p in graph.positions.items():
            if not _blocked(x, p, graph.hulls):
                w = dist(x, p)
                adj[tmp][v] = w
                adj[v][tmp] = w
        return tmp

    def resolve(x: Point | NodeId, tmp: NodeId) -> NodeId:
        if isinstance(x, Point):
            return insert(x, tmp)
        if x not in graph.positions:
            raise NodeLookupError(f"{x} is not an overlay vertex")
        return x

    a = resolve(src, _TEMP_SRC)
    b = resolve(dst, _TEMP_DST)
    if a == _TEMP_SRC and b == _TEMP_DST and pos[a] != pos[b]:
        if not _blocked(pos[a], pos[b], graph.hulls):
            w = dist(pos[a], pos[b])
            adj[a][b] = w
            adj[b][a] = w
    if a == b or pos[a] == pos[b]:
        return [pos[a]]

    # carry the node sequence in the heap so equal lengths settle on the
    # lexicographically smallest sequence
    heap: list[tuple[float, tuple[NodeId, ...]]] = [(0.0, (a,))]
    settled: set[NodeId] = set()
    while heap:
        d, seq = heapq.heappop(heap)
        v = seq[-1]
        if v in settled:
            continue
        settled.add(v)
        if v == b:
            return [pos[q] for q in seq]
        for w in sorted(adj[v]):
            if w not in settled:
                heapq.heappush(heap, (d + adj[v][w], seq + (w,)))
    raise NoPathError(f"overlay disconnects {src} from {dst}")


# ---------------------------------------------------------------------------
# five-way dispatcher


@dataclass
class RouteResult:
    path: list[NodeId]
    euclidean_length: float
    udg_shortest: float
    straight_line: float
    competitive_ratio: float
    case_taken: str
    rounds_used: int
    longrange_msgs: int
    backend: str = BACKEND_VIS
    e_route: int = 0
    legs: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class _RingCtx:
    """A classified ring plus everything routing needs about it."""

    ring: HoleRing
    abstraction: HullAbstraction
    polygon: HullPolygon
    ring_pts: list[Point]
    pos_of: dict[NodeId, int]
    hull_set: set[NodeId]
    bay_polys: list[list[Point]]
    # outer-hole rings are open arcs: their chord is virtual, walks on the
    # members list must never wrap across it
    closed: bool = True


class Router:
    """Five-case router over a frozen set of hull abstractions."""

    def __init__(
        self,
        g: PlanarGraph,
        rings: Sequence[HoleRing],
        abstractions: Mapping[int, HullAbstraction],
        backend: str = BACKEND_VIS,
    ):
        if backend not in (BACKEND_VIS, BACKEND_ODEL):
            raise DispatchError(f"unknown backend {backend!r}")
        self.g = g
        self.backend = backend
        self.obstacles: list[_RingCtx] = []
        self.outer: _RingCtx | None = None
        self._face_ring: dict[frozenset, _RingCtx] = {}
        for ring in rings:
            if ring.kind is None:
                raise NotReadyError(f"ring {ring.ring_id} not classified yet")
            ab = abstractions.get(ring.ring_id)
            if ab is None:
                raise NotReadyError(f"ring {ring.ring_id} has no hull abstraction")
            ctx = self._make_ctx(ring, ab)
            if ring.kind == KIND_OUTER_BOUNDARY:
                self.outer = ctx
            else:
                self.obstacles.append(ctx)
                if ring.kind == KIND_INNER:
                    self._face_ring[frozenset(ring.members)] = ctx
        if self.outer is None:
            raise NotReadyError("outer boundary ring missing")
        hulls = [c.polygon for c in self.obstacles]
        self.vis = build_visibility_graph(hulls)
        self.odel = build_overlay_delaunay(hulls)

    # -- construction helpers ----------------------------------------------

    def _make_ctx(self, ring: HoleRing, ab: HullAbstraction) -> _RingCtx:
        pts = [self.g.points[v] for v in ring.members]
        poly = hull_polygon(self.g.points, ring.ring_id, ab.hull_nodes)
        pos_of = {v: i for i, v in enumerate(ring.members)}
        bay_polys = []
        for bay in ab.bay_areas:
            a, b = bay.edge
            bay_polys.append(
                [self.g.points[a]]
                + [self.g.points[v] for v in bay.members]
                + [self.g.points[b]]
            )
        return _RingCtx(
            ring, ab, poly, pts, pos_of, set(ab.hull_nodes), bay_polys,
            closed=ring.kind != KIND_OUTER_HOLE,
        )

    @property
    def waypoint_graph(self):
        return self.vis if self.backend == BACKEND_VIS else self.odel

    # -- placement ----------------------------------------------------------

    def locate(self, v: NodeId) -> tuple[_RingCtx, int | None] | None:
        """(ring context, bay index) when v lies strictly inside a hull."""
        p = self.g.points[v]
        for ctx in self.obstacles:
            if not point_in_polygon(p, ctx.polygon.pts, strict=True):
                continue
            for bi, bay in enumerate(ctx.abstraction.bay_areas):
                if v in bay.members:
                    return ctx, bi
            for bi, poly in enumerate(ctx.bay_polys):
                if len(poly) >= 3 and point_in_polygon(p, poly, strict=False):
                    return ctx, bi
            return ctx, None
        return None

    def _ring_of_face(self, face: int) -> _RingCtx:
        if face == self.g.outer_face:
            return self.outer
        ctx = self._face_ring.get(frozenset(self.g.faces[face]))
        if ctx is None:
            raise GeometryInconsistencyError(f"blocked face {face} matches no ring")
        return ctx

    # -- ring walking ---------------------------------------------------------

    def _ring_walk(self, ctx: _RingCtx, a: NodeId, b: NodeId) -> list[NodeId]:
        """Hop along the ring from a to b the short way (ties toward smaller id)."""
        members = ctx.ring.members
        k = len(members)
        ia, ib = ctx.pos_of[a], ctx.pos_of[b]
        if ia == ib:
            return [a]
        if not ctx.closed:
            step = 1 if ib > ia else -1
            return members[ia : ib + step if ib + step >= 0 else None : step]
        fwd = (ib - ia) % k
        bwd = (ia - ib) % k
        if fwd < bwd or (fwd == bwd and members[(ia + 1) % k] < members[(ia - 1) % k]):
            return [members[(ia + i) % k] for i in range(fwd + 1)]
        return [members[(ia - i) % k] for i in range(bwd + 1)]

    def _nearest_hull(self, ctx: _RingCtx, v: NodeId) -> list[NodeId]:
        """Ring path from v to its closest hull node in hops, ties by id."""
        if v in ctx.hull_set:
            return [v]
        members = ctx.ring.members
        k = len(members)
        i = ctx.pos_of[v]
        offsets = range(1, k)
        for d in offsets:
            cands = []
            for j in (i + d, i - d):
                if ctx.closed:
                    j %= k
                elif not (0 <= j < k):
                    continue
                if members[j] in ctx.hull_set:
                    cands.append(members[j])
            if cands:
                return self._ring_walk(ctx, v, min(cands))
        raise GeometryInconsistencyError(f"ring {ctx.ring.ring_id} has no hull node")

    # -- leg realization -----------------------------------------------------

    def _leg(self, cur: NodeId, tgt: NodeId) -> tuple[list[NodeId], HitHoleNode | None]:
        """Chew toward tgt; recover along the ring when both live on the hit ring."""
        path, out = chew_route(self.g, cur, self.g.points[tgt])
        if isinstance(out, ReachedTarget):
            return path, None
        ctx = self._ring_of_face(out.face)
        if tgt in ctx.pos_of and out.node in ctx.pos_of:
            walk = self._ring_walk(ctx, out.node, tgt)
            return path + walk[1:], None
        return path, out

    # -- case 1: both endpoints outside all hulls ------------------------------

    def _route_outside(self, s: NodeId, t: NodeId) -> tuple[list[NodeId], str, list[tuple[float, float]]]:
        path, out = chew_route(self.g, s, self.g.points[t])
        if isinstance(out, ReachedTarget):
            return path, "Visible", []
        legs: list[tuple[float, float]] = []
        budget = 4 * len(self.obstacles) + 8
        graph = self.waypoint_graph
        while budget > 0:
            budget -= 1
            ctx = self._ring_of_face(out.face)
            walk = self._nearest_hull(ctx, out.node)
            path += walk[1:]
            h0 = path[-1]
            src = h0 if h0 in graph.positions else self.g.points[h0]
            wps = overlay_shortest_path(graph, src, self.g.points[t])
            done = True
            for wa, wb in zip(wps, wps[1:]):
                a_node = self.g.node_at(wa)
                b_node = self.g.node_at(wb)
                leg_path, hit = self._leg(a_node, b_node)
                path += leg_path[1:]
                if hit is not None:
                    out = hit  # re-plan from the new hole node
                    done = False
                    break
                legs.append((dist(wa, wb), _polyline_length(self.g, leg_path)))
            if done:
                return path, "Case1", legs
        raise NoPathError(f"waypoint replanning budget exhausted between {s} and {t}")

    # -- machinery inside one bay -----------------------------------------

    def _bay_core(self, ctx: _RingCtx, bay_idx: int | None, a: NodeId, b: NodeId) -> tuple[list[NodeId], int]:
        """Route a→b when the straight segment stays inside one bay area."""
        pa, pb = self.g.points[a], self.g.points[b]
        path, out = chew_route(self.g, a, pb)
        if isinstance(out, ReachedTarget):
            return path, 0
        h0 = out.node
        if h0 not in ctx.pos_of:
            raise NoPathError(
                f"bay walk {a}->{b} stopped on node {h0} outside ring {ctx.ring.ring_id}"
            )
        ds = self._bay_ds(ctx, bay_idx)

        params = [u for u in segment_polygon_params(pa, pb, ctx.ring_pts) if 1e-9 < u < 1.0 - 1e-9]
        if params:
            s_pt = Point(pa.x + (pb.x - pa.x) * params[0], pa.y + (pb.y - pa.y) * params[0])
            t_pt = Point(pa.x + (pb.x - pa.x) * params[-1], pa.y + (pb.y - pa.y) * params[-1])
        else:
            s_pt = t_pt = self.g.points[h0]
        p1 = self._ds_nearest(ctx, ds, s_pt)
        pt_node = self._ds_nearest(ctx, ds, t_pt)

        sub = self._bay_subpath(ctx, bay_idx, p1, pt_node)
        extremes = self._extreme_points(ctx, sub)
        e_t = next(
            (e for e in extremes if not segment_crosses_polygon(self.g.points[e], pb, ctx.ring_pts)),
            extremes[-1] if extremes else None,
        )
        chain = extremes[: extremes.index(e_t) + 1] if e_t is not None else []

        walk = self._ring_walk(ctx, h0, p1)
        path += walk[1:]
        cur = path[-1]
        for tgt in chain + [b]:
            if cur == tgt:
                continue
            leg_path, hit = self._leg(cur, tgt)
            if hit is not None:
                raise NoPathError(f"bay leg {cur}->{tgt} blocked at {hit.node}")
            path += leg_path[1:]
            cur = tgt
        return path, len(chain)

    def _bay_ds(self, ctx: _RingCtx, bay_idx: int | None) -> set[NodeId]:
        if bay_idx is not None:
            ds = ctx.abstraction.dominating_sets.get(bay_idx)
            if ds:
                return ds
        merged: set[NodeId] = set()
        for d in ctx.abstraction.dominating_sets.values():
            merged |= d
        return merged or set(ctx.ring.members)

    def _ds_nearest(self, ctx: _RingCtx, ds: set[NodeId], target: Point) -> NodeId:
        """DS node with fewest ring hops to the boundary point, ties by id."""
        members = ctx.ring.members
        k = len(members)
        anchor = None
        for i in range(k):
            if _on_segment(target, self.g.points[members[i]], self.g.points[members[(i + 1) % k]]):
                anchor = (i, (i + 1) % k)
                break
        if anchor is None:
            # target off the boundary (degenerate grazing); fall back to euclid
            return min(ds, key=lambda v: (dist(self.g.points[v], target), v))

        def hops(v: NodeId) -> int:
            iv = ctx.pos_of[v]
            if ctx.closed:
                return min(min((iv - j) % k, (j - iv) % k) for j in anchor)
            return min(abs(iv - j) for j in anchor)

        return min(ds, key=lambda v: (hops(v), v))

    def _bay_subpath(self, ctx: _RingCtx, bay_idx: int | None, p1: NodeId, pt: NodeId) -> list[NodeId]:
        """Boundary nodes from P1 to Pt, trimmed to the bay when one is known."""
        if bay_idx is not None:
            bay = ctx.abstraction.bay_areas[bay_idx]
            strip = [bay.edge[0], *bay.members, bay.edge[1]]
            if p1 in strip and pt in strip:
                i, j = strip.index(p1), strip.index(pt)
                return strip[i : j + 1] if i <= j else strip[j : i + 1][::-1]
        return self._ring_walk(ctx, p1, pt)

    def _extreme_points(self, ctx: _RingCtx, sub: Sequence[NodeId]) -> list[NodeId]:
        """Convex hull of the sub-path, ordered by position along it."""
        uniq = list(dict.fromkeys(sub))
        if len(uniq) <= 2:
            return uniq
        pts = {v: self.g.points[v] for v in uniq}
        try:
            hull = convex_hull_oracle(list(pts.values()))
        except Exception:
            return [uniq[0], uniq[-1]]
        hull_set = {(p.x, p.y) for p in hull}
        order = {v: i for i, v in enumerate(uniq)}
        ex = [v for v in uniq if (pts[v].x, pts[v].y) in hull_set]
        ex.sort(key=lambda v: order[v])
        return ex

    # -- bay exits for cases 2-4 -----------------------------------------------

    def _bay_exit(self, ctx: _RingCtx, bay_idx: int | None, x: NodeId, toward: Point) -> NodeId:
        if bay_idx is None:
            return min(
                ctx.hull_set,
                key=lambda h: (dist(self.g.points[x], self.g.points[h]) + dist(self.g.points[h], toward), h),
            )
        a, b = ctx.abstraction.bay_areas[bay_idx].edge
        px = self.g.points[x]
        return min(
            (a, b),
            key=lambda h: (dist(px, self.g.points[h]) + dist(self.g.points[h], toward), h),
        )

    # -- public queries ----------------------------------------------------------

    def route(self, engine: RoundEngine, s: NodeId, t: NodeId) -> RouteResult:
        if getattr(engine, "_phase", None) is not None:
            raise NotReadyError("route query during a protocol phase")
        if s not in self.g.points or t not in self.g.points:
            raise NodeLookupError(f"route endpoints {s},{t} not in graph")
        if s == t:
            return RouteResult([s], 0.0, 0.0, 0.0, 1.0, "Visible", 0, 0, self.backend)

        ls, lt = self.locate(s), self.locate(t)
        if ls is None and lt is None:
            case = "Case1"  # refined to Visible by _route_outside
        elif ls is not None and lt is not None:
            if ls[0] is lt[0]:
                case = "Case5" if ls[1] == lt[1] and ls[1] is not None else "Case4"
            else:
                case = "Case3"
        else:
            case = "Case2"

        try:
            path, case, legs, e_route = self._dispatch(case, s, t, ls, lt)
        except (NoPathError, GeometryInconsistencyError, DispatchError) as exc:
            raise type(exc)(f"{case}: {exc}") from exc

        path = _dedup_consecutive(path)
        _check_walkable(self.g, path)
        rounds, lr = self._transmit(engine, s, t, path)
        return self._finish(engine.topo, s, t, path, case, rounds, lr, legs, e_route)

    def _dispatch(self, case, s, t, ls, lt):
        pt_s = self.g.points[s]
        pt_t = self.g.points[t]
        if case == "Case1":
            path, case, legs = self._route_outside(s, t)
            return path, case, legs, 0
        if case == "Case5":
            ctx, bay = ls
            path, e_route = self._bay_core(ctx, bay, s, t)
            return path, case, [], e_route
        if case == "Case4":
            ctx = ls[0]
            exit_s = self._bay_exit(ctx, ls[1], s, pt_t)
            exit_t = self._bay_exit(ctx, lt[1], t, pt_s)
            return self._via_exits(s, t, exit_s, exit_t, ls, lt, case)
        if case == "Case3":
            exit_s = self._bay_exit(ls[0], ls[1], s, pt_t)
            exit_t = self._bay_exit(lt[0], lt[1], t, pt_s)
            return self._via_exits(s, t, exit_s, exit_t, ls, lt, case)
        # Case2: exactly one endpoint inside
        if ls is not None:
            exit_s = self._bay_exit(ls[0], ls[1], s, pt_t)
            return self._via_exits(s, t, exit_s, None, ls, None, case)
        exit_t = self._bay_exit(lt[0], lt[1], t, pt_s)
        return self._via_exits(s, t, None, exit_t, None, lt, case)

    def _via_exits(self, s, t, exit_s, exit_t, ls, lt, case):
        """Inside legs via bay machinery, outside leg via case-1 machinery."""
        path: list[NodeId] = [s]
        legs: list[tuple[float, float]] = []
        e_route = 0
        if exit_s is not None and exit_s != s:
            p, e = self._bay_core(ls[0], ls[1], s, exit_s)
            path += p[1:]
            e_route += e
        a = path[-1]
        b = exit_t if exit_t is not None else t
        if a != b:
            p, _, lg = self._route_outside(a, b)
            path += p[1:]
            legs += lg
        if exit_t is not None and exit_t != t:
            p, e = self._bay_core(lt[0], lt[1], exit_t, t)
            # core computed exit->t; our path already sits at exit
            path += p[1:]
            e_route += e
        return path, case, legs, e_route

    def route_bay(self, engine: RoundEngine, s: NodeId, t: NodeId) -> RouteResult:
        if getattr(engine, "_phase", None) is not None:
            raise NotReadyError("route query during a protocol phase")
        if s not in self.g.points or t not in self.g.points:
            raise NodeLookupError(f"route endpoints {s},{t} not in graph")
        if s == t:
            return RouteResult([s], 0.0, 0.0, 0.0, 1.0, "Case5", 0, 0, self.backend)
        ls, lt = self.locate(s), self.locate(t)
        if ls is None or lt is None or ls[0] is not lt[0] or ls[1] != lt[1] or ls[1] is None:
            raise DispatchError(f"{s} and {t} do not share a bay")
        path, e_route = self._bay_core(ls[0], ls[1], s, t)
        path = _dedup_consecutive(path)
        _check_walkable(self.g, path)
        rounds, lr = self._transmit(engine, s, t, path)
        res = self._finish(engine.topo, s, t, path, "Case5", rounds, lr, [], e_route)
        bound = (2 + e_route) * CHEW_BOUND
        if res.competitive_ratio > bound + 1e-9:
            raise GeometryInconsistencyError(
                f"Case5: ratio {res.competitive_ratio:.3f} exceeds (2+{e_route})*5.9"
            )
        return res

    # -- engine traffic -----------------------------------------------------------

    def _transmit(self, engine: RoundEngine, s: NodeId, t: NodeId, path: Sequence[NodeId]) -> tuple[int, int]:
        # position handshake: one long-range round trip
        engine.send(s, t, None, channel=Channel.LONGRANGE, tag="rt_query")
        engine.step_round()
        engine.collect(t)
        engine.send(t, s, {"x": self.g.points[t].x, "y": self.g.points[t].y},
                    channel=Channel.LONGRANGE, tag="rt_pos")
        engine.step_round()
        engine.collect(s)
        # data rides ad hoc links only, one hop per round
        for i, (u, v) in enumerate(zip(path, path[1:])):
            engine.send(u, v, {"seq": i}, channel=Channel.ADHOC, tag="rt_data")
            engine.step_round()
            engine.collect(v)
        return 2 + (len(path) - 1), 2

    def _finish(self, topo, s, t, path, case, rounds, lr, legs, e_route) -> RouteResult:
        if path[0] != s or path[-1] != t:
            raise GeometryInconsistencyError(f"{case}: path endpoints {path[0]},{path[-1]} != {s},{t}")
        length = _polyline_length(self.g, path)
        sl = dist(self.g.points[s], self.g.points[t])
        d = _udg_shortest(topo, s, t)
        ratio = length / d if d > 0 else 1.0
        return RouteResult(list(path), length, d, sl, ratio, case, rounds, lr,
                           self.backend, e_route, legs)


def _dedup_consecutive(path: Sequence[NodeId]) -> list[NodeId]:
    out: list[NodeId] = []
    for v in path:
        if not out or out[-1] != v:
            out.append(v)
    return out


def _udg_shortest(topo: HybridTopology, s: NodeId, t: NodeId) -> float:
    """Edge-weighted Dijkstra over the unit-disk adjacency."""
    if s == t:
        return 0.0
    points = topo.points
    nbrs = topo.adhoc
    dist_to = {s: 0.0}
    heap = [(0.0, s)]
    while heap:
        d, v = heapq.heappop(heap)
        if v == t:
            return d
        if d > dist_to.get(v, math.inf):
            continue
        for w in nbrs.get(v, ()):
            nd = d + dist(points[v], points[w])
            if nd < dist_to.get(w, math.inf) - 1e-15:
                dist_to[w] = nd
                heapq.heappush(heap, (nd, w))
    raise NoPathError(f"no unit-disk path between {s} and {t}")


def measure_competitiveness(topo: HybridTopology, results: Sequence[RouteResult]) -> dict:
    """Recompute d(s,t) on the unit-disk graph and aggregate ratios per case.

    Uses a sparse all-pairs-from-sources Dijkstra so big batches stay cheap.
    """
    import numpy as np
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as cs_dijkstra

    ids = sorted(topo.points)
    index = {v: i for i, v in enumerate(ids)}
    rows, cols, vals = [], [], []
    for v in ids:
        for w in topo.adhoc.get(v, ()):
            rows.append(index[v])
            cols.append(index[w])
            vals.append(dist(topo.points[v], topo.points[w]))
    mat = csr_matrix((vals, (rows, cols)), shape=(len(ids), len(ids)))

    sources = sorted({r.path[0] for r in results if r.path})
    src_row = {v: i for i, v in enumerate(sources)}
    dmat = cs_dijkstra(mat, directed=False, indices=[index[v] for v in sources])

    per_case: dict[str, dict] = {}
    overall_max = 0.0
    for r in results:
        if not r.path:
            continue
        s, t = r.path[0], r.path[-1]
        d = float(dmat[src_row[s], index[t]])
        if not np.isfinite(d):
            raise NoPathError(f"no unit-disk path between {s} and {t}")
        r.udg_shortest = d
        r.competitive_ratio = r.euclidean_length / d if d > 0 else 1.0
        slot = per_case.setdefault(r.case_taken, {"count": 0, "max_ratio": 0.0, "sum": 0.0})
        slot["count"] += 1
        slot["max_ratio"] = max(slot["max_ratio"], r.competitive_ratio)
        slot["sum"] += r.competitive_ratio
        overall_max = max(overall_max, r.competitive_ratio)
    for slot in per_case.values():
        slot["mean_ratio"] = slot["sum"] / slot["count"]
        del slot["sum"]
    return {"per_case": per_case, "max_ratio": overall_max, "count": len(results)}
