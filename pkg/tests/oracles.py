"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately naive: O(n^2)/O(n^3) scans, direct
formulas, no shared code with the package beyond the Point tuple.
"""

from __future__ import annotations

import math
from collections import deque
from itertools import combinations

EPS = 1e-12


def odist(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def ocircumcircle(a, b, c):
    """Center/radius by solving the perpendicular bisector equations."""
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if d == 0.0:
        raise ValueError("collinear")
    a2, b2, c2 = (a[0] ** 2 + a[1] ** 2), (b[0] ** 2 + b[1] ** 2), (c[0] ** 2 + c[1] ** 2)
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    return (ux, uy), odist((ux, uy), a)


def brute_udg_edges(points: dict, radius: float = 1.0):
    """All unordered pairs at distance <= radius, by pairwise scan."""
    ids = sorted(points)
    return {
        (u, v)
        for u, v in combinations(ids, 2)
        if odist(points[u], points[v]) <= radius * (1.0 + 1e-12)
    }


def brute_hops(points: dict, edges, src: int):
    """BFS hop counts over an undirected edge set."""
    adj: dict[int, set] = {v: set() for v in points}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    hops = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for w in adj[u]:
            if w not in hops:
                hops[w] = hops[u] + 1
                q.append(w)
    return hops


def brute_delaunay_triangles(points: dict):
    """Triangles of Del(V): circumdisk strictly empty of every other node."""
    ids = sorted(points)
    out = []
    for a, b, c in combinations(ids, 3):
        pa, pb, pc = points[a], points[b], points[c]
        try:
            center, r = ocircumcircle(pa, pb, pc)
        except ValueError:
            continue
        ok = True
        for w in ids:
            if w in (a, b, c):
                continue
            if odist(points[w], center) < r * (1.0 - 1e-12):
                ok = False
                break
        if ok:
            out.append((a, b, c))
    return out


def brute_gabriel_edges(points: dict, radius: float = 1.0):
    """UDG edges whose diametral disk is strictly empty of other nodes."""
    out = set()
    for u, v in brute_udg_edges(points, radius):
        pu, pv = points[u], points[v]
        m = ((pu[0] + pv[0]) / 2.0, (pu[1] + pv[1]) / 2.0)
        r = odist(pu, pv) / 2.0
        if all(
            odist(points[w], m) >= r * (1.0 - 1e-12)
            for w in points
            if w not in (u, v)
        ):
            out.add((u, v))
    return out


def shoelace(pts):
    area = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def brute_hull(pts):
    """Hull as sorted vertex set, via gift wrapping (Jarvis march)."""
    uniq = sorted(set(tuple(p) for p in pts))
    if len(uniq) < 3:
        return uniq

    def crs(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    start = uniq[0]
    hull = [start]
    cur = start
    while True:
        cand = None
        for q in uniq:
            if q == cur:
                continue
            if cand is None:
                cand = q
                continue
            c = crs(cur, cand, q)
            if c > 1e-12 or (abs(c) <= 1e-12 and odist(cur, q) > odist(cur, cand)):
                # q is further counterclockwise (or further out on the same ray)
                cand = q
        if cand == start:
            break
        hull.append(cand)
        cur = cand
        if len(hull) > len(uniq) + 1:
            raise RuntimeError("gift wrapping failed to close")
    return sorted(hull)


def brute_hull_ccw(pts):
    """Hull as a ccw cycle starting at the lexicographic minimum.

    Reuses the gift-wrapping march (which walks clockwise) and reverses
    the cycle around its fixed starting vertex.
    """
    uniq = sorted(set(tuple(p) for p in pts))
    if len(uniq) < 3:
        return uniq

    def crs(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    start = uniq[0]
    hull = [start]
    cur = start
    while True:
        cand = None
        for q in uniq:
            if q == cur:
                continue
            if cand is None:
                cand = q
                continue
            c = crs(cur, cand, q)
            if c > 1e-12 or (abs(c) <= 1e-12 and odist(cur, q) > odist(cur, cand)):
                cand = q
        if cand == start:
            break
        hull.append(cand)
        cur = cand
        if len(hull) > len(uniq) + 1:
            raise RuntimeError("gift wrapping failed to close")
    return [hull[0]] + hull[1:][::-1]


def brute_arc_min(members, start, span):
    """Minimum id over the half-open ring arc (start -> start+span]."""
    k = len(members)
    i = members.index(start)
    return min(members[(i + s) % k] for s in range(1, span + 1))


def brute_dijkstra(points: dict, edges, src: int):
    """Plain Dijkstra with Euclidean weights over an undirected edge set."""
    import heapq

    adj: dict[int, list] = {v: [] for v in points}
    for u, v in edges:
        w = odist(points[u], points[v])
        adj[u].append((v, w))
        adj[v].append((u, w))
    dist = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, float("inf")):
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist.get(v, float("inf")) - 1e-15:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist

def path_ds_optimum(m: int) -> int:
    """Minimum dominating set size of a path with m vertices."""
    return math.ceil(m / 3)


def brute_min_path_ds(m: int) -> int:
    """Exhaustive minimum dominating set of a path, for small m."""
    best = m
    for mask in range(1 << m):
        members = [i for i in range(m) if mask >> i & 1]
        if not members:
            if m == 0:
                return 0
            continue
        covered = set()
        for i in members:
            covered.update({i - 1, i, i + 1})
        if set(range(m)) <= covered:
            best = min(best, len(members))
    return best


def brute_visible(a, b, hole_polygons):
    """Segment ab blocked iff it passes through any hole polygon's interior."""

    def seg_int(p1, p2, q1, q2):
        def crs(o, s, t):
            return (s[0] - o[0]) * (t[1] - o[1]) - (s[1] - o[1]) * (t[0] - o[0])

        d1, d2 = crs(q1, q2, p1), crs(q1, q2, p2)
        d3, d4 = crs(p1, p2, q1), crs(p1, p2, q2)
        return ((d1 > 1e-12 and d2 < -1e-12) or (d1 < -1e-12 and d2 > 1e-12)) and (
            (d3 > 1e-12 and d4 < -1e-12) or (d3 < -1e-12 and d4 > 1e-12)
        )

    def inside(p, poly):
        c = False
        n = len(poly)
        for i in range(n):
            u, v = poly[i], poly[(i + 1) % n]
            if (u[1] > p[1]) != (v[1] > p[1]):
                xi = u[0] + (p[1] - u[1]) * (v[0] - u[0]) / (v[1] - u[1])
                if p[0] < xi:
                    c = not c
        return c

    for poly in hole_polygons:
        n = len(poly)
        for i in range(n):
            if seg_int(a, b, poly[i], poly[(i + 1) % n]):
                return False
        for k in range(1, 40):
            t = k / 40.0
            mid = (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
            if inside(mid, poly):
                return False
    return True


def brute_two_hop(points: dict, radius: float = 1.0):
    """Per node: nodes at BFS distance 1 or 2 over the unit disk graph."""
    edges = brute_udg_edges(points, radius)
    out = {}
    for v in points:
        hops = brute_hops(points, edges, v)
        out[v] = {w for w, h in hops.items() if 1 <= h <= 2}
    return out


def brute_ldel2(points: dict, radius: float = 1.0):
    """Independent localized Delaunay construction.

    Gabriel edges plus edges of short triangles whose circumdisk is empty
    of the two-hop neighborhoods of the corners, then the same crossing
    resolution the implementation is required to apply.  Returns
    (edges, gabriel_edges, triangles_kept).
    """
    two_hop = brute_two_hop(points, radius)
    gabriel = brute_gabriel_edges(points, radius)
    support = {}
    kind = {}
    for e in gabriel:
        kind[e] = "gabriel"
        support[e] = 0.0
    tris = []
    ids = sorted(points)
    for a, b, c in combinations(ids, 3):
        pa, pb, pc = points[a], points[b], points[c]
        if (
            odist(pa, pb) > radius * (1 + 1e-12)
            or odist(pa, pc) > radius * (1 + 1e-12)
            or odist(pb, pc) > radius * (1 + 1e-12)
        ):
            continue
        try:
            center, r = ocircumcircle(pa, pb, pc)
        except ValueError:
            continue
        scope = two_hop[a] | two_hop[b] | two_hop[c]
        if any(
            odist(points[w], center) < r * (1.0 - 1e-12)
            for w in scope
            if w not in (a, b, c)
        ):
            continue
        tris.append((a, b, c))
        for e in ((a, b), (a, c), (b, c)):
            if e not in kind:
                kind[e] = "triangle"
                support[e] = r
            elif kind[e] == "triangle":
                support[e] = min(support[e], r)

    def crosses(e, f):
        if set(e) & set(f):
            return False
        p1, p2 = points[e[0]], points[e[1]]
        q1, q2 = points[f[0]], points[f[1]]

        def crs(o, s, t):
            return (s[0] - o[0]) * (t[1] - o[1]) - (s[1] - o[1]) * (t[0] - o[0])

        d1, d2 = crs(q1, q2, p1), crs(q1, q2, p2)
        d3, d4 = crs(p1, p2, q1), crs(p1, p2, q2)
        return ((d1 > 1e-12 and d2 < -1e-12) or (d1 < -1e-12 and d2 > 1e-12)) and (
            (d3 > 1e-12 and d4 < -1e-12) or (d3 < -1e-12 and d4 > 1e-12)
        )

    edges = set(kind)
    while True:
        losers = set()
        for e, f in combinations(sorted(edges), 2):
            if not crosses(e, f):
                continue
            ke, kf = kind[e], kind[f]
            if ke == "gabriel" and kf == "gabriel":
                raise AssertionError(f"gabriel edges cross: {e} {f}")
            if ke == "gabriel":
                losers.add(f)
            elif kf == "gabriel":
                losers.add(e)
            elif support[e] > support[f] + 1e-12:
                losers.add(e)
            elif support[f] > support[e] + 1e-12:
                losers.add(f)
            else:
                losers.add(max(e, f))
        if not losers:
            break
        edges -= losers
    tris = [
        t
        for t in tris
        if all(e in edges for e in ((t[0], t[1]), (t[0], t[2]), (t[1], t[2])))
    ]
    return edges, gabriel, tris


def brute_cdt(polygons):
    """Constrained Delaunay edges over polygon corners, by circle search.

    polygons: list of (id list, point list) pairs, each a convex obstacle.
    An edge survives iff some circle through its endpoints contains no
    doubly-visible witness; candidate circles are the diametral one and
    every circumcircle through a witness.  Polygon boundary edges are
    constraints and always survive.
    """
    pos = {}
    boundary = set()
    for ids, pts in polygons:
        k = len(ids)
        for i, v in enumerate(ids):
            pos[v] = pts[i]
            boundary.add(tuple(sorted((v, ids[(i + 1) % k]))))
    polys = [pts for _, pts in polygons]
    verts = sorted(pos)

    def vis(u, v):
        return tuple(sorted((u, v))) in boundary or brute_visible(pos[u], pos[v], polys)

    edges = set(boundary)
    for u, v in combinations(verts, 2):
        e = tuple(sorted((u, v)))
        if e in boundary or not vis(u, v):
            continue
        wits = [w for w in verts if w != u and w != v and vis(u, w) and vis(v, w)]
        pu, pv = pos[u], pos[v]
        centers = [((pu[0] + pv[0]) / 2.0, (pu[1] + pv[1]) / 2.0)]
        for w in wits:
            try:
                c, _ = ocircumcircle(pu, pv, pos[w])
            except ValueError:
                continue
            centers.append(c)
        for c in centers:
            r = odist(c, pu)
            if all(odist(c, pos[w]) >= r - 1e-9 for w in wits):
                edges.add(e)
                break
    return pos, edges
