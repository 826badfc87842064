"""Long-range overlay protocols over hole rings.

Everything here runs as node handlers inside the round engine: pointer
jumping for leader election and jump-edge construction, an exact
list-ranking pass for ring size and angle totals, hypercube id
assignment, bitonic sorting across the (padded) hypercube, distributed
convex hull by tangent merging, a broadcast tree over all nodes, hull
reference distribution, and the per-bay dominating set.

Ring nodes address each other only through ids they have learned:
successors are radio neighbors, every longer link is created by an
explicit introduction riding a protocol message.  The engine rejects
any send that violates this, so the legality argument is enforced, not
assumed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import SimulationAbortError
from .geometry import Orientation, Point, orientation, signed_turn_angle
from .ldel import NodeId
from .simengine import Message, RoundEngine


@dataclass(frozen=True)
class JumpEdge:
    """Overlay edge bridging 2^level consecutive ring nodes.

    ell is the minimum node id over the bridged arc, half open: the arc
    behind `endpoints[1]` back to but excluding `endpoints[0]`.
    angle_sum carries the signed turn-angle sum over the same arc.
    """

    endpoints: tuple[NodeId, NodeId]
    ell: NodeId
    level: int
    angle_sum: float


@dataclass
class PointerJumpResult:
    leader: NodeId
    jump_edges: list[JumpEdge]
    jump_rounds: int
    known_min: dict[NodeId, NodeId]
    messages_per_node: dict[NodeId, int]
    # filled by the ranking pass
    angle_total: float = 0.0
    ring_size: int = 0
    suffix_angle: dict[NodeId, float] = field(default_factory=dict)
    suffix_count: dict[NodeId, int] = field(default_factory=dict)


@dataclass
class HypercubeOverlay:
    dimension: int
    id_map: dict[NodeId, int]
    leader: NodeId
    members: list[NodeId]  # by ring rank; rank == hypercube slot

    @property
    def slots(self) -> int:
        return 1 << self.dimension

    def host_of(self, slot: int) -> NodeId:
        if slot < len(self.members):
            return self.members[slot]
        return self.leader  # virtual padding slot

    def bitstring(self, v: NodeId) -> str:
        return format(self.id_map[v], f"0{self.dimension}b")


@dataclass
class BroadcastTree:
    root: NodeId
    parent: dict[NodeId, NodeId]
    children: dict[NodeId, list[NodeId]]
    height: int
    max_degree: int


def _ring_maps(members: list[NodeId]) -> tuple[dict, dict]:
    k = len(members)
    succ = {members[i]: members[(i + 1) % k] for i in range(k)}
    pred = {members[i]: members[(i - 1) % k] for i in range(k)}
    return succ, pred


def _turn_angles(points: dict[NodeId, Point], members: list[NodeId]) -> dict[NodeId, float]:
    succ, pred = _ring_maps(members)
    return {
        v: signed_turn_angle(points[pred[v]], points[v], points[succ[v]])
        for v in members
    }


# ---------------------------------------------------------------------------
# pointer jumping


def pointer_jumping(engine: RoundEngine, members: list[NodeId]) -> PointerJumpResult:
    """Leader election by pointer doubling along the ring.

    Every round each active node introduces its current successor to its
    current predecessor and vice versa, doubling the bridged span.  A
    node is done when the minimum id on its predecessor side equals the
    one on its successor side, which forces both to be the global
    minimum.  Done nodes serve one extra round so late partners still
    receive their final update.
    """
    k = len(members)
    pts = engine.topo.points
    succ0, pred0 = _ring_maps(members)
    angle = _turn_angles(pts, members)
    member_set = set(members)

    st: dict[NodeId, dict] = {}
    for v in members:
        st[v] = {
            "succ": succ0[v],
            "pred": pred0[v],
            "l_succ": succ0[v],  # min id over (v -> succ]
            "l_pred": v,  # min id over (pred -> v]
            "a_succ": angle[succ0[v]],
            "a_pred": angle[v],
            "level": 0,
            "done": False,
            "lame": 0,
            "msgs": 0,
        }
    edges: list[JumpEdge] = [
        JumpEdge((v, succ0[v]), st[v]["l_succ"], 0, st[v]["a_succ"]) for v in members
    ]
    jump_rounds = 0

    def check_done(s: dict) -> None:
        if not s["done"] and s["l_pred"] == s["l_succ"]:
            s["done"] = True
            s["lame"] = 1  # one farewell round of intros

    for v in members:
        check_done(st[v])  # k == 1 degenerate guard; rings are >= 3

    def handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        if v not in member_set:
            return True
        s = st[v]
        grew = False
        for m in inbox:
            d = m.payload
            if m.tag == "pj_succ":
                # sender was our successor; its successor becomes ours
                s["l_succ"] = min(s["l_succ"], d["ell"])
                s["a_succ"] += d["a"]
                s["succ"] = d["nid"]
                s["level"] += 1
                edges.append(JumpEdge((v, s["succ"]), s["l_succ"], s["level"], s["a_succ"]))
                grew = True
            elif m.tag == "pj_pred":
                s["l_pred"] = min(s["l_pred"], d["ell"])
                s["a_pred"] += d["a"]
                s["pred"] = d["nid"]
        if grew or inbox:
            check_done(s)
        if s["done"] and s["lame"] == 0:
            return True
        if s["done"]:
            s["lame"] -= 1
        # a pointer equal to v has wrapped the whole ring: nothing to bridge
        if s["pred"] != v:
            eng.send(
                v,
                s["pred"],
                {"nid": s["succ"], "ell": s["l_succ"], "a": s["a_succ"]},
                tag="pj_succ",
                intro_ids=(s["succ"],),
            )
            s["msgs"] += 1
        if s["succ"] != v:
            eng.send(
                v,
                s["succ"],
                {"nid": s["pred"], "ell": s["l_pred"], "a": s["a_pred"]},
                tag="pj_pred",
                intro_ids=(s["pred"],),
            )
            s["msgs"] += 1
        return False

    report = engine.run_phase("pointer_jumping", handler, max_rounds=2 * k + 8)
    jump_rounds = report.rounds - 1  # final round only flushes deliveries
    leader = min(members)
    for v in members:
        if st[v]["l_pred"] != leader or st[v]["l_succ"] != leader:
            raise SimulationAbortError(v, engine.round_no, "ring min did not converge")
    return PointerJumpResult(
        leader=leader,
        jump_edges=edges,
        jump_rounds=max(jump_rounds, 1),
        known_min={v: st[v]["l_pred"] for v in members},
        messages_per_node={v: st[v]["msgs"] for v in members},
    )


# ---------------------------------------------------------------------------
# exact ranking pass (suffix sums toward the leader)


def rank_ring(
    engine: RoundEngine, members: list[NodeId], result: PointerJumpResult
) -> None:
    """List ranking anchored at the leader, by request/reply doubling.

    The ring is cut at the leader: every node accumulates the turn-angle
    sum and node count of the arc from itself forward to the node just
    before the leader.  The leader's own chain wraps the full ring, so
    it ends up with the exact ring size and total angle, independent of
    whether the size is a power of two.
    """
    pts = engine.topo.points
    angle = _turn_angles(pts, members)
    succ0, _ = _ring_maps(members)
    leader = result.leader
    member_set = set(members)

    st = {
        v: {"nxt": succ0[v], "a": angle[v], "c": 1, "pending": False, "msgs": 0}
        for v in members
    }

    def handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        s = st[v]
        replies = []
        for m in inbox:
            if m.tag == "rk_req":
                replies.append(m.src)
            elif m.tag == "rk_rep":
                d = m.payload
                s["a"] += d["a"]
                s["c"] += d["c"]
                s["nxt"] = d["nxt"]
                s["pending"] = False
        # a reply ships our current (a, c, nxt); chains never wrap past
        # the leader, so the requester's arc and ours are contiguous and
        # the composition is exact under any interleaving
        for dst in replies:
            eng.send(
                v,
                dst,
                {"a": s["a"], "c": s["c"], "nxt": s["nxt"]},
                tag="rk_rep",
                intro_ids=(s["nxt"],),
            )
            s["msgs"] += 1
        if not s["pending"] and s["nxt"] != leader:
            eng.send(v, s["nxt"], None, tag="rk_req")
            s["pending"] = True
            s["msgs"] += 1
        return s["nxt"] == leader

    member_only = {v: st[v] for v in members}

    def guard(eng, v, inbox):
        if v not in member_set:
            return True
        return handler(eng, v, inbox)

    engine.run_phase("ring_ranking", guard, max_rounds=6 * len(members) + 16)
    result.suffix_angle = {v: member_only[v]["a"] for v in members}
    result.suffix_count = {v: member_only[v]["c"] for v in members}
    result.angle_total = member_only[leader]["a"]
    result.ring_size = member_only[leader]["c"]
    if result.ring_size != len(members):
        raise SimulationAbortError(
            leader, engine.round_no, "ranking pass lost nodes on the ring"
        )


# ---------------------------------------------------------------------------
# hypercube id assignment


def assign_hypercube_ids(
    engine: RoundEngine, members: list[NodeId], result: PointerJumpResult
) -> HypercubeOverlay:
    """Recursive rank distribution from the leader over jump edges.

    The node bridged by the leader's level-j jump edge receives the id
    with bit j set, then hands out ids below its own budget bit to its
    own jump neighbors.  Ranks at or past the ring size are virtual
    slots hosted by the leader.  The received rank must agree with the
    ranking pass; any mismatch is a protocol bug and aborts.
    """
    k = result.ring_size
    leader = result.leader
    d = max(1, math.ceil(math.log2(k)))
    # ring order rotated so the leader is rank 0
    succ0, _ = _ring_maps(members)
    ordered = [leader]
    while len(ordered) < k:
        ordered.append(succ0[ordered[-1]])
    rank_of = {v: i for i, v in enumerate(ordered)}
    member_set = set(members)

    assigned: dict[NodeId, int] = {leader: 0}
    budget: dict[NodeId, int] = {leader: d}
    seeded = {leader}

    def fanout(eng: RoundEngine, v: NodeId) -> None:
        b = budget[v]
        r = assigned[v]
        for i in range(b):
            tr = r + (1 << i)
            if tr >= k:
                continue
            target = ordered[tr]
            eng.send(
                v,
                target,
                {"rank": tr, "budget": i, "k": k, "d": d, "T": result.angle_total},
                tag="hc_assign",
            )

    def handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        if v not in member_set:
            return True
        for m in inbox:
            if m.tag != "hc_assign":
                continue
            if v in assigned:
                raise SimulationAbortError(v, eng.round_no, "duplicate hypercube id")
            got = m.payload["rank"]
            if rank_of[v] != got:
                raise SimulationAbortError(
                    v, eng.round_no, f"rank mismatch: dealt {got}, ranked {rank_of[v]}"
                )
            assigned[v] = got
            budget[v] = m.payload["budget"]
            fanout(eng, v)
        if v == leader and v not in seeded_done:
            seeded_done.add(v)
            fanout(eng, v)
        return v in assigned or v not in member_set

    seeded_done: set[NodeId] = set()
    engine.run_phase("hypercube_ids", handler, max_rounds=2 * d + 6)
    if len(assigned) != k or len(set(assigned.values())) != k:
        raise SimulationAbortError(leader, engine.round_no, "id assignment incomplete")
    return HypercubeOverlay(dimension=d, id_map=assigned, leader=leader, members=ordered)


# ---------------------------------------------------------------------------
# bitonic sort over the padded hypercube


SENTINEL = (math.inf, math.inf, -1)


def hypercube_sort(
    engine: RoundEngine,
    cube: HypercubeOverlay,
    keys: dict[NodeId, tuple],
) -> tuple[list[tuple], int]:
    """Batcher bitonic sort; slot i ends holding the i-th smallest key.

    Exactly d(d+1)/2 compare-exchange stages, each a one round-trip
    exchange between slots differing in one bit.  The lower slot always
    initiates; virtual slots (leader-hosted, sentinel keys) never
    initiate toward a real slot because real slots occupy the lowest
    indices.  Returns (keys by slot, stage count).
    """
    d = cube.dimension
    n = cube.slots
    slot_key: list[tuple] = [
        tuple(keys[cube.host_of(s)]) if s < len(cube.members) else SENTINEL
        for s in range(n)
    ]
    hosts = set(cube.members) | {cube.leader}
    stages = 0

    for kblk in range(1, d + 1):
        for j in range(kblk - 1, -1, -1):
            stages += 1
            dist = 1 << j
            started: set[NodeId] = set()

            def stage_handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
                if v not in hosts:
                    return True
                if v not in started:
                    started.add(v)
                    for i in range(n):
                        partner = i ^ dist
                        if partner < i or cube.host_of(i) != v:
                            continue
                        hj = cube.host_of(partner)
                        asc = ((i >> kblk) & 1) == 0
                        if hj == v:
                            a, b = slot_key[i], slot_key[partner]
                            if (asc and a > b) or (not asc and a < b):
                                slot_key[i], slot_key[partner] = b, a
                        else:
                            kid = int(slot_key[i][2])
                            eng.send(
                                v,
                                hj,
                                {"slot": i, "asc": asc, "key": list(slot_key[i])},
                                tag="bs_key",
                                # the key's owner id travels with the key
                                intro_ids=(kid,) if kid >= 0 else (),
                            )
                for m in inbox:
                    if m.tag == "bs_key":
                        i, asc = m.payload["slot"], m.payload["asc"]
                        ki = tuple(m.payload["key"])
                        jslot = i ^ dist
                        kj = slot_key[jslot]
                        lo, hi = (ki, kj) if ki <= kj else (kj, ki)
                        keep, give = (hi, lo) if asc else (lo, hi)
                        slot_key[jslot] = keep
                        gid = int(give[2])
                        eng.send(
                            v,
                            m.src,
                            {"slot": i, "key": list(give)},
                            tag="bs_ret",
                            intro_ids=(gid,) if gid >= 0 else (),
                        )
                    elif m.tag == "bs_ret":
                        slot_key[m.payload["slot"]] = tuple(m.payload["key"])
                return True

            engine.run_phase(f"bitonic_{kblk}_{j}", stage_handler, max_rounds=4)

    return slot_key, stages


# ---------------------------------------------------------------------------
# distributed convex hull by tangent merging


def _side(a, b, q) -> int:
    o = orientation(Point(a[0], a[1]), Point(b[0], b[1]), Point(q[0], q[1]))
    if o is Orientation.LEFT:
        return 1
    if o is Orientation.RIGHT:
        return -1
    return 0


def _point_tangent(pt, chain: list, s: int) -> int:
    """Index of the tangent foot from external pt onto an x-sorted chain.

    No chain vertex may lie strictly on side s of the line pt->foot.
    Among collinear candidates the largest index wins, which drops
    interior collinear vertices from the merged chain.
    """
    best = -1
    for i in range(len(chain)):
        ok = True
        for j, q in enumerate(chain):
            if j != i and _side(pt, chain[i], q) == s:
                ok = False
                break
        if ok:
            best = i
    if best < 0:
        raise SimulationAbortError(-1, -1, "no tangent foot found")
    return best


def _local_bridge(ac: list, bc: list, s: int) -> tuple[int, int]:
    """Exact bridge between two x-sorted chains; fallback path.

    Valid bridge: no vertex of either chain strictly on side s of the
    bridge line.  Tie-breaks keep the smallest A index and the largest
    B index so collinear interior vertices are excluded.
    """
    for i in range(len(ac)):
        for j in range(len(bc) - 1, -1, -1):
            a, b = ac[i], bc[j]
            good = True
            for q in ac:
                if q is not a and _side(a, b, q) == s:
                    good = False
                    break
            if good:
                for q in bc:
                    if q is not b and _side(a, b, q) == s:
                        good = False
                        break
            if good:
                return i, j
    raise SimulationAbortError(-1, -1, "no bridge found")


def parallel_convex_hull(
    engine: RoundEngine,
    cube: HypercubeOverlay,
    slot_keys: list[tuple],
) -> tuple[list[NodeId], dict[NodeId, Point]]:
    """Divide and conquer over subcube dimensions.

    Each block keeps its sub-hull as upper/lower x-sorted chains at the
    block's lowest slot.  Merging two blocks finds the upper and lower
    common tangents: the left leader binary-searches its own chain,
    probing the right leader, which answers tangent feet from single
    points locally.  A failed search ships the right chains whole and
    merges locally, preserving round bounds at the price of one big
    message.  After the last merge the ring leader broadcasts the hull
    back over the jump-edge tree.
    """
    d = cube.dimension
    n = cube.slots
    k = len(cube.members)
    chains: dict[int, dict[str, list]] = {}
    for s in range(n):
        key = slot_keys[s]
        if key[2] >= 0:
            pt = [key[0], key[1], key[2]]
            chains[s] = {"u": [pt], "l": [pt]}
        else:
            chains[s] = {"u": [], "l": []}

    hosts = set(cube.members) | {cube.leader}

    for level in range(1, d + 1):
        half = 1 << (level - 1)
        pairs: dict[int, dict] = {}
        for base in range(0, n, 1 << level):
            pairs[base] = {
                "bslot": base + half,
                "A": cube.host_of(base),
                "B": cube.host_of(base + half),
                "stage": "init",
                "side": 1,
                "lo": 0,
                "hi": 0,
                "probes": 0,
                "feet": {},
            }
        started: set[NodeId] = set()

        def _a_probe(eng, v, base, p):
            au = chains[base]["u" if p["side"] == 1 else "l"]
            if p["lo"] > p["hi"] or p["probes"] > 2 * (len(au).bit_length() + 2):
                p["stage"] = "ship"
                eng.send(v, p["B"], {"base": base}, tag="hs")
                return
            mid = (p["lo"] + p["hi"]) // 2
            p["mid"] = mid
            p["probes"] += 1
            eng.send(
                v,
                p["B"],
                {"base": base, "side": p["side"], "pt": au[mid][:2]},
                tag="hp",
            )

        def _a_found(eng, v, base, p, jb):
            p["feet"][p["side"]] = (p["mid"], jb)
            if p["side"] == 1:
                p["side"] = -1
                p["lo"], p["hi"] = 0, len(chains[base]["l"]) - 1
                p["probes"] = 0
                _a_probe(eng, v, base, p)
            else:
                ju = p["feet"][1][1]
                jl = p["feet"][-1][1]
                p["stage"] = "suffix"
                eng.send(v, p["B"], {"base": base, "ju": ju, "jl": jl}, tag="hq")

        def _assemble(base, p, bu, bl):
            iu = p["feet"][1][0]
            il = p["feet"][-1][0]
            chains[base]["u"] = chains[base]["u"][: iu + 1] + bu
            chains[base]["l"] = chains[base]["l"][: il + 1] + bl
            p["stage"] = "done"

        def merge_handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
            if v not in hosts:
                return True
            if v not in started:
                started.add(v)
                for base, p in pairs.items():
                    if p["A"] != v or p["stage"] != "init":
                        continue
                    bslot = p["bslot"]
                    if p["A"] == p["B"]:
                        # right block hosted by the same node (virtual slots):
                        # merge locally, message-free
                        bu, bl = chains[bslot]["u"], chains[bslot]["l"]
                        if not chains[base]["u"]:
                            chains[base] = {"u": list(bu), "l": list(bl)}
                            p["stage"] = "done"
                        elif not bu:
                            p["stage"] = "done"
                        else:
                            iu, ju = _local_bridge(chains[base]["u"], bu, 1)
                            il, jl = _local_bridge(chains[base]["l"], bl, -1)
                            p["feet"] = {1: (iu, ju), -1: (il, jl)}
                            _assemble(base, p, bu[ju:], bl[jl:])
                        continue
                    p["stage"] = "search"
                    p["lo"], p["hi"] = 0, len(chains[base]["u"]) - 1
                    _a_probe(eng, v, base, p)
            for m in inbox:
                d_ = m.payload
                base = d_["base"]
                p = pairs[base]
                if m.tag == "hp":
                    side = d_["side"]
                    bc = chains[p["bslot"]]["u" if side == 1 else "l"]
                    if not bc:
                        eng.send(v, m.src, {"base": base, "empty": True}, tag="ha")
                        continue
                    idx = _point_tangent(d_["pt"], bc, side)
                    eng.send(
                        v,
                        m.src,
                        {"base": base, "empty": False, "idx": idx, "b": bc[idx][:2]},
                        tag="ha",
                    )
                elif m.tag == "ha":
                    if d_["empty"]:
                        p["stage"] = "done"
                        continue
                    ac = chains[base]["u" if p["side"] == 1 else "l"]
                    mid, b, s = p["mid"], d_["b"], p["side"]
                    a = ac[mid]
                    nxt_bad = mid + 1 < len(ac) and _side(a, b, ac[mid + 1]) == s
                    prv_bad = mid > 0 and _side(a, b, ac[mid - 1]) == s
                    if nxt_bad:
                        p["lo"] = mid + 1
                        _a_probe(eng, v, base, p)
                    elif prv_bad:
                        p["hi"] = mid - 1
                        _a_probe(eng, v, base, p)
                    else:
                        # full-chain verification; bisection can stop at a
                        # locally-flat vertex on degenerate inputs
                        if all(
                            _side(a, b, q) != s for q in ac if q is not a
                        ):
                            # slide over collinear predecessors so the foot
                            # is the smallest valid index; keeps interior
                            # collinear vertices out of the merged chain
                            while mid > 0 and _side(ac[mid - 1], b, a) == 0:
                                mid -= 1
                                a = ac[mid]
                            p["mid"] = mid
                            _a_found(eng, v, base, p, d_["idx"])
                        else:
                            p["stage"] = "ship"
                            eng.send(v, p["B"], {"base": base}, tag="hs")
                elif m.tag == "hs":
                    bslot = pairs[base]["bslot"]
                    ids = [int(q[2]) for q in chains[bslot]["u"] + chains[bslot]["l"]]
                    eng.send(
                        v,
                        m.src,
                        {"base": base, "u": chains[bslot]["u"], "l": chains[bslot]["l"]},
                        tag="hc",
                        intro_ids=tuple(sorted(set(ids))),
                    )
                elif m.tag == "hc":
                    bu, bl = d_["u"], d_["l"]
                    if not chains[base]["u"]:
                        chains[base] = {"u": list(bu), "l": list(bl)}
                    elif bu:
                        iu, ju = _local_bridge(chains[base]["u"], bu, 1)
                        il, jl = _local_bridge(chains[base]["l"], bl, -1)
                        p["feet"] = {1: (iu, ju), -1: (il, jl)}
                        chains[base]["u"] = chains[base]["u"][: iu + 1] + bu[ju:]
                        chains[base]["l"] = chains[base]["l"][: il + 1] + bl[jl:]
                    p["stage"] = "done"
                elif m.tag == "hq":
                    bslot = pairs[base]["bslot"]
                    bu = chains[bslot]["u"][d_["ju"] :]
                    bl = chains[bslot]["l"][d_["jl"] :]
                    ids = [int(q[2]) for q in bu + bl]
                    eng.send(
                        v,
                        m.src,
                        {"base": base, "u": bu, "l": bl},
                        tag="hr",
                        intro_ids=tuple(sorted(set(ids))),
                    )
                elif m.tag == "hr":
                    _assemble(base, p, d_["u"], d_["l"])
            # the started block moved every A-side pair out of "init"
            return all(p["stage"] == "done" for p in pairs.values() if p["A"] == v)

        engine.run_phase(f"hull_merge_{level}", merge_handler, max_rounds=8 * n + 40)
        for p in pairs.values():
            if p["stage"] != "done":
                raise SimulationAbortError(p["A"], engine.round_no, "merge incomplete")

    top = chains[0]
    lower, upper = top["l"], top["u"]
    if len({tuple(q[:2]) for q in lower + upper}) < 3:
        from .errors import DegenerateInputError

        raise DegenerateInputError("hull of fewer than 3 distinct points")
    ccw = [q for q in lower] + [q for q in reversed(upper[1:-1])]
    hull_ids = [int(q[2]) for q in ccw]
    hull_pts = {int(q[2]): Point(q[0], q[1]) for q in ccw}

    # leader broadcasts the finished hull down the jump-edge binomial tree
    d_bits = cube.dimension
    payload = {"hull": [[q[0], q[1], int(q[2])] for q in ccw]}
    intro = tuple(sorted(set(hull_ids)))
    got: set[NodeId] = set()

    def bcast_handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        if v not in hosts:
            return True
        if v == cube.leader and v not in got:
            got.add(v)
            for i in range(d_bits - 1, -1, -1):
                tr = 1 << i
                if tr < k:
                    eng.send(
                        v,
                        cube.members[tr],
                        dict(payload, budget=i),
                        tag="hullb",
                        intro_ids=intro,
                    )
        for m in inbox:
            if m.tag != "hullb":
                continue
            got.add(v)
            rank = cube.id_map[v]
            for i in range(m.payload["budget"] - 1, -1, -1):
                tr = rank + (1 << i)
                if tr < k:
                    eng.send(
                        v,
                        cube.members[tr],
                        dict(payload, budget=i),
                        tag="hullb",
                        intro_ids=intro,
                    )
        return v in got

    engine.run_phase("hull_broadcast", bcast_handler, max_rounds=2 * d_bits + 6)
    if len(got) != k:
        raise SimulationAbortError(cube.leader, engine.round_no, "hull broadcast gap")
    return hull_ids, hull_pts


# ---------------------------------------------------------------------------
# broadcast tree over all nodes


def build_broadcast_tree(
    engine: RoundEngine, c1: float = 1.0
) -> BroadcastTree:
    """Balanced binary tree over node ids in heap layout.

    Stands in for the overlay-tree protocol this pipeline treats as a
    black box: the engine charges ceil(c1 * log2(n)^2) rounds for the
    construction and the tree edges are entered into the knowledge
    relation directly.
    """
    ids = engine.topo.ids
    n = len(ids)
    parent: dict[NodeId, NodeId] = {}
    children: dict[NodeId, list[NodeId]] = {v: [] for v in ids}
    for i in range(1, n):
        p = ids[(i - 1) // 2]
        parent[ids[i]] = p
        children[p].append(ids[i])
    height = n.bit_length() - 1
    max_degree = max(
        (len(children[v]) + (1 if v in parent else 0)) for v in ids
    )
    for child, p in parent.items():
        engine.topo.learn(p, child)
        engine.topo.learn(child, p)
    rounds = math.ceil(c1 * (math.log2(n) ** 2)) if n > 1 else 0
    engine.charge_rounds(rounds, "broadcast_tree")
    return BroadcastTree(
        root=ids[0], parent=parent, children=children, height=height, max_degree=max_degree
    )


def distribute_hulls(
    engine: RoundEngine,
    tree: BroadcastTree,
    hull_refs: list[tuple[NodeId, float, float, int]],
    keep_all: set[NodeId],
) -> int:
    """Flood every hull-node reference through the tree.

    Each reference travels up from its owner and down into every other
    subtree; a tree has no cycles, so nobody sees a reference twice.
    Nodes in keep_all (the hull nodes) retain every id they learn; all
    other nodes forget ids that this flood alone taught them.
    Returns the number of deliveries.
    """
    topo = engine.topo
    owners: dict[NodeId, list] = {}
    for ref in hull_refs:
        owners.setdefault(ref[0], []).append(list(ref))
    pre_known = {v: set(topo.knows[v]) for v in topo.ids}
    deliveries = 0
    seeded: set[NodeId] = set()

    def tree_neighbors(v: NodeId) -> list[NodeId]:
        out = list(tree.children[v])
        if v in tree.parent:
            out.append(tree.parent[v])
        return out

    def handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        nonlocal deliveries
        if v not in seeded:
            seeded.add(v)
            for ref in owners.get(v, []):
                for nb in tree_neighbors(v):
                    eng.send(v, nb, {"ref": ref}, tag="href", intro_ids=(ref[0],))
        drop: set[NodeId] = set()
        for m in inbox:
            if m.tag != "href":
                continue
            deliveries += 1
            ref = m.payload["ref"]
            for nb in tree_neighbors(v):
                if nb != m.src:
                    eng.send(v, nb, {"ref": ref}, tag="href", intro_ids=(ref[0],))
            drop.add(ref[0])
        # a node on two hulls arrives as two refs with one id; forget the
        # id only after the whole inbox is forwarded, or the second send
        # would introduce an id v just deleted
        for rid in drop:
            if v not in keep_all and rid not in pre_known[v] and rid != v:
                eng.delete_id(v, rid)
        return True

    engine.run_phase("hull_distribution", handler, max_rounds=4 * tree.height + 10)
    return deliveries


# ---------------------------------------------------------------------------
# per-bay dominating set


def dominating_set(
    engine: RoundEngine, path: list[NodeId], seed: int
) -> tuple[set[NodeId], int]:
    """Randomized dominating set of a boundary sub-path (degree <= 2).

    Phases of two rounds each: every uncovered node joins with
    probability 1/2 and announces to its path neighbors, which then
    count themselves covered.  A phase cap with deterministic join
    keeps termination and validity unconditional.  Returns (set,
    phases used).
    """
    m = len(path)
    if m == 0:
        return set(), 0
    if m == 1:
        return {path[0]}, 0
    pos = {v: i for i, v in enumerate(path)}
    nbrs: dict[NodeId, list[NodeId]] = {}
    for i, v in enumerate(path):
        nbrs[v] = []
        if i > 0:
            nbrs[v].append(path[i - 1])
        if i + 1 < m:
            nbrs[v].append(path[i + 1])
    rng = {v: random.Random((seed * 1_000_003 + v) * 2654435761 % (2**63)) for v in path}
    in_ds: set[NodeId] = set()
    covered: set[NodeId] = set()
    cap = 4 * math.ceil(math.log2(m + 2)) + 8
    state = {v: {"phase": 0, "parity": 0} for v in path}
    path_set = set(path)

    def handler(eng: RoundEngine, v: NodeId, inbox: list[Message]) -> bool:
        if v not in path_set:
            return True
        s = state[v]
        for msg in inbox:
            if msg.tag == "ds_join" and msg.src in nbrs[v]:
                covered.add(v)
        if v in in_ds or v in covered:
            return True
        if s["parity"] == 1:
            # absorption round: wait for announcements in flight
            s["parity"] = 0
            return False
        s["phase"] += 1
        join = s["phase"] > cap or rng[v].random() < 0.5
        if join:
            in_ds.add(v)
            covered.add(v)
            for nb in nbrs[v]:
                eng.send(v, nb, None, tag="ds_join")
            return True
        s["parity"] = 1
        return False

    engine.run_phase("dominating_set", handler, max_rounds=4 * cap + 20)
    for v in path:
        if v not in in_ds and not any(nb in in_ds for nb in nbrs[v]):
            raise SimulationAbortError(v, engine.round_no, "domination gap")
    return in_ds, max(s["phase"] for s in state.values())


# ---------------------------------------------------------------------------
# combined per-ring driver


@dataclass
class RingProtocolResult:
    members: list[NodeId]
    jump: PointerJumpResult
    cube: HypercubeOverlay
    sort_stages: int
    hull: list[NodeId]
    hull_points: dict[NodeId, Point]


def ring_protocol(
    engine: RoundEngine,
    members: list[NodeId],
    jump: PointerJumpResult | None = None,
) -> RingProtocolResult:
    """Leader election, ranking, hypercube, sort, hull, broadcast.

    An already-completed election/ranking result can be passed in so the
    ring is not re-elected when classification already ran it.
    """
    if jump is None:
        jump = pointer_jumping(engine, members)
        rank_ring(engine, members, jump)
    cube = assign_hypercube_ids(engine, members, jump)
    pts = engine.topo.points
    keys = {v: (pts[v].x, pts[v].y, v) for v in members}
    slot_keys, stages = hypercube_sort(engine, cube, keys)
    hull, hull_pts = parallel_convex_hull(engine, cube, slot_keys)
    return RingProtocolResult(
        members=list(members),
        jump=jump,
        cube=cube,
        sort_stages=stages,
        hull=hull,
        hull_points=hull_pts,
    )
