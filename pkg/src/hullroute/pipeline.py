"""End-to-end orchestration: build the abstraction, audit bounds, run queries.

The driver executes the protocol phases in their dependency order and
meters every bound the artifact promises: total abstraction rounds
against c2*log2(n)^2, pointer-jumping rounds and per-node messages per
ring, per-node long-range message counts, and the three-class storage
shape (hull nodes, other boundary nodes, everyone else).  Every bound
is evaluated and recorded; nothing is skipped silently.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    BoundViolationError,
    DisconnectedError,
    NodeLookupError,
    NotReadyError,
)
from .holes import (
    KIND_OUTER_BOUNDARY,
    HoleRing,
    HullAbstraction,
    build_hull_abstraction,
    classify_rings,
    detect_boundary_nodes,
    detect_outer_holes,
    form_rings,
    hole_report,
)
from .ldel import HybridTopology, PlanarGraph, build_ldel2
from .overlay import BroadcastTree, RingProtocolResult, build_broadcast_tree, distribute_hulls
from .routing import BACKEND_VIS, Router, measure_competitiveness
from .simengine import RoundEngine

# localized construction: broadcast, 1-hop exchange, 2-hop exchange,
# proposal, accept
LDEL_BUILD_ROUNDS = 5
# boundary flags travel one hop so ring neighbors agree
RING_DETECT_ROUNDS = 1


@dataclass
class PipelineConfig:
    backend: str = BACKEND_VIS
    queries: list[tuple[int, int]] | None = None
    query_count: int = 0
    query_seed: int = 0
    c1: float = 1.0  # broadcast-tree construction charge
    c2: float = 40.0  # total abstraction rounds vs log2(n)^2
    c3: float = 40.0  # recompute rounds vs log2(n)^2
    c_longrange: float = 8.0  # per-node long-range messages vs log2(n)^2
    storage_factor: float = 4.0  # hull/boundary storage headroom
    other_storage_cap: int = 8  # flat cap for nodes off every ring
    strict: bool = True  # raise BoundViolationError when a bound fails
    transcript_path: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        cfg = cls(**d)
        if cfg.queries is not None:
            cfg.queries = [(int(s), int(t)) for s, t in cfg.queries]
        return cfg


@dataclass
class ExperimentReport:
    n: int
    backend: str
    phase_rounds: dict[str, int]
    protocol_rounds: int
    phases: list[dict]
    message_stats: dict
    storage: dict
    bounds: dict
    bounds_ok: bool
    holes: list[dict]
    per_case: dict
    max_ratio: float
    queries: list[dict]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _check_connected(topo: HybridTopology) -> None:
    ids = topo.ids
    seen = {ids[0]}
    frontier = [ids[0]]
    while frontier:
        v = frontier.pop()
        for w in topo.adhoc[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    if len(seen) != len(ids):
        raise DisconnectedError(
            f"radio graph split: {len(ids) - len(seen)} nodes unreachable"
        )


def _longrange_per_node(transcript: Sequence[dict], upto: int) -> dict[int, int]:
    counts: dict[int, int] = {}
    for line in transcript[:upto]:
        if line["channel"] == "longrange" and line["src"] is not None:
            counts[line["src"]] = counts.get(line["src"], 0) + 1
    return counts


class Pipeline:
    """Holds one topology, one engine, and everything built on them."""

    def __init__(self, topo: HybridTopology, config: PipelineConfig | None = None):
        self.topo = topo
        self.config = config or PipelineConfig()
        self.engine = RoundEngine(topo)
        self.baseline_knows = {v: set(topo.knows[v]) for v in topo.ids}
        self.g: PlanarGraph | None = None
        self.rings: list[HoleRing] = []
        self.abstractions: dict[int, HullAbstraction] = {}
        self.protos: dict[int, RingProtocolResult] = {}
        self.tree: BroadcastTree | None = None
        self.router: Router | None = None
        self.phase_rounds: dict[str, int] = {}
        self.protocol_rounds = 0
        self._abstraction_transcript_len = 0
        self._knows_after_build: dict[int, set[int]] | None = None

    # -- abstraction phases --------------------------------------------------

    def build_abstraction(self) -> None:
        eng = self.engine
        cfg = self.config
        start = eng.round_no

        def mark(label: str, begin: int) -> None:
            self.phase_rounds[label] = eng.round_no - begin

        t = eng.round_no
        eng.charge_rounds(LDEL_BUILD_ROUNDS, "ldel2_build")
        self.g = build_ldel2(self.topo)
        mark("ldel2_build", t)

        t = eng.round_no
        eng.charge_rounds(RING_DETECT_ROUNDS, "ring_detect")
        self.rings = form_rings(self.g, detect_boundary_nodes(self.g))
        mark("ring_detect", t)

        t = eng.round_no
        jumps = classify_rings(eng, self.rings)
        mark("classification", t)

        t = eng.round_no
        self.abstractions = {}
        self.protos = {}
        for r in self.rings:
            self.abstractions[r.ring_id], self.protos[r.ring_id] = build_hull_abstraction(
                eng, r, jump=jumps[r.ring_id]
            )
        mark("ring_hulls", t)

        t = eng.round_no
        outer = next(r for r in self.rings if r.kind == KIND_OUTER_BOUNDARY)
        arcs = detect_outer_holes(
            self.g,
            outer,
            hull_nodes=self.abstractions[outer.ring_id].hull_nodes,
            first_id=max(r.ring_id for r in self.rings) + 1,
        )
        for arc in arcs:
            self.abstractions[arc.ring_id], self.protos[arc.ring_id] = build_hull_abstraction(
                eng, arc
            )
        self.rings = self.rings + arcs
        mark("outer_holes", t)

        if self.tree is None:
            t = eng.round_no
            self.tree = build_broadcast_tree(eng, c1=cfg.c1)
            mark("broadcast_tree", t)

        t = eng.round_no
        refs, keep = self._hull_refs()
        distribute_hulls(eng, self.tree, refs, keep)
        mark("hull_distribution", t)

        self.protocol_rounds = eng.round_no - start
        self._abstraction_transcript_len = len(eng.transcript)
        # snapshot before queries: routing teaches endpoints each other's
        # ids, which is not abstraction storage
        self._knows_after_build = {v: set(self.topo.knows[v]) for v in self.topo.ids}
        self.router = Router(self.g, self.rings, self.abstractions, backend=cfg.backend)

    def _hull_refs(self):
        refs: list[tuple[int, float, float, int]] = []
        keep: set[int] = set()
        for r in self.rings:
            if r.kind == KIND_OUTER_BOUNDARY:
                continue
            for v in self.abstractions[r.ring_id].hull_nodes:
                p = self.topo.points[v]
                refs.append((v, p.x, p.y, r.ring_id))
                keep.add(v)
        return refs, keep

    # -- audits ----------------------------------------------------------------

    def storage_audit(self) -> dict:
        """Persisted-knowledge deltas by node class, with budgets."""
        cfg = self.config
        _, hull_nodes = self._hull_refs()
        ring_members = set()
        for r in self.rings:
            ring_members.update(r.members)
        boundary = ring_members - hull_nodes
        other = set(self.topo.ids) - ring_members
        snapshot = getattr(self, "_knows_after_build", None) or self.topo.knows
        delta = {
            v: len(snapshot[v] - self.baseline_knows[v]) for v in self.topo.ids
        }
        sum_hull = sum(
            len(self.abstractions[r.ring_id].hull_nodes)
            for r in self.rings
            if r.kind != KIND_OUTER_BOUNDARY
        )
        max_p = max(len(r.members) for r in self.rings)

        def cls_stats(nodes: set[int], budget: float) -> dict:
            counts = sorted(delta[v] for v in nodes)
            mx = counts[-1] if counts else 0
            return {
                "nodes": len(nodes),
                "max": mx,
                "mean": (sum(counts) / len(counts)) if counts else 0.0,
                "budget": budget,
                "ok": mx <= budget,
            }

        return {
            "hull": cls_stats(hull_nodes, cfg.storage_factor * sum_hull),
            "boundary": cls_stats(boundary, cfg.storage_factor * max_p),
            "other": cls_stats(other, float(cfg.other_storage_cap)),
            "sum_hull_sizes": sum_hull,
            "max_ring_size": max_p,
        }

    def bound_audit(self) -> dict:
        cfg = self.config
        n = len(self.topo.points)
        log2n = math.log2(n) if n > 1 else 1.0
        budget = cfg.c2 * log2n**2
        bounds: dict[str, dict] = {
            "protocol_rounds": {
                "measured": self.protocol_rounds,
                "bound": budget,
                "c2": cfg.c2,
                "ratio": self.protocol_rounds / budget,
                "ok": self.protocol_rounds <= budget,
            }
        }

        ring_rows = []
        for r in self.rings:
            jump = self.protos[r.ring_id].jump
            k = len(r.members)
            round_bound = math.ceil(math.log2(k)) + 1 if k > 1 else 1
            msg_bound = 2 * round_bound
            msg_max = max(jump.messages_per_node.values())
            ring_rows.append(
                {
                    "ring_id": r.ring_id,
                    "size": k,
                    "jump_rounds": jump.jump_rounds,
                    "round_bound": round_bound,
                    "max_msgs_per_node": msg_max,
                    "msg_bound": msg_bound,
                    "ok": jump.jump_rounds <= round_bound and msg_max <= msg_bound,
                }
            )
        bounds["pointer_jumping"] = {
            "rings": ring_rows,
            "ok": all(row["ok"] for row in ring_rows),
        }

        lr = _longrange_per_node(self.engine.transcript, self._abstraction_transcript_len)
        lr_max = max(lr.values()) if lr else 0
        lr_budget = cfg.c_longrange * log2n**2
        bounds["longrange_per_node"] = {
            "measured_max": lr_max,
            "bound": lr_budget,
            "c": cfg.c_longrange,
            "ok": lr_max <= lr_budget,
        }

        storage = self.storage_audit()
        for cls in ("hull", "boundary", "other"):
            bounds[f"storage_{cls}"] = {
                "measured_max": storage[cls]["max"],
                "bound": storage[cls]["budget"],
                "ok": storage[cls]["ok"],
            }
        bounds["_storage_detail"] = storage
        return bounds

    # -- queries ----------------------------------------------------------------

    def query_pairs(self) -> list[tuple[int, int]]:
        cfg = self.config
        if cfg.queries is not None:
            for s, t in cfg.queries:
                if s not in self.topo.points or t not in self.topo.points:
                    raise NodeLookupError(f"query endpoint {s},{t} unknown")
            return list(cfg.queries)
        if cfg.query_count <= 0:
            return []
        rng = random.Random(cfg.query_seed)
        ids = sorted(self.topo.points)
        return [tuple(rng.sample(ids, 2)) for _ in range(cfg.query_count)]

    def run_queries(self) -> tuple[list, dict]:
        if self.router is None:
            raise NotReadyError("abstraction not built")
        t = self.engine.round_no
        results = []
        for s, tgt in self.query_pairs():
            self.topo.learn(s, tgt)  # model: the source holds the target id
            results.append(self.router.route(self.engine, s, tgt))
        self.phase_rounds["queries"] = self.engine.round_no - t
        if results:
            summary = measure_competitiveness(self.topo, results)
        else:
            summary = {"per_case": {}, "max_ratio": 0.0, "count": 0}
        return results, summary

    # -- assembly ----------------------------------------------------------------

    def report(self, results, summary) -> ExperimentReport:
        eng = self.engine
        bounds = self.bound_audit()
        storage = bounds.pop("_storage_detail")
        lr = _longrange_per_node(eng.transcript, self._abstraction_transcript_len)
        adhoc_total = sum(
            1
            for line in eng.transcript[: self._abstraction_transcript_len]
            if line["channel"] == "adhoc"
        )
        message_stats = {
            "total_messages": eng.total_messages,
            "total_bytes": eng.total_bytes,
            "abstraction_adhoc": adhoc_total,
            "abstraction_longrange": sum(lr.values()),
            "longrange_per_node_max": max(lr.values()) if lr else 0,
            "longrange_per_node_mean": (sum(lr.values()) / len(lr)) if lr else 0.0,
            "max_longrange_per_node_round": eng.max_longrange_per_node_round,
        }
        flat = {
            k: v
            for k, v in bounds.items()
        }
        ok = all(v["ok"] for v in flat.values())
        rows = []
        for res in results:
            rows.append(
                {
                    "s": res.path[0],
                    "t": res.path[-1],
                    "case": res.case_taken,
                    "path": res.path,
                    "euclidean_length": res.euclidean_length,
                    "udg_shortest": res.udg_shortest,
                    "straight_line": res.straight_line,
                    "ratio": res.competitive_ratio,
                    "rounds_used": res.rounds_used,
                    "longrange_msgs": res.longrange_msgs,
                    "e_route": res.e_route,
                }
            )
        return ExperimentReport(
            n=len(self.topo.points),
            backend=self.config.backend,
            phase_rounds=dict(self.phase_rounds),
            protocol_rounds=self.protocol_rounds,
            phases=[asdict(p) for p in eng.phase_reports],
            message_stats=message_stats,
            storage=storage,
            bounds=bounds,
            bounds_ok=ok,
            holes=hole_report(self.rings, self.abstractions),
            per_case=summary["per_case"],
            max_ratio=summary["max_ratio"],
            queries=rows,
        )

    def run(self) -> ExperimentReport:
        self.build_abstraction()
        results, summary = self.run_queries()
        rep = self.report(results, summary)
        if self.config.transcript_path:
            self.engine.write_transcript(self.config.transcript_path)
        if self.config.strict and not rep.bounds_ok:
            failing = sorted(k for k, v in rep.bounds.items() if not v["ok"])
            raise BoundViolationError(f"bounds violated: {failing}", report=rep)
        return rep

    # -- maintenance ----------------------------------------------------------------

    def abstraction_digest(self) -> str:
        """Stable digest of hulls, bays, and dominating sets."""
        payload = []
        for r in sorted(self.rings, key=lambda r: r.ring_id):
            ab = self.abstractions[r.ring_id]
            payload.append(
                [
                    r.ring_id,
                    r.kind,
                    ab.hull_nodes,
                    [[list(b.edge), b.members] for b in ab.bay_areas],
                    [sorted(ab.dominating_sets[i]) for i in sorted(ab.dominating_sets)],
                ]
            )
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def periodic_recompute(self, interval: int = 0) -> dict:
        """Re-run every abstraction phase, reusing the broadcast tree.

        Surfaces DisconnectedError if node movement split the radio
        graph.  The round meter confirms no tree construction happened
        inside the recompute window.
        """
        if self.tree is None:
            raise NotReadyError("broadcast tree not built yet")
        if interval:
            self.engine.charge_rounds(interval, "idle")
        _check_connected(self.topo)
        tree_before = (self.tree.root, sorted(self.tree.parent.items()))
        start_round = self.engine.round_no
        start_len = len(self.engine.transcript)
        self.router = None
        self.build_abstraction()
        rounds = self.engine.round_no - start_round
        charged_tree = any(
            line["tag"].startswith("charge:broadcast_tree")
            for line in self.engine.transcript[start_len:]
        )
        n = len(self.topo.points)
        log2n = math.log2(n) if n > 1 else 1.0
        budget = self.config.c3 * log2n**2
        out = {
            "rounds": rounds,
            "bound": budget,
            "c3": self.config.c3,
            "ok": rounds <= budget and not charged_tree,
            "tree_reused": self.tree.root == tree_before[0]
            and sorted(self.tree.parent.items()) == tree_before[1]
            and not charged_tree,
            "idle_rounds": interval,
            "abstraction_digest": self.abstraction_digest(),
        }
        if self.config.strict and not out["ok"]:
            raise BoundViolationError(f"recompute bound violated: {out}", report=out)
        return out


    def abstraction_dict(self) -> dict:
        """JSON-ready rings, hulls, bays, and dominating sets."""
        return abstraction_to_dict(self.rings, self.abstractions)


def abstraction_to_dict(
    rings: Sequence[HoleRing], abstractions: dict[int, HullAbstraction]
) -> dict:
    out = {"rings": [], "hulls": {}, "bays": {}, "dominating": {}}
    for r in sorted(rings, key=lambda r: r.ring_id):
        out["rings"].append(
            {"ring_id": r.ring_id, "kind": r.kind, "members": list(r.members)}
        )
        ab = abstractions[r.ring_id]
        key = str(r.ring_id)
        out["hulls"][key] = list(ab.hull_nodes)
        out["bays"][key] = [
            {"edge": list(b.edge), "members": list(b.members)} for b in ab.bay_areas
        ]
        out["dominating"][key] = [
            sorted(ab.dominating_sets[i]) for i in sorted(ab.dominating_sets)
        ]
    return out


def run_pipeline(topo: HybridTopology, config: PipelineConfig | None = None) -> ExperimentReport:
    return Pipeline(topo, config).run()


def periodic_recompute(pipeline: Pipeline, interval: int = 0) -> dict:
    return pipeline.periodic_recompute(interval)
