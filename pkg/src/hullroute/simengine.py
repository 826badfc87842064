"""Synchronous message-passing engine.

Nodes act in rounds: everything sent in round i sits in flight and is
delivered at the start of round i+1.  Two channels exist.  The ad hoc
channel only spans radio links; the long-range channel reaches any node
whose id the sender currently knows.  Delivering a message teaches the
receiver the sender's id (caller id), and a message may introduce
further ids the sender knows, which the receiver learns on delivery.

The engine is also the bookkeeper: every send is appended to a
transcript and counted into per-phase and per-node tallies, so round
and message bounds can be checked after a run instead of trusted.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .errors import (
    IllegalIntroductionError,
    IllegalSendError,
    SimulationAbortError,
)
from .ldel import HybridTopology, NodeId


class Channel(str, Enum):
    ADHOC = "adhoc"
    LONGRANGE = "longrange"
    META = "meta"


def canonical_bytes(obj: Any) -> int:
    return len(json.dumps(obj, sort_keys=True, separators=(",", ":")))


@dataclass(frozen=True)
class Message:
    src: NodeId
    dst: NodeId
    payload: Any
    channel: Channel
    tag: str
    intro_ids: tuple[NodeId, ...] = ()


@dataclass
class PhaseReport:
    label: str
    rounds: int = 0
    messages_adhoc: int = 0
    messages_longrange: int = 0
    bytes_total: int = 0
    max_longrange_per_node_round: int = 0


Handler = Callable[["RoundEngine", NodeId, list[Message]], bool]


class RoundEngine:
    def __init__(self, topo: HybridTopology, transcript_path: str | Path | None = None):
        self.topo = topo
        self.round_no = 0
        self.total_messages = 0
        self.total_bytes = 0
        self.max_longrange_per_node_round = 0
        self.phase_reports: list[PhaseReport] = []
        self.transcript: list[dict] = []
        self._transcript_path = Path(transcript_path) if transcript_path else None
        self._outbox: list[Message] = []
        self._inbox: dict[NodeId, list[Message]] = defaultdict(list)
        self._lr_this_round: dict[NodeId, int] = defaultdict(int)
        self._phase: PhaseReport | None = None

    # -- sending ---------------------------------------------------------

    def auto_channel(self, src: NodeId, dst: NodeId) -> Channel:
        return Channel.ADHOC if dst in self.topo.adhoc.get(src, ()) else Channel.LONGRANGE

    def send(
        self,
        src: NodeId,
        dst: NodeId,
        payload: Any = None,
        *,
        channel: Channel | None = None,
        tag: str = "",
        intro_ids: tuple[NodeId, ...] = (),
    ) -> None:
        topo = self.topo
        if src not in topo.points or dst not in topo.points:
            raise IllegalSendError(f"send {src}->{dst}: unknown endpoint")
        if src == dst:
            raise IllegalSendError(f"node {src} sending to itself")
        if channel is None:
            channel = self.auto_channel(src, dst)
        if channel is Channel.ADHOC:
            if dst not in topo.adhoc[src]:
                raise IllegalSendError(
                    f"round {self.round_no}: {src}->{dst} not a radio link"
                )
        elif channel is Channel.LONGRANGE:
            if not topo.node_knows(src, dst):
                raise IllegalSendError(
                    f"round {self.round_no}: {src} does not know id {dst}"
                )
        else:
            raise IllegalSendError(f"cannot send on channel {channel}")
        for x in intro_ids:
            if x != src and not topo.node_knows(src, x):
                raise IllegalIntroductionError(
                    f"round {self.round_no}: {src} introduces id {x} it does not know"
                )
        msg = Message(src, dst, payload, channel, tag, tuple(intro_ids))
        self._outbox.append(msg)
        nbytes = canonical_bytes(
            {"tag": tag, "data": payload, "intro": sorted(intro_ids)}
        )
        self._record(
            {
                "round": self.round_no,
                "src": src,
                "dst": dst,
                "channel": channel.value,
                "bytes": nbytes,
                "tag": tag,
            }
        )
        self.total_messages += 1
        self.total_bytes += nbytes
        if self._phase:
            self._phase.bytes_total += nbytes
            if channel is Channel.ADHOC:
                self._phase.messages_adhoc += 1
            else:
                self._phase.messages_longrange += 1
        if channel is Channel.LONGRANGE:
            self._lr_this_round[src] += 1
            peak = self._lr_this_round[src]
            self.max_longrange_per_node_round = max(
                self.max_longrange_per_node_round, peak
            )
            if self._phase:
                self._phase.max_longrange_per_node_round = max(
                    self._phase.max_longrange_per_node_round, peak
                )

    def delete_id(self, v: NodeId, w: NodeId) -> None:
        self.topo.forget(v, w)

    def collect(self, v: NodeId) -> list[Message]:
        """Drain v's inbox; for traffic driven outside run_phase."""
        return self._inbox.pop(v, [])

    # -- round advancement -------------------------------------------------

    def step_round(self) -> None:
        """Deliver everything in flight and advance the clock."""
        self.round_no += 1
        self._lr_this_round.clear()
        if self._phase:
            self._phase.rounds += 1
        pending, self._outbox = self._outbox, []
        for m in pending:
            self.topo.learn(m.dst, m.src)
            for x in m.intro_ids:
                self.topo.learn(m.dst, x)
            self._inbox[m.dst].append(m)

    def charge_rounds(self, n: int, label: str) -> None:
        """Account for a harness-assisted phase without simulating it."""
        self.round_no += n
        if self._phase:
            self._phase.rounds += n
        self._record(
            {
                "round": self.round_no,
                "src": None,
                "dst": None,
                "channel": Channel.META.value,
                "bytes": 0,
                "tag": f"charge:{label}:{n}",
            }
        )

    # -- phase driver ------------------------------------------------------

    def run_phase(self, label: str, handler: Handler, max_rounds: int) -> PhaseReport:
        """Run handlers each round, ascending node id, until quiescent.

        A phase is finished when every handler reported done and no
        message is in flight or undelivered.  Overrunning max_rounds
        aborts the simulation rather than looping forever.
        """
        report = PhaseReport(label=label)
        self._phase = report
        try:
            for _ in range(max_rounds + 1):
                all_done = True
                for v in self.topo.ids:
                    inbox = self._inbox.pop(v, [])
                    try:
                        done = handler(self, v, inbox)
                    except Exception as e:
                        if isinstance(e, (IllegalSendError, IllegalIntroductionError)):
                            raise
                        raise SimulationAbortError(v, self.round_no, repr(e)) from e
                    all_done = all_done and bool(done)
                if all_done and not self._outbox and not self._inbox:
                    return report
                self.step_round()
            raise SimulationAbortError(
                -1, self.round_no, f"phase {label!r} exceeded {max_rounds} rounds"
            )
        finally:
            self._phase = None
            self.phase_reports.append(report)

    # -- transcript ----------------------------------------------------------

    def _record(self, line: dict) -> None:
        self.transcript.append(line)
        if self._transcript_path:
            with self._transcript_path.open("a") as fh:
                fh.write(json.dumps(line, sort_keys=True) + "\n")

    def write_transcript(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            for line in self.transcript:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
