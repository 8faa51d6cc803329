"""Sensor ingestion and appliance reasoning.

The transport is newline-delimited JSON over TCP: one object per line,
UTF-8.  Clients send ``hello``, ``reading`` and ``tick`` messages; the
server answers every reading with an ``ack`` and pushes ``command`` lines
whenever reasoning fires (on a tick, or on a stored reading whose presence
set changed).  ``replay`` is the offline equivalent over a trace file.
"""

from __future__ import annotations

import json
import socketserver
import threading
from dataclasses import dataclass, field
from datetime import date as Date

from .dedup import DedupConfig, should_store
from .ontology import (
    EnvironmentReading,
    TimeOfDay,
    load_home_model,
    reading_to_triples,
)
from .rdf import Iri, TripleStore, home
from .sparql import evaluate, parse_query


class ProtocolError(ValueError):
    """Violation of the wire or trace-line contract."""


class TraceError(ValueError):
    """Malformed or out-of-order trace file."""


@dataclass(frozen=True)
class ApplianceCommand:
    appliance: Iri
    state: bool
    person: Iri
    activity: Iri
    priority: int

    def to_wire(self) -> dict:
        return {
            "type": "command",
            "appliance": self.appliance.local,
            "state": self.state,
            "person": self.person.local,
            "activity": self.activity.local,
            "priority": self.priority,
        }


_PREFERENCE_QUERY = """
SELECT DISTINCT ?person ?what ?appliance ?status ?priority
WHERE {{
  ?work :When :_{time}.
  ?environment :hasTime :_{time}.
  ?environment :personIn ?person.
  ?work :Who ?person.
  ?work :Do ?what.
  ?person :hasPriority ?priority.
  ?what ?appliance ?status.
  filter(datatype(?status)=xsd:boolean)
}}
ORDER BY DESC(?priority)
"""


def reason_at(store: TripleStore, t: TimeOfDay) -> list[ApplianceCommand]:
    """Appliance commands for time ``t``: one per appliance, highest priority wins.

    Ties resolve to state True (serve at least one occupant), then to person
    name order, so the result is fully deterministic.
    """
    load_home_model(store)  # surface integrity errors before querying
    query = parse_query(_PREFERENCE_QUERY.format(time=t.label))
    table = evaluate(store, query)
    best: dict[Iri, ApplianceCommand] = {}
    for person, what, appliance, status, priority in table.rows:
        cmd = ApplianceCommand(
            appliance=appliance,
            state=status.lexical == "true",
            person=person,
            activity=what,
            priority=int(priority.lexical),
        )
        prev = best.get(appliance)
        if prev is None or _beats(cmd, prev):
            best[appliance] = cmd
    return sorted(best.values(), key=lambda c: c.appliance.written)


def _beats(a: ApplianceCommand, b: ApplianceCommand) -> bool:
    if a.priority != b.priority:
        return a.priority > b.priority
    if a.state != b.state:
        return a.state
    return a.person.written < b.person.written


def parse_reading_payload(msg: dict) -> tuple[str, EnvironmentReading]:
    """Decode one wire/trace reading object; raises ProtocolError on bad fields."""
    try:
        stream = str(msg["stream"])
        time = TimeOfDay.from_label(str(msg["time"]))
        reading = EnvironmentReading(
            humidity=float(msg["humidity"]),
            temperature=float(msg["temperature"]),
            illumination=float(msg["illumination"]),
            date=Date.fromisoformat(str(msg["date"])),
            time=time,
            persons_present=frozenset(home(str(p)) for p in msg.get("present", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad reading payload: {exc}") from None
    return stream, reading


class ContextEngine:
    """Shared state behind both the TCP server and offline replay.

    All store writes funnel through one lock; reasoning runs read-only.
    """

    def __init__(self, store: TripleStore | None = None,
                 cfg: DedupConfig | None = None):
        self.store = store if store is not None else TripleStore()
        self.cfg = cfg if cfg is not None else DedupConfig()
        self._baselines: dict[str, EnvironmentReading] = {}
        self._lock = threading.Lock()

    def handle_reading(self, msg: dict) -> tuple[dict, list[dict]]:
        """Returns (ack, commands); commands follow the ack on the wire."""
        try:
            stream, reading = parse_reading_payload(msg)
        except ProtocolError as exc:
            return {"type": "ack", "accepted": False, "stored": False,
                    "distance": 0.0, "error": str(exc)}, []
        with self._lock:
            baseline = self._baselines.get(stream)
            decision = should_store(baseline, reading, self.cfg)
            commands: list[dict] = []
            if decision.store:
                for triple in reading_to_triples(reading):
                    self.store.insert(triple)
                presence_changed = (baseline is None
                                    or baseline.persons_present != reading.persons_present)
                self._baselines[stream] = reading
                if presence_changed:
                    commands = [c.to_wire() for c in reason_at(self.store, reading.time)]
        ack = {"type": "ack", "accepted": True, "stored": decision.store,
               "distance": decision.distance}
        return ack, commands

    def handle_tick(self, msg: dict) -> list[dict]:
        try:
            time = TimeOfDay.from_label(str(msg["time"]))
        except (KeyError, ValueError) as exc:
            raise ProtocolError(f"bad tick: {exc}") from None
        return [c.to_wire() for c in reason_at(self.store, time)]


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        engine: ContextEngine = self.server.engine
        said_hello = False
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
                if not isinstance(msg, dict) or "type" not in msg:
                    raise ProtocolError("message must be an object with a type")
                kind = msg["type"]
                if kind == "hello":
                    if said_hello:
                        raise ProtocolError("duplicate hello")
                    said_hello = True
                    self._send({"type": "hello", "ok": True})
                elif kind == "reading":
                    ack, commands = engine.handle_reading(msg)
                    self._send(ack)
                    for cmd in commands:
                        self._send(cmd)
                elif kind == "tick":
                    for cmd in engine.handle_tick(msg):
                        self._send(cmd)
                else:
                    raise ProtocolError(f"unknown message type {kind!r}")
            except (json.JSONDecodeError, ProtocolError) as exc:
                self._send({"type": "error", "message": str(exc)})
                return  # terminate only this connection

    def _send(self, obj: dict):
        self.wfile.write((json.dumps(obj) + "\n").encode("utf-8"))
        self.wfile.flush()


class ContextServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, engine: ContextEngine):
        super().__init__(address, _Handler)
        self.engine = engine


def start_server(address, engine: ContextEngine) -> ContextServer:
    """Bind and start serving on a background thread; caller shuts it down."""
    server = ContextServer(address, engine)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def serve(address, store: TripleStore, cfg: DedupConfig | None = None):
    """Blocking server loop; returns on KeyboardInterrupt."""
    server = ContextServer(address, ContextEngine(store, cfg))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


@dataclass
class ReplayStats:
    input_count: int = 0
    stored_count: int = 0
    commands_emitted: int = 0
    commands: list = field(default_factory=list)

    @property
    def reduction_factor(self) -> float:
        return self.input_count / max(self.stored_count, 1)


def replay(trace_path, cfg: DedupConfig | None = None,
           store: TripleStore | None = None) -> ReplayStats:
    """Offline equivalent of serve over a trace file: same stored triples,
    same command sequence, deterministic."""
    engine = ContextEngine(store, cfg)
    stats = ReplayStats()
    last_stamp: dict[str, tuple] = {}
    with open(trace_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {lineno}: {exc}") from None
            kind = msg.get("type")
            if kind == "reading":
                try:
                    stream, reading = parse_reading_payload(msg)
                except ProtocolError as exc:
                    raise TraceError(f"line {lineno}: {exc}") from None
                stamp = (reading.date, reading.time.hour,
                         reading.time.minute, reading.time.second)
                if stream in last_stamp and stamp < last_stamp[stream]:
                    raise TraceError(f"line {lineno}: timestamp order violation "
                                     f"on stream {stream!r}")
                last_stamp[stream] = stamp
                stats.input_count += 1
                ack, commands = engine.handle_reading(msg)
                if ack["stored"]:
                    stats.stored_count += 1
                stats.commands.extend(commands)
            elif kind == "tick":
                stats.commands.extend(engine.handle_tick(msg))
            else:
                raise TraceError(f"line {lineno}: unknown trace entry {kind!r}")
    stats.commands_emitted = len(stats.commands)
    return stats
