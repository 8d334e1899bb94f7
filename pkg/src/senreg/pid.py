"""Persistent-identifier minting against a handle service.

Entity metadata is mapped onto the RDA instrument-identification schema
and registered at a handle endpoint.  Field mapping (entity -> payload):

    short_name / label      -> Name
    contacts role "Owner"   -> Owners[].ownerName / ownerContact
    manufacturer term       -> Manufacturers[].manufacturerName
    model                   -> Model.modelName
    device/platform type    -> InstrumentTypes[].instrumentTypeName
    serial_number           -> SerialNumber
    measured quantity terms -> MeasuredVariables[].variableMeasured
    canonical URL           -> LandingPage

Fields with no schema counterpart are omitted, never guessed.  A mock
handle server speaking the same wire protocol ships here so every test
runs offline: register -> 201 {"handle": ...}, update -> 204,
resolve -> 200 payload.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import TYPE_CHECKING, Callable, Optional, Protocol

import httpx

from senreg.errors import HandleServiceUnavailableError, NotFoundError
from senreg.model import (
    Configuration,
    Contact,
    Device,
    Entity,
    EntityId,
    Platform,
    display_name,
    kind_of,
    new_entity_id,
)

if TYPE_CHECKING:
    from senreg.storage import Store
    from senreg.vocabulary import VocabularyTerm


@dataclass(frozen=True)
class PidRecord:
    """A minted handle plus the instrument-schema snapshot it was fed."""

    entity_kind: str
    entity_id: EntityId
    handle: str
    target_url: str
    schema_payload_json: str
    id: EntityId = field(default_factory=new_entity_id)
    minted_at: Optional[datetime] = None
    last_synced_at: Optional[datetime] = None
    stale: bool = False
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0

    @property
    def schema_payload(self) -> dict:
        return json.loads(self.schema_payload_json)


TermLookup = Callable[[str], "Optional[VocabularyTerm]"]
ContactLookup = Callable[[str], Optional[Contact]]


def build_schema_payload(
    entity: Entity,
    target_url: str,
    resolve_term: TermLookup,
    resolve_contact: ContactLookup,
) -> str:
    """Canonical JSON instrument payload; byte-identical for equal inputs."""
    payload: dict = {
        "Name": display_name(entity),
        "LandingPage": target_url,
    }
    owners = []
    for role in getattr(entity, "contacts", ()):
        term = resolve_term(role.role)
        if term is None or term.term.casefold() != "owner":
            continue
        contact = resolve_contact(role.contact)
        if contact is None:
            continue
        owners.append(
            {"ownerName": f"{contact.given_name} {contact.family_name}".strip(), "ownerContact": contact.email}
        )
    if owners:
        payload["Owners"] = owners
    if isinstance(entity, (Device, Platform)):
        if entity.manufacturer:
            term = resolve_term(entity.manufacturer)
            if term is not None:
                payload["Manufacturers"] = [{"manufacturerName": term.term}]
        if entity.model:
            payload["Model"] = {"modelName": entity.model}
        if entity.serial_number:
            payload["SerialNumber"] = entity.serial_number
        type_ref = entity.device_type if isinstance(entity, Device) else entity.platform_type
        if type_ref:
            term = resolve_term(type_ref)
            if term is not None:
                payload["InstrumentTypes"] = [{"instrumentTypeName": term.term}]
    if isinstance(entity, Device):
        variables = []
        for mq in entity.measured_quantities:
            if mq.quantity is None:
                continue
            term = resolve_term(mq.quantity)
            if term is not None:
                variables.append({"variableMeasured": term.term})
        if variables:
            payload["MeasuredVariables"] = variables
    if isinstance(entity, Configuration) and entity.description:
        payload["Description"] = entity.description
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class HandleClient(Protocol):
    def register(self, payload: dict) -> str: ...

    def update(self, handle: str, payload: dict) -> None: ...

    def resolve(self, handle: str) -> dict: ...


class HttpHandleClient:
    """Speaks the register/update/resolve wire protocol over HTTP."""

    def __init__(self, endpoint: str, token: str = "", timeout: float = 10.0):
        self._endpoint = endpoint.rstrip("/")
        self._token = token
        self._timeout = timeout

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        return headers

    def register(self, payload: dict) -> str:
        try:
            response = httpx.post(
                f"{self._endpoint}/api/handles",
                json=payload,
                headers=self._headers(),
                timeout=self._timeout,
            )
        except httpx.HTTPError as exc:
            raise HandleServiceUnavailableError(f"handle service unreachable: {exc}") from exc
        if response.status_code != 201:
            raise HandleServiceUnavailableError(
                f"handle registration failed with status {response.status_code}"
            )
        handle = response.json().get("handle")
        if not handle:
            raise HandleServiceUnavailableError("handle service returned no handle")
        return handle

    def update(self, handle: str, payload: dict) -> None:
        try:
            response = httpx.put(
                f"{self._endpoint}/api/handles/{handle}",
                json=payload,
                headers=self._headers(),
                timeout=self._timeout,
            )
        except httpx.HTTPError as exc:
            raise HandleServiceUnavailableError(f"handle service unreachable: {exc}") from exc
        if response.status_code != 204:
            raise HandleServiceUnavailableError(
                f"handle update failed with status {response.status_code}"
            )

    def resolve(self, handle: str) -> dict:
        try:
            response = httpx.get(
                f"{self._endpoint}/api/handles/{handle}",
                headers=self._headers(),
                timeout=self._timeout,
            )
        except httpx.HTTPError as exc:
            raise HandleServiceUnavailableError(f"handle service unreachable: {exc}") from exc
        if response.status_code == 404:
            raise NotFoundError(f"handle {handle!r} not registered")
        if response.status_code != 200:
            raise HandleServiceUnavailableError(
                f"handle resolution failed with status {response.status_code}"
            )
        return response.json()


class PidService:
    """Mints and refreshes PIDs, keeping entity.pid and the record in step."""

    def __init__(self, store: "Store", client: HandleClient):
        self._store = store
        self._client = client

    def mint(self, entity: Entity, updated_by: Optional[str] = None) -> tuple[PidRecord, bool]:
        """Register the entity once; returns (record, created).

        Re-minting returns the existing record without contacting the
        service.  A failed registration leaves no partial state: the
        entity keeps no pid and no record is stored.
        """
        kind = kind_of(entity)
        with self._store.scoped_lock(f"pid:{entity.id}"):
            existing = self._store.get_pid_record_for(entity.id)
            if existing is not None:
                return existing, False
            target_url = self._store.canonical_url(kind, entity.id)
            payload_json = self._build_payload(entity, target_url)
            handle = self._client.register(json.loads(payload_json))
            now = self._store.now()
            record = PidRecord(
                id=self._store.new_id(),
                entity_kind=kind.value,
                entity_id=entity.id,
                handle=handle,
                target_url=target_url,
                schema_payload_json=payload_json,
                minted_at=now,
                last_synced_at=now,
                created_at=now,
                updated_at=now,
                version=1,
            )
            current = self._store.get(kind, entity.id)
            self._store.put_entity(
                replace(current, pid=handle),
                expected_version=current.version,
                updated_by=updated_by,
            )
            self._store.put_pid_record(record)
            return record, True

    def sync(self, entity: Entity) -> tuple[PidRecord, bool]:
        """Push refreshed metadata when it changed; no-op otherwise."""
        record = self._store.get_pid_record_for(entity.id)
        if record is None:
            raise NotFoundError(f"no persistent identifier minted for {entity.id!r}")
        target_url = self._store.canonical_url(kind_of(entity), entity.id)
        payload_json = self._build_payload(entity, target_url)
        if payload_json == record.schema_payload_json and not record.stale:
            return record, False
        try:
            self._client.update(record.handle, json.loads(payload_json))
        except HandleServiceUnavailableError:
            marked = replace(record, stale=True, updated_at=self._store.now(), version=record.version + 1)
            self._store.put_pid_record(marked)
            raise
        now = self._store.now()
        refreshed = replace(
            record,
            schema_payload_json=payload_json,
            target_url=target_url,
            last_synced_at=now,
            stale=False,
            updated_at=now,
            version=record.version + 1,
        )
        self._store.put_pid_record(refreshed)
        return refreshed, True

    def _build_payload(self, entity: Entity, target_url: str) -> str:
        return build_schema_payload(
            entity,
            target_url,
            resolve_term=self._store.vocabulary.resolve,
            resolve_contact=lambda cid: self._store.try_get_contact(cid),
        )


# --- mock handle server --------------------------------------------------------


class MockHandleServer:
    """In-process handle service for offline tests and demos.

    Counts every registration and update so tests can assert exact
    interaction counts; ``fail_next(n)`` makes the next n requests
    answer 500 before any state changes.
    """

    def __init__(self, prefix: str = "20.500.12345", token: str = ""):
        self.prefix = prefix
        self.token = token
        self.registrations: list[dict] = []
        self.updates: list[tuple[str, dict]] = []
        self.handles: dict[str, dict] = {}
        self._fail_budget = 0
        self._lock = threading.Lock()
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    # -- lifecycle --

    def start(self) -> str:
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # silence test output
                pass

            def _deny_or_fail(self) -> bool:
                if outer.token and self.headers.get("Authorization") != f"Bearer {outer.token}":
                    self._reply(401, {"error": "bad credentials"})
                    return True
                with outer._lock:
                    if outer._fail_budget > 0:
                        outer._fail_budget -= 1
                        self._reply(500, {"error": "injected failure"})
                        return True
                return False

            def _reply(self, status: int, body: Optional[dict] = None) -> None:
                data = json.dumps(body).encode() if body is not None else b""
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                if data:
                    self.wfile.write(data)

            def _read_body(self) -> dict:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length) if length else b"{}"
                return json.loads(raw or b"{}")

            def do_POST(self):
                if self.path.rstrip("/") != "/api/handles":
                    self._reply(404, {"error": "unknown path"})
                    return
                if self._deny_or_fail():
                    return
                payload = self._read_body()
                handle = f"{outer.prefix}/{uuid.uuid4().hex[:12]}"
                with outer._lock:
                    outer.registrations.append(payload)
                    outer.handles[handle] = payload
                self._reply(201, {"handle": handle})

            def do_PUT(self):
                handle = self._handle_from_path()
                if handle is None:
                    self._reply(404, {"error": "unknown path"})
                    return
                if self._deny_or_fail():
                    return
                payload = self._read_body()
                with outer._lock:
                    if handle not in outer.handles:
                        self._reply(404, {"error": "unknown handle"})
                        return
                    outer.updates.append((handle, payload))
                    outer.handles[handle] = payload
                self._reply(204)

            def do_GET(self):
                handle = self._handle_from_path()
                if handle is None:
                    self._reply(404, {"error": "unknown path"})
                    return
                if self._deny_or_fail():
                    return
                with outer._lock:
                    payload = outer.handles.get(handle)
                if payload is None:
                    self._reply(404, {"error": "unknown handle"})
                else:
                    self._reply(200, payload)

            def _handle_from_path(self) -> Optional[str]:
                prefix = "/api/handles/"
                if not self.path.startswith(prefix):
                    return None
                handle = self.path[len(prefix) :].strip("/")
                return handle or None

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.endpoint

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def endpoint(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def fail_next(self, count: int = 1) -> None:
        with self._lock:
            self._fail_budget = count

    def __enter__(self) -> "MockHandleServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
