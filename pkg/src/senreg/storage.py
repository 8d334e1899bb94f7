"""Durable record store: versioned entities, blobs and the search index.

On-disk layout under the data directory:

    meta.json                       store marker and format version
    records/<kind>/<id>.json        current revision, canonical JSON
    revisions/<kind>/<id>/<n>.json  append-only revision log
    blobs/<aa>/<hash>               content-addressed attachment bodies

Every write goes revision-file first, then the current-record file, each
through an atomic rename, so a killed process leaves either the pre- or
the post-write state.  All records are also held in memory (the store
targets desk-scale collections) and the search index is derived state,
rebuilt on open.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

from senreg import model as m
from senreg import temporal
from senreg.auth import Account, ApiKey, Group, Principal, can_read, hash_api_key
from senreg.errors import (
    BlobTooLargeError,
    EntityInUseError,
    MountConflictError,
    NotFoundError,
    ValidationFailedError,
    VersionConflictError,
)
from senreg.pid import PidRecord
from senreg.search import InvertedIndex, tokenize, weighted_tokens
from senreg.serialization import canonical_json, decode_record, encode_record
from senreg.vocabulary import CurationTicket, VocabularyService, VocabularyTerm

DEFAULT_BLOB_LIMIT = 64 * 1024 * 1024

ENTITY_KINDS = tuple(kind.value for kind in m.EntityKind)
RECORD_KINDS = ENTITY_KINDS + (
    "vocabulary_term",
    "curation_ticket",
    "group",
    "account",
    "api_key",
    "pid_record",
)

PLURALS = {
    "device": "devices",
    "platform": "platforms",
    "configuration": "configurations",
    "site": "sites",
    "contact": "contacts",
}
KIND_BY_PLURAL = {plural: kind for kind, plural in PLURALS.items()}

_NAME_UNIQUE_KINDS = ("device", "platform")


@dataclass(frozen=True)
class StoredRevision:
    entity_id: str
    version: int
    payload: str
    updated_at: Optional[datetime]
    updated_by: Optional[str]


@dataclass(frozen=True)
class BlobRef:
    content_hash: str
    size_bytes: int
    media_type: str


@dataclass(frozen=True)
class SearchHit:
    ref: m.EntityRef
    score: float
    name: str


class _KeyedLocks:
    """Lazily created re-entrant locks, one per string key."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: dict[str, threading.RLock] = {}

    def get(self, key: str) -> threading.RLock:
        with self._guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.RLock()
            return lock


class Store:
    """All persistent state of one registry instance.

    ``data_dir=None`` gives a memory-only store (used for staging seeds
    and in tests); otherwise the directory must have been initialized
    with :meth:`initialize`.
    """

    FORMAT_VERSION = 1

    def __init__(
        self,
        data_dir: Optional[Path] = None,
        *,
        base_url: str = "http://localhost:8500",
        blob_limit: int = DEFAULT_BLOB_LIMIT,
        clock: Optional[Callable[[], datetime]] = None,
        id_factory: Optional[Callable[[], str]] = None,
    ) -> None:
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.base_url = base_url.rstrip("/")
        self.blob_limit = blob_limit
        self._clock = clock or m.utcnow
        self._id_factory = id_factory or m.new_entity_id
        self._clock_guard = threading.Lock()
        self._last_instant: Optional[datetime] = None
        self._locks = _KeyedLocks()
        self._records: dict[str, dict[str, Any]] = {kind: {} for kind in RECORD_KINDS}
        self._index = InvertedIndex()
        self._index_guard = threading.Lock()
        # natural-key indexes: (kind, casefolded name) -> id, email -> id
        self._name_index: dict[tuple[str, str], str] = {}
        self._email_index: dict[str, str] = {}
        self._mounts_by_child: dict[str, list[tuple[str, m.MountAction]]] = {}
        self._blob_memory: dict[str, bytes] = {}
        self.vocabulary = VocabularyService(self)
        if self.data_dir is not None:
            self._load()

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def initialize(cls, data_dir: Path, **kwargs) -> "Store":
        """Create the on-disk layout and return an opened store."""
        data_dir = Path(data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        meta_path = data_dir / "meta.json"
        if not meta_path.exists():
            for sub in ("records", "revisions", "blobs"):
                (data_dir / sub).mkdir(exist_ok=True)
            _atomic_write(meta_path, json.dumps({"store": "senreg", "format": cls.FORMAT_VERSION}).encode())
        return cls(data_dir, **kwargs)

    def _load(self) -> None:
        meta_path = self.data_dir / "meta.json"
        if not meta_path.exists():
            raise NotFoundError(f"{self.data_dir} is not an initialized data directory")
        records_dir = self.data_dir / "records"
        for kind in RECORD_KINDS:
            kind_dir = records_dir / kind
            if not kind_dir.is_dir():
                continue
            for path in kind_dir.glob("*.json"):
                record = decode_record(json.loads(path.read_text(encoding="utf-8")))
                self._records[kind][_record_id(record)] = record
        self.rebuild_index()
        self._rebuild_mount_index()
        self._rebuild_natural_keys()

    def clone_in_memory(self) -> "Store":
        """Copy of the current state with no disk backing (seed staging)."""
        clone = Store(
            None,
            base_url=self.base_url,
            blob_limit=self.blob_limit,
            clock=self._clock,
            id_factory=self._id_factory,
        )
        for kind, table in self._records.items():
            clone._records[kind] = dict(table)
        clone._blob_memory = dict(self._blob_memory)
        clone.rebuild_index()
        clone._rebuild_mount_index()
        clone._rebuild_natural_keys()
        return clone

    def flush(self) -> None:
        """Force index/store consistency by rebuilding the derived indexes."""
        self.rebuild_index()
        self._rebuild_mount_index()
        self._rebuild_natural_keys()

    def close(self) -> None:
        self.flush()

    # -- clock and ids -------------------------------------------------------

    def now(self) -> datetime:
        """Strictly increasing UTC instants (audit fields never tie)."""
        with self._clock_guard:
            instant = m.ensure_utc(self._clock())
            if self._last_instant is not None and instant <= self._last_instant:
                instant = self._last_instant + timedelta(microseconds=1)
            self._last_instant = instant
            return instant

    def new_id(self) -> str:
        return self._id_factory()

    def scoped_lock(self, key: str):
        return self._locks.get(key)

    # -- generic record access -------------------------------------------------

    def get(self, kind: m.EntityKind, entity_id: str) -> m.Entity:
        record = self._records[kind.value].get(entity_id)
        if record is None:
            raise NotFoundError(f"{kind.value} {entity_id!r} not found")
        return record

    def try_get(self, kind: m.EntityKind, entity_id: str) -> Optional[m.Entity]:
        return self._records[kind.value].get(entity_id)

    def try_get_contact(self, contact_id: str) -> Optional[m.Contact]:
        return self._records["contact"].get(contact_id)

    def iter_entities(self, kind: m.EntityKind, include_archived: bool = False) -> Iterator[m.Entity]:
        for record in list(self._records[kind.value].values()):
            if include_archived or not record.archived:
                yield record

    def counts(self) -> dict[str, int]:
        return {
            kind: sum(1 for r in table.values() if not getattr(r, "archived", False))
            for kind, table in self._records.items()
            if kind in PLURALS
        }

    def canonical_url(self, kind: m.EntityKind, entity_id: str) -> str:
        """Stable entry-point URL; survives every rename of the entity."""
        return f"{self.base_url}/{PLURALS[kind.value]}/{entity_id}"

    # -- entity writes ------------------------------------------------------------

    def put_entity(
        self,
        entity: m.Entity,
        expected_version: Optional[int] = None,
        updated_by: Optional[str] = None,
    ) -> StoredRevision:
        """Validate-then-write with optimistic concurrency.

        Creates get version 1; updates require the caller's
        ``expected_version`` to match the current one.  The search
        document is upserted before returning.
        """
        kind = m.kind_of(entity)
        with self.scoped_lock(f"record:{kind.value}:{entity.id}"):
            current = self._records[kind.value].get(entity.id)
            if current is None:
                if expected_version not in (None, 0):
                    raise VersionConflictError(expected_version, 0)
            else:
                if expected_version is None or expected_version != current.version:
                    raise VersionConflictError(expected_version, current.version)
            stamped = m.touch(entity, at=self.now(), by=updated_by)
            stamped = replace(stamped, version=(current.version + 1) if current else 1)
            report = m.validate_record(stamped, term_resolver=self.vocabulary.term_info)
            self._cross_checks(stamped, report)
            if not report.ok:
                raise ValidationFailedError(report)
            if isinstance(stamped, m.Configuration):
                result = self._check_mounts(stamped)
                if not result.ok:
                    raise MountConflictError(result)
            return self._commit(stamped)

    def archive_entity(
        self,
        kind: m.EntityKind,
        entity_id: str,
        expected_version: Optional[int] = None,
        updated_by: Optional[str] = None,
    ) -> StoredRevision:
        """Soft delete: the record stays resolvable for history replay.

        Devices and platforms with any mount history cannot be archived;
        dropping them would orphan configuration timelines.
        """
        with self.scoped_lock(f"record:{kind.value}:{entity_id}"):
            current = self.get(kind, entity_id)
            if expected_version is not None and expected_version != current.version:
                raise VersionConflictError(expected_version, current.version)
            if kind in (m.EntityKind.DEVICE, m.EntityKind.PLATFORM) and self.mounts_of(entity_id):
                raise EntityInUseError(
                    f"{kind.value} {entity_id!r} has mount history and cannot be deleted"
                )
            stamped = m.touch(replace(current, archived=True), at=self.now(), by=updated_by)
            return self._commit(stamped)

    def _commit(self, entity: m.Entity) -> StoredRevision:
        kind = m.kind_of(entity)
        doc = encode_record(entity)
        payload = canonical_json(doc)
        if self.data_dir is not None:
            revision_dir = self.data_dir / "revisions" / kind.value / entity.id
            revision_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(revision_dir / f"{entity.version:06d}.json", payload.encode())
            record_dir = self.data_dir / "records" / kind.value
            record_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(record_dir / f"{entity.id}.json", payload.encode())
        previous = self._records[kind.value].get(entity.id)
        self._records[kind.value][entity.id] = entity
        self._update_natural_keys(entity, previous)
        if isinstance(entity, m.Configuration):
            self._reindex_mounts(entity, previous)
        self._index_entity(entity)
        return StoredRevision(
            entity_id=entity.id,
            version=entity.version,
            payload=payload,
            updated_at=entity.updated_at,
            updated_by=entity.updated_by,
        )

    def get_revision(self, kind: m.EntityKind, entity_id: str, version: int) -> StoredRevision:
        if self.data_dir is None:
            raise NotFoundError("memory-only store keeps no revision log")
        path = self.data_dir / "revisions" / kind.value / entity_id / f"{version:06d}.json"
        if not path.exists():
            raise NotFoundError(f"no revision {version} for {kind.value} {entity_id!r}")
        payload = path.read_text(encoding="utf-8")
        doc = json.loads(payload)
        return StoredRevision(
            entity_id=entity_id,
            version=version,
            payload=payload,
            updated_at=m.parse_instant(doc["updated_at"]) if doc.get("updated_at") else None,
            updated_by=doc.get("updated_by"),
        )

    def list_revisions(self, kind: m.EntityKind, entity_id: str) -> list[int]:
        if self.data_dir is None:
            return []
        revision_dir = self.data_dir / "revisions" / kind.value / entity_id
        if not revision_dir.is_dir():
            return []
        return sorted(int(p.stem) for p in revision_dir.glob("*.json"))

    # -- cross-record validation -----------------------------------------------------

    def _cross_checks(self, entity: m.Entity, report: m.ValidationReport) -> None:
        kind = m.kind_of(entity)
        if kind.value in _NAME_UNIQUE_KINDS and not entity.archived:
            holder = self._name_index.get((kind.value, entity.short_name.strip().casefold()))
            if holder is not None and holder != entity.id:
                report.error("short_name", f"short_name {entity.short_name!r} is already taken")
        if isinstance(entity, m.Contact) and not entity.archived:
            holder = self._email_index.get(entity.email.strip().casefold())
            if holder is not None and holder != entity.id:
                report.error("email", f"email {entity.email!r} is already registered")
        for i, role in enumerate(getattr(entity, "contacts", ())):
            if role.contact not in self._records["contact"]:
                report.error(f"contacts[{i}].contact", f"unknown contact {role.contact!r}")
        if isinstance(entity, m.Configuration):
            if entity.site is not None and entity.site not in self._records["site"]:
                report.error("site", f"unknown site {entity.site!r}")
            self._check_dynamic_sources(entity, report)
            for i, mount in enumerate(entity.mount_actions):
                if self.try_get(mount.child.kind, mount.child.id) is None:
                    report.error(f"mount_actions[{i}].child", f"unknown {mount.child.kind.value} {mount.child.id!r}")
                if mount.parent is not None and self.try_get(mount.parent.kind, mount.parent.id) is None:
                    report.error(f"mount_actions[{i}].parent", f"unknown {mount.parent.kind.value} {mount.parent.id!r}")
        if isinstance(entity, m.Site):
            self._check_site_cycle(entity, report)

    def _update_natural_keys(self, entity: m.Entity, previous: Optional[m.Entity]) -> None:
        kind = m.kind_of(entity)
        if kind.value in _NAME_UNIQUE_KINDS:
            if previous is not None:
                old_key = (kind.value, previous.short_name.strip().casefold())
                if self._name_index.get(old_key) == entity.id:
                    del self._name_index[old_key]
            if not entity.archived:
                self._name_index[(kind.value, entity.short_name.strip().casefold())] = entity.id
        if isinstance(entity, m.Contact):
            if previous is not None:
                old_email = previous.email.strip().casefold()
                if self._email_index.get(old_email) == entity.id:
                    del self._email_index[old_email]
            if not entity.archived:
                self._email_index[entity.email.strip().casefold()] = entity.id

    def _rebuild_natural_keys(self) -> None:
        self._name_index.clear()
        self._email_index.clear()
        for kind_value in _NAME_UNIQUE_KINDS:
            for entity in self._records[kind_value].values():
                if not entity.archived:
                    self._name_index[(kind_value, entity.short_name.strip().casefold())] = entity.id
        for contact in self._records["contact"].values():
            if not contact.archived:
                self._email_index[contact.email.strip().casefold()] = contact.id

    def _check_site_cycle(self, site: m.Site, report: m.ValidationReport) -> None:
        seen = {site.id}
        parent_id = site.parent_site
        while parent_id is not None:
            if parent_id in seen:
                report.error("parent_site", "site hierarchy must be acyclic")
                return
            seen.add(parent_id)
            parent = self._records["site"].get(parent_id)
            if parent is None:
                report.error("parent_site", f"unknown site {parent_id!r}")
                return
            parent_id = parent.parent_site

    def _check_dynamic_sources(self, configuration: m.Configuration, report: m.ValidationReport) -> None:
        for i, action in enumerate(configuration.location_actions):
            if not isinstance(action.location, m.DynamicLocation):
                continue
            for axis in ("x_source", "y_source", "z_source"):
                source = getattr(action.location, axis)
                if source is None:
                    continue
                path = f"location_actions[{i}].{axis}"
                device = self._records["device"].get(source.device)
                if device is None:
                    report.error(path, f"unknown device {source.device!r}")
                    continue
                if all(mq.id != source.quantity for mq in device.measured_quantities):
                    report.error(path, f"device has no measured quantity {source.quantity!r}")
                    continue
                mounted = any(
                    mount.child.id == source.device
                    and temporal.interval_overlaps(mount.interval, action.interval)
                    for mount in configuration.mount_actions
                )
                if not mounted:
                    report.error(path, "source device is not mounted in this configuration during the location interval")

    # -- mounts ----------------------------------------------------------------------

    def mounts_of(self, child_id: str) -> list[tuple[str, m.MountAction]]:
        """Every (configuration id, mount) of one device/platform, all configurations."""
        return list(self._mounts_by_child.get(child_id, ()))

    def _reindex_mounts(
        self, configuration: m.Configuration, previous: Optional[m.Configuration] = None
    ) -> None:
        affected = {mount.child.id for mount in configuration.mount_actions}
        if previous is not None:
            affected.update(mount.child.id for mount in previous.mount_actions)
        for child_id in affected:
            remaining = [
                (config_id, mount)
                for config_id, mount in self._mounts_by_child.get(child_id, ())
                if config_id != configuration.id
            ]
            if not configuration.archived:
                remaining.extend(
                    (configuration.id, mount)
                    for mount in configuration.mount_actions
                    if mount.child.id == child_id
                )
            if remaining:
                self._mounts_by_child[child_id] = remaining
            else:
                self._mounts_by_child.pop(child_id, None)

    def _rebuild_mount_index(self) -> None:
        self._mounts_by_child.clear()
        for configuration in self._records["configuration"].values():
            if configuration.archived:
                continue
            for mount in configuration.mount_actions:
                self._mounts_by_child.setdefault(mount.child.id, []).append((configuration.id, mount))

    def _check_mounts(self, configuration: m.Configuration) -> temporal.TemporalResult:
        """Within-configuration shape plus cross-configuration exclusivity."""
        result = temporal.check_configuration_consistency(configuration)
        if not result.ok:
            return result
        for mount in sorted(configuration.mount_actions, key=lambda a: (a.interval.begin, a.id)):
            elsewhere = [
                (config_id, existing)
                for config_id, existing in self.mounts_of(mount.child.id)
                if config_id != configuration.id
            ]
            result = temporal.check_device_availability(mount.child.id, mount.interval, elsewhere)
            if not result.ok:
                return result
        return temporal.OK

    def mount_transaction(
        self,
        configuration_id: str,
        add: Optional[m.MountAction] = None,
        update: Optional[m.MountAction] = None,
        remove_id: Optional[str] = None,
        updated_by: Optional[str] = None,
    ) -> StoredRevision:
        """Atomic validate-then-commit for one mount change.

        Holds an exclusive scope over the child entity across
        configurations for the whole check-and-write, so two racing
        conflicting mounts can never both commit.
        """
        ops = [op for op in (add, update, remove_id) if op is not None]
        if len(ops) != 1:
            raise ValueError("exactly one of add/update/remove_id required")
        probe = self._records["configuration"].get(configuration_id)
        if probe is None:
            raise NotFoundError(f"configuration {configuration_id!r} not found")
        if add is not None:
            child_id = add.child.id
        elif update is not None:
            child_id = update.child.id
        else:
            child_id = next(
                (mount.child.id for mount in probe.mount_actions if mount.id == remove_id), None
            )
            if child_id is None:
                raise NotFoundError(f"mount {remove_id!r} not found")
        with self.scoped_lock(f"mount-child:{child_id}"):
            with self.scoped_lock(f"record:configuration:{configuration_id}"):
                configuration = self.get(m.EntityKind.CONFIGURATION, configuration_id)
                mounts = list(configuration.mount_actions)
                if add is not None:
                    mounts.append(add)
                elif update is not None:
                    position = next((i for i, a in enumerate(mounts) if a.id == update.id), None)
                    if position is None:
                        raise NotFoundError(f"mount {update.id!r} not found")
                    mounts[position] = update
                else:
                    before = len(mounts)
                    mounts = [a for a in mounts if a.id != remove_id]
                    if len(mounts) == before:
                        raise NotFoundError(f"mount {remove_id!r} not found")
                candidate = replace(configuration, mount_actions=tuple(mounts))
                return self.put_entity(candidate, expected_version=configuration.version, updated_by=updated_by)

    # -- blobs ------------------------------------------------------------------------

    def put_blob(self, data: bytes, media_type: str = "application/octet-stream") -> BlobRef:
        """Content-addressed and idempotent: equal bytes, equal ref."""
        if len(data) > self.blob_limit:
            raise BlobTooLargeError(f"blob of {len(data)} bytes exceeds limit {self.blob_limit}")
        digest = hashlib.sha256(data).hexdigest()
        if self.data_dir is not None:
            blob_dir = self.data_dir / "blobs" / digest[:2]
            blob_dir.mkdir(parents=True, exist_ok=True)
            path = blob_dir / digest
            if not path.exists():
                _atomic_write(path, data)
        else:
            self._blob_memory[digest] = data
        return BlobRef(content_hash=digest, size_bytes=len(data), media_type=media_type)

    def get_blob(self, content_hash: str) -> bytes:
        if self.data_dir is not None:
            path = self.data_dir / "blobs" / content_hash[:2] / content_hash
            if not path.exists():
                raise NotFoundError(f"no blob {content_hash!r}")
            data = path.read_bytes()
        else:
            if content_hash not in self._blob_memory:
                raise NotFoundError(f"no blob {content_hash!r}")
            data = self._blob_memory[content_hash]
        if hashlib.sha256(data).hexdigest() != content_hash:
            raise NotFoundError(f"blob {content_hash!r} failed its hash check")
        return data

    # -- search -------------------------------------------------------------------------

    def _index_entity(self, entity: m.Entity) -> None:
        kind = m.kind_of(entity)
        key = (kind.value, entity.id)
        if entity.archived:
            with self._index_guard:
                self._index.remove(key)
            return
        fields: list[tuple[str, float]] = [(m.display_name(entity), 3.0)]
        fields.append((getattr(entity, "description", ""), 1.0))
        for attr in ("serial_number", "inventory_number", "urn", "model", "project", "email", "organization"):
            fields.append((getattr(entity, attr, "") or "", 2.0))
        for ref in _term_refs_of(entity):
            term = self._records["vocabulary_term"].get(ref)
            if term is not None:
                fields.append((term.term, 2.0))
        for role in getattr(entity, "contacts", ()):
            contact = self.try_get_contact(role.contact)
            if contact is not None:
                fields.append((f"{contact.given_name} {contact.family_name}", 1.0))
        with self._index_guard:
            self._index.upsert(key, weighted_tokens(fields))

    def rebuild_index(self) -> None:
        with self._index_guard:
            self._index.clear()
        for kind in ENTITY_KINDS:
            for entity in list(self._records[kind].values()):
                self._index_entity(entity)

    def search(
        self,
        query: str,
        kind_filter: Optional[m.EntityKind] = None,
        principal: Optional[Principal] = None,
        limit: int = 50,
    ) -> list[SearchHit]:
        """Ranked, visibility-filtered token/prefix search.

        An empty query returns nothing by contract (listing is the list
        endpoint's job).
        """
        principal = principal or Principal()
        tokens = tokenize(query)
        if not tokens:
            return []
        kinds = {kind_filter.value} if kind_filter is not None else None
        with self._index_guard:
            scores = self._index.query(tokens, kinds=kinds)
        hits: list[SearchHit] = []
        for (kind_value, entity_id), score in scores.items():
            entity = self._records[kind_value].get(entity_id)
            if entity is None or entity.archived:
                continue
            if not self.readable(principal, entity):
                continue
            hits.append(SearchHit(ref=m.EntityRef(m.EntityKind(kind_value), entity_id), score=score, name=m.display_name(entity)))
        hits.sort(key=lambda hit: (-hit.score, hit.ref.kind.value, hit.ref.id))
        return hits[:limit]

    def readable(self, principal: Principal, entity: m.Entity) -> bool:
        if isinstance(entity, m.Contact):
            return principal.is_authenticated
        return can_read(principal, entity.visibility, entity.owner_group)

    # -- vocabulary records ----------------------------------------------------------------

    def get_term(self, term_id: str) -> Optional[VocabularyTerm]:
        return self._records["vocabulary_term"].get(term_id)

    def iter_terms(self) -> Iterator[VocabularyTerm]:
        return iter(list(self._records["vocabulary_term"].values()))

    def put_term(self, term: VocabularyTerm) -> None:
        self._put_record("vocabulary_term", term)

    def get_ticket(self, ticket_id: str) -> Optional[CurationTicket]:
        return self._records["curation_ticket"].get(ticket_id)

    def iter_tickets(self) -> Iterator[CurationTicket]:
        return iter(list(self._records["curation_ticket"].values()))

    def put_ticket(self, ticket: CurationTicket) -> None:
        self._put_record("curation_ticket", ticket)

    def find_term_references(self, term_id: str) -> list[m.EntityRef]:
        refs = []
        for kind in ENTITY_KINDS:
            for entity in self._records[kind].values():
                if term_id in _term_refs_of(entity):
                    refs.append(m.ref_of(entity))
        refs.sort(key=lambda r: (r.kind.value, r.id))
        return refs

    # -- directory records --------------------------------------------------------------------

    def put_group(self, group: Group) -> Group:
        for other in self._records["group"].values():
            if other.id != group.id and other.name == group.name:
                raise ValidationFailedError(
                    _single_violation("name", f"group name {group.name!r} is already taken")
                )
        if group.version == 0:
            group = replace(group, version=1, created_at=self.now())
        self._put_record("group", group)
        return group

    def get_group_by_name(self, name: str) -> Optional[Group]:
        for group in self._records["group"].values():
            if group.name == name:
                return group
        return None

    def iter_groups(self) -> Iterator[Group]:
        return iter(list(self._records["group"].values()))

    def put_account(self, account: Account) -> Account:
        for other in self._records["account"].values():
            if other.id != account.id and other.username == account.username:
                raise ValidationFailedError(
                    _single_violation("username", f"username {account.username!r} is already taken")
                )
        if account.version == 0:
            account = replace(account, version=1, created_at=self.now())
        self._put_record("account", account)
        return account

    def get_account(self, account_id: str) -> Optional[Account]:
        return self._records["account"].get(account_id)

    def get_account_by_username(self, username: str) -> Optional[Account]:
        for account in self._records["account"].values():
            if account.username == username:
                return account
        return None

    def put_api_key(self, key: ApiKey) -> ApiKey:
        if key.version == 0:
            key = replace(key, version=1, created_at=self.now())
        self._put_record("api_key", key)
        return key

    def get_api_key_by_secret(self, secret: str) -> Optional[ApiKey]:
        hashed = hash_api_key(secret)
        for key in self._records["api_key"].values():
            if key.key_hash == hashed and key.active:
                return key
        return None

    def contact_for_account(self, account_id: str) -> Optional[m.Contact]:
        for contact in self._records["contact"].values():
            if contact.account_id == account_id and not contact.archived:
                return contact
        return None

    # -- pid records ------------------------------------------------------------------------------

    def get_pid_record_for(self, entity_id: str) -> Optional[PidRecord]:
        for record in self._records["pid_record"].values():
            if record.entity_id == entity_id:
                return record
        return None

    def put_pid_record(self, record: PidRecord) -> None:
        self._put_record("pid_record", record)

    def iter_pid_records(self) -> Iterator[PidRecord]:
        return iter(list(self._records["pid_record"].values()))

    def _put_record(self, kind: str, record: Any) -> None:
        with self.scoped_lock(f"record:{kind}:{_record_id(record)}"):
            payload = canonical_json(encode_record(record))
            if self.data_dir is not None:
                revision_dir = self.data_dir / "revisions" / kind / _record_id(record)
                revision_dir.mkdir(parents=True, exist_ok=True)
                _atomic_write(revision_dir / f"{record.version:06d}.json", payload.encode())
                record_dir = self.data_dir / "records" / kind
                record_dir.mkdir(parents=True, exist_ok=True)
                _atomic_write(record_dir / f"{_record_id(record)}.json", payload.encode())
            self._records[kind][_record_id(record)] = record

    # -- whole-store validation ----------------------------------------------------------------------

    def validate_all(self) -> list[tuple[m.EntityRef, m.Violation]]:
        """Re-run every record, temporal and exclusivity invariant.

        Returns one (entity, violation) row per finding.  Warnings (for
        example references to meanwhile-deprecated terms) do not fail
        validation; fetch them via :meth:`validation_warnings`.
        """
        findings: list[tuple[m.EntityRef, m.Violation]] = []
        for kind in ENTITY_KINDS:
            for entity in self._records[kind].values():
                if entity.archived:
                    continue
                report = m.validate_record(entity, term_resolver=self.vocabulary.term_info)
                self._cross_checks(entity, report)
                for violation in report.violations:
                    findings.append((m.ref_of(entity), violation))
        for configuration in self._records["configuration"].values():
            if configuration.archived:
                continue
            result = temporal.check_configuration_consistency(configuration)
            if not result.ok:
                findings.append(
                    (m.ref_of(configuration), m.Violation("mount_actions", result.describe()))
                )
        for child_id, pairs in sorted(self._mounts_by_child.items()):
            ordered = sorted(pairs, key=lambda p: (p[1].interval.begin, p[1].id))
            for (config_a, mount_a), (config_b, mount_b) in zip(ordered, ordered[1:]):
                if temporal.interval_overlaps(mount_a.interval, mount_b.interval):
                    child = mount_a.child
                    findings.append(
                        (
                            child,
                            m.Violation(
                                "mounts",
                                f"mounted in configurations {config_a} and {config_b} simultaneously "
                                f"(mounts {mount_a.id}, {mount_b.id})",
                            ),
                        )
                    )
        return findings

    def validation_warnings(self) -> list[tuple[m.EntityRef, m.Violation]]:
        """Non-fatal findings: references to deprecated or pending terms
        stay valid but are worth surfacing to operators."""
        warnings: list[tuple[m.EntityRef, m.Violation]] = []
        for kind in ENTITY_KINDS:
            for entity in self._records[kind].values():
                if entity.archived:
                    continue
                report = m.validate_record(entity, term_resolver=self.vocabulary.term_info)
                for warning in report.warnings:
                    warnings.append((m.ref_of(entity), warning))
        return warnings


def _record_id(record: Any) -> str:
    return record.id


def _single_violation(path: str, message: str) -> m.ValidationReport:
    report = m.ValidationReport()
    report.error(path, message)
    return report


def _term_refs_of(entity: m.Entity) -> set[str]:
    refs: set[str] = set()

    def add(ref: Optional[str]) -> None:
        if ref:
            refs.add(ref)

    add(getattr(entity, "device_type", None))
    add(getattr(entity, "platform_type", None))
    add(getattr(entity, "manufacturer", None))
    add(getattr(entity, "usage", None))
    for mq in getattr(entity, "measured_quantities", ()):
        for attr in ("compartment", "sampling_media", "quantity", "unit", "accuracy_unit", "resolution_unit"):
            add(getattr(mq, attr))
    for role in getattr(entity, "contacts", ()):
        add(role.role)
    for parameter in getattr(entity, "parameters", ()):
        add(parameter.unit)
    for action in getattr(entity, "actions", ()):
        add(action.kind)
    return refs


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(data)
    os.replace(tmp, path)
