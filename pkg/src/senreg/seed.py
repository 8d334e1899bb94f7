"""Base vocabulary, demo dataset and the idempotent seed-bundle loader.

A seed bundle is one JSON document holding vocabulary rows plus entity
records in their canonical serialization, grouped by kind.  Loading is
idempotent over natural keys (term text, group name, email, short name,
label): a second run of the same bundle changes nothing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from senreg import model as m
from senreg.auth import Group
from senreg.errors import MountConflictError, RegistryError, ValidationFailedError
from senreg.serialization import decode_record, encode_record
from senreg.storage import Store
from senreg.vocabulary import TermDraft

BUNDLE_ENTITY_SECTIONS = ("contacts", "sites", "devices", "platforms", "configurations")


class SeedError(RegistryError):
    code = "seed_failed"


def term_id_for(category: m.TermCategory, term: str) -> str:
    """Deterministic id for imported terms so bundles can reference them."""
    digest = hashlib.sha1(f"{category.value}\x00{term.strip().casefold()}".encode()).hexdigest()
    return f"cv{digest[:16]}"


_BASE_TERMS: dict[m.TermCategory, list[str]] = {
    m.TermCategory.EQUIPMENT_TYPE: [
        "Weather station", "Thermometer", "Rain gauge", "Data logger", "Pressure sensor", "GNSS receiver",
    ],
    m.TermCategory.MANUFACTURER: ["Campbell", "OTT HydroMet", "Vaisala", "Decagon"],
    m.TermCategory.CONTACT_ROLE: ["Owner", "PI", "Technical Coordinator", "Technician"],
    m.TermCategory.UNIT: ["°C", "mm", "hPa", "m", "m/s", "%", "degree"],
    m.TermCategory.MEASURED_QUANTITY: [
        "Air temperature", "Precipitation", "Relative humidity", "Air pressure",
        "Wind speed", "Water level", "Latitude", "Longitude", "Height above sea level",
    ],
    m.TermCategory.COMPARTMENT: ["Atmosphere", "Pedosphere", "Hydrosphere"],
    m.TermCategory.SAMPLING_MEDIA: ["Air", "Soil", "Water"],
    m.TermCategory.ACTION_TYPE: ["Maintenance", "Calibration", "Site visit", "Firmware update"],
    m.TermCategory.PLATFORM_TYPE: ["Tripod", "Tower", "Buoy", "Vessel"],
    m.TermCategory.SITE_USAGE: ["Observatory", "Field site", "Laboratory"],
}


def base_vocabulary() -> list[TermDraft]:
    drafts = []
    for category, terms in _BASE_TERMS.items():
        for term in terms:
            drafts.append(TermDraft(category=category, term=term, definition=f"{term} ({category.value})"))
    return drafts


def install_base_vocabulary(store: Store) -> int:
    """Upsert the curated defaults; returns how many terms were created."""
    created = 0
    for draft in base_vocabulary():
        _, was_created = store.vocabulary.upsert_accepted(
            draft, term_id=term_id_for(draft.category, draft.term)
        )
        created += int(was_created)
    return created


def cv(category: m.TermCategory, term: str) -> str:
    """Reference helper used by bundles and tests; id of a base term."""
    return term_id_for(category, term)


@dataclass
class SeedReport:
    created: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def count(self, section: str, created: bool) -> None:
        bucket = self.created if created else self.skipped
        bucket[section] = bucket.get(section, 0) + 1

    def as_dict(self) -> dict:
        return {"created": dict(sorted(self.created.items())), "skipped": dict(sorted(self.skipped.items()))}


def _natural_key(kind: str, doc: dict) -> Optional[str]:
    if kind in ("device", "platform"):
        return doc.get("short_name", "").strip().casefold() or None
    if kind in ("configuration", "site"):
        return doc.get("label", "").strip().casefold() or None
    if kind == "contact":
        return doc.get("email", "").strip().casefold() or None
    return None


def _existing_keys(store: Store, kind: m.EntityKind) -> set[str]:
    keys = set()
    for entity in store.iter_entities(kind):
        doc = encode_record(entity)
        key = _natural_key(kind.value, doc)
        if key:
            keys.add(key)
    return keys


def _apply_bundle(store: Store, bundle: dict, report: Optional[SeedReport]) -> None:
    for i, row in enumerate(bundle.get("vocabulary", [])):
        try:
            category = m.TermCategory(row["category"])
        except (KeyError, ValueError) as exc:
            raise SeedError(f"vocabulary[{i}]: bad category") from exc
        draft = TermDraft(
            category=category,
            term=row.get("term", ""),
            definition=row.get("definition", ""),
            provenance=row.get("provenance", ""),
            provenance_uri=row.get("provenance_uri"),
            global_provenance=row.get("global_provenance"),
            synonyms=tuple(row.get("synonyms", [])),
        )
        if not draft.term.strip():
            raise SeedError(f"vocabulary[{i}]: empty term")
        _, was_created = store.vocabulary.upsert_accepted(
            draft, term_id=row.get("id") or term_id_for(category, draft.term)
        )
        if report:
            report.count("vocabulary", was_created)
    for i, row in enumerate(bundle.get("groups", [])):
        name = row.get("name", "")
        if not name:
            raise SeedError(f"groups[{i}]: name required")
        if store.get_group_by_name(name) is None:
            group = Group(name=name, display_name=row.get("display_name", name), id=row.get("id") or store.new_id())
            store.put_group(group)
            if report:
                report.count("groups", True)
        elif report:
            report.count("groups", False)
    for section in BUNDLE_ENTITY_SECTIONS:
        kind_value = {"contacts": "contact", "sites": "site", "devices": "device",
                      "platforms": "platform", "configurations": "configuration"}[section]
        kind = m.EntityKind(kind_value)
        existing = _existing_keys(store, kind)
        for i, doc in enumerate(bundle.get(section, [])):
            key = _natural_key(kind_value, doc)
            if key is None:
                raise SeedError(f"{section}[{i}]: missing natural key")
            if key in existing:
                if report:
                    report.count(section, False)
                continue
            try:
                entity = decode_record(dict(doc), kind=kind_value)
            except ValueError as exc:
                raise SeedError(f"{section}[{i}]: {exc}") from exc
            try:
                store.put_entity(entity)
            except (ValidationFailedError, MountConflictError) as exc:
                detail = exc.report.violations if isinstance(exc, ValidationFailedError) else exc.result.describe()
                raise SeedError(f"{section}[{i}] ({key}): {detail}") from exc
            existing.add(key)
            if report:
                report.count(section, True)


def load_bundle(store: Store, bundle: dict) -> SeedReport:
    """Validate the whole bundle on a staging copy, then apply.

    Any violation aborts before the durable store is touched, so a bad
    bundle never leaves a partial load behind.
    """
    staging = store.clone_in_memory()
    _apply_bundle(staging, bundle, None)
    report = SeedReport()
    _apply_bundle(store, bundle, report)
    return report


def load_bundle_path(store: Store, path: Path) -> SeedReport:
    try:
        bundle = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SeedError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(bundle, dict):
        raise SeedError(f"{path}: bundle must be a JSON object")
    return load_bundle(store, bundle)


# --- demo dataset ------------------------------------------------------------------


def demo_bundle() -> dict:
    """A small self-consistent station: one tripod, two instruments.

    Mount plan (UTC):
      tripod on root           2020-01-01 ..
      weather sensor on tripod 2020-01-15 ..            (offset up 1.5 m)
      rain gauge on tripod     2020-01-15 .. 2021-06-01 (offset up 1.0 m)
    """
    owner = cv(m.TermCategory.CONTACT_ROLE, "Owner")
    technician = cv(m.TermCategory.CONTACT_ROLE, "Technician")
    degc = cv(m.TermCategory.UNIT, "°C")
    bundle = {
        "vocabulary": [],
        "groups": [{"id": "grp-field-ops", "name": "field-ops", "display_name": "Field Operations"}],
        "contacts": [
            {
                "id": "con-avogel",
                "given_name": "Anna",
                "family_name": "Vogel",
                "email": "anna.vogel@example.org",
                "organization": "Example Observatory",
            },
            {
                "id": "con-bklein",
                "given_name": "Ben",
                "family_name": "Klein",
                "email": "ben.klein@example.org",
                "organization": "Example Observatory",
            },
        ],
        "sites": [
            {
                "id": "site-demo-observatory",
                "label": "Demo observatory",
                "description": "Grassland plot used by the demo station.",
                "geometry": [
                    {"latitude": 49.001, "longitude": 11.999},
                    {"latitude": 49.001, "longitude": 12.001},
                    {"latitude": 48.999, "longitude": 12.001},
                    {"latitude": 48.999, "longitude": 11.999},
                ],
                "usage": cv(m.TermCategory.SITE_USAGE, "Observatory"),
                "visibility": "public",
                "owner_group": "grp-field-ops",
            }
        ],
        "devices": [
            {
                "id": "dev-climavue50-001",
                "short_name": "ClimaVUE50-001",
                "description": "All-in-one weather sensor of the demo station.",
                "device_type": cv(m.TermCategory.EQUIPMENT_TYPE, "Weather station"),
                "manufacturer": cv(m.TermCategory.MANUFACTURER, "Campbell"),
                "model": "ClimaVUE50",
                "serial_number": "CV50-8431",
                "inventory_number": "INV-2019-0042",
                "visibility": "public",
                "owner_group": "grp-field-ops",
                "measured_quantities": [
                    {
                        "id": "mq-cv50-airtemp",
                        "compartment": cv(m.TermCategory.COMPARTMENT, "Atmosphere"),
                        "sampling_media": cv(m.TermCategory.SAMPLING_MEDIA, "Air"),
                        "quantity": cv(m.TermCategory.MEASURED_QUANTITY, "Air temperature"),
                        "unit": degc,
                        "range_min": -50,
                        "range_max": 60,
                        "accuracy": 0.6,
                        "accuracy_unit": degc,
                        "resolution": 0.1,
                        "resolution_unit": degc,
                        "label": "Air temperature",
                    },
                    {
                        "id": "mq-cv50-rh",
                        "compartment": cv(m.TermCategory.COMPARTMENT, "Atmosphere"),
                        "sampling_media": cv(m.TermCategory.SAMPLING_MEDIA, "Air"),
                        "quantity": cv(m.TermCategory.MEASURED_QUANTITY, "Relative humidity"),
                        "unit": cv(m.TermCategory.UNIT, "%"),
                        "range_min": 0,
                        "range_max": 100,
                        "label": "Relative humidity",
                    },
                ],
                "contacts": [
                    {"contact": "con-avogel", "role": owner},
                    {"contact": "con-bklein", "role": technician},
                ],
                "parameters": [
                    {
                        "id": "par-cv50-cable",
                        "label": "Cable length",
                        "description": "Length of the signal cable",
                        "unit": cv(m.TermCategory.UNIT, "m"),
                        "value_actions": [
                            {"timestamp": "2020-01-15T09:00:00Z", "value": "5", "contact": "con-bklein"}
                        ],
                    }
                ],
                "custom_fields": [{"key": "Supplier", "value": "Campbell Scientific Ltd."}],
                "attachments": [
                    {
                        "id": "att-cv50-manual",
                        "label": "Operator manual",
                        "origin": "url",
                        "url": "https://docs.example.org/climavue50.pdf",
                        "media_type": "application/pdf",
                        "is_preview_image": False,
                    }
                ],
                "actions": [
                    {
                        "id": "act-cv50-calibration",
                        "kind": cv(m.TermCategory.ACTION_TYPE, "Calibration"),
                        "when": "2020-06-10T08:00:00Z",
                        "description": "Factory recalibration of the temperature sensor.",
                        "contact": "con-bklein",
                    }
                ],
            },
            {
                "id": "dev-raingauge-007",
                "short_name": "RainGauge-007",
                "description": "Tipping bucket rain gauge.",
                "device_type": cv(m.TermCategory.EQUIPMENT_TYPE, "Rain gauge"),
                "manufacturer": cv(m.TermCategory.MANUFACTURER, "OTT HydroMet"),
                "model": "Pluvio2",
                "serial_number": "PL2-1107",
                "inventory_number": "INV-2018-0315",
                "visibility": "public",
                "owner_group": "grp-field-ops",
                "measured_quantities": [
                    {
                        "id": "mq-rg7-precip",
                        "compartment": cv(m.TermCategory.COMPARTMENT, "Atmosphere"),
                        "sampling_media": cv(m.TermCategory.SAMPLING_MEDIA, "Air"),
                        "quantity": cv(m.TermCategory.MEASURED_QUANTITY, "Precipitation"),
                        "unit": cv(m.TermCategory.UNIT, "mm"),
                        "range_min": 0,
                        "range_max": 500,
                        "label": "Precipitation",
                    }
                ],
                "contacts": [{"contact": "con-avogel", "role": owner}],
            },
        ],
        "platforms": [
            {
                "id": "plat-tripod-alpha",
                "short_name": "Tripod-Alpha",
                "description": "Standard 2 m tripod.",
                "platform_type": cv(m.TermCategory.PLATFORM_TYPE, "Tripod"),
                "visibility": "public",
                "owner_group": "grp-field-ops",
                "contacts": [{"contact": "con-avogel", "role": owner}],
            }
        ],
        "configurations": [
            {
                "id": "cfg-demo-station",
                "label": "Demo climate station",
                "description": "Reference station used in walkthroughs.",
                "status": "active",
                "site": "site-demo-observatory",
                "project": "DEMO",
                "visibility": "public",
                "owner_group": "grp-field-ops",
                "contacts": [{"contact": "con-avogel", "role": owner}],
                "mount_actions": [
                    {
                        "id": "mnt-tripod",
                        "child": {"kind": "platform", "id": "plat-tripod-alpha"},
                        "parent": None,
                        "interval": {"begin": "2020-01-01T00:00:00Z", "end": None},
                        "begin_contact": "con-bklein",
                        "begin_description": "Tripod erected at plot center.",
                    },
                    {
                        "id": "mnt-climavue",
                        "child": {"kind": "device", "id": "dev-climavue50-001"},
                        "parent": {"kind": "platform", "id": "plat-tripod-alpha"},
                        "interval": {"begin": "2020-01-15T00:00:00Z", "end": None},
                        "offset_z": 1.5,
                        "begin_contact": "con-bklein",
                        "begin_description": "Sensor head mounted on crossbar.",
                    },
                    {
                        "id": "mnt-raingauge",
                        "child": {"kind": "device", "id": "dev-raingauge-007"},
                        "parent": {"kind": "platform", "id": "plat-tripod-alpha"},
                        "interval": {"begin": "2020-01-15T00:00:00Z", "end": "2021-06-01T00:00:00Z"},
                        "offset_x": 0.4,
                        "offset_z": 1.0,
                        "begin_contact": "con-bklein",
                        "end_contact": "con-bklein",
                        "end_description": "Gauge moved to the maintenance bench.",
                    },
                ],
                "location_actions": [
                    {
                        "id": "loc-demo-static",
                        "interval": {"begin": "2020-01-01T00:00:00Z", "end": None},
                        "location": {
                            "type": "static",
                            "latitude": 49.0,
                            "longitude": 12.0,
                            "height": 440.0,
                            "epsg_code": "4326",
                        },
                        "label": "Plot center",
                        "contact": "con-bklein",
                    }
                ],
            }
        ],
    }
    return bundle
