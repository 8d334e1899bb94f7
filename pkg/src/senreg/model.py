"""Domain records and single-record validation for the sensor registry.

The data model is time-resolved: deployment history is kept as explicit
half-open time intervals on mount and location actions instead of dated
snapshots of whole entities.  Records here are immutable value objects;
all mutation goes through storage transactions.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Optional, Union

EntityId = str
GroupId = str
TermRef = str

UTC = timezone.utc

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


def new_entity_id() -> EntityId:
    """Mint a fresh opaque identifier; identifiers are never reused."""
    return uuid.uuid4().hex


def utcnow() -> datetime:
    return datetime.now(tz=UTC)


def ensure_utc(value: datetime) -> datetime:
    """Normalize an aware datetime to UTC; naive datetimes are rejected."""
    if value.tzinfo is None:
        raise ValueError("instants must be timezone-aware")
    return value.astimezone(UTC)


def format_instant(value: datetime) -> str:
    """RFC 3339 UTC string, with microseconds only when nonzero."""
    value = ensure_utc(value)
    if value.microsecond:
        return value.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_instant(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; the result is always UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"unparsable timestamp: {text!r}") from exc
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp lacks a UTC offset: {text!r}")
    return parsed.astimezone(UTC)


class EntityKind(str, Enum):
    DEVICE = "device"
    PLATFORM = "platform"
    CONFIGURATION = "configuration"
    SITE = "site"
    CONTACT = "contact"


MOUNTABLE_KINDS = (EntityKind.DEVICE, EntityKind.PLATFORM)


class Visibility(str, Enum):
    PRIVATE = "private"
    INTERNAL = "internal"
    PUBLIC = "public"


class ConfigurationStatus(str, Enum):
    DRAFT = "draft"
    ACTIVE = "active"
    DEPRECATED = "deprecated"


class AttachmentOrigin(str, Enum):
    FILE = "file"
    URL = "url"


class TermCategory(str, Enum):
    EQUIPMENT_TYPE = "equipment_type"
    MANUFACTURER = "manufacturer"
    CONTACT_ROLE = "contact_role"
    UNIT = "unit"
    MEASURED_QUANTITY = "measured_quantity"
    COMPARTMENT = "compartment"
    SAMPLING_MEDIA = "sampling_media"
    ACTION_TYPE = "action_type"
    PLATFORM_TYPE = "platform_type"
    SITE_USAGE = "site_usage"


class TermStatus(str, Enum):
    PROPOSED = "proposed"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    DEPRECATED = "deprecated"


@dataclass(frozen=True)
class TimeInterval:
    """Half-open UTC interval [begin, end); a missing end means ongoing."""

    begin: datetime
    end: Optional[datetime] = None

    def contains(self, at: datetime) -> bool:
        if at < self.begin:
            return False
        return self.end is None or at < self.end

    @property
    def is_open(self) -> bool:
        return self.end is None


@dataclass(frozen=True)
class EntityRef:
    kind: EntityKind
    id: EntityId


@dataclass(frozen=True)
class Offset:
    """Local offset in meters, east/north/up relative to the parent frame."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Offset") -> "Offset":
        return Offset(self.x + other.x, self.y + other.y, self.z + other.z)


@dataclass(frozen=True)
class ContactRole:
    contact: EntityId
    role: TermRef


@dataclass(frozen=True)
class CustomField:
    key: str
    value: str = ""


@dataclass(frozen=True)
class MeasuredQuantity:
    id: EntityId = field(default_factory=new_entity_id)
    compartment: Optional[TermRef] = None
    sampling_media: Optional[TermRef] = None
    quantity: Optional[TermRef] = None
    unit: Optional[TermRef] = None
    range_min: Optional[float] = None
    range_max: Optional[float] = None
    accuracy: Optional[float] = None
    accuracy_unit: Optional[TermRef] = None
    resolution: Optional[float] = None
    resolution_unit: Optional[TermRef] = None
    label: str = ""


@dataclass(frozen=True)
class ParameterValue:
    timestamp: datetime
    value: str
    contact: Optional[EntityId] = None


@dataclass(frozen=True)
class Parameter:
    id: EntityId = field(default_factory=new_entity_id)
    label: str = ""
    description: str = ""
    unit: Optional[TermRef] = None
    value_actions: tuple[ParameterValue, ...] = ()


@dataclass(frozen=True)
class Attachment:
    id: EntityId = field(default_factory=new_entity_id)
    label: str = ""
    origin: AttachmentOrigin = AttachmentOrigin.URL
    url: Optional[str] = None
    blob_ref: Optional[str] = None
    media_type: str = ""
    is_preview_image: bool = False
    uploaded_at: Optional[datetime] = None
    uploaded_by: Optional[EntityId] = None


@dataclass(frozen=True)
class GenericAction:
    """An event tied to an entity: maintenance, calibration, site visit, ..."""

    id: EntityId = field(default_factory=new_entity_id)
    kind: Optional[TermRef] = None
    when: Union[TimeInterval, datetime, None] = None
    description: str = ""
    contact: Optional[EntityId] = None
    attachments: tuple[Attachment, ...] = ()

    @property
    def begin(self) -> Optional[datetime]:
        if isinstance(self.when, TimeInterval):
            return self.when.begin
        return self.when


@dataclass(frozen=True)
class MountAction:
    """Time-bounded attachment of a device or platform below a parent.

    ``parent=None`` denotes the configuration root.  ``absolute_offset``,
    when set, replaces the offsets accumulated along the mount chain.
    """

    child: EntityRef
    interval: TimeInterval
    id: EntityId = field(default_factory=new_entity_id)
    parent: Optional[EntityRef] = None
    offset_x: float = 0.0
    offset_y: float = 0.0
    offset_z: float = 0.0
    absolute_offset: Optional[Offset] = None
    begin_contact: Optional[EntityId] = None
    end_contact: Optional[EntityId] = None
    begin_description: str = ""
    end_description: str = ""

    @property
    def offset(self) -> Offset:
        return Offset(self.offset_x, self.offset_y, self.offset_z)


@dataclass(frozen=True)
class QuantityRef:
    """Points at one measured quantity of a device mounted in the configuration."""

    device: EntityId
    quantity: EntityId


@dataclass(frozen=True)
class StaticLocation:
    latitude: float
    longitude: float
    height: float = 0.0
    epsg_code: str = "4326"


@dataclass(frozen=True)
class DynamicLocation:
    x_source: Optional[QuantityRef] = None
    y_source: Optional[QuantityRef] = None
    z_source: Optional[QuantityRef] = None


@dataclass(frozen=True)
class LocationAction:
    interval: TimeInterval
    location: Union[StaticLocation, DynamicLocation]
    id: EntityId = field(default_factory=new_entity_id)
    label: str = ""
    contact: Optional[EntityId] = None


@dataclass(frozen=True)
class Device:
    """An electronic piece of equipment, described independently of any
    deployment: the record intentionally has no location fields."""

    id: EntityId = field(default_factory=new_entity_id)
    short_name: str = ""
    description: str = ""
    urn: str = ""
    pid: Optional[str] = None
    device_type: Optional[TermRef] = None
    manufacturer: Optional[TermRef] = None
    model: str = ""
    serial_number: str = ""
    inventory_number: str = ""
    visibility: Visibility = Visibility.INTERNAL
    owner_group: GroupId = ""
    measured_quantities: tuple[MeasuredQuantity, ...] = ()
    contacts: tuple[ContactRole, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    custom_fields: tuple[CustomField, ...] = ()
    attachments: tuple[Attachment, ...] = ()
    actions: tuple[GenericAction, ...] = ()
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    created_by: Optional[EntityId] = None
    updated_by: Optional[EntityId] = None
    version: int = 0
    archived: bool = False


@dataclass(frozen=True)
class Platform:
    """Equipment onto which devices are mounted (tower, tripod, vessel)."""

    id: EntityId = field(default_factory=new_entity_id)
    short_name: str = ""
    description: str = ""
    urn: str = ""
    pid: Optional[str] = None
    platform_type: Optional[TermRef] = None
    manufacturer: Optional[TermRef] = None
    model: str = ""
    serial_number: str = ""
    inventory_number: str = ""
    visibility: Visibility = Visibility.INTERNAL
    owner_group: GroupId = ""
    contacts: tuple[ContactRole, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    custom_fields: tuple[CustomField, ...] = ()
    attachments: tuple[Attachment, ...] = ()
    actions: tuple[GenericAction, ...] = ()
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    created_by: Optional[EntityId] = None
    updated_by: Optional[EntityId] = None
    version: int = 0
    archived: bool = False


@dataclass(frozen=True)
class Configuration:
    """The spatio-temporal assembly binding devices and platforms together."""

    id: EntityId = field(default_factory=new_entity_id)
    label: str = ""
    description: str = ""
    pid: Optional[str] = None
    status: ConfigurationStatus = ConfigurationStatus.DRAFT
    site: Optional[EntityId] = None
    project: str = ""
    visibility: Visibility = Visibility.INTERNAL
    owner_group: GroupId = ""
    contacts: tuple[ContactRole, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    custom_fields: tuple[CustomField, ...] = ()
    attachments: tuple[Attachment, ...] = ()
    actions: tuple[GenericAction, ...] = ()
    mount_actions: tuple[MountAction, ...] = ()
    location_actions: tuple[LocationAction, ...] = ()
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    created_by: Optional[EntityId] = None
    updated_by: Optional[EntityId] = None
    version: int = 0
    archived: bool = False


@dataclass(frozen=True)
class LatLon:
    latitude: float
    longitude: float


@dataclass(frozen=True)
class Site:
    """A region of interest grouping configurations; sites may nest."""

    id: EntityId = field(default_factory=new_entity_id)
    label: str = ""
    description: str = ""
    geometry: Optional[tuple[LatLon, ...]] = None
    parent_site: Optional[EntityId] = None
    usage: Optional[TermRef] = None
    visibility: Visibility = Visibility.INTERNAL
    owner_group: GroupId = ""
    contacts: tuple[ContactRole, ...] = ()
    attachments: tuple[Attachment, ...] = ()
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    created_by: Optional[EntityId] = None
    updated_by: Optional[EntityId] = None
    version: int = 0
    archived: bool = False


@dataclass(frozen=True)
class Contact:
    id: EntityId = field(default_factory=new_entity_id)
    given_name: str = ""
    family_name: str = ""
    email: str = ""
    organization: str = ""
    orcid: Optional[str] = None
    account_id: Optional[str] = None
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    created_by: Optional[EntityId] = None
    updated_by: Optional[EntityId] = None
    version: int = 0
    archived: bool = False


Entity = Union[Device, Platform, Configuration, Site, Contact]

ENTITY_TYPES: dict[EntityKind, type] = {
    EntityKind.DEVICE: Device,
    EntityKind.PLATFORM: Platform,
    EntityKind.CONFIGURATION: Configuration,
    EntityKind.SITE: Site,
    EntityKind.CONTACT: Contact,
}

KIND_BY_TYPE = {cls: kind for kind, cls in ENTITY_TYPES.items()}


def kind_of(entity: Entity) -> EntityKind:
    return KIND_BY_TYPE[type(entity)]


def ref_of(entity: Entity) -> EntityRef:
    return EntityRef(kind_of(entity), entity.id)


def display_name(entity: Entity) -> str:
    if isinstance(entity, (Device, Platform)):
        return entity.short_name
    if isinstance(entity, Contact):
        return f"{entity.given_name} {entity.family_name}".strip()
    return entity.label


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def error(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))

    def warn(self, path: str, message: str) -> None:
        self.warnings.append(Violation(path, message))

    def merge(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)
        self.warnings.extend(other.warnings)


@dataclass(frozen=True)
class TermInfo:
    """What a term resolver reports back about a vocabulary reference."""

    category: str
    status: str
    term: str = ""


TermResolver = Callable[[TermRef], Optional[TermInfo]]


def _check_interval(report: ValidationReport, path: str, interval: TimeInterval) -> None:
    if interval.begin.tzinfo is None:
        report.error(f"{path}.begin", "begin must be timezone-aware UTC")
        return
    if interval.end is not None:
        if interval.end.tzinfo is None:
            report.error(f"{path}.end", "end must be timezone-aware UTC")
        elif not interval.begin < interval.end:
            report.error(path, "begin < end required (zero-length intervals rejected)")


def _check_term(
    report: ValidationReport,
    path: str,
    ref: Optional[TermRef],
    expected: TermCategory,
    resolver: Optional[TermResolver],
    require_accepted: bool = False,
) -> None:
    if ref is None or resolver is None:
        return
    info = resolver(ref)
    if info is None:
        report.error(path, f"unknown vocabulary term {ref!r}")
        return
    if info.category != expected.value:
        report.error(
            path,
            f"term {info.term!r} has category {info.category!r}, expected {expected.value!r}",
        )
        return
    if info.status == TermStatus.REJECTED.value:
        report.error(path, f"term {info.term!r} was rejected by curation")
    elif info.status == TermStatus.PROPOSED.value:
        if require_accepted:
            report.error(path, f"term {info.term!r} is not yet accepted")
        else:
            report.warn(path, f"term {info.term!r} is pending curation")
    elif info.status == TermStatus.DEPRECATED.value:
        report.warn(path, f"term {info.term!r} is deprecated")


def _check_contact_roles(
    report: ValidationReport,
    roles: tuple[ContactRole, ...],
    resolver: Optional[TermResolver],
) -> None:
    seen: set[tuple[str, str]] = set()
    for i, role in enumerate(roles):
        key = (role.contact, role.role)
        if key in seen:
            report.error(f"contacts[{i}]", "duplicate (contact, role) pair")
        seen.add(key)
        _check_term(report, f"contacts[{i}].role", role.role, TermCategory.CONTACT_ROLE, resolver)


def _check_measured_quantity(
    report: ValidationReport, path: str, mq: MeasuredQuantity, resolver: Optional[TermResolver]
) -> None:
    if mq.range_min is not None and mq.range_max is not None and mq.range_min > mq.range_max:
        report.error(f"{path}.range_min", "range_min ≤ range_max required")
    if mq.accuracy is not None and mq.accuracy < 0:
        report.error(f"{path}.accuracy", "accuracy must be non-negative")
    if mq.resolution is not None and mq.resolution < 0:
        report.error(f"{path}.resolution", "resolution must be non-negative")
    _check_term(report, f"{path}.compartment", mq.compartment, TermCategory.COMPARTMENT, resolver)
    _check_term(report, f"{path}.sampling_media", mq.sampling_media, TermCategory.SAMPLING_MEDIA, resolver)
    _check_term(report, f"{path}.quantity", mq.quantity, TermCategory.MEASURED_QUANTITY, resolver)
    for unit_field in ("unit", "accuracy_unit", "resolution_unit"):
        _check_term(report, f"{path}.{unit_field}", getattr(mq, unit_field), TermCategory.UNIT, resolver)


def _check_parameters(
    report: ValidationReport, parameters: tuple[Parameter, ...], resolver: Optional[TermResolver]
) -> None:
    for i, parameter in enumerate(parameters):
        path = f"parameters[{i}]"
        if not parameter.label:
            report.error(f"{path}.label", "label must be non-empty")
        _check_term(report, f"{path}.unit", parameter.unit, TermCategory.UNIT, resolver)
        previous: Optional[datetime] = None
        for j, action in enumerate(parameter.value_actions):
            if previous is not None and action.timestamp <= previous:
                report.error(
                    f"{path}.value_actions[{j}]",
                    "value actions must be strictly ordered by timestamp",
                )
            previous = action.timestamp


def _check_attachments(
    report: ValidationReport, attachments: tuple[Attachment, ...], prefix: str = ""
) -> None:
    for i, attachment in enumerate(attachments):
        path = f"{prefix}attachments[{i}]"
        if not attachment.label:
            report.error(f"{path}.label", "label must be non-empty")
        if attachment.origin is AttachmentOrigin.URL:
            if not attachment.url:
                report.error(f"{path}.url", "url required for url-origin attachments")
            if attachment.blob_ref:
                report.error(f"{path}.blob_ref", "blob_ref must be empty for url-origin attachments")
        else:
            if not attachment.blob_ref:
                report.error(f"{path}.blob_ref", "blob_ref required for file-origin attachments")
            if attachment.url:
                report.error(f"{path}.url", "url must be empty for file-origin attachments")


def _check_actions(
    report: ValidationReport, actions: tuple[GenericAction, ...], resolver: Optional[TermResolver]
) -> None:
    for i, action in enumerate(actions):
        path = f"actions[{i}]"
        if action.kind is None:
            report.error(f"{path}.kind", "action kind is required")
        else:
            _check_term(
                report, f"{path}.kind", action.kind, TermCategory.ACTION_TYPE, resolver,
                require_accepted=True,
            )
        if isinstance(action.when, TimeInterval):
            _check_interval(report, f"{path}.when", action.when)
        elif action.when is None:
            report.error(f"{path}.when", "action requires an instant or interval")
        _check_attachments(report, action.attachments, prefix=f"{path}.")


def _check_mount_action(report: ValidationReport, path: str, mount: MountAction) -> None:
    if mount.child.kind not in MOUNTABLE_KINDS:
        report.error(f"{path}.child", "only devices and platforms can be mounted")
    if mount.parent is not None:
        if mount.parent == mount.child:
            report.error(f"{path}.parent", "child and parent must differ")
        elif mount.parent.kind is not EntityKind.PLATFORM:
            report.error(f"{path}.parent", "mount parents must be platforms or the configuration root")
    _check_interval(report, f"{path}.interval", mount.interval)


def _check_location_action(report: ValidationReport, path: str, action: LocationAction) -> None:
    _check_interval(report, f"{path}.interval", action.interval)
    loc = action.location
    if isinstance(loc, StaticLocation):
        if not -90.0 <= loc.latitude <= 90.0:
            report.error(f"{path}.latitude", "latitude must lie in [-90, 90]")
        if not -180.0 <= loc.longitude <= 180.0:
            report.error(f"{path}.longitude", "longitude must lie in [-180, 180]")
    else:
        if loc.x_source is None and loc.y_source is None and loc.z_source is None:
            report.error(f"{path}", "dynamic location requires at least one quantity source")


def _check_audit(report: ValidationReport, entity: Entity) -> None:
    if entity.version < 0:
        report.error("version", "version must be non-negative")
    if (
        entity.created_at is not None
        and entity.updated_at is not None
        and entity.updated_at < entity.created_at
    ):
        report.error("updated_at", "updated_at must not precede created_at")


def _validate_device(device: Device, resolver: Optional[TermResolver]) -> ValidationReport:
    report = ValidationReport()
    if not device.short_name:
        report.error("short_name", "short_name must be non-empty")
    _check_term(report, "device_type", device.device_type, TermCategory.EQUIPMENT_TYPE, resolver)
    _check_term(report, "manufacturer", device.manufacturer, TermCategory.MANUFACTURER, resolver)
    for i, mq in enumerate(device.measured_quantities):
        _check_measured_quantity(report, f"measured_quantities[{i}]", mq, resolver)
    _check_contact_roles(report, device.contacts, resolver)
    _check_parameters(report, device.parameters, resolver)
    _check_attachments(report, device.attachments)
    _check_actions(report, device.actions, resolver)
    _check_audit(report, device)
    return report


def _validate_platform(platform: Platform, resolver: Optional[TermResolver]) -> ValidationReport:
    report = ValidationReport()
    if not platform.short_name:
        report.error("short_name", "short_name must be non-empty")
    _check_term(report, "platform_type", platform.platform_type, TermCategory.PLATFORM_TYPE, resolver)
    _check_term(report, "manufacturer", platform.manufacturer, TermCategory.MANUFACTURER, resolver)
    _check_contact_roles(report, platform.contacts, resolver)
    _check_parameters(report, platform.parameters, resolver)
    _check_attachments(report, platform.attachments)
    _check_actions(report, platform.actions, resolver)
    _check_audit(report, platform)
    return report


def _validate_configuration(
    configuration: Configuration, resolver: Optional[TermResolver]
) -> ValidationReport:
    report = ValidationReport()
    if not configuration.label:
        report.error("label", "label must be non-empty")
    _check_contact_roles(report, configuration.contacts, resolver)
    _check_parameters(report, configuration.parameters, resolver)
    _check_attachments(report, configuration.attachments)
    _check_actions(report, configuration.actions, resolver)
    for i, mount in enumerate(configuration.mount_actions):
        _check_mount_action(report, f"mount_actions[{i}]", mount)
    for i, location in enumerate(configuration.location_actions):
        _check_location_action(report, f"location_actions[{i}]", location)
    _check_audit(report, configuration)
    return report


def _validate_site(site: Site, resolver: Optional[TermResolver]) -> ValidationReport:
    report = ValidationReport()
    if not site.label:
        report.error("label", "label must be non-empty")
    if site.geometry is not None:
        if len(site.geometry) < 3:
            report.error("geometry", "polygon requires at least 3 vertices")
        for i, vertex in enumerate(site.geometry):
            if not -90.0 <= vertex.latitude <= 90.0:
                report.error(f"geometry[{i}].latitude", "latitude must lie in [-90, 90]")
            if not -180.0 <= vertex.longitude <= 180.0:
                report.error(f"geometry[{i}].longitude", "longitude must lie in [-180, 180]")
    _check_term(report, "usage", site.usage, TermCategory.SITE_USAGE, resolver)
    _check_contact_roles(report, site.contacts, resolver)
    _check_attachments(report, site.attachments)
    _check_audit(report, site)
    return report


def _validate_contact(contact: Contact, resolver: Optional[TermResolver]) -> ValidationReport:
    report = ValidationReport()
    if not contact.given_name:
        report.error("given_name", "given_name must be non-empty")
    if not contact.family_name:
        report.error("family_name", "family_name must be non-empty")
    if not _EMAIL_RE.match(contact.email or ""):
        report.error("email", "syntactically valid email required")
    _check_audit(report, contact)
    return report


_VALIDATORS: dict[type, Callable[..., ValidationReport]] = {
    Device: _validate_device,
    Platform: _validate_platform,
    Configuration: _validate_configuration,
    Site: _validate_site,
    Contact: _validate_contact,
}


def validate_record(entity: Entity, *, term_resolver: Optional[TermResolver] = None) -> ValidationReport:
    """Check every single-record invariant of ``entity``.

    Violations are data, not exceptions: the report lists each broken
    invariant with a field path.  Vocabulary references are only checked
    when a resolver is supplied; cross-record rules (name uniqueness,
    mount conflicts, site cycles) live in the storage layer.
    """
    validator = _VALIDATORS.get(type(entity))
    if validator is None:
        raise TypeError(f"not a domain entity: {type(entity).__name__}")
    return validator(entity, term_resolver)


def touch(entity: Entity, *, at: datetime, by: Optional[EntityId] = None) -> Entity:
    """Return a copy with bumped version and refreshed audit fields."""
    return replace(
        entity,
        created_at=entity.created_at or at,
        created_by=entity.created_by if entity.created_by is not None else by,
        updated_at=at,
        updated_by=by,
        version=entity.version + 1,
    )
