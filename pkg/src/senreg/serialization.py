"""Canonical structured-text encoding of every record type.

One JSON document shape per record kind, shared by the wire protocol,
the on-disk store and the seed/dump format.  Timestamps are RFC 3339
UTC strings; documents are self-describing through their ``kind`` key.
Decoding is strict: unknown keys are rejected so that typos in client
patches surface as errors instead of silently dropped fields.
"""

from __future__ import annotations

import json
from typing import Any, Callable, Optional

from senreg import model as m
from senreg.auth import Account, ApiKey, Group
from senreg.pid import PidRecord
from senreg.vocabulary import CurationTicket, DiscussionNote, TicketState, VocabularyTerm


class DecodeError(ValueError):
    pass


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _enc_instant(value) -> Optional[str]:
    return None if value is None else m.format_instant(value)


def _dec_instant(value, path: str):
    if value is None:
        return None
    if not isinstance(value, str):
        raise DecodeError(f"{path}: expected RFC 3339 string")
    try:
        return m.parse_instant(value)
    except ValueError as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def _enc_interval(interval: m.TimeInterval) -> dict:
    return {"begin": _enc_instant(interval.begin), "end": _enc_instant(interval.end)}


def _dec_interval(doc, path: str) -> m.TimeInterval:
    if not isinstance(doc, dict) or "begin" not in doc:
        raise DecodeError(f"{path}: expected an interval object with 'begin'")
    _reject_unknown(doc, {"begin", "end"}, path)
    begin = _dec_instant(doc["begin"], f"{path}.begin")
    if begin is None:
        raise DecodeError(f"{path}.begin: required")
    return m.TimeInterval(begin=begin, end=_dec_instant(doc.get("end"), f"{path}.end"))


def _enc_ref(ref: Optional[m.EntityRef]) -> Optional[dict]:
    if ref is None:
        return None
    return {"kind": ref.kind.value, "id": ref.id}


def _dec_ref(doc, path: str) -> Optional[m.EntityRef]:
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise DecodeError(f"{path}: expected an entity reference object")
    _reject_unknown(doc, {"kind", "id"}, path)
    try:
        kind = m.EntityKind(doc["kind"])
    except (KeyError, ValueError) as exc:
        raise DecodeError(f"{path}.kind: unknown entity kind") from exc
    return m.EntityRef(kind=kind, id=str(doc["id"]))


def _reject_unknown(doc: dict, allowed: set, path: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise DecodeError(f"{path}: unknown field(s) {sorted(unknown)}")


def _opt_str(doc: dict, key: str, path: str) -> Optional[str]:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise DecodeError(f"{path}.{key}: expected string")
    return value


def _req_str(doc: dict, key: str, path: str, default: str = "") -> str:
    value = doc.get(key, default)
    if not isinstance(value, str):
        raise DecodeError(f"{path}.{key}: expected string")
    return value


def _opt_num(doc: dict, key: str, path: str) -> Optional[float]:
    value = doc.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(f"{path}.{key}: expected number")
    return float(value)


def _num(doc: dict, key: str, path: str, default: float = 0.0) -> float:
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(f"{path}.{key}: expected number")
    return float(value)


def _items(doc: dict, key: str, path: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise DecodeError(f"{path}.{key}: expected list")
    return value


# --- embedded records ---------------------------------------------------------


def _enc_contact_role(role: m.ContactRole) -> dict:
    return {"contact": role.contact, "role": role.role}


def _dec_contact_role(doc, path) -> m.ContactRole:
    _reject_unknown(doc, {"contact", "role"}, path)
    return m.ContactRole(contact=_req_str(doc, "contact", path), role=_req_str(doc, "role", path))


def _enc_custom_field(cf: m.CustomField) -> dict:
    return {"key": cf.key, "value": cf.value}


def _dec_custom_field(doc, path) -> m.CustomField:
    _reject_unknown(doc, {"key", "value"}, path)
    return m.CustomField(key=_req_str(doc, "key", path), value=_req_str(doc, "value", path))


def _enc_measured_quantity(mq: m.MeasuredQuantity) -> dict:
    return {
        "id": mq.id,
        "compartment": mq.compartment,
        "sampling_media": mq.sampling_media,
        "quantity": mq.quantity,
        "unit": mq.unit,
        "range_min": mq.range_min,
        "range_max": mq.range_max,
        "accuracy": mq.accuracy,
        "accuracy_unit": mq.accuracy_unit,
        "resolution": mq.resolution,
        "resolution_unit": mq.resolution_unit,
        "label": mq.label,
    }


_MQ_KEYS = {
    "id", "compartment", "sampling_media", "quantity", "unit", "range_min",
    "range_max", "accuracy", "accuracy_unit", "resolution", "resolution_unit", "label",
}


def _dec_measured_quantity(doc, path) -> m.MeasuredQuantity:
    _reject_unknown(doc, _MQ_KEYS, path)
    return m.MeasuredQuantity(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        compartment=_opt_str(doc, "compartment", path),
        sampling_media=_opt_str(doc, "sampling_media", path),
        quantity=_opt_str(doc, "quantity", path),
        unit=_opt_str(doc, "unit", path),
        range_min=_opt_num(doc, "range_min", path),
        range_max=_opt_num(doc, "range_max", path),
        accuracy=_opt_num(doc, "accuracy", path),
        accuracy_unit=_opt_str(doc, "accuracy_unit", path),
        resolution=_opt_num(doc, "resolution", path),
        resolution_unit=_opt_str(doc, "resolution_unit", path),
        label=_req_str(doc, "label", path),
    )


def _enc_parameter(parameter: m.Parameter) -> dict:
    return {
        "id": parameter.id,
        "label": parameter.label,
        "description": parameter.description,
        "unit": parameter.unit,
        "value_actions": [
            {"timestamp": _enc_instant(v.timestamp), "value": v.value, "contact": v.contact}
            for v in parameter.value_actions
        ],
    }


def _dec_parameter(doc, path) -> m.Parameter:
    _reject_unknown(doc, {"id", "label", "description", "unit", "value_actions"}, path)
    values = []
    for i, item in enumerate(_items(doc, "value_actions", path)):
        vpath = f"{path}.value_actions[{i}]"
        _reject_unknown(item, {"timestamp", "value", "contact"}, vpath)
        timestamp = _dec_instant(item.get("timestamp"), vpath)
        if timestamp is None:
            raise DecodeError(f"{vpath}.timestamp: required")
        values.append(
            m.ParameterValue(timestamp=timestamp, value=_req_str(item, "value", vpath), contact=_opt_str(item, "contact", vpath))
        )
    return m.Parameter(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        label=_req_str(doc, "label", path),
        description=_req_str(doc, "description", path),
        unit=_opt_str(doc, "unit", path),
        value_actions=tuple(values),
    )


def _enc_attachment(att: m.Attachment) -> dict:
    return {
        "id": att.id,
        "label": att.label,
        "origin": att.origin.value,
        "url": att.url,
        "blob_ref": att.blob_ref,
        "media_type": att.media_type,
        "is_preview_image": att.is_preview_image,
        "uploaded_at": _enc_instant(att.uploaded_at),
        "uploaded_by": att.uploaded_by,
    }


_ATTACHMENT_KEYS = {
    "id", "label", "origin", "url", "blob_ref", "media_type",
    "is_preview_image", "uploaded_at", "uploaded_by",
}


def _dec_attachment(doc, path) -> m.Attachment:
    _reject_unknown(doc, _ATTACHMENT_KEYS, path)
    try:
        origin = m.AttachmentOrigin(doc.get("origin", "url"))
    except ValueError as exc:
        raise DecodeError(f"{path}.origin: must be 'file' or 'url'") from exc
    return m.Attachment(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        label=_req_str(doc, "label", path),
        origin=origin,
        url=_opt_str(doc, "url", path),
        blob_ref=_opt_str(doc, "blob_ref", path),
        media_type=_req_str(doc, "media_type", path),
        is_preview_image=bool(doc.get("is_preview_image", False)),
        uploaded_at=_dec_instant(doc.get("uploaded_at"), f"{path}.uploaded_at"),
        uploaded_by=_opt_str(doc, "uploaded_by", path),
    )


def _enc_when(when) -> Any:
    if when is None:
        return None
    if isinstance(when, m.TimeInterval):
        return _enc_interval(when)
    return _enc_instant(when)


def _dec_when(value, path):
    if value is None:
        return None
    if isinstance(value, str):
        return _dec_instant(value, path)
    if isinstance(value, dict):
        return _dec_interval(value, path)
    raise DecodeError(f"{path}: expected an instant string or interval object")


def _enc_generic_action(action: m.GenericAction) -> dict:
    return {
        "id": action.id,
        "kind": action.kind,
        "when": _enc_when(action.when),
        "description": action.description,
        "contact": action.contact,
        "attachments": [_enc_attachment(a) for a in action.attachments],
    }


def _dec_generic_action(doc, path) -> m.GenericAction:
    _reject_unknown(doc, {"id", "kind", "when", "description", "contact", "attachments"}, path)
    return m.GenericAction(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        kind=_opt_str(doc, "kind", path),
        when=_dec_when(doc.get("when"), f"{path}.when"),
        description=_req_str(doc, "description", path),
        contact=_opt_str(doc, "contact", path),
        attachments=tuple(
            _dec_attachment(a, f"{path}.attachments[{i}]")
            for i, a in enumerate(_items(doc, "attachments", path))
        ),
    )


def _enc_offset(offset: Optional[m.Offset]) -> Optional[dict]:
    if offset is None:
        return None
    return {"x": offset.x, "y": offset.y, "z": offset.z}


def _dec_offset(doc, path) -> Optional[m.Offset]:
    if doc is None:
        return None
    _reject_unknown(doc, {"x", "y", "z"}, path)
    return m.Offset(x=_num(doc, "x", path), y=_num(doc, "y", path), z=_num(doc, "z", path))


def _enc_mount_action(mount: m.MountAction) -> dict:
    return {
        "id": mount.id,
        "child": _enc_ref(mount.child),
        "parent": _enc_ref(mount.parent),
        "interval": _enc_interval(mount.interval),
        "offset_x": mount.offset_x,
        "offset_y": mount.offset_y,
        "offset_z": mount.offset_z,
        "absolute_offset": _enc_offset(mount.absolute_offset),
        "begin_contact": mount.begin_contact,
        "end_contact": mount.end_contact,
        "begin_description": mount.begin_description,
        "end_description": mount.end_description,
    }


_MOUNT_KEYS = {
    "id", "child", "parent", "interval", "offset_x", "offset_y", "offset_z",
    "absolute_offset", "begin_contact", "end_contact", "begin_description", "end_description",
}


def _dec_mount_action(doc, path) -> m.MountAction:
    _reject_unknown(doc, _MOUNT_KEYS, path)
    child = _dec_ref(doc.get("child"), f"{path}.child")
    if child is None:
        raise DecodeError(f"{path}.child: required")
    return m.MountAction(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        child=child,
        parent=_dec_ref(doc.get("parent"), f"{path}.parent"),
        interval=_dec_interval(doc.get("interval"), f"{path}.interval"),
        offset_x=_num(doc, "offset_x", path),
        offset_y=_num(doc, "offset_y", path),
        offset_z=_num(doc, "offset_z", path),
        absolute_offset=_dec_offset(doc.get("absolute_offset"), f"{path}.absolute_offset"),
        begin_contact=_opt_str(doc, "begin_contact", path),
        end_contact=_opt_str(doc, "end_contact", path),
        begin_description=_req_str(doc, "begin_description", path),
        end_description=_req_str(doc, "end_description", path),
    )


def _enc_quantity_ref(ref: Optional[m.QuantityRef]) -> Optional[dict]:
    if ref is None:
        return None
    return {"device": ref.device, "quantity": ref.quantity}


def _dec_quantity_ref(doc, path) -> Optional[m.QuantityRef]:
    if doc is None:
        return None
    _reject_unknown(doc, {"device", "quantity"}, path)
    return m.QuantityRef(device=_req_str(doc, "device", path), quantity=_req_str(doc, "quantity", path))


def _enc_location_action(action: m.LocationAction) -> dict:
    if isinstance(action.location, m.StaticLocation):
        location = {
            "type": "static",
            "latitude": action.location.latitude,
            "longitude": action.location.longitude,
            "height": action.location.height,
            "epsg_code": action.location.epsg_code,
        }
    else:
        location = {
            "type": "dynamic",
            "x_source": _enc_quantity_ref(action.location.x_source),
            "y_source": _enc_quantity_ref(action.location.y_source),
            "z_source": _enc_quantity_ref(action.location.z_source),
        }
    return {
        "id": action.id,
        "interval": _enc_interval(action.interval),
        "location": location,
        "label": action.label,
        "contact": action.contact,
    }


def _dec_location_action(doc, path) -> m.LocationAction:
    _reject_unknown(doc, {"id", "interval", "location", "label", "contact"}, path)
    loc_doc = doc.get("location")
    if not isinstance(loc_doc, dict) or "type" not in loc_doc:
        raise DecodeError(f"{path}.location: expected object with 'type'")
    lpath = f"{path}.location"
    if loc_doc["type"] == "static":
        _reject_unknown(loc_doc, {"type", "latitude", "longitude", "height", "epsg_code"}, lpath)
        location = m.StaticLocation(
            latitude=_num(loc_doc, "latitude", lpath),
            longitude=_num(loc_doc, "longitude", lpath),
            height=_num(loc_doc, "height", lpath),
            epsg_code=_req_str(loc_doc, "epsg_code", lpath, default="4326"),
        )
    elif loc_doc["type"] == "dynamic":
        _reject_unknown(loc_doc, {"type", "x_source", "y_source", "z_source"}, lpath)
        location = m.DynamicLocation(
            x_source=_dec_quantity_ref(loc_doc.get("x_source"), f"{lpath}.x_source"),
            y_source=_dec_quantity_ref(loc_doc.get("y_source"), f"{lpath}.y_source"),
            z_source=_dec_quantity_ref(loc_doc.get("z_source"), f"{lpath}.z_source"),
        )
    else:
        raise DecodeError(f"{lpath}.type: must be 'static' or 'dynamic'")
    return m.LocationAction(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        interval=_dec_interval(doc.get("interval"), f"{path}.interval"),
        location=location,
        label=_req_str(doc, "label", path),
        contact=_opt_str(doc, "contact", path),
    )


# --- top-level records ----------------------------------------------------------


def _enc_audit(entity) -> dict:
    return {
        "created_at": _enc_instant(entity.created_at),
        "updated_at": _enc_instant(entity.updated_at),
        "created_by": entity.created_by,
        "updated_by": entity.updated_by,
        "version": entity.version,
        "archived": entity.archived,
    }


_AUDIT_KEYS = {"created_at", "updated_at", "created_by", "updated_by", "version", "archived"}


def _dec_audit(doc, path) -> dict:
    return {
        "created_at": _dec_instant(doc.get("created_at"), f"{path}.created_at"),
        "updated_at": _dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        "created_by": _opt_str(doc, "created_by", path),
        "updated_by": _opt_str(doc, "updated_by", path),
        "version": int(doc.get("version", 0)),
        "archived": bool(doc.get("archived", False)),
    }


def _dec_visibility(doc, path) -> m.Visibility:
    try:
        return m.Visibility(doc.get("visibility", "internal"))
    except ValueError as exc:
        raise DecodeError(f"{path}.visibility: must be private, internal or public") from exc


def _enc_device(device: m.Device) -> dict:
    return {
        "kind": "device",
        "id": device.id,
        "short_name": device.short_name,
        "description": device.description,
        "urn": device.urn,
        "pid": device.pid,
        "device_type": device.device_type,
        "manufacturer": device.manufacturer,
        "model": device.model,
        "serial_number": device.serial_number,
        "inventory_number": device.inventory_number,
        "visibility": device.visibility.value,
        "owner_group": device.owner_group,
        "measured_quantities": [_enc_measured_quantity(q) for q in device.measured_quantities],
        "contacts": [_enc_contact_role(r) for r in device.contacts],
        "parameters": [_enc_parameter(p) for p in device.parameters],
        "custom_fields": [_enc_custom_field(c) for c in device.custom_fields],
        "attachments": [_enc_attachment(a) for a in device.attachments],
        "actions": [_enc_generic_action(a) for a in device.actions],
        **_enc_audit(device),
    }


_DEVICE_KEYS = {
    "kind", "id", "short_name", "description", "urn", "pid", "device_type", "manufacturer",
    "model", "serial_number", "inventory_number", "visibility", "owner_group",
    "measured_quantities", "contacts", "parameters", "custom_fields", "attachments", "actions",
} | _AUDIT_KEYS


def _dec_device(doc) -> m.Device:
    path = "device"
    _reject_unknown(doc, _DEVICE_KEYS, path)
    return m.Device(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        short_name=_req_str(doc, "short_name", path),
        description=_req_str(doc, "description", path),
        urn=_req_str(doc, "urn", path),
        pid=_opt_str(doc, "pid", path),
        device_type=_opt_str(doc, "device_type", path),
        manufacturer=_opt_str(doc, "manufacturer", path),
        model=_req_str(doc, "model", path),
        serial_number=_req_str(doc, "serial_number", path),
        inventory_number=_req_str(doc, "inventory_number", path),
        visibility=_dec_visibility(doc, path),
        owner_group=_req_str(doc, "owner_group", path),
        measured_quantities=tuple(
            _dec_measured_quantity(q, f"measured_quantities[{i}]")
            for i, q in enumerate(_items(doc, "measured_quantities", path))
        ),
        contacts=tuple(
            _dec_contact_role(r, f"contacts[{i}]") for i, r in enumerate(_items(doc, "contacts", path))
        ),
        parameters=tuple(
            _dec_parameter(p, f"parameters[{i}]") for i, p in enumerate(_items(doc, "parameters", path))
        ),
        custom_fields=tuple(
            _dec_custom_field(c, f"custom_fields[{i}]")
            for i, c in enumerate(_items(doc, "custom_fields", path))
        ),
        attachments=tuple(
            _dec_attachment(a, f"attachments[{i}]") for i, a in enumerate(_items(doc, "attachments", path))
        ),
        actions=tuple(
            _dec_generic_action(a, f"actions[{i}]") for i, a in enumerate(_items(doc, "actions", path))
        ),
        **_dec_audit(doc, path),
    )


def _enc_platform(platform: m.Platform) -> dict:
    doc = _enc_device(
        m.Device(
            id=platform.id,
            short_name=platform.short_name,
            description=platform.description,
            urn=platform.urn,
            pid=platform.pid,
            device_type=None,
            manufacturer=platform.manufacturer,
            model=platform.model,
            serial_number=platform.serial_number,
            inventory_number=platform.inventory_number,
            visibility=platform.visibility,
            owner_group=platform.owner_group,
            contacts=platform.contacts,
            parameters=platform.parameters,
            custom_fields=platform.custom_fields,
            attachments=platform.attachments,
            actions=platform.actions,
            created_at=platform.created_at,
            updated_at=platform.updated_at,
            created_by=platform.created_by,
            updated_by=platform.updated_by,
            version=platform.version,
            archived=platform.archived,
        )
    )
    doc["kind"] = "platform"
    doc["platform_type"] = platform.platform_type
    del doc["device_type"]
    del doc["measured_quantities"]
    return doc


_PLATFORM_KEYS = (_DEVICE_KEYS - {"device_type", "measured_quantities"}) | {"platform_type"}


def _dec_platform(doc) -> m.Platform:
    path = "platform"
    _reject_unknown(doc, _PLATFORM_KEYS, path)
    return m.Platform(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        short_name=_req_str(doc, "short_name", path),
        description=_req_str(doc, "description", path),
        urn=_req_str(doc, "urn", path),
        pid=_opt_str(doc, "pid", path),
        platform_type=_opt_str(doc, "platform_type", path),
        manufacturer=_opt_str(doc, "manufacturer", path),
        model=_req_str(doc, "model", path),
        serial_number=_req_str(doc, "serial_number", path),
        inventory_number=_req_str(doc, "inventory_number", path),
        visibility=_dec_visibility(doc, path),
        owner_group=_req_str(doc, "owner_group", path),
        contacts=tuple(
            _dec_contact_role(r, f"contacts[{i}]") for i, r in enumerate(_items(doc, "contacts", path))
        ),
        parameters=tuple(
            _dec_parameter(p, f"parameters[{i}]") for i, p in enumerate(_items(doc, "parameters", path))
        ),
        custom_fields=tuple(
            _dec_custom_field(c, f"custom_fields[{i}]")
            for i, c in enumerate(_items(doc, "custom_fields", path))
        ),
        attachments=tuple(
            _dec_attachment(a, f"attachments[{i}]") for i, a in enumerate(_items(doc, "attachments", path))
        ),
        actions=tuple(
            _dec_generic_action(a, f"actions[{i}]") for i, a in enumerate(_items(doc, "actions", path))
        ),
        **_dec_audit(doc, path),
    )


def _enc_configuration(configuration: m.Configuration) -> dict:
    return {
        "kind": "configuration",
        "id": configuration.id,
        "label": configuration.label,
        "description": configuration.description,
        "pid": configuration.pid,
        "status": configuration.status.value,
        "site": configuration.site,
        "project": configuration.project,
        "visibility": configuration.visibility.value,
        "owner_group": configuration.owner_group,
        "contacts": [_enc_contact_role(r) for r in configuration.contacts],
        "parameters": [_enc_parameter(p) for p in configuration.parameters],
        "custom_fields": [_enc_custom_field(c) for c in configuration.custom_fields],
        "attachments": [_enc_attachment(a) for a in configuration.attachments],
        "actions": [_enc_generic_action(a) for a in configuration.actions],
        "mount_actions": [_enc_mount_action(a) for a in configuration.mount_actions],
        "location_actions": [_enc_location_action(a) for a in configuration.location_actions],
        **_enc_audit(configuration),
    }


_CONFIGURATION_KEYS = {
    "kind", "id", "label", "description", "pid", "status", "site", "project", "visibility",
    "owner_group", "contacts", "parameters", "custom_fields", "attachments", "actions",
    "mount_actions", "location_actions",
} | _AUDIT_KEYS


def _dec_configuration(doc) -> m.Configuration:
    path = "configuration"
    _reject_unknown(doc, _CONFIGURATION_KEYS, path)
    try:
        status = m.ConfigurationStatus(doc.get("status", "draft"))
    except ValueError as exc:
        raise DecodeError(f"{path}.status: must be draft, active or deprecated") from exc
    return m.Configuration(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        label=_req_str(doc, "label", path),
        description=_req_str(doc, "description", path),
        pid=_opt_str(doc, "pid", path),
        status=status,
        site=_opt_str(doc, "site", path),
        project=_req_str(doc, "project", path),
        visibility=_dec_visibility(doc, path),
        owner_group=_req_str(doc, "owner_group", path),
        contacts=tuple(
            _dec_contact_role(r, f"contacts[{i}]") for i, r in enumerate(_items(doc, "contacts", path))
        ),
        parameters=tuple(
            _dec_parameter(p, f"parameters[{i}]") for i, p in enumerate(_items(doc, "parameters", path))
        ),
        custom_fields=tuple(
            _dec_custom_field(c, f"custom_fields[{i}]")
            for i, c in enumerate(_items(doc, "custom_fields", path))
        ),
        attachments=tuple(
            _dec_attachment(a, f"attachments[{i}]") for i, a in enumerate(_items(doc, "attachments", path))
        ),
        actions=tuple(
            _dec_generic_action(a, f"actions[{i}]") for i, a in enumerate(_items(doc, "actions", path))
        ),
        mount_actions=tuple(
            _dec_mount_action(a, f"mount_actions[{i}]")
            for i, a in enumerate(_items(doc, "mount_actions", path))
        ),
        location_actions=tuple(
            _dec_location_action(a, f"location_actions[{i}]")
            for i, a in enumerate(_items(doc, "location_actions", path))
        ),
        **_dec_audit(doc, path),
    )


def _enc_site(site: m.Site) -> dict:
    return {
        "kind": "site",
        "id": site.id,
        "label": site.label,
        "description": site.description,
        "geometry": None
        if site.geometry is None
        else [{"latitude": v.latitude, "longitude": v.longitude} for v in site.geometry],
        "parent_site": site.parent_site,
        "usage": site.usage,
        "visibility": site.visibility.value,
        "owner_group": site.owner_group,
        "contacts": [_enc_contact_role(r) for r in site.contacts],
        "attachments": [_enc_attachment(a) for a in site.attachments],
        **_enc_audit(site),
    }


_SITE_KEYS = {
    "kind", "id", "label", "description", "geometry", "parent_site", "usage",
    "visibility", "owner_group", "contacts", "attachments",
} | _AUDIT_KEYS


def _dec_site(doc) -> m.Site:
    path = "site"
    _reject_unknown(doc, _SITE_KEYS, path)
    geometry = None
    if doc.get("geometry") is not None:
        vertices = []
        for i, vertex in enumerate(doc["geometry"]):
            vpath = f"geometry[{i}]"
            _reject_unknown(vertex, {"latitude", "longitude"}, vpath)
            vertices.append(m.LatLon(latitude=_num(vertex, "latitude", vpath), longitude=_num(vertex, "longitude", vpath)))
        geometry = tuple(vertices)
    return m.Site(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        label=_req_str(doc, "label", path),
        description=_req_str(doc, "description", path),
        geometry=geometry,
        parent_site=_opt_str(doc, "parent_site", path),
        usage=_opt_str(doc, "usage", path),
        visibility=_dec_visibility(doc, path),
        owner_group=_req_str(doc, "owner_group", path),
        contacts=tuple(
            _dec_contact_role(r, f"contacts[{i}]") for i, r in enumerate(_items(doc, "contacts", path))
        ),
        attachments=tuple(
            _dec_attachment(a, f"attachments[{i}]") for i, a in enumerate(_items(doc, "attachments", path))
        ),
        **_dec_audit(doc, path),
    )


def _enc_contact(contact: m.Contact) -> dict:
    return {
        "kind": "contact",
        "id": contact.id,
        "given_name": contact.given_name,
        "family_name": contact.family_name,
        "email": contact.email,
        "organization": contact.organization,
        "orcid": contact.orcid,
        "account_id": contact.account_id,
        **_enc_audit(contact),
    }


_CONTACT_KEYS = {
    "kind", "id", "given_name", "family_name", "email", "organization", "orcid", "account_id",
} | _AUDIT_KEYS


def _dec_contact(doc) -> m.Contact:
    path = "contact"
    _reject_unknown(doc, _CONTACT_KEYS, path)
    return m.Contact(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        given_name=_req_str(doc, "given_name", path),
        family_name=_req_str(doc, "family_name", path),
        email=_req_str(doc, "email", path),
        organization=_req_str(doc, "organization", path),
        orcid=_opt_str(doc, "orcid", path),
        account_id=_opt_str(doc, "account_id", path),
        **_dec_audit(doc, path),
    )


# --- vocabulary, auth and pid records -------------------------------------------


def _enc_term(term: VocabularyTerm) -> dict:
    return {
        "kind": "vocabulary_term",
        "id": term.id,
        "category": term.category.value,
        "term": term.term,
        "definition": term.definition,
        "provenance": term.provenance,
        "provenance_uri": term.provenance_uri,
        "global_provenance": term.global_provenance,
        "synonyms": list(term.synonyms),
        "status": term.status.value,
        "note_for_curator": term.note_for_curator,
        "created_at": _enc_instant(term.created_at),
        "updated_at": _enc_instant(term.updated_at),
        "version": term.version,
    }


_TERM_KEYS = {
    "kind", "id", "category", "term", "definition", "provenance", "provenance_uri",
    "global_provenance", "synonyms", "status", "note_for_curator",
    "created_at", "updated_at", "version",
}


def _dec_term(doc) -> VocabularyTerm:
    path = "vocabulary_term"
    _reject_unknown(doc, _TERM_KEYS, path)
    try:
        category = m.TermCategory(doc["category"])
    except (KeyError, ValueError) as exc:
        raise DecodeError(f"{path}.category: unknown category") from exc
    try:
        status = m.TermStatus(doc.get("status", "proposed"))
    except ValueError as exc:
        raise DecodeError(f"{path}.status: unknown status") from exc
    return VocabularyTerm(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        category=category,
        term=_req_str(doc, "term", path),
        definition=_req_str(doc, "definition", path),
        provenance=_req_str(doc, "provenance", path),
        provenance_uri=_opt_str(doc, "provenance_uri", path),
        global_provenance=_opt_str(doc, "global_provenance", path),
        synonyms=tuple(doc.get("synonyms", [])),
        status=status,
        note_for_curator=_req_str(doc, "note_for_curator", path),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


def _enc_ticket(ticket: CurationTicket) -> dict:
    return {
        "kind": "curation_ticket",
        "id": ticket.id,
        "term_id": ticket.term_id,
        "submitted_by": ticket.submitted_by,
        "submitted_at": _enc_instant(ticket.submitted_at),
        "state": ticket.state.value,
        "discussion": [
            {"author": n.author, "timestamp": _enc_instant(n.timestamp), "message": n.message}
            for n in ticket.discussion
        ],
        "created_at": _enc_instant(ticket.created_at),
        "updated_at": _enc_instant(ticket.updated_at),
        "version": ticket.version,
    }


_TICKET_KEYS = {
    "kind", "id", "term_id", "submitted_by", "submitted_at", "state", "discussion",
    "created_at", "updated_at", "version",
}


def _dec_ticket(doc) -> CurationTicket:
    path = "curation_ticket"
    _reject_unknown(doc, _TICKET_KEYS, path)
    notes = []
    for i, note in enumerate(doc.get("discussion", [])):
        npath = f"{path}.discussion[{i}]"
        _reject_unknown(note, {"author", "timestamp", "message"}, npath)
        timestamp = _dec_instant(note.get("timestamp"), npath)
        if timestamp is None:
            raise DecodeError(f"{npath}.timestamp: required")
        notes.append(DiscussionNote(author=_req_str(note, "author", npath), timestamp=timestamp, message=_req_str(note, "message", npath)))
    try:
        state = TicketState(doc.get("state", "open"))
    except ValueError as exc:
        raise DecodeError(f"{path}.state: unknown state") from exc
    return CurationTicket(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        term_id=_req_str(doc, "term_id", path),
        submitted_by=_opt_str(doc, "submitted_by", path),
        submitted_at=_dec_instant(doc.get("submitted_at"), f"{path}.submitted_at"),
        state=state,
        discussion=tuple(notes),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


def _enc_group(group: Group) -> dict:
    return {
        "kind": "group",
        "id": group.id,
        "name": group.name,
        "display_name": group.display_name,
        "created_at": _enc_instant(group.created_at),
        "updated_at": _enc_instant(group.updated_at),
        "version": group.version,
    }


def _dec_group(doc) -> Group:
    path = "group"
    _reject_unknown(doc, {"kind", "id", "name", "display_name", "created_at", "updated_at", "version"}, path)
    return Group(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        name=_req_str(doc, "name", path),
        display_name=_req_str(doc, "display_name", path),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


def _enc_account(account: Account) -> dict:
    return {
        "kind": "account",
        "id": account.id,
        "username": account.username,
        "password_hash": account.password_hash,
        "given_name": account.given_name,
        "family_name": account.family_name,
        "email": account.email,
        "organization": account.organization,
        "groups": list(account.groups),
        "roles": list(account.roles),
        "active": account.active,
        "created_at": _enc_instant(account.created_at),
        "updated_at": _enc_instant(account.updated_at),
        "version": account.version,
    }


_ACCOUNT_KEYS = {
    "kind", "id", "username", "password_hash", "given_name", "family_name", "email",
    "organization", "groups", "roles", "active", "created_at", "updated_at", "version",
}


def _dec_account(doc) -> Account:
    path = "account"
    _reject_unknown(doc, _ACCOUNT_KEYS, path)
    return Account(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        username=_req_str(doc, "username", path),
        password_hash=_req_str(doc, "password_hash", path),
        given_name=_req_str(doc, "given_name", path),
        family_name=_req_str(doc, "family_name", path),
        email=_req_str(doc, "email", path),
        organization=_req_str(doc, "organization", path),
        groups=tuple(doc.get("groups", [])),
        roles=tuple(doc.get("roles", [])),
        active=bool(doc.get("active", True)),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


def _enc_api_key(key: ApiKey) -> dict:
    return {
        "kind": "api_key",
        "id": key.id,
        "label": key.label,
        "key_hash": key.key_hash,
        "groups": list(key.groups),
        "roles": list(key.roles),
        "account_id": key.account_id,
        "active": key.active,
        "created_at": _enc_instant(key.created_at),
        "updated_at": _enc_instant(key.updated_at),
        "version": key.version,
    }


_API_KEY_KEYS = {
    "kind", "id", "label", "key_hash", "groups", "roles", "account_id", "active",
    "created_at", "updated_at", "version",
}


def _dec_api_key(doc) -> ApiKey:
    path = "api_key"
    _reject_unknown(doc, _API_KEY_KEYS, path)
    return ApiKey(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        label=_req_str(doc, "label", path),
        key_hash=_req_str(doc, "key_hash", path),
        groups=tuple(doc.get("groups", [])),
        roles=tuple(doc.get("roles", [])),
        account_id=_opt_str(doc, "account_id", path),
        active=bool(doc.get("active", True)),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


def _enc_pid_record(record: PidRecord) -> dict:
    return {
        "kind": "pid_record",
        "id": record.id,
        "entity_kind": record.entity_kind,
        "entity_id": record.entity_id,
        "handle": record.handle,
        "target_url": record.target_url,
        "schema_payload_json": record.schema_payload_json,
        "minted_at": _enc_instant(record.minted_at),
        "last_synced_at": _enc_instant(record.last_synced_at),
        "stale": record.stale,
        "created_at": _enc_instant(record.created_at),
        "updated_at": _enc_instant(record.updated_at),
        "version": record.version,
    }


_PID_KEYS = {
    "kind", "id", "entity_kind", "entity_id", "handle", "target_url", "schema_payload_json",
    "minted_at", "last_synced_at", "stale", "created_at", "updated_at", "version",
}


def _dec_pid_record(doc) -> PidRecord:
    path = "pid_record"
    _reject_unknown(doc, _PID_KEYS, path)
    return PidRecord(
        id=_req_str(doc, "id", path, default=m.new_entity_id()),
        entity_kind=_req_str(doc, "entity_kind", path),
        entity_id=_req_str(doc, "entity_id", path),
        handle=_req_str(doc, "handle", path),
        target_url=_req_str(doc, "target_url", path),
        schema_payload_json=_req_str(doc, "schema_payload_json", path),
        minted_at=_dec_instant(doc.get("minted_at"), f"{path}.minted_at"),
        last_synced_at=_dec_instant(doc.get("last_synced_at"), f"{path}.last_synced_at"),
        stale=bool(doc.get("stale", False)),
        created_at=_dec_instant(doc.get("created_at"), f"{path}.created_at"),
        updated_at=_dec_instant(doc.get("updated_at"), f"{path}.updated_at"),
        version=int(doc.get("version", 0)),
    )


# --- registry --------------------------------------------------------------------

_ENCODERS: dict[type, Callable[[Any], dict]] = {
    m.Device: _enc_device,
    m.Platform: _enc_platform,
    m.Configuration: _enc_configuration,
    m.Site: _enc_site,
    m.Contact: _enc_contact,
    VocabularyTerm: _enc_term,
    CurationTicket: _enc_ticket,
    Group: _enc_group,
    Account: _enc_account,
    ApiKey: _enc_api_key,
    PidRecord: _enc_pid_record,
}

_DECODERS: dict[str, Callable[[dict], Any]] = {
    "device": _dec_device,
    "platform": _dec_platform,
    "configuration": _dec_configuration,
    "site": _dec_site,
    "contact": _dec_contact,
    "vocabulary_term": _dec_term,
    "curation_ticket": _dec_ticket,
    "group": _dec_group,
    "account": _dec_account,
    "api_key": _dec_api_key,
    "pid_record": _dec_pid_record,
}


def record_kind(record: Any) -> str:
    encoder = _ENCODERS.get(type(record))
    if encoder is None:
        raise TypeError(f"unserializable record type: {type(record).__name__}")
    return encoder(record)["kind"]


def encode_record(record: Any) -> dict:
    encoder = _ENCODERS.get(type(record))
    if encoder is None:
        raise TypeError(f"unserializable record type: {type(record).__name__}")
    return encoder(record)


def decode_record(doc: dict, kind: Optional[str] = None) -> Any:
    """Rebuild a record from its canonical document.

    ``kind`` overrides/supplies the discriminator for documents coming
    from contexts where it is implied (entity collections, API bodies).
    """
    if not isinstance(doc, dict):
        raise DecodeError("record document must be an object")
    actual = kind or doc.get("kind")
    if actual is None:
        raise DecodeError("record document lacks 'kind'")
    decoder = _DECODERS.get(actual)
    if decoder is None:
        raise DecodeError(f"unknown record kind {actual!r}")
    merged = dict(doc)
    merged["kind"] = actual
    try:
        return decoder(merged)
    except DecodeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"malformed {actual} document: {exc}") from exc


def encode_position(position) -> dict:
    """Wire form of a resolved position (absolute/dynamic/undefined)."""
    from senreg.temporal import AbsolutePosition, DynamicPosition

    if isinstance(position, AbsolutePosition):
        return {
            "variant": "absolute",
            "latitude": position.latitude,
            "longitude": position.longitude,
            "height": position.height,
            "epsg_code": position.epsg_code,
            "offset": {"x": position.offset.x, "y": position.offset.y, "z": position.offset.z},
        }
    if isinstance(position, DynamicPosition):
        return {
            "variant": "dynamic",
            "x_source": _enc_quantity_ref(position.x_source),
            "y_source": _enc_quantity_ref(position.y_source),
            "z_source": _enc_quantity_ref(position.z_source),
        }
    return {"variant": "undefined"}


def decode_mount_action(doc: dict) -> m.MountAction:
    return _dec_mount_action(doc, "mount_action")


def encode_mount_action(action: m.MountAction) -> dict:
    return _enc_mount_action(action)


def decode_location_action(doc: dict) -> m.LocationAction:
    return _dec_location_action(doc, "location_action")


def encode_location_action(action: m.LocationAction) -> dict:
    return _enc_location_action(action)


def record_to_json(record: Any) -> str:
    return canonical_json(encode_record(record))


def record_from_json(raw: str) -> Any:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc}") from exc
    return decode_record(doc)
