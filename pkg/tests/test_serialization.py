from __future__ import annotations

import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from senreg import model as m
from senreg.auth import Account, ApiKey, Group
from senreg.pid import PidRecord
from senreg.serialization import (
    DecodeError,
    canonical_json,
    decode_record,
    encode_record,
    record_from_json,
    record_to_json,
)
from senreg.vocabulary import CurationTicket, DiscussionNote, TicketState, VocabularyTerm

# --- strategies -----------------------------------------------------------------

ids = st.uuids().map(lambda u: u.hex)
short_text = st.text(min_size=1, max_size=20)
any_text = st.text(max_size=30)
instants = st.datetimes(
    min_value=datetime(2000, 1, 1),
    max_value=datetime(2035, 1, 1),
).map(lambda d: d.replace(tzinfo=timezone.utc))


@st.composite
def intervals(draw):
    begin = draw(instants)
    if draw(st.booleans()):
        return m.TimeInterval(begin=begin)
    delta = draw(st.integers(min_value=1, max_value=10_000_000))
    from datetime import timedelta

    return m.TimeInterval(begin=begin, end=begin + timedelta(seconds=delta))


entity_refs = st.builds(
    m.EntityRef,
    kind=st.sampled_from([m.EntityKind.DEVICE, m.EntityKind.PLATFORM]),
    id=ids,
)

contact_roles = st.builds(m.ContactRole, contact=ids, role=ids)
custom_fields = st.builds(m.CustomField, key=short_text, value=any_text)

measured_quantities = st.builds(
    m.MeasuredQuantity,
    id=ids,
    compartment=st.none() | ids,
    sampling_media=st.none() | ids,
    quantity=st.none() | ids,
    unit=st.none() | ids,
    range_min=st.none() | st.floats(allow_nan=False, allow_infinity=False, width=32),
    range_max=st.none() | st.floats(allow_nan=False, allow_infinity=False, width=32),
    accuracy=st.none() | st.floats(min_value=0, allow_nan=False, allow_infinity=False, width=32),
    resolution=st.none() | st.floats(min_value=0, allow_nan=False, allow_infinity=False, width=32),
    label=any_text,
)

parameter_values = st.builds(m.ParameterValue, timestamp=instants, value=any_text, contact=st.none() | ids)
parameters = st.builds(
    m.Parameter,
    id=ids,
    label=short_text,
    description=any_text,
    unit=st.none() | ids,
    value_actions=st.tuples() | st.tuples(parameter_values) | st.tuples(parameter_values, parameter_values),
)


@st.composite
def attachments(draw):
    origin = draw(st.sampled_from(list(m.AttachmentOrigin)))
    return m.Attachment(
        id=draw(ids),
        label=draw(short_text),
        origin=origin,
        url=draw(short_text) if origin is m.AttachmentOrigin.URL else None,
        blob_ref=draw(ids) if origin is m.AttachmentOrigin.FILE else None,
        media_type=draw(any_text),
        is_preview_image=draw(st.booleans()),
        uploaded_at=draw(st.none() | instants),
        uploaded_by=draw(st.none() | ids),
    )


generic_actions = st.builds(
    m.GenericAction,
    id=ids,
    kind=st.none() | ids,
    when=st.none() | instants | intervals(),
    description=any_text,
    contact=st.none() | ids,
    attachments=st.tuples() | st.tuples(attachments()),
)

offsets = st.builds(
    m.Offset,
    x=st.floats(allow_nan=False, allow_infinity=False, width=32),
    y=st.floats(allow_nan=False, allow_infinity=False, width=32),
    z=st.floats(allow_nan=False, allow_infinity=False, width=32),
)

mount_actions = st.builds(
    m.MountAction,
    id=ids,
    child=entity_refs,
    parent=st.none() | st.builds(m.EntityRef, kind=st.just(m.EntityKind.PLATFORM), id=ids),
    interval=intervals(),
    offset_x=st.floats(allow_nan=False, allow_infinity=False, width=32),
    offset_y=st.floats(allow_nan=False, allow_infinity=False, width=32),
    offset_z=st.floats(allow_nan=False, allow_infinity=False, width=32),
    absolute_offset=st.none() | offsets,
    begin_contact=st.none() | ids,
    end_contact=st.none() | ids,
    begin_description=any_text,
    end_description=any_text,
)

quantity_refs = st.builds(m.QuantityRef, device=ids, quantity=ids)

locations = st.one_of(
    st.builds(
        m.StaticLocation,
        latitude=st.floats(min_value=-90, max_value=90, allow_nan=False),
        longitude=st.floats(min_value=-180, max_value=180, allow_nan=False),
        height=st.floats(allow_nan=False, allow_infinity=False, width=32),
        epsg_code=short_text,
    ),
    st.builds(
        m.DynamicLocation,
        x_source=st.none() | quantity_refs,
        y_source=st.none() | quantity_refs,
        z_source=st.none() | quantity_refs,
    ),
)

location_actions = st.builds(
    m.LocationAction,
    id=ids,
    interval=intervals(),
    location=locations,
    label=any_text,
    contact=st.none() | ids,
)

_audit = dict(
    created_at=st.none() | instants,
    updated_at=st.none() | instants,
    created_by=st.none() | ids,
    updated_by=st.none() | ids,
    version=st.integers(min_value=0, max_value=10_000),
    archived=st.booleans(),
)

devices = st.builds(
    m.Device,
    id=ids,
    short_name=short_text,
    description=any_text,
    urn=any_text,
    pid=st.none() | short_text,
    device_type=st.none() | ids,
    manufacturer=st.none() | ids,
    model=any_text,
    serial_number=any_text,
    inventory_number=any_text,
    visibility=st.sampled_from(list(m.Visibility)),
    owner_group=any_text,
    measured_quantities=st.tuples() | st.tuples(measured_quantities),
    contacts=st.tuples() | st.tuples(contact_roles),
    parameters=st.tuples() | st.tuples(parameters),
    custom_fields=st.tuples() | st.tuples(custom_fields),
    attachments=st.tuples() | st.tuples(attachments()),
    actions=st.tuples() | st.tuples(generic_actions),
    **_audit,
)

platforms = st.builds(
    m.Platform,
    id=ids,
    short_name=short_text,
    platform_type=st.none() | ids,
    manufacturer=st.none() | ids,
    visibility=st.sampled_from(list(m.Visibility)),
    contacts=st.tuples() | st.tuples(contact_roles),
    parameters=st.tuples() | st.tuples(parameters),
    attachments=st.tuples() | st.tuples(attachments()),
    actions=st.tuples() | st.tuples(generic_actions),
    **_audit,
)

configurations = st.builds(
    m.Configuration,
    id=ids,
    label=short_text,
    description=any_text,
    status=st.sampled_from(list(m.ConfigurationStatus)),
    site=st.none() | ids,
    project=any_text,
    visibility=st.sampled_from(list(m.Visibility)),
    contacts=st.tuples() | st.tuples(contact_roles),
    mount_actions=st.tuples() | st.tuples(mount_actions) | st.tuples(mount_actions, mount_actions),
    location_actions=st.tuples() | st.tuples(location_actions),
    **_audit,
)

sites = st.builds(
    m.Site,
    id=ids,
    label=short_text,
    geometry=st.none()
    | st.tuples(
        st.builds(m.LatLon, latitude=st.floats(-90, 90, allow_nan=False), longitude=st.floats(-180, 180, allow_nan=False)),
        st.builds(m.LatLon, latitude=st.floats(-90, 90, allow_nan=False), longitude=st.floats(-180, 180, allow_nan=False)),
        st.builds(m.LatLon, latitude=st.floats(-90, 90, allow_nan=False), longitude=st.floats(-180, 180, allow_nan=False)),
    ),
    parent_site=st.none() | ids,
    usage=st.none() | ids,
    visibility=st.sampled_from(list(m.Visibility)),
    **_audit,
)

contacts = st.builds(
    m.Contact,
    id=ids,
    given_name=short_text,
    family_name=short_text,
    email=st.just("someone@example.org"),
    organization=any_text,
    orcid=st.none() | short_text,
    account_id=st.none() | ids,
    **_audit,
)

terms = st.builds(
    VocabularyTerm,
    id=ids,
    category=st.sampled_from(list(m.TermCategory)),
    term=short_text,
    definition=any_text,
    provenance=any_text,
    provenance_uri=st.none() | short_text,
    global_provenance=st.none() | short_text,
    synonyms=st.tuples() | st.tuples(short_text, short_text),
    status=st.sampled_from(list(m.TermStatus)),
    note_for_curator=any_text,
    created_at=st.none() | instants,
    updated_at=st.none() | instants,
    version=st.integers(min_value=0, max_value=100),
)

tickets = st.builds(
    CurationTicket,
    id=ids,
    term_id=ids,
    submitted_by=st.none() | ids,
    submitted_at=st.none() | instants,
    state=st.sampled_from(list(TicketState)),
    discussion=st.tuples() | st.tuples(st.builds(DiscussionNote, author=short_text, timestamp=instants, message=any_text)),
    created_at=st.none() | instants,
    updated_at=st.none() | instants,
    version=st.integers(min_value=0, max_value=100),
)

groups = st.builds(Group, id=ids, name=short_text, display_name=any_text, version=st.integers(0, 5))
accounts = st.builds(
    Account,
    id=ids,
    username=short_text,
    password_hash=any_text,
    email=short_text,
    groups=st.tuples() | st.tuples(short_text),
    roles=st.tuples(st.sampled_from(["member", "curator", "admin"])),
    active=st.booleans(),
)
api_keys = st.builds(ApiKey, id=ids, label=short_text, key_hash=short_text, account_id=st.none() | ids)
pid_records = st.builds(
    PidRecord,
    id=ids,
    entity_kind=st.sampled_from(["device", "platform", "configuration"]),
    entity_id=ids,
    handle=short_text,
    target_url=short_text,
    schema_payload_json=st.just('{"Name":"x"}'),
    minted_at=st.none() | instants,
    last_synced_at=st.none() | instants,
    stale=st.booleans(),
    version=st.integers(0, 10),
)

ALL_RECORDS = st.one_of(
    devices, platforms, configurations, sites, contacts, terms, tickets, groups, accounts, api_keys, pid_records
)


@settings(max_examples=200, deadline=None)
@given(ALL_RECORDS)
def test_round_trip_identity(record):
    doc = encode_record(record)
    assert decode_record(doc) == record
    # encode(decode(x)) == x at the document level too
    assert encode_record(decode_record(doc)) == doc
    assert record_from_json(record_to_json(record)) == record


@settings(max_examples=50, deadline=None)
@given(ALL_RECORDS)
def test_canonical_json_is_deterministic(record):
    assert record_to_json(record) == record_to_json(decode_record(encode_record(record)))
    parsed = json.loads(record_to_json(record))
    assert canonical_json(parsed) == record_to_json(record)


def test_unknown_field_rejected():
    doc = encode_record(m.Device(short_name="x"))
    doc["bogus"] = 1
    with pytest.raises(DecodeError, match="bogus"):
        decode_record(doc)


def test_nested_unknown_field_rejected():
    doc = encode_record(
        m.Device(short_name="x", measured_quantities=(m.MeasuredQuantity(),))
    )
    doc["measured_quantities"][0]["extra"] = True
    with pytest.raises(DecodeError, match="extra"):
        decode_record(doc)


def test_kind_required_and_checked():
    doc = encode_record(m.Device(short_name="x"))
    doc.pop("kind")
    with pytest.raises(DecodeError, match="kind"):
        decode_record(doc)
    assert isinstance(decode_record(doc, kind="device"), m.Device)
    with pytest.raises(DecodeError, match="unknown record kind"):
        decode_record({**doc, "kind": "gadget"})


def test_partial_documents_use_defaults():
    device = decode_record({"short_name": "partial"}, kind="device")
    assert device.short_name == "partial"
    assert device.visibility is m.Visibility.INTERNAL
    assert device.measured_quantities == ()


def test_timestamps_round_trip_microseconds():
    from oracles import utc

    device = m.Device(short_name="x", created_at=utc(2020, 1, 1, 12, 30, 15, 123456))
    doc = encode_record(device)
    assert doc["created_at"] == "2020-01-01T12:30:15.123456Z"
    assert decode_record(doc).created_at == device.created_at


def test_bad_timestamp_rejected():
    with pytest.raises(DecodeError, match="created_at"):
        decode_record({"short_name": "x", "created_at": "yesterday"}, kind="device")
