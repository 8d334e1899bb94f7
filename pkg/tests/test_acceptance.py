"""Acceptance suite: one test per release criterion, at the stated tolerance.

Each test finishes by printing a single PASS line (failures surface as
normal pytest failures), so a `pytest tests/test_acceptance.py -v` run
reads as a checklist.  Oracles come from tests/oracles.py and stay
independent of the code paths they judge.
"""

from __future__ import annotations

import random
import statistics
import sys
import threading
import time
from datetime import timedelta
import pytest

from conftest import make_service
from generators import random_valid_configuration
from oracles import HORIZON_BEGIN, HORIZON_END, brute_force_overlaps, contains, replay_edges, tree_edges
from turtle_check import RDF_TYPE, parse_turtle
from senreg import model as m
from senreg import temporal
from senreg.auth import Principal, PrincipalKind
from senreg.errors import MountConflictError
from senreg.pid import HttpHandleClient, MockHandleServer, PidService
from senreg.seed import install_base_vocabulary
from senreg.storage import Store
from senreg.vocabulary import TermDraft, TicketState, export_skos
from senreg.errors import DuplicateTermError

SKOS = "http://www.w3.org/2004/02/skos/core#"

CURATOR = Principal(kind=PrincipalKind.USER, account_id="cur", roles=frozenset({"curator"}))


ACCEPTANCE_LOG: list[str] = []


def announce(line: str) -> None:
    # collected by conftest's terminal-summary hook: the run ends with one
    # pass/fail line per criterion regardless of output capturing
    ACCEPTANCE_LOG.append(line)
    sys.__stderr__.write(f"[acceptance] {line}\n")
    sys.__stderr__.flush()


def _random_second_aligned_interval(rng: random.Random) -> m.TimeInterval:
    horizon = int((HORIZON_END - HORIZON_BEGIN).total_seconds())
    begin = HORIZON_BEGIN + timedelta(seconds=rng.randrange(horizon))
    shape = rng.random()
    if shape < 0.15:
        return m.TimeInterval(begin)
    scale = rng.choice([60, 3600, 86400, 7 * 86400, 14 * 86400])
    return m.TimeInterval(begin, begin + timedelta(seconds=rng.randrange(1, scale + 1)))


def test_temporal_conflict_suite_matches_second_granularity_oracle():
    """1000 randomized interval pairs in a 5-year horizon; the overlap
    predicate must agree with the instant-enumeration oracle; < 10 s."""
    rng = random.Random(1809)
    started = time.perf_counter()
    agreements = 0
    overlaps_seen = 0
    for trial in range(1000):
        a = _random_second_aligned_interval(rng)
        if trial % 2 == 0:
            offset = rng.randrange(-14 * 86400, 14 * 86400)
            b_begin = a.begin + timedelta(seconds=offset)
            b_end = None if rng.random() < 0.15 else b_begin + timedelta(seconds=rng.randrange(1, 7 * 86400))
            b = m.TimeInterval(b_begin, b_end)
        else:
            b = _random_second_aligned_interval(rng)
        expected = brute_force_overlaps(a, b)
        actual = temporal.interval_overlaps(a, b)
        assert actual is expected, (a, b)
        assert temporal.interval_overlaps(b, a) is expected
        agreements += 1
        overlaps_seen += int(expected)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"temporal-conflict suite took {elapsed:.1f}s"
    assert 0 < overlaps_seen < 1000  # both outcomes exercised
    announce(f"PASS temporal-conflict suite: 1000/{agreements} oracle agreements in {elapsed:.1f}s")


def test_exclusivity_invariant_under_randomized_mount_load():
    """100 seeds x 200 mount attempts over 5 configurations and 20 devices;
    afterwards a brute-force scan finds no instant where a device sits in
    two configurations; < 60 s total."""
    started = time.perf_counter()
    for seed in range(100):
        rng = random.Random(10_000 + seed)
        store = Store(None)
        devices = []
        for i in range(20):
            device = m.Device(short_name=f"dev-{i}")
            store.put_entity(device)
            devices.append(device.id)
        configs = []
        for i in range(5):
            config = m.Configuration(label=f"cfg-{i}")
            store.put_entity(config)
            configs.append(config.id)
        committed = 0
        rejected = 0
        horizon = int((HORIZON_END - HORIZON_BEGIN).total_seconds())
        for _ in range(200):
            child = m.EntityRef(m.EntityKind.DEVICE, rng.choice(devices))
            begin = HORIZON_BEGIN + timedelta(seconds=rng.randrange(horizon))
            end = None if rng.random() < 0.2 else begin + timedelta(seconds=rng.randrange(1, 120 * 86400))
            mount = m.MountAction(child=child, interval=m.TimeInterval(begin, end))
            try:
                store.mount_transaction(rng.choice(configs), add=mount)
                committed += 1
            except MountConflictError:
                rejected += 1
        assert committed > 0 and rejected > 0  # load actually produced contention
        # brute-force scan: membership counting at every mount-begin instant
        # (any overlap of half-open intervals is visible at the later begin),
        # plus ends and random probes for good measure
        mounts_by_device: dict[str, list[tuple[str, m.MountAction]]] = {}
        for config_id in configs:
            config = store.get(m.EntityKind.CONFIGURATION, config_id)
            for mount in config.mount_actions:
                mounts_by_device.setdefault(mount.child.id, []).append((config_id, mount))
        for device_id, pairs in mounts_by_device.items():
            probes = set()
            for _, mount in pairs:
                probes.add(mount.interval.begin)
                if mount.interval.end is not None:
                    probes.add(mount.interval.end)
                    probes.add(mount.interval.end - timedelta(seconds=1))
            for _ in range(50):
                probes.add(HORIZON_BEGIN + timedelta(seconds=rng.randrange(horizon)))
            for probe in probes:
                active_configs = {
                    config_id
                    for config_id, mount in pairs
                    if contains(mount.interval, probe)
                }
                assert len(active_configs) <= 1, (
                    f"seed {seed}: device {device_id} in {sorted(active_configs)} at {probe}"
                )
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"exclusivity suite took {elapsed:.1f}s"
    announce(f"PASS exclusivity invariant: 100 seeds, zero double-mount instants, {elapsed:.1f}s")


def test_replay_oracle_equivalence_500_instances():
    """mount_tree_at equals independent event replay on 500 random small
    instances (<= 10 entities, <= 30 actions), 20 probe instants each."""
    rng = random.Random(31337)
    probes_checked = 0
    for _ in range(500):
        config = random_valid_configuration(rng, max_entities=10, max_actions=30)
        assert len({mt.child.id for mt in config.mount_actions} | {mt.parent.id for mt in config.mount_actions if mt.parent}) <= 10
        assert len(config.mount_actions) <= 30
        for _ in range(20):
            at = HORIZON_BEGIN + timedelta(hours=rng.randrange(0, 2600))
            tree = temporal.mount_tree_at(config, at)
            assert tree_edges(tree) == replay_edges(config.mount_actions, at)
            probes_checked += 1
    announce(f"PASS replay equivalence: 500 instances, {probes_checked} probes agree")


def test_field_walkthrough_end_to_end_via_api(vocab_store):
    """The device-registration walkthrough, API only: basic data, measured
    quantity with the reference values (°C, -50, 60, 0.6, 0.1), owner
    contact, parameter, URL attachment, term proposal + curation, mount,
    state query; every re-GET equals the last write."""
    service = make_service(vocab_store)
    client, h = service.client, service.h

    def reget_equals(path: str, written: dict) -> None:
        fetched = client.get(path, headers=h("alice")).json()["data"]
        assert fetched == written, f"re-GET of {path} differs from last write"

    # Step 1: basic data (short name required, type/manufacturer/model/serials optional)
    vocab = {t.term: t for t in vocab_store.iter_terms()}
    created = client.post(
        "/devices",
        headers=h("alice"),
        json={
            "data": {
                "type": "device",
                "attributes": {
                    "short_name": "ClimaVUE50-001",
                    "device_type": vocab["Weather station"].id,
                    "manufacturer": vocab["Campbell"].id,
                    "model": "ClimaVUE50",
                    "serial_number": "CV50-8431",
                    "inventory_number": "INV-2019-0042",
                    "visibility": "public",
                },
            }
        },
    )
    assert created.status_code == 201
    device_id = created.json()["data"]["id"]
    assert created.json()["data"]["attributes"]["version"] == 1
    reget_equals(f"/devices/{device_id}", created.json()["data"])

    # owner contact was auto-assigned to the creator
    contacts = created.json()["data"]["attributes"]["contacts"]
    alice_contact = vocab_store.contact_for_account(service.accounts["alice"].id)
    assert contacts == [{"contact": alice_contact.id, "role": vocab["Owner"].id}]

    # Step 2: measured quantity with the reference values
    degc = vocab["°C"].id
    quantity = client.post(
        f"/devices/{device_id}/measured-quantities",
        headers=h("alice"),
        json={
            "data": {
                "type": "measured-quantity",
                "attributes": {
                    "compartment": vocab["Atmosphere"].id,
                    "sampling_media": vocab["Air"].id,
                    "quantity": vocab["Air temperature"].id,
                    "unit": degc,
                    "range_min": -50,
                    "range_max": 60,
                    "accuracy": 0.6,
                    "accuracy_unit": degc,
                    "resolution": 0.1,
                    "resolution_unit": degc,
                    "label": "Air temperature",
                },
            }
        },
    )
    assert quantity.status_code == 201
    attrs = quantity.json()["data"]["attributes"]
    assert (attrs["range_min"], attrs["range_max"], attrs["accuracy"], attrs["resolution"]) == (-50, 60, 0.6, 0.1)

    # Step 3: propose a new measured quantity, curator accepts, then use it
    proposal = client.post(
        "/cv/proposals",
        headers=h("bob"),
        json={
            "data": {
                "type": "vocabulary-term",
                "attributes": {
                    "category": "measured_quantity",
                    "term": "Vapor pressure deficit",
                    "definition": "Difference between saturation and actual vapor pressure.",
                    "provenance": "community proposal",
                    "note_for_curator": "needed for the ClimaVUE50",
                },
            }
        },
    )
    assert proposal.status_code == 201
    assert proposal.json()["data"]["attributes"]["status"] == "proposed"
    ticket_id = proposal.json()["meta"]["ticket_id"]
    new_term_id = proposal.json()["data"]["id"]
    decision = client.post(
        f"/cv/proposals/{ticket_id}/decision", headers=h("alice"), json={"decision": "accept"}
    )
    assert decision.status_code == 200
    assert decision.json()["data"]["attributes"]["status"] == "accepted"
    second_quantity = client.post(
        f"/devices/{device_id}/measured-quantities",
        headers=h("alice"),
        json={
            "data": {
                "type": "measured-quantity",
                "attributes": {"quantity": new_term_id, "unit": vocab["hPa"].id, "label": "VPD"},
            }
        },
    )
    assert second_quantity.status_code == 201

    # Step 4: contacts and a parameter with a dated value
    device_doc = client.get(f"/devices/{device_id}", headers=h("alice")).json()["data"]
    bob_contact = vocab_store.contact_for_account(service.accounts["bob"].id)
    patched = client.patch(
        f"/devices/{device_id}",
        headers=h("alice"),
        json={
            "data": {
                "type": "device",
                "id": device_id,
                "attributes": {
                    "version": device_doc["attributes"]["version"],
                    "contacts": device_doc["attributes"]["contacts"]
                    + [{"contact": bob_contact.id, "role": vocab["Technician"].id}],
                },
            }
        },
    )
    assert patched.status_code == 200
    reget_equals(f"/devices/{device_id}", patched.json()["data"])

    parameter = client.post(
        f"/devices/{device_id}/parameters",
        headers=h("alice"),
        json={"data": {"type": "parameter", "attributes": {"label": "Cable length", "unit": vocab["m"].id}}},
    )
    assert parameter.status_code == 201
    parameter_id = parameter.json()["data"]["id"]
    value = client.post(
        f"/devices/{device_id}/parameters/{parameter_id}/values",
        headers=h("alice"),
        json={"timestamp": "2020-01-15T09:00:00Z", "value": "5 m"},
    )
    assert value.status_code == 201

    # Step 5: link supplementary material by URL
    attachment = client.post(
        f"/devices/{device_id}/attachments",
        headers=h("alice"),
        json={
            "data": {
                "type": "attachment",
                "attributes": {
                    "label": "Operator manual",
                    "origin": "url",
                    "url": "https://docs.example.org/climavue50.pdf",
                    "media_type": "application/pdf",
                },
            }
        },
    )
    assert attachment.status_code == 201

    # deploy: platform + configuration + mounts, then ask for the state
    platform = client.post(
        "/platforms",
        headers=h("alice"),
        json={
            "data": {
                "type": "platform",
                "attributes": {"short_name": "Tripod-Alpha", "platform_type": vocab["Tripod"].id, "visibility": "public"},
            }
        },
    )
    platform_id = platform.json()["data"]["id"]
    configuration = client.post(
        "/configurations",
        headers=h("alice"),
        json={
            "data": {
                "type": "configuration",
                "attributes": {"label": "Walkthrough station", "status": "active", "visibility": "public"},
            }
        },
    )
    config_id = configuration.json()["data"]["id"]
    tripod_mount = client.post(
        f"/configurations/{config_id}/mounts",
        headers=h("alice"),
        json={
            "data": {
                "type": "mount",
                "attributes": {
                    "child": {"kind": "platform", "id": platform_id},
                    "interval": {"begin": "2020-01-01T00:00:00Z", "end": None},
                },
            }
        },
    )
    assert tripod_mount.status_code == 201
    device_mount = client.post(
        f"/configurations/{config_id}/mounts",
        headers=h("alice"),
        json={
            "data": {
                "type": "mount",
                "attributes": {
                    "child": {"kind": "device", "id": device_id},
                    "parent": {"kind": "platform", "id": platform_id},
                    "interval": {"begin": "2020-01-15T00:00:00Z", "end": None},
                    "offset_z": 1.5,
                },
            }
        },
    )
    assert device_mount.status_code == 201
    location = client.post(
        f"/configurations/{config_id}/locations",
        headers=h("alice"),
        json={
            "data": {
                "type": "location",
                "attributes": {
                    "interval": {"begin": "2020-01-01T00:00:00Z", "end": None},
                    "location": {"type": "static", "latitude": 49.0, "longitude": 12.0, "height": 440.0, "epsg_code": "4326"},
                    "label": "plot center",
                },
            }
        },
    )
    assert location.status_code == 201

    state = client.get(f"/configurations/{config_id}/state", params={"at": "2020-06-01T00:00:00Z"})
    assert state.status_code == 200
    tree = state.json()["data"]["attributes"]["tree"]
    (tripod_node,) = tree
    assert tripod_node["entity"]["id"] == platform_id
    (leaf,) = tripod_node["children"]
    assert leaf["entity"]["id"] == device_id
    assert leaf["position"] == {
        "variant": "absolute",
        "latitude": 49.0,
        "longitude": 12.0,
        "height": 440.0,
        "epsg_code": "4326",
        "offset": {"x": 0.0, "y": 0.0, "z": 1.5},
    }

    # final read-your-writes over the whole aggregate
    final = client.get(f"/devices/{device_id}", headers=h("alice")).json()["data"]
    assert {mq["label"] for mq in final["attributes"]["measured_quantities"]} == {"Air temperature", "VPD"}
    assert final["attributes"]["parameters"][0]["value_actions"][0]["value"] == "5 m"
    assert final["attributes"]["attachments"][0]["url"] == "https://docs.example.org/climavue50.pdf"
    announce("PASS field walkthrough end-to-end via API (device, CV, mounts, state)")


def test_cv_lifecycle_invariants_with_200_randomized_operations(vocab_store):
    """propose -> exactly one open ticket; accept -> resolvable + exported;
    reject -> unresolvable; ticket/term invariants hold through 200 random
    propose/curate operations."""
    vocab = vocab_store.vocabulary
    term, ticket = vocab.propose_term(TermDraft(m.TermCategory.MEASURED_QUANTITY, "Snow depth x"))
    open_tickets = [t for t in vocab.list_tickets(TicketState.OPEN) if t.term_id == term.id]
    assert len(open_tickets) == 1
    vocab.curate(ticket.id, "accept", CURATOR)
    assert vocab.resolve(term.id) is not None
    document = export_skos(vocab_store.iter_terms(), vocab_store.base_url)
    assert f"/cv/terms/{term.id}>" in document

    term2, ticket2 = vocab.propose_term(TermDraft(m.TermCategory.MEASURED_QUANTITY, "Rejected thing"))
    vocab.curate(ticket2.id, "reject", CURATOR)
    assert vocab.resolve(term2.id) is None

    rng = random.Random(77)
    words = [f"Random quantity {i}" for i in range(60)]
    operations = 0
    while operations < 200:
        pending = [t for t in vocab.list_tickets() if t.state in (TicketState.OPEN, TicketState.IN_REVIEW)]
        roll = rng.random()
        if roll < 0.5 or not pending:
            try:
                vocab.propose_term(TermDraft(m.TermCategory.MEASURED_QUANTITY, rng.choice(words)))
            except DuplicateTermError:
                pass
        else:
            try:
                vocab.curate(rng.choice(pending).id, "accept" if rng.random() < 0.6 else "reject", CURATOR)
            except DuplicateTermError:
                pass
        operations += 1
        pending_count = len([t for t in vocab.list_tickets() if t.state in (TicketState.OPEN, TicketState.IN_REVIEW)])
        proposed_count = len([t for t in vocab_store.iter_terms() if t.status is m.TermStatus.PROPOSED])
        assert pending_count == proposed_count
        non_rejected = [
            (t.category.value, t.term.casefold())
            for t in vocab_store.iter_terms()
            if t.status is not m.TermStatus.REJECTED
        ]
        assert len(non_rejected) == len(set(non_rejected))
        for t in vocab.list_tickets():
            linked = vocab.get_term(t.term_id)
            if t.state is TicketState.ACCEPTED:
                assert linked.status is m.TermStatus.ACCEPTED
            if t.state is TicketState.REJECTED:
                assert linked.status is m.TermStatus.REJECTED
    announce("PASS CV lifecycle: ticket/term invariants held through 200 randomized operations")


def test_skos_export_parses_and_is_deterministic(vocab_store):
    """Export parses with the independent Turtle reader, concept count equals
    the accepted-term count, and two exports are byte-identical."""
    vocab = vocab_store.vocabulary
    term, ticket = vocab.propose_term(
        TermDraft(
            m.TermCategory.MEASURED_QUANTITY,
            "Sap flow velocity",
            definition="Speed of xylem sap.",
            provenance="community",
            provenance_uri="https://vocab.example/sapflow",
            synonyms=("sap velocity",),
        )
    )
    vocab.curate(ticket.id, "accept", CURATOR)
    first = export_skos(vocab_store.iter_terms(), vocab_store.base_url)
    second = export_skos(list(reversed(list(vocab_store.iter_terms()))), vocab_store.base_url)
    assert first == second, "export is not byte-identical across runs"
    triples = parse_turtle(first)
    concepts = {s for s, p, o in triples if p == RDF_TYPE and o == ("iri", SKOS + "Concept")}
    accepted = [t for t in vocab_store.iter_terms() if t.status is m.TermStatus.ACCEPTED]
    assert len(concepts) == len(accepted)
    subject = f"{vocab_store.base_url}/cv/terms/{term.id}"
    assert (subject, SKOS + "exactMatch", ("iri", "https://vocab.example/sapflow")) in triples
    announce(f"PASS SKOS export: {len(concepts)} concepts parse independently, byte-identical")


def test_pid_idempotency_and_fault_tolerance(demo_store):
    """3 mint calls -> exactly 1 registration; injected 500 leaves the
    entity without a pid; the next mint succeeds."""
    with MockHandleServer(prefix="20.500.999") as server:
        service = PidService(demo_store, HttpHandleClient(server.endpoint))
        device = demo_store.get(m.EntityKind.DEVICE, "dev-climavue50-001")
        handles = set()
        for _ in range(3):
            record, _ = service.mint(demo_store.get(m.EntityKind.DEVICE, device.id))
            handles.add(record.handle)
        assert len(server.registrations) == 1
        assert len(handles) == 1

        gauge = demo_store.get(m.EntityKind.DEVICE, "dev-raingauge-007")
        server.fail_next(1)
        with pytest.raises(Exception):
            service.mint(gauge)
        assert demo_store.get(m.EntityKind.DEVICE, gauge.id).pid is None
        assert demo_store.get_pid_record_for(gauge.id) is None
        record, created = service.mint(demo_store.get(m.EntityKind.DEVICE, gauge.id))
        assert created
        assert demo_store.get(m.EntityKind.DEVICE, gauge.id).pid == record.handle
        assert len(server.registrations) == 2
    announce("PASS PID idempotency and fault tolerance (1 registration, clean failure, retry ok)")


def test_race_safety_100_trials(tmp_path):
    """Two concurrent overlapping mount transactions; exactly one commits,
    100 trials."""
    store = Store.initialize(tmp_path / "race")
    device = m.Device(short_name="Race-Dev")
    store.put_entity(device)
    config_ids = []
    for label in ("Race A", "Race B"):
        config = m.Configuration(label=label)
        store.put_entity(config)
        config_ids.append(config.id)
    child = m.EntityRef(m.EntityKind.DEVICE, device.id)
    for trial in range(100):
        begin = HORIZON_BEGIN + timedelta(days=trial)
        interval = m.TimeInterval(begin, begin + timedelta(hours=6))
        barrier = threading.Barrier(2)
        outcomes: list[str] = []
        lock = threading.Lock()

        def attempt(config_id):
            barrier.wait()
            try:
                store.mount_transaction(config_id, add=m.MountAction(child=child, interval=interval))
                outcome = "committed"
            except MountConflictError:
                outcome = "conflict"
            with lock:
                outcomes.append(outcome)

        threads = [threading.Thread(target=attempt, args=(cid,)) for cid in config_ids]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert sorted(outcomes) == ["committed", "conflict"], f"trial {trial}: {outcomes}"
    assert store.validate_all() == []
    announce("PASS race safety: 100/100 trials committed exactly once")


@pytest.fixture(scope="module")
def desk_scale_store(tmp_path_factory):
    """4000 devices, 150 platforms, 900 configurations (the reported
    production magnitudes), seeded through the bundle loader."""
    data_dir = tmp_path_factory.mktemp("desk") / "data"
    store = Store.initialize(data_dir)
    install_base_vocabulary(store)
    bundle: dict = {"groups": [{"id": "grp-load", "name": "load-ops"}], "devices": [], "platforms": [], "configurations": []}
    for i in range(4000):
        bundle["devices"].append(
            {
                "id": f"dev{i:05d}",
                "short_name": f"LoadDev-{i:05d}",
                "serial_number": f"SN-{i:06d}",
                "visibility": "public",
                "owner_group": "grp-load",
            }
        )
    for i in range(150):
        bundle["platforms"].append(
            {
                "id": f"plat{i:04d}",
                "short_name": f"LoadPlat-{i:04d}",
                "visibility": "public",
                "owner_group": "grp-load",
            }
        )
    begin = "2020-01-01T00:00:00Z"
    for i in range(900):
        platform_id = f"plat{i % 150:04d}"
        mounts = []
        if i < 150:  # each platform sits in exactly one configuration
            mounts.append(
                {
                    "id": f"mnt-p{i:04d}",
                    "child": {"kind": "platform", "id": platform_id},
                    "parent": None,
                    "interval": {"begin": begin, "end": None},
                }
            )
            for j in range(4):
                device_index = (i * 4 + j) % 4000
                mounts.append(
                    {
                        "id": f"mnt-c{i:04d}-{j}",
                        "child": {"kind": "device", "id": f"dev{device_index:05d}"},
                        "parent": {"kind": "platform", "id": platform_id},
                        "interval": {"begin": "2020-02-01T00:00:00Z", "end": "2021-02-01T00:00:00Z"},
                    }
                )
        else:  # direct device mounts on the configuration root
            for j in range(2):
                device_index = (600 + i * 2 + j) % 4000
                mounts.append(
                    {
                        "id": f"mnt-d{i:04d}-{j}",
                        "child": {"kind": "device", "id": f"dev{device_index:05d}"},
                        "parent": None,
                        "interval": {
                            "begin": f"202{1 + (i % 3)}-03-01T00:00:00Z",
                            "end": f"202{1 + (i % 3)}-09-01T00:00:00Z",
                        },
                    }
                )
        bundle["configurations"].append(
            {
                "id": f"cfg{i:04d}",
                "label": f"LoadConfig-{i:04d}",
                "status": "active",
                "visibility": "public",
                "owner_group": "grp-load",
                "mount_actions": mounts,
            }
        )
    from senreg.seed import load_bundle

    report = load_bundle(store, bundle)
    assert report.created["devices"] == 4000
    assert report.created["platforms"] == 150
    assert report.created["configurations"] == 900
    return store


def test_desk_scale_search_latency(desk_scale_store):
    """Exact short-name search answers in < 100 ms median."""
    rng = random.Random(5)
    durations = []
    for _ in range(60):
        name = f"LoadDev-{rng.randrange(4000):05d}"
        started = time.perf_counter()
        hits = desk_scale_store.search(name)
        durations.append(time.perf_counter() - started)
        assert hits and hits[0].name == name
    median = statistics.median(durations)
    assert median < 0.100, f"median search latency {median * 1000:.1f} ms"
    announce(f"PASS desk-scale search: median {median * 1000:.2f} ms over 60 exact-name queries")


def test_desk_scale_validate_under_a_minute(desk_scale_store):
    """`validate` over the full desk-scale store finishes clean in < 60 s."""
    from click.testing import CliRunner

    from senreg.cli import main

    started = time.perf_counter()
    result = CliRunner().invoke(main, ["--data-dir", str(desk_scale_store.data_dir), "validate"])
    elapsed = time.perf_counter() - started
    assert result.exit_code == 0, result.output
    assert "0 findings" in result.output
    assert elapsed < 60.0, f"validate took {elapsed:.1f}s"
    announce(f"PASS desk-scale validate: clean in {elapsed:.1f}s (4000 devices, 900 configurations)")


def test_visibility_coherence_lists_equal_direct_reads(vocab_store):
    """Over randomized visibility and group assignments, the ids a principal
    sees in lists equal the ids readable by direct GET, for every
    principal class."""
    service = make_service(vocab_store)
    rng = random.Random(2024)
    created_ids = []
    for i in range(48):
        visibility = rng.choice(["private", "internal", "public"])
        owner = rng.choice(["grp-field-ops", "grp-lab"])
        creator = "alice" if owner == "grp-field-ops" else "carol"
        response = service.client.post(
            "/devices",
            headers=service.h(creator),
            json={
                "data": {
                    "type": "device",
                    "attributes": {
                        "short_name": f"Vis-{i:03d}",
                        "visibility": visibility,
                        "owner_group": owner,
                    },
                }
            },
        )
        assert response.status_code == 201, response.text
        created_ids.append(response.json()["data"]["id"])
    for persona in ("anon", "alice", "bob", "carol", "admin", "apikey"):
        headers = service.h(persona)
        listed: set[str] = set()
        page = 1
        while True:
            chunk = service.client.get(
                f"/devices?page[number]={page}&page[size]=20", headers=headers
            ).json()
            listed.update(d["id"] for d in chunk["data"])
            if page >= chunk["meta"]["pages"]:
                break
            page += 1
        readable = {
            device_id
            for device_id in created_ids
            if service.client.get(f"/devices/{device_id}", headers=headers).status_code == 200
        }
        assert listed & set(created_ids) == readable, f"divergence for {persona}"
        # search never exposes more than direct reads allow
        searched = {
            hit["id"]
            for hit in service.client.get("/search?q=Vis&limit=200", headers=headers).json()["data"]
        }
        assert searched <= listed
    announce("PASS visibility coherence: list == direct-GET for all principal classes")
