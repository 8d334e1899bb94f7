// End-to-end against the real service: a scripted console session walks
// the device-registration steps plus the mount-conflict scenario, and
// the resulting store must be byte-identical to the one produced by the
// plain-API script.  Both instances run with deterministic ids and a
// deterministic clock so equal operation sequences yield equal bytes.

import { type ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api/client";
import { Session } from "../src/state/session";
import { deviceEditor } from "../src/views/deviceEditor";
import { mountEditor } from "../src/views/mountEditor";

const PYTHON = process.env.PYTHON ?? "python3";
// scrypt("alice-pw") with a fixed salt: random salts would differ between
// the two instances and break the byte comparison
const ALICE_HASH =
  "scrypt$aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa$e453820ec6587173815ca183cf471a11b3bb52a6ceb3dbea0d3462219d8586059b7a7ddb3f9de333c0366c29926fbe39688201cadf1c21206a8c2b4d4c8b18e2";

const SETUP_SCRIPT = `
import os
from senreg.auth import Account, Group
from senreg.cli import _store_kwargs
from senreg.config import load_config
from senreg.storage import Store

config = load_config()
store = Store(config.data_dir, **_store_kwargs(config))
group = store.put_group(Group(id=store.new_id(), name="field-ops", display_name="Field Operations"))
store.put_account(Account(
    id=store.new_id(),
    username="alice",
    password_hash=os.environ["ALICE_HASH"],
    given_name="Alice",
    family_name="Ops",
    email="alice.ops@example.org",
    organization="Example Observatory",
    groups=(group.id,),
    roles=("member", "curator"),
))
print("setup done")
`;

interface Backend {
  baseUrl: string;
  dataDir: string;
  proc: ChildProcess;
}

const backends: Backend[] = [];
const tempDirs: string[] = [];

function freePort(): number {
  return 21000 + Math.floor(Math.random() * 20000);
}

async function startBackend(): Promise<Backend> {
  const dataDir = mkdtempSync(join(tmpdir(), "senreg-e2e-"));
  tempDirs.push(dataDir);
  const env = {
    ...process.env,
    SENREG_DETERMINISTIC: "1",
    SENREG_TOKEN_SECRET: "e2e-secret",
    SENREG_DATA_DIR: dataDir,
    ALICE_HASH,
  };
  const init = spawnSync(PYTHON, ["-m", "senreg.cli", "init"], { env, encoding: "utf-8" });
  if (init.status !== 0) throw new Error(`init failed: ${init.stderr}`);
  const setup = spawnSync(PYTHON, ["-c", SETUP_SCRIPT], { env, encoding: "utf-8" });
  if (setup.status !== 0) throw new Error(`setup failed: ${setup.stderr}`);

  for (let attempt = 0; attempt < 5; attempt++) {
    const port = freePort();
    const baseUrl = `http://127.0.0.1:${port}`;
    const proc = spawn(
      PYTHON,
      ["-m", "senreg.cli", "serve", "--host", "127.0.0.1", "--port", String(port), "--base-url", baseUrl],
      { env, stdio: ["ignore", "pipe", "pipe"] },
    );
    const deadline = Date.now() + 30_000;
    let healthy = false;
    let exited = false;
    proc.once("exit", () => {
      exited = true;
    });
    while (Date.now() < deadline && !exited) {
      try {
        const response = await fetch(`${baseUrl}/healthz`);
        if (response.ok) {
          healthy = true;
          break;
        }
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 150));
      }
    }
    if (healthy) {
      const backend = { baseUrl, dataDir, proc };
      backends.push(backend);
      return backend;
    }
    proc.kill("SIGKILL");
    if (!exited) await new Promise((resolve) => proc.once("exit", resolve));
  }
  throw new Error("could not start a backend on any port");
}

async function stopBackend(backend: Backend): Promise<void> {
  backend.proc.kill("SIGTERM");
  await new Promise((resolve) => {
    backend.proc.once("exit", resolve);
    setTimeout(resolve, 10_000);
  });
}

afterAll(async () => {
  for (const backend of backends) backend.proc.kill("SIGKILL");
  for (const dir of tempDirs) rmSync(dir, { recursive: true, force: true });
});

function snapshotStore(dataDir: string): Map<string, string> {
  const out = new Map<string, string>();
  const walk = (dir: string, prefix: string) => {
    for (const entry of readdirSync(dir).sort()) {
      const full = join(dir, entry);
      const rel = prefix ? `${prefix}/${entry}` : entry;
      if (statSync(full).isDirectory()) walk(full, rel);
      else out.set(rel, readFileSync(full, "utf-8"));
    }
  };
  for (const section of ["records", "revisions"]) {
    walk(join(dataDir, section), section);
  }
  return out;
}

interface TermIndex {
  [termText: string]: string;
}

async function termIds(client: ApiClient): Promise<TermIndex> {
  const index: TermIndex = {};
  for (const category of [
    "equipment_type",
    "manufacturer",
    "contact_role",
    "unit",
    "measured_quantity",
    "compartment",
    "sampling_media",
    "platform_type",
  ]) {
    for (const term of await client.listTerms(category)) {
      index[`${category}:${term.attributes.term}`] = term.id;
    }
  }
  return index;
}

const MQ_STEP2 = (cv: TermIndex) => ({
  compartment: cv["compartment:Atmosphere"],
  sampling_media: cv["sampling_media:Air"],
  quantity: cv["measured_quantity:Air temperature"],
  unit: cv["unit:°C"],
  range_min: -50,
  range_max: 60,
  accuracy: 0.6,
  accuracy_unit: cv["unit:°C"],
  resolution: 0.1,
  resolution_unit: cv["unit:°C"],
  label: "Air temperature",
});

/** The reference flow, straight HTTP calls; mirrors the console session. */
async function apiOnlyFlow(baseUrl: string): Promise<void> {
  const client = new ApiClient(baseUrl);
  await client.login("alice", "alice-pw");
  await client.me(); // provisions the owner contact, as the console's session refresh does
  const cv = await termIds(client);

  const device = await client.create("device", {
    short_name: "ClimaVUE50-001",
    description: "",
    device_type: cv["equipment_type:Weather station"],
    manufacturer: cv["manufacturer:Campbell"],
    model: "ClimaVUE50",
    serial_number: "CV50-8431",
    inventory_number: "INV-2019-0042",
    urn: "",
    visibility: "public",
    owner_group: (await client.me()).groups[0],
  });
  await client.addItem("device", device.id, "measured-quantities", "measured-quantity", MQ_STEP2(cv));
  const { term, ticketId } = await client.proposeTerm({
    category: "measured_quantity",
    term: "Vapor pressure deficit",
    definition: "Saturation minus actual vapor pressure.",
    provenance: "community proposal",
    note_for_curator: "needed for the ClimaVUE50",
  });
  await client.decideProposal(ticketId, "accept");
  await client.addItem("device", device.id, "measured-quantities", "measured-quantity", {
    quantity: term.id,
    unit: cv["unit:hPa"],
    label: "VPD",
  });
  const refreshed = await client.get<{ contacts: { contact: string; role: string }[]; version: number }>(
    "device",
    device.id,
  );
  const me = await client.me();
  await client.patch("device", device.id, refreshed.attributes.version, {
    contacts: [
      ...refreshed.attributes.contacts,
      { contact: me.contact_id, role: cv["contact_role:Technician"] },
    ],
  });
  const parameter = await client.addItem("device", device.id, "parameters", "parameter", {
    label: "Cable length",
    unit: cv["unit:m"],
  });
  await client.addParameterValue("device", device.id, parameter.id, {
    timestamp: "2020-01-15T09:00:00Z",
    value: "5 m",
  });
  await client.addItem("device", device.id, "attachments", "attachment", {
    label: "Operator manual",
    origin: "url",
    url: "https://docs.example.org/climavue50.pdf",
    media_type: "application/pdf",
    is_preview_image: false,
  });

  const platform = await client.create("platform", {
    short_name: "Tripod-Alpha",
    platform_type: cv["platform_type:Tripod"],
    visibility: "public",
    owner_group: me.groups[0],
  });
  const configuration = await client.create("configuration", {
    label: "Walkthrough station",
    status: "active",
    visibility: "public",
    owner_group: me.groups[0],
  });
  await addLocation(client, configuration.id);
  await client.addMount(configuration.id, {
    child: { kind: "platform", id: platform.id },
    parent: null,
    interval: { begin: "2020-01-01T00:00:00Z", end: null },
    offset_x: 0,
    offset_y: 0,
    offset_z: 0,
    begin_description: "",
  });
  await client.addMount(configuration.id, {
    child: { kind: "device", id: device.id },
    parent: { kind: "platform", id: platform.id },
    interval: { begin: "2020-01-15T00:00:00Z", end: null },
    offset_x: 0,
    offset_y: 0,
    offset_z: 1.5,
    begin_description: "",
  });
  const second = await client.create("configuration", {
    label: "Second station",
    status: "active",
    visibility: "public",
    owner_group: me.groups[0],
  });
  let conflict = false;
  try {
    await client.addMount(second.id, {
      child: { kind: "device", id: device.id },
      parent: null,
      interval: { begin: "2020-06-01T00:00:00Z", end: null },
      offset_x: 0,
      offset_y: 0,
      offset_z: 0,
      begin_description: "",
    });
  } catch (err) {
    conflict = true;
    expect((err as { meta: { configuration_label?: string } }).meta.configuration_label).toBe(
      "Walkthrough station",
    );
  }
  expect(conflict).toBe(true);
  const state = await client.configurationState(configuration.id, "2020-06-01T00:00:00Z");
  expect(state.mounted).toBe(2);
  expect(state.tree[0].children[0].position).toEqual({
    variant: "absolute",
    latitude: 49.0,
    longitude: 12.0,
    height: 440.0,
    epsg_code: "4326",
    offset: { x: 0, y: 0, z: 1.5 },
  });
}

// the walkthrough configuration also gets a static location in both flows
async function addLocation(client: ApiClient, configurationId: string): Promise<void> {
  await client.addLocation(configurationId, {
    interval: { begin: "2020-01-01T00:00:00Z", end: null },
    location: { type: "static", latitude: 49.0, longitude: 12.0, height: 440.0, epsg_code: "4326" },
    label: "plot center",
  });
}

/** The same flow driven through the console views in a DOM session. */
async function uiFlow(baseUrl: string): Promise<void> {
  document.body.innerHTML = "";
  const client = new ApiClient(baseUrl);
  const session = new Session(client);
  await session.login("alice", "alice-pw"); // refreshPrincipal hits /auth/me
  const cv = await termIds(client);

  // Step 1: basic data through the editor form
  const editor = await deviceEditor(session, null);
  document.body.append(editor.element);
  editor.setBasic({
    short_name: "ClimaVUE50-001",
    model: "ClimaVUE50",
    serial_number: "CV50-8431",
    inventory_number: "INV-2019-0042",
    device_type: cv["equipment_type:Weather station"],
    manufacturer: cv["manufacturer:Campbell"],
    visibility: "public",
  });
  const saved = await editor.save();
  expect(saved.ok).toBe(true);
  expect(editor.element.querySelector(".qr-code svg")).not.toBeNull();

  // Step 2: measured quantity with the reference values
  await editor.addMeasuredQuantity(MQ_STEP2(cv));

  // Step 3: propose a new measured quantity from the plus icon, curator accepts
  await editor.selectTab("Measured Quantities");
  const quantitySelect = editor.element.querySelector('select[name="mq_quantity"]') as HTMLSelectElement;
  const dialog = editor.openProposeDialog("measured_quantity", quantitySelect);
  dialog.setField("term", "Vapor pressure deficit");
  dialog.setField("definition", "Saturation minus actual vapor pressure.");
  dialog.setField("provenance", "community proposal");
  dialog.setField("note_for_curator", "needed for the ClimaVUE50");
  const proposed = await dialog.submit();
  expect(proposed?.pending).toBe(true);
  const tickets = await fetch(`${baseUrl}/cv/proposals?state=open`, {
    headers: { Authorization: `Bearer ${client.token}` },
  }).then((r) => r.json());
  await client.decideProposal(tickets.data[0].id, "accept");
  session.noteCurationDecision("measured_quantity");
  await editor.addMeasuredQuantity({ quantity: proposed!.id, unit: cv["unit:hPa"], label: "VPD" });

  // Step 4: contacts and a dated parameter
  await client.get("device", editor.deviceId!); // mirror the API flow's pre-patch re-read
  const me = await client.me();
  await editor.addContactRole(me.contact_id!, cv["contact_role:Technician"]);
  const parameter = await editor.addParameter("Cable length", cv["unit:m"]);
  await editor.addParameterValue(parameter.id, "2020-01-15T09:00:00Z", "5 m");

  // Step 5: link supplementary material
  await editor.addUrlAttachment("Operator manual", "https://docs.example.org/climavue50.pdf", "application/pdf");

  // deployment: platform, configuration, mounts through the mount editor
  const platform = await client.create("platform", {
    short_name: "Tripod-Alpha",
    platform_type: cv["platform_type:Tripod"],
    visibility: "public",
    owner_group: me.groups[0],
  });
  const configuration = await client.create("configuration", {
    label: "Walkthrough station",
    status: "active",
    visibility: "public",
    owner_group: me.groups[0],
  });
  await addLocation(client, configuration.id);
  const mounts = await mountEditor(session, configuration.id);
  document.body.append(mounts.element);
  const tripodMount = await mounts.addMount({
    childKind: "platform",
    childId: platform.id,
    parentId: null,
    begin: "2020-01-01T00:00:00Z",
    end: null,
  });
  expect(tripodMount.ok).toBe(true);
  const deviceMount = await mounts.addMount({
    childKind: "device",
    childId: editor.deviceId!,
    parentId: platform.id,
    begin: "2020-01-15T00:00:00Z",
    end: null,
    offsetZ: 1.5,
  });
  expect(deviceMount.ok).toBe(true);

  // conflict scenario: the same device into a second configuration
  const second = await client.create("configuration", {
    label: "Second station",
    status: "active",
    visibility: "public",
    owner_group: me.groups[0],
  });
  const otherMounts = await mountEditor(session, second.id);
  document.body.append(otherMounts.element);
  const conflict = await otherMounts.addMount({
    childKind: "device",
    childId: editor.deviceId!,
    parentId: null,
    begin: "2020-06-01T00:00:00Z",
    end: null,
  });
  expect(conflict.ok).toBe(false);
  expect(conflict.conflict?.configurationLabel).toBe("Walkthrough station");
  expect(otherMounts.conflictBanner()).toContain("Walkthrough station");

  // the time control shows the mounted tree at the probe instant
  await mounts.setInstant("2020-06-01T00:00:00Z");
  expect(mounts.treeNames()).toEqual(["Tripod-Alpha", "ClimaVUE50-001"]);
  expect(mounts.state()?.mounted).toBe(2);
}

describe("console session against the live service", () => {
  it(
    "matches the API-only script byte for byte in the resulting store",
    { timeout: 240_000 },
    async () => {
      const apiBackend = await startBackend();
      await apiOnlyFlow(apiBackend.baseUrl);
      await stopBackend(apiBackend);

      const uiBackend = await startBackend();
      await uiFlow(uiBackend.baseUrl);
      await stopBackend(uiBackend);

      const apiSnapshot = snapshotStore(apiBackend.dataDir);
      const uiSnapshot = snapshotStore(uiBackend.dataDir);
      expect([...uiSnapshot.keys()].sort()).toEqual([...apiSnapshot.keys()].sort());
      for (const [path, content] of apiSnapshot) {
        expect(uiSnapshot.get(path), `store file ${path} differs`).toBe(content);
      }
      expect(apiSnapshot.size).toBeGreaterThan(40);
    },
  );
});
