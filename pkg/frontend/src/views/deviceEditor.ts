// Tabbed device editor implementing the registration walkthrough:
// basic data, contacts with roles, measured quantities, parameters,
// custom fields, attachments (file upload or URL link, preview flag)
// and actions.  Vocabulary-backed fields are selection lists fed from
// the controlled vocabulary, each with a plus icon to propose new terms.
//
// The client validates only for feedback; the service stays the
// authority and its 422 field pointers map back onto the form.

import { ApiError } from "../api/client";
import type { DeviceAttributes, ResourceObject } from "../api/types";
import { renderQrInto } from "../qr";
import type { Session, TermOption } from "../state/session";
import { clear, h, option } from "./dom";
import { proposeTermDialog, type ProposeTermDialog } from "./proposeTerm";

const TABS = [
  "Basic Data",
  "Contacts",
  "Measured Quantities",
  "Parameters",
  "Custom Fields",
  "Attachments",
  "Actions",
] as const;

export type TabName = (typeof TABS)[number];

export interface SaveOutcome {
  ok: boolean;
  conflict: boolean;
  fieldErrors: Map<string, string>;
  device?: ResourceObject<DeviceAttributes>;
}

export interface DeviceEditor {
  element: HTMLElement;
  readonly deviceId: string | null;
  readonly version: number | null;
  selectTab(name: TabName): Promise<void>;
  activeTab(): TabName;
  setBasic(fields: Record<string, string>): void;
  save(): Promise<SaveOutcome>;
  reload(): Promise<void>;
  addMeasuredQuantity(fields: Record<string, unknown>): Promise<ResourceObject | ApiError>;
  addContactRole(contactId: string, roleTermId: string): Promise<SaveOutcome>;
  addParameter(label: string, unitTermId: string | null): Promise<ResourceObject>;
  addParameterValue(parameterId: string, timestamp: string, value: string): Promise<ResourceObject>;
  addCustomField(key: string, value: string): Promise<SaveOutcome>;
  addUrlAttachment(label: string, url: string, mediaType?: string, preview?: boolean): Promise<ResourceObject>;
  uploadFileAttachment(file: File | Blob, label: string, preview?: boolean): Promise<ResourceObject>;
  addAction(kindTermId: string, whenIso: string, description: string): Promise<ResourceObject | ApiError>;
  openProposeDialog(category: string, select: HTMLSelectElement): ProposeTermDialog;
  readonly conflictDialogVisible: boolean;
  fieldError(name: string): string | null;
}

const VOCAB_FIELDS: Record<string, string> = {
  device_type: "equipment_type",
  manufacturer: "manufacturer",
};

const MQ_VOCAB: Record<string, string> = {
  compartment: "compartment",
  sampling_media: "sampling_media",
  quantity: "measured_quantity",
  unit: "unit",
  accuracy_unit: "unit",
  resolution_unit: "unit",
};

export async function deviceEditor(session: Session, deviceId: string | null): Promise<DeviceEditor> {
  const client = session.client;
  let currentId = deviceId;
  let current: ResourceObject<DeviceAttributes> | null = null;
  let active: TabName = "Basic Data";
  const fieldErrors = new Map<string, string>();

  const element = h("section", { class: "device-editor" });
  const tabBar = h("nav", { class: "tabs", role: "tablist" });
  const panel = h("div", { class: "tab-panel" });
  const conflictDialog = h(
    "div",
    { class: "dialog conflict", hidden: true },
    h("p", {}, "This device changed elsewhere while you were editing."),
    h("button", { class: "reload", onClick: () => void controller.reload() }, "Reload latest version"),
  );
  element.append(tabBar, panel, conflictDialog);

  const basicInputs: Record<string, HTMLInputElement | HTMLSelectElement> = {};

  async function vocabSelect(
    name: string,
    category: string,
    selected: string | null,
  ): Promise<HTMLElement> {
    const select = h("select", { name });
    select.append(option("", "(none)"));
    for (const term of await session.terms(category)) {
      const label = term.pending ? `${term.term} (pending curation)` : term.term;
      select.append(option(term.id, label, term.id === selected));
    }
    basicInputs[name] = select;
    const plus = h(
      "button",
      {
        class: "propose-term-button",
        type: "button",
        title: "Propose a new term",
        onClick: () => controller.openProposeDialog(category, select),
      },
      "+",
    );
    return h("span", { class: "select-with-propose" }, select, plus);
  }

  function textInput(name: string, value: string, required = false): HTMLInputElement {
    const input = h("input", { name, value, required });
    basicInputs[name] = input;
    return input;
  }

  function errorSlot(name: string): HTMLElement {
    const message = fieldErrors.get(name);
    return h("span", { class: "field-error", dataset: { field: name } }, message ?? "");
  }

  function fieldRow(label: string, control: Node, name: string): HTMLElement {
    return h("label", { class: "field" }, h("span", {}, label), control, errorSlot(name));
  }

  async function renderBasic(): Promise<void> {
    const attrs = current?.attributes;
    const container = h("form", { class: "basic-data", onSubmit: (event: Event) => event.preventDefault() });
    container.append(
      fieldRow("Short name *", textInput("short_name", attrs?.short_name ?? "", true), "short_name"),
      fieldRow("Description", textInput("description", attrs?.description ?? ""), "description"),
      fieldRow("Device type", await vocabSelect("device_type", "equipment_type", attrs?.device_type ?? null), "device_type"),
      fieldRow("Manufacturer", await vocabSelect("manufacturer", "manufacturer", attrs?.manufacturer ?? null), "manufacturer"),
      fieldRow("Model", textInput("model", attrs?.model ?? ""), "model"),
      fieldRow("Serial number", textInput("serial_number", attrs?.serial_number ?? ""), "serial_number"),
      fieldRow("Inventory number", textInput("inventory_number", attrs?.inventory_number ?? ""), "inventory_number"),
      fieldRow("URN", textInput("urn", attrs?.urn ?? ""), "urn"),
    );
    const visibility = h("select", { name: "visibility" });
    for (const level of ["private", "internal", "public"]) {
      visibility.append(option(level, level, (attrs?.visibility ?? "internal") === level));
    }
    basicInputs.visibility = visibility;
    container.append(fieldRow("Visibility", visibility, "visibility"));
    const group = h("select", { name: "owner_group" });
    for (const g of session.principal?.groups ?? []) {
      group.append(option(g, g, (attrs?.owner_group ?? session.activeGroup) === g));
    }
    basicInputs.owner_group = group;
    container.append(fieldRow("Owner group", group, "owner_group"));
    container.append(
      h("button", { class: "primary save", type: "button", onClick: () => void controller.save() }, "Save"),
    );
    clear(panel);
    panel.append(container);
    if (current) {
      const url = current.links?.self ?? "";
      const urlBox = h(
        "div",
        { class: "canonical-url" },
        h("span", {}, "Canonical URL: "),
        h("a", { href: url, class: "canonical-link" }, url),
      );
      const qrBox = h("div", { class: "qr-code" });
      panel.append(urlBox, qrBox);
      const preview = current.attributes.attachments.find((a) => a.is_preview_image);
      if (preview) {
        const src =
          preview.origin === "url"
            ? preview.url ?? ""
            : `${client.baseUrl}/devices/${current.id}/attachments/${preview.id}/content`;
        panel.append(h("img", { class: "preview-image", src, alt: preview.label }));
      }
      await renderQrInto(qrBox, url);
    }
  }

  function itemTable(rows: HTMLElement[], empty: string): HTMLElement {
    if (!rows.length) return h("p", { class: "empty" }, empty);
    const list = h("ul", { class: "item-list" });
    rows.forEach((row) => list.append(row));
    return list;
  }

  async function renderContacts(): Promise<void> {
    clear(panel);
    const attrs = current?.attributes;
    const contacts = await client.list<{ given_name: string; family_name: string }>("contact", {
      "page[size]": "200",
    });
    const names = new Map(contacts.data.map((c) => [c.id, `${c.attributes.given_name} ${c.attributes.family_name}`]));
    const roles = await session.terms("contact_role");
    const roleNames = new Map(roles.map((r) => [r.id, r.term]));
    const rows = (attrs?.contacts ?? []).map((role) =>
      h("li", { dataset: { contact: role.contact, role: role.role } },
        `${names.get(role.contact) ?? role.contact} as ${roleNames.get(role.role) ?? role.role}`),
    );
    const contactSelect = h("select", { name: "new_contact" });
    contacts.data.forEach((c) => contactSelect.append(option(c.id, names.get(c.id) ?? c.id)));
    const roleSelect = h("select", { name: "new_role" });
    roles.forEach((r) => roleSelect.append(option(r.id, r.term)));
    panel.append(
      itemTable(rows, "No contacts assigned yet."),
      h(
        "div",
        { class: "add-row" },
        contactSelect,
        roleSelect,
        h(
          "button",
          { type: "button", onClick: () => void controller.addContactRole(contactSelect.value, roleSelect.value) },
          "Add contact",
        ),
      ),
    );
  }

  async function renderMeasuredQuantities(): Promise<void> {
    clear(panel);
    const attrs = current?.attributes;
    const termName = async (category: string, id: string | null) => {
      if (!id) return "";
      const match = (await session.terms(category)).find((t) => t.id === id);
      return match?.term ?? id;
    };
    const rows: HTMLElement[] = [];
    for (const mq of attrs?.measured_quantities ?? []) {
      rows.push(
        h(
          "li",
          { dataset: { id: mq.id ?? "" } },
          `${mq.label || (await termName("measured_quantity", mq.quantity))}: ` +
            `${await termName("measured_quantity", mq.quantity)} [${await termName("unit", mq.unit)}] ` +
            `range ${mq.range_min ?? "?"}..${mq.range_max ?? "?"} ` +
            `accuracy ${mq.accuracy ?? "?"} resolution ${mq.resolution ?? "?"}`,
        ),
      );
    }
    const form = h("form", { class: "mq-form", onSubmit: (event: Event) => event.preventDefault() });
    const controls: Record<string, HTMLElement> = {};
    for (const [name, category] of Object.entries(MQ_VOCAB)) {
      controls[name] = await vocabSelect(`mq_${name}`, category, null);
    }
    for (const name of ["range_min", "range_max", "accuracy", "resolution"]) {
      basicInputs[`mq_${name}`] = h("input", { name: `mq_${name}`, type: "number", step: "any" });
    }
    basicInputs.mq_label = h("input", { name: "mq_label" });
    form.append(
      fieldRow("Measurement compartment", controls.compartment, "mq_compartment"),
      fieldRow("Sampling media", controls.sampling_media, "mq_sampling_media"),
      fieldRow("Measured quantity", controls.quantity, "mq_quantity"),
      fieldRow("Unit", controls.unit, "mq_unit"),
      fieldRow("Measuring range min", basicInputs.mq_range_min, "mq_range_min"),
      fieldRow("Measuring range max", basicInputs.mq_range_max, "mq_range_max"),
      fieldRow("Accuracy", basicInputs.mq_accuracy, "mq_accuracy"),
      fieldRow("Unit of accuracy", controls.accuracy_unit, "mq_accuracy_unit"),
      fieldRow("Resolution", basicInputs.mq_resolution, "mq_resolution"),
      fieldRow("Unit of resolution", controls.resolution_unit, "mq_resolution_unit"),
      fieldRow("Label", basicInputs.mq_label, "mq_label"),
      h(
        "button",
        { type: "button", class: "primary add-mq", onClick: () => void submitMeasuredQuantity() },
        "Add measured quantity",
      ),
    );
    panel.append(itemTable(rows, "No measured quantities captured yet."), form);
  }

  async function submitMeasuredQuantity(): Promise<void> {
    const value = (name: string) => (basicInputs[`mq_${name}`] as HTMLInputElement | HTMLSelectElement)?.value ?? "";
    const numeric = (name: string) => (value(name) === "" ? null : Number(value(name)));
    await controller.addMeasuredQuantity({
      compartment: value("compartment") || null,
      sampling_media: value("sampling_media") || null,
      quantity: value("quantity") || null,
      unit: value("unit") || null,
      range_min: numeric("range_min"),
      range_max: numeric("range_max"),
      accuracy: numeric("accuracy"),
      accuracy_unit: value("accuracy_unit") || null,
      resolution: numeric("resolution"),
      resolution_unit: value("resolution_unit") || null,
      label: value("label"),
    });
  }

  async function renderParameters(): Promise<void> {
    clear(panel);
    const rows = (current?.attributes.parameters ?? []).map((p) =>
      h(
        "li",
        { dataset: { id: p.id ?? "" } },
        `${p.label}: ${p.value_actions.map((v) => `${v.value} @ ${v.timestamp}`).join(", ") || "(no values)"}`,
      ),
    );
    const label = h("input", { name: "parameter_label", placeholder: "Parameter label" });
    const unitWrap = await vocabSelect("parameter_unit", "unit", null);
    panel.append(
      itemTable(rows, "No parameters defined."),
      h(
        "div",
        { class: "add-row" },
        label,
        unitWrap,
        h(
          "button",
          {
            type: "button",
            onClick: () =>
              void controller.addParameter(label.value, (basicInputs.parameter_unit as HTMLSelectElement).value || null),
          },
          "Add parameter",
        ),
      ),
    );
  }

  async function renderCustomFields(): Promise<void> {
    clear(panel);
    const rows = (current?.attributes.custom_fields ?? []).map((cf) => h("li", {}, `${cf.key}: ${cf.value}`));
    const key = h("input", { name: "custom_key", placeholder: "Key" });
    const value = h("input", { name: "custom_value", placeholder: "Value" });
    panel.append(
      itemTable(rows, "No custom fields."),
      h(
        "div",
        { class: "add-row" },
        key,
        value,
        h("button", { type: "button", onClick: () => void controller.addCustomField(key.value, value.value) }, "Add"),
      ),
    );
  }

  async function renderAttachments(): Promise<void> {
    clear(panel);
    const rows = (current?.attributes.attachments ?? []).map((a) =>
      h(
        "li",
        { dataset: { id: a.id ?? "" } },
        `${a.label} [${a.origin}] ${a.origin === "url" ? a.url ?? "" : a.blob_ref ?? ""}` +
          (a.is_preview_image ? " (preview image)" : ""),
      ),
    );
    const origin = h("select", { name: "attachment_origin" }, option("url", "URL"), option("file", "File"));
    const label = h("input", { name: "attachment_label", placeholder: "Label" });
    const url = h("input", { name: "attachment_url", placeholder: "https://..." });
    const file = h("input", { name: "attachment_file", type: "file" });
    const preview = h("input", { name: "attachment_preview", type: "checkbox" });
    origin.addEventListener("change", () => {
      url.hidden = origin.value !== "url";
      file.hidden = origin.value !== "file";
    });
    file.hidden = true;
    panel.append(
      itemTable(rows, "No attachments."),
      h(
        "div",
        { class: "add-row attachment-form" },
        origin,
        label,
        url,
        file,
        h("label", { class: "preview-flag" }, preview, "Show as preview image"),
        h(
          "button",
          {
            type: "button",
            onClick: () => {
              if (origin.value === "url") {
                void controller.addUrlAttachment(label.value, url.value, undefined, preview.checked);
              } else {
                const chosen = (file as HTMLInputElement).files?.[0];
                if (chosen) void controller.uploadFileAttachment(chosen, label.value, preview.checked);
              }
            },
          },
          "Add attachment",
        ),
      ),
    );
  }

  async function renderActions(): Promise<void> {
    clear(panel);
    const kinds = await session.terms("action_type");
    const kindNames = new Map(kinds.map((k) => [k.id, k.term]));
    const rows = (current?.attributes.actions ?? []).map((a) =>
      h("li", {}, `${kindNames.get(String(a.kind)) ?? a.kind} @ ${JSON.stringify(a.when)}: ${a.description}`),
    );
    const kindWrap = await vocabSelect("action_kind", "action_type", null);
    const when = h("input", { name: "action_when", placeholder: "2020-06-01T00:00:00Z" });
    const description = h("input", { name: "action_description", placeholder: "Description" });
    panel.append(
      itemTable(rows, "No recorded actions."),
      h(
        "div",
        { class: "add-row" },
        kindWrap,
        when,
        description,
        h(
          "button",
          {
            type: "button",
            onClick: () =>
              void controller.addAction(
                (basicInputs.action_kind as HTMLSelectElement).value,
                when.value,
                description.value,
              ),
          },
          "Add action",
        ),
      ),
    );
  }

  const renderers: Record<TabName, () => Promise<void>> = {
    "Basic Data": renderBasic,
    Contacts: renderContacts,
    "Measured Quantities": renderMeasuredQuantities,
    Parameters: renderParameters,
    "Custom Fields": renderCustomFields,
    Attachments: renderAttachments,
    Actions: renderActions,
  };

  function renderTabBar(): void {
    clear(tabBar);
    for (const name of TABS) {
      tabBar.append(
        h(
          "button",
          {
            class: name === active ? "tab active" : "tab",
            role: "tab",
            dataset: { tab: name },
            onClick: () => controller.selectTab(name),
          },
          name,
        ),
      );
    }
  }

  async function rerender(): Promise<void> {
    renderTabBar();
    await renderers[active]();
  }

  async function refresh(): Promise<void> {
    if (currentId) current = await client.get<DeviceAttributes>("device", currentId);
    await rerender();
  }

  async function applyWrite(action: () => Promise<unknown>): Promise<SaveOutcome> {
    fieldErrors.clear();
    try {
      await action();
      await refresh();
      return { ok: true, conflict: false, fieldErrors: new Map(), device: current ?? undefined };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && err.code === "version_conflict") {
        conflictDialog.hidden = false;
        return { ok: false, conflict: true, fieldErrors: new Map() };
      }
      if (err instanceof ApiError && err.status === 422) {
        for (const [field, message] of err.fieldErrors()) fieldErrors.set(field, message);
        await rerender();
        return { ok: false, conflict: false, fieldErrors: new Map(fieldErrors) };
      }
      throw err;
    }
  }

  const controller: DeviceEditor = {
    element,
    get deviceId() {
      return currentId;
    },
    get version() {
      return current?.attributes.version ?? null;
    },
    get conflictDialogVisible() {
      return !conflictDialog.hidden;
    },
    fieldError(name: string) {
      return fieldErrors.get(name) ?? null;
    },
    async selectTab(name) {
      active = name;
      await rerender();
    },
    activeTab() {
      return active;
    },
    setBasic(fields) {
      for (const [name, value] of Object.entries(fields)) {
        const input = basicInputs[name];
        if (!input) throw new Error(`no basic field ${name}`);
        input.value = value;
      }
    },
    async save() {
      fieldErrors.clear();
      const shortName = (basicInputs.short_name as HTMLInputElement)?.value.trim() ?? "";
      if (!shortName) {
        // client-side UX check only; the service enforces the same rule
        fieldErrors.set("short_name", "Short name is required.");
        await rerender();
        return { ok: false, conflict: false, fieldErrors: new Map(fieldErrors) };
      }
      const attributes: Record<string, unknown> = {
        short_name: shortName,
        description: (basicInputs.description as HTMLInputElement).value,
        device_type: (basicInputs.device_type as HTMLSelectElement).value || null,
        manufacturer: (basicInputs.manufacturer as HTMLSelectElement).value || null,
        model: (basicInputs.model as HTMLInputElement).value,
        serial_number: (basicInputs.serial_number as HTMLInputElement).value,
        inventory_number: (basicInputs.inventory_number as HTMLInputElement).value,
        urn: (basicInputs.urn as HTMLInputElement).value,
        visibility: (basicInputs.visibility as HTMLSelectElement).value,
        owner_group: (basicInputs.owner_group as HTMLSelectElement).value,
      };
      return applyWrite(async () => {
        if (currentId === null) {
          const created = await client.create<DeviceAttributes>("device", attributes);
          currentId = created.id;
        } else {
          await client.patch("device", currentId, current?.attributes.version ?? 0, attributes);
        }
      });
    },
    async reload() {
      conflictDialog.hidden = true;
      await refresh();
    },
    async addMeasuredQuantity(fields) {
      if (!currentId) throw new Error("save the device first");
      try {
        const created = await client.addItem("device", currentId, "measured-quantities", "measured-quantity", fields);
        await refresh();
        return created;
      } catch (err) {
        if (err instanceof ApiError && err.status === 422) {
          for (const [field, message] of err.fieldErrors()) fieldErrors.set(`mq_${field}`, message);
          await rerender();
          return err;
        }
        throw err;
      }
    },
    async addContactRole(contactId, roleTermId) {
      if (!currentId || !current) throw new Error("save the device first");
      const contacts = [...current.attributes.contacts, { contact: contactId, role: roleTermId }];
      return applyWrite(() =>
        client.patch("device", currentId!, current!.attributes.version, { contacts }),
      );
    },
    async addParameter(label, unitTermId) {
      if (!currentId) throw new Error("save the device first");
      const created = await client.addItem("device", currentId, "parameters", "parameter", {
        label,
        unit: unitTermId,
      });
      await refresh();
      return created;
    },
    async addParameterValue(parameterId, timestamp, value) {
      if (!currentId) throw new Error("save the device first");
      const updated = await client.addParameterValue("device", currentId, parameterId, { timestamp, value });
      await refresh();
      return updated;
    },
    async addCustomField(key, value) {
      if (!currentId || !current) throw new Error("save the device first");
      const custom_fields = [...current.attributes.custom_fields, { key, value }];
      return applyWrite(() =>
        client.patch("device", currentId!, current!.attributes.version, { custom_fields }),
      );
    },
    async addUrlAttachment(label, url, mediaType, preview = false) {
      if (!currentId) throw new Error("save the device first");
      const created = await client.addItem("device", currentId, "attachments", "attachment", {
        label,
        origin: "url",
        url,
        media_type: mediaType ?? "",
        is_preview_image: preview,
      });
      await refresh();
      return created;
    },
    async uploadFileAttachment(file, label, preview = false) {
      if (!currentId) throw new Error("save the device first");
      const created = await client.uploadAttachment("device", currentId, file, label, preview);
      await refresh();
      return created;
    },
    async addAction(kindTermId, whenIso, description) {
      if (!currentId) throw new Error("save the device first");
      try {
        const created = await client.addItem("device", currentId, "actions", "action", {
          kind: kindTermId,
          when: whenIso,
          description,
        });
        await refresh();
        return created;
      } catch (err) {
        if (err instanceof ApiError && err.status === 422) return err;
        throw err;
      }
    },
    openProposeDialog(category, select) {
      const dialog = proposeTermDialog(session, category, (term: TermOption | null) => {
        if (term) {
          select.append(option(term.id, `${term.term} (pending curation)`, true));
        }
      });
      element.append(dialog.element);
      return dialog;
    },
  };

  await refresh();
  return controller;
}
