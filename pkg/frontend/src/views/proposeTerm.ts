// Term-proposal dialog, opened from the plus icon next to any
// vocabulary-backed selector.  Submitting stores the proposal and makes
// the new term immediately selectable, flagged as pending curation.

import { ApiError } from "../api/client";
import type { Session, TermOption } from "../state/session";
import { clear, h, option } from "./dom";

export const TERM_CATEGORIES = [
  "equipment_type",
  "manufacturer",
  "contact_role",
  "unit",
  "measured_quantity",
  "compartment",
  "sampling_media",
  "action_type",
  "platform_type",
  "site_usage",
];

export interface ProposeTermDialog {
  element: HTMLElement;
  setField(name: string, value: string): void;
  submit(): Promise<TermOption | null>;
  cancel(): void;
  readonly errorText: string | null;
  readonly open: boolean;
}

export function proposeTermDialog(
  session: Session,
  category: string,
  onDone: (term: TermOption | null) => void,
): ProposeTermDialog {
  let isOpen = true;
  const error = h("p", { class: "form-error", hidden: true });
  const fields: Record<string, HTMLInputElement | HTMLSelectElement | HTMLTextAreaElement> = {
    term: h("input", { name: "term", required: true }),
    definition: h("textarea", { name: "definition" }),
    provenance: h("input", { name: "provenance" }),
    provenance_uri: h("input", { name: "provenance_uri", type: "url" }),
    category: h("select", { name: "category" }),
    note_for_curator: h("textarea", { name: "note_for_curator" }),
    global_provenance: h("input", { name: "global_provenance" }),
  };
  const categorySelect = fields.category as HTMLSelectElement;
  for (const value of TERM_CATEGORIES) {
    categorySelect.append(option(value, value.replace(/_/g, " "), value === category));
  }

  function row(label: string, control: HTMLElement): HTMLElement {
    return h("label", { class: "field" }, h("span", {}, label), control);
  }

  const element = h(
    "div",
    { class: "dialog propose-term", role: "dialog", "aria-label": "Propose a new term" },
    h("h3", {}, "Propose a new term"),
    error,
    row("Term", fields.term),
    row("Definition", fields.definition),
    row("Provenance", fields.provenance),
    row("Provenance URI", fields.provenance_uri),
    row("Category", fields.category),
    row("Note for the curator", fields.note_for_curator),
    row("Global provenance", fields.global_provenance),
    h(
      "div",
      { class: "dialog-actions" },
      h("button", { class: "primary", onClick: () => void controller.submit() }, "Submit proposal"),
      h("button", { onClick: () => controller.cancel() }, "Cancel"),
    ),
  );

  function close(result: TermOption | null): void {
    if (!isOpen) return;
    isOpen = false;
    element.remove();
    onDone(result);
  }

  const controller: ProposeTermDialog = {
    element,
    get errorText() {
      return error.hidden ? null : error.textContent;
    },
    get open() {
      return isOpen;
    },
    setField(name, value) {
      const field = fields[name];
      if (!field) throw new Error(`no proposal field ${name}`);
      field.value = value;
    },
    async submit() {
      error.hidden = true;
      const term = (fields.term as HTMLInputElement).value.trim();
      if (!term) {
        error.textContent = "Term is required.";
        error.hidden = false;
        return null;
      }
      try {
        const { term: resource } = await session.client.proposeTerm({
          category: categorySelect.value,
          term,
          definition: fields.definition.value,
          provenance: fields.provenance.value,
          provenance_uri: (fields.provenance_uri as HTMLInputElement).value || null,
          global_provenance: fields.global_provenance.value || null,
          note_for_curator: fields.note_for_curator.value,
        });
        const optionAdded = session.noteProposedTerm(resource);
        close(optionAdded);
        return optionAdded;
      } catch (err) {
        if (err instanceof ApiError) {
          error.textContent =
            err.code === "duplicate_term" ? `A term with this name already exists: ${err.message}` : err.message;
          error.hidden = false;
          return null;
        }
        throw err;
      }
    },
    cancel() {
      // no API call on cancel, the dialog simply closes
      close(null);
    },
  };
  return controller;
}
