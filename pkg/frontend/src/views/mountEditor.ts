// Interactive mount timeline for one configuration: a time control
// querying the state endpoint, the reconstructed tree at that instant,
// and forms to add or end mounts.  Temporal conflicts reported by the
// service surface in a banner naming the conflicting configuration.

import { ApiError } from "../api/client";
import type { ConfigurationState, SearchHit, StateNode } from "../api/types";
import type { Session } from "../state/session";
import { clear, h, option } from "./dom";

export interface MountDraft {
  childKind: "device" | "platform";
  childId: string;
  parentId: string | null; // platform id or null for the configuration root
  begin: string;
  end: string | null;
  offsetX?: number;
  offsetY?: number;
  offsetZ?: number;
  description?: string;
}

export interface MountOutcome {
  ok: boolean;
  mountId?: string;
  conflict?: { message: string; configurationId?: string; configurationLabel?: string };
  validation?: string;
}

export interface MountEditor {
  element: HTMLElement;
  readonly instant: string;
  setInstant(iso: string): Promise<void>;
  state(): ConfigurationState | null;
  treeNames(): string[];
  /** search candidates, dropping entities already mounted somewhere in range */
  pickCandidates(query: string, kind: "device" | "platform", begin: string, end: string | null): Promise<SearchHit[]>;
  validateDraft(draft: MountDraft): string | null;
  addMount(draft: MountDraft): Promise<MountOutcome>;
  endMount(mountId: string, endIso: string, description?: string): Promise<MountOutcome>;
  conflictBanner(): string | null;
}

export async function mountEditor(session: Session, configurationId: string): Promise<MountEditor> {
  const client = session.client;
  let current: ConfigurationState | null = null;
  let instant = new Date().toISOString().replace(/\.\d+Z$/, "Z");

  const banner = h("div", { class: "conflict-banner", role: "alert", hidden: true });
  const timeInput = h("input", {
    class: "time-input",
    name: "at",
    value: instant,
  });
  const slider = h("input", { class: "time-slider", type: "range", min: "0", max: "1000", value: "1000" });
  const treeBox = h("div", { class: "mount-tree" });
  const element = h(
    "section",
    { class: "mount-editor" },
    banner,
    h(
      "div",
      { class: "time-controls" },
      h("label", {}, "State at: ", timeInput),
      slider,
      h("button", { type: "button", onClick: () => void controller.setInstant(timeInput.value) }, "Show"),
    ),
    treeBox,
  );

  // the slider spans [first mount begin - 1 day, now + 1 day]
  let sliderStart = Date.now() - 365 * 86400_000;
  let sliderEnd = Date.now() + 86400_000;

  function sliderToIso(value: number): string {
    const at = new Date(sliderStart + (value / 1000) * (sliderEnd - sliderStart));
    return at.toISOString().replace(/\.\d+Z$/, "Z");
  }

  slider.addEventListener("change", () => {
    void controller.setInstant(sliderToIso(Number(slider.value)));
  });

  function renderNode(node: StateNode): HTMLElement {
    const position =
      node.position.variant === "absolute"
        ? `@ ${node.position.latitude}, ${node.position.longitude}, ${node.position.height} m ` +
          `+ (${node.position.offset.x}, ${node.position.offset.y}, ${node.position.offset.z})`
        : node.position.variant;
    const item = h(
      "li",
      { class: "mount-node", dataset: { entity: node.entity.id, mount: node.mount_id } },
      h("span", { class: "node-label" }, `${node.entity.kind} ${node.entity.name} ${position}`),
      h(
        "button",
        {
          type: "button",
          class: "end-mount",
          onClick: () => void controller.endMount(node.mount_id, timeInput.value),
        },
        "End mount here",
      ),
    );
    if (node.children.length) {
      const children = h("ul", {});
      node.children.forEach((child) => children.append(renderNode(child)));
      item.append(children);
    }
    return item;
  }

  async function refresh(): Promise<void> {
    current = await client.configurationState(configurationId, instant);
    timeInput.value = instant;
    clear(treeBox);
    if (!current.tree.length) {
      treeBox.append(h("p", { class: "empty" }, "Nothing mounted at this instant (root only)."));
      return;
    }
    const root = h("ul", { class: "tree-root" });
    current.tree.forEach((node) => root.append(renderNode(node)));
    treeBox.append(root);
  }

  async function initSliderRange(): Promise<void> {
    const mounts = await client.listMounts(configurationId);
    const begins = mounts.map((mt) => Date.parse(mt.attributes.interval.begin));
    if (begins.length) sliderStart = Math.min(...begins) - 86400_000;
  }

  function collect(nodes: StateNode[], out: string[]): void {
    for (const node of nodes) {
      out.push(node.entity.name);
      collect(node.children, out);
    }
  }

  const controller: MountEditor = {
    element,
    get instant() {
      return instant;
    },
    async setInstant(iso: string) {
      instant = iso;
      await refresh();
    },
    state() {
      return current;
    },
    treeNames() {
      const names: string[] = [];
      if (current) collect(current.tree, names);
      return names;
    },
    async pickCandidates(query, kind, begin, end) {
      const hits = await client.search(query, kind);
      // visible configurations embed their mount actions; filter out
      // candidates that are already mounted somewhere in the range
      const configurations = await client.list<{ mount_actions: { child: { id: string }; interval: { begin: string; end: string | null } }[] }>(
        "configuration",
        { "page[size]": "200" },
      );
      const beginMs = Date.parse(begin);
      const endMs = end === null ? Number.POSITIVE_INFINITY : Date.parse(end);
      const taken = new Set<string>();
      for (const config of configurations.data) {
        for (const mount of config.attributes.mount_actions ?? []) {
          const mountBegin = Date.parse(mount.interval.begin);
          const mountEnd = mount.interval.end === null ? Number.POSITIVE_INFINITY : Date.parse(mount.interval.end);
          if (Math.max(beginMs, mountBegin) < Math.min(endMs, mountEnd)) {
            taken.add(mount.child.id);
          }
        }
      }
      return hits.filter((hit) => !taken.has(hit.id));
    },
    validateDraft(draft) {
      if (!draft.childId) return "Pick a device or platform to mount.";
      if (Number.isNaN(Date.parse(draft.begin))) return "Begin instant is not a valid timestamp.";
      if (draft.end !== null && Number.isNaN(Date.parse(draft.end))) return "End instant is not a valid timestamp.";
      if (draft.end !== null && Date.parse(draft.end) <= Date.parse(draft.begin)) {
        return "End must be after begin.";
      }
      return null;
    },
    async addMount(draft) {
      banner.hidden = true;
      const validation = controller.validateDraft(draft);
      if (validation) {
        banner.textContent = validation;
        banner.hidden = false;
        return { ok: false, validation };
      }
      try {
        const mount = await client.addMount(configurationId, {
          child: { kind: draft.childKind, id: draft.childId },
          parent: draft.parentId === null ? null : { kind: "platform", id: draft.parentId },
          interval: { begin: draft.begin, end: draft.end },
          offset_x: draft.offsetX ?? 0,
          offset_y: draft.offsetY ?? 0,
          offset_z: draft.offsetZ ?? 0,
          begin_description: draft.description ?? "",
        });
        await refresh();
        return { ok: true, mountId: mount.id };
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          const meta = err.meta as { configuration_id?: string; configuration_label?: string };
          const label = meta.configuration_label ?? meta.configuration_id ?? "another configuration";
          banner.textContent = `Mount conflict: already mounted in "${label}" during this range (${err.message})`;
          banner.hidden = false;
          return {
            ok: false,
            conflict: {
              message: err.message,
              configurationId: meta.configuration_id,
              configurationLabel: meta.configuration_label,
            },
          };
        }
        throw err;
      }
    },
    async endMount(mountId, endIso, description) {
      banner.hidden = true;
      const mounts = await client.listMounts(configurationId);
      const target = mounts.find((mt) => mt.id === mountId);
      if (!target) throw new Error(`no mount ${mountId}`);
      if (Date.parse(endIso) <= Date.parse(target.attributes.interval.begin)) {
        const validation = "End must be after begin.";
        banner.textContent = validation;
        banner.hidden = false;
        return { ok: false, validation };
      }
      try {
        await client.patchMount(configurationId, mountId, {
          interval: { begin: target.attributes.interval.begin, end: endIso },
          end_description: description ?? "",
        });
        await refresh();
        return { ok: true, mountId };
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          banner.textContent = `Cannot end this mount: ${err.message}`;
          banner.hidden = false;
          return { ok: false, conflict: { message: err.message } };
        }
        throw err;
      }
    },
    conflictBanner() {
      return banner.hidden ? null : banner.textContent;
    },
  };

  await initSliderRange();
  await refresh();
  return controller;
}
