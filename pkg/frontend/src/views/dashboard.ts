// Landing page: one tile per entity kind with live counts plus a global
// search box whose results deep-link into the editors.

import type { Session } from "../state/session";
import { clear, h } from "./dom";

const TILES: { kind: string; label: string; route: string }[] = [
  { kind: "device", label: "Devices", route: "#/devices" },
  { kind: "platform", label: "Platforms", route: "#/platforms" },
  { kind: "configuration", label: "Configurations", route: "#/configurations" },
  { kind: "site", label: "Sites", route: "#/sites" },
];

export interface Dashboard {
  element: HTMLElement;
  refresh(): Promise<void>;
  search(query: string): Promise<void>;
  resultLinks(): { name: string; href: string }[];
}

export async function dashboard(session: Session): Promise<Dashboard> {
  const tiles = h("div", { class: "tiles" });
  const results = h("ul", { class: "search-results" });
  const searchBox = h("input", {
    class: "global-search",
    placeholder: "Search devices, platforms, configurations, sites...",
    onKeydown: (event: KeyboardEvent) => {
      if (event.key === "Enter") void controller.search((event.target as HTMLInputElement).value);
    },
  });
  const offline = h("div", { class: "offline-banner", role: "alert", hidden: true }, "The registry API is unreachable.");
  const element = h("section", { class: "dashboard" }, offline, tiles, searchBox, results);

  const controller: Dashboard = {
    element,
    async refresh() {
      clear(tiles);
      try {
        const health = await session.client.health();
        offline.hidden = true;
        for (const tile of TILES) {
          tiles.append(
            h(
              "a",
              { class: "tile", href: tile.route, dataset: { kind: tile.kind } },
              h("span", { class: "count" }, String(health.counts[tile.kind] ?? 0)),
              h("span", { class: "label" }, tile.label),
            ),
          );
        }
      } catch {
        offline.hidden = false;
      }
    },
    async search(query: string) {
      clear(results);
      if (!query.trim()) return;
      const hits = await session.client.search(query);
      for (const hit of hits) {
        results.append(
          h(
            "li",
            {},
            h(
              "a",
              { href: `#/${hit.type}s/${hit.id}`, dataset: { id: hit.id } },
              `${hit.name} (${hit.type})`,
            ),
          ),
        );
      }
      if (!hits.length) results.append(h("li", { class: "empty" }, "No matches."));
    },
    resultLinks() {
      return Array.from(results.querySelectorAll("a")).map((a) => ({
        name: a.textContent ?? "",
        href: a.getAttribute("href") ?? "",
      }));
    },
  };

  await controller.refresh();
  return controller;
}
