import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api/client";
import { Session } from "../src/state/session";
import { FakeBackend, termResource } from "./fakeBackend";

function sessionWith(backend: FakeBackend): Session {
  return new Session(new ApiClient("http://registry.test", backend.fetch));
}

describe("Session vocabulary caches", () => {
  it("caches term lists per category and filters out rejected terms", async () => {
    const backend = new FakeBackend();
    backend.on("GET", "/cv/terms", () => ({
      status: 200,
      body: {
        data: [
          termResource("t1", "unit", "°C"),
          termResource("t2", "unit", "mm", "proposed"),
          termResource("t3", "unit", "old", "rejected"),
        ],
        meta: { total: 3, page: 1, size: 500 },
      },
    }));
    const session = sessionWith(backend);
    const first = await session.terms("unit");
    expect(first.map((t) => t.term)).toEqual(["mm", "°C"]);
    expect(first.find((t) => t.term === "mm")?.pending).toBe(true);
    await session.terms("unit");
    expect(backend.callsTo("GET", "/cv/terms")).toBe(1); // cached
  });

  it("invalidates the category cache when a curation decision lands", async () => {
    const backend = new FakeBackend();
    backend.on("GET", "/cv/terms", () => ({
      status: 200,
      body: { data: [termResource("t1", "unit", "°C")], meta: { total: 1, page: 1, size: 500 } },
    }));
    const session = sessionWith(backend);
    await session.terms("unit");
    session.noteCurationDecision("unit");
    await session.terms("unit");
    expect(backend.callsTo("GET", "/cv/terms")).toBe(2);
  });

  it("keeps fresh caches on navigation but drops stale ones", async () => {
    const backend = new FakeBackend();
    backend.on("GET", "/cv/terms", () => ({
      status: 200,
      body: { data: [termResource("t1", "unit", "°C")], meta: { total: 1, page: 1, size: 500 } },
    }));
    const session = sessionWith(backend);
    await session.terms("unit");
    session.noteNavigation(Date.now());
    expect(session.cachedCategories()).toEqual(["unit"]);
    session.noteNavigation(Date.now() + 60_000);
    expect(session.cachedCategories()).toEqual([]);
  });

  it("makes a just-proposed term selectable immediately, flagged pending", async () => {
    const backend = new FakeBackend();
    backend.on("GET", "/cv/terms", () => ({
      status: 200,
      body: { data: [termResource("t1", "measured_quantity", "Air temperature")], meta: { total: 1, page: 1, size: 500 } },
    }));
    const session = sessionWith(backend);
    await session.terms("measured_quantity");
    const added = session.noteProposedTerm(
      termResource("t9", "measured_quantity", "Sap flow", "proposed") as never,
    );
    expect(added.pending).toBe(true);
    const options = await session.terms("measured_quantity");
    expect(options.map((t) => t.term)).toEqual(["Air temperature", "Sap flow"]);
    expect(backend.callsTo("GET", "/cv/terms")).toBe(1); // no refetch needed
  });
});
