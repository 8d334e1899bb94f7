import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api/client";
import { FakeBackend } from "./fakeBackend";

describe("ApiClient", () => {
  it("wraps resources in data envelopes and attaches the bearer token", async () => {
    const backend = new FakeBackend();
    backend.on("POST", "/devices", () => ({
      status: 201,
      body: { data: { type: "device", id: "d1", attributes: { short_name: "X", version: 1 } } },
    }));
    const client = new ApiClient("http://registry.test", backend.fetch);
    client.token = "tok-123";
    const created = await client.create("device", { short_name: "X" });
    expect(created.id).toBe("d1");
    expect(backend.calls[0].body).toEqual({ data: { type: "device", attributes: { short_name: "X" } } });
  });

  it("patch carries the expected version inside attributes", async () => {
    const backend = new FakeBackend();
    backend.on("PATCH", "/devices/d1", () => ({
      status: 200,
      body: { data: { type: "device", id: "d1", attributes: { version: 3 } } },
    }));
    const client = new ApiClient("http://registry.test", backend.fetch);
    await client.patch("device", "d1", 2, { description: "x" });
    expect(backend.calls[0].body).toEqual({
      data: { type: "device", id: "d1", attributes: { description: "x", version: 2 } },
    });
  });

  it("maps error documents onto ApiError with field pointers", async () => {
    const backend = new FakeBackend();
    backend.on("POST", "/devices", () => ({
      status: 422,
      body: {
        errors: [
          {
            status: "422",
            code: "validation_failed",
            detail: "short_name must be non-empty",
            source: { pointer: "/data/attributes/short_name" },
          },
        ],
      },
    }));
    const client = new ApiClient("http://registry.test", backend.fetch);
    const failure = await client.create("device", { short_name: "" }).catch((err) => err);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(422);
    expect(failure.code).toBe("validation_failed");
    expect(failure.fieldErrors().get("short_name")).toMatch(/non-empty/);
  });

  it("exposes conflict meta for mount conflicts", async () => {
    const backend = new FakeBackend();
    backend.on("POST", "/configurations/c1/mounts", () => ({
      status: 409,
      body: {
        errors: [
          {
            status: "409",
            code: "mount_conflict",
            detail: "device already mounted",
            meta: { configuration_id: "c9", configuration_label: "Other station" },
          },
        ],
      },
    }));
    const client = new ApiClient("http://registry.test", backend.fetch);
    const failure = await client.addMount("c1", {}).catch((err) => err);
    expect(failure.meta.configuration_label).toBe("Other station");
  });

  it("search flattens hits with scores and links", async () => {
    const backend = new FakeBackend();
    backend.on("GET", "/search", () => ({
      status: 200,
      body: {
        data: [
          {
            type: "device",
            id: "d1",
            attributes: { name: "ClimaVUE50-001" },
            links: { self: "http://registry.test/devices/d1" },
            meta: { score: 6 },
          },
        ],
        meta: { total: 1 },
      },
    }));
    const client = new ApiClient("http://registry.test", backend.fetch);
    const hits = await client.search("Clima");
    expect(hits).toEqual([
      { type: "device", id: "d1", name: "ClimaVUE50-001", score: 6, url: "http://registry.test/devices/d1" },
    ]);
  });
});
