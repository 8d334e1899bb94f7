// Typed fetch client for the registry's resource-document API.
//
// Every state mutation the console performs goes through this module;
// there are no hidden channels past the documented endpoints.

import type {
  CollectionDocument,
  ConfigurationState,
  EntityKind,
  ErrorEntry,
  MountAttributes,
  PrincipalSummary,
  ResourceObject,
  SearchHit,
  SingleDocument,
  TermAttributes,
} from "./types";
import { PLURALS } from "./types";

const JSONAPI = "application/vnd.api+json";

export class ApiError extends Error {
  readonly status: number;
  readonly errors: ErrorEntry[];

  constructor(status: number, errors: ErrorEntry[]) {
    super(errors[0]?.detail ?? `request failed with status ${status}`);
    this.status = status;
    this.errors = errors;
  }

  get code(): string {
    return this.errors[0]?.code ?? "error";
  }

  get meta(): Record<string, unknown> {
    return this.errors[0]?.meta ?? {};
  }

  /** field path -> message, derived from JSON pointers on 422 responses */
  fieldErrors(): Map<string, string> {
    const byField = new Map<string, string>();
    for (const entry of this.errors) {
      const pointer = entry.source?.pointer ?? "";
      const match = pointer.match(/^\/data\/attributes\/(.+)$/);
      if (match) {
        const field = match[1].split("/")[0];
        if (!byField.has(field)) byField.set(field, entry.detail);
      }
    }
    return byField;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  baseUrl: string;
  token: string | null = null;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const headers: Record<string, string> = { Accept: JSONAPI, ...extra };
    if (this.token) headers.Authorization = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: this.headers() };
    if (body !== undefined) {
      (init.headers as Record<string, string>)["Content-Type"] = JSONAPI;
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    return this.decode<T>(response);
  }

  private async decode<T>(response: Response): Promise<T> {
    if (response.status === 204) return undefined as T;
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!response.ok) {
      const errors: ErrorEntry[] = parsed.errors ?? [
        { status: String(response.status), code: "http_error", detail: text || response.statusText },
      ];
      throw new ApiError(response.status, errors);
    }
    return parsed as T;
  }

  // -- auth --------------------------------------------------------------

  async login(username: string, password: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/auth/token`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ username, password }),
    });
    const doc = await this.decode<{ token: string }>(response);
    this.token = doc.token;
    return doc.token;
  }

  async me(): Promise<PrincipalSummary> {
    const doc = await this.request<SingleDocument<PrincipalSummary>>("GET", "/auth/me");
    return doc.data.attributes;
  }

  async health(): Promise<{ status: string; counts: Record<string, number> }> {
    const response = await this.fetchImpl(`${this.baseUrl}/healthz`, { headers: this.headers() });
    return this.decode(response);
  }

  // -- entities ------------------------------------------------------------

  async list<A = Record<string, unknown>>(
    kind: EntityKind,
    params: Record<string, string> = {},
  ): Promise<CollectionDocument<A>> {
    const query = new URLSearchParams(params).toString();
    return this.request("GET", `/${PLURALS[kind]}${query ? `?${query}` : ""}`);
  }

  async get<A = Record<string, unknown>>(kind: EntityKind, id: string): Promise<ResourceObject<A>> {
    const doc = await this.request<SingleDocument<A>>("GET", `/${PLURALS[kind]}/${id}`);
    return doc.data;
  }

  async create<A = Record<string, unknown>>(
    kind: EntityKind,
    attributes: Record<string, unknown>,
  ): Promise<ResourceObject<A>> {
    const doc = await this.request<SingleDocument<A>>("POST", `/${PLURALS[kind]}`, {
      data: { type: kind, attributes },
    });
    return doc.data;
  }

  async patch<A = Record<string, unknown>>(
    kind: EntityKind,
    id: string,
    version: number,
    attributes: Record<string, unknown>,
  ): Promise<ResourceObject<A>> {
    const doc = await this.request<SingleDocument<A>>("PATCH", `/${PLURALS[kind]}/${id}`, {
      data: { type: kind, id, attributes: { ...attributes, version } },
    });
    return doc.data;
  }

  async archive(kind: EntityKind, id: string): Promise<void> {
    await this.request("DELETE", `/${PLURALS[kind]}/${id}`);
  }

  // -- embedded collections ---------------------------------------------------

  async addItem(
    kind: EntityKind,
    id: string,
    route: string,
    resourceType: string,
    attributes: Record<string, unknown>,
  ): Promise<ResourceObject> {
    const doc = await this.request<SingleDocument>("POST", `/${PLURALS[kind]}/${id}/${route}`, {
      data: { type: resourceType, attributes },
    });
    return doc.data;
  }

  async listItems(kind: EntityKind, id: string, route: string): Promise<ResourceObject[]> {
    const doc = await this.request<CollectionDocument>("GET", `/${PLURALS[kind]}/${id}/${route}`);
    return doc.data;
  }

  async deleteItem(kind: EntityKind, id: string, route: string, itemId: string): Promise<void> {
    await this.request("DELETE", `/${PLURALS[kind]}/${id}/${route}/${itemId}`);
  }

  async addParameterValue(
    kind: EntityKind,
    id: string,
    parameterId: string,
    value: { timestamp: string; value: string },
  ): Promise<ResourceObject> {
    const doc = await this.request<SingleDocument>(
      "POST",
      `/${PLURALS[kind]}/${id}/parameters/${parameterId}/values`,
      value,
    );
    return doc.data;
  }

  async uploadAttachment(
    kind: EntityKind,
    id: string,
    file: File | Blob,
    label: string,
    isPreview: boolean,
  ): Promise<ResourceObject> {
    const form = new FormData();
    form.append("file", file);
    form.append("label", label);
    form.append("is_preview_image", isPreview ? "true" : "false");
    const response = await this.fetchImpl(`${this.baseUrl}/${PLURALS[kind]}/${id}/attachments`, {
      method: "POST",
      headers: this.headers(),
      body: form,
    });
    const doc = await this.decode<SingleDocument>(response);
    return doc.data;
  }

  // -- mounts, locations, state ---------------------------------------------------

  async listMounts(configurationId: string): Promise<ResourceObject<MountAttributes>[]> {
    const doc = await this.request<CollectionDocument<MountAttributes>>(
      "GET",
      `/configurations/${configurationId}/mounts`,
    );
    return doc.data;
  }

  async addMount(
    configurationId: string,
    attributes: Record<string, unknown>,
  ): Promise<ResourceObject<MountAttributes>> {
    const doc = await this.request<SingleDocument<MountAttributes>>(
      "POST",
      `/configurations/${configurationId}/mounts`,
      { data: { type: "mount", attributes } },
    );
    return doc.data;
  }

  async patchMount(
    configurationId: string,
    mountId: string,
    attributes: Record<string, unknown>,
  ): Promise<ResourceObject<MountAttributes>> {
    const doc = await this.request<SingleDocument<MountAttributes>>(
      "PATCH",
      `/configurations/${configurationId}/mounts/${mountId}`,
      { data: { type: "mount", attributes } },
    );
    return doc.data;
  }

  async addLocation(configurationId: string, attributes: Record<string, unknown>): Promise<ResourceObject> {
    const doc = await this.request<SingleDocument>(
      "POST",
      `/configurations/${configurationId}/locations`,
      { data: { type: "location", attributes } },
    );
    return doc.data;
  }

  async configurationState(configurationId: string, atIso: string): Promise<ConfigurationState> {
    const doc = await this.request<SingleDocument<ConfigurationState>>(
      "GET",
      `/configurations/${configurationId}/state?at=${encodeURIComponent(atIso)}`,
    );
    return doc.data.attributes;
  }

  // -- vocabulary ---------------------------------------------------------------------

  async listTerms(
    category?: string,
    extra: Record<string, string> = {},
  ): Promise<ResourceObject<TermAttributes>[]> {
    const params = new URLSearchParams({ "page[size]": "500", ...extra });
    if (category) params.set("category", category);
    const doc = await this.request<CollectionDocument<TermAttributes>>("GET", `/cv/terms?${params}`);
    return doc.data;
  }

  async proposeTerm(attributes: Record<string, unknown>): Promise<{
    term: ResourceObject<TermAttributes>;
    ticketId: string;
  }> {
    const doc = await this.request<SingleDocument<TermAttributes>>("POST", "/cv/proposals", {
      data: { type: "vocabulary-term", attributes },
    });
    return { term: doc.data, ticketId: String(doc.meta?.ticket_id ?? "") };
  }

  async decideProposal(
    ticketId: string,
    decision: "accept" | "reject",
  ): Promise<ResourceObject<TermAttributes>> {
    const doc = await this.request<SingleDocument<TermAttributes>>(
      "POST",
      `/cv/proposals/${ticketId}/decision`,
      { decision },
    );
    return doc.data;
  }

  // -- search -----------------------------------------------------------------------------

  async search(query: string, kind?: string): Promise<SearchHit[]> {
    const params = new URLSearchParams({ q: query });
    if (kind) params.set("kind", kind);
    const doc = await this.request<CollectionDocument<{ name: string }>>("GET", `/search?${params}`);
    return doc.data.map((hit) => ({
      type: hit.type,
      id: hit.id,
      name: hit.attributes.name,
      score: Number((hit.meta as { score?: number } | undefined)?.score ?? 0),
      url: hit.links?.self ?? "",
    }));
  }
}
