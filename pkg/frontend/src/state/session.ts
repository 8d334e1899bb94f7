// Session state: who is logged in, which group is active, and cached
// vocabulary lists per category.  Caches are invalidated when a proposal
// is accepted during the session and refreshed on navigation when stale.

import type { ApiClient } from "../api/client";
import type { PrincipalSummary, ResourceObject, TermAttributes } from "../api/types";

export interface TermOption {
  id: string;
  term: string;
  status: TermAttributes["status"];
  definition: string;
  /** true while the term awaits curation; selectors flag these entries */
  pending: boolean;
}

const CACHE_TTL_MS = 30_000;

interface CacheSlot {
  options: TermOption[];
  fetchedAt: number;
}

export class Session {
  readonly client: ApiClient;
  principal: PrincipalSummary | null = null;
  activeGroup: string | null = null;
  private vocabulary = new Map<string, CacheSlot>();

  constructor(client: ApiClient) {
    this.client = client;
  }

  get authenticated(): boolean {
    return this.principal !== null && this.principal.kind !== "anonymous";
  }

  get isCurator(): boolean {
    const roles = this.principal?.roles ?? [];
    return roles.includes("curator") || roles.includes("admin");
  }

  async login(username: string, password: string): Promise<void> {
    await this.client.login(username, password);
    await this.refreshPrincipal();
  }

  async refreshPrincipal(): Promise<void> {
    this.principal = await this.client.me();
    const groups = this.principal.groups;
    if (this.activeGroup === null || !groups.includes(this.activeGroup)) {
      this.activeGroup = groups[0] ?? null;
    }
  }

  logout(): void {
    this.client.token = null;
    this.principal = null;
    this.activeGroup = null;
    this.vocabulary.clear();
  }

  /** Accepted terms plus pending proposals, cached per category. */
  async terms(category: string): Promise<TermOption[]> {
    const slot = this.vocabulary.get(category);
    if (slot) return slot.options;
    const resources = await this.client.listTerms(category);
    const options = resources
      .filter((t) => t.attributes.status === "accepted" || t.attributes.status === "proposed")
      .map((t) => toOption(t))
      .sort((a, b) => (a.term < b.term ? -1 : a.term > b.term ? 1 : 0));
    this.vocabulary.set(category, { options, fetchedAt: Date.now() });
    return options;
  }

  invalidateVocabulary(category?: string): void {
    if (category === undefined) this.vocabulary.clear();
    else this.vocabulary.delete(category);
  }

  /** Optimistically add a just-proposed term so it is selectable at once. */
  noteProposedTerm(term: ResourceObject<TermAttributes>): TermOption {
    const option = toOption(term);
    const slot = this.vocabulary.get(term.attributes.category);
    if (slot && !slot.options.some((o) => o.id === option.id)) {
      slot.options.push(option);
      slot.options.sort((a, b) => (a.term < b.term ? -1 : a.term > b.term ? 1 : 0));
    }
    return option;
  }

  /** Called by accepted/rejected decisions observed during the session. */
  noteCurationDecision(category: string): void {
    this.invalidateVocabulary(category);
  }

  /** Route changes drop caches older than the TTL (refresh on navigation). */
  noteNavigation(now: number = Date.now()): void {
    for (const [category, slot] of this.vocabulary) {
      if (now - slot.fetchedAt > CACHE_TTL_MS) this.vocabulary.delete(category);
    }
  }

  cachedCategories(): string[] {
    return [...this.vocabulary.keys()];
  }
}

function toOption(term: ResourceObject<TermAttributes>): TermOption {
  return {
    id: term.id,
    term: term.attributes.term,
    status: term.attributes.status,
    definition: term.attributes.definition,
    pending: term.attributes.status === "proposed",
  };
}
