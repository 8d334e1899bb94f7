// Resource-document shapes shared with the registry service.

export interface ResourceObject<A = Record<string, unknown>> {
  type: string;
  id: string;
  attributes: A;
  relationships?: Record<string, unknown>;
  links?: { self?: string };
  meta?: Record<string, unknown>;
}

export interface CollectionMeta {
  total: number;
  page: number;
  size: number;
  pages?: number;
  [key: string]: unknown;
}

export interface SingleDocument<A = Record<string, unknown>> {
  data: ResourceObject<A>;
  included?: ResourceObject[];
  meta?: Record<string, unknown>;
}

export interface CollectionDocument<A = Record<string, unknown>> {
  data: ResourceObject<A>[];
  meta: CollectionMeta;
  links?: Record<string, string>;
}

export interface ErrorEntry {
  status: string;
  code: string;
  detail: string;
  source?: { pointer?: string };
  meta?: Record<string, unknown>;
}

export type EntityKind = "device" | "platform" | "configuration" | "site" | "contact";

export const PLURALS: Record<EntityKind, string> = {
  device: "devices",
  platform: "platforms",
  configuration: "configurations",
  site: "sites",
  contact: "contacts",
};

export interface ContactRole {
  contact: string;
  role: string;
}

export interface DeviceAttributes {
  short_name: string;
  description: string;
  urn: string;
  pid: string | null;
  device_type: string | null;
  manufacturer: string | null;
  model: string;
  serial_number: string;
  inventory_number: string;
  visibility: "private" | "internal" | "public";
  owner_group: string;
  measured_quantities: MeasuredQuantity[];
  contacts: ContactRole[];
  parameters: ParameterAttributes[];
  custom_fields: { key: string; value: string }[];
  attachments: AttachmentAttributes[];
  actions: Record<string, unknown>[];
  version: number;
  created_at: string | null;
  updated_at: string | null;
  [key: string]: unknown;
}

export interface MeasuredQuantity {
  id?: string;
  compartment: string | null;
  sampling_media: string | null;
  quantity: string | null;
  unit: string | null;
  range_min: number | null;
  range_max: number | null;
  accuracy: number | null;
  accuracy_unit: string | null;
  resolution: number | null;
  resolution_unit: string | null;
  label: string;
}

export interface ParameterAttributes {
  id?: string;
  label: string;
  description: string;
  unit: string | null;
  value_actions: { timestamp: string; value: string; contact: string | null }[];
}

export interface AttachmentAttributes {
  id?: string;
  label: string;
  origin: "file" | "url";
  url: string | null;
  blob_ref: string | null;
  media_type: string;
  is_preview_image: boolean;
  [key: string]: unknown;
}

export interface TimeIntervalDoc {
  begin: string;
  end: string | null;
}

export interface MountAttributes {
  child: { kind: string; id: string };
  parent: { kind: string; id: string } | null;
  interval: TimeIntervalDoc;
  offset_x: number;
  offset_y: number;
  offset_z: number;
  begin_description: string;
  end_description: string;
  [key: string]: unknown;
}

export interface TermAttributes {
  category: string;
  term: string;
  definition: string;
  provenance: string;
  provenance_uri: string | null;
  global_provenance: string | null;
  synonyms: string[];
  status: "proposed" | "accepted" | "rejected" | "deprecated";
  note_for_curator: string;
  [key: string]: unknown;
}

export interface StateNode {
  entity: { kind: string; id: string; name: string };
  mount_id: string;
  offsets: { x: number; y: number; z: number };
  position: PositionDoc;
  children: StateNode[];
}

export type PositionDoc =
  | {
      variant: "absolute";
      latitude: number;
      longitude: number;
      height: number;
      epsg_code: string;
      offset: { x: number; y: number; z: number };
    }
  | { variant: "dynamic"; [key: string]: unknown }
  | { variant: "undefined" };

export interface ConfigurationState {
  at: string;
  label: string;
  location: Record<string, unknown> | null;
  tree: StateNode[];
  mounted: number;
}

export interface PrincipalSummary {
  kind: "anonymous" | "user" | "service";
  groups: string[];
  roles: string[];
  contact_id: string | null;
  display_name: string;
}

export interface SearchHit {
  type: string;
  id: string;
  name: string;
  score: number;
  url: string;
}
