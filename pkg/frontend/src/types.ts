// Wire types mirroring the modelform HTTP API (schema_version 1).

export type UnitPath = string[];

export interface ParamSpec {
  name: string;
  kind: "string" | "integer" | "date";
  required: boolean;
}

export interface TextVersion {
  number: number;
  fragment: string;
  params?: ParamSpec[];
  commentary?: string;
  author?: string;
  created?: string;
}

export interface UnitTemplate {
  label: string;
  inclusion: "compulsory" | "optional";
  order: number;
  params?: ParamSpec[];
  commentary?: string;
  keywords?: string[];
  children?: UnitTemplate[];
  versions?: TextVersion[];
}

export interface Generic {
  schema_version: number;
  doc_type: string;
  category: string;
  params: ParamSpec[];
  parts: UnitTemplate[];
  constraints: unknown[];
}

export interface GenericBundle {
  generic: Generic;
  fragments: Record<string, string>;
}

export interface GenericInfo {
  doc_type: string;
  category: string;
  parts: number;
  atomic_units: number;
}

export interface Party {
  name: string;
  address: string;
}

export interface Instance {
  id: string;
  doc_type: string;
  display_name: string;
  parties: Party[] | null;
  date: string | null;
  status: "draft" | "final";
  selections: { unit: UnitPath; version: number }[];
  included_optional: UnitPath[];
  bindings: { scope: UnitPath | null; name: string; kind: string; value: unknown }[];
}

export type Stage = "meta" | "compulsory" | "optional" | "review" | "finalized";

export interface Session {
  session_id: string;
  doc_type: string;
  stage: Stage;
  autocheck: boolean;
  draft: Instance;
  pending_unit_cursor: UnitPath | null;
}

export type Subject = { unit: UnitPath } | { param: string };

export interface Remedy {
  action: "include" | "exclude" | "set_parameter";
  unit?: UnitPath;
  param?: string;
  rationale: string;
}

export interface Violation {
  kind: string;
  subjects: Subject[];
  message: string;
  pending: boolean;
  source_index: number | null;
  remedies?: Remedy[];
  unbound?: string[];
}

export interface InstanceSummary {
  id: string;
  display_name: string;
  doc_type: string;
  category: string;
  parties: Party[] | null;
  date: string | null;
  status: string;
}

export interface Rendered {
  format: "text" | "markup";
  content: string;
  toc?: [string, UnitPath, string][];
  warnings?: string[];
}

export type Edit =
  | { kind: "set_parties"; party1: Party; party2: Party }
  | { kind: "set_date"; date: string }
  | {
      kind: "set_param";
      scope: UnitPath | null;
      name: string;
      value: { kind: string; value: unknown };
    }
  | { kind: "include_unit"; unit: UnitPath }
  | { kind: "exclude_unit"; unit: UnitPath }
  | { kind: "choose_version"; unit: UnitPath; version: number }
  | {
      kind: "create_version";
      unit: UnitPath;
      text: string;
      commentary: string;
      author?: string;
      params?: ParamSpec[];
    }
  | { kind: "set_keywords"; unit: UnitPath; keywords: string[] }
  | { kind: "set_notes"; notes: string }
  | { kind: "toggle_autocheck"; enabled: boolean }
  | { kind: "set_display_name"; display_name: string }
  | { kind: "set_stage"; stage: Stage };

export interface ApiError {
  status: number;
  code: string;
  message: string;
  violations?: Violation[];
}
