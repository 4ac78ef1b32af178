// Fetch client for the modelform service. The wizard talks to the engine
// exclusively through these documented endpoints.

import type {
  ApiError,
  Edit,
  GenericBundle,
  GenericInfo,
  InstanceSummary,
  Rendered,
  Session,
  Violation,
} from "./types.js";

export class RequestFailed extends Error {
  constructor(public error: ApiError) {
    super(error.message);
  }
}

async function parse<T>(res: Response): Promise<T> {
  const body = await res.json().catch(() => null);
  if (!res.ok) {
    const error: ApiError = body?.error ?? {
      status: res.status,
      code: "http_error",
      message: res.statusText,
    };
    throw new RequestFailed(error);
  }
  return body as T;
}

// Document types contain spaces and slashes (e.g. "IEE MF/2"); slashes stay
// literal because the server route captures the rest of the path.
function docTypePath(docType: string): string {
  return encodeURIComponent(docType).replace(/%2F/g, "/");
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    return parse<T>(await fetch(this.base + path, init));
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  async listGenerics(): Promise<GenericInfo[]> {
    const body = await this.request<{ generics: GenericInfo[] }>("/api/generics");
    return body.generics;
  }

  getGeneric(docType: string): Promise<GenericBundle> {
    return this.request<GenericBundle>(`/api/generics/${docTypePath(docType)}`);
  }

  async startSession(docType: string, prefix = "Q"): Promise<Session> {
    const body = await this.post<{ session: Session }>("/api/sessions", {
      doc_type: docType,
      prefix,
    });
    return body.session;
  }

  async getSession(id: string): Promise<Session> {
    const body = await this.request<{ session: Session }>(`/api/sessions/${id}`);
    return body.session;
  }

  applyEdit(id: string, edit: Edit): Promise<{ session: Session; violations: Violation[] }> {
    return this.post(`/api/sessions/${id}/edits`, edit);
  }

  async check(id: string): Promise<Violation[]> {
    const body = await this.post<{ violations: Violation[] }>(`/api/sessions/${id}/check`);
    return body.violations;
  }

  finalize(id: string): Promise<{ instance: { id: string; display_name: string } }> {
    return this.post(`/api/sessions/${id}/finalize`);
  }

  async queryInstances(params: URLSearchParams): Promise<InstanceSummary[]> {
    const qs = params.toString();
    const body = await this.request<{ instances: InstanceSummary[] }>(
      `/api/instances${qs ? "?" + qs : ""}`,
    );
    return body.instances;
  }

  render(id: string, format: "text" | "markup" = "text"): Promise<Rendered> {
    return this.request<Rendered>(`/api/instances/${id}/render?format=${format}`);
  }
}
