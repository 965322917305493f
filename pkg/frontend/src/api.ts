/**
 * Typed client for the annotation service.
 *
 * Talks only to the documented resource endpoints:
 *   GET  /tasks?status=&signer=&episode=
 *   GET  /tasks/{id}
 *   GET  /tasks/{id}/media
 *   PUT  /tasks/{id}/annotation   { raw, expected_version, done }
 *   POST /validate                { raw }
 *
 * The transport is injected so tests can substitute an in-memory double
 * and the browser can pass window.fetch. Transport-level failures are
 * wrapped in TransportError so callers can flip an offline indicator.
 */

export type TaskStatus = "unannotated" | "draft" | "done"

export interface AnnotationTask {
  sample_id: string
  episode_id: string
  signer_id: string
  start_frame: number
  end_frame: number
  media: string
  subtitle_text: string
  status: TaskStatus
  raw_annotation: string | null
  version: number
}

export interface Diagnostic {
  position: number
  expected: string
  found: string
  message: string
}

export interface CompoundChip {
  render: string
  kind: "compound"
  units: number
  ill_performed: boolean
  variant: boolean
}

export interface HomosignChip {
  render: string
  kind: "homosign"
  members: string[]
}

export type TokenChip = CompoundChip | HomosignChip

export type ValidateResult =
  | { ok: true; tokens: TokenChip[] }
  | { ok: false; diagnostics: Diagnostic[] }

export type PutResult =
  | { kind: "ok"; version: number; status: TaskStatus }
  | { kind: "conflict"; currentVersion: number; storedAnnotation: string | null }
  | { kind: "invalid"; diagnostics: Diagnostic[] }
  | { kind: "readOnly" }
  | { kind: "notFound" }

export interface TaskFilter {
  status?: TaskStatus
  signer?: string
  episode?: string
}

/** Minimal structural view of a fetch response; satisfied by window.fetch. */
export interface HttpResponse {
  status: number
  json(): Promise<unknown>
}

export interface HttpRequest {
  method: string
  headers?: Record<string, string>
  body?: string
}

export type FetchLike = (url: string, init: HttpRequest) => Promise<HttpResponse>

export class TransportError extends Error {
  constructor(cause: unknown) {
    super(`annotation service unreachable: ${String(cause)}`)
    this.name = "TransportError"
  }
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike
  ) {}

  private async request(path: string, init: HttpRequest): Promise<HttpResponse> {
    try {
      return await this.fetchImpl(`${this.baseUrl}${path}`, init)
    } catch (error) {
      throw new TransportError(error)
    }
  }

  async listTasks(filter: TaskFilter = {}): Promise<AnnotationTask[]> {
    const params = new URLSearchParams()
    if (filter.status) params.set("status", filter.status)
    if (filter.signer) params.set("signer", filter.signer)
    if (filter.episode) params.set("episode", filter.episode)
    const query = params.toString()
    const response = await this.request(`/tasks${query ? `?${query}` : ""}`, {
      method: "GET",
    })
    const payload = (await response.json()) as { tasks: AnnotationTask[] }
    return payload.tasks
  }

  async getTask(sampleId: string): Promise<AnnotationTask | null> {
    const response = await this.request(`/tasks/${encodeURIComponent(sampleId)}`, {
      method: "GET",
    })
    if (response.status === 404) return null
    return (await response.json()) as AnnotationTask
  }

  mediaUrl(sampleId: string): string {
    return `${this.baseUrl}/tasks/${encodeURIComponent(sampleId)}/media`
  }

  async putAnnotation(
    sampleId: string,
    raw: string,
    expectedVersion: number,
    done: boolean
  ): Promise<PutResult> {
    const response = await this.request(
      `/tasks/${encodeURIComponent(sampleId)}/annotation`,
      {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ raw, expected_version: expectedVersion, done }),
      }
    )
    const payload = (await response.json()) as Record<string, unknown>
    switch (response.status) {
      case 200:
        return {
          kind: "ok",
          version: payload.version as number,
          status: payload.status as TaskStatus,
        }
      case 409:
        return {
          kind: "conflict",
          currentVersion: payload.current_version as number,
          storedAnnotation: (payload.raw_annotation as string | null) ?? null,
        }
      case 422:
        return { kind: "invalid", diagnostics: payload.diagnostics as Diagnostic[] }
      case 403:
        return { kind: "readOnly" }
      default:
        return { kind: "notFound" }
    }
  }

  async validate(raw: string): Promise<ValidateResult> {
    const response = await this.request("/validate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ raw }),
    })
    const payload = (await response.json()) as Record<string, unknown>
    if (payload.ok) return { ok: true, tokens: payload.tokens as TokenChip[] }
    return { ok: false, diagnostics: payload.diagnostics as Diagnostic[] }
  }
}
