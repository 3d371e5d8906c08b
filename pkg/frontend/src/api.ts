import type {
  GarmentEntry,
  ManifestPayload,
  MessageResult,
  QualityReport,
  SessionHandle,
  Snapshot,
  StageName,
  StageResult,
} from "./types.js";

/** An error body from the service, kept verbatim for display. */
export class ApiFault extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiFault";
  }
}

async function raiseFault(response: Response): Promise<never> {
  let code = "error";
  let detail = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (typeof body.error === "string") code = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiFault(code, detail, response.status);
}

/** Thin fetch client for the session API. One instance per service base URL. */
export class Client {
  readonly base: string;

  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  artifactUrl(artifactId: string): string {
    return `${this.base}/v1/artifacts/${artifactId}`;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.base}${path}`, init);
    if (!response.ok) await raiseFault(response);
    return (await response.json()) as T;
  }

  createSession(): Promise<SessionHandle> {
    return this.json("/v1/sessions", { method: "POST" });
  }

  getSession(sessionId: string): Promise<Snapshot> {
    return this.json(`/v1/sessions/${sessionId}`);
  }

  getManifest(sessionId: string): Promise<ManifestPayload> {
    return this.json(`/v1/sessions/${sessionId}/manifest`);
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResult> {
    return this.json(`/v1/sessions/${sessionId}/message`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  uploadPortrait(sessionId: string, png: Uint8Array): Promise<StageResult> {
    return this.upload(sessionId, "portrait", png, "image/png");
  }

  uploadAudio(sessionId: string, wav: Uint8Array): Promise<StageResult> {
    return this.upload(sessionId, "audio", wav, "audio/wav");
  }

  private upload(
    sessionId: string,
    input: "portrait" | "audio",
    data: Uint8Array,
    contentType: string,
  ): Promise<StageResult> {
    // copy into a plain ArrayBuffer so fetch accepts it as a body
    const body = new Uint8Array(data).buffer as ArrayBuffer;
    return this.json(`/v1/sessions/${sessionId}/inputs/${input}`, {
      method: "PUT",
      headers: { "content-type": contentType },
      body,
    });
  }

  runStage(
    sessionId: string,
    stage: StageName,
    params: Record<string, unknown> = {},
  ): Promise<StageResult> {
    return this.json(`/v1/sessions/${sessionId}/stages/${stage}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
  }

  garments(): Promise<GarmentEntry[]> {
    return this.json<{ garments: GarmentEntry[] }>("/v1/garments").then(
      (body) => body.garments,
    );
  }

  async fetchArtifact(artifactId: string): Promise<Uint8Array> {
    const response = await fetch(this.artifactUrl(artifactId));
    if (!response.ok) await raiseFault(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  async fetchReport(artifactId: string): Promise<QualityReport> {
    const raw = await this.fetchArtifact(artifactId);
    return JSON.parse(new TextDecoder().decode(raw)) as QualityReport;
  }
}
