// Typed client for the campaign service. All requests carry the session
// token; errors surface the server's message for inline display.

export interface ScaleInfo {
  lo: number;
  hi: number;
  step: number;
}

export interface DocumentSummary {
  id: string;
  evaluated_segments: number;
}

export interface MetaResponse {
  schema: string;
  name: string;
  scale: ScaleInfo;
  categories: string[];
  columns: number;
  documents: DocumentSummary[];
  annotator_id: string;
}

export interface SegmentAnswer {
  ratings: Record<string, number | null>;
  edited_text: string;
}

export interface ColumnView {
  position: number;
  segments: string[];
  answers: Record<string, SegmentAnswer>;
  document_answer: Record<string, number | null> | null;
}

export interface ContextSegment {
  index: number;
  text: string;
  evaluated: boolean;
}

export interface DocumentResponse {
  schema: string;
  document_id: string;
  context: ContextSegment[];
  full_source_context: string | null;
  columns: ColumnView[];
}

export interface SegmentSubmission {
  document_id: string;
  segment_index: number;
  column: number;
  ratings: Record<string, number>;
  edited_text: string;
}

export interface DocumentSubmission {
  document_id: string;
  column: number;
  ratings: Record<string, number>;
}

export interface Ack {
  schema: string;
  sequence: number;
}

export interface DocumentProgress {
  document_id: string;
  fraction: number;
  document_rows_done: number;
  minutes: number;
}

export interface ProgressResponse {
  schema: string;
  annotator_id: string;
  documents: DocumentProgress[];
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) {
      message = body.error;
    }
  } catch {
    // keep the status text
  }
  throw new ApiError(message, response.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
  ) {}

  private url(path: string): string {
    const sep = path.includes("?") ? "&" : "?";
    return `${this.baseUrl}${path}${sep}token=${encodeURIComponent(this.token)}`;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.url(path));
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  meta(): Promise<MetaResponse> {
    return this.get("/api/campaign/meta");
  }

  document(id: string): Promise<DocumentResponse> {
    return this.get(`/api/documents/${encodeURIComponent(id)}`);
  }

  submitSegment(payload: SegmentSubmission): Promise<Ack> {
    return this.post("/api/annotations/segment", payload);
  }

  submitDocument(payload: DocumentSubmission): Promise<Ack> {
    return this.post("/api/annotations/document", payload);
  }

  logTime(documentId: string, minutes: number): Promise<Ack> {
    return this.post("/api/time", { document_id: documentId, minutes });
  }

  progress(): Promise<ProgressResponse> {
    return this.get("/api/progress");
  }
}
