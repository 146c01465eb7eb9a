// Application wiring: session token, document navigation, autosave and the
// per-document timer.

import { ApiClient, ApiError, type MetaResponse } from "./api.js";
import { AutosaveQueue } from "./autosave.js";
import { renderDocument } from "./grid.js";
import {
  buildGrid,
  documentPayload,
  segmentPayload,
  type CellModel,
  type ColumnModel,
  type GridViewModel,
} from "./model.js";
import { DocumentTimer } from "./timer.js";
import type { Scale } from "./validate.js";

function sessionToken(): string | null {
  const fromUrl = new URLSearchParams(window.location.search).get("token");
  if (fromUrl) {
    window.localStorage.setItem("ortkit-token", fromUrl);
    return fromUrl;
  }
  return window.localStorage.getItem("ortkit-token");
}

function setStatus(selector: string, text: string): void {
  const node = document.querySelector(selector);
  if (node) {
    node.textContent = text;
  }
}

class App {
  private readonly queue = new AutosaveQueue();
  private readonly timer = new DocumentTimer();
  private model: GridViewModel | null = null;
  private scale: Scale;

  constructor(
    private readonly client: ApiClient,
    private readonly meta: MetaResponse,
  ) {
    this.scale = meta.scale;
  }

  renderNav(): void {
    const nav = document.querySelector("#documents");
    if (!nav) {
      return;
    }
    nav.textContent = "";
    for (const doc of this.meta.documents) {
      const button = document.createElement("button");
      button.textContent = doc.id;
      button.addEventListener("click", () => void this.openDocument(doc.id));
      nav.append(button);
    }
  }

  private updateCellStatus(cell: { column: number }, key: string, text: string): void {
    const node = document.querySelector(`[data-cell="${cell.column}:${key}"]`);
    if (node) {
      node.textContent = text;
    }
  }

  async flushTimer(): Promise<void> {
    if (!this.model) {
      return;
    }
    const minutes = this.timer.takeMinutes();
    if (minutes >= 0.05) {
      const documentId = this.model.documentId;
      await this.queue.enqueue(async () => {
        await this.client.logTime(documentId, minutes);
      });
    }
  }

  async openDocument(id: string): Promise<void> {
    await this.flushTimer();
    const doc = await this.client.document(id);
    this.model = buildGrid(doc);
    const host = document.querySelector("#grid");
    if (!host) {
      return;
    }
    host.textContent = "";
    host.append(
      renderDocument(this.model, this.scale, {
        onSegmentCellBlur: (cell) => this.saveSegment(cell),
        onDocumentCellBlur: (column) => this.saveDocumentRow(column),
      }),
    );
    setStatus("#current-document", `document ${id}`);
    this.timer.start();
  }

  private saveSegment(cell: CellModel): void {
    if (!this.model) {
      return;
    }
    const model = this.model;
    const payload = segmentPayload(model, cell, this.scale);
    if (!payload) {
      return; // incomplete cell; inline messages already shown
    }
    this.updateCellStatus(cell, String(cell.segmentIndex), "saving…");
    void this.queue.enqueue(async () => {
      try {
        const ack = await this.client.submitSegment(payload);
        cell.savedSequence = ack.sequence;
        this.updateCellStatus(cell, String(cell.segmentIndex), `saved #${ack.sequence}`);
      } catch (error) {
        const message = error instanceof ApiError ? error.message : "network error";
        this.updateCellStatus(cell, String(cell.segmentIndex), `rejected: ${message}`);
      }
    });
  }

  private saveDocumentRow(column: ColumnModel): void {
    if (!this.model) {
      return;
    }
    const payload = documentPayload(this.model, column, this.scale);
    if (!payload) {
      return;
    }
    this.updateCellStatus({ column: column.position }, "doc", "saving…");
    void this.queue.enqueue(async () => {
      try {
        const ack = await this.client.submitDocument(payload);
        column.documentCell.savedSequence = ack.sequence;
        this.updateCellStatus({ column: column.position }, "doc", `saved #${ack.sequence}`);
      } catch (error) {
        const message = error instanceof ApiError ? error.message : "network error";
        this.updateCellStatus({ column: column.position }, "doc", `rejected: ${message}`);
      }
    });
  }

  watchVisibility(): void {
    document.addEventListener("visibilitychange", () => {
      if (document.visibilityState === "hidden") {
        this.timer.pause();
      } else if (this.model) {
        this.timer.start();
      }
    });
    window.addEventListener("beforeunload", () => {
      void this.flushTimer();
    });
  }
}

async function boot(): Promise<void> {
  const token = sessionToken();
  if (!token) {
    setStatus("#current-document", "missing ?token=… in the URL");
    return;
  }
  const client = new ApiClient("", token);
  try {
    const meta = await client.meta();
    setStatus("#campaign-name", `${meta.name} — ${meta.annotator_id}`);
    const app = new App(client, meta);
    app.renderNav();
    app.watchVisibility();
    const first = meta.documents[0];
    if (first) {
      await app.openDocument(first.id);
    }
  } catch (error) {
    const message = error instanceof ApiError ? error.message : String(error);
    setStatus("#current-document", `cannot load campaign: ${message}`);
  }
}

void boot();
