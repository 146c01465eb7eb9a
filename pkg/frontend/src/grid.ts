// DOM rendering of the annotation grid: source column plus one color-coded
// column per translation, seven rating inputs and an edit area per cell,
// and a trailing document-level row.

import type { Scale } from "./validate.js";
import { clientValidate } from "./validate.js";
import {
  CATEGORIES,
  type Category,
  type CellModel,
  type ColumnModel,
  type GridViewModel,
} from "./model.js";

export interface GridCallbacks {
  onSegmentCellBlur(cell: CellModel): void;
  onDocumentCellBlur(column: ColumnModel): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function ratingInput(
  ratings: Record<Category, string>,
  category: Category,
  scale: Scale,
  onBlur: () => void,
): HTMLElement {
  const wrap = el("label", "rating-field");
  wrap.append(el("span", "rating-name", category));
  const input = el("input", "rating-input");
  input.type = "text";
  input.inputMode = "decimal";
  input.value = ratings[category];
  input.dataset["category"] = category;
  const message = el("span", "rating-message");
  input.addEventListener("input", () => {
    ratings[category] = input.value;
    const result = clientValidate(input.value, scale);
    if (result.ok || input.value.trim() === "") {
      input.classList.remove("invalid");
      message.textContent = "";
    } else {
      input.classList.add("invalid");
      message.textContent = result.message;
    }
  });
  input.addEventListener("blur", () => {
    const result = clientValidate(input.value, scale);
    if (result.ok) {
      ratings[category] = String(result.value);
      input.value = String(result.value);
    }
    onBlur();
  });
  wrap.append(input, message);
  return wrap;
}

function segmentCell(
  model: GridViewModel,
  column: ColumnModel,
  cell: CellModel,
  scale: Scale,
  callbacks: GridCallbacks,
): HTMLElement {
  const hypothesis = column.segments[model.evaluated.findIndex((s) => s.index === cell.segmentIndex)] ?? "";
  const box = el("td", "cell");
  box.style.background = column.color;
  box.append(el("div", "hypothesis", hypothesis));
  const fields = el("div", "ratings");
  for (const category of CATEGORIES) {
    fields.append(ratingInput(cell.ratings, category, scale, () => callbacks.onSegmentCellBlur(cell)));
  }
  box.append(fields);
  const edit = el("textarea", "edit-area") as HTMLTextAreaElement;
  edit.value = cell.editedText;
  edit.rows = 3;
  edit.addEventListener("input", () => {
    cell.editedText = edit.value;
  });
  edit.addEventListener("blur", () => callbacks.onSegmentCellBlur(cell));
  box.append(edit);
  const status = el("div", "cell-status", cell.status);
  status.dataset["cell"] = `${cell.column}:${cell.segmentIndex}`;
  box.append(status);
  return box;
}

function documentCell(
  column: ColumnModel,
  scale: Scale,
  callbacks: GridCallbacks,
): HTMLElement {
  const box = el("td", "cell doc-cell");
  box.style.background = column.color;
  const fields = el("div", "ratings");
  for (const category of CATEGORIES) {
    fields.append(
      ratingInput(column.documentCell.ratings, category, scale, () =>
        callbacks.onDocumentCellBlur(column),
      ),
    );
  }
  box.append(fields);
  const status = el("div", "cell-status", column.documentCell.status);
  status.dataset["cell"] = `${column.position}:doc`;
  box.append(status);
  return box;
}

function contextBlock(title: string, segments: { index: number; text: string }[]): HTMLElement {
  const block = el("section", "context");
  block.append(el("h3", undefined, title));
  for (const segment of segments) {
    block.append(el("p", "context-segment", segment.text));
  }
  return block;
}

export function renderDocument(
  model: GridViewModel,
  scale: Scale,
  callbacks: GridCallbacks,
): HTMLElement {
  const root = el("div", "document-view");
  if (model.contextBefore.length) {
    root.append(contextBlock("Context before (not evaluated)", model.contextBefore));
  }

  const table = el("table", "grid");
  const head = el("tr");
  head.append(el("th", undefined, "source"));
  for (const column of model.columns) {
    const th = el("th", "column-head", column.label);
    th.style.background = column.color;
    head.append(th);
  }
  table.append(head);

  for (const segment of model.evaluated) {
    const row = el("tr");
    const src = el("td", "source-cell", segment.text);
    row.append(src);
    for (const column of model.columns) {
      const cell = column.cells.get(segment.index);
      if (cell) {
        row.append(segmentCell(model, column, cell, scale, callbacks));
      }
    }
    table.append(row);
  }

  const docRow = el("tr", "doc-row");
  docRow.append(el("td", "source-cell", "whole document"));
  for (const column of model.columns) {
    docRow.append(documentCell(column, scale, callbacks));
  }
  table.append(docRow);
  root.append(table);

  if (model.contextAfter.length) {
    root.append(contextBlock("Context after (not evaluated)", model.contextAfter));
  }
  return root;
}
