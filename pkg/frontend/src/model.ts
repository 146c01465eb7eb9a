// Grid view model: everything the grid renders, derived from one document
// fetch. Cells hold raw input strings so partially typed values survive
// re-renders; the server's answers are the only persistent state.

import type { DocumentResponse, SegmentAnswer, SegmentSubmission, DocumentSubmission } from "./api.js";
import { clientValidate, type Scale, type ValidationResult } from "./validate.js";

export const CATEGORIES = [
  "spelling",
  "terminology",
  "grammar",
  "meaning",
  "style",
  "pragmatics",
  "overall",
] as const;

export type Category = (typeof CATEGORIES)[number];

// One color per column position; identity stays hidden behind the shuffle.
export const COLUMN_COLORS = ["#dbeafe", "#dcfce7", "#fef9c3", "#fde2e2", "#ede9fe", "#d1f5f0"];

export function columnLabel(position: number): string {
  return `Translation ${String.fromCharCode(65 + position)}`;
}

export interface CellModel {
  segmentIndex: number;
  column: number;
  ratings: Record<Category, string>;
  editedText: string;
  savedSequence: number | null;
  status: string;
}

export interface ColumnModel {
  position: number;
  label: string;
  color: string;
  segments: string[];
  cells: Map<number, CellModel>;
  documentCell: { ratings: Record<Category, string>; savedSequence: number | null; status: string };
}

export interface GridViewModel {
  documentId: string;
  evaluated: { index: number; text: string }[];
  contextBefore: { index: number; text: string }[];
  contextAfter: { index: number; text: string }[];
  fullSourceContext: string | null;
  columns: ColumnModel[];
}

function ratingsToStrings(answer: SegmentAnswer | Record<string, number | null> | null): Record<Category, string> {
  const out = {} as Record<Category, string>;
  const source = answer && "ratings" in (answer as SegmentAnswer) ? (answer as SegmentAnswer).ratings : answer;
  for (const category of CATEGORIES) {
    const value = source ? (source as Record<string, number | null>)[category] : null;
    out[category] = value === null || value === undefined ? "" : String(value);
  }
  return out;
}

export function buildGrid(doc: DocumentResponse): GridViewModel {
  const evaluated = doc.context.filter((c) => c.evaluated).map((c) => ({ index: c.index, text: c.text }));
  const firstEvaluated = evaluated.length ? evaluated[0]!.index : 0;
  const lastEvaluated = evaluated.length ? evaluated[evaluated.length - 1]!.index : -1;
  const columns: ColumnModel[] = doc.columns.map((column) => {
    const cells = new Map<number, CellModel>();
    evaluated.forEach((segment, offset) => {
      const answer = column.answers[String(segment.index)] ?? null;
      const hypothesis = column.segments[offset] ?? "";
      cells.set(segment.index, {
        segmentIndex: segment.index,
        column: column.position,
        ratings: ratingsToStrings(answer),
        // minimal-editing default: untouched cells start from the original
        editedText: answer ? answer.edited_text : hypothesis,
        savedSequence: null,
        status: answer ? "saved" : "",
      });
    });
    return {
      position: column.position,
      label: columnLabel(column.position),
      color: COLUMN_COLORS[column.position % COLUMN_COLORS.length]!,
      segments: column.segments,
      cells,
      documentCell: {
        ratings: ratingsToStrings(column.document_answer),
        savedSequence: null,
        status: column.document_answer ? "saved" : "",
      },
    };
  });
  return {
    documentId: doc.document_id,
    evaluated,
    contextBefore: doc.context.filter((c) => !c.evaluated && c.index < firstEvaluated),
    contextAfter: doc.context.filter((c) => !c.evaluated && c.index > lastEvaluated),
    fullSourceContext: doc.full_source_context,
    columns,
  };
}

export interface CellValidation {
  complete: boolean;
  values: Record<Category, number>;
  messages: Partial<Record<Category, string>>;
  editMessage?: string;
}

export function validateCell(
  ratings: Record<Category, string>,
  editedText: string,
  scale: Scale,
): CellValidation {
  const values = {} as Record<Category, number>;
  const messages: Partial<Record<Category, string>> = {};
  let complete = true;
  for (const category of CATEGORIES) {
    const result: ValidationResult = clientValidate(ratings[category], scale);
    if (result.ok) {
      values[category] = result.value;
    } else {
      complete = false;
      if (ratings[category].trim() !== "") {
        messages[category] = result.message;
      }
    }
  }
  const validation: CellValidation = { complete, values, messages };
  if (editedText.trim() === "") {
    validation.complete = false;
    validation.editMessage = "required";
  }
  return validation;
}

export function segmentPayload(
  model: GridViewModel,
  cell: CellModel,
  scale: Scale,
): SegmentSubmission | null {
  const check = validateCell(cell.ratings, cell.editedText, scale);
  if (!check.complete) {
    return null;
  }
  return {
    document_id: model.documentId,
    segment_index: cell.segmentIndex,
    column: cell.column,
    ratings: check.values,
    edited_text: cell.editedText,
  };
}

export function documentPayload(
  model: GridViewModel,
  column: ColumnModel,
  scale: Scale,
): DocumentSubmission | null {
  const check = validateCell(column.documentCell.ratings, "x", scale);
  if (!check.complete) {
    return null;
  }
  return {
    document_id: model.documentId,
    column: column.position,
    ratings: check.values,
  };
}
