// Client-side mirror of the server's rating validation. The server stays
// authoritative; this only gives annotators instant feedback before a write.

export interface Scale {
  lo: number;
  hi: number;
  step: number;
}

export const DEFAULT_SCALE: Scale = { lo: 0, hi: 6, step: 0.1 };

export type ValidationResult =
  | { ok: true; value: number }
  | { ok: false; message: string };

const GRID_TOLERANCE = 1e-9;

export function clientValidate(input: string, scale: Scale = DEFAULT_SCALE): ValidationResult {
  const text = input.trim();
  if (text === "") {
    return { ok: false, message: "required" };
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    return { ok: false, message: "not a number" };
  }
  // Same check order as the server: step grid first, then bounds.
  const units = value / scale.step;
  if (Math.abs(units - Math.round(units)) > GRID_TOLERANCE) {
    return { ok: false, message: `use steps of ${scale.step}` };
  }
  if (value < scale.lo || value > scale.hi) {
    return { ok: false, message: `must be between ${scale.lo} and ${scale.hi}` };
  }
  const canonical = Number((Math.round(units) * scale.step).toFixed(9));
  return { ok: true, value: canonical };
}
