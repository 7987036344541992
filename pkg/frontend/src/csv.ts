/** CSV loading: papaparse + row-wise zod validation. */

import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";
import { z } from "zod";

import {
  Curve,
  ErrorRow,
  RatesRow,
  SchemaError,
  errorRow,
  ratesRow,
  singularBasisRow,
  singularRow,
} from "./schemas";

function readRecords(file: string): Record<string, string>[] {
  let text: string;
  try {
    text = fs.readFileSync(file, "utf8");
  } catch (err) {
    throw new SchemaError(file, `cannot read file (${(err as Error).message})`);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(file, `malformed CSV (${first.message})`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(file, "no data rows");
  }
  return parsed.data;
}

function validateRows<T>(
  file: string,
  records: Record<string, string>[],
  schema: z.ZodType<T, z.ZodTypeDef, unknown>,
): T[] {
  return records.map((rec, i) => {
    const res = schema.safeParse(rec);
    if (!res.success) {
      const issue = res.error.issues[0];
      const where = issue.path.join(".") || "row";
      throw new SchemaError(file, `row ${i + 2}: ${where}: ${issue.message}`);
    }
    return res.data;
  });
}

function curveStem(file: string): string {
  return path.basename(file).replace(/\.csv$/i, "");
}

/**
 * Singular-value files: prefer the variant-keyed compare-sets layout,
 * fall back to the single-curve basis layout (k, sigma_k, sigma_rel).
 * Points are (k, sigma_rel); every curve must cover k = 1..d_v.
 */
export function loadSingular(files: string[]): Curve[] {
  const curves: Curve[] = [];
  for (const file of files) {
    const records = readRecords(file);
    if ("variant" in records[0]) {
      const rows = validateRows(file, records, singularRow);
      const byVariant = new Map<string, Array<[number, number]>>();
      for (const row of rows) {
        const pts = byVariant.get(row.variant) ?? [];
        pts.push([row.k, row.sigma_rel]);
        byVariant.set(row.variant, pts);
      }
      for (const [variant, points] of byVariant) {
        checkContiguousRanks(file, variant, points.map((p) => p[0]));
        curves.push({ label: variant, points });
      }
    } else {
      const rows = validateRows(file, records, singularBasisRow);
      const points = rows.map((r) => [r.k, r.sigma_rel] as [number, number]);
      checkContiguousRanks(file, curveStem(file), points.map((p) => p[0]));
      curves.push({ label: curveStem(file), points });
    }
  }
  return curves;
}

function checkContiguousRanks(file: string, label: string, ks: number[]) {
  for (let i = 0; i < ks.length; i++) {
    if (ks[i] !== i + 1) {
      throw new SchemaError(
        file,
        `curve '${label}': ranks must run 1..n, found ${ks[i]} at position ${i + 1}`,
      );
    }
  }
}

/** Error files (projection or reduced-model): (r, error) per variant. */
export function loadErrors(files: string[]): Curve[] {
  const curves: Curve[] = [];
  for (const file of files) {
    const rows: ErrorRow[] = validateRows(file, readRecords(file), errorRow);
    const byVariant = new Map<string, Array<[number, number]>>();
    for (const row of rows) {
      const pts = byVariant.get(row.variant) ?? [];
      pts.push([row.r, row.error]);
      byVariant.set(row.variant, pts);
    }
    for (const [variant, points] of byVariant) {
      curves.push({ label: variant, points });
    }
  }
  return curves;
}

/** Rates files: an L2 and an H1 error curve over h (or dt) per file. */
export function loadRates(files: string[]): Curve[] {
  const curves: Curve[] = [];
  const prefixed = files.length > 1;
  for (const file of files) {
    const rows: RatesRow[] = validateRows(file, readRecords(file), ratesRow);
    const prefix = prefixed ? `${curveStem(file)} ` : "";
    curves.push({
      label: `${prefix}L2`,
      points: rows.map((r) => [r.h_or_dt, r.error_L2] as [number, number]),
    });
    curves.push({
      label: `${prefix}H1`,
      points: rows.map((r) => [r.h_or_dt, r.error_H1] as [number, number]),
    });
  }
  return curves;
}
