/** CSV row schemas for the study outputs, validated with zod. */

import { z } from "zod";

const finiteNumber = z
  .string()
  .trim()
  .min(1)
  .transform((s, ctx) => {
    const v = Number(s);
    if (!Number.isFinite(v)) {
      ctx.addIssue({ code: z.ZodIssueCode.custom, message: `not a number: ${s}` });
      return z.NEVER;
    }
    return v;
  });

const positiveInt = finiteNumber.refine(
  (v) => Number.isInteger(v) && v >= 1,
  { message: "expected a positive integer" },
);

/** singular_values.csv from compare-sets: one curve per variant. */
export const singularRow = z.object({
  variant: z.string().min(1),
  k: positiveInt,
  sigma_k: finiteNumber,
  sigma_rel: finiteNumber,
});

/** singular_values.csv from `pod build`: a single anonymous curve. */
export const singularBasisRow = z.object({
  k: positiveInt,
  sigma_k: finiteNumber,
  sigma_rel: finiteNumber,
});

/** projection_errors.csv / rom_errors.csv: variant, rank, error. */
export const errorRow = z.object({
  variant: z.string().min(1),
  r: positiveInt,
  error: finiteNumber,
});

/** rates.csv from convergence studies; rates may be blank. */
export const ratesRow = z.object({
  level: finiteNumber,
  h_or_dt: finiteNumber,
  error_L2: finiteNumber,
  error_H1: finiteNumber,
  rate_L2: z.string().optional(),
  rate_H1: z.string().optional(),
});

export type SingularRow = z.infer<typeof singularRow>;
export type SingularBasisRow = z.infer<typeof singularBasisRow>;
export type ErrorRow = z.infer<typeof errorRow>;
export type RatesRow = z.infer<typeof ratesRow>;

export class SchemaError extends Error {
  constructor(file: string, detail: string) {
    super(`${file}: ${detail}`);
    this.name = "SchemaError";
  }
}

/** One plotted curve: a label plus (x, y) points in input order. */
export interface Curve {
  label: string;
  points: Array<[number, number]>;
}
