/** Server-side SVG rendering of curve sets with echarts. */

import * as echarts from "echarts";

import { Curve, SchemaError } from "./schemas";

export type Kind = "singular" | "projerr" | "romerr" | "rates";

const TITLES: Record<Kind, string> = {
  singular: "Relative singular values",
  projerr: "Snapshot projection errors",
  romerr: "Reduced-model errors",
  rates: "Convergence study",
};

const X_LABELS: Record<Kind, string> = {
  singular: "k",
  projerr: "r",
  romerr: "r",
  rates: "h or dt",
};

/**
 * Positive values only on log axes; zeros (an exactly captured mode or
 * a floored error) are dropped from the drawn series, never plotted as
 * fake values.
 */
function logSafe(points: Array<[number, number]>): Array<[number, number]> {
  return points.filter(([, y]) => y > 0);
}

/**
 * echarts numbers CSS classes and clip ids with process-global counters,
 * so raw output differs between renders of the same input. Remap the
 * tokens in order of first appearance to make output byte-stable.
 */
function canonicalizeIds(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-(cls-|c)\d+/g, (tok) => {
    let mapped = seen.get(tok);
    if (mapped === undefined) {
      mapped = tok.includes("-cls-")
        ? `zr-cls-${seen.size}`
        : `zr-c${seen.size}`;
      seen.set(tok, mapped);
    }
    return mapped;
  });
}

export function renderSvg(kind: Kind, curves: Curve[]): string {
  if (curves.length === 0) {
    throw new SchemaError("input", "no curves to draw");
  }
  for (const c of curves) {
    if (c.points.length === 0) {
      throw new SchemaError("input", `curve '${c.label}' has no points`);
    }
  }
  const logX = kind === "rates";
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: 760,
    height: 520,
  });
  chart.setOption({
    animation: false,
    title: { text: TITLES[kind], left: "center" },
    legend: { bottom: 0, data: curves.map((c) => c.label) },
    grid: { left: 70, right: 30, top: 50, bottom: 70 },
    xAxis: {
      type: logX ? "log" : "value",
      name: X_LABELS[kind],
      nameLocation: "middle",
      nameGap: 28,
      minInterval: logX ? undefined : 1,
    },
    yAxis: {
      type: "log",
      name: kind === "singular" ? "sigma_k / ||sigma||" : "error",
    },
    series: curves.map((c) => ({
      name: c.label,
      type: "line",
      showSymbol: true,
      symbolSize: 5,
      data: logSafe(c.points),
    })),
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return canonicalizeIds(svg);
}
