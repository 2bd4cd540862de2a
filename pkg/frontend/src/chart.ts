// Learning-curve geometry for the progress chart (pure; canvas draws it).

import type { CurvePoint } from "./types.js";

export interface ChartLayout {
  polyline: [number, number][];
  yTicks: { y: number; label: string }[];
  xTicks: { x: number; label: string }[];
  yMax: number;
}

export function curveLayout(
  points: CurvePoint[],
  width: number,
  height: number,
  padding = 28,
): ChartLayout {
  const innerW = width - 2 * padding;
  const innerH = height - 2 * padding;
  const maxSamples = Math.max(1, ...points.map((p) => p.samples));
  const yMax = Math.max(0.1, ...points.map((p) => p.map)) * 1.1;

  const toX = (samples: number) => padding + (samples / maxSamples) * innerW;
  const toY = (map: number) => padding + innerH - (map / yMax) * innerH;

  const polyline = points.map(
    (p): [number, number] => [toX(p.samples), toY(p.map)],
  );
  const yTicks = [0, 0.25, 0.5, 0.75, 1.0]
    .map((f) => f * yMax)
    .map((v) => ({ y: toY(v), label: v.toFixed(2) }));
  const xTicks = points.map((p) => ({
    x: toX(p.samples),
    label: String(p.samples),
  }));
  return { polyline, yTicks, xTicks, yMax };
}
