/** Assemble preview chart data: phase on x as percent, torque on y,
 *  solid baseline vs dashed tuned. Mapping only, no recomputation. */

import type { PreviewSeries } from "./api.js";

export interface ChartSeries {
  label: string;
  dashed: boolean;
  points: Array<{ x: number; y: number }>;
}

export interface ChartData {
  title: string;
  xLabel: string;
  yLabel: string;
  series: ChartSeries[];
  yMin: number;
  yMax: number;
}

function toPoints(phase: number[], values: number[]): Array<{ x: number; y: number }> {
  return phase.map((s, i) => ({ x: 100 * s, y: values[i] }));
}

export function buildChart(preview: PreviewSeries, which: "reference" | "commanded"): ChartData {
  const pair = preview[which];
  const all = [...pair.baseline, ...pair.tuned];
  const yMin = Math.min(...all);
  const yMax = Math.max(...all);
  const pad = 0.05 * (yMax - yMin || 1);
  return {
    title: `${preview.joint} ${which} torque @ ${preview.task.speed} m/s, ${preview.task.incline} deg`,
    xLabel: "gait cycle (%)",
    yLabel: "torque (N·m/kg)",
    series: [
      { label: "baseline", dashed: false, points: toPoints(preview.phase, pair.baseline) },
      { label: "tuned", dashed: true, points: toPoints(preview.phase, pair.tuned) },
    ],
    yMin: yMin - pad,
    yMax: yMax + pad,
  };
}
