/** Parameter metadata mirrored from the service for client-side blocking only.
 *  Every number shown to the clinician still comes from service responses. */

export type ParamName =
  | "stance_flexion_resistance_pct"
  | "swing_knee_flexion_deg"
  | "pushoff_pct"
  | "sit_to_stand_pct"
  | "stand_to_sit_pct";

export interface ParamSpec {
  name: ParamName;
  label: string;
  unit: string;
  min: number;
  max: number;
  step: number;
}

export const PARAMS: ParamSpec[] = [
  {
    name: "stance_flexion_resistance_pct",
    label: "Stance flexion resistance",
    unit: "%",
    min: -50,
    max: 60,
    step: 1,
  },
  {
    name: "swing_knee_flexion_deg",
    label: "Swing knee flexion",
    unit: "deg",
    min: -10,
    max: 30,
    step: 1,
  },
  { name: "pushoff_pct", label: "Push-off torque", unit: "%", min: -50, max: 60, step: 1 },
  { name: "sit_to_stand_pct", label: "Sit-to-stand torque", unit: "%", min: -50, max: 50, step: 1 },
  { name: "stand_to_sit_pct", label: "Stand-to-sit torque", unit: "%", min: -50, max: 50, step: 1 },
];

export const MAX_SITSTAND_SEPARATION = 60;

export function paramSpec(name: ParamName): ParamSpec {
  const spec = PARAMS.find((p) => p.name === name);
  if (!spec) {
    throw new Error(`unknown parameter ${name}`);
  }
  return spec;
}

export function inBounds(name: ParamName, value: number): boolean {
  const spec = paramSpec(name);
  return Number.isFinite(value) && value >= spec.min && value <= spec.max;
}

export function sitStandSeparation(values: Record<ParamName, number>): number {
  return Math.abs(values.sit_to_stand_pct - values.stand_to_sit_pct);
}

export function separationOk(values: Record<ParamName, number>): boolean {
  return sitStandSeparation(values) <= MAX_SITSTAND_SEPARATION;
}
