/** VAF gauge view-models. Values are displayed exactly as the service
 *  reported them; the only arithmetic here is layout (needle angle). */

export interface GaugeModel {
  joint: string;
  /** raw service value, shown verbatim */
  value: number;
  /** rejection floor marker, when configured for the joint */
  floor: number | null;
  /** needle position in [0, 1] for drawing, clamped for layout only */
  needle: number;
  belowFloor: boolean;
}

export const REJECTION_FLOORS: Record<string, number> = {
  ankle: 0.95,
  knee: 0.85,
};

export function buildGauges(
  vafPerJoint: Record<string, number>,
  floors: Record<string, number> = REJECTION_FLOORS,
): GaugeModel[] {
  return Object.keys(vafPerJoint)
    .sort()
    .map((joint) => {
      const value = vafPerJoint[joint];
      const floor = joint in floors ? floors[joint] : null;
      return {
        joint,
        value,
        floor,
        needle: Math.max(0, Math.min(1, value)),
        belowFloor: floor !== null && value < floor,
      };
    });
}

export function formatVaf(value: number): string {
  return value.toFixed(3);
}
