import { describe, expect, it } from "vitest";

import { buildGauges, formatVaf } from "../src/gauges.js";

describe("buildGauges", () => {
  it("passes service values through untouched", () => {
    const gauges = buildGauges({ ankle: 0.97314159, knee: 0.991 });
    expect(gauges.map((g) => g.joint)).toEqual(["ankle", "knee"]);
    expect(gauges[0].value).toBe(0.97314159);
    expect(gauges[1].value).toBe(0.991);
  });

  it("marks the rejection floor per joint", () => {
    const gauges = buildGauges({ ankle: 0.97, knee: 0.84, sitstand: 0.99 });
    const byJoint = Object.fromEntries(gauges.map((g) => [g.joint, g]));
    expect(byJoint.ankle.floor).toBe(0.95);
    expect(byJoint.ankle.belowFloor).toBe(false);
    expect(byJoint.knee.floor).toBe(0.85);
    expect(byJoint.knee.belowFloor).toBe(true);
    expect(byJoint.sitstand.floor).toBeNull();
  });

  it("clamps only the needle used for layout, never the value", () => {
    const [gauge] = buildGauges({ ankle: -0.4 });
    expect(gauge.value).toBe(-0.4);
    expect(gauge.needle).toBe(0);
  });

  it("formats three decimals for display", () => {
    expect(formatVaf(0.97314159)).toBe("0.973");
  });
});
