/** Profile form state: bounded fields, dirty tracking, linked sit/stand. */

import {
  MAX_SITSTAND_SEPARATION,
  PARAMS,
  type ParamName,
  inBounds,
  sitStandSeparation,
} from "./bounds.js";
import type { ProfileParams, ProfilePayload } from "./api.js";

export interface FieldState {
  value: number;
  valid: boolean;
}

export function zeroParams(): ProfileParams {
  const params = {} as ProfileParams;
  for (const spec of PARAMS) {
    params[spec.name] = 0;
  }
  return params;
}

export class ProfileForm {
  name = "untitled";
  version = 1;
  /** true once any field differs from the last applied/loaded profile */
  dirty = false;
  /** advanced dialog: when closed, sit/stand sliders move together */
  splitSitStand = false;

  private values: ProfileParams = zeroParams();
  private applied: ProfileParams = zeroParams();

  field(name: ParamName): FieldState {
    return { value: this.values[name], valid: inBounds(name, this.values[name]) };
  }

  allValues(): ProfileParams {
    return { ...this.values };
  }

  set(name: ParamName, value: number): void {
    this.values[name] = value;
    if (!this.splitSitStand && name === "sit_to_stand_pct") {
      this.values.stand_to_sit_pct = value;
    }
    if (!this.splitSitStand && name === "stand_to_sit_pct") {
      this.values.sit_to_stand_pct = value;
    }
    this.dirty = !this.equalsApplied();
  }

  separation(): number {
    return sitStandSeparation(this.values);
  }

  separationOk(): boolean {
    return this.separation() <= MAX_SITSTAND_SEPARATION;
  }

  invalidFields(): ParamName[] {
    return PARAMS.filter((spec) => !inBounds(spec.name, this.values[spec.name])).map(
      (spec) => spec.name,
    );
  }

  /** submit stays blocked while any field is out of bounds or the
   *  sit/stand separation exceeds the cap */
  canSubmit(): boolean {
    return this.invalidFields().length === 0 && this.separationOk();
  }

  /** replace the whole form from a service-provided profile (preset or load) */
  applyProfile(profile: ProfilePayload, markDirty: boolean): void {
    this.name = profile.name;
    this.version = profile.version;
    this.values = { ...zeroParams(), ...profile.params };
    if (
      this.values.sit_to_stand_pct !== this.values.stand_to_sit_pct &&
      !this.splitSitStand
    ) {
      this.splitSitStand = true;
    }
    if (markDirty) {
      this.dirty = true;
    } else {
      this.applied = { ...this.values };
      this.dirty = false;
    }
  }

  /** called after a successful regenerate: the form now matches the bundle */
  markApplied(): void {
    this.applied = { ...this.values };
    this.dirty = false;
  }

  toPayload(): ProfilePayload {
    return { name: this.name, version: this.version, params: this.allValues() };
  }

  private equalsApplied(): boolean {
    return PARAMS.every((spec) => this.values[spec.name] === this.applied[spec.name]);
  }
}
