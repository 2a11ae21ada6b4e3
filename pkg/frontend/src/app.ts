/** UI controller: wires the form, service client, gauges, and previews.
 *  DOM-free so the behavior is testable; main.ts renders the state. */

import { ApiError } from "./api.js";
import type {
  PreviewSeries,
  ProfilePayload,
  RegenerateResponse,
  TuningService,
} from "./api.js";
import type { ParamName } from "./bounds.js";
import { ProfileForm } from "./form.js";
import { buildGauges, type GaugeModel } from "./gauges.js";

export interface AppState {
  busy: boolean;
  banner: string | null;
  toast: string | null;
  gauges: GaugeModel[];
  wallTimeS: number | null;
  preview: PreviewSeries | null;
  digest: string | null;
  savedProfiles: Array<{ id: string; name: string }>;
}

export class TuningApp {
  readonly form = new ProfileForm();
  state: AppState = {
    busy: false,
    banner: null,
    toast: null,
    gauges: [],
    wallTimeS: null,
    preview: null,
    digest: null,
    savedProfiles: [],
  };
  previewTask = { speed: 1.0, incline: 0.0 };
  previewJoint = "ankle";

  private listeners: Array<() => void> = [];

  constructor(private client: TuningService) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  async start(): Promise<void> {
    try {
      const bundle = await this.client.currentBundle();
      this.form.applyProfile(bundle.profile, false);
      this.state.gauges = buildGauges(bundle.vaf_per_joint);
      this.state.digest = bundle.digest;
      await this.refreshPreview();
      await this.refreshProfiles();
    } catch (error) {
      this.state.banner = describe(error);
    }
    this.notify();
  }

  setField(name: ParamName, value: number): void {
    this.form.set(name, value);
    this.state.toast = null;
    this.notify();
  }

  setSplit(split: boolean): void {
    this.form.splitSitStand = split;
    if (!split) {
      // re-link by dragging stand-to-sit onto the sit-to-stand value
      this.form.set("stand_to_sit_pct", this.form.field("sit_to_stand_pct").value);
    }
    this.notify();
  }

  /** preset selection replaces every field and marks the form dirty */
  async loadPreset(param: ParamName, level: "HIGH" | "LOW"): Promise<void> {
    this.state.banner = null;
    try {
      const preset = await this.client.preset(param, level);
      this.form.applyProfile(preset, true);
    } catch (error) {
      this.state.banner = describe(error);
    }
    this.notify();
  }

  /** POST the form, then refresh gauges, wall time, and the preview */
  async regenerateAndRefresh(): Promise<RegenerateResponse | null> {
    if (this.state.busy || !this.form.canSubmit()) {
      return null;
    }
    this.state.busy = true;
    this.state.banner = null;
    this.notify();
    try {
      const response = await this.client.regenerate(this.form.toPayload());
      this.state.gauges = buildGauges(response.vaf_per_joint);
      this.state.wallTimeS = response.wall_time_s;
      this.state.digest = response.digest;
      this.state.toast = `${response.regenerated.length} models regenerated`;
      this.form.markApplied();
      await this.refreshPreview();
      return response;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.state.banner = "regeneration in progress; try again shortly";
      } else {
        this.state.banner = describe(error);
      }
      return null;
    } finally {
      this.state.busy = false;
      this.notify();
    }
  }

  async refreshPreview(): Promise<void> {
    try {
      this.state.preview = await this.client.preview(
        this.previewTask.speed,
        this.previewTask.incline,
        this.previewJoint,
      );
    } catch (error) {
      this.state.preview = null;
      this.state.banner = describe(error);
    }
  }

  async setPreviewJoint(joint: string): Promise<void> {
    this.previewJoint = joint;
    await this.refreshPreview();
    this.notify();
  }

  async saveProfile(): Promise<string | null> {
    try {
      const { id } = await this.client.saveProfile(this.form.toPayload());
      this.state.toast = `saved ${id}`;
      await this.refreshProfiles();
      this.notify();
      return id;
    } catch (error) {
      this.state.banner = describe(error);
      this.notify();
      return null;
    }
  }

  async loadProfile(id: string): Promise<ProfilePayload | null> {
    try {
      const profile = await this.client.loadProfile(id);
      this.form.applyProfile(profile, true);
      this.notify();
      return profile;
    } catch (error) {
      this.state.banner = describe(error);
      this.notify();
      return null;
    }
  }

  private async refreshProfiles(): Promise<void> {
    const profiles = await this.client.listProfiles();
    this.state.savedProfiles = profiles.map((p) => ({ id: p.id, name: p.name }));
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.status}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}
