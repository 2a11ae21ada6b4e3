/** Typed client for the session service. All numerics originate here. */

import type { ParamName } from "./bounds.js";

export type ProfileParams = Record<ParamName, number>;

export interface ProfilePayload {
  name: string;
  version: number;
  created_at?: string;
  params: ProfileParams;
}

export interface SavedProfile extends ProfilePayload {
  id: string;
}

export interface RegenerateResponse {
  regenerated: string[];
  wall_time_s: number;
  vaf_per_joint: Record<string, number>;
  digest: string;
  revision: number;
}

export interface BundleSummary {
  digest: string;
  revision: number;
  profile: ProfilePayload;
  vaf_per_joint: Record<string, number>;
}

export interface PreviewSeries {
  task: { speed: number; incline: number };
  joint: string;
  phase: number[];
  reference: { baseline: number[]; tuned: number[] };
  commanded: { baseline: number[]; tuned: number[] };
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

/** What the UI needs from the session service; ServiceClient is the
 *  HTTP implementation and tests substitute fakes. */
export interface TuningService {
  listProfiles(): Promise<SavedProfile[]>;
  saveProfile(profile: ProfilePayload): Promise<{ id: string }>;
  loadProfile(id: string): Promise<ProfilePayload>;
  currentBundle(): Promise<BundleSummary>;
  regenerate(profile: ProfilePayload): Promise<RegenerateResponse>;
  preview(speed: number, incline: number, joint: string): Promise<PreviewSeries>;
  preset(param: ParamName, level: "HIGH" | "LOW"): Promise<ProfilePayload>;
  exportBundle(path: string): Promise<{ digest: string; path: string }>;
  sessionLog(): Promise<Array<Record<string, unknown>>>;
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ServiceClient implements TuningService {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      await parseError(response);
    }
    return response.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return response.json() as Promise<T>;
  }

  listProfiles(): Promise<SavedProfile[]> {
    return this.get("/profiles");
  }

  saveProfile(profile: ProfilePayload): Promise<{ id: string }> {
    return this.post("/profiles", profile);
  }

  loadProfile(id: string): Promise<ProfilePayload> {
    return this.get(`/profiles/${encodeURIComponent(id)}`);
  }

  currentBundle(): Promise<BundleSummary> {
    return this.get("/bundle/current");
  }

  regenerate(profile: ProfilePayload): Promise<RegenerateResponse> {
    return this.post("/bundle/regenerate", profile);
  }

  preview(speed: number, incline: number, joint: string): Promise<PreviewSeries> {
    const task = `${speed},${incline}`;
    return this.get(
      `/preview/torques?task=${encodeURIComponent(task)}&joint=${encodeURIComponent(joint)}`,
    );
  }

  preset(param: ParamName, level: "HIGH" | "LOW"): Promise<ProfilePayload> {
    return this.get(`/presets/${param}/${level}`);
  }

  exportBundle(path: string): Promise<{ digest: string; path: string }> {
    return this.post("/bundle/export", { path });
  }

  sessionLog(): Promise<Array<Record<string, unknown>>> {
    return this.get("/session/log");
  }
}
