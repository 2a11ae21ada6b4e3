import { describe, expect, it } from "vitest";

import { ApiError, ServiceClient } from "../src/api.js";

function fakeFetch(
  handler: (url: string, init?: RequestInit) => { status: number; body: unknown },
): typeof fetch {
  return (async (url: RequestInfo | URL, init?: RequestInit) => {
    const { status, body } = handler(String(url), init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
}

describe("ServiceClient", () => {
  it("builds the preview query string", async () => {
    let seen = "";
    const client = new ServiceClient(
      "http://svc",
      fakeFetch((url) => {
        seen = url;
        return { status: 200, body: {} };
      }),
    );
    await client.preview(1.0, -5.0, "ankle");
    expect(seen).toBe("http://svc/preview/torques?task=1%2C-5&joint=ankle");
  });

  it("posts profiles as JSON", async () => {
    let captured: unknown = null;
    const client = new ServiceClient(
      "",
      fakeFetch((_url, init) => {
        captured = JSON.parse(String(init?.body));
        return { status: 200, body: { id: "x-v1" } };
      }),
    );
    const profile = {
      name: "x",
      version: 1,
      params: {
        stance_flexion_resistance_pct: 0,
        swing_knee_flexion_deg: 0,
        pushoff_pct: 12,
        sit_to_stand_pct: 0,
        stand_to_sit_pct: 0,
      },
    };
    const out = await client.saveProfile(profile);
    expect(out.id).toBe("x-v1");
    expect(captured).toEqual(profile);
  });

  it("maps error statuses onto ApiError with the service detail", async () => {
    const client = new ServiceClient(
      "",
      fakeFetch(() => ({ status: 409, body: { detail: "another regeneration is in flight" } })),
    );
    await expect(client.regenerate({ name: "p", version: 1, params: {} as never })).rejects.toMatchObject({
      status: 409,
      message: "another regeneration is in flight",
    });
  });

  it("falls back to the status text when the error body is not JSON", async () => {
    const broken = (async () =>
      new Response("<html>oops</html>", { status: 404, statusText: "Not Found" })) as unknown as typeof fetch;
    const client = new ServiceClient("", broken);
    try {
      await client.loadProfile("ghost");
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(404);
    }
  });
});
