import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("api client", () => {
  it("fetches clusters from /api/clusters", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse([{ id: 0 }]));
    vi.stubGlobal("fetch", fetchMock);
    const got = await new ApiClient("").getClusters();
    expect(fetchMock).toHaveBeenCalledWith("/api/clusters");
    expect(got).toEqual([{ id: 0 }]);
  });

  it("posts query text as JSON", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ provenance: "formal" }));
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient("").submitQuery("formal: application=dns");
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("/api/query");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual({ text: "formal: application=dns" });
  });

  it("surfaces 400 bodies as ApiError with position intact", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ error: "expected a value", position: 15 }, 400));
    vi.stubGlobal("fetch", fetchMock);
    const err = await new ApiClient("").submitQuery("formal: dst_ip==").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.body).toEqual({ error: "expected a value", position: 15 });
  });

  it("builds rule region links from the contract path", () => {
    expect(new ApiClient("").ruleRegionUrl("BypassFW")).toBe(
      "/api/rules/BypassFW/effective-region",
    );
  });

  it("posts witness-check parameters", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ sampled: 5, passed: 5, failures: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const report = await new ApiClient("").witnessCheck(5, 9);
    expect(JSON.parse(fetchMock.mock.calls[0][1].body)).toEqual({ n: 5, seed: 9 });
    expect(report.passed).toBe(5);
  });
});
