import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiRequestError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: "status",
    json: async () => body,
  }));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("posts session overrides and returns the session info", async () => {
    const fetchMock = mockFetch(201, { session_id: "x", status: "awaiting_labels" });
    const client = new ApiClient("http://svc");
    const info = await client.createSession({ seeds: [2] });
    expect(info.session_id).toBe("x");
    const [url, options] = fetchMock.mock.calls[0] as unknown as [
      string,
      RequestInit,
    ];
    expect(url).toBe("http://svc/api/sessions");
    expect(JSON.parse(options.body as string)).toEqual({ seeds: [2] });
  });

  it("wraps submissions in a labels envelope", async () => {
    const fetchMock = mockFetch(200, { labeled: 2, step: 1, status: "awaiting_labels" });
    const client = new ApiClient();
    await client.submitLabels("s", [{ image: "a", boxes: [] }]);
    const [, options] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(JSON.parse(options.body as string)).toEqual({
      labels: [{ image: "a", boxes: [] }],
    });
  });

  it("throws a typed error with the machine-readable body", async () => {
    mockFetch(422, { code: "incomplete", message: "labels missing", missing: ["b"] });
    const client = new ApiClient();
    const error = await client
      .submitLabels("s", [])
      .then(() => null, (e: unknown) => e as ApiRequestError);
    expect(error).toBeInstanceOf(ApiRequestError);
    expect(error!.status).toBe(422);
    expect(error!.code).toBe("incomplete");
    expect(error!.body.missing).toEqual(["b"]);
  });

  it("unwraps the selection log", async () => {
    mockFetch(200, { records: [{ step: 0, batch_id: 1 }] });
    const client = new ApiClient();
    const records = await client.getLog("s");
    expect(records).toHaveLength(1);
  });

  it("builds image urls", () => {
    expect(new ApiClient("http://svc").imageUrl("im1")).toBe(
      "http://svc/api/images/im1",
    );
  });
});
