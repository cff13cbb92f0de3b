import { describe, expect, test } from "vitest";

import { AlignApi, ApiError, type SessionState } from "../src/api.js";

interface Captured {
  url: string;
  init?: RequestInit;
}

const STATE: SessionState = {
  id: "abc",
  version: 3,
  cursors: { bam: 1, fr: 0, en: 2 },
  totals: { bam: 4, fr: 4, en: 4 },
  aligned_count: 1,
  saved_count: 0,
  output_path: null,
  window: {
    bam: { cursor: 1, total: 4, items: [] },
    fr: { cursor: 0, total: 4, items: [] },
    en: { cursor: 2, total: 4, items: [] },
  },
};

function client(
  status = 200,
  body: unknown = STATE,
): { api: AlignApi; calls: Captured[] } {
  const calls: Captured[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const payload = typeof body === "string" ? body : JSON.stringify(body);
    return new Response(payload, { status });
  };
  return { api: new AlignApi("http://api.test", fetchFn), calls };
}

function sentBody(call: Captured): unknown {
  return JSON.parse(call.init!.body as string);
}

describe("request mapping", () => {
  test("createSession posts streams", async () => {
    const { api, calls } = client();
    await api.createSession({ bam: ["b0"], fr: ["f0"], en: ["e0"] });
    expect(calls[0].url).toBe("http://api.test/sessions");
    expect(calls[0].init?.method).toBe("POST");
    expect(sentBody(calls[0])).toEqual({
      streams: { bam: ["b0"], fr: ["f0"], en: ["e0"] },
    });
  });

  test("createSession forwards the output path", async () => {
    const { api, calls } = client();
    await api.createSession({ bam: [] }, "/tmp/out.tsv");
    expect(sentBody(calls[0])).toEqual({
      streams: { bam: [] },
      output_path: "/tmp/out.tsv",
    });
  });

  test("getSession issues a plain GET", async () => {
    const { api, calls } = client();
    const state = await api.getSession("abc");
    expect(calls[0].url).toBe("http://api.test/sessions/abc");
    expect(calls[0].init?.method).toBeUndefined();
    expect(state).toEqual(STATE);
  });

  test("advance carries version, language, direction", async () => {
    const { api, calls } = client();
    await api.advance("abc", 3, "fr", "prev");
    expect(calls[0].url).toBe("http://api.test/sessions/abc/advance");
    expect(sentBody(calls[0])).toEqual({ version: 3, language: "fr", direction: "prev" });
  });

  test("align carries version and kind", async () => {
    const { api, calls } = client();
    await api.align("abc", 7, "BF");
    expect(calls[0].url).toBe("http://api.test/sessions/abc/align");
    expect(sentBody(calls[0])).toEqual({ version: 7, kind: "BF" });
  });

  test("save sends only what was set", async () => {
    const { api, calls } = client();
    await api.save("abc", 2);
    await api.save("abc", 2, { path: "x.tsv", overwrite: true });
    expect(sentBody(calls[0])).toEqual({ version: 2 });
    expect(sentBody(calls[1])).toEqual({ version: 2, path: "x.tsv", overwrite: true });
  });

  test("continueSave posts the version", async () => {
    const { api, calls } = client();
    await api.continueSave("abc", 9);
    expect(calls[0].url).toBe("http://api.test/sessions/abc/continue-save");
    expect(sentBody(calls[0])).toEqual({ version: 9 });
  });

  test("exportTsv returns the raw text", async () => {
    const { api } = client(200, "BFE\tb\tf\te\n");
    expect(await api.exportTsv("abc")).toBe("BFE\tb\tf\te\n");
  });
});

describe("error handling", () => {
  test("stale version surfaces as ApiError 409 with the server detail", async () => {
    const { api } = client(409, { detail: "stale version: have 4, got 3" });
    const err = await api.advance("abc", 3, "all", "next").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.message).toBe("stale version: have 4, got 3");
  });

  test("precondition failures surface the diagnostic", async () => {
    const { api } = client(400, { detail: "fr cursor is at end of stream" });
    const err = await api.align("abc", 0, "BF").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.message).toBe("fr cursor is at end of stream");
  });

  test("non-JSON error bodies fall back to the status line", async () => {
    const { api } = client(502, "bad gateway");
    const err = await api.getSession("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.message).toBe("HTTP 502");
  });
});
