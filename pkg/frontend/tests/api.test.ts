import { describe, expect, it } from "vitest";
import { ApiClient, ApiError, FetchLike } from "../src/api.js";

interface Captured {
  url: string;
  method: string;
  body: unknown;
}

function capture(responses: Array<{ status?: number; body: unknown }>) {
  const calls: Captured[] = [];
  let index = 0;
  const fetchImpl: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const next = responses[Math.min(index++, responses.length - 1)];
    return new Response(JSON.stringify(next.body), {
      status: next.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetchImpl };
}

describe("ApiClient", () => {
  it("maps each action to exactly one /api/v1 call", async () => {
    const { calls, fetchImpl } = capture([{ body: {} }]);
    const api = new ApiClient("http://x", fetchImpl);

    await api.registerUser("ada", ["nlp"]);
    await api.placeStake("m1", "u1", "ACCEPT", 30);
    await api.castRating("p1", "u2", { ORIGINALITY: 7, SOUNDNESS: 8, IMPACT: 9 });
    await api.placeBid("b1", "u3", 25);
    await api.flagContent("c1", "u2", "SPAM");
    await api.resolveMarket("m1", "ACCEPT");
    await api.settleEpoch();

    expect(calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST http://x/api/v1/users",
      "POST http://x/api/v1/markets/m1/stakes",
      "POST http://x/api/v1/ratings",
      "POST http://x/api/v1/bounties/b1/bids",
      "POST http://x/api/v1/flags",
      "POST http://x/api/v1/admin/markets/m1/resolve",
      "POST http://x/api/v1/admin/settle-epoch",
    ]);
    expect(calls[1].body).toEqual({ staker: "u1", side: "ACCEPT", amount: 30 });
    expect(calls[3].body).toEqual({ reviewer: "u3", ask: 25 });
  });

  it("surfaces server error codes verbatim", async () => {
    const { fetchImpl } = capture([
      { status: 400, body: { code: "UNLICENSED", message: "u9 holds no active reviewer license" } },
    ]);
    const api = new ApiClient("http://x", fetchImpl);
    const failure = await api.placeBid("b1", "u9", 5).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.code).toBe("UNLICENSED");
    expect(failure.message).toContain("license");
    expect(failure.status).toBe(400);
  });

  it("propagates 402 and 409 style domain failures", async () => {
    const { fetchImpl } = capture([
      { status: 402, body: { code: "INSUFFICIENT_FUNDS", message: "a1 has 10, needs 50" } },
    ]);
    const api = new ApiClient("http://x", fetchImpl);
    const failure = await api.placeStake("m1", "u1", "REJECT", 50).catch((e) => e);
    expect(failure.code).toBe("INSUFFICIENT_FUNDS");
  });

  it("reads pool totals and balance sheets without mutation", async () => {
    const { calls, fetchImpl } = capture([
      { body: [{ market_id: "m1", accept: 60, reject: 40, pool: 100 }] },
    ]);
    const api = new ApiClient("http://x", fetchImpl);
    const markets = await api.listMarkets();
    expect(markets[0].pool).toBe(100);
    expect(calls[0].method).toBe("GET");
  });
});
