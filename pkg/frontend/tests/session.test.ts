import { describe, expect, it } from "vitest";
import { ApiClient, FetchLike } from "../src/api.js";
import { Session } from "../src/session.js";

/** Minimal stateful backend: one user whose balance moves on stakes. */
function fakeBackend() {
  let balance = 100;
  let pseudonymCalls = 0;
  const fetchImpl: FetchLike = async (url, init) => {
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), { status });
    if (url.endsWith("/api/v1/users") && init?.method === "POST") {
      return json({ user_id: "u1", display_name: "ada", role: "FREEMAN",
                    expertise: [], reputation: 0.5, licensed: false,
                    account_id: "a1", balance, vip: false });
    }
    if (url.endsWith("/api/v1/users/u1")) {
      return json({ user_id: "u1", display_name: "ada", role: "FREEMAN",
                    expertise: [], reputation: 0.5, licensed: false,
                    account_id: "a1", balance, vip: false });
    }
    if (url.includes("/stakes")) {
      const body = JSON.parse(init!.body as string);
      balance -= body.amount;
      return json({ stake_id: "stk1", balance });
    }
    if (url.endsWith("/api/v1/pseudonyms")) {
      pseudonymCalls += 1;
      const body = JSON.parse(init!.body as string);
      return json({ handle: `anon-${body.user}-${body.paper}`, paper_id: body.paper });
    }
    return json({ code: "UNKNOWN_COMMAND", message: `no route ${url}` }, 404);
  };
  return { fetchImpl, getBalance: () => balance, getPseudonymCalls: () => pseudonymCalls };
}

describe("Session", () => {
  it("refetches the live balance after every mutating action", async () => {
    const backend = fakeBackend();
    const session = new Session(new ApiClient("http://x", backend.fetchImpl));
    await session.register("ada", []);
    expect(session.user!.balance).toBe(100);
    await session.mutate(() => session.api.placeStake("m1", "u1", "ACCEPT", 30));
    // No optimistic arithmetic: the shown balance is the refetched one.
    expect(session.user!.balance).toBe(70);
    expect(backend.getBalance()).toBe(70);
  });

  it("refetches even when the mutation fails", async () => {
    const backend = fakeBackend();
    const session = new Session(new ApiClient("http://x", backend.fetchImpl));
    await session.register("ada", []);
    const failing = session.mutate(() => session.api.post("/nowhere", {}));
    await expect(failing).rejects.toMatchObject({ code: "UNKNOWN_COMMAND" });
    expect(session.user!.balance).toBe(100);
  });

  it("routes through the pseudonymous handle only when incognito", async () => {
    const backend = fakeBackend();
    const session = new Session(new ApiClient("http://x", backend.fetchImpl));
    await session.register("ada", []);
    expect(await session.handleFor("p1")).toBe("u1");
    session.setIncognito("p1", true);
    expect(await session.handleFor("p1")).toBe("anon-u1-p1");
    expect(await session.handleFor("p1")).toBe("anon-u1-p1");
    expect(backend.getPseudonymCalls()).toBe(1);   // cached per paper
    session.setIncognito("p1", false);
    expect(await session.handleFor("p1")).toBe("u1");
  });

  it("keeps pseudonyms scoped per paper", async () => {
    const backend = fakeBackend();
    const session = new Session(new ApiClient("http://x", backend.fetchImpl));
    await session.register("ada", []);
    session.setIncognito("p1", true);
    session.setIncognito("p2", true);
    const one = await session.handleFor("p1");
    const two = await session.handleFor("p2");
    expect(one).not.toBe(two);
  });
});
