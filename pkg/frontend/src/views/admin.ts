/** Admin console: clock ticks, epoch settlement, market resolution, grants. */

import { ApiClient } from "../api.js";
import { clear, el, guard } from "../dom.js";
import { Session } from "../session.js";

export function mountAdminConsole(api: ApiClient, session: Session, root: HTMLElement): void {
  const slot = el("div", { class: "action-result" });
  clear(root);

  const tickBy = el("input", { type: "number", value: "1" });
  const marketId = el("input", { type: "text", placeholder: "market id" });
  const outcome = el("select", {},
    el("option", { value: "ACCEPT" }, "ACCEPT"),
    el("option", { value: "REJECT" }, "REJECT"));
  const grantTo = el("input", { type: "text", placeholder: "user id" });
  const grantAmount = el("input", { type: "number", value: "100" });
  const output = el("pre", { class: "admin-output" });

  function show(result: unknown): void {
    output.textContent = JSON.stringify(result, null, 2);
  }

  root.append(
    el("h2", {}, "admin console"),
    el("div", { class: "admin-row" },
      tickBy,
      el("button", {
        class: "tick",
        click: () => void guard(slot, async () => show(await api.tick(Number(tickBy.value)))),
      }, "advance clock"),
    ),
    el("div", { class: "admin-row" },
      el("button", {
        class: "settle-epoch",
        click: () => void guard(slot, async () => {
          show(await session.mutate(() => api.settleEpoch()));
        }),
      }, "settle epoch"),
    ),
    el("div", { class: "admin-row" },
      marketId, outcome,
      el("button", {
        class: "resolve-market",
        click: () => void guard(slot, async () => {
          show(await session.mutate(() => api.resolveMarket(marketId.value, outcome.value)));
        }),
      }, "resolve market"),
    ),
    el("div", { class: "admin-row" },
      grantTo, grantAmount,
      el("button", {
        class: "grant",
        click: () => void guard(slot, async () => {
          show(await session.mutate(() => api.grant(grantTo.value, Number(grantAmount.value))));
        }),
      }, "grant credits"),
    ),
    slot,
    output,
  );
}
