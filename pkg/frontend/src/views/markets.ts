/**
 * Market panel: live pool totals per market and the stake form. Pool
 * numbers refresh on the 2 s poll; balances refetch after every stake.
 */

import { ApiClient, MarketView } from "../api.js";
import { clear, el, guard } from "../dom.js";
import { Poller, startPolling } from "../poll.js";
import { Session } from "../session.js";

export function mountMarketPanel(api: ApiClient, session: Session, root: HTMLElement): Poller {
  const list = el("div", { class: "market-list" });
  const openSlot = el("div", { class: "action-result" });
  clear(root);
  root.append(openForm(), openSlot, list);

  function openForm(): HTMLElement {
    const paper = el("input", { type: "text", placeholder: "paper id" });
    const venue = el("input", { type: "text", placeholder: "venue" });
    const close = el("input", { type: "number", value: "10", title: "close time (logical)" });
    return el("div", { class: "open-market" },
      el("h3", {}, "open a market"),
      paper, venue, close,
      el("button", {
        class: "open-market-button",
        click: () => void guard(openSlot, async () => {
          await api.openMarket(paper.value, venue.value, Number(close.value));
          await refresh();
        }),
      }, "open"),
    );
  }

  function marketCard(market: MarketView): HTMLElement {
    const slot = el("div", { class: "action-result" });
    const card = el("div", { class: "market", "data-market": market.market_id },
      el("h3", {}, `${market.market_id} · ${market.paper_id} @ ${market.venue}`),
      el("div", { class: "pools" },
        el("span", { class: "pool-accept" }, `ACCEPT ${market.accept}`),
        el("span", { class: "pool-reject" }, `REJECT ${market.reject}`),
        el("span", { class: "pool-total" }, `pool ${market.pool}`),
      ),
      el("div", { class: "meta" },
        `state ${market.state} · closes t=${market.close_time} · fee ${market.fee_bps / 100}%`
        + (market.outcome ? ` · outcome ${market.outcome}` : "")),
    );
    if (market.state === "OPEN") {
      const side = el("select", { class: "side" },
        el("option", { value: "ACCEPT" }, "ACCEPT"),
        el("option", { value: "REJECT" }, "REJECT"));
      const amount = el("input", { type: "number", value: "10", class: "amount" });
      card.append(side, amount,
        el("button", {
          class: "place-stake",
          click: () => void guard(slot, async () => {
            const user = session.requireUser();
            await session.mutate(() =>
              api.placeStake(market.market_id, user.user_id, side.value, Number(amount.value)));
            await refresh();
          }),
        }, "stake"));
    }
    card.append(slot);
    return card;
  }

  async function refresh(): Promise<void> {
    const markets = await api.listMarkets();
    clear(list);
    for (const market of markets.slice().reverse()) {
      list.append(marketCard(market));
    }
  }

  return startPolling(() => guard(openSlot, refresh));
}
