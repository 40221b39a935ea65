/**
 * Application shell: sign-in, the session header with the live balance and
 * role badge, tab navigation, and mounting of the four views.
 */

import { ApiClient, RankedPaper } from "./api.js";
import { clear, el, guard } from "./dom.js";
import { Poller, startPolling } from "./poll.js";
import { Session } from "./session.js";
import { mountAdminConsole } from "./views/admin.js";
import { mountBountyBoard } from "./views/bounties.js";
import { mountMarketPanel } from "./views/markets.js";
import { mountPaperView } from "./views/paper.js";

export function renderHeader(session: Session, node: HTMLElement): void {
  clear(node);
  const user = session.user;
  if (!user) {
    node.append(el("span", { class: "who" }, "not signed in"));
    return;
  }
  node.append(
    el("span", { class: "who" }, user.display_name),
    el("span", { class: "role-badge", "data-role": user.role }, user.role),
    el("span", { class: "balance" }, `${user.balance} credits`),
    user.vip ? el("span", { class: "vip" }, "VIP") : null as unknown as Node,
  );
}

export function startApp(root: HTMLElement, baseUrl: string): { session: Session; stop: () => void } {
  const api = new ApiClient(baseUrl);
  const session = new Session(api);

  const header = el("div", { class: "session-header" });
  const nav = el("nav", {});
  const main = el("main", {});
  clear(root);
  root.append(el("h1", {}, "panvas"), header, nav, main);

  session.onChange(() => renderHeader(session, header));
  renderHeader(session, header);

  let activePoller: Poller | null = null;
  let balancePoller: Poller | null = null;

  function swap(mount: (slot: HTMLElement) => Poller | void): void {
    activePoller?.stop();
    activePoller = null;
    clear(main);
    const slot = el("div", { class: "view" });
    main.append(slot);
    const poller = mount(slot);
    if (poller) activePoller = poller;
  }

  function signInForm(slot: HTMLElement): void {
    const name = el("input", { type: "text", placeholder: "display name" });
    const expertise = el("input", { type: "text", placeholder: "expertise, comma-separated" });
    const existing = el("input", { type: "text", placeholder: "…or existing user id" });
    const errSlot = el("div", { class: "action-result" });
    slot.append(
      el("h2", {}, "sign in"),
      name, expertise,
      el("button", {
        class: "register",
        click: () => void guard(errSlot, async () => {
          await session.register(name.value,
            expertise.value.split(",").map((e) => e.trim()).filter(Boolean));
        }),
      }, "register"),
      existing,
      el("button", {
        class: "sign-in",
        click: () => void guard(errSlot, async () => {
          await session.signIn(existing.value);
        }),
      }, "sign in"),
      errSlot,
    );
  }

  function papersIndex(slot: HTMLElement): Poller {
    return startPolling(() => guard(slot, async () => {
      const ranked: RankedPaper[] = await api.rankedPapers();
      clear(slot);
      slot.append(el("h2", {}, "papers by visibility"));
      for (const paper of ranked) {
        slot.append(el("div", { class: "ranked-paper" },
          el("a", {
            href: "#",
            click: (event) => {
              event.preventDefault();
              swap((inner) => mountPaperView(api, session, inner, paper.paper_id));
            },
          }, `${paper.title}`),
          el("span", { class: "meta" },
            ` · score ${paper.visibility_score.toFixed(2)} · ${paper.status}`),
        ));
      }
    }));
  }

  const tabs: Array<[string, (slot: HTMLElement) => Poller | void]> = [
    ["sign in", signInForm],
    ["papers", papersIndex],
    ["bounties", (slot) => mountBountyBoard(api, session, slot)],
    ["markets", (slot) => mountMarketPanel(api, session, slot)],
    ["admin", (slot) => mountAdminConsole(api, session, slot)],
  ];
  for (const [label, mount] of tabs) {
    nav.append(el("button", { class: "tab", click: () => swap(mount) }, label));
  }
  swap(signInForm);

  balancePoller = startPolling(async () => {
    // The header balance is never left stale even without user actions.
    await session.refresh().catch(() => undefined);
  });

  return {
    session,
    stop() {
      activePoller?.stop();
      balancePoller?.stop();
    },
  };
}
