/**
 * Bounty board: open bounties with bid forms, the poster's match button,
 * and the review composer (three score sliders + text) for the session
 * user's own assignments.
 */

import { ApiClient, AssignmentView, BountyView } from "../api.js";
import { clear, el, guard } from "../dom.js";
import { Poller, startPolling } from "../poll.js";
import { Session } from "../session.js";

const DIMENSIONS = ["ORIGINALITY", "SOUNDNESS", "IMPACT"] as const;

export function mountBountyBoard(api: ApiClient, session: Session, root: HTMLElement): Poller {
  const list = el("div", { class: "bounty-list" });
  const postSlot = el("div", { class: "action-result" });
  clear(root);
  root.append(postForm(), postSlot, list);

  function postForm(): HTMLElement {
    const paper = el("input", { type: "text", placeholder: "paper id" });
    const reward = el("input", { type: "number", value: "90" });
    const slots = el("input", { type: "number", value: "3" });
    const fields = el("input", { type: "text", placeholder: "required fields, comma-separated" });
    const deadline = el("input", { type: "number", value: "10", title: "deadline (logical time)" });
    return el("div", { class: "post-bounty" },
      el("h3", {}, "post a bounty"),
      paper, reward, slots, fields, deadline,
      el("button", {
        class: "post-bounty-button",
        click: () => void guard(postSlot, async () => {
          const user = session.requireUser();
          await session.mutate(() => api.postBounty(
            paper.value, user.user_id, Number(reward.value),
            fields.value.split(",").map((f) => f.trim()).filter(Boolean),
            Number(slots.value), Number(deadline.value)));
          await refresh();
        }),
      }, "post"),
    );
  }

  function reviewComposer(assignment: AssignmentView): HTMLElement {
    const slot = el("div", { class: "action-result" });
    const sliders = DIMENSIONS.map((dimension) => {
      const slider = el("input", {
        type: "range", min: "1", max: "10", value: "5",
        class: "score-slider", "data-dimension": dimension,
      });
      return slider;
    });
    const text = el("textarea", { placeholder: "your review (min length enforced server-side)" });
    return el("div", { class: "review-composer", "data-assignment": assignment.assignment_id },
      el("h4", {}, `your assignment ${assignment.assignment_id} (slot ${assignment.slot_index}, ask ${assignment.ask})`),
      ...DIMENSIONS.flatMap((d, i) => [el("label", {}, d.toLowerCase()), sliders[i]]),
      text,
      el("button", {
        class: "submit-review",
        click: () => void guard(slot, async () => {
          await session.mutate(() => api.submitReview(assignment.assignment_id, {
            ORIGINALITY: Number(sliders[0].value),
            SOUNDNESS: Number(sliders[1].value),
            IMPACT: Number(sliders[2].value),
          }, text.value));
          await refresh();
        }),
      }, "deliver review"),
      slot,
    );
  }

  function bountyCard(bounty: BountyView): HTMLElement {
    const slot = el("div", { class: "action-result" });
    const user = session.user;
    const card = el("div", { class: "bounty", "data-bounty": bounty.bounty_id },
      el("h3", {}, `${bounty.bounty_id} · ${bounty.reward} credits · ${bounty.slots} slots (${bounty.per_slot}/slot)`),
      el("div", { class: "meta" },
        `paper ${bounty.paper_id} · fields ${bounty.required_fields.join(", ") || "any"} · `
        + `deadline t=${bounty.deadline} · state ${bounty.state} · ${bounty.bids.length} bids`),
    );
    if (bounty.state === "OPEN") {
      const ask = el("input", { type: "number", value: String(bounty.per_slot), class: "ask" });
      card.append(
        ask,
        el("button", {
          class: "place-bid",
          click: () => void guard(slot, async () => {
            const me = session.requireUser();
            await session.mutate(() => api.placeBid(bounty.bounty_id, me.user_id, Number(ask.value)));
            await refresh();
          }),
        }, "bid"),
        el("button", {
          class: "match-now",
          click: () => void guard(slot, async () => {
            await session.mutate(() => api.matchReviewers(bounty.bounty_id));
            await refresh();
          }),
        }, "match now"),
      );
    }
    for (const assignment of bounty.assignments) {
      if (assignment.state === "ASSIGNED" && user && assignment.reviewer === user.user_id) {
        card.append(reviewComposer(assignment));
      } else {
        card.append(el("div", { class: "assignment" },
          `${assignment.assignment_id}: ${assignment.reviewer} · ${assignment.state}`
          + ` · match ${(assignment.match_score * 100).toFixed(0)}%`));
      }
    }
    card.append(slot);
    return card;
  }

  async function refresh(): Promise<void> {
    const bounties = await api.listBounties();
    clear(list);
    for (const bounty of bounties.slice().reverse()) {
      list.append(bountyCard(bounty));
    }
  }

  return startPolling(() => guard(postSlot, refresh));
}
