/**
 * Paper reader: assembled fragments, the ratings widget, anchored threads
 * with replies and reactions, flag buttons, and the per-paper incognito
 * toggle that routes every action through the pseudonymous handle.
 */

import { ApiClient, CommentNode, DocumentView, FragmentView, ThreadView } from "../api.js";
import { clear, el, errorBox, guard } from "../dom.js";
import { Poller, startPolling } from "../poll.js";
import { Session } from "../session.js";

const EMOJI = ["👍", "👎", "🎉", "🤔", "❤️"];
const DIMENSIONS = ["ORIGINALITY", "SOUNDNESS", "IMPACT"] as const;

interface PaperViewState {
  threadsByFragment: Map<string, string>;   // fragment -> thread we opened
}

export function mountPaperView(api: ApiClient, session: Session,
                               root: HTMLElement, paperId: string): Poller {
  const state: PaperViewState = { threadsByFragment: new Map() };
  const header = el("div", { class: "paper-header" });
  const ratings = el("div", { class: "ratings" });
  const body = el("div", { class: "paper-body" });
  clear(root);
  root.append(header, ratings, body);

  async function renderHeader(): Promise<void> {
    const paper = await api.getPaper(paperId);
    clear(header);
    const toggle = el("input", {
      type: "checkbox",
      class: "incognito-toggle",
      change: (event) => {
        session.setIncognito(paperId, (event.target as HTMLInputElement).checked);
      },
    });
    if (session.isIncognito(paperId)) toggle.setAttribute("checked", "checked");
    header.append(
      el("h2", {}, paper.title),
      el("span", { class: "meta" }, `status ${paper.status} · authors ${paper.authors.join(", ")}`),
      el("label", { class: "incognito" }, toggle, " incognito"),
    );
  }

  async function renderRatings(): Promise<void> {
    const summary = await api.getRatings(paperId);
    clear(ratings);
    const summaryLine = summary.means === null
      ? "no ratings yet"
      : DIMENSIONS.map((d) => `${d.toLowerCase()} ${summary.means![d].toFixed(1)}`).join(" · ")
        + ` (${summary.count} raters)`;
    ratings.append(el("div", { class: "rating-summary" }, summaryLine));

    const selects = DIMENSIONS.map((dimension) => {
      const select = el("select", { "data-dimension": dimension });
      for (let i = 1; i <= 10; i++) {
        select.append(el("option", { value: String(i) }, String(i)));
      }
      return select;
    });
    const slot = el("div", { class: "action-result" });
    const form = el("div", { class: "rating-form" },
      ...DIMENSIONS.flatMap((d, i) => [el("label", {}, d.toLowerCase()), selects[i]]),
      el("button", {
        class: "cast-rating",
        click: () => void guard(slot, async () => {
          const handle = await session.handleFor(paperId);
          const scores = {
            ORIGINALITY: Number(selects[0].value),
            SOUNDNESS: Number(selects[1].value),
            IMPACT: Number(selects[2].value),
          };
          await session.mutate(() => api.castRating(paperId, handle, scores));
          await renderRatings();
        }),
      }, "rate"),
      slot,
    );
    ratings.append(form);
  }

  function reactionBar(target: string, slot: HTMLElement,
                       counts: Record<string, number> = {}): HTMLElement {
    const bar = el("div", { class: "reactions" });
    for (const emoji of EMOJI) {
      const count = counts[emoji] ?? 0;
      bar.append(el("button", {
        class: "react",
        "data-emoji": emoji,
        click: () => void guard(slot, async () => {
          const handle = await session.handleFor(paperId);
          const result = await session.mutate(() => api.react(target, handle, emoji));
          const fresh = reactionBar(target, slot, result.counts);
          bar.replaceWith(fresh);
        }),
      }, count > 0 ? `${emoji} ${count}` : emoji));
    }
    return bar;
  }

  function renderComment(thread: ThreadView, comment: CommentNode): HTMLElement {
    const slot = el("div", { class: "action-result" });
    const replyText = el("input", { type: "text", placeholder: "reply…" });
    const node = el("div", { class: comment.hidden ? "comment hidden" : "comment" },
      el("span", { class: "author" }, comment.author ?? "[moderated]"),
      el("p", { class: "comment-text" }, comment.text),
      comment.hidden ? null : reactionBar(comment.comment_id, slot),
      comment.hidden ? null : el("div", { class: "comment-actions" },
        replyText,
        el("button", {
          class: "reply",
          click: () => void guard(slot, async () => {
            const handle = await session.handleFor(paperId);
            await session.mutate(() =>
              api.postComment(thread.thread_id, handle, replyText.value, comment.comment_id));
            await renderBody();
          }),
        }, "reply"),
        el("button", {
          class: "flag",
          click: () => void guard(slot, async () => {
            const handle = await session.handleFor(paperId);
            await api.flagContent(comment.comment_id, handle, "ABUSE");
            slot.append(el("span", { class: "flagged" }, "flagged"));
          }),
        }, "flag"),
      ),
      slot,
    );
    const replies = el("div", { class: "replies" });
    for (const reply of comment.replies) replies.append(renderComment(thread, reply));
    node.append(replies);
    return node;
  }

  function renderThread(container: HTMLElement, thread: ThreadView): void {
    const slot = el("div", { class: "action-result" });
    const text = el("input", { type: "text", placeholder: "join the discussion…", class: "new-comment" });
    container.append(
      el("div", { class: "thread", "data-thread": thread.thread_id },
        ...thread.comments.map((comment) => renderComment(thread, comment)),
        text,
        el("button", {
          class: "post-comment",
          click: () => void guard(slot, async () => {
            const handle = await session.handleFor(paperId);
            await session.mutate(() => api.postComment(thread.thread_id, handle, text.value));
            await renderBody();
          }),
        }, "comment"),
        slot,
      ),
    );
  }

  function renderFragment(fragment: FragmentView): HTMLElement {
    const slot = el("div", { class: "action-result" });
    const container = el("article", { class: "fragment", "data-fragment": fragment.fragment_id },
      el("header", {}, `${fragment.kind.toLowerCase()} · rev ${fragment.revision}`),
      fragment.text !== null
        ? el("p", {}, fragment.text)
        : el("p", { class: "blob" }, `[binary panel ${fragment.blob_digest?.slice(0, 12)}]`),
      reactionBar(fragment.fragment_id, slot),
    );
    const discussions = el("div", { class: "discussions" });
    container.append(
      el("button", {
        class: "discuss",
        click: () => void guard(slot, async () => {
          let threadId = state.threadsByFragment.get(fragment.fragment_id);
          if (!threadId) {
            const anchor = await api.createAnchor(fragment.fragment_id, fragment.revision);
            const thread = await api.openThread(anchor.anchor_id);
            threadId = thread.thread_id;
            state.threadsByFragment.set(fragment.fragment_id, threadId);
          }
          const thread = await api.getThread(threadId);
          clear(discussions);
          renderThread(discussions, thread);
        }),
      }, "discuss this section"),
      discussions,
      slot,
    );
    return container;
  }

  async function renderBody(): Promise<void> {
    const document_: DocumentView = await api.getDocument(paperId);
    clear(body);
    if (document_.fragments.length === 0) {
      body.append(el("p", { class: "empty" }, "no fragments linked yet"));
    }
    for (const fragment of document_.fragments) {
      body.append(renderFragment(fragment));
    }
    // Re-open any threads the reader had expanded.
    for (const [fragmentId, threadId] of state.threadsByFragment) {
      const host = body.querySelector(`[data-fragment="${fragmentId}"] .discussions`);
      if (!host) continue;
      const thread = await api.getThread(threadId);
      renderThread(host as HTMLElement, thread);
    }
  }

  return startPolling(async () => {
    try {
      await renderHeader();
      await renderRatings();
      await renderBody();
    } catch (err) {
      clear(body);
      body.append(errorBox(err));
    }
  });
}
