/** Tiny DOM helpers; no framework, no virtual anything. */

import { ApiError } from "./api.js";

type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | ((event: Event) => void)> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key.replace(/^on/, ""), value);
    } else if (key === "class") {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Render an API failure inline, error code verbatim. Never swallow. */
export function errorBox(err: unknown): HTMLElement {
  if (err instanceof ApiError) {
    return el("div", { class: "error", "data-code": err.code },
      el("strong", {}, err.code), ` ${err.message}`);
  }
  const message = err instanceof Error ? err.message : String(err);
  return el("div", { class: "error", "data-code": "CLIENT_ERROR" },
    el("strong", {}, "ERROR"), ` ${message}`);
}

/** Run an async action; on failure, render the error into `slot`. */
export async function guard(slot: HTMLElement, action: () => Promise<void>): Promise<void> {
  clear(slot);
  try {
    await action();
  } catch (err) {
    slot.append(errorBox(err));
  }
}
