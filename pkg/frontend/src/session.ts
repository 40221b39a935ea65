/**
 * Browser session state: the signed-in user, their live balance, and the
 * per-paper incognito toggles.
 *
 * The balance shown in the header is never trusted optimistically: every
 * mutating action goes through `mutate`, which re-fetches the user record
 * before handing the result back.
 */

import { ApiClient, UserView } from "./api.js";

export class Session {
  user: UserView | null = null;
  private incognito = new Map<string, boolean>();
  private handles = new Map<string, string>();
  private listeners: Array<(session: Session) => void> = [];

  constructor(public api: ApiClient) {}

  get token(): string | null {
    return this.user ? this.user.user_id : null;
  }

  onChange(listener: (session: Session) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this);
  }

  async register(displayName: string, expertise: string[]): Promise<UserView> {
    this.user = await this.api.registerUser(displayName, expertise);
    this.notify();
    return this.user;
  }

  async signIn(userId: string): Promise<UserView> {
    this.user = await this.api.getUser(userId);
    this.notify();
    return this.user;
  }

  requireUser(): UserView {
    if (!this.user) throw new Error("not signed in");
    return this.user;
  }

  /** Re-fetch the live balance (and the rest of the user record). */
  async refresh(): Promise<void> {
    if (!this.user) return;
    this.user = await this.api.getUser(this.user.user_id);
    this.notify();
  }

  /** Run one mutating API action, then always re-fetch the balance. */
  async mutate<T>(action: () => Promise<T>): Promise<T> {
    try {
      return await action();
    } finally {
      await this.refresh();
    }
  }

  isIncognito(paperId: string): boolean {
    return this.incognito.get(paperId) ?? false;
  }

  setIncognito(paperId: string, on: boolean): void {
    this.incognito.set(paperId, on);
    this.notify();
  }

  /**
   * The handle this session acts under on a given paper: the real user id,
   * or the server-derived pseudonym when incognito is on for that paper.
   */
  async handleFor(paperId: string): Promise<string> {
    const user = this.requireUser();
    if (!this.isIncognito(paperId)) return user.user_id;
    const cached = this.handles.get(paperId);
    if (cached) return cached;
    const { handle } = await this.api.derivePseudonym(user.user_id, paperId);
    this.handles.set(paperId, handle);
    return handle;
  }
}
