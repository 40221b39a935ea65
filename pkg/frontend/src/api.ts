/**
 * Typed client for the panvas JSON API. Every method maps to exactly one
 * /api/v1 call; server error bodies ({code, message}) surface verbatim as
 * ApiError so views can show the module error codes unchanged.
 */

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface UserView {
  user_id: string;
  display_name: string;
  role: string;
  expertise: string[];
  reputation: number;
  licensed: boolean;
  account_id: string;
  balance: number;
  vip: boolean;
}

export interface PaperView {
  paper_id: string;
  title: string;
  authors: string[];
  status: string;
  created_at: number;
}

export interface FragmentView {
  fragment_id: string;
  paper_id: string;
  kind: string;
  revision: number;
  text: string | null;
  blob_digest: string | null;
}

export interface DocumentView {
  paper_id: string;
  fragments: FragmentView[];
}

export interface RatingSummary {
  paper_id: string;
  count: number;
  means: Record<string, number> | null;
}

export interface BidView {
  bid_id: string;
  reviewer: string;
  ask: number;
  placed_at: number;
}

export interface AssignmentView {
  assignment_id: string;
  bounty_id: string;
  reviewer: string;
  match_score: number;
  slot_index: number;
  ask: number;
  state: string;
}

export interface BountyView {
  bounty_id: string;
  paper_id: string;
  poster_account: string;
  reward: number;
  required_fields: string[];
  slots: number;
  per_slot: number;
  deadline: number;
  state: string;
  bids: BidView[];
  assignments: AssignmentView[];
}

export interface MarketView {
  market_id: string;
  paper_id: string;
  venue: string;
  state: string;
  accept: number;
  reject: number;
  pool: number;
  close_time: number;
  fee_bps: number;
  outcome?: string;
  fee_taken?: number;
}

export interface CommentNode {
  comment_id: string;
  author: string | null;
  text: string;
  hidden: boolean;
  created_at: number;
  replies: CommentNode[];
}

export interface ThreadView {
  thread_id: string;
  anchor_id: string;
  paper_id: string;
  comments: CommentNode[];
}

export interface BalanceSheet {
  treasury: number;
  escrow: number;
  user_total: number;
  grand_total: number;
  genesis_total: number;
  epoch: number;
}

export interface RankedPaper extends PaperView {
  visibility_score: number;
}

export interface ModerationView {
  target: string;
  score: number;
  components: Record<string, number>;
  action: string;
  flag_count: number;
}

export type Scores = { ORIGINALITY: number; SOUNDNESS: number; IMPACT: number };

export class ApiClient {
  private fetchImpl: FetchLike;

  constructor(public baseUrl: string, fetchImpl?: FetchLike) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, init);
    const text = await response.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      throw new ApiError("BAD_RESPONSE", `unparseable response from ${path}`, response.status);
    }
    if (!response.ok) {
      const err = parsed as { code?: string; message?: string } | null;
      throw new ApiError(err?.code ?? "HTTP_ERROR", err?.message ?? response.statusText, response.status);
    }
    return parsed as T;
  }

  get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path);
  }

  post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>("POST", path, body);
  }

  // identity
  registerUser(displayName: string, expertise: string[]): Promise<UserView> {
    return this.post("/users", { display_name: displayName, expertise });
  }
  getUser(userId: string): Promise<UserView> {
    return this.get(`/users/${userId}`);
  }
  assignRole(userId: string, role: string): Promise<UserView> {
    return this.post(`/users/${userId}/role`, { role });
  }
  grantLicense(userId: string, fields: string[], examScore: number): Promise<unknown> {
    return this.post(`/users/${userId}/license`, { fields, exam_score: examScore });
  }
  purchaseVip(userId: string): Promise<unknown> {
    return this.post(`/users/${userId}/vip`, {});
  }
  derivePseudonym(userId: string, paperId: string): Promise<{ handle: string }> {
    return this.post("/pseudonyms", { user: userId, paper: paperId });
  }

  // papers
  submitPaper(title: string, authors: string[]): Promise<PaperView> {
    return this.post("/papers", { title, authors });
  }
  getPaper(paperId: string): Promise<PaperView> {
    return this.get(`/papers/${paperId}`);
  }
  getDocument(paperId: string): Promise<DocumentView> {
    return this.get(`/papers/${paperId}/document`);
  }
  getRatings(paperId: string): Promise<RatingSummary> {
    return this.get(`/papers/${paperId}/ratings`);
  }
  rankedPapers(): Promise<RankedPaper[]> {
    return this.get("/papers/ranked");
  }
  addFragment(paperId: string, kind: string, content: string, author: string): Promise<FragmentView> {
    return this.post("/fragments", { paper: paperId, kind, content, author });
  }
  linkFragment(parent: string | null, child: string, orderIndex: number): Promise<unknown> {
    return this.post("/links", { parent, child, order_index: orderIndex });
  }
  createAnchor(fragmentId: string, revision: number): Promise<{ anchor_id: string }> {
    return this.post("/anchors", { fragment: fragmentId, revision });
  }

  // review market
  postBounty(paperId: string, poster: string, reward: number, requiredFields: string[],
             slots: number, deadline: number): Promise<BountyView> {
    return this.post("/bounties", {
      paper: paperId, poster, reward, required_fields: requiredFields, slots, deadline,
    });
  }
  listBounties(): Promise<BountyView[]> {
    return this.get("/bounties");
  }
  placeBid(bountyId: string, reviewer: string, ask: number): Promise<BidView> {
    return this.post(`/bounties/${bountyId}/bids`, { reviewer, ask });
  }
  matchReviewers(bountyId: string): Promise<{ assignments: AssignmentView[] }> {
    return this.post(`/bounties/${bountyId}/match`, {});
  }
  submitReview(assignmentId: string, scores: Scores, text: string): Promise<{ review_id: string; paid: number }> {
    return this.post("/reviews", { assignment: assignmentId, scores, text });
  }
  submitMetaReview(reviewId: string, rater: string, quality: number): Promise<unknown> {
    return this.post("/meta-reviews", { review: reviewId, rater, quality });
  }

  // engagement
  castRating(paperId: string, rater: string, scores: Scores): Promise<unknown> {
    return this.post("/ratings", { paper: paperId, rater, scores });
  }
  openThread(anchorId: string): Promise<ThreadView> {
    return this.post("/threads", { anchor: anchorId });
  }
  getThread(threadId: string): Promise<ThreadView> {
    return this.get(`/threads/${threadId}`);
  }
  postComment(threadId: string, author: string, text: string, parent?: string): Promise<{ comment_id: string; author: string }> {
    const body: Record<string, unknown> = { author, text };
    if (parent) body.parent = parent;
    return this.post(`/threads/${threadId}/comments`, body);
  }
  react(target: string, reactor: string, emoji: string): Promise<{ added: boolean; counts: Record<string, number> }> {
    return this.post("/reactions", { target, reactor, emoji });
  }

  // prediction markets
  openMarket(paperId: string, venue: string, closeTime: number): Promise<MarketView> {
    return this.post("/markets", { paper: paperId, venue, close_time: closeTime });
  }
  listMarkets(): Promise<MarketView[]> {
    return this.get("/markets");
  }
  getMarket(marketId: string): Promise<MarketView> {
    return this.get(`/markets/${marketId}`);
  }
  placeStake(marketId: string, staker: string, side: string, amount: number): Promise<{ stake_id: string; balance: number }> {
    return this.post(`/markets/${marketId}/stakes`, { staker, side, amount });
  }

  // moderation
  flagContent(target: string, flagger: string, reason: string): Promise<unknown> {
    return this.post("/flags", { target, flagger, reason });
  }
  getModeration(target: string): Promise<ModerationView> {
    return this.get(`/moderation/${target}`);
  }

  // admin
  resolveMarket(marketId: string, outcome: string): Promise<unknown> {
    return this.post(`/admin/markets/${marketId}/resolve`, { outcome });
  }
  settleEpoch(): Promise<{ epoch: number; minted: number }> {
    return this.post("/admin/settle-epoch", {});
  }
  tick(by: number): Promise<{ now: number }> {
    return this.post("/admin/tick", { by });
  }
  grant(to: string, amount: number): Promise<unknown> {
    return this.post("/admin/grant", { to, amount });
  }
  overrideModeration(target: string, kind: string, moderator: string): Promise<unknown> {
    return this.post(`/admin/moderation/${target}/override`, { kind, moderator });
  }

  // ledger / health
  balanceSheet(): Promise<BalanceSheet> {
    return this.get("/ledger/balance-sheet");
  }
  healthz(): Promise<{ status: string; sequence: number; now: number }> {
    return this.get("/healthz");
  }
}
