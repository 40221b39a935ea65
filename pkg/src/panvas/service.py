"""JSON-over-HTTP facade: every mutating endpoint maps to exactly one
platform command, appended to the event log before acknowledgement.

Errors are returned as ``{code, message}`` with domain codes verbatim.
The Idempotency-Key header is honored on every POST.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import errors
from .errors import PanvasError
from .config import ServiceConfig
from .eventlog import Store

_NOT_FOUND = {
    errors.UNKNOWN_ACCOUNT, errors.UNKNOWN_USER, errors.UNKNOWN_PAPER,
    errors.UNKNOWN_FRAGMENT, errors.UNKNOWN_ANCHOR, errors.UNKNOWN_BOUNTY,
    errors.UNKNOWN_ASSIGNMENT, errors.UNKNOWN_REVIEW, errors.UNKNOWN_THREAD,
    errors.UNKNOWN_MARKET, errors.UNKNOWN_TARGET, errors.UNKNOWN_HANDLE,
    errors.UNKNOWN_PARENT, errors.UNKNOWN_COMMAND,
}
_CONFLICT = {
    errors.DUPLICATE_OWNER, errors.DUPLICATE, errors.DUPLICATE_BID,
    errors.DUPLICATE_MARKET, errors.DUPLICATE_FLAG, errors.DUPLICATE_LINK,
    errors.ALREADY_SETTLED, errors.ALREADY_VIP, errors.ALREADY_RESOLVED,
    errors.EPOCH_ALREADY_SETTLED, errors.EPOCH_NOT_CURRENT, errors.LICENSE_EXISTS,
    errors.PAPER_FROZEN, errors.BOUNTY_CLOSED, errors.MARKET_CLOSED,
    errors.NOT_CLOSED, errors.NO_BIDS, errors.DEADLINE_PASSED, errors.PARENT_HIDDEN,
}
_PAYMENT = {errors.INSUFFICIENT_FUNDS, errors.TREASURY_EXHAUSTED}


def _status_for(code: str) -> int:
    if code in _NOT_FOUND:
        return 404
    if code in _CONFLICT:
        return 409
    if code in _PAYMENT:
        return 402
    return 400


def create_app(store: Store, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="panvas", docs_url=None, redoc_url=None)
    platform = store.platform

    @app.exception_handler(PanvasError)
    async def _domain_error(_request: Request, exc: PanvasError):
        return JSONResponse(
            status_code=_status_for(exc.code),
            content={"code": exc.code, "message": exc.message},
        )

    async def run(request: Request, kind: str, extra: Optional[dict] = None) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError:
            body = {}
        if not isinstance(body, dict):
            raise PanvasError(errors.VALIDATION, "request body must be a JSON object")
        if extra:
            body.update(extra)
        key = request.headers.get("Idempotency-Key")
        return store.execute(kind, body, idempotency_key=key)

    api = "/api/v1"

    # -- identity ---------------------------------------------------------

    @app.post(f"{api}/users")
    async def post_user(request: Request):
        return await run(request, "register_user")

    @app.get(f"{api}/users/{{user_id}}")
    async def get_user(user_id: str):
        return platform.user_view(user_id)

    @app.post(f"{api}/users/{{user_id}}/role")
    async def post_role(user_id: str, request: Request):
        return await run(request, "assign_role", {"user": user_id})

    @app.post(f"{api}/users/{{user_id}}/license")
    async def post_license(user_id: str, request: Request):
        return await run(request, "grant_license", {"user": user_id})

    @app.post(f"{api}/users/{{user_id}}/license/revoke")
    async def post_license_revoke(user_id: str, request: Request):
        return await run(request, "revoke_license", {"user": user_id})

    @app.post(f"{api}/users/{{user_id}}/vip")
    async def post_vip(user_id: str, request: Request):
        return await run(request, "purchase_vip", {"user": user_id})

    @app.post(f"{api}/pseudonyms")
    async def post_pseudonym(request: Request):
        return await run(request, "derive_pseudonym")

    # -- papers ------------------------------------------------------------

    @app.get(f"{api}/papers/ranked")
    async def get_papers_ranked():
        return platform.ranked_papers()

    @app.post(f"{api}/papers")
    async def post_paper(request: Request):
        return await run(request, "submit_paper")

    @app.get(f"{api}/papers/{{paper_id}}")
    async def get_paper(paper_id: str):
        return platform.paper_view(paper_id)

    @app.get(f"{api}/papers/{{paper_id}}/document")
    async def get_document(paper_id: str):
        return platform.document_view(paper_id)

    @app.get(f"{api}/papers/{{paper_id}}/ratings")
    async def get_ratings(paper_id: str):
        platform.papers.paper(paper_id)
        return platform.engagement.summarize_ratings(paper_id)

    @app.post(f"{api}/papers/{{paper_id}}/freeze")
    async def post_freeze(paper_id: str, request: Request):
        return await run(request, "freeze_paper", {"paper": paper_id})

    @app.post(f"{api}/fragments")
    async def post_fragment(request: Request):
        return await run(request, "add_fragment")

    @app.get(f"{api}/fragments/{{fragment_id}}")
    async def get_fragment(fragment_id: str):
        return platform.fragment_view(fragment_id)

    @app.post(f"{api}/fragments/{{fragment_id}}/revise")
    async def post_revise(fragment_id: str, request: Request):
        return await run(request, "revise_fragment", {"fragment": fragment_id})

    @app.post(f"{api}/links")
    async def post_link(request: Request):
        return await run(request, "link_fragment")

    @app.get(f"{api}/papers/{{paper_id}}/links")
    async def get_links(paper_id: str):
        platform.papers.paper(paper_id)
        return [
            {"parent": link.parent, "child": link.child, "order_index": link.order_index}
            for link in platform.papers.links[paper_id]
        ]

    @app.post(f"{api}/anchors")
    async def post_anchor(request: Request):
        return await run(request, "create_anchor")

    @app.get(f"{api}/anchors/{{anchor_id}}")
    async def get_anchor(anchor_id: str):
        fragment, revision, span_text = platform.papers.resolve_anchor(anchor_id)
        return {
            "fragment_id": fragment.fragment_id,
            "paper_id": fragment.paper_id,
            "revision": revision,
            "text": fragment.at(revision).text,
            "span_text": span_text,
        }

    # -- review market ---------------------------------------------------------

    @app.post(f"{api}/bounties")
    async def post_bounty(request: Request):
        return await run(request, "post_bounty")

    @app.get(f"{api}/bounties")
    async def get_bounties():
        return [platform.bounty_view(b.bounty_id) for b in platform.reviews.board()]

    @app.get(f"{api}/bounties/{{bounty_id}}")
    async def get_bounty(bounty_id: str):
        return platform.bounty_view(bounty_id)

    @app.post(f"{api}/bounties/{{bounty_id}}/bids")
    async def post_bid(bounty_id: str, request: Request):
        return await run(request, "place_bid", {"bounty": bounty_id})

    @app.post(f"{api}/bounties/{{bounty_id}}/match")
    async def post_match(bounty_id: str, request: Request):
        return await run(request, "match_reviewers", {"bounty": bounty_id})

    @app.post(f"{api}/reviews")
    async def post_review(request: Request):
        return await run(request, "submit_review")

    @app.get(f"{api}/reviews/{{review_id}}")
    async def get_review(review_id: str):
        return platform.review_view(review_id)

    @app.post(f"{api}/meta-reviews")
    async def post_meta_review(request: Request):
        return await run(request, "submit_meta_review")

    # -- engagement ---------------------------------------------------------------

    @app.post(f"{api}/ratings")
    async def post_rating(request: Request):
        return await run(request, "cast_rating")

    @app.post(f"{api}/threads")
    async def post_thread(request: Request):
        return await run(request, "open_thread")

    @app.get(f"{api}/threads/{{thread_id}}")
    async def get_thread(thread_id: str):
        thread = platform.engagement.thread(thread_id)
        return {
            "thread_id": thread.thread_id,
            "anchor_id": thread.anchor_id,
            "paper_id": thread.paper_id,
            "comments": platform.engagement.thread_tree(thread_id),
        }

    @app.post(f"{api}/threads/{{thread_id}}/comments")
    async def post_comment(thread_id: str, request: Request):
        return await run(request, "post_comment", {"thread": thread_id})

    @app.post(f"{api}/reactions")
    async def post_reaction(request: Request):
        return await run(request, "react")

    # -- prediction markets ------------------------------------------------------

    @app.post(f"{api}/markets")
    async def post_market(request: Request):
        return await run(request, "open_market")

    @app.get(f"{api}/markets")
    async def get_markets():
        return [platform.market_view(m) for m in sorted(platform.markets.markets)]

    @app.get(f"{api}/markets/{{market_id}}")
    async def get_market(market_id: str):
        return platform.market_view(market_id)

    @app.post(f"{api}/markets/{{market_id}}/stakes")
    async def post_stake(market_id: str, request: Request):
        return await run(request, "place_stake", {"market": market_id})

    # -- moderation -----------------------------------------------------------------

    @app.post(f"{api}/flags")
    async def post_flag(request: Request):
        return await run(request, "flag_content")

    @app.get(f"{api}/moderation/{{target}}")
    async def get_moderation(target: str):
        return platform.moderation.view(target)

    # -- admin ------------------------------------------------------------------------

    @app.post(f"{api}/admin/markets/{{market_id}}/resolve")
    async def post_resolve(market_id: str, request: Request):
        return await run(request, "resolve_market", {"market": market_id})

    @app.post(f"{api}/admin/settle-epoch")
    async def post_settle(request: Request):
        return await run(request, "settle_epoch")

    @app.post(f"{api}/admin/tick")
    async def post_tick(request: Request):
        return await run(request, "tick")

    @app.post(f"{api}/admin/grant")
    async def post_grant(request: Request):
        return await run(request, "grant")

    @app.post(f"{api}/admin/moderation/{{target}}/override")
    async def post_override(target: str, request: Request):
        return await run(request, "moderation_override", {"target": target})

    # -- ledger and health ------------------------------------------------------------

    @app.get(f"{api}/ledger/balance-sheet")
    async def get_balance_sheet():
        return platform.ledger.balance_sheet()

    @app.get(f"{api}/ledger/transactions")
    async def get_transactions():
        return PlainTextResponse(
            "\n".join(platform.ledger.export_log()) + "\n",
            media_type="application/x-ndjson",
        )

    @app.get(f"{api}/healthz")
    async def get_healthz():
        return {"status": "ok", "sequence": store.sequence, "now": platform.now}

    @app.get(f"{api}/whoami")
    async def get_whoami(request: Request):
        # Minimal auth: bearer tokens map 1:1 to user ids.
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise PanvasError(errors.VALIDATION, "expected Authorization: Bearer <user id>")
        return platform.user_view(header.removeprefix("Bearer ").strip())

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def build_store(config: ServiceConfig) -> Store:
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = Store(config, data_dir / "events.ndjson")
    if store.recovered_tail:
        print(f"recovered truncated event log; last complete sequence {store.sequence}")
    return store


def serve(config: ServiceConfig, ui_dir: Optional[str] = None) -> None:
    import uvicorn

    try:
        store = build_store(config)
    except PanvasError as exc:
        # Refusing to start on a corrupt log is deliberate: the log is the
        # source of truth, silently skipping records would fork history.
        raise SystemExit(f"{exc.code}: {exc.message}")
    app = create_app(store, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="warning")
    except OSError as exc:
        raise SystemExit(f"{errors.BIND_FAILURE}: {exc}")
    finally:
        store.close()
