"""panvas: service runner and admin verbs.

`panvas serve` hosts the HTTP API; the admin verbs (resolve-market,
settle-epoch, tick) talk to a running instance over HTTP.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.error
import urllib.request

from .config import load_config
from .errors import PanvasError


def _post(url: str, body: dict) -> dict:
    request = urllib.request.Request(
        url, data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"}, method="POST",
    )
    try:
        with urllib.request.urlopen(request) as response:
            return json.loads(response.read())
    except urllib.error.HTTPError as exc:
        detail = json.loads(exc.read() or b"{}")
        raise SystemExit(f"{detail.get('code', exc.code)}: {detail.get('message', exc.reason)}")
    except urllib.error.URLError as exc:
        raise SystemExit(f"cannot reach service: {exc.reason}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="panvas")
    parser.add_argument("--config", help="TOML config path (or set PANVAS_CONFIG)")
    parser.add_argument("--url", default=None, help="service base URL for admin verbs")
    sub = parser.add_subparsers(dest="verb", required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument("--ui", help="serve a built web UI from this directory")

    resolve_p = sub.add_parser("resolve-market", help="attest a market outcome")
    resolve_p.add_argument("market_id")
    resolve_p.add_argument("outcome", choices=["accept", "reject"])

    sub.add_parser("settle-epoch", help="close and settle the current epoch")

    tick_p = sub.add_parser("tick", help="advance the logical clock")
    tick_p.add_argument("--by", type=int, default=1)

    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except PanvasError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 2
    base = args.url or f"http://{config.listen_host}:{config.listen_port}"

    if args.verb == "serve":
        from .service import serve
        serve(config, ui_dir=args.ui)
        return 0
    if args.verb == "resolve-market":
        result = _post(
            f"{base}/api/v1/admin/markets/{args.market_id}/resolve",
            {"outcome": args.outcome.upper()},
        )
    elif args.verb == "settle-epoch":
        result = _post(f"{base}/api/v1/admin/settle-epoch", {})
    else:
        result = _post(f"{base}/api/v1/admin/tick", {"by": args.by})
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
