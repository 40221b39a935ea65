"""panvas-sim: run seeded economy scenarios and verify event logs.

Exit codes: 0 ok, 1 invariant violation, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import PanvasError
from .harness import ScenarioConfig, load_scenario, run_scenario, verify_log


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="panvas-sim")
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run a scenario and emit a report")
    run_p.add_argument("--config", help="scenario TOML (defaults apply when omitted)")
    run_p.add_argument("--out", help="write the report JSON here (stdout otherwise)")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--log", help="also write the event log here")

    verify_p = sub.add_parser("verify", help="replay a log and re-check every invariant")
    verify_p.add_argument("--log", required=True)
    verify_p.add_argument("--final-only", action="store_true",
                          help="check invariants once at the end instead of per event")

    args = parser.parse_args(argv)

    if args.verb == "run":
        try:
            config = load_scenario(args.config) if args.config else ScenarioConfig()
            if args.seed is not None:
                config.seed = args.seed
            if args.log:
                config.log_path = args.log
            report = run_scenario(config)
        except PanvasError as exc:
            if exc.code == "INVARIANT_VIOLATION":
                print(exc.message, file=sys.stderr)
                return 1
            print(f"{exc.code}: {exc.message}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"bad input: {exc}", file=sys.stderr)
            return 2
        payload = report.to_json()
        if args.out:
            Path(args.out).write_text(payload, encoding="utf-8")
        else:
            sys.stdout.write(payload)
        return 0 if report.all_invariants_pass else 1

    try:
        result = verify_log(args.log, check_every_event=not args.final_only)
    except PanvasError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0 if result["passed"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
