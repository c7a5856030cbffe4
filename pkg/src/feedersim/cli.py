"""Command line entry points.

    feedersim run <scenario.json> [--seed N] [--export out.csv] [--report out.json]
    feedersim serve [--bind HOST:PORT] [--speed F] [--persist PATH]
                    [--scenario FILE] [--ui DIR] [--admin-token T]
    feedersim channels create --name N --fields a,b [--url U] [--token T] ...
    feedersim channels list [--url U] [--token T]

Exit codes: 0 success, 1 scenario violation (an invariant was breached
during the run) or failed remote operation, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import urllib.error
import urllib.request

from .harness import export_series, run_scenario
from .httpd import ADMIN_TOKEN_ENV
from .live import serve_live
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feedersim",
                                     description="Simulated cloud pet feeder")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario headlessly")
    run_p.add_argument("scenario", help="scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario's RNG seed")
    run_p.add_argument("--export", metavar="PATH",
                       help="write the tick series as CSV")
    run_p.add_argument("--report", metavar="PATH",
                       help="write the full run report as JSON")

    serve_p = sub.add_parser("serve", help="serve broker + live device loop")
    serve_p.add_argument("--bind", default="127.0.0.1:8000")
    serve_p.add_argument("--speed", type=float, default=1.0,
                         help="virtual seconds per wall second")
    serve_p.add_argument("--persist", metavar="PATH",
                         help="append-only JSONL persistence log")
    serve_p.add_argument("--scenario", metavar="FILE",
                         help="scripted world events for the live run")
    serve_p.add_argument("--ui", metavar="DIR",
                         help="static dashboard directory to serve at /")
    serve_p.add_argument("--admin-token",
                         default=os.environ.get(ADMIN_TOKEN_ENV),
                         help=f"admin token (default ${ADMIN_TOKEN_ENV} or random)")

    ch_p = sub.add_parser("channels", help="administer a running broker")
    ch_sub = ch_p.add_subparsers(dest="channels_command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--url", default="http://127.0.0.1:8000")
    common.add_argument("--token", default=os.environ.get(ADMIN_TOKEN_ENV),
                        help=f"admin token (default ${ADMIN_TOKEN_ENV})")
    create_p = ch_sub.add_parser("create", parents=[common],
                                 help="create a channel")
    create_p.add_argument("--name", required=True)
    create_p.add_argument("--fields", default="",
                          help="comma-separated field labels (up to 8)")
    create_p.add_argument("--status-note")
    create_p.add_argument("--public", action="store_true")
    create_p.add_argument("--min-interval", type=float)
    ch_sub.add_parser("list", parents=[common], help="list channels with keys")
    return parser


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        scenario.seed = args.seed
    report = run_scenario(scenario)
    if args.export:
        export_series(report, args.export)
    if args.report:
        with open(args.report, "wb") as fh:
            fh.write(report.to_json_bytes())
    print(json.dumps(report.summary, indent=2, sort_keys=True))
    if not report.ok:
        for violation in report.violations:
            print(f"VIOLATION: {violation}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_serve(args) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    scenario = None
    if args.scenario:
        try:
            scenario = load_scenario(args.scenario)
        except ScenarioError as err:
            print(f"scenario error: {err}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        serve_live(scenario=scenario, bind=args.bind, speed=args.speed,
                   persist_path=args.persist, ui_dir=args.ui,
                   admin_token=args.admin_token)
    except OSError as err:
        print(f"cannot serve on {args.bind}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _admin_request(url: str, token: str | None, method: str = "GET",
                   payload: dict | None = None):
    if not token:
        print(f"admin token required (--token or ${ADMIN_TOKEN_ENV})",
              file=sys.stderr)
        return None
    req = urllib.request.Request(f"{url}?api_key={token}" if "?" not in url
                                 else url, method=method)
    data = None
    if payload is not None:
        data = json.dumps(payload).encode()
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, data=data, timeout=10.0) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as err:
        print(f"server rejected request: {err.code} {err.read().decode()}",
              file=sys.stderr)
        return None
    except (urllib.error.URLError, OSError) as err:
        print(f"cannot reach broker: {err}", file=sys.stderr)
        return None


def _cmd_channels(args) -> int:
    base = args.url.rstrip("/")
    if args.channels_command == "create":
        fields = [f for f in args.fields.split(",") if f]
        payload = {"name": args.name, "field_names": fields}
        if args.status_note:
            payload["status_note"] = args.status_note
        if args.public:
            payload["public"] = True
        if args.min_interval is not None:
            payload["min_interval"] = args.min_interval
        result = _admin_request(f"{base}/channels", args.token,
                                method="POST", payload=payload)
    else:
        result = _admin_request(f"{base}/channels", args.token)
    if result is None:
        return EXIT_VIOLATION
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "serve":
        return _cmd_serve(args)
    return _cmd_channels(args)


if __name__ == "__main__":
    sys.exit(main())
