"""Operator command line: serve, admin bootstrap, soundness checks, log export.

Usage errors exit 2 (argparse), runtime errors exit 1.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path

from .access import ADMIN, Identity, User
from .checker import Degenerate, Fails, Holds, check_property, resolve_property
from .errors import GeolabError
from .gateway.config import load_config
from .kernel import parse
from .store import Store, encode_record

ADMIN_USER_ID = "u_admin"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", help="server data directory "
                        "(env GEOLAB_DATA_DIR)")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--log-level", help="log level (default info)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geolab",
                                     description="collaborative geometry "
                                                 "laboratory server")
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the server")
    serve_p.add_argument("--port", type=int)
    serve_p.add_argument("--host", dest="listen_address")
    _add_common(serve_p)

    admin_p = sub.add_parser("admin", help="console administration")
    admin_sub = admin_p.add_subparsers(dest="admin_command", required=True)
    teacher_p = admin_sub.add_parser("create-teacher",
                                     help="bootstrap a teacher account")
    teacher_p.add_argument("name")
    teacher_p.add_argument("--password", help="initial password "
                           "(generated when omitted)")
    teacher_p.add_argument("--locale", default="en")
    _add_common(teacher_p)

    check_p = sub.add_parser("check", help="soundness-check a construction file")
    check_p.add_argument("file")
    check_p.add_argument("--prop", required=True,
                         help="property, e.g. 'equidistant M A B'")
    check_p.add_argument("--trials", type=int, default=200)
    check_p.add_argument("--seed", type=int, default=0)
    _add_common(check_p)

    export_p = sub.add_parser("export-log", help="stream the activity registry")
    export_p.add_argument("--since", help="ISO-8601 UTC lower bound")
    _add_common(export_p)
    return parser


def _config_from(args: argparse.Namespace, **extra):
    overrides = {k: v for k, v in extra.items() if v is not None}
    if getattr(args, "data_dir", None):
        overrides["data_dir"] = args.data_dir
    if getattr(args, "log_level", None):
        overrides["log_level"] = args.log_level
    return load_config(getattr(args, "config", None), **overrides)


def _open_store(args: argparse.Namespace) -> Store:
    config = _config_from(args)
    return Store(config.data_dir, durable=config.durable)


def cmd_serve(args: argparse.Namespace) -> int:
    from .gateway.app import serve

    config = _config_from(args, port=args.port,
                          listen_address=args.listen_address)
    serve(config)
    return 0


def cmd_create_teacher(args: argparse.Namespace) -> int:
    store = _open_store(args)
    admin = store.get_user(ADMIN_USER_ID)
    if admin is None:
        admin = User(user_id=ADMIN_USER_ID, username="admin",
                     password_digest=None, role=ADMIN)
        store.put_user(admin)
    password = args.password or secrets.token_urlsafe(9)
    identity = Identity(store)
    user = identity.create_user(admin, args.name, password, "teacher",
                                locale=args.locale)
    print(f"created teacher {user.username} ({user.user_id})")
    if not args.password:
        print(f"initial password: {password}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    doc = parse(Path(args.file).read_bytes())
    parts = args.prop.split()
    if len(parts) < 2:
        print("--prop needs a kind and step names", file=sys.stderr)
        return 2
    prop = resolve_property(doc, parts[0], parts[1:])
    verdict = check_property(doc, prop, trials=args.trials, seed=args.seed)
    if isinstance(verdict, Holds):
        print(f"Holds ({verdict.samples} samples)")
    elif isinstance(verdict, Fails):
        witness = {str(k): list(v) for k, v in verdict.witness.items()}
        print(f"Fails residual={verdict.residual:.6g} "
              f"witness={json.dumps(witness, sort_keys=True)}")
    elif isinstance(verdict, Degenerate):
        print(f"Degenerate fraction_undefined={verdict.fraction_undefined:.3f}")
    return 0


def cmd_export_log(args: argparse.Namespace) -> int:
    store = _open_store(args)
    for record in store.stream_activity():
        if args.since and record.timestamp < args.since:
            continue
        print(encode_record(record.to_obj()))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "admin":
            return cmd_create_teacher(args)
        if args.command == "check":
            return cmd_check(args)
        if args.command == "export-log":
            return cmd_export_log(args)
    except GeolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
