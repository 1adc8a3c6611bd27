"""The network face of the server: request API, session channel, health.

One port serves everything.  Requests and responses are single structured
text records (the same canonical JSON encoding construction files use);
the session channel carries one record per websocket message.  Every
mutating verb requires a valid token; errors use stable machine-readable
codes (AUTH, PERM, NOTFOUND, CONFLICT, VALIDATION, LOCK) and responses echo
the request's correlation id.
"""

from __future__ import annotations

import asyncio
import json
import time
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from .. import PROTOCOL_VERSION, __version__
from ..access import (
    Identity,
    User,
    check_access,
    format_permissions,
    parse_permissions,
    READ,
)
from ..checker import PropertySpec, Degenerate, Fails, Holds, check_property
from ..errors import (
    AccessDenied,
    AuthError,
    Conflict,
    GeolabError,
    NotFound,
    ValidationError,
)
from ..kernel import ConstructionDocument, doc_from_obj, doc_to_obj
from ..session import SessionHub
from ..store import Store, encode_record
from .config import ServerConfig

API_VERBS = frozenset({
    "auth", "user-create", "group-create", "group-delete", "group-set-members",
    "construction-save", "construction-load", "construction-update",
    "construction-delete", "construction-list", "perm-set", "attach", "detach",
    "check", "session-open", "session-close", "session-list",
})

CHANNEL_TYPES = frozenset({
    "join", "leave", "lock-request", "lock-release", "force-transfer",
    "edit", "chat", "snapshot-request", "heartbeat",
})


class Runtime:
    def __init__(self, config: ServerConfig, store: Store | None = None):
        self.config = config
        self.store = store or Store(config.data_dir, durable=config.durable)
        self.identity = Identity(self.store,
                                 token_ttl_seconds=config.token_ttl_seconds,
                                 hash_iterations=config.hash_iterations)
        self.hub = SessionHub(self.store,
                              heartbeat_timeout=config.heartbeat_timeout_seconds)
        self.started_at = time.monotonic()


def _field(payload: dict, name: str, kind, where: str = "payload"):
    value = payload.get(name)
    bool_mismatch = isinstance(value, bool) and kind is not bool
    if not isinstance(value, kind) or bool_mismatch:
        raise ValidationError(f"{where}.{name}: missing or wrong type")
    return value


def _opt_field(payload: dict, name: str, kind, default):
    value = payload.get(name, default)
    if value is None:
        return default
    if not isinstance(value, kind):
        raise ValidationError(f"payload.{name}: wrong type")
    return value


def _decode_doc(payload: dict, runtime: Runtime,
                key: str = "doc") -> ConstructionDocument:
    obj = payload.get(key)
    if obj is None:
        raise ValidationError(f"payload.{key}: missing")
    doc = doc_from_obj(obj, path=f"payload.{key}")
    bound = runtime.config.coordinate_bound
    for s in doc.steps:
        if s.is_free_point() and (abs(s.x) > bound or abs(s.y) > bound):
            raise ValidationError(
                f"payload.{key}: step {s.id} exceeds the coordinate bound {bound}")
    return doc


def _meta_to_wire(runtime: Runtime, meta) -> dict[str, Any]:
    return {"construction_id": meta.construction_id, "owner": meta.owner,
            "name": meta.name,
            "permissions": format_permissions(meta.permissions),
            "attached_groups": sorted(meta.attached_groups),
            "created_at": meta.created_at, "modified_at": meta.modified_at,
            "revision": runtime.store.revision_of(meta.construction_id)}


def _verdict_to_wire(verdict) -> dict[str, Any]:
    if isinstance(verdict, Holds):
        return {"verdict": "holds", "samples": verdict.samples}
    if isinstance(verdict, Fails):
        return {"verdict": "fails", "residual": verdict.residual,
                "witness": {str(k): [v[0], v[1]]
                            for k, v in verdict.witness.items()}}
    assert isinstance(verdict, Degenerate)
    return {"verdict": "degenerate",
            "fraction_undefined": verdict.fraction_undefined}


# -- request API handlers ------------------------------------------------------


def _handle_auth(runtime: Runtime, _: User | None, payload: dict) -> dict:
    username = _field(payload, "username", str)
    password = _field(payload, "password", str)
    token, user = runtime.identity.authenticate(username, password)
    return {"token": token, "user_id": user.user_id, "role": user.role,
            "locale": user.locale,
            "token_ttl_seconds": runtime.config.token_ttl_seconds}


def _handle_user_create(runtime: Runtime, actor: User, payload: dict) -> dict:
    user = runtime.identity.create_user(
        actor, _field(payload, "username", str), _field(payload, "password", str),
        _field(payload, "role", str), _opt_field(payload, "locale", str, "en"))
    return {"user_id": user.user_id, "username": user.username,
            "role": user.role, "locale": user.locale}


def _handle_group_create(runtime: Runtime, actor: User, payload: dict) -> dict:
    group = runtime.identity.create_group(actor, _field(payload, "name", str))
    return {"group_id": group.group_id, "name": group.name,
            "owner": group.owner, "members": sorted(group.effective_members())}


def _handle_group_delete(runtime: Runtime, actor: User, payload: dict) -> dict:
    runtime.identity.delete_group(actor, _field(payload, "group_id", str))
    return {}


def _handle_group_set_members(runtime: Runtime, actor: User, payload: dict) -> dict:
    members = _field(payload, "members", list)
    if not all(isinstance(m, str) for m in members):
        raise ValidationError("payload.members: expected user ids")
    group = runtime.identity.set_membership(
        actor, _field(payload, "group_id", str), members)
    return {"group_id": group.group_id,
            "members": sorted(group.effective_members())}


def _handle_construction_save(runtime: Runtime, actor: User, payload: dict) -> dict:
    doc = _decode_doc(payload, runtime)
    stored = runtime.store.save_construction(
        actor.user_id, _field(payload, "name", str), doc)
    return {"meta": _meta_to_wire(runtime, stored.meta)}


def _handle_construction_load(runtime: Runtime, actor: User, payload: dict) -> dict:
    stored = runtime.store.load_construction(
        actor.user_id, _field(payload, "construction_id", str))
    return {"meta": _meta_to_wire(runtime, stored.meta),
            "doc": doc_to_obj(stored.doc)}


def _handle_construction_update(runtime: Runtime, actor: User, payload: dict) -> dict:
    doc = _decode_doc(payload, runtime)
    stored = runtime.store.update_construction(
        actor.user_id, _field(payload, "construction_id", str), doc,
        _field(payload, "expected_revision", int))
    return {"meta": _meta_to_wire(runtime, stored.meta)}


def _handle_construction_delete(runtime: Runtime, actor: User, payload: dict) -> dict:
    runtime.store.delete_construction(
        actor.user_id, _field(payload, "construction_id", str))
    return {}


def _handle_construction_list(runtime: Runtime, actor: User, payload: dict) -> dict:
    metas = runtime.store.list_visible(actor.user_id)
    return {"constructions": [_meta_to_wire(runtime, m) for m in metas]}


def _handle_perm_set(runtime: Runtime, actor: User, payload: dict) -> dict:
    triple = parse_permissions(_field(payload, "permissions", str))
    meta = runtime.identity.set_permissions(
        actor, _field(payload, "construction_id", str), triple)
    return {"meta": _meta_to_wire(runtime, meta)}


def _handle_attach(runtime: Runtime, actor: User, payload: dict) -> dict:
    meta = runtime.identity.attach_group(
        actor, _field(payload, "construction_id", str),
        _field(payload, "group_id", str))
    return {"meta": _meta_to_wire(runtime, meta)}


def _handle_detach(runtime: Runtime, actor: User, payload: dict) -> dict:
    meta = runtime.identity.detach_group(
        actor, _field(payload, "construction_id", str),
        _field(payload, "group_id", str))
    return {"meta": _meta_to_wire(runtime, meta)}


def _handle_check(runtime: Runtime, actor: User, payload: dict) -> dict:
    cid = _field(payload, "construction_id", str)
    meta = runtime.store.get_meta(cid)
    if meta is None:
        raise NotFound(f"unknown construction {cid}")
    if not check_access(actor.user_id, meta, READ, runtime.store.groups()):
        raise AccessDenied("read permission denied")
    prop_obj = _field(payload, "prop", dict)
    kind = _field(prop_obj, "kind", str, where="payload.prop")
    args = _field(prop_obj, "args", list, where="payload.prop")
    if not all(isinstance(a, int) for a in args):
        raise ValidationError("payload.prop.args: expected step ids")
    trials = _opt_field(payload, "trials", int, 200)
    seed = _opt_field(payload, "seed", int, 0)
    stored = runtime.store.get_construction(cid)
    verdict = check_property(stored.doc, PropertySpec(kind, tuple(args)),
                             trials, seed)
    runtime.store.append_activity(actor.user_id, "check",
                                  {"construction_id": cid, "kind": kind,
                                   "args": args, "trials": trials, "seed": seed,
                                   "verdict": _verdict_to_wire(verdict)["verdict"]})
    return _verdict_to_wire(verdict)


def _handle_session_open(runtime: Runtime, actor: User, payload: dict) -> dict:
    view = runtime.hub.open_session(actor.user_id,
                                    _field(payload, "group_id", str),
                                    _field(payload, "construction_id", str))
    return {"session_id": view.session_id, "seq": view.seq, "lock": view.lock}


def _handle_session_close(runtime: Runtime, actor: User, payload: dict) -> dict:
    persist = payload.get("persist", True)
    if not isinstance(persist, bool):
        raise ValidationError("payload.persist: expected a boolean")
    revision = runtime.hub.close_session(
        actor.user_id, _field(payload, "session_id", str), persist)
    return {"revision": revision}


def _handle_session_list(runtime: Runtime, actor: User, payload: dict) -> dict:
    views = runtime.hub.live_sessions(actor.user_id)
    return {"sessions": [{"session_id": v.session_id, "group_id": v.group_id,
                          "construction_id": v.construction_id, "seq": v.seq,
                          "lock": v.lock, "present": v.present,
                          "started_by": v.started_by} for v in views]}


_HANDLERS = {
    "auth": _handle_auth,
    "user-create": _handle_user_create,
    "group-create": _handle_group_create,
    "group-delete": _handle_group_delete,
    "group-set-members": _handle_group_set_members,
    "construction-save": _handle_construction_save,
    "construction-load": _handle_construction_load,
    "construction-update": _handle_construction_update,
    "construction-delete": _handle_construction_delete,
    "construction-list": _handle_construction_list,
    "perm-set": _handle_perm_set,
    "attach": _handle_attach,
    "detach": _handle_detach,
    "check": _handle_check,
    "session-open": _handle_session_open,
    "session-close": _handle_session_close,
    "session-list": _handle_session_list,
}


def _error_obj(exc: GeolabError) -> dict[str, Any]:
    error: dict[str, Any] = {"code": exc.code, "message": str(exc)}
    if isinstance(exc, Conflict) and exc.current_revision is not None:
        error["current_revision"] = exc.current_revision
    return error


def route(runtime: Runtime, record: Any) -> dict[str, Any]:
    """Dispatch one request record to its verb handler."""
    correlation = None
    try:
        if not isinstance(record, dict):
            raise ValidationError("request: expected a record object")
        correlation = record.get("correlation_id")
        if record.get("protocol_version") != PROTOCOL_VERSION:
            raise ValidationError(
                f"request.protocol_version: expected {PROTOCOL_VERSION}")
        verb = record.get("verb")
        if verb not in API_VERBS:
            raise ValidationError(f"request.verb: unknown verb {verb!r}")
        payload = record.get("payload", {})
        if not isinstance(payload, dict):
            raise ValidationError("request.payload: expected an object")
        actor = None
        if verb != "auth":
            actor = runtime.identity.resolve(record.get("token"))
        result = _HANDLERS[verb](runtime, actor, payload)
        return {"ok": True, "correlation_id": correlation, "payload": result}
    except GeolabError as exc:
        return {"ok": False, "correlation_id": correlation,
                "error": _error_obj(exc)}


def create_app(config: ServerConfig, store: Store | None = None) -> FastAPI:
    runtime = Runtime(config, store)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        # graceful shutdown: persist open sessions, registry is already durable
        runtime.hub.close_all(persist=True)

    app = FastAPI(lifespan=lifespan)
    app.state.runtime = runtime

    @app.get("/health")
    async def health() -> JSONResponse:
        return JSONResponse({
            "status": "ok", "version": __version__,
            "protocol_version": PROTOCOL_VERSION,
            "uptime_seconds": time.monotonic() - runtime.started_at})

    @app.post("/api")
    async def api(request: Request) -> Response:
        body = await request.body()
        try:
            record = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            return Response(
                encode_record({"ok": False, "correlation_id": None,
                               "error": {"code": "VALIDATION",
                                         "message": f"malformed record: {exc}"}}),
                status_code=400, media_type="application/json")
        response = route(runtime, record)
        return Response(encode_record(response), media_type="application/json")

    @app.websocket("/channel")
    async def channel(ws: WebSocket) -> None:
        await ws.accept()
        await ws.send_text(encode_record({
            "type": "hello", "protocol_version": PROTOCOL_VERSION,
            "version": __version__}))
        loop = asyncio.get_running_loop()
        state: dict[str, Any] = {"session_id": None, "user_id": None,
                                 "pump": None}

        async def send(obj: dict[str, Any]) -> None:
            await ws.send_text(encode_record(obj))

        async def pump(mailbox) -> None:
            event = asyncio.Event()
            mailbox.notify = lambda: loop.call_soon_threadsafe(event.set)
            try:
                while True:
                    for item in mailbox.drain():
                        await send(item)
                    if mailbox.closed:
                        break
                    await event.wait()
                    event.clear()
            except Exception:  # connection went away; leave() cleans up
                pass

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict):
                        raise ValidationError("channel: expected a record object")
                    mtype = message.get("type")
                    if mtype not in CHANNEL_TYPES:
                        raise ValidationError(f"channel.type: unknown {mtype!r}")
                    user = runtime.identity.resolve(message.get("token"))
                    reply = _channel_message(runtime, state, user, mtype, message)
                    if reply is not None:
                        await send(reply)
                    if mtype == "join":
                        if state["pump"] is not None:
                            state["pump"].cancel()
                        mailbox = runtime.hub.mailbox_of(state["session_id"],
                                                         state["user_id"])
                        state["pump"] = asyncio.create_task(pump(mailbox))
                    if mtype == "leave":
                        break
                except GeolabError as exc:
                    await send({"type": "error", **_error_obj(exc)})
                except ValueError as exc:
                    await send({"type": "error",
                                "code": "VALIDATION",
                                "message": f"malformed record: {exc}"})
        except WebSocketDisconnect:
            pass
        finally:
            if state["pump"] is not None:
                state["pump"].cancel()
            if state["session_id"] and state["user_id"]:
                try:
                    runtime.hub.leave(state["user_id"], state["session_id"])
                except GeolabError:
                    pass

    return app


def _channel_message(runtime: Runtime, state: dict, user: User, mtype: str,
                     message: dict) -> dict[str, Any] | None:
    hub = runtime.hub
    if mtype == "join":
        session_id = message.get("session_id")
        if not isinstance(session_id, str):
            raise ValidationError("channel.session_id: missing")
        snapshot = hub.join(user.user_id, session_id)
        state["session_id"] = session_id
        state["user_id"] = user.user_id
        return snapshot
    if mtype == "heartbeat":
        if state["session_id"]:
            hub.touch(user.user_id, state["session_id"])
        return {"type": "heartbeat-ack"}
    session_id = state["session_id"]
    if session_id is None:
        raise ValidationError("join the channel to a session first")
    if mtype == "leave":
        hub.leave(user.user_id, session_id)
        state["session_id"] = None
        return {"type": "left"}
    if mtype == "lock-request":
        outcome, position = hub.request_lock(user.user_id, session_id)
        return {"type": "lock-result", "outcome": outcome, "position": position}
    if mtype == "lock-release":
        hub.release_lock(user.user_id, session_id)
        return None
    if mtype == "force-transfer":
        to = message.get("to")
        if not isinstance(to, str):
            raise ValidationError("channel.to: missing")
        hub.force_transfer(user.user_id, session_id, to)
        return None
    if mtype == "edit":
        edit = message.get("edit")
        if not isinstance(edit, dict):
            raise ValidationError("channel.edit: expected an object")
        _enforce_edit_bound(runtime, edit)
        hub.apply_edit(user.user_id, session_id, edit)
        return None
    if mtype == "chat":
        text = message.get("text")
        if not isinstance(text, str):
            raise ValidationError("channel.text: expected a string")
        hub.chat_post(user.user_id, session_id, text)
        return None
    if mtype == "snapshot-request":
        return hub.snapshot(user.user_id, session_id)
    raise ValidationError(f"channel.type: unknown {mtype!r}")


def _enforce_edit_bound(runtime: Runtime, edit: dict) -> None:
    bound = runtime.config.coordinate_bound
    coords = []
    if edit.get("action") == "drag":
        coords = [(edit.get("x"), edit.get("y"))]
    elif edit.get("action") == "add-step":
        step = edit.get("step") or {}
        if step.get("kind") == "FreePoint":
            coords = [(step.get("x"), step.get("y"))]
    for x, y in coords:
        if isinstance(x, (int, float)) and isinstance(y, (int, float)):
            if abs(x) > bound or abs(y) > bound:
                raise ValidationError(
                    f"edit exceeds the coordinate bound {bound}")


def serve(config: ServerConfig) -> None:
    """Run until a shutdown signal; exits non-zero on startup failures."""
    import uvicorn

    data_dir = config.data_dir
    try:
        probe = Store(data_dir, durable=config.durable)
    except OSError as exc:
        raise SystemExit(f"data directory {data_dir!r} is not usable: {exc}")
    app = create_app(config, store=probe)
    try:
        uvicorn.run(app, host=config.listen_address, port=config.port,
                    log_level=config.log_level)
    except OSError as exc:
        raise SystemExit(f"cannot listen on {config.listen_address}:"
                         f"{config.port}: {exc}")
