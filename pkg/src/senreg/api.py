"""HTTP service exposing the registry as JSON:API-style resources.

Documents use the ``data/type/id/attributes/relationships`` envelope;
errors carry machine-readable codes and field pointers.  Reads are
filtered by visibility, denied reads of non-public entities answer 404
so that existence cannot be probed, and every write echoes the new
record version.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from datetime import timedelta
from typing import Any, Callable, Optional

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from senreg import model as m
from senreg import temporal
from senreg.auth import (
    ANONYMOUS,
    Account,
    LocalTokenVerifier,
    Principal,
    PrincipalKind,
    TokenClaims,
    issue_token,
    load_verifier,
    verify_password,
)
from senreg.config import ServiceConfig
from senreg.errors import (
    BlobTooLargeError,
    DuplicateTermError,
    EntityInUseError,
    ForbiddenError,
    HandleServiceUnavailableError,
    InvalidStateError,
    InvalidTokenError,
    MountConflictError,
    NotFoundError,
    RegistryError,
    UnauthenticatedError,
    ValidationFailedError,
    VersionConflictError,
)
from senreg.pid import HttpHandleClient, PidService
from senreg.seed import term_id_for
from senreg.serialization import (
    DecodeError,
    decode_location_action,
    decode_mount_action,
    decode_record,
    encode_location_action,
    encode_mount_action,
    encode_position,
    encode_record,
)
from senreg.storage import KIND_BY_PLURAL, PLURALS, Store
from senreg.vocabulary import TermDraft, TicketState, VocabularyService, export_skos

JSONAPI_MEDIA_TYPE = "application/vnd.api+json"

# collections managed through their own endpoints; read-only in entity documents
MANAGED_COLLECTIONS = {
    "measured_quantities",
    "parameters",
    "attachments",
    "actions",
    "mount_actions",
    "location_actions",
}
# server-managed fields nobody may write through documents
PROTECTED_FIELDS = {"id", "kind", "created_at", "updated_at", "created_by", "updated_by", "archived", "pid"}

PID_KINDS = {"device", "platform", "configuration"}

_TERM_FILTER_FIELDS = {"manufacturer", "device_type", "platform_type", "usage"}

FILTERABLE: dict[str, set[str]] = {
    "device": {"short_name", "serial_number", "inventory_number", "model", "urn",
               "manufacturer", "device_type", "visibility", "owner_group"},
    "platform": {"short_name", "serial_number", "inventory_number", "model", "urn",
                 "manufacturer", "platform_type", "visibility", "owner_group"},
    "configuration": {"label", "status", "project", "site", "visibility", "owner_group"},
    "site": {"label", "usage", "visibility", "owner_group", "parent_site"},
    "contact": {"email", "organization", "family_name", "given_name"},
}

SORTABLE = {"short_name", "label", "created_at", "updated_at", "email", "family_name", "status", "project"}


class ApiError(RegistryError):
    """Carries an explicit HTTP status for direct raising in handlers."""

    def __init__(self, status: int, code: str, detail: str, pointer: Optional[str] = None, meta: Optional[dict] = None):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail
        self.pointer = pointer
        self.meta = meta


def _error_body(status: int, code: str, detail: str, pointer: Optional[str] = None, meta: Optional[dict] = None) -> dict:
    error: dict[str, Any] = {"status": str(status), "code": code, "detail": detail}
    if pointer:
        error["source"] = {"pointer": pointer}
    if meta:
        error["meta"] = meta
    return {"errors": [error]}


def _jsonapi(payload: dict, status: int = 200, headers: Optional[dict] = None) -> JSONResponse:
    return JSONResponse(payload, status_code=status, media_type=JSONAPI_MEDIA_TYPE, headers=headers)


class RegistryApp:
    """Shared service context bound into the FastAPI application."""

    def __init__(self, store: Store, config: ServiceConfig):
        self.store = store
        self.config = config
        config.ensure_token_secret()
        if config.token_verifier in ("", "local"):
            self.verifier = LocalTokenVerifier(config.token_secret, config.token_issuer)
        else:
            self.verifier = load_verifier(config.token_verifier)
        self.vocabulary = VocabularyService(store, on_event=self._cv_event_hook())
        self.pid: Optional[PidService] = None
        if config.handle_endpoint:
            client = HttpHandleClient(config.handle_endpoint, config.handle_token)
            self.pid = PidService(store, client)
        # the owner-contact behavior must be total, so the role term always exists
        store.vocabulary.upsert_accepted(
            TermDraft(category=m.TermCategory.CONTACT_ROLE, term="Owner"),
            term_id=term_id_for(m.TermCategory.CONTACT_ROLE, "Owner"),
        )

    def _cv_event_hook(self) -> Optional[Callable]:
        url = self.config.cv_webhook_url
        if not url:
            return None

        def hook(event: str, ticket, term) -> None:
            # parity hook for external issue trackers; failures never block curation
            try:
                httpx.post(
                    url,
                    json={"event": event, "ticket": encode_record(ticket), "term": encode_record(term)},
                    timeout=5.0,
                )
            except httpx.HTTPError:
                pass

        return hook

    # -- authentication ------------------------------------------------------------

    def authenticate(self, request: Request) -> Principal:
        """Api key -> service principal, bearer token -> user principal,
        nothing -> anonymous; malformed or expired credentials are 401,
        never silently anonymous."""
        api_key = request.headers.get("X-Api-Key")
        if api_key:
            key = self.store.get_api_key_by_secret(api_key)
            if key is None:
                raise InvalidTokenError("unknown api key")
            contact_id = None
            display_name = key.label
            if key.account_id:
                account = self.store.get_account(key.account_id)
                if account is not None:
                    contact_id = self._ensure_contact(account.id, account.given_name, account.family_name, account.email, account.organization)
                    display_name = account.username
            return Principal(
                kind=PrincipalKind.SERVICE,
                account_id=key.account_id,
                groups=frozenset(key.groups),
                roles=frozenset(key.roles),
                contact_id=contact_id,
                display_name=display_name,
            )
        authorization = request.headers.get("Authorization", "")
        if authorization:
            scheme, _, token = authorization.partition(" ")
            if scheme.lower() != "bearer" or not token.strip():
                raise InvalidTokenError("unsupported authorization scheme")
            claims = self.verifier.verify(token.strip())
            return self._principal_from_claims(claims)
        return ANONYMOUS

    def _principal_from_claims(self, claims: TokenClaims) -> Principal:
        account = self.store.get_account(claims.subject)
        if account is None and claims.username:
            account = self.store.get_account_by_username(claims.username)
        if account is None:
            # externally verified identity: provision a local account shell
            given, _, family = claims.name.partition(" ")
            account = Account(
                id=claims.subject,
                username=claims.username or claims.subject,
                given_name=given,
                family_name=family,
                email=claims.email,
                groups=tuple(claims.groups),
                roles=tuple(claims.roles) or ("member",),
            )
            account = self.store.put_account(account)
        if not account.active:
            raise InvalidTokenError("account is deactivated")
        contact_id = self._ensure_contact(
            account.id, account.given_name, account.family_name, account.email, account.organization
        )
        return Principal(
            kind=PrincipalKind.USER,
            account_id=account.id,
            groups=frozenset(account.groups),
            roles=frozenset(account.roles),
            contact_id=contact_id,
            display_name=account.username,
            email=account.email,
        )

    def _ensure_contact(self, account_id: str, given: str, family: str, email: str, organization: str) -> Optional[str]:
        """Contact auto-provisioning on first authenticated request."""
        contact = self.store.contact_for_account(account_id)
        if contact is not None:
            return contact.id
        for existing in self.store.iter_entities(m.EntityKind.CONTACT):
            if existing.email.casefold() == (email or "").casefold() and email:
                if existing.account_id is None:
                    linked = replace(existing, account_id=account_id)
                    self.store.put_entity(linked, expected_version=existing.version)
                    return existing.id
                return existing.id
        if not email:
            return None
        record = m.Contact(
            id=self.store.new_id(),
            given_name=given or "Unknown",
            family_name=family or account_id,
            email=email,
            organization=organization,
            account_id=account_id,
        )
        self.store.put_entity(record)
        return record.id

    # -- authorization --------------------------------------------------------------

    def can_read(self, principal: Principal, entity: m.Entity) -> bool:
        return self.store.readable(principal, entity)

    def can_write(self, principal: Principal, entity: m.Entity) -> bool:
        if not principal.is_authenticated:
            return False
        if principal.is_admin:
            return True
        if isinstance(entity, m.Contact):
            return entity.account_id == principal.account_id or (
                principal.contact_id is not None and entity.created_by == principal.contact_id
            )
        return entity.owner_group in principal.groups

    def require_entity(self, kind: m.EntityKind, entity_id: str, principal: Principal) -> m.Entity:
        """404 for unknown, archived and unreadable alike: private records
        must be indistinguishable from missing ones."""
        entity = self.store.try_get(kind, entity_id)
        if entity is None or entity.archived or not self.can_read(principal, entity):
            raise NotFoundError(f"{kind.value} {entity_id!r} not found")
        return entity

    def require_writable(self, kind: m.EntityKind, entity_id: str, principal: Principal) -> m.Entity:
        entity = self.require_entity(kind, entity_id, principal)
        if not self.can_write(principal, entity):
            raise ForbiddenError("not a member of the owning group")
        return entity

    # -- resource documents ------------------------------------------------------------

    def resource_object(self, entity: m.Entity) -> dict:
        kind = m.kind_of(entity)
        doc = encode_record(entity)
        doc.pop("kind")
        doc.pop("id")
        relationships: dict[str, Any] = {}
        contacts = doc.get("contacts")
        if contacts is not None:
            relationships["contacts"] = {
                "data": [{"type": "contact", "id": role["contact"]} for role in contacts]
            }
        if isinstance(entity, m.Configuration) and entity.site:
            relationships["site"] = {"data": {"type": "site", "id": entity.site}}
        if isinstance(entity, m.Site) and entity.parent_site:
            relationships["parent_site"] = {"data": {"type": "site", "id": entity.parent_site}}
        resource = {
            "type": kind.value,
            "id": entity.id,
            "attributes": doc,
            "links": {"self": self.store.canonical_url(kind, entity.id)},
        }
        if relationships:
            resource["relationships"] = relationships
        return resource

    def sync_pid_quietly(self, entity: m.Entity) -> None:
        if self.pid is None or getattr(entity, "pid", None) is None:
            return
        try:
            self.pid.sync(entity)
        except (HandleServiceUnavailableError, NotFoundError):
            pass


def _parse_body(request_body: bytes) -> dict:
    try:
        doc = json.loads(request_body or b"{}")
    except json.JSONDecodeError as exc:
        raise ApiError(400, "invalid_json", f"request body is not valid JSON: {exc.msg}")
    if not isinstance(doc, dict):
        raise ApiError(400, "invalid_document", "request body must be a JSON object")
    return doc


def _resource_payload(doc: dict, expected_type: str) -> dict:
    data = doc.get("data")
    if not isinstance(data, dict):
        raise ApiError(400, "invalid_document", "document must carry a 'data' resource object")
    if data.get("type") != expected_type:
        raise ApiError(409, "type_mismatch", f"resource type must be {expected_type!r}")
    attributes = data.get("attributes", {})
    if not isinstance(attributes, dict):
        raise ApiError(400, "invalid_document", "'attributes' must be an object")
    return data


def _reject_fields(attributes: dict, rejected: set[str], context: str) -> None:
    bad = sorted(set(attributes) & rejected)
    if bad:
        raise ApiError(
            422,
            "read_only_field",
            f"field(s) {bad} cannot be written through {context}",
            pointer=f"/data/attributes/{bad[0]}",
        )


def create_app(store: Store, config: ServiceConfig) -> FastAPI:
    ctx = RegistryApp(store, config)
    app = FastAPI(title="senreg", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.ctx = ctx

    # -- error mapping -------------------------------------------------------------

    status_by_type = [
        (ApiError, None),
        (InvalidTokenError, 401),
        (UnauthenticatedError, 401),
        (ForbiddenError, 403),
        (NotFoundError, 404),
        (temporal.NotMountedError, 404),
        (VersionConflictError, 409),
        (MountConflictError, 409),
        (DuplicateTermError, 409),
        (InvalidStateError, 409),
        (EntityInUseError, 409),
        (temporal.InconsistentStateError, 409),
        (BlobTooLargeError, 413),
        (ValidationFailedError, 422),
        (DecodeError, 400),
        (HandleServiceUnavailableError, 502),
    ]

    def _exception_response(exc: Exception) -> JSONResponse:
        if isinstance(exc, ApiError):
            return _jsonapi(_error_body(exc.status, exc.code, exc.detail, exc.pointer, exc.meta), exc.status)
        if isinstance(exc, ValidationFailedError):
            errors = [
                {
                    "status": "422",
                    "code": "validation_failed",
                    "detail": violation.message,
                    "source": {"pointer": "/data/attributes/" + violation.path.replace(".", "/")},
                }
                for violation in exc.report.violations
            ]
            warnings = [
                {"detail": w.message, "source": {"pointer": "/data/attributes/" + w.path.replace(".", "/")}}
                for w in exc.report.warnings
            ]
            body: dict[str, Any] = {"errors": errors}
            if warnings:
                body["meta"] = {"warnings": warnings}
            return _jsonapi(body, 422)
        if isinstance(exc, MountConflictError):
            meta: dict[str, Any] = {"conflict": exc.result.describe()}
            result = exc.result
            if isinstance(result, temporal.MountConflict):
                conflicting = ctx.store.try_get(m.EntityKind.CONFIGURATION, result.configuration_id)
                meta["configuration_id"] = result.configuration_id
                meta["configuration_label"] = conflicting.label if conflicting else None
                meta["mount_id"] = result.mount.id
            return _jsonapi(_error_body(409, "mount_conflict", exc.result.describe(), meta=meta), 409)
        if isinstance(exc, VersionConflictError):
            return _jsonapi(
                _error_body(409, "version_conflict", str(exc), meta={"current_version": exc.current}), 409
            )
        for exc_type, status in status_by_type:
            if status is not None and isinstance(exc, exc_type):
                code = getattr(exc, "code", exc_type.__name__)
                return _jsonapi(_error_body(status, code, str(exc)), status)
        raise exc

    for exc_type, _ in status_by_type:
        app.add_exception_handler(exc_type, lambda request, exc: _exception_response(exc))

    def principal_of(request: Request) -> Principal:
        return ctx.authenticate(request)

    def require_authenticated(request: Request) -> Principal:
        principal = ctx.authenticate(request)
        if not principal.is_authenticated:
            raise UnauthenticatedError("authentication required")
        return principal

    # -- health and auth ------------------------------------------------------------

    @app.get("/healthz")
    def healthz() -> JSONResponse:
        return JSONResponse({"status": "ok", "counts": ctx.store.counts()})

    @app.post("/auth/token")
    async def auth_token(request: Request) -> JSONResponse:
        body = _parse_body(await request.body())
        username = body.get("username", "")
        password = body.get("password", "")
        account = ctx.store.get_account_by_username(username)
        if account is None or not account.active or not verify_password(password, account.password_hash):
            raise InvalidTokenError("bad credentials")
        ttl = timedelta(minutes=config.token_ttl_minutes)
        token = issue_token(account, config.token_secret, config.token_issuer, ttl)
        expires_at = m.format_instant(m.utcnow() + ttl)
        return JSONResponse({"token": token, "token_type": "bearer", "expires_at": expires_at})

    @app.get("/auth/me")
    def auth_me(request: Request) -> JSONResponse:
        principal = principal_of(request)
        return _jsonapi(
            {
                "data": {
                    "type": "principal",
                    "id": principal.account_id or "anonymous",
                    "attributes": {
                        "kind": principal.kind.value,
                        "groups": sorted(principal.groups),
                        "roles": sorted(principal.roles),
                        "contact_id": principal.contact_id,
                        "display_name": principal.display_name,
                    },
                }
            }
        )

    # -- entity CRUD -------------------------------------------------------------------

    def list_endpoint(plural: str, kind: m.EntityKind):
        def handler(request: Request) -> JSONResponse:
            principal = principal_of(request)
            params = request.query_params
            entities = [e for e in ctx.store.iter_entities(kind) if ctx.can_read(principal, e)]
            query = params.get("q")
            if query:
                hits = ctx.store.search(query, kind_filter=kind, principal=principal, limit=100000)
                allowed = {hit.ref.id for hit in hits}
                entities = [e for e in entities if e.id in allowed]
            for key, value in params.multi_items():
                if not key.startswith("filter[") or not key.endswith("]"):
                    continue
                field = key[len("filter[") : -1]
                if field not in FILTERABLE[kind.value]:
                    raise ApiError(400, "unknown_filter", f"cannot filter {plural} by {field!r}")
                entities = [e for e in entities if _matches(ctx, e, field, value)]
            sort_param = params.get("sort") or ""
            entities.sort(key=lambda e: (m.display_name(e).casefold(), e.id))
            if sort_param:
                descending = sort_param.startswith("-")
                sort_field = sort_param.lstrip("-")
                if sort_field not in SORTABLE:
                    raise ApiError(400, "unknown_sort", f"cannot sort by {sort_field!r}")
                entities.sort(
                    key=lambda e: _sort_value(e, sort_field),
                    reverse=descending,
                )
            total = len(entities)
            page, size = _page_params(params)
            start = (page - 1) * size
            chunk = entities[start : start + size]
            body = {
                "data": [ctx.resource_object(e) for e in chunk],
                "meta": {"total": total, "page": page, "size": size,
                         "pages": max(1, math.ceil(total / size))},
                "links": _page_links(request, page, size, total),
            }
            return _jsonapi(body)

        return handler

    def get_endpoint(plural: str, kind: m.EntityKind):
        def handler(entity_id: str, request: Request) -> JSONResponse:
            principal = principal_of(request)
            entity = ctx.require_entity(kind, entity_id, principal)
            return _jsonapi({"data": ctx.resource_object(entity)})

        return handler

    def create_endpoint(plural: str, kind: m.EntityKind):
        async def handler(request: Request) -> JSONResponse:
            principal = require_authenticated(request)
            data = _resource_payload(_parse_body(await request.body()), kind.value)
            if data.get("id"):
                raise ApiError(403, "client_generated_id", "server assigns resource ids")
            attributes = dict(data.get("attributes", {}))
            _reject_fields(attributes, MANAGED_COLLECTIONS, "entity documents (use the dedicated endpoints)")
            _reject_fields(attributes, PROTECTED_FIELDS, "entity documents")
            attributes["id"] = ctx.store.new_id()
            if kind is not m.EntityKind.CONTACT and not attributes.get("owner_group") and principal.groups:
                attributes["owner_group"] = sorted(principal.groups)[0]
            entity = decode_record(attributes, kind=kind.value)
            entity = _with_owner_role(ctx, entity, principal)
            revision = ctx.store.put_entity(entity, updated_by=principal.contact_id)
            stored = ctx.store.get(kind, entity.id)
            return _jsonapi(
                {"data": ctx.resource_object(stored), "meta": {"version": revision.version}},
                201,
                headers={"Location": ctx.store.canonical_url(kind, entity.id)},
            )

        return handler

    def patch_endpoint(plural: str, kind: m.EntityKind):
        async def handler(entity_id: str, request: Request) -> JSONResponse:
            principal = require_authenticated(request)
            entity = ctx.require_writable(kind, entity_id, principal)
            data = _resource_payload(_parse_body(await request.body()), kind.value)
            if data.get("id") not in (None, entity_id):
                raise ApiError(409, "id_mismatch", "document id does not match the URL")
            attributes = dict(data.get("attributes", {}))
            if "version" not in attributes:
                raise ApiError(
                    400, "version_required", "attributes.version must carry the version being updated",
                    pointer="/data/attributes/version",
                )
            expected_version = attributes.pop("version")
            if not isinstance(expected_version, int):
                raise ApiError(400, "version_required", "attributes.version must be an integer")
            _reject_fields(attributes, MANAGED_COLLECTIONS, "entity patches (use the dedicated endpoints)")
            _reject_fields(attributes, PROTECTED_FIELDS, "entity patches")
            merged = encode_record(entity)
            merged.update(attributes)
            patched = decode_record(merged, kind=kind.value)
            revision = ctx.store.put_entity(patched, expected_version=expected_version, updated_by=principal.contact_id)
            stored = ctx.store.get(kind, entity_id)
            ctx.sync_pid_quietly(stored)
            stored = ctx.store.get(kind, entity_id)
            return _jsonapi({"data": ctx.resource_object(stored), "meta": {"version": revision.version}})

        return handler

    def delete_endpoint(plural: str, kind: m.EntityKind):
        def handler(entity_id: str, request: Request) -> Response:
            principal = require_authenticated(request)
            ctx.require_writable(kind, entity_id, principal)
            ctx.store.archive_entity(kind, entity_id, updated_by=principal.contact_id)
            return Response(status_code=204)

        return handler

    for plural, kind_value in KIND_BY_PLURAL.items():
        kind = m.EntityKind(kind_value)
        app.get(f"/{plural}")(list_endpoint(plural, kind))
        app.post(f"/{plural}")(create_endpoint(plural, kind))
        app.get(f"/{plural}/{{entity_id}}")(get_endpoint(plural, kind))
        app.patch(f"/{plural}/{{entity_id}}")(patch_endpoint(plural, kind))
        app.delete(f"/{plural}/{{entity_id}}")(delete_endpoint(plural, kind))

    # -- embedded collections -------------------------------------------------------------

    def _embedded_collection(entity: m.Entity, field: str) -> list[dict]:
        return encode_record(entity)[field]

    def _write_embedded(
        kind: m.EntityKind,
        entity_id: str,
        field: str,
        principal: Principal,
        mutate: Callable[[list[dict]], list[dict]],
    ) -> m.Entity:
        entity = ctx.require_writable(kind, entity_id, principal)
        doc = encode_record(entity)
        doc[field] = mutate(list(doc[field]))
        patched = decode_record(doc)
        ctx.store.put_entity(patched, expected_version=entity.version, updated_by=principal.contact_id)
        stored = ctx.store.get(kind, entity_id)
        ctx.sync_pid_quietly(stored)
        return ctx.store.get(kind, entity_id)

    def _embedded_routes(field: str, resource_type: str, plurals: list[str], route: str):
        def list_items(plural: str):
            kind = m.EntityKind(KIND_BY_PLURAL[plural])

            def handler(entity_id: str, request: Request) -> JSONResponse:
                principal = principal_of(request)
                entity = ctx.require_entity(kind, entity_id, principal)
                items = _embedded_collection(entity, field)
                data = [
                    {"type": resource_type, "id": item["id"], "attributes": {k: v for k, v in item.items() if k != "id"}}
                    for item in items
                ]
                return _jsonapi({"data": data, "meta": {"total": len(data), "parent_version": entity.version}})

            return handler

        def create_item(plural: str):
            kind = m.EntityKind(KIND_BY_PLURAL[plural])

            async def handler(entity_id: str, request: Request) -> JSONResponse:
                principal = require_authenticated(request)
                data = _resource_payload(_parse_body(await request.body()), resource_type)
                attributes = dict(data.get("attributes", {}))
                attributes["id"] = ctx.store.new_id()

                def mutate(items: list[dict]) -> list[dict]:
                    items.append(attributes)
                    return items

                entity = _write_embedded(kind, entity_id, field, principal, mutate)
                item = next(i for i in _embedded_collection(entity, field) if i["id"] == attributes["id"])
                return _jsonapi(
                    {
                        "data": {"type": resource_type, "id": item["id"],
                                 "attributes": {k: v for k, v in item.items() if k != "id"}},
                        "meta": {"parent_version": entity.version},
                    },
                    201,
                )

            return handler

        def patch_item(plural: str):
            kind = m.EntityKind(KIND_BY_PLURAL[plural])

            async def handler(entity_id: str, item_id: str, request: Request) -> JSONResponse:
                principal = require_authenticated(request)
                data = _resource_payload(_parse_body(await request.body()), resource_type)
                attributes = dict(data.get("attributes", {}))
                attributes.pop("id", None)

                def mutate(items: list[dict]) -> list[dict]:
                    for item in items:
                        if item["id"] == item_id:
                            item.update(attributes)
                            return items
                    raise NotFoundError(f"{resource_type} {item_id!r} not found")

                entity = _write_embedded(kind, entity_id, field, principal, mutate)
                item = next(i for i in _embedded_collection(entity, field) if i["id"] == item_id)
                return _jsonapi(
                    {
                        "data": {"type": resource_type, "id": item_id,
                                 "attributes": {k: v for k, v in item.items() if k != "id"}},
                        "meta": {"parent_version": entity.version},
                    }
                )

            return handler

        def delete_item(plural: str):
            kind = m.EntityKind(KIND_BY_PLURAL[plural])

            def handler(entity_id: str, item_id: str, request: Request) -> Response:
                principal = require_authenticated(request)

                def mutate(items: list[dict]) -> list[dict]:
                    remaining = [i for i in items if i["id"] != item_id]
                    if len(remaining) == len(items):
                        raise NotFoundError(f"{resource_type} {item_id!r} not found")
                    return remaining

                _write_embedded(kind, entity_id, field, principal, mutate)
                return Response(status_code=204)

            return handler

        for plural in plurals:
            app.get(f"/{plural}/{{entity_id}}/{route}")(list_items(plural))
            app.post(f"/{plural}/{{entity_id}}/{route}")(create_item(plural))
            app.patch(f"/{plural}/{{entity_id}}/{route}/{{item_id}}")(patch_item(plural))
            app.delete(f"/{plural}/{{entity_id}}/{route}/{{item_id}}")(delete_item(plural))

    _embedded_routes("measured_quantities", "measured-quantity", ["devices"], "measured-quantities")
    _embedded_routes("parameters", "parameter", ["devices", "platforms", "configurations"], "parameters")
    _embedded_routes("actions", "action", ["devices", "platforms", "configurations"], "actions")

    @app.post("/{plural}/{entity_id}/parameters/{parameter_id}/values")
    async def add_parameter_value(plural: str, entity_id: str, parameter_id: str, request: Request) -> JSONResponse:
        kind = _kind_for(plural, allowed=("devices", "platforms", "configurations"))
        principal = require_authenticated(request)
        body = _parse_body(await request.body())
        value = {
            "timestamp": body.get("timestamp"),
            "value": body.get("value", ""),
            "contact": body.get("contact", principal.contact_id),
        }

        def mutate(items: list[dict]) -> list[dict]:
            for item in items:
                if item["id"] == parameter_id:
                    item["value_actions"] = sorted(
                        item["value_actions"] + [value], key=lambda v: v["timestamp"]
                    )
                    return items
            raise NotFoundError(f"parameter {parameter_id!r} not found")

        entity = _write_embedded(kind, entity_id, "parameters", principal, mutate)
        item = next(i for i in _embedded_collection(entity, "parameters") if i["id"] == parameter_id)
        return _jsonapi(
            {"data": {"type": "parameter", "id": parameter_id, "attributes": {k: v for k, v in item.items() if k != "id"}},
             "meta": {"parent_version": entity.version}},
            201,
        )

    # -- attachments (multipart upload or url link) ------------------------------------------

    @app.get("/{plural}/{entity_id}/attachments")
    def list_attachments(plural: str, entity_id: str, request: Request) -> JSONResponse:
        kind = _kind_for(plural)
        principal = principal_of(request)
        entity = ctx.require_entity(kind, entity_id, principal)
        items = _embedded_collection(entity, "attachments")
        data = [
            {"type": "attachment", "id": item["id"], "attributes": {k: v for k, v in item.items() if k != "id"}}
            for item in items
        ]
        return _jsonapi({"data": data, "meta": {"total": len(data), "parent_version": entity.version}})

    @app.post("/{plural}/{entity_id}/attachments")
    async def create_attachment(plural: str, entity_id: str, request: Request) -> JSONResponse:
        kind = _kind_for(plural)
        principal = require_authenticated(request)
        content_type = request.headers.get("Content-Type", "")
        now = m.format_instant(ctx.store.now())
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is None or isinstance(upload, str):
                raise ApiError(400, "missing_file", "multipart upload requires a 'file' part")
            data_bytes = await upload.read()
            blob = ctx.store.put_blob(data_bytes, media_type=upload.content_type or "application/octet-stream")
            attributes = {
                "id": ctx.store.new_id(),
                "label": str(form.get("label") or upload.filename or "upload"),
                "origin": "file",
                "url": None,
                "blob_ref": blob.content_hash,
                "media_type": blob.media_type,
                "is_preview_image": str(form.get("is_preview_image", "")).lower() in ("1", "true", "yes", "on"),
                "uploaded_at": now,
                "uploaded_by": principal.contact_id,
            }
        else:
            data = _resource_payload(_parse_body(await request.body()), "attachment")
            attributes = dict(data.get("attributes", {}))
            attributes.setdefault("origin", "url")
            if attributes["origin"] != "url":
                raise ApiError(400, "invalid_origin", "file attachments must be uploaded as multipart/form-data")
            attributes["id"] = ctx.store.new_id()
            attributes["uploaded_at"] = now
            attributes["uploaded_by"] = principal.contact_id

        def mutate(items: list[dict]) -> list[dict]:
            items.append(attributes)
            return items

        entity = _write_embedded(kind, entity_id, "attachments", principal, mutate)
        item = next(i for i in _embedded_collection(entity, "attachments") if i["id"] == attributes["id"])
        return _jsonapi(
            {"data": {"type": "attachment", "id": item["id"], "attributes": {k: v for k, v in item.items() if k != "id"}},
             "meta": {"parent_version": entity.version}},
            201,
        )

    @app.get("/{plural}/{entity_id}/attachments/{item_id}/content")
    def attachment_content(plural: str, entity_id: str, item_id: str, request: Request) -> Response:
        kind = _kind_for(plural)
        principal = principal_of(request)
        entity = ctx.require_entity(kind, entity_id, principal)
        for attachment in getattr(entity, "attachments", ()):
            if attachment.id == item_id:
                if attachment.origin is not m.AttachmentOrigin.FILE or not attachment.blob_ref:
                    raise NotFoundError("attachment has no stored content (url origin)")
                data = ctx.store.get_blob(attachment.blob_ref)
                return Response(content=data, media_type=attachment.media_type or "application/octet-stream")
        raise NotFoundError(f"attachment {item_id!r} not found")

    @app.delete("/{plural}/{entity_id}/attachments/{item_id}")
    def delete_attachment(plural: str, entity_id: str, item_id: str, request: Request) -> Response:
        kind = _kind_for(plural)
        principal = require_authenticated(request)

        def mutate(items: list[dict]) -> list[dict]:
            remaining = [i for i in items if i["id"] != item_id]
            if len(remaining) == len(items):
                raise NotFoundError(f"attachment {item_id!r} not found")
            return remaining

        _write_embedded(kind, entity_id, "attachments", principal, mutate)
        return Response(status_code=204)

    # -- mounts and locations ---------------------------------------------------------------

    def _mount_resource(mount: m.MountAction, parent_version: int) -> dict:
        doc = encode_mount_action(mount)
        doc.pop("id")
        return {"type": "mount", "id": mount.id, "attributes": doc, "meta": {"parent_version": parent_version}}

    @app.get("/configurations/{entity_id}/mounts")
    def list_mounts(entity_id: str, request: Request) -> JSONResponse:
        principal = principal_of(request)
        configuration = ctx.require_entity(m.EntityKind.CONFIGURATION, entity_id, principal)
        mounts = sorted(configuration.mount_actions, key=lambda a: (a.interval.begin, a.id))
        return _jsonapi(
            {"data": [_mount_resource(a, configuration.version) for a in mounts], "meta": {"total": len(mounts)}}
        )

    @app.post("/configurations/{entity_id}/mounts")
    async def create_mount(entity_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        data = _resource_payload(_parse_body(await request.body()), "mount")
        attributes = dict(data.get("attributes", {}))
        attributes["id"] = ctx.store.new_id()
        attributes.setdefault("begin_contact", principal.contact_id)
        mount = decode_mount_action(attributes)
        revision = ctx.store.mount_transaction(entity_id, add=mount, updated_by=principal.contact_id)
        return _jsonapi({"data": _mount_resource(mount, revision.version)}, 201)

    @app.patch("/configurations/{entity_id}/mounts/{mount_id}")
    async def patch_mount(entity_id: str, mount_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        configuration = ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        current = next((a for a in configuration.mount_actions if a.id == mount_id), None)
        if current is None:
            raise NotFoundError(f"mount {mount_id!r} not found")
        data = _resource_payload(_parse_body(await request.body()), "mount")
        attributes = dict(data.get("attributes", {}))
        attributes.pop("id", None)
        doc = encode_mount_action(current)
        doc.update(attributes)
        updated = decode_mount_action(doc)
        revision = ctx.store.mount_transaction(entity_id, update=updated, updated_by=principal.contact_id)
        return _jsonapi({"data": _mount_resource(updated, revision.version)})

    @app.delete("/configurations/{entity_id}/mounts/{mount_id}")
    def delete_mount(entity_id: str, mount_id: str, request: Request) -> Response:
        principal = require_authenticated(request)
        ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        ctx.store.mount_transaction(entity_id, remove_id=mount_id, updated_by=principal.contact_id)
        return Response(status_code=204)

    def _location_resource(action: m.LocationAction, parent_version: int) -> dict:
        doc = encode_location_action(action)
        doc.pop("id")
        return {"type": "location", "id": action.id, "attributes": doc, "meta": {"parent_version": parent_version}}

    @app.get("/configurations/{entity_id}/locations")
    def list_locations(entity_id: str, request: Request) -> JSONResponse:
        principal = principal_of(request)
        configuration = ctx.require_entity(m.EntityKind.CONFIGURATION, entity_id, principal)
        actions = sorted(configuration.location_actions, key=lambda a: (a.interval.begin, a.id))
        return _jsonapi(
            {"data": [_location_resource(a, configuration.version) for a in actions], "meta": {"total": len(actions)}}
        )

    @app.post("/configurations/{entity_id}/locations")
    async def create_location(entity_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        configuration = ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        data = _resource_payload(_parse_body(await request.body()), "location")
        attributes = dict(data.get("attributes", {}))
        attributes["id"] = ctx.store.new_id()
        attributes.setdefault("contact", principal.contact_id)
        action = decode_location_action(attributes)
        candidate = replace(configuration, location_actions=configuration.location_actions + (action,))
        revision = ctx.store.put_entity(candidate, expected_version=configuration.version, updated_by=principal.contact_id)
        return _jsonapi({"data": _location_resource(action, revision.version)}, 201)

    @app.patch("/configurations/{entity_id}/locations/{location_id}")
    async def patch_location(entity_id: str, location_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        configuration = ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        current = next((a for a in configuration.location_actions if a.id == location_id), None)
        if current is None:
            raise NotFoundError(f"location {location_id!r} not found")
        data = _resource_payload(_parse_body(await request.body()), "location")
        attributes = dict(data.get("attributes", {}))
        attributes.pop("id", None)
        doc = encode_location_action(current)
        doc.update(attributes)
        updated = decode_location_action(doc)
        actions = tuple(updated if a.id == location_id else a for a in configuration.location_actions)
        revision = ctx.store.put_entity(
            replace(configuration, location_actions=actions),
            expected_version=configuration.version,
            updated_by=principal.contact_id,
        )
        return _jsonapi({"data": _location_resource(updated, revision.version)})

    @app.delete("/configurations/{entity_id}/locations/{location_id}")
    def delete_location(entity_id: str, location_id: str, request: Request) -> Response:
        principal = require_authenticated(request)
        configuration = ctx.require_writable(m.EntityKind.CONFIGURATION, entity_id, principal)
        actions = tuple(a for a in configuration.location_actions if a.id != location_id)
        if len(actions) == len(configuration.location_actions):
            raise NotFoundError(f"location {location_id!r} not found")
        ctx.store.put_entity(
            replace(configuration, location_actions=actions),
            expected_version=configuration.version,
            updated_by=principal.contact_id,
        )
        return Response(status_code=204)

    # -- state at a point in time ----------------------------------------------------------------

    @app.get("/configurations/{entity_id}/state")
    def configuration_state(entity_id: str, request: Request) -> JSONResponse:
        principal = principal_of(request)
        configuration = ctx.require_entity(m.EntityKind.CONFIGURATION, entity_id, principal)
        raw_at = request.query_params.get("at")
        if raw_at:
            try:
                at = m.parse_instant(raw_at)
            except ValueError as exc:
                raise ApiError(400, "invalid_timestamp", str(exc))
        else:
            at = m.utcnow()
        names = _display_names(ctx.store, configuration)
        tree = temporal.mount_tree_at(configuration, at, names=names)
        location = temporal.location_in_force(configuration, at)

        def node_doc(edge: temporal.MountEdge) -> dict:
            position = temporal.resolve_position(configuration, edge.child, at, names=names)
            return {
                "entity": {"kind": edge.child.kind.value, "id": edge.child.id,
                           "name": names.get(edge.child.id, "")},
                "mount_id": edge.mount.id,
                "offsets": {"x": edge.mount.offset_x, "y": edge.mount.offset_y, "z": edge.mount.offset_z},
                "absolute_offset": None
                if edge.mount.absolute_offset is None
                else {"x": edge.mount.absolute_offset.x, "y": edge.mount.absolute_offset.y, "z": edge.mount.absolute_offset.z},
                "position": encode_position(position),
                "children": [node_doc(child) for child in tree.children(edge.child)],
            }

        body = {
            "data": {
                "type": "configuration-state",
                "id": configuration.id,
                "attributes": {
                    "at": m.format_instant(at),
                    "label": configuration.label,
                    "location": None if location is None else _location_resource(location, configuration.version)["attributes"],
                    "tree": [node_doc(edge) for edge in tree.children(None)],
                    "mounted": len(tree.nodes),
                },
            }
        }
        return _jsonapi(body)

    # -- controlled vocabulary ----------------------------------------------------------------------

    @app.get("/cv/terms")
    def cv_terms(request: Request) -> JSONResponse:
        params = request.query_params
        category = None
        if params.get("category"):
            try:
                category = m.TermCategory(params["category"])
            except ValueError:
                raise ApiError(400, "unknown_category", f"unknown category {params['category']!r}")
        status = None
        if params.get("status"):
            try:
                status = m.TermStatus(params["status"])
            except ValueError:
                raise ApiError(400, "unknown_status", f"unknown status {params['status']!r}")
        page, size = _page_params(params)
        terms, total = ctx.vocabulary.list_terms(
            category=category, status=status, query=params.get("q"), page=page, size=size
        )
        return _jsonapi(
            {
                "data": [_term_resource(t) for t in terms],
                "meta": {"total": total, "page": page, "size": size},
            }
        )

    @app.get("/cv/terms/{term_id}")
    def cv_term(term_id: str) -> JSONResponse:
        term = ctx.vocabulary.get_term(term_id)
        return _jsonapi({"data": _term_resource(term)})

    @app.post("/cv/proposals")
    async def cv_propose(request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        data = _resource_payload(_parse_body(await request.body()), "vocabulary-term")
        attributes = dict(data.get("attributes", {}))
        try:
            category = m.TermCategory(attributes.get("category", ""))
        except ValueError:
            raise ApiError(400, "unknown_category", f"unknown category {attributes.get('category')!r}")
        draft = TermDraft(
            category=category,
            term=attributes.get("term", ""),
            definition=attributes.get("definition", ""),
            provenance=attributes.get("provenance", ""),
            provenance_uri=attributes.get("provenance_uri"),
            global_provenance=attributes.get("global_provenance"),
            synonyms=tuple(attributes.get("synonyms", [])),
            note_for_curator=attributes.get("note_for_curator", ""),
        )
        term, ticket = ctx.vocabulary.propose_term(draft, submitted_by=principal.contact_id)
        return _jsonapi(
            {"data": _term_resource(term), "included": [_ticket_resource(ticket)],
             "meta": {"ticket_id": ticket.id}},
            201,
        )

    @app.get("/cv/proposals")
    def cv_proposals(request: Request) -> JSONResponse:
        principal = principal_of(request)
        if not principal.is_curator:
            raise ForbiddenError("curator role required")
        state = None
        if request.query_params.get("state"):
            try:
                state = TicketState(request.query_params["state"])
            except ValueError:
                raise ApiError(400, "unknown_state", "unknown ticket state")
        tickets = ctx.vocabulary.list_tickets(state=state)
        return _jsonapi({"data": [_ticket_resource(t) for t in tickets], "meta": {"total": len(tickets)}})

    @app.get("/cv/proposals/{ticket_id}")
    def cv_proposal(ticket_id: str, request: Request) -> JSONResponse:
        principal = principal_of(request)
        if not principal.is_curator:
            raise ForbiddenError("curator role required")
        ticket = ctx.vocabulary.get_ticket(ticket_id)
        term = ctx.vocabulary.get_term(ticket.term_id)
        return _jsonapi({"data": _ticket_resource(ticket), "included": [_term_resource(term)]})

    @app.post("/cv/proposals/{ticket_id}/review")
    def cv_begin_review(ticket_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        ticket = ctx.vocabulary.begin_review(ticket_id, principal)
        return _jsonapi({"data": _ticket_resource(ticket)})

    @app.post("/cv/proposals/{ticket_id}/comments")
    async def cv_comment(ticket_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        body = _parse_body(await request.body())
        message = body.get("message", "")
        if not message:
            raise ApiError(400, "empty_message", "comment message required")
        ticket = ctx.vocabulary.comment(ticket_id, author=principal.display_name or principal.account_id or "unknown", message=message)
        return _jsonapi({"data": _ticket_resource(ticket)}, 201)

    @app.post("/cv/proposals/{ticket_id}/decision")
    async def cv_decide(ticket_id: str, request: Request) -> JSONResponse:
        principal = require_authenticated(request)
        body = _parse_body(await request.body())
        decision = body.get("decision", "")
        edits = None
        if body.get("edits"):
            raw = body["edits"]
            ticket = ctx.vocabulary.get_ticket(ticket_id)
            term = ctx.vocabulary.get_term(ticket.term_id)
            try:
                category = m.TermCategory(raw.get("category", term.category.value))
            except ValueError:
                raise ApiError(400, "unknown_category", "unknown category in edits")
            edits = TermDraft(
                category=category,
                term=raw.get("term", term.term),
                definition=raw.get("definition", term.definition),
                provenance=raw.get("provenance", term.provenance),
                provenance_uri=raw.get("provenance_uri", term.provenance_uri),
                global_provenance=raw.get("global_provenance", term.global_provenance),
                synonyms=tuple(raw.get("synonyms", term.synonyms)),
                note_for_curator=raw.get("note_for_curator", term.note_for_curator),
            )
        outcome = ctx.vocabulary.curate(ticket_id, decision, principal, edits=edits)
        meta: dict[str, Any] = {}
        if outcome.references:
            meta["references"] = [{"kind": r.kind.value, "id": r.id} for r in outcome.references]
        return _jsonapi(
            {"data": _term_resource(outcome.term), "included": [_ticket_resource(outcome.ticket)], "meta": meta}
        )

    @app.get("/cv/export.ttl")
    def cv_export() -> PlainTextResponse:
        document = export_skos(ctx.store.iter_terms(), ctx.store.base_url)
        return PlainTextResponse(document, media_type="text/turtle")

    # -- search -------------------------------------------------------------------------------------

    @app.get("/search")
    def search(request: Request) -> JSONResponse:
        principal = principal_of(request)
        query = request.query_params.get("q", "")
        kind = None
        if request.query_params.get("kind"):
            try:
                kind = m.EntityKind(request.query_params["kind"])
            except ValueError:
                raise ApiError(400, "unknown_kind", f"unknown kind {request.query_params['kind']!r}")
        limit = min(int(request.query_params.get("limit", "25")), 200)
        hits = ctx.store.search(query, kind_filter=kind, principal=principal, limit=limit)
        data = [
            {
                "type": hit.ref.kind.value,
                "id": hit.ref.id,
                "attributes": {"name": hit.name},
                "links": {"self": ctx.store.canonical_url(hit.ref.kind, hit.ref.id)},
                "meta": {"score": hit.score},
            }
            for hit in hits
        ]
        return _jsonapi({"data": data, "meta": {"total": len(data), "query": query}})

    # -- persistent identifiers ------------------------------------------------------------------------

    @app.post("/{plural}/{entity_id}/pid")
    def mint_pid(plural: str, entity_id: str, request: Request) -> JSONResponse:
        kind = _kind_for(plural, allowed=tuple(PLURALS[k] for k in PID_KINDS))
        principal = require_authenticated(request)
        entity = ctx.require_writable(kind, entity_id, principal)
        if ctx.pid is None:
            raise ApiError(503, "pid_disabled", "no handle service is configured")
        record, created = ctx.pid.mint(entity, updated_by=principal.contact_id)
        doc = encode_record(record)
        doc.pop("kind")
        doc.pop("id")
        return _jsonapi(
            {
                "data": {"type": "pid-record", "id": record.id, "attributes": doc},
                "meta": {"already_minted": not created, "handle": record.handle},
            },
            201 if created else 200,
        )

    @app.get("/{plural}/{entity_id}/pid")
    def get_pid(plural: str, entity_id: str, request: Request) -> JSONResponse:
        kind = _kind_for(plural, allowed=tuple(PLURALS[k] for k in PID_KINDS))
        principal = principal_of(request)
        ctx.require_entity(kind, entity_id, principal)
        record = ctx.store.get_pid_record_for(entity_id)
        if record is None:
            raise NotFoundError("no persistent identifier minted")
        doc = encode_record(record)
        doc.pop("kind")
        doc.pop("id")
        return _jsonapi({"data": {"type": "pid-record", "id": record.id, "attributes": doc}})

    return app


# --- small helpers --------------------------------------------------------------------


def _kind_for(plural: str, allowed: Optional[tuple[str, ...]] = None) -> m.EntityKind:
    if plural not in KIND_BY_PLURAL or (allowed is not None and plural not in allowed):
        raise NotFoundError(f"unknown collection {plural!r}")
    return m.EntityKind(KIND_BY_PLURAL[plural])


def _page_params(params) -> tuple[int, int]:
    try:
        page = int(params.get("page[number]", params.get("page", "1")))
        size = int(params.get("page[size]", params.get("size", "25")))
    except ValueError:
        raise ApiError(400, "bad_pagination", "page[number] and page[size] must be integers")
    if page < 1 or size < 1 or size > 500:
        raise ApiError(400, "bad_pagination", "page[number] >= 1 and 1 <= page[size] <= 500 required")
    return page, size


def _page_links(request: Request, page: int, size: int, total: int) -> dict:
    pages = max(1, math.ceil(total / size))

    def link(number: int) -> str:
        params = dict(request.query_params)
        params["page[number]"] = str(number)
        params["page[size]"] = str(size)
        query = "&".join(f"{k}={v}" for k, v in params.items())
        return f"{request.url.path}?{query}"

    links = {"self": link(page), "first": link(1), "last": link(pages)}
    if page > 1:
        links["prev"] = link(page - 1)
    if page < pages:
        links["next"] = link(page + 1)
    return links


def _sort_value(entity: m.Entity, field: str):
    value = getattr(entity, field, None)
    if value is None:
        return ""
    if hasattr(value, "isoformat"):
        return value.isoformat()
    if isinstance(value, str):
        return value.casefold()
    return str(value)


def _matches(ctx: RegistryApp, entity: m.Entity, field: str, value: str) -> bool:
    actual = getattr(entity, field, None)
    if field in _TERM_FILTER_FIELDS:
        if actual is None:
            return False
        if actual == value:
            return True
        term = ctx.store.get_term(actual)
        return term is not None and term.term == value
    if actual is None:
        return False
    if hasattr(actual, "value"):
        return actual.value == value
    return str(actual) == value


def _with_owner_role(ctx: RegistryApp, entity: m.Entity, principal: Principal) -> m.Entity:
    """Append the creator as Owner contact unless already listed."""
    if isinstance(entity, m.Contact) or principal.contact_id is None:
        return entity
    owner_term = ctx.store.vocabulary.find(m.TermCategory.CONTACT_ROLE, "Owner")
    if owner_term is None:
        return entity
    role = m.ContactRole(contact=principal.contact_id, role=owner_term.id)
    if role in entity.contacts:
        return entity
    return replace(entity, contacts=entity.contacts + (role,))


def _display_names(store: Store, configuration: m.Configuration) -> dict[str, str]:
    names: dict[str, str] = {}
    for mount in configuration.mount_actions:
        for ref in (mount.child, mount.parent):
            if ref is None or ref.id in names:
                continue
            entity = store.try_get(ref.kind, ref.id)
            if entity is not None:
                names[ref.id] = m.display_name(entity)
    return names


def _term_resource(term) -> dict:
    doc = encode_record(term)
    doc.pop("kind")
    doc.pop("id")
    return {"type": "vocabulary-term", "id": term.id, "attributes": doc}


def _ticket_resource(ticket) -> dict:
    doc = encode_record(ticket)
    doc.pop("kind")
    doc.pop("id")
    return {"type": "curation-ticket", "id": ticket.id, "attributes": doc}
