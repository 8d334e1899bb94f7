"""Principals, local accounts, API keys and the pluggable token verifier.

Identity federation is out of scope: the bundled issuer signs compact
HS256 tokens for local accounts, and any other verifier can be plugged
in through configuration (dotted import path).
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import importlib
import json
import os
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Optional, Protocol

from senreg.errors import InvalidTokenError
from senreg.model import EntityId, GroupId, Visibility, new_entity_id, utcnow


class Role(str, Enum):
    MEMBER = "member"
    CURATOR = "curator"
    ADMIN = "admin"


class PrincipalKind(str, Enum):
    ANONYMOUS = "anonymous"
    USER = "user"
    SERVICE = "service"


@dataclass(frozen=True)
class Group:
    name: str
    id: GroupId = field(default_factory=new_entity_id)
    display_name: str = ""
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0


@dataclass(frozen=True)
class Account:
    username: str
    id: EntityId = field(default_factory=new_entity_id)
    password_hash: str = ""
    given_name: str = ""
    family_name: str = ""
    email: str = ""
    organization: str = ""
    groups: tuple[GroupId, ...] = ()
    roles: tuple[str, ...] = (Role.MEMBER.value,)
    active: bool = True
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0


@dataclass(frozen=True)
class ApiKey:
    label: str
    id: EntityId = field(default_factory=new_entity_id)
    key_hash: str = ""
    groups: tuple[GroupId, ...] = ()
    roles: tuple[str, ...] = (Role.MEMBER.value,)
    account_id: Optional[EntityId] = None
    active: bool = True
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0


@dataclass(frozen=True)
class Principal:
    kind: PrincipalKind = PrincipalKind.ANONYMOUS
    account_id: Optional[EntityId] = None
    groups: frozenset[GroupId] = frozenset()
    roles: frozenset[str] = frozenset()
    contact_id: Optional[EntityId] = None
    display_name: str = ""
    email: str = ""

    @property
    def is_authenticated(self) -> bool:
        return self.kind is not PrincipalKind.ANONYMOUS

    @property
    def is_admin(self) -> bool:
        return Role.ADMIN.value in self.roles

    @property
    def is_curator(self) -> bool:
        return Role.CURATOR.value in self.roles or self.is_admin


ANONYMOUS = Principal()


def can_read(principal: Principal, visibility: Visibility, owner_group: str) -> bool:
    """The three-level visibility rule used by reads, lists and search."""
    if visibility is Visibility.PUBLIC:
        return True
    if visibility is Visibility.INTERNAL:
        return principal.is_authenticated
    return principal.is_admin or (owner_group in principal.groups)


# --- passwords and api keys ---------------------------------------------------


def hash_password(password: str) -> str:
    salt = os.urandom(16)
    digest = hashlib.scrypt(password.encode(), salt=salt, n=2**14, r=8, p=1)
    return f"scrypt${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, salt_hex, digest_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(password.encode(), salt=bytes.fromhex(salt_hex), n=2**14, r=8, p=1)
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


def generate_api_key() -> str:
    """Secret shown once at issue time; only its hash is stored."""
    return "srk_" + secrets.token_urlsafe(32)


def hash_api_key(key: str) -> str:
    return hashlib.sha256(key.encode()).hexdigest()


# --- bearer tokens -------------------------------------------------------------


@dataclass(frozen=True)
class TokenClaims:
    subject: str
    username: str = ""
    name: str = ""
    email: str = ""
    groups: tuple[str, ...] = ()
    roles: tuple[str, ...] = ()
    issuer: str = ""
    expires_at: Optional[datetime] = None


class TokenVerifier(Protocol):
    def verify(self, token: str) -> TokenClaims: ...


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode()


def _b64url_decode(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


def issue_token(
    account: Account,
    secret: str,
    issuer: str = "senreg-local",
    ttl: timedelta = timedelta(hours=8),
    now: Optional[datetime] = None,
) -> str:
    """Sign an HS256 compact token carrying the account profile."""
    now = now or utcnow()
    header = {"alg": "HS256", "typ": "JWT"}
    payload = {
        "iss": issuer,
        "sub": account.id,
        "preferred_username": account.username,
        "name": f"{account.given_name} {account.family_name}".strip() or account.username,
        "email": account.email,
        "groups": list(account.groups),
        "roles": list(account.roles),
        "iat": int(now.timestamp()),
        "exp": int((now + ttl).timestamp()),
    }
    signing_input = _b64url(json.dumps(header, separators=(",", ":")).encode()) + "." + _b64url(
        json.dumps(payload, separators=(",", ":")).encode()
    )
    signature = hmac.new(secret.encode(), signing_input.encode(), hashlib.sha256).digest()
    return signing_input + "." + _b64url(signature)


class LocalTokenVerifier:
    """Verifier for tokens produced by :func:`issue_token`."""

    def __init__(self, secret: str, issuer: str = "senreg-local"):
        self._secret = secret
        self._issuer = issuer

    def verify(self, token: str) -> TokenClaims:
        parts = token.split(".")
        if len(parts) != 3:
            raise InvalidTokenError("malformed token")
        signing_input = parts[0] + "." + parts[1]
        expected = hmac.new(self._secret.encode(), signing_input.encode(), hashlib.sha256).digest()
        try:
            signature = _b64url_decode(parts[2])
            header = json.loads(_b64url_decode(parts[0]))
            payload = json.loads(_b64url_decode(parts[1]))
        except (ValueError, json.JSONDecodeError) as exc:
            raise InvalidTokenError("malformed token") from exc
        if header.get("alg") != "HS256":
            raise InvalidTokenError("unsupported token algorithm")
        if not hmac.compare_digest(signature, expected):
            raise InvalidTokenError("bad token signature")
        if self._issuer and payload.get("iss") != self._issuer:
            raise InvalidTokenError("unexpected token issuer")
        exp = payload.get("exp")
        expires_at = None
        if exp is not None:
            expires_at = datetime.fromtimestamp(int(exp), tz=utcnow().tzinfo)
            if expires_at <= utcnow():
                raise InvalidTokenError("token expired")
        subject = payload.get("sub")
        if not subject:
            raise InvalidTokenError("token lacks a subject")
        return TokenClaims(
            subject=str(subject),
            username=str(payload.get("preferred_username", "")),
            name=str(payload.get("name", "")),
            email=str(payload.get("email", "")),
            groups=tuple(payload.get("groups", ()) or ()),
            roles=tuple(payload.get("roles", ()) or ()),
            issuer=str(payload.get("iss", "")),
            expires_at=expires_at,
        )


def load_verifier(path: str, **kwargs) -> TokenVerifier:
    """Instantiate a verifier from a dotted ``module:Class`` path."""
    module_name, _, attr = path.partition(":")
    if not attr:
        module_name, _, attr = path.rpartition(".")
    cls = getattr(importlib.import_module(module_name), attr)
    return cls(**kwargs)
