from __future__ import annotations

import json
from datetime import timedelta
from pathlib import Path

import pytest

from senreg.auth import (
    Account,
    LocalTokenVerifier,
    TokenClaims,
    generate_api_key,
    hash_api_key,
    hash_password,
    issue_token,
    load_verifier,
    verify_password,
)
from senreg.config import load_config
from senreg.errors import InvalidTokenError


def test_env_overrides_file_and_flags_override_env(tmp_path):
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"port": 1111, "base_url": "http://file.example"}))
    config = load_config(
        config_file,
        env={"SENREG_PORT": "2222", "SENREG_DATA_DIR": str(tmp_path / "d")},
        port=3333,
    )
    assert config.port == 3333  # flag wins
    assert config.base_url == "http://file.example"  # file fills the rest
    assert config.data_dir == tmp_path / "d"
    assert isinstance(config.data_dir, Path)


def test_bool_and_defaults(tmp_path):
    config = load_config(None, env={"SENREG_DETERMINISTIC": "yes"})
    assert config.deterministic is True
    assert load_config(None, env={}).deterministic is False
    assert load_config(None, env={}).resolved_base_url() == "http://127.0.0.1:8500"


def test_token_secret_generated_once():
    config = load_config(None, env={})
    first = config.ensure_token_secret()
    assert first and config.ensure_token_secret() == first


def test_password_hash_round_trip():
    stored = hash_password("hunter2")
    assert verify_password("hunter2", stored)
    assert not verify_password("wrong", stored)
    assert not verify_password("hunter2", "garbage")


def test_api_key_hashing():
    secret = generate_api_key()
    assert secret.startswith("srk_")
    assert hash_api_key(secret) == hash_api_key(secret)
    assert hash_api_key(secret) != hash_api_key(generate_api_key())


def test_token_round_trip_and_expiry():
    account = Account(username="u", groups=("g1",), roles=("member",), email="u@example.org")
    token = issue_token(account, "s3cret")
    claims = LocalTokenVerifier("s3cret").verify(token)
    assert claims.subject == account.id
    assert claims.groups == ("g1",)
    with pytest.raises(InvalidTokenError):
        LocalTokenVerifier("other-secret").verify(token)
    expired = issue_token(account, "s3cret", ttl=timedelta(seconds=-5))
    with pytest.raises(InvalidTokenError):
        LocalTokenVerifier("s3cret").verify(expired)
    with pytest.raises(InvalidTokenError):
        LocalTokenVerifier("s3cret").verify("not.a.token")


class StubVerifier:
    def __init__(self, subject: str = "stub"):
        self.subject = subject

    def verify(self, token: str) -> TokenClaims:
        return TokenClaims(subject=self.subject, username=token)


def test_load_verifier_dotted_path():
    verifier = load_verifier("test_config:StubVerifier", subject="abc")
    claims = verifier.verify("tok")
    assert claims.subject == "abc"
    assert claims.username == "tok"
