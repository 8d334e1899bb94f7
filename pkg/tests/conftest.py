from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).parent))

from senreg.api import create_app
from senreg.auth import Account, ApiKey, Role, generate_api_key, hash_api_key, hash_password, issue_token
from senreg.config import ServiceConfig
from senreg.seed import demo_bundle, install_base_vocabulary, load_bundle
from senreg.storage import Store

TOKEN_SECRET = "test-secret"


@pytest.fixture
def store(tmp_path) -> Store:
    return Store.initialize(tmp_path / "data")


@pytest.fixture
def vocab_store(store) -> Store:
    install_base_vocabulary(store)
    return store


@pytest.fixture
def demo_store(vocab_store) -> Store:
    load_bundle(vocab_store, demo_bundle())
    return vocab_store


@dataclass
class Service:
    client: TestClient
    store: Store
    config: ServiceConfig
    headers: dict[str, dict[str, str]]
    accounts: dict[str, Account]

    def h(self, persona: str) -> dict[str, str]:
        return self.headers[persona]


def make_service(store: Store, **config_overrides) -> Service:
    config = ServiceConfig(
        data_dir=store.data_dir or Path("."),
        token_secret=TOKEN_SECRET,
        base_url=store.base_url,
        **config_overrides,
    )
    personas = {
        "alice": Account(
            username="alice", password_hash=hash_password("alice-pw"),
            given_name="Alice", family_name="Ops", email="alice.ops@example.org",
            organization="Example Observatory", groups=("grp-field-ops",),
            roles=(Role.MEMBER.value, Role.CURATOR.value),
        ),
        "bob": Account(
            username="bob", password_hash=hash_password("bob-pw"),
            given_name="Bob", family_name="Meter", email="bob.meter@example.org",
            groups=("grp-field-ops",), roles=(Role.MEMBER.value,),
        ),
        "carol": Account(
            username="carol", password_hash=hash_password("carol-pw"),
            given_name="Carol", family_name="Lab", email="carol.lab@example.org",
            groups=("grp-lab",), roles=(Role.MEMBER.value,),
        ),
        "admin": Account(
            username="admin", password_hash=hash_password("admin-pw"),
            given_name="Ada", family_name="Root", email="ada.root@example.org",
            groups=(), roles=(Role.ADMIN.value,),
        ),
    }
    for account in personas.values():
        store.put_account(account)
    key_secret = generate_api_key()
    store.put_api_key(ApiKey(label="ingest", key_hash=hash_api_key(key_secret), groups=("grp-field-ops",)))
    app = create_app(store, config)
    client = TestClient(app)
    headers = {
        name: {"Authorization": f"Bearer {issue_token(acc, TOKEN_SECRET)}"}
        for name, acc in personas.items()
    }
    headers["apikey"] = {"X-Api-Key": key_secret}
    headers["anon"] = {}
    return Service(client=client, store=store, config=config, headers=headers, accounts=personas)


@pytest.fixture
def service(demo_store) -> Service:
    return make_service(demo_store)


@pytest.fixture
def bare_service(vocab_store) -> Service:
    return make_service(vocab_store)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LOG
    except ImportError:
        return
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
