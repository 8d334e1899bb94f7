"""Administration command line: serve, init, seed, inspect, validate.

Data goes to stdout, diagnostics to stderr; ``--output structured``
switches stdout to JSON so every command is scriptable.  Exit codes:
0 success, 1 findings/failures, 2 usage errors.
"""

from __future__ import annotations

import json
import socket
import sys
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import click

from senreg import model as m
from senreg import temporal
from senreg.auth import Account, ApiKey, Group, Role, generate_api_key, hash_api_key, hash_password
from senreg.config import ServiceConfig, load_config
from senreg.errors import NotFoundError, RegistryError
from senreg.seed import SeedError, demo_bundle, install_base_vocabulary, load_bundle, load_bundle_path
from senreg.serialization import encode_position, encode_record
from senreg.storage import Store
from senreg.vocabulary import TermDraft, TurtleImportError, export_skos, parse_skos_turtle
from senreg.vocabulary import term_key as _term_key


@dataclass
class CliContext:
    config_path: Optional[Path]
    data_dir: Optional[Path]
    output: str

    def config(self, **overrides) -> ServiceConfig:
        if self.data_dir is not None:
            overrides.setdefault("data_dir", self.data_dir)
        return load_config(self.config_path, **overrides)

    def emit(self, structured, human: str) -> None:
        if self.output == "structured":
            click.echo(json.dumps(structured, indent=2, ensure_ascii=False, default=str))
        else:
            click.echo(human)


class _FileIdSequence:
    """Sequential ids persisted next to the store; survives across the
    init/seed/serve processes so deterministic runs never collide."""

    def __init__(self, path: Path):
        self._path = path
        self._lock = threading.Lock()

    def __call__(self) -> str:
        with self._lock:
            current = int(self._path.read_text()) if self._path.exists() else 0
            current += 1
            self._path.write_text(str(current))
            return f"id{current:08d}"


def _store_kwargs(config: ServiceConfig) -> dict:
    kwargs = dict(base_url=config.resolved_base_url(), blob_limit=config.blob_limit)
    if config.deterministic:
        start = datetime(2020, 1, 1, tzinfo=timezone.utc)
        config.data_dir.mkdir(parents=True, exist_ok=True)
        kwargs["id_factory"] = _FileIdSequence(config.data_dir / "idseq")
        kwargs["clock"] = lambda: start
    return kwargs


def _open_store(ctx: CliContext, create: bool = False) -> tuple[Store, ServiceConfig]:
    config = ctx.config()
    try:
        if create:
            store = Store.initialize(config.data_dir, **_store_kwargs(config))
        else:
            store = Store(config.data_dir, **_store_kwargs(config))
    except NotFoundError as exc:
        raise click.ClickException(f"{exc} (run 'senreg init' first)")
    return store, config


@click.group()
@click.option("--data-dir", type=click.Path(path_type=Path), default=None, help="Store directory (or SENREG_DATA_DIR).")
@click.option("--config", "config_path", type=click.Path(path_type=Path, exists=True), default=None, help="JSON config file.")
@click.option("--output", type=click.Choice(["human", "structured"]), default="human", show_default=True)
@click.pass_context
def main(ctx: click.Context, data_dir: Optional[Path], config_path: Optional[Path], output: str) -> None:
    """Sensor metadata registry administration tool."""
    ctx.obj = CliContext(config_path=config_path, data_dir=data_dir, output=output)


@main.command()
@click.pass_obj
def init(ctx: CliContext) -> None:
    """Create the data directory and install the base vocabulary."""
    store, config = _open_store(ctx, create=True)
    created = install_base_vocabulary(store)
    ctx.emit(
        {"data_dir": str(config.data_dir), "vocabulary_terms_created": created},
        f"initialized {config.data_dir} ({created} vocabulary terms installed)",
    )


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--base-url", default=None)
@click.pass_obj
def serve(ctx: CliContext, host: Optional[str], port: Optional[int], base_url: Optional[str]) -> None:
    """Run the HTTP service until terminated; flushes the index on exit."""
    import uvicorn

    from senreg.api import create_app

    config = ctx.config(host=host, port=port, base_url=base_url)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((config.host, config.port))
    except OSError as exc:
        raise click.ClickException(f"cannot bind {config.host}:{config.port}: {exc}")
    finally:
        probe.close()
    try:
        store = Store(config.data_dir, **_store_kwargs(config))
    except NotFoundError as exc:
        raise click.ClickException(f"{exc} (run 'senreg init' first)")
    app = create_app(store, config)
    click.echo(f"serving on http://{config.host}:{config.port} (data: {config.data_dir})", err=True)
    server = uvicorn.Server(uvicorn.Config(app, host=config.host, port=config.port, log_level="warning"))

    # uvicorn re-raises captured signals after its graceful shutdown; these
    # handlers absorb that re-raise so the flush below runs and we exit 0
    import signal

    def request_shutdown(signum, frame):
        server.should_exit = True

    signal.signal(signal.SIGTERM, request_shutdown)
    signal.signal(signal.SIGINT, request_shutdown)
    try:
        server.run()
    finally:
        store.flush()


@main.command()
@click.argument("bundle_path", type=click.Path(path_type=Path, exists=True), required=False)
@click.option("--demo", is_flag=True, help="Seed the built-in demo station instead of a file.")
@click.pass_obj
def seed(ctx: CliContext, bundle_path: Optional[Path], demo: bool) -> None:
    """Load a seed bundle; idempotent over natural keys."""
    if bool(bundle_path) == demo:
        raise click.UsageError("provide a bundle path or --demo (not both)")
    store, _ = _open_store(ctx)
    try:
        if demo:
            install_base_vocabulary(store)
            report = load_bundle(store, demo_bundle())
        else:
            report = load_bundle_path(store, bundle_path)
    except SeedError as exc:
        raise click.ClickException(f"seed aborted, nothing was loaded: {exc}")
    summary = report.as_dict()
    created = sum(summary["created"].values())
    skipped = sum(summary["skipped"].values())
    ctx.emit(summary, f"seeded: {created} created, {skipped} skipped\n" + json.dumps(summary, indent=2))


def _parse_at(value: Optional[str]) -> datetime:
    if not value:
        return m.utcnow()
    try:
        return m.parse_instant(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--at")


def _find_configuration(store: Store, ref: str) -> m.Configuration:
    entity = store.try_get(m.EntityKind.CONFIGURATION, ref)
    if entity is not None:
        return entity
    matches = [c for c in store.iter_entities(m.EntityKind.CONFIGURATION) if c.label == ref]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise click.ClickException(f"no configuration with id or label {ref!r}")
    raise click.ClickException(f"label {ref!r} is ambiguous; use the id")


def _position_text(position) -> str:
    if isinstance(position, temporal.AbsolutePosition):
        off = position.offset
        return (
            f"{position.latitude:.6g}°, {position.longitude:.6g}°, {position.height:g} m "
            f"(EPSG:{position.epsg_code}) + offset ({off.x:g}, {off.y:g}, {off.z:g}) m"
        )
    if isinstance(position, temporal.DynamicPosition):
        return "dynamic (coordinates from measured quantities)"
    return "undefined (no location action in force)"


@main.command()
@click.argument("configuration_ref")
@click.option("--at", "at_raw", default=None, help="RFC 3339 instant; defaults to now.")
@click.pass_obj
def state(ctx: CliContext, configuration_ref: str, at_raw: Optional[str]) -> None:
    """Render the mount tree and positions of a configuration at an instant."""
    at = _parse_at(at_raw)
    store, _ = _open_store(ctx)
    configuration = _find_configuration(store, configuration_ref)
    names: dict[str, str] = {}
    for mount in configuration.mount_actions:
        for ref in (mount.child, mount.parent):
            if ref is not None and ref.id not in names:
                entity = store.try_get(ref.kind, ref.id)
                names[ref.id] = m.display_name(entity) if entity else ref.id
    tree = temporal.mount_tree_at(configuration, at, names=names)
    location = temporal.location_in_force(configuration, at)

    def node_doc(edge: temporal.MountEdge) -> dict:
        position = temporal.resolve_position(configuration, edge.child, at, names=names)
        return {
            "entity": {"kind": edge.child.kind.value, "id": edge.child.id, "name": names.get(edge.child.id, "")},
            "mount_id": edge.mount.id,
            "position": encode_position(position),
            "children": [node_doc(child) for child in tree.children(edge.child)],
        }

    structured = {
        "configuration": {"id": configuration.id, "label": configuration.label},
        "at": m.format_instant(at),
        "mounted": len(tree.nodes),
        "tree": [node_doc(edge) for edge in tree.children(None)],
    }

    lines = [f"{configuration.label} @ {m.format_instant(at)}"]
    if location is None:
        lines.append("location: none in force")
    elif isinstance(location.location, m.StaticLocation):
        static = location.location
        lines.append(
            f"location: static {static.latitude:.6g}°, {static.longitude:.6g}°, "
            f"{static.height:g} m (EPSG:{static.epsg_code})"
        )
    else:
        lines.append("location: dynamic (from measured quantities)")

    def render(edge: temporal.MountEdge, indent: int) -> None:
        position = temporal.resolve_position(configuration, edge.child, at, names=names)
        name = names.get(edge.child.id, edge.child.id)
        lines.append(
            "  " * indent
            + f"- {edge.child.kind.value} {name} [{edge.mount.id}] -> {_position_text(position)}"
        )
        for child in tree.children(edge.child):
            render(child, indent + 1)

    for edge in tree.children(None):
        render(edge, 1)
    if not tree.edges:
        lines.append("  (no mounts in force; root only)")
    ctx.emit(structured, "\n".join(lines))


@main.command()
@click.pass_obj
def validate(ctx: CliContext) -> None:
    """Re-check every stored invariant; exits 1 when findings exist.

    Warnings (deprecated or still-pending vocabulary references) go to
    stderr and do not fail the run: the references stay valid.
    """
    store, _ = _open_store(ctx)
    findings = store.validate_all()
    warnings = store.validation_warnings()
    for ref, warning in warnings:
        click.echo(f"warning: {ref.kind.value} {ref.id}: {warning.path}: {warning.message}", err=True)
    structured = [
        {"kind": ref.kind.value, "id": ref.id, "path": violation.path, "message": violation.message}
        for ref, violation in findings
    ]
    if not findings:
        ctx.emit({"findings": [], "warnings": len(warnings)}, "store is consistent (0 findings)")
        return
    human = "\n".join(
        f"{ref.kind.value} {ref.id}: {violation.path}: {violation.message}" for ref, violation in findings
    )
    ctx.emit({"findings": structured, "warnings": len(warnings)}, human)
    sys.exit(1)


@main.group()
def cv() -> None:
    """Controlled-vocabulary import and export."""


@cv.command("export")
@click.argument("path", type=click.Path(path_type=Path))
@click.pass_obj
def cv_export(ctx: CliContext, path: Path) -> None:
    """Write the accepted vocabulary as SKOS (Turtle)."""
    store, _ = _open_store(ctx)
    document = export_skos(store.iter_terms(), store.base_url)
    if str(path) == "-":
        click.echo(document, nl=False)
    else:
        path.write_text(document, encoding="utf-8")
    concepts = document.count(" a skos:Concept ;")
    ctx.emit({"path": str(path), "concepts": concepts}, f"wrote {concepts} concepts to {path}")


@cv.command("import")
@click.argument("path", type=click.Path(path_type=Path, exists=True))
@click.pass_obj
def cv_import(ctx: CliContext, path: Path) -> None:
    """Upsert accepted terms from a Turtle export or a JSON term list."""
    store, _ = _open_store(ctx)
    text = path.read_text(encoding="utf-8")
    drafts: list[TermDraft] = []
    if path.suffix == ".json" or text.lstrip().startswith(("[", "{")):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"{path}: line {exc.lineno}: {exc.msg}")
        if isinstance(rows, dict):
            rows = rows.get("vocabulary", [])
        for i, row in enumerate(rows):
            try:
                drafts.append(
                    TermDraft(
                        category=m.TermCategory(row["category"]),
                        term=row["term"],
                        definition=row.get("definition", ""),
                        provenance=row.get("provenance", ""),
                        provenance_uri=row.get("provenance_uri"),
                        global_provenance=row.get("global_provenance"),
                        synonyms=tuple(row.get("synonyms", [])),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise click.ClickException(f"{path}: row {i}: {exc}")
    else:
        try:
            drafts = parse_skos_turtle(text)
        except TurtleImportError as exc:
            raise click.ClickException(f"{path}: {exc}")
    created = 0
    skipped = 0
    seen: set[tuple[str, str]] = set()
    for draft in drafts:
        key = _term_key(draft.category, draft.term)
        if key in seen:
            click.echo(f"warning: duplicate row for {draft.category.value}/{draft.term}; skipped", err=True)
            skipped += 1
            continue
        seen.add(key)
        _, was_created = store.vocabulary.upsert_accepted(draft)
        created += int(was_created)
        skipped += int(not was_created)
    ctx.emit(
        {"created": created, "skipped": skipped},
        f"imported {created} terms ({skipped} already present or skipped)",
    )


@main.group()
def account() -> None:
    """Local account management."""


@account.command("create")
@click.argument("username")
@click.option("--email", required=True)
@click.option("--given-name", default="")
@click.option("--family-name", default="")
@click.option("--organization", default="")
@click.option("--password", prompt=True, hide_input=True, confirmation_prompt=False)
@click.option("--group", "groups", multiple=True, help="Group id or name; repeatable.")
@click.option("--role", "roles", multiple=True, type=click.Choice([r.value for r in Role]), default=("member",))
@click.pass_obj
def account_create(
    ctx: CliContext,
    username: str,
    email: str,
    given_name: str,
    family_name: str,
    organization: str,
    password: str,
    groups: tuple[str, ...],
    roles: tuple[str, ...],
) -> None:
    store, _ = _open_store(ctx)
    resolved_groups = []
    for ref in groups:
        group = store.get_group_by_name(ref)
        resolved_groups.append(group.id if group is not None else ref)
    record = Account(
        id=store.new_id(),
        username=username,
        password_hash=hash_password(password),
        given_name=given_name,
        family_name=family_name,
        email=email,
        organization=organization,
        groups=tuple(resolved_groups),
        roles=tuple(dict.fromkeys(roles)),
    )
    try:
        record = store.put_account(record)
    except RegistryError as exc:
        raise click.ClickException(str(exc))
    ctx.emit(encode_record(record) | {"password_hash": "<hidden>"}, f"account {username} created (id {record.id})")


@main.group()
def apikey() -> None:
    """API key management."""


@apikey.command("issue")
@click.option("--label", required=True)
@click.option("--group", "groups", multiple=True)
@click.option("--role", "roles", multiple=True, type=click.Choice([r.value for r in Role]), default=("member",))
@click.option("--account", "account_ref", default=None, help="Link the key to an account (id or username).")
@click.pass_obj
def apikey_issue(
    ctx: CliContext, label: str, groups: tuple[str, ...], roles: tuple[str, ...], account_ref: Optional[str]
) -> None:
    store, _ = _open_store(ctx)
    account_id = None
    if account_ref:
        found = store.get_account(account_ref) or store.get_account_by_username(account_ref)
        if found is None:
            raise click.ClickException(f"no account {account_ref!r}")
        account_id = found.id
    resolved_groups = []
    for ref in groups:
        group = store.get_group_by_name(ref)
        resolved_groups.append(group.id if group is not None else ref)
    secret = generate_api_key()
    record = ApiKey(
        id=store.new_id(),
        label=label,
        key_hash=hash_api_key(secret),
        groups=tuple(resolved_groups),
        roles=tuple(dict.fromkeys(roles)),
        account_id=account_id,
    )
    record = store.put_api_key(record)
    ctx.emit(
        {"id": record.id, "label": label, "key": secret},
        f"api key {record.id} issued; secret (shown once): {secret}",
    )


@main.group()
def group() -> None:
    """Group directory management."""


@group.command("create")
@click.argument("name")
@click.option("--display-name", default="")
@click.pass_obj
def group_create(ctx: CliContext, name: str, display_name: str) -> None:
    store, _ = _open_store(ctx)
    try:
        record = store.put_group(Group(id=store.new_id(), name=name, display_name=display_name or name))
    except RegistryError as exc:
        raise click.ClickException(str(exc))
    ctx.emit({"id": record.id, "name": name}, f"group {name} created (id {record.id})")


if __name__ == "__main__":
    main()
