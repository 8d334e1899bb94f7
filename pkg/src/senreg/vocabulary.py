"""Controlled vocabulary: term records, curation lifecycle and SKOS export.

Terms move through proposed -> accepted/rejected (optionally pausing in
review) and every proposal opens a curation ticket.  The ticket queue is
internal; an outbound event hook exists for wiring external trackers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterable, Optional, Protocol

from senreg.errors import DuplicateTermError, ForbiddenError, InvalidStateError, NotFoundError, ValidationFailedError
from senreg.model import (
    EntityId,
    EntityRef,
    TermCategory,
    TermInfo,
    TermStatus,
    ValidationReport,
    new_entity_id,
)

if TYPE_CHECKING:
    from senreg.storage import Store

CATEGORY_LABELS: dict[TermCategory, str] = {
    TermCategory.EQUIPMENT_TYPE: "Equipment types",
    TermCategory.MANUFACTURER: "Manufacturers",
    TermCategory.CONTACT_ROLE: "Contact roles",
    TermCategory.UNIT: "Units",
    TermCategory.MEASURED_QUANTITY: "Measured quantities",
    TermCategory.COMPARTMENT: "Compartments",
    TermCategory.SAMPLING_MEDIA: "Sampling media",
    TermCategory.ACTION_TYPE: "Action types",
    TermCategory.PLATFORM_TYPE: "Platform types",
    TermCategory.SITE_USAGE: "Site usages",
}


class TicketState(str, Enum):
    OPEN = "open"
    IN_REVIEW = "in_review"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


TICKET_TRANSITIONS: dict[TicketState, frozenset[TicketState]] = {
    TicketState.OPEN: frozenset({TicketState.IN_REVIEW, TicketState.ACCEPTED, TicketState.REJECTED}),
    TicketState.IN_REVIEW: frozenset({TicketState.ACCEPTED, TicketState.REJECTED}),
    TicketState.ACCEPTED: frozenset(),
    TicketState.REJECTED: frozenset(),
}


@dataclass(frozen=True)
class VocabularyTerm:
    category: TermCategory
    term: str
    id: EntityId = field(default_factory=new_entity_id)
    definition: str = ""
    provenance: str = ""
    provenance_uri: Optional[str] = None
    global_provenance: Optional[str] = None
    synonyms: tuple[str, ...] = ()
    status: TermStatus = TermStatus.PROPOSED
    note_for_curator: str = ""
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0


@dataclass(frozen=True)
class DiscussionNote:
    author: str
    timestamp: datetime
    message: str


@dataclass(frozen=True)
class CurationTicket:
    term_id: EntityId
    id: EntityId = field(default_factory=new_entity_id)
    submitted_by: Optional[EntityId] = None
    submitted_at: Optional[datetime] = None
    state: TicketState = TicketState.OPEN
    discussion: tuple[DiscussionNote, ...] = ()
    created_at: Optional[datetime] = None
    updated_at: Optional[datetime] = None
    version: int = 0


@dataclass(frozen=True)
class TermDraft:
    """User-supplied fields of a proposal or a curator edit."""

    category: TermCategory
    term: str
    definition: str = ""
    provenance: str = ""
    provenance_uri: Optional[str] = None
    global_provenance: Optional[str] = None
    synonyms: tuple[str, ...] = ()
    note_for_curator: str = ""


@dataclass
class CurationOutcome:
    term: VocabularyTerm
    ticket: CurationTicket
    references: list[EntityRef] = field(default_factory=list)


class _HasRoles(Protocol):
    roles: frozenset[str]


VocabularyEventHook = Callable[[str, CurationTicket, VocabularyTerm], None]


def term_key(category: TermCategory, term: str) -> tuple[str, str]:
    """Uniqueness key: category plus case-folded term text."""
    return (category.value, term.strip().casefold())


class VocabularyService:
    """Vocabulary operations over a record store.

    Proposals and decisions are serialized per (category, term) key so
    concurrent identical proposals cannot both slip past the uniqueness
    check.
    """

    def __init__(self, store: "Store", on_event: Optional[VocabularyEventHook] = None):
        self._store = store
        self._on_event = on_event

    # -- lookups ------------------------------------------------------------

    def get_term(self, term_id: str) -> VocabularyTerm:
        term = self._store.get_term(term_id)
        if term is None:
            raise NotFoundError(f"vocabulary term {term_id!r} not found")
        return term

    def resolve(self, term_id: str) -> Optional[VocabularyTerm]:
        """Entity-facing lookup; only accepted terms resolve."""
        term = self._store.get_term(term_id)
        if term is not None and term.status is TermStatus.ACCEPTED:
            return term
        return None

    def term_info(self, term_id: str) -> Optional[TermInfo]:
        term = self._store.get_term(term_id)
        if term is None:
            return None
        return TermInfo(category=term.category.value, status=term.status.value, term=term.term)

    def find(self, category: TermCategory, term: str) -> Optional[VocabularyTerm]:
        """Match by (category, term) among non-rejected terms."""
        key = term_key(category, term)
        for candidate in self._store.iter_terms():
            if candidate.status is not TermStatus.REJECTED and term_key(candidate.category, candidate.term) == key:
                return candidate
        return None

    def list_terms(
        self,
        category: Optional[TermCategory] = None,
        status: Optional[TermStatus] = None,
        query: Optional[str] = None,
        page: int = 1,
        size: int = 50,
    ) -> tuple[list[VocabularyTerm], int]:
        """Filtered term page sorted by term text; returns (items, total)."""
        needle = (query or "").strip().casefold()
        matches = []
        for term in self._store.iter_terms():
            if category is not None and term.category is not category:
                continue
            if status is not None and term.status is not status:
                continue
            if needle:
                haystack = " ".join([term.term, term.definition, *term.synonyms]).casefold()
                if needle not in haystack:
                    continue
            matches.append(term)
        matches.sort(key=lambda t: (t.term.casefold(), t.id))
        total = len(matches)
        start = max(page - 1, 0) * size
        return matches[start : start + size], total

    def get_ticket(self, ticket_id: str) -> CurationTicket:
        ticket = self._store.get_ticket(ticket_id)
        if ticket is None:
            raise NotFoundError(f"curation ticket {ticket_id!r} not found")
        return ticket

    def list_tickets(self, state: Optional[TicketState] = None) -> list[CurationTicket]:
        tickets = [t for t in self._store.iter_tickets() if state is None or t.state is state]
        tickets.sort(key=lambda t: (t.submitted_at or t.created_at, t.id))
        return tickets

    # -- lifecycle ----------------------------------------------------------

    def propose_term(self, draft: TermDraft, submitted_by: Optional[EntityId] = None) -> tuple[VocabularyTerm, CurationTicket]:
        """Store a proposed term and open its curation ticket.

        The proposed term is immediately selectable (validation flags it
        as pending) while curators review the ticket.
        """
        report = ValidationReport()
        if not draft.term.strip():
            report.error("term", "term must be non-empty")
        if report.violations:
            raise ValidationFailedError(report)
        with self._store.scoped_lock("cv:" + ":".join(term_key(draft.category, draft.term))):
            existing = self.find(draft.category, draft.term)
            if existing is not None:
                # uniqueness holds over all non-rejected terms, so a pending
                # proposal blocks an identical one as well
                raise DuplicateTermError(
                    f"a {existing.status.value} {draft.category.value} term {draft.term!r} already exists"
                )
            now = self._store.now()
            term = VocabularyTerm(
                id=self._store.new_id(),
                category=draft.category,
                term=draft.term.strip(),
                definition=draft.definition,
                provenance=draft.provenance,
                provenance_uri=draft.provenance_uri,
                global_provenance=draft.global_provenance,
                synonyms=tuple(draft.synonyms),
                status=TermStatus.PROPOSED,
                note_for_curator=draft.note_for_curator,
                created_at=now,
                updated_at=now,
                version=1,
            )
            ticket = CurationTicket(
                id=self._store.new_id(),
                term_id=term.id,
                submitted_by=submitted_by,
                submitted_at=now,
                state=TicketState.OPEN,
                created_at=now,
                updated_at=now,
                version=1,
            )
            self._store.put_term(term)
            self._store.put_ticket(ticket)
        self._emit("proposed", ticket, term)
        return term, ticket

    def begin_review(self, ticket_id: str, curator: _HasRoles) -> CurationTicket:
        self._require_curator(curator)
        ticket = self.get_ticket(ticket_id)
        self._check_transition(ticket, TicketState.IN_REVIEW)
        ticket = replace(ticket, state=TicketState.IN_REVIEW, updated_at=self._store.now(), version=ticket.version + 1)
        self._store.put_ticket(ticket)
        return ticket

    def comment(self, ticket_id: str, author: str, message: str) -> CurationTicket:
        ticket = self.get_ticket(ticket_id)
        note = DiscussionNote(author=author, timestamp=self._store.now(), message=message)
        ticket = replace(
            ticket,
            discussion=ticket.discussion + (note,),
            updated_at=self._store.now(),
            version=ticket.version + 1,
        )
        self._store.put_ticket(ticket)
        return ticket

    def curate(
        self,
        ticket_id: str,
        decision: str,
        curator: _HasRoles,
        edits: Optional[TermDraft] = None,
    ) -> CurationOutcome:
        """Accept or reject a proposal, optionally refining the term first.

        Term status and ticket state change together; on rejection the
        entities still referencing the term are reported, never edited.
        """
        self._require_curator(curator)
        if decision not in ("accept", "reject"):
            raise InvalidStateError(f"decision must be 'accept' or 'reject', got {decision!r}")
        target = TicketState.ACCEPTED if decision == "accept" else TicketState.REJECTED
        ticket = self.get_ticket(ticket_id)
        self._check_transition(ticket, target)
        term = self.get_term(ticket.term_id)
        if edits is not None:
            term = replace(
                term,
                category=edits.category,
                term=edits.term.strip() or term.term,
                definition=edits.definition,
                provenance=edits.provenance,
                provenance_uri=edits.provenance_uri,
                global_provenance=edits.global_provenance,
                synonyms=tuple(edits.synonyms),
                note_for_curator=edits.note_for_curator,
            )
        with self._store.scoped_lock("cv:" + ":".join(term_key(term.category, term.term))):
            if target is TicketState.ACCEPTED:
                duplicate = self.find(term.category, term.term)
                if duplicate is not None and duplicate.id != term.id:
                    raise DuplicateTermError(
                        f"a {duplicate.status.value} {term.category.value} term {term.term!r} already exists"
                    )
            now = self._store.now()
            new_status = TermStatus.ACCEPTED if target is TicketState.ACCEPTED else TermStatus.REJECTED
            term = replace(term, status=new_status, updated_at=now, version=term.version + 1)
            ticket = replace(ticket, state=target, updated_at=now, version=ticket.version + 1)
            self._store.put_term(term)
            self._store.put_ticket(ticket)
        outcome = CurationOutcome(term=term, ticket=ticket)
        if target is TicketState.REJECTED:
            outcome.references = self._store.find_term_references(term.id)
        self._emit(decision + "ed", ticket, term)
        return outcome

    def deprecate(self, term_id: str, curator: _HasRoles) -> VocabularyTerm:
        self._require_curator(curator)
        term = self.get_term(term_id)
        if term.status is not TermStatus.ACCEPTED:
            raise InvalidStateError("only accepted terms can be deprecated")
        term = replace(term, status=TermStatus.DEPRECATED, updated_at=self._store.now(), version=term.version + 1)
        self._store.put_term(term)
        return term

    def upsert_accepted(self, draft: TermDraft, term_id: Optional[str] = None) -> tuple[VocabularyTerm, bool]:
        """Import path: create or refresh an accepted term by natural key.

        Returns (term, created).  Used by vocabulary seeding and `cv import`;
        ``term_id`` lets importers assign stable identifiers.
        """
        with self._store.scoped_lock("cv:" + ":".join(term_key(draft.category, draft.term))):
            existing = self.find(draft.category, draft.term)
            now = self._store.now()
            if existing is None:
                assigned = term_id if term_id and self._store.get_term(term_id) is None else self._store.new_id()
                term = VocabularyTerm(
                    id=assigned,
                    category=draft.category,
                    term=draft.term.strip(),
                    definition=draft.definition,
                    provenance=draft.provenance,
                    provenance_uri=draft.provenance_uri,
                    global_provenance=draft.global_provenance,
                    synonyms=tuple(draft.synonyms),
                    status=TermStatus.ACCEPTED,
                    created_at=now,
                    updated_at=now,
                    version=1,
                )
                self._store.put_term(term)
                return term, True
            if existing.status is TermStatus.PROPOSED:
                # a pending proposal stays with its ticket; the importer
                # reports the row as skipped
                return existing, False
            updated = replace(
                existing,
                definition=draft.definition or existing.definition,
                provenance=draft.provenance or existing.provenance,
                provenance_uri=draft.provenance_uri or existing.provenance_uri,
                global_provenance=draft.global_provenance or existing.global_provenance,
                synonyms=tuple(draft.synonyms) or existing.synonyms,
                status=TermStatus.ACCEPTED,
            )
            if updated != existing:
                updated = replace(updated, updated_at=now, version=existing.version + 1)
                self._store.put_term(updated)
                return updated, False
            return existing, False

    # -- helpers ------------------------------------------------------------

    def _require_curator(self, principal: _HasRoles) -> None:
        roles = getattr(principal, "roles", frozenset())
        if "curator" not in roles and "admin" not in roles:
            raise ForbiddenError("curator role required")

    def _check_transition(self, ticket: CurationTicket, target: TicketState) -> None:
        if target not in TICKET_TRANSITIONS[ticket.state]:
            raise InvalidStateError(f"ticket is {ticket.state.value}; cannot move to {target.value}")

    def _emit(self, event: str, ticket: CurationTicket, term: VocabularyTerm) -> None:
        if self._on_event is not None:
            self._on_event(event, ticket, term)


# --- SKOS export -------------------------------------------------------------

SKOS_PREFIXES = (
    "@prefix skos: <http://www.w3.org/2004/02/skos/core#> .",
    "@prefix dct: <http://purl.org/dc/terms/> .",
)

_TURTLE_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def _turtle_literal(text: str) -> str:
    escaped = "".join(_TURTLE_ESCAPES.get(ch, ch) for ch in text)
    return f'"{escaped}"@en'


def scheme_uri(base_uri: str, category: TermCategory) -> str:
    return f"{base_uri.rstrip('/')}/cv/schemes/{category.value}"


def concept_uri(base_uri: str, term: VocabularyTerm) -> str:
    return f"{base_uri.rstrip('/')}/cv/terms/{term.id}"


class TurtleImportError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_skos_turtle(text: str) -> list[TermDraft]:
    """Read a SKOS concept list back out of the Turtle export shape.

    Understands exactly the subset the exporter emits (one predicate per
    line, ``;`` continuation, ``@prefix`` headers); anything else is an
    error with its line number.
    """
    drafts: dict[str, dict] = {}
    current: Optional[dict] = None
    literal_re = re.compile(r'"((?:[^"\\]|\\.)*)"(?:@[A-Za-z-]+)?')

    def unescape(raw: str) -> str:
        return (
            raw.replace("\\n", "\n").replace("\\r", "\r").replace("\\t", "\t")
            .replace('\\"', '"').replace("\\\\", "\\")
        )

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#") or line.startswith("@prefix"):
            continue
        terminal = line.endswith(" .") or line == "." or line.endswith("> .") or line.rstrip().endswith(".")
        body = line.rstrip(" .;")
        if line.startswith("<") and " a skos:ConceptScheme" in line:
            current = None
            continue
        if line.startswith("<") and " a skos:Concept" in line:
            subject = line[1 : line.index(">")]
            current = {"subject": subject, "synonyms": [], "line": number}
            drafts[subject] = current
            continue
        if current is None:
            if line.startswith("skos:prefLabel"):  # scheme label line
                continue
            if line.startswith("<") or line.startswith("skos:") or line.startswith("dct:"):
                continue
            raise TurtleImportError(number, f"unexpected statement outside a concept: {line!r}")
        if body.startswith("skos:inScheme"):
            start = body.index("<") + 1
            scheme = body[start : body.index(">", start)]
            category_value = scheme.rstrip("/").rsplit("/", 1)[-1]
            try:
                current["category"] = TermCategory(category_value)
            except ValueError as exc:
                raise TurtleImportError(number, f"unknown category {category_value!r}") from exc
        elif body.startswith("skos:prefLabel"):
            match = literal_re.search(body)
            if match is None:
                raise TurtleImportError(number, "prefLabel without a literal")
            current["term"] = unescape(match.group(1))
        elif body.startswith("skos:definition"):
            match = literal_re.search(body)
            if match is None:
                raise TurtleImportError(number, "definition without a literal")
            current["definition"] = unescape(match.group(1))
        elif body.startswith("skos:altLabel"):
            match = literal_re.search(body)
            if match is None:
                raise TurtleImportError(number, "altLabel without a literal")
            current["synonyms"].append(unescape(match.group(1)))
        elif body.startswith("dct:provenance"):
            match = literal_re.search(body)
            if match is None:
                raise TurtleImportError(number, "provenance without a literal")
            current["provenance"] = unescape(match.group(1))
        elif body.startswith("skos:exactMatch"):
            start = body.index("<") + 1
            current["provenance_uri"] = body[start : body.index(">", start)]
        else:
            raise TurtleImportError(number, f"unsupported predicate: {line!r}")
        if terminal:
            pass
    results: list[TermDraft] = []
    for subject, fields in drafts.items():
        if "category" not in fields:
            raise TurtleImportError(fields["line"], f"concept <{subject}> lacks skos:inScheme")
        if not fields.get("term"):
            raise TurtleImportError(fields["line"], f"concept <{subject}> lacks skos:prefLabel")
        results.append(
            TermDraft(
                category=fields["category"],
                term=fields["term"],
                definition=fields.get("definition", ""),
                provenance=fields.get("provenance", ""),
                provenance_uri=fields.get("provenance_uri"),
                synonyms=tuple(fields["synonyms"]),
            )
        )
    results.sort(key=lambda d: (d.category.value, d.term.casefold()))
    return results


def export_skos(terms: Iterable[VocabularyTerm], base_uri: str) -> str:
    """Serialize the accepted vocabulary as SKOS in Turtle syntax.

    The output is a pure function of the accepted-term set: one concept
    per accepted term, one concept scheme per category, everything
    ordered by (category, term, id).
    """
    accepted = sorted(
        (t for t in terms if t.status is TermStatus.ACCEPTED),
        key=lambda t: (t.category.value, t.term.casefold(), t.id),
    )
    lines: list[str] = list(SKOS_PREFIXES)
    lines.append("")
    for category in TermCategory:
        lines.append(f"<{scheme_uri(base_uri, category)}> a skos:ConceptScheme ;")
        lines.append(f"    skos:prefLabel {_turtle_literal(CATEGORY_LABELS[category])} .")
        lines.append("")
    for term in accepted:
        lines.append(f"<{concept_uri(base_uri, term)}> a skos:Concept ;")
        body = [f"    skos:inScheme <{scheme_uri(base_uri, term.category)}>"]
        body.append(f"    skos:prefLabel {_turtle_literal(term.term)}")
        if term.definition:
            body.append(f"    skos:definition {_turtle_literal(term.definition)}")
        for synonym in sorted(term.synonyms):
            body.append(f"    skos:altLabel {_turtle_literal(synonym)}")
        if term.provenance:
            body.append(f"    dct:provenance {_turtle_literal(term.provenance)}")
        if term.provenance_uri:
            body.append(f"    skos:exactMatch <{term.provenance_uri}>")
        lines.append(" ;\n".join(body) + " .")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"
