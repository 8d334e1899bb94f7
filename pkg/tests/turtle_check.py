"""Independent Turtle reader for verifying SKOS exports.

Implements the Turtle subset needed to read any well-formed concept
scheme document (prefix declarations, IRIs, prefixed names, ``a``,
language-tagged literals, predicate/object lists).  Written from the
grammar, not from the exporter, so it stays a genuine second opinion.
"""

from __future__ import annotations

from typing import Iterator, Union

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

IriNode = tuple[str, str]  # ("iri", value)
LiteralNode = tuple[str, str, str]  # ("literal", text, langtag)
Node = Union[IriNode, LiteralNode]
Triple = tuple[str, str, Node]


class TurtleSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    i = 0
    line = 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "<":
            end = text.find(">", i)
            if end < 0:
                raise TurtleSyntaxError(f"line {line}: unterminated IRI")
            yield ("iri", text[i + 1 : end], line)
            i = end + 1
        elif ch == '"':
            j = i + 1
            out = []
            while j < n:
                c = text[j]
                if c == "\\":
                    if j + 1 >= n:
                        raise TurtleSyntaxError(f"line {line}: dangling escape")
                    escapes = {"n": "\n", "r": "\r", "t": "\t", '"': '"', "\\": "\\"}
                    nxt = text[j + 1]
                    if nxt not in escapes:
                        raise TurtleSyntaxError(f"line {line}: unknown escape \\{nxt}")
                    out.append(escapes[nxt])
                    j += 2
                elif c == '"':
                    break
                elif c == "\n":
                    raise TurtleSyntaxError(f"line {line}: newline inside literal")
                else:
                    out.append(c)
                    j += 1
            else:
                raise TurtleSyntaxError(f"line {line}: unterminated literal")
            yield ("string", "".join(out), line)
            i = j + 1
        elif ch in ".;,":
            yield ("punct", ch, line)
            i += 1
        elif ch == "@":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "-"):
                j += 1
            word = text[i + 1 : j]
            if word == "prefix":
                yield ("kw_prefix", word, line)
            else:
                yield ("langtag", word, line)
            i = j
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '.;,<>"@':
                j += 1
            word = text[i:j]
            if not word:
                raise TurtleSyntaxError(f"line {line}: unexpected character {ch!r}")
            if word == "a":
                yield ("kw_a", word, line)
            elif ":" in word:
                yield ("pname", word, line)
            else:
                raise TurtleSyntaxError(f"line {line}: unexpected token {word!r}")
            i = j


class _TokenStream:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        token = self.peek()
        if token is None:
            raise TurtleSyntaxError("unexpected end of document")
        self.pos += 1
        return token

    def expect_punct(self, value: str):
        kind, got, line = self.next()
        if kind != "punct" or got != value:
            raise TurtleSyntaxError(f"line {line}: expected {value!r}, got {got!r}")


def parse_turtle(text: str) -> set[Triple]:
    """Full-document parse; returns the triple set (literals keep language tags)."""
    stream = _TokenStream(text)
    prefixes: dict[str, str] = {}

    def resolve(token) -> str:
        kind, value, line = token
        if kind == "iri":
            return value
        if kind == "kw_a":
            return RDF_TYPE
        if kind == "pname":
            prefix, _, local = value.partition(":")
            if prefix not in prefixes:
                raise TurtleSyntaxError(f"line {line}: undeclared prefix {prefix!r}")
            return prefixes[prefix] + local
        raise TurtleSyntaxError(f"line {line}: expected an IRI or prefixed name, got {value!r}")

    def parse_object() -> Node:
        token = stream.peek()
        if token is None:
            raise TurtleSyntaxError("unexpected end of document")
        kind, value, line = token
        if kind == "string":
            stream.next()
            lang = ""
            nxt = stream.peek()
            if nxt is not None and nxt[0] == "langtag":
                lang = stream.next()[1]
            return ("literal", value, lang)
        return ("iri", resolve(stream.next()))

    triples: set[Triple] = set()
    while stream.peek() is not None:
        kind, value, line = stream.peek()
        if kind == "kw_prefix":
            stream.next()
            pkind, pvalue, pline = stream.next()
            if pkind != "pname" or not pvalue.endswith(":"):
                raise TurtleSyntaxError(f"line {pline}: expected prefix name")
            ikind, ivalue, iline = stream.next()
            if ikind != "iri":
                raise TurtleSyntaxError(f"line {iline}: expected namespace IRI")
            prefixes[pvalue[:-1]] = ivalue
            stream.expect_punct(".")
            continue
        subject = resolve(stream.next())
        while True:
            predicate = resolve(stream.next())
            while True:
                triples.add((subject, predicate, parse_object()))
                nkind, nvalue, nline = stream.next()
                if nkind != "punct":
                    raise TurtleSyntaxError(f"line {nline}: expected punctuation, got {nvalue!r}")
                if nvalue == ",":
                    continue
                break
            if nvalue == ";":
                continue
            if nvalue == ".":
                break
            raise TurtleSyntaxError(f"line {nline}: unexpected {nvalue!r}")
    return triples
