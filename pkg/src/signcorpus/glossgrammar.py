"""Gloss annotation grammar, normalization, and homosign canonicalization.

An annotation is a whitespace-separated sequence of tokens:

* compounds join units with ``+`` (``A+B``),
* a unit may carry modifiers: ``(?)`` marks an ill-performed sign and
  ``(<digits>)`` a variant index,
* a homosign list attaches alternatives performed identically:
  ``E(=F=G)`` groups E, F and G, with the leading compound first.

Normalization strips modifiers; homosign groups are resolved to a
representative (the member with the most units, ties broken by byte-wise
UTF-8 order of the rendered form); compounds are finally split into units.

Registry dumps are text files with one class per line, members separated by
spaces, representative first.  Annotation files carry
``<sample_id>\\t<raw annotation>`` per line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

from .fileio import read_tsv_pairs, write_tsv_pairs

_SPECIALS = set("+()=")
_TOKEN_RE = re.compile(r"\S+")


class GlossParseError(ValueError):
    """Raised on malformed annotations; carries the character position."""

    def __init__(self, message: str, position: int, expected: str, found: str):
        super().__init__(f"at position {position}: {message}")
        self.position = position
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class GlossUnit:
    """A single sign gloss, optionally flagged ill-performed or a variant."""

    base: str
    ill_performed: bool = False
    variant: int | None = None

    def __post_init__(self) -> None:
        if not self.base:
            raise ValueError("gloss unit base must be nonempty")
        if self.variant is not None and self.variant < 1:
            raise ValueError(f"variant index must be >= 1, got {self.variant}")

    def render(self) -> str:
        out = self.base
        if self.variant is not None:
            out += f"({self.variant})"
        if self.ill_performed:
            out += "(?)"
        return out

    def normalized(self) -> "GlossUnit":
        return GlossUnit(self.base)


@dataclass(frozen=True)
class Compound:
    """One or more units performed as a single compound sign."""

    units: tuple[GlossUnit, ...]

    def __post_init__(self) -> None:
        if not self.units:
            raise ValueError("compound needs at least one unit")

    def render(self) -> str:
        return "+".join(u.render() for u in self.units)

    def normalized(self) -> "Compound":
        return Compound(tuple(u.normalized() for u in self.units))


@dataclass(frozen=True)
class HomosignGroup:
    """Signs performed identically; the leading compound is members[0]."""

    members: tuple[Compound, ...]

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValueError("homosign group needs at least two members")
        normalized = [m.normalized().render() for m in self.members]
        if len(set(normalized)) != len(normalized):
            raise ValueError("homosign members must be distinct after normalization")

    def render(self) -> str:
        head = self.members[0].render()
        rest = "=".join(m.render() for m in self.members[1:])
        return f"{head}(={rest})"

    def normalized(self) -> "HomosignGroup":
        return HomosignGroup(tuple(m.normalized() for m in self.members))


GlossToken = Union[Compound, HomosignGroup]


@dataclass
class GlossAnnotation:
    """Parsed annotation; equality compares tokens, not the raw text."""

    tokens: tuple[GlossToken, ...]
    raw: str = field(compare=False)

    def render(self) -> str:
        return " ".join(t.render() for t in self.tokens)


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding for an annotation string."""

    position: int
    expected: str
    found: str
    message: str


class _TokenParser:
    def __init__(self, raw: str, start: int, end: int):
        self.raw = raw
        self.token_start = start
        self.pos = start
        self.end = end

    def _error(self, message: str, expected: str) -> GlossParseError:
        found = self.raw[self.pos : min(self.pos + 8, self.end)] or "end of token"
        return GlossParseError(message, self.pos, expected, found)

    def _peek(self, offset: int = 0) -> str:
        index = self.pos + offset
        return self.raw[index] if index < self.end else ""

    def parse_token(self) -> GlossToken:
        leader = self.parse_compound()
        token: GlossToken = leader
        if self._peek() == "(" and self._peek(1) == "=":
            members = [leader]
            self.pos += 2
            members.append(self.parse_compound())
            while self._peek() == "=":
                self.pos += 1
                members.append(self.parse_compound())
            if self._peek() != ")":
                raise self._error("unterminated homosign list", "')'")
            self.pos += 1
            try:
                token = HomosignGroup(tuple(members))
            except ValueError as exc:
                raise GlossParseError(
                    str(exc),
                    self.token_start,
                    "homosign group",
                    self.raw[self.token_start : self.end],
                ) from exc
        if self.pos != self.end:
            raise self._error("unexpected trailing characters", "end of token")
        return token

    def parse_compound(self) -> Compound:
        units = [self.parse_unit()]
        while self._peek() == "+":
            self.pos += 1
            units.append(self.parse_unit())
        return Compound(tuple(units))

    def parse_unit(self) -> GlossUnit:
        start = self.pos
        while self.pos < self.end and self.raw[self.pos] not in _SPECIALS:
            self.pos += 1
        base = self.raw[start : self.pos]
        if not base:
            self.pos = start
            raise self._error("empty gloss base", "gloss base")
        ill = False
        variant: int | None = None
        while self._peek() == "(" and self._peek(1) != "=":
            open_pos = self.pos
            nxt = self._peek(1)
            if nxt == "?":
                if self._peek(2) != ")":
                    self.pos = open_pos
                    raise self._error("unbalanced modifier parenthesis", "'(?)'")
                ill = True
                self.pos += 3
            elif nxt.isdigit():
                cursor = self.pos + 1
                while cursor < self.end and self.raw[cursor].isdigit():
                    cursor += 1
                if cursor >= self.end or self.raw[cursor] != ")":
                    self.pos = open_pos
                    raise self._error("unbalanced modifier parenthesis", "')'")
                variant = int(self.raw[self.pos + 1 : cursor])
                if variant < 1:
                    self.pos = open_pos
                    raise self._error("variant index must be >= 1", "positive variant index")
                self.pos = cursor + 1
            else:
                raise self._error("empty or malformed modifier", "'(?)' or '(<digits>)'")
        return GlossUnit(base, ill_performed=ill, variant=variant)


def iter_raw_tokens(raw: str) -> Iterator[tuple[int, int]]:
    for match in _TOKEN_RE.finditer(raw):
        yield match.start(), match.end()


def parse(raw: str) -> GlossAnnotation:
    """Parse a raw annotation string; raises GlossParseError on bad input."""
    tokens = tuple(
        _TokenParser(raw, start, end).parse_token()
        for start, end in iter_raw_tokens(raw)
    )
    return GlossAnnotation(tokens=tokens, raw=raw)


def diagnose(raw: str) -> list[Diagnostic]:
    """Collect one diagnostic per malformed whitespace-separated token."""
    findings = []
    for start, end in iter_raw_tokens(raw):
        try:
            _TokenParser(raw, start, end).parse_token()
        except GlossParseError as exc:
            findings.append(
                Diagnostic(
                    position=exc.position,
                    expected=exc.expected,
                    found=exc.found,
                    message=str(exc),
                )
            )
    return findings


def normalize_units(ann: GlossAnnotation) -> GlossAnnotation:
    """Strip ill-performed flags and variant indices everywhere."""
    tokens = tuple(t.normalized() for t in ann.tokens)
    return GlossAnnotation(tokens=tokens, raw=" ".join(t.render() for t in tokens))


def compound_count(compound: Compound) -> int:
    return len(compound.units)


def _unit_count(rendering: str) -> int:
    return rendering.count("+") + 1


def _pick_representative(renderings: Iterable[str]) -> str:
    """Most units wins; ties go to the lowest byte-wise UTF-8 rendering."""
    return min(renderings, key=lambda r: (-_unit_count(r), r.encode("utf-8")))


class HomosignRegistry:
    """Global equivalence classes of glosses performed identically."""

    def __init__(self, classes: Iterable[Iterable[str]]):
        self._classes: list[tuple[str, list[str]]] = []
        self._member_to_class: dict[str, int] = {}
        for members in classes:
            members = sorted(set(members))
            if len(members) < 2:
                raise ValueError("registry class needs at least two members")
            representative = _pick_representative(members)
            index = len(self._classes)
            self._classes.append((representative, members))
            for member in members:
                if member in self._member_to_class:
                    raise ValueError(f"gloss {member!r} appears in two classes")
                self._member_to_class[member] = index

    def lookup(self, rendering: str) -> str | None:
        """Representative rendering for a member, or None when unregistered."""
        index = self._member_to_class.get(rendering)
        return self._classes[index][0] if index is not None else None

    def classes(self) -> list[tuple[str, list[str]]]:
        """(representative, sorted members) pairs in a deterministic order."""
        return sorted(self._classes, key=lambda c: c[0].encode("utf-8"))

    def __len__(self) -> int:
        return len(self._classes)

    def dump(self, path: str | Path) -> None:
        lines = []
        for representative, members in self.classes():
            rest = [m for m in members if m != representative]
            lines.append(" ".join([representative, *rest]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "HomosignRegistry":
        classes = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                classes.append(line.split())
        return cls(classes)


def collect_homosign_groups(
    annotations: Iterable[GlossAnnotation],
) -> list[HomosignGroup]:
    groups = []
    for ann in annotations:
        for token in ann.tokens:
            if isinstance(token, HomosignGroup):
                groups.append(token)
    return groups


def build_registry(groups: Iterable[HomosignGroup]) -> HomosignRegistry:
    """Merge homosign groups sharing any member into equivalence classes."""
    parent: dict[str, str] = {}

    def find(item: str) -> str:
        root = item
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return root

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for group in groups:
        renderings = [m.normalized().render() for m in group.members]
        for r in renderings:
            parent.setdefault(r, r)
        for other in renderings[1:]:
            union(renderings[0], other)

    classes: dict[str, list[str]] = {}
    for member in parent:
        classes.setdefault(find(member), []).append(member)
    return HomosignRegistry(classes.values())


def to_training_sequence(
    ann: GlossAnnotation, registry: HomosignRegistry | None = None
) -> list[str]:
    """Flatten an annotation into bare gloss units for model training.

    Without a registry (training data): every homosign group is replaced by
    its own-group representative.  With a registry (test data): any compound
    found in a registry class, including homosign leaders, is replaced by the
    class representative.  Compounds are then split into units; the output
    never carries modifiers or ``+``.
    """
    sequence: list[str] = []
    for token in normalize_units(ann).tokens:
        if isinstance(token, HomosignGroup):
            if registry is not None:
                rendering = registry.lookup(token.members[0].render())
                if rendering is None:
                    rendering = _pick_representative(m.render() for m in token.members)
            else:
                rendering = _pick_representative(m.render() for m in token.members)
        else:
            rendering = token.render()
            if registry is not None:
                rendering = registry.lookup(rendering) or rendering
        sequence.extend(rendering.split("+"))
    return sequence


def canonicalize_for_scoring(
    hypothesis: list[str], reference: list[str], registry: HomosignRegistry
) -> tuple[list[str], list[str]]:
    """Map registered glosses to class representatives on both sides.

    Applied before scoring so a hypothesis is not penalized for producing a
    different member of the same homosign class.  Idempotent.
    """

    def canon(tokens: list[str]) -> list[str]:
        return [registry.lookup(t) or t for t in tokens]

    return canon(hypothesis), canon(reference)


def read_annotation_file(path: str | Path) -> list[tuple[str, str]]:
    """Read ``<sample_id>\\t<raw annotation>`` lines."""
    return read_tsv_pairs(path)


def write_annotation_file(rows: Iterable[tuple[str, str]], path: str | Path) -> None:
    write_tsv_pairs(rows, path)
