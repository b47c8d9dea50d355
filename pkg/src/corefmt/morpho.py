"""Lexicon-backed grammatical gender extraction.

A GenderLexicon maps surface forms to readings (gender, category,
informative).  Entity gender follows the first aligned token with a noun
reading, consulting the immediately preceding determiner when the noun
itself is gender-ambiguous.  Pronoun gender is the union of informative
readings over all aligned tokens, so multi-token evidence such as an
object clitic plus an inflected participle resolves even though the
clitic alone says nothing.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from .corpus import GENDERS, register_language
from .errors import ParseError

CATEGORIES = ("noun", "pronoun", "determiner", "adjective", "participle", "verb")
# categories whose readings can serve as pronoun-side evidence
PRONOUN_EVIDENCE = ("pronoun", "participle", "adjective", "verb")

AMBIGUOUS = "ambiguous"
UNKNOWN = "unknown"
NON_INFORMATIVE = "non_informative"

# Hebrew points U+0591-U+05C7, Arabic harakat U+064B-U+065F plus dagger alif
_DIACRITICS_RE = re.compile(r"[֑-ׇً-ٰٟ]")


def normalize_form(form: str) -> str:
    """Lookup normalization: NFC, lowercase, Hebrew/Arabic diacritics
    stripped."""
    form = unicodedata.normalize("NFC", form).lower()
    return _DIACRITICS_RE.sub("", form)


@dataclass(frozen=True)
class GenderReading:
    gender: str
    category: str
    informative: bool = True

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ParseError(f"bad gender {self.gender!r}")
        if self.category not in CATEGORIES:
            raise ParseError(f"unknown category {self.category!r}")
        if not self.informative and self.category != "pronoun":
            raise ParseError(
                f"noninformative flag only applies to pronouns, not {self.category!r}"
            )


@dataclass
class GenderLexicon:
    language: str
    entries: dict[str, tuple[GenderReading, ...]] = field(default_factory=dict)

    def lookup(self, form: str) -> tuple[GenderReading, ...]:
        return self.entries.get(normalize_form(form), ())

    def add(self, form: str, reading: GenderReading) -> None:
        key = normalize_form(form)
        existing = self.entries.get(key, ())
        if reading not in existing:
            self.entries[key] = existing + (reading,)

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())


def load_lexicon(path, language: str) -> GenderLexicon:
    """Load a TSV lexicon: form<TAB>gender<TAB>category[<TAB>flags].

    flags is informative (default) or noninformative; # starts a comment.
    Loading registers the language code.
    """
    register_language(language)
    lex = GenderLexicon(language=language)
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) == 3:
                    form, gender, category = fields
                    flags = "informative"
                elif len(fields) == 4:
                    form, gender, category, flags = fields
                else:
                    raise ParseError(
                        f"expected 3 or 4 tab-separated columns, got {len(fields)}",
                        path,
                        line_no,
                    )
                if flags not in ("informative", "noninformative"):
                    raise ParseError(f"bad flags {flags!r}", path, line_no)
                try:
                    reading = GenderReading(gender, category, flags == "informative")
                except ParseError as exc:
                    raise ParseError(str(exc), path, line_no) from None
                lex.add(form, reading)
    except OSError as exc:
        raise ParseError(f"cannot read lexicon {path}: {exc.strerror or exc}") from None
    if not lex.entries:
        raise ParseError("lexicon has no entries", path)
    return lex


def seed_lexicon(language: str) -> GenderLexicon:
    """Load one of the built-in seed lexicons shipped with the package."""
    pkg = resources.files("corefmt.lexicons")
    candidate = pkg / f"{language}.tsv"
    if not candidate.is_file():
        available = sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".tsv"))
        raise ParseError(
            f"no seed lexicon for {language!r}; available: {', '.join(available)}"
        )
    with resources.as_file(candidate) as real_path:
        return load_lexicon(real_path, language)


@dataclass(frozen=True)
class GenderCall:
    """Outcome of a gender query: a concrete gender, or ambiguous / unknown /
    non_informative, with the readings that drove the decision."""

    value: str
    evidence: tuple[tuple[str, GenderReading], ...] = ()

    def __post_init__(self):
        allowed = GENDERS + (AMBIGUOUS, UNKNOWN, NON_INFORMATIVE)
        if self.value not in allowed:
            raise ParseError(f"bad gender call {self.value!r}")
        if self.value != UNKNOWN and not self.evidence:
            raise ParseError(f"gender call {self.value!r} requires evidence")

    @property
    def is_gender(self) -> bool:
        return self.value in GENDERS


def _require_aligned(aligned_indices, tokens):
    idxs = sorted(set(aligned_indices))
    if not idxs:
        raise ValueError("aligned_indices is empty; caller handles unaligned spans")
    if idxs[0] < 0 or idxs[-1] >= len(tokens):
        raise ValueError(f"aligned index out of range for {len(tokens)} tokens")
    return idxs


def entity_gender(tokens, aligned_indices, lexicon: GenderLexicon) -> GenderCall:
    """Gender of an entity from its aligned target tokens.

    Scans left to right for the first token with a noun reading.  A noun
    ambiguous in the lexicon falls back to the immediately preceding token's
    determiner readings as tie-break; no noun reading at all means unknown.
    """
    idxs = _require_aligned(aligned_indices, tokens)
    for j in idxs:
        noun_readings = [r for r in lexicon.lookup(tokens[j]) if r.category == "noun"]
        if not noun_readings:
            continue
        evidence = [(tokens[j], r) for r in noun_readings]
        genders = {r.gender for r in noun_readings}
        if len(genders) == 1:
            return GenderCall(genders.pop(), tuple(evidence))
        if j > 0:
            det_readings = [
                r for r in lexicon.lookup(tokens[j - 1]) if r.category == "determiner"
            ]
            evidence.extend((tokens[j - 1], r) for r in det_readings)
            narrowed = genders & {r.gender for r in det_readings}
            if len(narrowed) == 1:
                return GenderCall(narrowed.pop(), tuple(evidence))
        return GenderCall(AMBIGUOUS, tuple(evidence))
    return GenderCall(UNKNOWN)


def pronoun_gender(tokens, aligned_indices, lexicon: GenderLexicon) -> GenderCall:
    """Gender demanded by the aligned pronoun material.

    Informative readings of pronoun/participle/adjective/verb categories are
    unioned across every aligned token.  One gender wins; two or more are
    ambiguous; only noninformative pronoun readings (possessives agreeing
    with the possessed noun, bare elided clitics) are non_informative; no
    readings at all are unknown.
    """
    idxs = _require_aligned(aligned_indices, tokens)
    informative: list[tuple[str, GenderReading]] = []
    noninformative: list[tuple[str, GenderReading]] = []
    for j in idxs:
        for reading in lexicon.lookup(tokens[j]):
            if reading.category not in PRONOUN_EVIDENCE:
                continue
            if reading.informative:
                informative.append((tokens[j], reading))
            else:
                noninformative.append((tokens[j], reading))
    genders = {r.gender for _, r in informative}
    if len(genders) == 1:
        return GenderCall(genders.pop(), tuple(informative))
    if len(genders) > 1:
        return GenderCall(AMBIGUOUS, tuple(informative))
    if noninformative:
        return GenderCall(NON_INFORMATIVE, tuple(noninformative))
    return GenderCall(UNKNOWN)
