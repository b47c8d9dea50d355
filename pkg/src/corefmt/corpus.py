"""Corpus data model, deterministic tokenizer, and dataset adapters.

Every dataset is normalized into the same shape: token-indexed candidate
entity spans, one pronoun span, and the index of the gold antecedent.
Adapters exist for the canonical JSON Lines format, Wino-X style JSON
Lines, and WinoMT/BUG style TSV.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import ParseError

GENDERS = ("male", "female", "neutral")
STEREOTYPES = ("stereotypical", "anti_stereotypical", "none")
CORPUS_FORMATS = ("canonical", "winox", "winomt", "bug")

BUILTIN_LANGUAGES = frozenset({"en", "de", "fr", "ru", "es", "he", "ar"})
_registered_languages: set[str] = set()

_LANG_RE = re.compile(r"^[a-z]{2,3}$")


def register_language(code: str) -> str:
    """Register a non-builtin language code (normally via lexicon loading)."""
    if not _LANG_RE.match(code):
        raise ParseError(f"bad language code {code!r}: want 2-3 lowercase letters")
    _registered_languages.add(code)
    return code


def known_languages() -> frozenset:
    return BUILTIN_LANGUAGES | frozenset(_registered_languages)


def check_language(code: str) -> str:
    if code not in known_languages():
        raise ParseError(
            f"unknown language code {code!r}; builtin: "
            + ",".join(sorted(BUILTIN_LANGUAGES))
            + " (others become known once a lexicon for them is loaded)"
        )
    return code


# ---------------------------------------------------------------------------
# tokenizer

_APOSTROPHES = "'’"
# elision clitics like l' / d' / qu': 1-2 letters followed by an apostrophe
_CLITIC_SPLIT_RE = re.compile(r"^([^\W\d_]{1,2}['’])(.+)$")
_CLITIC_FORM_RE = re.compile(r"^[^\W\d_]{1,2}['’]$")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_chunk(chunk: str) -> list[str]:
    out = []
    while len(chunk) > 1 and _is_punct(chunk[0]):
        out.append(chunk[0])
        chunk = chunk[1:]
    tail = []
    # trailing punctuation peels off one char at a time; clitic forms such
    # as "l'" keep their apostrophe
    while len(chunk) > 1 and _is_punct(chunk[-1]) and not _CLITIC_FORM_RE.match(chunk):
        tail.append(chunk[-1])
        chunk = chunk[:-1]
    m = _CLITIC_SPLIT_RE.match(chunk)
    if m:
        out.append(m.group(1))
        out.append(m.group(2))
    elif chunk:
        out.append(chunk)
    out.extend(reversed(tail))
    return out


def tokenize(text: str) -> list[str]:
    """Deterministic tokenization: whitespace split, then leading/trailing
    punctuation becomes separate tokens, then elision clitics (l', d', n',
    qu') are split after the apostrophe.  Contractions with longer prefixes
    ("didn't") stay whole."""
    return [tok for tok, _ in tokenize_with_origins(text)]


def tokenize_with_origins(text: str) -> list[tuple[str, int]]:
    """Like tokenize() but pairs each token with the index of the
    whitespace-delimited chunk it came from."""
    text = unicodedata.normalize("NFC", text)
    out = []
    for w, chunk in enumerate(text.split()):
        for tok in _split_chunk(chunk):
            out.append((tok, w))
    return out


# ---------------------------------------------------------------------------
# core types


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token span [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ParseError(f"bad span [{self.start},{self.end})")

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def to_list(self) -> list[int]:
        return [self.start, self.end]


@dataclass
class AnnotatedSentence:
    id: str
    tokens: list[str]
    entities: list[Span]
    pronoun: Span
    gold_antecedent: int
    source_gender: str | None = None
    stereotype: str | None = None
    gold_target_pronouns: dict[str, str] = field(default_factory=dict)

    def validate(self) -> "AnnotatedSentence":
        n = len(self.tokens)
        if n == 0:
            raise ParseError(f"sentence {self.id!r}: empty token list")
        if not self.entities:
            raise ParseError(f"sentence {self.id!r}: no candidate entities")
        for span in list(self.entities) + [self.pronoun]:
            if span.end > n:
                raise ParseError(
                    f"sentence {self.id!r}: span [{span.start},{span.end}) exceeds "
                    f"{n} tokens"
                )
        for a in range(len(self.entities)):
            for b in range(a + 1, len(self.entities)):
                if self.entities[a].overlaps(self.entities[b]):
                    raise ParseError(f"sentence {self.id!r}: overlapping entity spans")
        for ent in self.entities:
            if ent.overlaps(self.pronoun):
                raise ParseError(
                    f"sentence {self.id!r}: pronoun span overlaps an entity span"
                )
        if not 0 <= self.gold_antecedent < len(self.entities):
            raise ParseError(
                f"sentence {self.id!r}: gold_antecedent {self.gold_antecedent} out of "
                f"range for {len(self.entities)} entities"
            )
        if self.source_gender is not None and self.source_gender not in GENDERS:
            raise ParseError(
                f"sentence {self.id!r}: bad source_gender {self.source_gender!r}"
            )
        if self.stereotype is not None and self.stereotype not in STEREOTYPES:
            raise ParseError(f"sentence {self.id!r}: bad stereotype {self.stereotype!r}")
        for lang, pron in self.gold_target_pronouns.items():
            check_language(lang)
            if not isinstance(pron, str) or not pron:
                raise ParseError(
                    f"sentence {self.id!r}: empty gold pronoun for {lang!r}"
                )
        return self

    def entity_span(self) -> Span:
        return self.entities[self.gold_antecedent]


@dataclass
class Corpus:
    dataset_name: str
    sentences: list[AnnotatedSentence]
    source_language: str = "en"

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise ParseError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)
        self._by_id = {s.id: s for s in self.sentences}

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def ids(self) -> list[str]:
        return [s.id for s in self.sentences]

    def get(self, ident: str) -> AnnotatedSentence:
        return self._by_id[ident]

    def by_id(self) -> dict[str, AnnotatedSentence]:
        return dict(self._by_id)


@dataclass
class ClusterSet:
    id: str
    clusters: list[list[Span]]


# ---------------------------------------------------------------------------
# canonical JSON Lines

_CANONICAL_KEYS = (
    "id",
    "tokens",
    "entities",
    "pronoun",
    "gold_antecedent",
    "source_gender",
    "stereotype",
    "gold_target_pronouns",
)
_CANONICAL_REQUIRED = _CANONICAL_KEYS[:5]


def _span_from_json(raw, path, line_no) -> Span:
    if (
        not isinstance(raw, list)
        or len(raw) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
    ):
        raise ParseError(f"bad span {raw!r}: want [start, end]", path, line_no)
    try:
        return Span(raw[0], raw[1])
    except ParseError as exc:
        raise ParseError(str(exc), path, line_no) from None


def _parse_canonical_record(obj, path, line_no) -> AnnotatedSentence:
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", path, line_no)
    unknown = set(obj) - set(_CANONICAL_KEYS)
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", path, line_no)
    missing = [k for k in _CANONICAL_REQUIRED if k not in obj]
    if missing:
        raise ParseError(f"missing keys {missing}", path, line_no)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ParseError("id must be a non-empty string", path, line_no)
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ParseError("tokens must be a list of strings", path, line_no)
    tokens = [unicodedata.normalize("NFC", t) for t in tokens]
    entities = obj["entities"]
    if not isinstance(entities, list):
        raise ParseError("entities must be a list of spans", path, line_no)
    gold = obj["gold_antecedent"]
    if not isinstance(gold, int) or isinstance(gold, bool):
        raise ParseError("gold_antecedent must be an integer", path, line_no)
    pronouns = obj.get("gold_target_pronouns", {})
    if not isinstance(pronouns, dict):
        raise ParseError("gold_target_pronouns must be an object", path, line_no)
    sent = AnnotatedSentence(
        id=obj["id"],
        tokens=tokens,
        entities=[_span_from_json(e, path, line_no) for e in entities],
        pronoun=_span_from_json(obj["pronoun"], path, line_no),
        gold_antecedent=gold,
        source_gender=obj.get("source_gender"),
        stereotype=obj.get("stereotype"),
        gold_target_pronouns=dict(pronouns),
    )
    try:
        return sent.validate()
    except ParseError as exc:
        raise ParseError(str(exc), path, line_no) from None


def sentence_to_json(sent: AnnotatedSentence) -> str:
    """Canonical single-line serialization; fixed key order, compact
    separators, sorted pronoun languages, no ASCII escaping."""
    obj = {
        "id": sent.id,
        "tokens": sent.tokens,
        "entities": [e.to_list() for e in sent.entities],
        "pronoun": sent.pronoun.to_list(),
        "gold_antecedent": sent.gold_antecedent,
    }
    if sent.source_gender is not None:
        obj["source_gender"] = sent.source_gender
    if sent.stereotype is not None:
        obj["stereotype"] = sent.stereotype
    if sent.gold_target_pronouns:
        obj["gold_target_pronouns"] = {
            k: sent.gold_target_pronouns[k] for k in sorted(sent.gold_target_pronouns)
        }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def serialize_corpus(corpus: Corpus) -> str:
    return "".join(sentence_to_json(s) + "\n" for s in corpus)


# ---------------------------------------------------------------------------
# adapters


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None


def _json_records(path):
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            yield line_no, json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path, line_no) from None


def _find_subsequence(tokens_lower, needle_lower, blocked=(), start=0):
    """First occurrence of needle in tokens at or after start whose span does
    not overlap any span in blocked.  Returns a Span or None."""
    k = len(needle_lower)
    if k == 0:
        return None
    for s in range(start, len(tokens_lower) - k + 1):
        if tokens_lower[s : s + k] != needle_lower:
            continue
        span = Span(s, s + k)
        if any(span.overlaps(b) for b in blocked):
            continue
        return span
    return None


def _parse_winox_record(obj, path, line_no) -> AnnotatedSentence:
    for key in ("qID", "sentence", "option1", "option2", "answer"):
        if key not in obj:
            raise ParseError(f"missing key {key!r}", path, line_no)
    tokens = tokenize(obj["sentence"])
    lower = [t.lower() for t in tokens]
    answer = obj["answer"]
    if answer not in (1, 2):
        raise ParseError(f"answer must be 1 or 2, got {answer!r}", path, line_no)

    spans = []
    for key in ("option1", "option2"):
        needle = [t.lower() for t in tokenize(obj[key])]
        span = _find_subsequence(lower, needle, blocked=spans)
        if span is None:
            raise ParseError(
                f"{key} {obj[key]!r} not found in sentence (id {obj['qID']!r})",
                path,
                line_no,
            )
        spans.append(span)

    pronoun_form = obj.get("pronoun", "it").lower()
    window = None
    if obj.get("pronoun_context"):
        ctx = [t.lower() for t in tokenize(obj["pronoun_context"])]
        window = _find_subsequence(lower, ctx)
        if window is None:
            raise ParseError(
                f"pronoun_context not found in sentence (id {obj['qID']!r})",
                path,
                line_no,
            )
    pron_span = None
    for i, tok in enumerate(lower):
        if tok != pronoun_form:
            continue
        if window is not None and not (window.start <= i < window.end):
            continue
        cand = Span(i, i + 1)
        if any(cand.overlaps(s) for s in spans):
            continue
        pron_span = cand
        break
    if pron_span is None:
        raise ParseError(
            f"pronoun {pronoun_form!r} not found outside entities "
            f"(id {obj['qID']!r})",
            path,
            line_no,
        )

    gold_pronouns = obj.get("gold_target_pronouns", {})
    if not isinstance(gold_pronouns, dict):
        raise ParseError("gold_target_pronouns must be an object", path, line_no)
    sent = AnnotatedSentence(
        id=str(obj["qID"]),
        tokens=tokens,
        entities=spans,
        pronoun=pron_span,
        gold_antecedent=answer - 1,
        gold_target_pronouns=dict(gold_pronouns),
    )
    try:
        return sent.validate()
    except ParseError as exc:
        raise ParseError(str(exc), path, line_no) from None


_TSV_COLUMNS = (
    "gender",
    "profession_index",
    "sentence",
    "profession",
    "pronoun",
    "stereotype",
)


def _parse_tsv_row(fields, path, line_no, ident) -> AnnotatedSentence:
    if len(fields) != len(_TSV_COLUMNS):
        raise ParseError(
            f"expected {len(_TSV_COLUMNS)} tab-separated columns "
            f"({', '.join(_TSV_COLUMNS)}), got {len(fields)}",
            path,
            line_no,
        )
    gender, index_s, sentence, profession, pronoun, stereotype = fields
    if gender not in GENDERS:
        raise ParseError(f"bad gender {gender!r}", path, line_no)
    if stereotype not in STEREOTYPES:
        raise ParseError(f"bad stereotype flag {stereotype!r}", path, line_no)
    try:
        prof_index = int(index_s)
    except ValueError:
        raise ParseError(f"bad profession index {index_s!r}", path, line_no) from None

    pairs = tokenize_with_origins(sentence)
    tokens = [t for t, _ in pairs]
    origins = [w for _, w in pairs]
    lower = [t.lower() for t in tokens]
    needle = [t.lower() for t in tokenize(profession)]
    matches = [
        Span(s, s + len(needle))
        for s in range(len(lower) - len(needle) + 1)
        if lower[s : s + len(needle)] == needle and origins[s] == prof_index
    ]
    if len(matches) != 1:
        raise ParseError(
            f"profession {profession!r} at word index {prof_index} matched "
            f"{len(matches)} positions",
            path,
            line_no,
        )
    ent = matches[0]

    pron_span = None
    for i, tok in enumerate(lower):
        if tok == pronoun.lower() and not Span(i, i + 1).overlaps(ent):
            pron_span = Span(i, i + 1)
            break
    if pron_span is None:
        raise ParseError(f"pronoun {pronoun!r} not found", path, line_no)

    sent = AnnotatedSentence(
        id=ident,
        tokens=tokens,
        entities=[ent],
        pronoun=pron_span,
        gold_antecedent=0,
        source_gender=gender,
        stereotype=None if stereotype == "none" else stereotype,
    )
    try:
        return sent.validate()
    except ParseError as exc:
        raise ParseError(str(exc), path, line_no) from None


def parse_corpus(path, fmt: str, dataset_name: str | None = None) -> Corpus:
    """Parse a dataset file into a Corpus.

    fmt: canonical | winox | winomt | bug.  Parsing is all-or-nothing: the
    first malformed record raises and no partial corpus escapes.
    """
    from pathlib import Path

    if dataset_name is None:
        dataset_name = Path(path).stem
    sentences: list[AnnotatedSentence] = []

    if fmt == "canonical":
        for line_no, obj in _json_records(path):
            sentences.append(_parse_canonical_record(obj, path, line_no))
    elif fmt == "winox":
        for line_no, obj in _json_records(path):
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", path, line_no)
            sentences.append(_parse_winox_record(obj, path, line_no))
    elif fmt in ("winomt", "bug"):
        lines = _read_lines(path)
        if fmt == "bug":
            if not lines or lines[0].split("\t") != list(_TSV_COLUMNS):
                got = lines[0].split("\t") if lines else []
                raise ParseError(
                    "header mismatch: expected exactly "
                    f"{list(_TSV_COLUMNS)}, got {got}; refusing to guess columns",
                    path,
                    1,
                )
            lines = lines[1:]
            offset = 2
        else:
            offset = 1
        row = 0
        for line_no, line in enumerate(lines, start=offset):
            if not line.strip():
                continue
            row += 1
            sentences.append(
                _parse_tsv_row(line.split("\t"), path, line_no, ident=str(row))
            )
    else:
        raise ParseError(f"unknown corpus format {fmt!r}")

    if not sentences:
        raise ParseError("empty corpus", path)
    return Corpus(dataset_name=dataset_name, sentences=sentences)


def parse_clusters(path, corpus: Corpus | None = None) -> dict[str, ClusterSet]:
    """Parse predicted/gold coreference clusters (JSON Lines: id + list of
    clusters, each a list of [start, end) spans).  When a corpus is given,
    ids and span bounds are validated against it."""
    out: dict[str, ClusterSet] = {}
    for line_no, obj in _json_records(path):
        if not isinstance(obj, dict) or "id" not in obj or "clusters" not in obj:
            raise ParseError("record needs id and clusters", path, line_no)
        ident = obj["id"]
        if not isinstance(ident, str):
            raise ParseError("id must be a string", path, line_no)
        if ident in out:
            raise ParseError(f"duplicate id {ident!r}", path, line_no)
        raw_clusters = obj["clusters"]
        if not isinstance(raw_clusters, list):
            raise ParseError("clusters must be a list", path, line_no)
        clusters = []
        for raw in raw_clusters:
            if not isinstance(raw, list):
                raise ParseError("cluster must be a list of spans", path, line_no)
            spans = sorted(
                (_span_from_json(s, path, line_no) for s in raw),
                key=lambda sp: (sp.start, sp.end),
            )
            for a, b in zip(spans, spans[1:]):
                if a == b:
                    raise ParseError(
                        f"duplicate span [{a.start},{a.end}) in cluster "
                        f"(id {ident!r})",
                        path,
                        line_no,
                    )
            clusters.append(spans)
        if corpus is not None:
            try:
                sent = corpus.get(ident)
            except KeyError:
                raise ParseError(
                    f"id {ident!r} not present in corpus", path, line_no
                ) from None
            n = len(sent.tokens)
            for cluster in clusters:
                for span in cluster:
                    if span.end > n:
                        raise ParseError(
                            f"span [{span.start},{span.end}) exceeds {n} tokens "
                            f"(id {ident!r})",
                            path,
                            line_no,
                        )
        out[ident] = ClusterSet(id=ident, clusters=clusters)
    return out
