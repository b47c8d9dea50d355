"""Building coreference-marked fine-tuning corpora.

Sentences annotated with coreference clusters are filtered down to the
useful ones and rewritten with inline markers: every mention of cluster k
is wrapped in standalone <ENTk> ... </ENTk> tokens.  strip_markers is the
exact inverse, so marked text can be turned back into tokens plus clusters
at any point.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .corpus import Span, _span_from_json
from .errors import ParseError

logger = logging.getLogger(__name__)

GENDERED_PRONOUNS = frozenset({"he", "she", "her", "him", "hers", "his"})

_MARKER_RE = re.compile(r"^<(/?)ENT(\d+)>$")


@dataclass
class CorefSentence:
    """Tokens plus coreference clusters over them."""

    id: str
    tokens: list[str]
    clusters: list[list[Span]] = field(default_factory=list)

    def validate(self) -> None:
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r}: no tokens")
        n = len(self.tokens)
        for ci, cluster in enumerate(self.clusters):
            for span in cluster:
                if span.end > n:
                    raise ValueError(
                        f"sentence {self.id!r}: cluster {ci} span "
                        f"[{span.start},{span.end}) exceeds {n} tokens"
                    )

    def mention_text(self, span: Span) -> str:
        return " ".join(self.tokens[span.start : span.end])


@dataclass(frozen=True)
class MarkedSentence:
    """A sentence after marker insertion.

    clusters holds the mentions that were actually marked, in marker-number
    order (cluster k at index k-1), with spans in original coordinates.
    """

    id: str
    tokens: tuple[str, ...]
    clusters: tuple[tuple[Span, ...], ...]
    n_dropped_mentions: int = 0

    def text(self) -> str:
        return " ".join(self.tokens)


def has_coref(sentence: CorefSentence) -> bool:
    return any(len(cluster) >= 2 for cluster in sentence.clusters)


def filter_coref(sentences) -> list[CorefSentence]:
    """Keep sentences with at least one cluster of two or more mentions."""
    return [s for s in sentences if has_coref(s)]


def has_gendered_pronoun(sentence: CorefSentence) -> bool:
    for cluster in sentence.clusters:
        if len(cluster) < 2:
            continue
        for span in cluster:
            if sentence.mention_text(span).lower() in GENDERED_PRONOUNS:
                return True
    return False


def filter_gender(sentences) -> list[CorefSentence]:
    """Keep sentences where a non-singleton cluster mentions a gendered
    pronoun (he, she, him, her, his, hers)."""
    return [s for s in sentences if has_gendered_pronoun(s)]


def drop_singletons(sentence: CorefSentence) -> CorefSentence:
    """The same sentence with single-mention clusters removed, ready for
    insert_markers."""
    return CorefSentence(
        id=sentence.id,
        tokens=sentence.tokens,
        clusters=[c for c in sentence.clusters if len(c) >= 2],
    )


def pronoun_clusters(sentence: CorefSentence) -> CorefSentence:
    """Restrict to non-singleton clusters containing a gendered pronoun."""
    kept = []
    for cluster in sentence.clusters:
        if len(cluster) < 2:
            continue
        if any(sentence.mention_text(s).lower() in GENDERED_PRONOUNS for s in cluster):
            kept.append(cluster)
    return CorefSentence(id=sentence.id, tokens=sentence.tokens, clusters=kept)


def insert_markers(sentence: CorefSentence) -> MarkedSentence:
    """Wrap every cluster mention in <ENTk> / </ENTk> tokens.

    Clusters must already be non-singleton (drop_singletons is the usual
    step before this); a single-mention cluster raises ValueError.
    Overlapping mentions cannot all be marked: mentions are visited sorted
    by (start, longer first, cluster order) and any one overlapping an
    already kept mention is dropped with a warning.  Clusters that keep at
    least one mention are renumbered 1..K by their earliest kept mention.
    """
    sentence.validate()
    for ci, cluster in enumerate(sentence.clusters):
        if len(cluster) < 2:
            raise ValueError(
                f"sentence {sentence.id!r}: cluster {ci} has a single mention; "
                "drop singletons before marking"
            )
    mentions = []
    for ci, cluster in enumerate(sentence.clusters):
        for span in cluster:
            mentions.append((span.start, span.start - span.end, ci, span))
    mentions.sort(key=lambda m: m[:3])

    kept: dict[int, list[Span]] = {}
    taken: list[Span] = []
    dropped = 0
    for _, _, ci, span in mentions:
        if any(span.overlaps(other) for other in taken):
            logger.warning(
                "sentence %s: dropping mention [%d,%d) overlapping a marked one",
                sentence.id,
                span.start,
                span.end,
            )
            dropped += 1
            continue
        taken.append(span)
        kept.setdefault(ci, []).append(span)

    order = sorted(kept, key=lambda ci: min(s.start for s in kept[ci]))
    number = {ci: k for k, ci in enumerate(order, start=1)}

    open_at: dict[int, int] = {}
    close_at: dict[int, int] = {}
    for ci, spans in kept.items():
        for span in spans:
            open_at[span.start] = number[ci]
            close_at[span.end] = number[ci]

    out = []
    for i, token in enumerate(sentence.tokens):
        if i in open_at:
            out.append(f"<ENT{open_at[i]}>")
        out.append(token)
        if i + 1 in close_at:
            out.append(f"</ENT{close_at[i + 1]}>")
    marked_clusters = tuple(
        tuple(sorted(kept[ci], key=lambda s: s.start)) for ci in order
    )
    return MarkedSentence(
        id=sentence.id,
        tokens=tuple(out),
        clusters=marked_clusters,
        n_dropped_mentions=dropped,
    )


def strip_markers(tokens, sentence_id: str = "?") -> tuple[list[str], list[list[Span]]]:
    """Invert insert_markers: recover plain tokens and clusters.

    Markers must be standalone tokens of the form <ENTk> / </ENTk> with
    k >= 1 and no leading zeros, must not nest or interleave, must balance,
    must enclose at least one token, and the numbers present must be
    exactly 1..K.  Violations raise ParseError naming the token position.
    """
    plain: list[str] = []
    clusters: dict[int, list[Span]] = {}
    open_k: int | None = None
    open_start = -1

    def err(msg: str, pos: int):
        raise ParseError(f"sentence {sentence_id!r}, token {pos}: {msg}")

    for pos, token in enumerate(tokens):
        m = _MARKER_RE.match(token)
        if m is None:
            if "<ENT" in token or "</ENT" in token:
                err(f"malformed marker {token!r}", pos)
            plain.append(token)
            continue
        closing, digits = m.group(1) == "/", m.group(2)
        if digits[0] == "0":
            err(f"marker number must be >= 1 without leading zeros, got {token!r}", pos)
        k = int(digits)
        if not closing:
            if open_k is not None:
                err(f"marker <ENT{k}> opened while <ENT{open_k}> is still open", pos)
            open_k = k
            open_start = len(plain)
        else:
            if open_k is None:
                err(f"closing marker </ENT{k}> with nothing open", pos)
            if k != open_k:
                err(f"closing marker </ENT{k}> does not match open <ENT{open_k}>", pos)
            if len(plain) == open_start:
                err(f"marker region <ENT{k}> encloses no tokens", pos)
            clusters.setdefault(k, []).append(Span(open_start, len(plain)))
            open_k = None
    if open_k is not None:
        err(f"marker <ENT{open_k}> is never closed", len(tokens))

    if clusters:
        ks = sorted(clusters)
        if ks != list(range(1, len(ks) + 1)):
            raise ParseError(
                f"sentence {sentence_id!r}: marker numbers {ks} are not 1..{len(ks)}"
            )
        return plain, [clusters[k] for k in ks]
    return plain, []


def load_coref_corpus(path) -> list[CorefSentence]:
    """Read a JSON Lines file of {id, tokens, clusters} records."""
    sentences = []
    seen = set()
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad JSON: {exc.msg}", path, line_no) from None
                if not isinstance(obj, dict) or set(obj) != {"id", "tokens", "clusters"}:
                    raise ParseError(
                        "record must have exactly the keys id, tokens, clusters",
                        path,
                        line_no,
                    )
                ident = obj["id"]
                if not isinstance(ident, str) or not ident:
                    raise ParseError("id must be a non-empty string", path, line_no)
                if ident in seen:
                    raise ParseError(f"duplicate id {ident!r}", path, line_no)
                seen.add(ident)
                tokens = obj["tokens"]
                if (
                    not isinstance(tokens, list)
                    or not tokens
                    or not all(isinstance(t, str) and t for t in tokens)
                ):
                    raise ParseError(
                        "tokens must be a non-empty list of non-empty strings",
                        path,
                        line_no,
                    )
                raw_clusters = obj["clusters"]
                if not isinstance(raw_clusters, list):
                    raise ParseError("clusters must be a list", path, line_no)
                clusters = []
                for raw in raw_clusters:
                    if not isinstance(raw, list):
                        raise ParseError("cluster must be a list of spans", path, line_no)
                    clusters.append([_span_from_json(s, path, line_no) for s in raw])
                sent = CorefSentence(id=ident, tokens=tokens, clusters=clusters)
                try:
                    sent.validate()
                except ValueError as exc:
                    raise ParseError(str(exc), path, line_no) from None
                sentences.append(sent)
    except OSError as exc:
        raise ParseError(f"cannot read corpus {path}: {exc.strerror or exc}") from None
    return sentences


def save_marked(path, marked) -> None:
    """Write marked sentences as JSON Lines of {id, tokens, clusters}."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in marked:
            obj = {
                "id": m.id,
                "tokens": list(m.tokens),
                "clusters": [[s.to_list() for s in cluster] for cluster in m.clusters],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
