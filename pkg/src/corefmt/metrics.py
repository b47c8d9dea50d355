"""Judging translations for gender agreement and aggregating scores.

A sentence pair is judged without reference translations: the aligned
target tokens for the marked entity and for the pronoun each get a gender
call from the lexicon, and the two calls either agree (consistent),
disagree (inconsistent), or the sentence is set aside as omitted with a
reason.  Scores are percentages over the relevant populations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .align.types import Alignment
from .corpus import GENDERS, AnnotatedSentence, Corpus, _is_punct
from .errors import EvalError, ParseError
from .morpho import (
    AMBIGUOUS,
    NON_INFORMATIVE,
    UNKNOWN,
    GenderLexicon,
    entity_gender,
    pronoun_gender,
)

OMITTED_STATUSES = (
    "omitted_unaligned",
    "omitted_unknown_gender",
    "omitted_non_informative",
)
STATUSES = ("consistent", "inconsistent") + OMITTED_STATUSES

CALL_VALUES = GENDERS + (AMBIGUOUS, UNKNOWN, NON_INFORMATIVE)

MATCHING_MODES = ("exact", "head_overlap")


@dataclass(frozen=True)
class EvalVerdict:
    """Judgement for one sentence pair.

    entity_gender / pronoun_gender are the lexicon call values, or None
    when that side had no aligned target tokens.  pronoun_target_tokens
    keeps the aligned surface forms so downstream scoring does not need
    the translation file again.
    """

    sentence_id: str
    status: str
    entity_gender: str | None
    pronoun_gender: str | None
    neutral_pronoun: bool
    entity_target_indices: tuple[int, ...] = ()
    pronoun_target_indices: tuple[int, ...] = ()
    pronoun_target_tokens: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        for value, label in (
            (self.entity_gender, "entity_gender"),
            (self.pronoun_gender, "pronoun_gender"),
        ):
            if value is not None and value not in CALL_VALUES:
                raise ValueError(f"bad {label} {value!r}")


def decide_status(entity_value: str | None, pronoun_value: str | None) -> str:
    """Map a pair of gender call values to a verdict status.

    None means that side had no aligned target tokens.  Checks run in a
    fixed order so every combination lands on exactly one status, and an
    entity-side problem always wins over a pronoun-side one.
    """
    if entity_value is None or pronoun_value is None:
        return "omitted_unaligned"
    if entity_value not in CALL_VALUES:
        raise ValueError(f"bad entity call {entity_value!r}")
    if pronoun_value not in CALL_VALUES:
        raise ValueError(f"bad pronoun call {pronoun_value!r}")
    if entity_value == NON_INFORMATIVE:
        return "omitted_non_informative"
    if entity_value in (UNKNOWN, AMBIGUOUS):
        return "omitted_unknown_gender"
    if pronoun_value == NON_INFORMATIVE:
        return "omitted_non_informative"
    if pronoun_value in (UNKNOWN, AMBIGUOUS):
        return "omitted_unknown_gender"
    return "consistent" if entity_value == pronoun_value else "inconsistent"


def judge_sentence(
    sentence: AnnotatedSentence,
    target_tokens: list[str],
    alignment: Alignment,
    lexicon: GenderLexicon,
) -> EvalVerdict:
    """Judge one sentence pair given its word alignment."""
    max_s, max_t = alignment.max_indices()
    if max_s >= len(sentence.tokens) or max_t >= len(target_tokens):
        raise EvalError(
            f"sentence {sentence.id!r}: alignment link ({max_s}-{max_t}) out of "
            f"range for {len(sentence.tokens)} source / {len(target_tokens)} "
            "target tokens"
        )
    ent = sentence.entity_span()
    ent_targets = tuple(alignment.targets_of(ent.start, ent.end))
    pron_targets = tuple(alignment.targets_of(sentence.pronoun.start, sentence.pronoun.end))

    ent_call = entity_gender(target_tokens, ent_targets, lexicon) if ent_targets else None
    pron_call = pronoun_gender(target_tokens, pron_targets, lexicon) if pron_targets else None

    status = decide_status(
        ent_call.value if ent_call else None,
        pron_call.value if pron_call else None,
    )
    neutral = status in ("consistent", "inconsistent") and pron_call.value == "neutral"
    return EvalVerdict(
        sentence_id=sentence.id,
        status=status,
        entity_gender=ent_call.value if ent_call else None,
        pronoun_gender=pron_call.value if pron_call else None,
        neutral_pronoun=neutral,
        entity_target_indices=ent_targets,
        pronoun_target_indices=pron_targets,
        pronoun_target_tokens=tuple(target_tokens[j] for j in pron_targets),
    )


def _by_id(verdicts) -> dict[str, EvalVerdict]:
    out: dict[str, EvalVerdict] = {}
    for v in verdicts:
        if v.sentence_id in out:
            raise EvalError(f"duplicate verdict for sentence {v.sentence_id!r}")
        out[v.sentence_id] = v
    return out


def _pct(count: int, denom: int) -> float:
    return (100.0 * count) / denom


def consistency(verdicts) -> float:
    """Share of judged (non-omitted) sentences whose genders agree."""
    n_cons = sum(1 for v in verdicts if v.status == "consistent")
    n_incons = sum(1 for v in verdicts if v.status == "inconsistent")
    if n_cons + n_incons == 0:
        raise EvalError("consistency undefined: no scorable instances")
    return _pct(n_cons, n_cons + n_incons)


def neutral_rate(verdicts) -> float:
    """Share of judged sentences where the pronoun came out neutral."""
    n_cons = sum(1 for v in verdicts if v.status == "consistent")
    n_incons = sum(1 for v in verdicts if v.status == "inconsistent")
    if n_cons + n_incons == 0:
        raise EvalError("neutral_rate undefined: no scorable instances")
    neutral = sum(1 for v in verdicts if v.neutral_pronoun)
    return _pct(neutral, n_cons + n_incons)


def _norm_token(token: str) -> str:
    token = token.lower()
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def pronoun_accuracy(verdicts, corpus: Corpus, language: str) -> float:
    """How often an aligned target pronoun token equals the gold pronoun.

    Counted over sentences carrying a gold target pronoun for the language;
    tokens are lowercased and stripped of edge punctuation on both sides.
    """
    index = _by_id(verdicts)
    total = correct = 0
    for sent in corpus.sentences:
        if sent.id not in index:
            continue
        gold = (sent.gold_target_pronouns or {}).get(language)
        if not gold:
            continue
        total += 1
        want = _norm_token(gold)
        got = {_norm_token(t) for t in index[sent.id].pronoun_target_tokens}
        if want in got:
            correct += 1
    if total == 0:
        raise EvalError(f"pronoun_accuracy undefined: no gold pronouns for {language!r}")
    return _pct(correct, total)


def _gender_population(verdicts, corpus: Corpus):
    """(sentence, verdict) pairs where the entity-side call can be graded."""
    index = _by_id(verdicts)
    pairs = []
    for sent in corpus.sentences:
        v = index.get(sent.id)
        if v is None or sent.source_gender is None:
            continue
        if v.status not in ("consistent", "inconsistent", "omitted_non_informative"):
            continue
        if v.entity_gender not in GENDERS:
            continue
        pairs.append((sent, v))
    return pairs


def gender_accuracy(verdicts, corpus: Corpus) -> float:
    """How often the translated entity keeps the annotated source gender."""
    pairs = _gender_population(verdicts, corpus)
    if not pairs:
        raise EvalError("gender_accuracy undefined: no gradable sentences")
    correct = sum(1 for s, v in pairs if v.entity_gender == s.source_gender)
    return _pct(correct, len(pairs))


def delta_s(verdicts, corpus: Corpus) -> float:
    """Gender accuracy gap: stereotypical minus anti-stereotypical subset."""
    pairs = _gender_population(verdicts, corpus)
    buckets = {"stereotypical": [0, 0], "anti_stereotypical": [0, 0]}
    for sent, v in pairs:
        bucket = buckets.get(sent.stereotype or "")
        if bucket is None:
            continue
        bucket[1] += 1
        if v.entity_gender == sent.source_gender:
            bucket[0] += 1
    for name, (_, total) in buckets.items():
        if total == 0:
            raise EvalError(f"delta_s undefined: no gradable {name} sentences")
    st = buckets["stereotypical"]
    anti = buckets["anti_stereotypical"]
    return _pct(st[0], st[1]) - _pct(anti[0], anti[1])


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def delta_g(verdicts, corpus: Corpus) -> float:
    """F1 gap between male and female entity-gender calls, in points.

    One-vs-rest F1 per class over the gradable population, where the
    annotated source gender is the truth and the entity call is the
    prediction.
    """
    pairs = _gender_population(verdicts, corpus)
    if not pairs:
        raise EvalError("delta_g undefined: no gradable sentences")
    for cls in ("male", "female"):
        if not any(sent.source_gender == cls for sent, _ in pairs):
            raise EvalError(f"delta_g undefined: no gradable {cls} sentences")
    scores = {}
    for cls in ("male", "female"):
        tp = fp = fn = 0
        for sent, v in pairs:
            if v.entity_gender == cls:
                if sent.source_gender == cls:
                    tp += 1
                else:
                    fp += 1
            elif sent.source_gender == cls:
                fn += 1
        scores[cls] = _f1(tp, fp, fn)
    return 100.0 * (scores["male"] - scores["female"])


@dataclass
class MetricsReport:
    """Aggregated scores for one evaluated system on one corpus."""

    dataset: str
    system: str
    language: str
    n_sentences: int
    n_consistent: int
    n_inconsistent: int
    n_omitted: dict[str, int]
    consistency: float | None
    pronoun_accuracy: float | None
    gender_accuracy: float | None
    delta_s: float | None
    delta_g: float | None
    neutral_rate: float | None

    def __post_init__(self):
        judged = self.n_consistent + self.n_inconsistent
        if judged + sum(self.n_omitted.values()) != self.n_sentences:
            raise ValueError("verdict counts do not add up to n_sentences")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "system": self.system,
            "language": self.language,
            "n_sentences": self.n_sentences,
            "n_consistent": self.n_consistent,
            "n_inconsistent": self.n_inconsistent,
            "n_omitted": {k: self.n_omitted.get(k, 0) for k in OMITTED_STATUSES},
            "consistency": self.consistency,
            "pronoun_accuracy": self.pronoun_accuracy,
            "gender_accuracy": self.gender_accuracy,
            "delta_s": self.delta_s,
            "delta_g": self.delta_g,
            "neutral_rate": self.neutral_rate,
        }


def compute_report(
    verdicts,
    corpus: Corpus,
    language: str,
    dataset: str = "",
    system: str = "",
) -> MetricsReport:
    """Build the full report; metrics whose population is empty come out None."""
    verdicts = list(verdicts)
    _by_id(verdicts)
    counts = {s: 0 for s in STATUSES}
    for v in verdicts:
        counts[v.status] += 1

    def attempt(fn, *args):
        try:
            return fn(*args)
        except EvalError:
            return None

    return MetricsReport(
        dataset=dataset,
        system=system,
        language=language,
        n_sentences=len(verdicts),
        n_consistent=counts["consistent"],
        n_inconsistent=counts["inconsistent"],
        n_omitted={k: counts[k] for k in OMITTED_STATUSES},
        consistency=attempt(consistency, verdicts),
        pronoun_accuracy=attempt(pronoun_accuracy, verdicts, corpus, language),
        gender_accuracy=attempt(gender_accuracy, verdicts, corpus),
        delta_s=attempt(delta_s, verdicts, corpus),
        delta_g=attempt(delta_g, verdicts, corpus),
        neutral_rate=attempt(neutral_rate, verdicts),
    )


def render_markdown(report: MetricsReport) -> str:
    """Human-readable summary table."""

    def num(value):
        return "n/a" if value is None else f"{value:.1f}"

    lines = [
        f"# Evaluation: {report.system or 'system'} on {report.dataset or 'corpus'} ({report.language})",
        "",
        f"Sentences: {report.n_sentences}  |  judged: "
        f"{report.n_consistent + report.n_inconsistent}  "
        f"(consistent {report.n_consistent}, inconsistent {report.n_inconsistent})",
        "",
        "| metric | value |",
        "| --- | --- |",
        f"| consistency | {num(report.consistency)} |",
        f"| pronoun_accuracy | {num(report.pronoun_accuracy)} |",
        f"| gender_accuracy | {num(report.gender_accuracy)} |",
        f"| delta_s | {num(report.delta_s)} |",
        f"| delta_g | {num(report.delta_g)} |",
        f"| neutral_rate | {num(report.neutral_rate)} |",
        "",
        "Omitted: "
        + ", ".join(f"{k}={report.n_omitted.get(k, 0)}" for k in OMITTED_STATUSES),
        "",
    ]
    return "\n".join(lines)


_VERDICT_KEYS = (
    "id",
    "status",
    "entity_gender",
    "pronoun_gender",
    "neutral_pronoun",
    "entity_targets",
    "pronoun_targets",
    "pronoun_surfaces",
)


def write_verdicts(path, verdicts) -> None:
    """One JSON object per line, sorted by sentence id."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in sorted(verdicts, key=lambda v: v.sentence_id):
            obj = {
                "id": v.sentence_id,
                "status": v.status,
                "entity_gender": v.entity_gender,
                "pronoun_gender": v.pronoun_gender,
                "neutral_pronoun": v.neutral_pronoun,
                "entity_targets": list(v.entity_target_indices),
                "pronoun_targets": list(v.pronoun_target_indices),
                "pronoun_surfaces": list(v.pronoun_target_tokens),
            }
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_verdicts(path) -> list[EvalVerdict]:
    verdicts = []
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
                if not isinstance(obj, dict) or set(obj) != set(_VERDICT_KEYS):
                    raise ParseError(
                        f"verdict line must have exactly keys {list(_VERDICT_KEYS)}",
                        path,
                        line_no,
                    )
                try:
                    verdicts.append(
                        EvalVerdict(
                            sentence_id=obj["id"],
                            status=obj["status"],
                            entity_gender=obj["entity_gender"],
                            pronoun_gender=obj["pronoun_gender"],
                            neutral_pronoun=bool(obj["neutral_pronoun"]),
                            entity_target_indices=tuple(obj["entity_targets"]),
                            pronoun_target_indices=tuple(obj["pronoun_targets"]),
                            pronoun_target_tokens=tuple(obj["pronoun_surfaces"]),
                        )
                    )
                except (ValueError, TypeError) as exc:
                    raise ParseError(str(exc), path, line_no) from None
    except OSError as exc:
        raise ParseError(f"cannot read verdicts {path}: {exc.strerror or exc}") from None
    return verdicts


def _span_matches(pred, gold, matching: str) -> bool:
    if matching == "exact":
        return pred.start == gold.start and pred.end == gold.end
    if matching == "head_overlap":
        return pred.start <= gold.end - 1 < pred.end
    raise ValueError(f"unknown matching mode {matching!r}")


def resolver_accuracy(
    corpus: Corpus,
    predictions: dict,
    matching: str = "head_overlap",
    exclude_distractors: bool = True,
) -> float:
    """Score predicted coreference clusters against the gold antecedent.

    The cluster that resolves the pronoun is the first one, in file order,
    containing a span that matches the pronoun.  It counts as correct when
    it also contains a span matching the gold antecedent and, unless
    exclude_distractors is off, no span matching any competing entity.
    Sentences without a prediction count as incorrect.
    """
    if matching not in MATCHING_MODES:
        raise ValueError(f"unknown matching mode {matching!r}")
    if not corpus.sentences:
        raise EvalError("resolver_accuracy undefined: empty corpus")
    correct = 0
    for sent in corpus.sentences:
        pred = predictions.get(sent.id)
        if pred is None:
            continue
        resolved = None
        for cluster in pred.clusters:
            if any(_span_matches(span, sent.pronoun, matching) for span in cluster):
                resolved = cluster
                break
        if resolved is None:
            continue
        gold = sent.entity_span()
        if not any(_span_matches(span, gold, matching) for span in resolved):
            continue
        if exclude_distractors:
            distractors = [
                e for i, e in enumerate(sent.entities) if i != sent.gold_antecedent
            ]
            if any(
                _span_matches(span, d, matching)
                for span in resolved
                for d in distractors
            ):
                continue
        correct += 1
    return _pct(correct, len(corpus.sentences))
