"""Human validation: sampling verdicts into annotation sheets and scoring
the filled sheets back into agreement numbers.

The sample is deterministic for a given (population, seed): every sentence
id gets a keyed-hash weight and the n smallest win, so re-running the tool
reproduces the same sheet no matter how the inputs were ordered.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .errors import EvalError, ParseError

SHEET_COLUMNS = (
    "sentence_id",
    "source_text",
    "target_text",
    "pronoun_tokens",
    "machine_entity_gender",
    "machine_pronoun_gender",
    "machine_status",
    "pronoun_correct",
    "gender_correct",
    "note",
)

_META_RE = re.compile(r"^# corefmt-sheet dataset=(\S+) system=(\S+) language=(\S+)$")

_BLANK = ("", "-")


@dataclass(frozen=True)
class SheetMeta:
    dataset: str
    system: str
    language: str

    def __post_init__(self):
        for name in ("dataset", "system", "language"):
            value = getattr(self, name)
            if not value or re.search(r"\s", value):
                raise ValueError(f"sheet {name} must be non-empty without whitespace")


@dataclass
class AnnotationRow:
    """One line of an annotation sheet; the last three fields are for the
    annotator (pronoun_correct / gender_correct take yes or no)."""

    sentence_id: str
    source_text: str
    target_text: str
    pronoun_tokens: str
    machine_entity_gender: str
    machine_pronoun_gender: str
    machine_status: str
    pronoun_correct: str = ""
    gender_correct: str = ""
    note: str = ""

    def fields(self) -> list[str]:
        return [getattr(self, c) for c in SHEET_COLUMNS]


def _weight(seed: int, index: int) -> int:
    key = (seed & (2**64 - 1)).to_bytes(8, "big")
    digest = hashlib.blake2b(index.to_bytes(8, "big"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big")


def sample(verdicts, corpus, translations, *, n: int = 50, seed: int) -> list[AnnotationRow]:
    """Draw a deterministic sample of judged sentences for annotation.

    translations maps sentence id to target text.  Asking for more rows
    than there are verdicts is an error.  Rows come back sorted by id.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    by_id = {}
    for v in verdicts:
        if v.sentence_id in by_id:
            raise EvalError(f"duplicate verdict for sentence {v.sentence_id!r}")
        by_id[v.sentence_id] = v
    if not by_id:
        raise EvalError("cannot sample: no verdicts")
    if n > len(by_id):
        raise EvalError(
            f"cannot sample {n} sentences: only {len(by_id)} verdict(s) available"
        )
    ids = sorted(by_id)
    weighted = sorted((_weight(seed, i), i) for i in range(len(ids)))
    chosen = sorted(ids[i] for _, i in weighted[:n])

    rows = []
    for ident in chosen:
        try:
            sent = corpus.get(ident)
        except KeyError:
            raise EvalError(f"verdict id {ident!r} not present in corpus") from None
        if ident not in translations:
            raise EvalError(f"no translation for sentence {ident!r}")
        v = by_id[ident]
        rows.append(
            AnnotationRow(
                sentence_id=ident,
                source_text=" ".join(sent.tokens),
                target_text=translations[ident],
                pronoun_tokens=" ".join(v.pronoun_target_tokens) or "-",
                machine_entity_gender=v.entity_gender or "-",
                machine_pronoun_gender=v.pronoun_gender or "-",
                machine_status=v.status,
            )
        )
    return rows


def _clean(value: str) -> str:
    return value.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def write_sheet(path, rows, meta: SheetMeta) -> None:
    """Write a TSV annotation sheet with a machine-readable meta line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# corefmt-sheet dataset={meta.dataset} system={meta.system} "
            f"language={meta.language}\n"
        )
        fh.write("\t".join(SHEET_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(_clean(f) for f in row.fields()) + "\n")


def read_sheet(path) -> tuple[SheetMeta, list[AnnotationRow]]:
    """Read a sheet back, insisting on the exact meta line and header."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ParseError(f"cannot read sheet {path}: {exc.strerror or exc}") from None
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty sheet", path)
    m = _META_RE.match(lines[0])
    if m is None:
        raise ParseError(
            "first line must be '# corefmt-sheet dataset=... system=... language=...'",
            path,
            1,
        )
    meta = SheetMeta(dataset=m.group(1), system=m.group(2), language=m.group(3))
    if len(lines) < 2 or lines[1] != "\t".join(SHEET_COLUMNS):
        raise ParseError(
            f"second line must be the header {list(SHEET_COLUMNS)}", path, 2
        )
    rows = []
    seen = set()
    for line_no, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(SHEET_COLUMNS):
            raise ParseError(
                f"expected {len(SHEET_COLUMNS)} fields, got {len(fields)}",
                path,
                line_no,
            )
        row = AnnotationRow(**dict(zip(SHEET_COLUMNS, fields)))
        if row.sentence_id in seen:
            raise ParseError(f"duplicate sentence_id {row.sentence_id!r}", path, line_no)
        seen.add(row.sentence_id)
        rows.append(row)
    if not rows:
        raise ParseError("sheet has no data rows", path)
    return meta, rows


@dataclass
class AgreementGroup:
    dataset: str
    language: str
    n: int
    agreements: int
    alignment_errors: int
    gender_errors: int

    @property
    def agreement_rate(self) -> float:
        return (100.0 * self.agreements) / self.n


@dataclass
class AgreementReport:
    groups: list[AgreementGroup]
    mean_agreement: float

    def to_dict(self) -> dict:
        return {
            "groups": [
                {
                    "dataset": g.dataset,
                    "language": g.language,
                    "n": g.n,
                    "agreements": g.agreements,
                    "alignment_errors": g.alignment_errors,
                    "gender_errors": g.gender_errors,
                    "agreement_rate": g.agreement_rate,
                }
                for g in self.groups
            ],
            "mean_agreement": self.mean_agreement,
        }


def agreement(sheets) -> AgreementReport:
    """Score filled sheets, given as (SheetMeta, rows) pairs.

    A row agrees with the machine when both answers are yes.  A row with
    pronoun_correct == no is an alignment error and its gender_correct may
    stay blank; pronoun_correct == yes with gender_correct == no is a
    gender error.  Anything else unfilled is an error listing the ids.
    Sheets are grouped by (dataset, language); the overall number is the
    unweighted mean over groups.
    """
    tallies: dict[tuple[str, str], AgreementGroup] = {}
    unfilled: list[str] = []
    for meta, rows in sheets:
        key = (meta.dataset, meta.language)
        group = tallies.get(key)
        if group is None:
            group = tallies[key] = AgreementGroup(
                dataset=meta.dataset,
                language=meta.language,
                n=0,
                agreements=0,
                alignment_errors=0,
                gender_errors=0,
            )
        for row in rows:
            pron = row.pronoun_correct.strip().lower()
            gend = row.gender_correct.strip().lower()
            if pron == "no":
                group.n += 1
                group.alignment_errors += 1
                if gend not in _BLANK and gend not in ("yes", "no"):
                    unfilled.append(row.sentence_id)
            elif pron == "yes" and gend == "yes":
                group.n += 1
                group.agreements += 1
            elif pron == "yes" and gend == "no":
                group.n += 1
                group.gender_errors += 1
            else:
                group.n += 1
                unfilled.append(row.sentence_id)
    if unfilled:
        raise EvalError(
            "sheet rows not filled in (pronoun_correct/gender_correct must be "
            f"yes or no): {', '.join(sorted(unfilled))}"
        )
    if not tallies:
        raise EvalError("no sheets to score")
    groups = [tallies[k] for k in sorted(tallies)]
    mean = sum(g.agreement_rate for g in groups) / len(groups)
    return AgreementReport(groups=groups, mean_agreement=mean)
