"""Getting translations into the pipeline.

Translations come either from a file (plain text, one line per corpus
sentence, or JSON Lines keyed by sentence id) or from an HTTP endpoint
described by a small JSON config.  Endpoint responses are cached on disk
under a content hash, so repeated runs only pay for new sentences.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import unicodedata
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import Corpus, tokenize
from .errors import EvalError, ParseError

logger = logging.getLogger(__name__)

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class TranslationRecord:
    id: str
    text: str
    tokens: tuple[str, ...] | None = None


class TranslationSet:
    """Target texts keyed by sentence id, in a fixed order.

    system and language are labels for reporting; they are carried along
    when known and stay None for anonymous files.
    """

    def __init__(self, records, system: str | None = None, language: str | None = None):
        self.system = system
        self.language = language
        self._records: dict[str, TranslationRecord] = {}
        for rec in records:
            if rec.id in self._records:
                raise ParseError(f"duplicate translation for id {rec.id!r}")
            self._records[rec.id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, ident) -> bool:
        return ident in self._records

    def __getitem__(self, ident: str) -> str:
        return self._records[ident].text

    def ids(self) -> list[str]:
        return list(self._records)

    def text(self, ident: str) -> str:
        return self._records[ident].text

    def tokens(self, ident: str) -> list[str]:
        """Target tokens: the ones supplied, or the tokenizer's output."""
        rec = self._records[ident]
        if rec.tokens is not None:
            return list(rec.tokens)
        return tokenize(rec.text)

    def as_dict(self) -> dict[str, str]:
        return {i: r.text for i, r in self._records.items()}


def load_translations(
    path,
    corpus: Corpus,
    fmt: str | None = None,
    *,
    system: str | None = None,
    language: str | None = None,
) -> TranslationSet:
    """Read translations for a corpus.

    Plain-text mode expects exactly one line per corpus sentence, in corpus
    order.  JSON Lines mode expects {"id": ..., "text": ...} or {"id": ...,
    "tokens": [...]} records covering exactly the corpus ids.  With fmt
    None the file is sniffed: a first non-blank line starting with '{' is
    treated as JSON Lines.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read translations {path}: {exc.strerror or exc}") from None

    if fmt is None:
        first = next((l for l in raw.split("\n") if l.strip()), "")
        fmt = "jsonl" if first.lstrip().startswith("{") else "text"
    if fmt == "text":
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if len(lines) != len(corpus.sentences):
            raise ParseError(
                f"{len(lines)} lines for {len(corpus.sentences)} corpus sentences",
                path,
            )
        return TranslationSet(
            (
                TranslationRecord(id=s.id, text=line.strip())
                for s, line in zip(corpus.sentences, lines)
            ),
            system=system,
            language=language,
        )
    if fmt != "jsonl":
        raise ValueError(f"unknown translations format {fmt!r}")

    records = []
    for line_no, line in enumerate(raw.split("\n"), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path, line_no) from None
        if not isinstance(obj, dict) or "id" not in obj:
            raise ParseError("record needs an id", path, line_no)
        ident = obj["id"]
        if not isinstance(ident, str):
            raise ParseError("id must be a string", path, line_no)
        has_text = "text" in obj
        has_tokens = "tokens" in obj
        if has_text == has_tokens:
            raise ParseError("record needs exactly one of text or tokens", path, line_no)
        extra = set(obj) - {"id", "text", "tokens"}
        if extra:
            raise ParseError(f"unknown keys {sorted(extra)}", path, line_no)
        if has_text:
            if not isinstance(obj["text"], str):
                raise ParseError("text must be a string", path, line_no)
            records.append(TranslationRecord(id=ident, text=obj["text"]))
        else:
            toks = obj["tokens"]
            if not isinstance(toks, list) or not all(
                isinstance(t, str) and t for t in toks
            ):
                raise ParseError(
                    "tokens must be a list of non-empty strings", path, line_no
                )
            records.append(
                TranslationRecord(id=ident, text=" ".join(toks), tokens=tuple(toks))
            )
    try:
        ts = TranslationSet(records, system=system, language=language)
    except ParseError as exc:
        raise ParseError(f"{exc.args[0] if exc.args else exc}", path) from None
    have = set(ts.ids())
    want = set(corpus.ids())
    missing = sorted(want - have)
    extra = sorted(have - want)
    if missing:
        raise ParseError(f"missing translations for ids: {', '.join(missing)}", path)
    if extra:
        raise ParseError(f"translations for unknown ids: {', '.join(extra)}", path)
    return ts


# ---------------------------------------------------------------------------
# endpoint fetching


@dataclass
class EndpointConfig:
    """How to call a translation HTTP endpoint.

    url and body may contain {text} and {target_lang} placeholders; the
    response is JSON and response_path is a dot path to the translation
    string inside it (list indices allowed, e.g. "choices.0.text").
    """

    url: str
    system: str
    response_path: str
    method: str = "POST"
    headers: dict[str, str] = field(default_factory=dict)
    body: dict | str | None = None
    timeout: float = 30.0
    retries: int = 0

    def __post_init__(self):
        if self.method not in ("GET", "POST"):
            raise ValueError(f"method must be GET or POST, not {self.method!r}")
        if not self.url or not self.system or not self.response_path:
            raise ValueError("url, system, and response_path are required")
        if not isinstance(self.retries, int) or self.retries < 0:
            raise ValueError("retries must be a non-negative integer")


def load_endpoint_config(path) -> EndpointConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read endpoint config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("endpoint config must be a JSON object", path)
    allowed = {
        "url", "system", "response_path", "method", "headers", "body", "timeout",
        "retries",
    }
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"unknown keys {sorted(extra)}", path)
    try:
        return EndpointConfig(**obj)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), path) from None


@dataclass(frozen=True)
class FetchFailure:
    id: str
    error: str


@dataclass
class FetchResult:
    translations: TranslationSet
    failures: list[FetchFailure]


def _normalize_for_key(text: str) -> str:
    return _WS_RE.sub(" ", unicodedata.normalize("NFC", text).strip())


def cache_key(system: str, language: str, text: str) -> str:
    payload = f"{system}|{language}|{_normalize_for_key(text)}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def cache_path(cache_dir, key: str) -> str:
    return os.path.join(cache_dir, key[:2], key[2:4], key + ".json")


def _cache_read(cache_dir, key: str) -> str | None:
    path = cache_path(cache_dir, key)
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        return None
    except (OSError, json.JSONDecodeError) as exc:
        logger.warning("ignoring unreadable cache entry %s: %s", path, exc)
        return None
    translation = obj.get("translation") if isinstance(obj, dict) else None
    if not isinstance(translation, str):
        logger.warning("ignoring malformed cache entry %s", path)
        return None
    return translation


def _cache_write(cache_dir, key: str, system: str, language: str, source: str, translation: str) -> None:
    path = cache_path(cache_dir, key)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    obj = {
        "key": key,
        "system": system,
        "language": language,
        "source": source,
        "translation": translation,
    }
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _substitute(template, text: str, language: str):
    if isinstance(template, str):
        return template.replace("{text}", text).replace("{target_lang}", language)
    if isinstance(template, dict):
        return {k: _substitute(v, text, language) for k, v in template.items()}
    if isinstance(template, list):
        return [_substitute(v, text, language) for v in template]
    return template


def _extract(obj, dot_path: str, *, path_label: str):
    cur = obj
    for part in dot_path.split("."):
        if isinstance(cur, list):
            try:
                cur = cur[int(part)]
            except (ValueError, IndexError):
                raise EvalError(f"response has no element {part!r} under {path_label}") from None
        elif isinstance(cur, dict):
            if part not in cur:
                raise EvalError(f"response has no key {part!r} under {path_label}")
            cur = cur[part]
        else:
            raise EvalError(f"response path {path_label} hit a leaf early at {part!r}")
    if not isinstance(cur, str):
        raise EvalError(f"response path {path_label} is not a string")
    return cur


def _call_endpoint(config: EndpointConfig, text: str, language: str) -> str:
    if config.method == "GET":
        url = config.url.replace(
            "{text}", urllib.parse.quote(text, safe="")
        ).replace("{target_lang}", urllib.parse.quote(language, safe=""))
        req = urllib.request.Request(url, headers=config.headers, method="GET")
    else:
        body = _substitute(config.body if config.body is not None else {"text": "{text}"}, text, language)
        data = (body if isinstance(body, str) else json.dumps(body, ensure_ascii=False)).encode("utf-8")
        headers = {"Content-Type": "application/json", **config.headers}
        req = urllib.request.Request(config.url, data=data, headers=headers, method="POST")
    with urllib.request.urlopen(req, timeout=config.timeout) as resp:
        payload = resp.read()
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise EvalError(f"endpoint returned invalid JSON: {exc.msg}") from None
    return _extract(obj, config.response_path, path_label=config.response_path)


def fetch_translations(
    corpus: Corpus,
    config: EndpointConfig,
    language: str,
    cache_dir,
    jobs: int = 4,
) -> FetchResult:
    """Translate a corpus through the endpoint, with caching.

    Per-sentence failures do not abort the run: the result carries a
    TranslationSet holding what succeeded plus a failure report for the
    rest.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    os.makedirs(cache_dir, exist_ok=True)

    def fetch_one(sentence):
        text = " ".join(sentence.tokens)
        key = cache_key(config.system, language, text)
        cached = _cache_read(cache_dir, key)
        if cached is not None:
            return sentence.id, cached, None
        error = None
        for _ in range(config.retries + 1):
            try:
                translation = _call_endpoint(config, text, language)
            except EvalError as exc:
                # response shape problems will not improve on retry
                return sentence.id, None, str(exc)
            except (urllib.error.URLError, OSError) as exc:
                reason = getattr(exc, "reason", None)
                error = str(reason or exc)
                continue
            _cache_write(cache_dir, key, config.system, language, text, translation)
            return sentence.id, translation, None
        return sentence.id, None, error

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(fetch_one, corpus.sentences))

    records = []
    failures = []
    for ident, translation, error in results:
        if error is None:
            records.append(TranslationRecord(id=ident, text=translation))
        else:
            logger.warning("fetch failed for %s: %s", ident, error)
            failures.append(FetchFailure(id=ident, error=error))
    return FetchResult(
        translations=TranslationSet(records, system=config.system, language=language),
        failures=failures,
    )
