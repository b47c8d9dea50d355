"""IBM Model 1 training, per-pair alignment, and symmetrization.

The table is row-stochastic over source words: for every source word e
(including NULL, stored as the empty string), the probabilities t(f|e) over
co-occurring target words f sum to 1.  Initialization is uniform over each
source word's co-occurring target vocabulary, and the E-step accumulates in
a fixed order so repeated runs are bit-identical.

Per-target-token argmax alignment breaks ties toward the earliest
candidate, with NULL ordered first; a NULL argmax leaves the target token
unlinked, which also covers words unseen in training.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError
from .types import Alignment

logger = logging.getLogger(__name__)

NULL = ""

SYMMETRIZATIONS = ("intersection", "union", "grow_diag")

# neighbor probe order for grow_diag, fixed for determinism
_NEIGHBORS = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


def _pure_kernel():
    from . import _kernel_py

    return _kernel_py


def _compiled_kernel():
    from . import _kernel_c  # noqa: F401 - optional extension

    return _kernel_c


def get_kernel(backend: str | None = None):
    """Select the EM kernel: explicit backend name, else COREFMT_PURE=1,
    else compiled when built, else pure."""
    if backend is None:
        backend = "pure" if os.environ.get("COREFMT_PURE") == "1" else "auto"
    if backend == "pure":
        return _pure_kernel()
    if backend == "compiled":
        return _compiled_kernel()
    if backend == "auto":
        try:
            return _compiled_kernel()
        except ImportError:
            return _pure_kernel()
    raise ValueError(f"unknown kernel backend {backend!r}")


def kernel_backend(backend: str | None = None) -> str:
    return get_kernel(backend).BACKEND_NAME


@dataclass
class TranslationTable:
    """t(target word | source word); NULL is the empty-string source."""

    probs: dict[tuple[str, str], float]
    source_vocab: frozenset
    target_vocab: frozenset
    skipped_pairs: int = 0
    log_likelihoods: list[float] = field(default_factory=list)

    def prob(self, target: str, source: str) -> float:
        return self.probs.get((target, source), 0.0)

    def row_sums(self) -> dict[str, float]:
        sums = {e: 0.0 for e in self.source_vocab}
        for (_, e), p in self.probs.items():
            sums[e] += p
        return sums

    def save_tsv(self, path) -> None:
        """Dump as target<TAB>source<TAB>prob, sorted, full float precision."""
        with open(path, "w", encoding="utf-8") as fh:
            for (f, e) in sorted(self.probs):
                fh.write(f"{f}\t{e}\t{self.probs[(f, e)]!r}\n")


def load_table_tsv(path) -> TranslationTable:
    probs: dict[tuple[str, str], float] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ParseError(
                        f"expected target<TAB>source<TAB>prob, got {len(fields)} fields",
                        path,
                        line_no,
                    )
                f, e, p = fields
                try:
                    prob = float(p)
                except ValueError:
                    raise ParseError(f"bad probability {p!r}", path, line_no) from None
                if (f, e) in probs:
                    raise ParseError(f"duplicate entry {(f, e)!r}", path, line_no)
                probs[(f, e)] = prob
    except OSError as exc:
        raise ParseError(f"cannot read table {path}: {exc.strerror or exc}") from None
    if not probs:
        raise ParseError("empty translation table", path)
    return TranslationTable(
        probs=probs,
        source_vocab=frozenset(e for (_, e) in probs),
        target_vocab=frozenset(f for (f, _) in probs),
    )


def train_model1(bitext, iterations: int = 5, backend: str | None = None) -> TranslationTable:
    """Train Model 1 on (source tokens, target tokens) pairs.

    Tokens are lowercased for training.  Pairs with an empty side are
    skipped with a warning and counted in skipped_pairs; an entirely empty
    bitext is an error.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    kept = []
    skipped = 0
    for src, tgt in bitext:
        src = [w.lower() for w in src]
        tgt = [w.lower() for w in tgt]
        if not src or not tgt:
            skipped += 1
            continue
        kept.append((src, tgt))
    if skipped:
        logger.warning("skipped %d sentence pair(s) with an empty side", skipped)
    if not kept:
        raise ParseError("empty bitext: no usable sentence pairs")

    # vocabulary ids in first-occurrence order; source id 0 is NULL
    src_index: dict[str, int] = {NULL: 0}
    tgt_index: dict[str, int] = {}
    for src, tgt in kept:
        for w in src:
            if w not in src_index:
                src_index[w] = len(src_index)
        for w in tgt:
            if w not in tgt_index:
                tgt_index[w] = len(tgt_index)

    cooc = set()
    for src, tgt in kept:
        tgt_ids = {tgt_index[w] for w in tgt}
        for f in tgt_ids:
            cooc.add((0, f))
        for w in src:
            e = src_index[w]
            for f in tgt_ids:
                cooc.add((e, f))

    pairs_sorted = sorted(cooc)
    n_rows = len(src_index)
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    col = np.empty(len(pairs_sorted), dtype=np.int32)
    for k, (e, f) in enumerate(pairs_sorted):
        row_ptr[e + 1] += 1
        col[k] = f
    row_ptr = np.cumsum(row_ptr).astype(np.int64)
    probs = np.empty(len(pairs_sorted), dtype=np.float64)
    for e in range(n_rows):
        lo, hi = row_ptr[e], row_ptr[e + 1]
        if hi > lo:
            probs[lo:hi] = 1.0 / (hi - lo)

    src_ids = np.array([src_index[w] for src, _ in kept for w in src], dtype=np.int32)
    tgt_ids = np.array([tgt_index[w] for _, tgt in kept for w in tgt], dtype=np.int32)
    src_off = np.cumsum([0] + [len(src) for src, _ in kept]).astype(np.int64)
    tgt_off = np.cumsum([0] + [len(tgt) for _, tgt in kept]).astype(np.int64)

    kernel = get_kernel(backend)
    out_probs, lls = kernel.run_em(
        src_ids, src_off, tgt_ids, tgt_off, row_ptr, col, probs, iterations
    )

    src_words = list(src_index)
    tgt_words = list(tgt_index)
    table = {
        (tgt_words[f], src_words[e]): out_probs[k]
        for k, (e, f) in enumerate(pairs_sorted)
    }
    return TranslationTable(
        probs=table,
        source_vocab=frozenset(src_index),
        target_vocab=frozenset(tgt_index),
        skipped_pairs=skipped,
        log_likelihoods=list(lls),
    )


def _directional_links(table: TranslationTable, row_tokens, col_tokens):
    """For each col token, argmax over NULL + row tokens; NULL (ordered
    first) wins ties and yields no link."""
    links = set()
    for j, f in enumerate(col_tokens):
        f = f.lower()
        best = table.prob(f, NULL)
        best_i = -1
        for i, e in enumerate(row_tokens):
            score = table.prob(f, e.lower())
            if score > best:
                best = score
                best_i = i
        if best_i >= 0:
            links.add((best_i, j))
    return links


def symmetrize(forward, reverse, n_src: int, n_tgt: int, mode: str = "intersection") -> Alignment:
    """Merge directional link sets (both as (source index, target index))."""
    forward = set(forward)
    reverse = set(reverse)
    if mode == "intersection":
        return Alignment(frozenset(forward & reverse))
    if mode == "union":
        return Alignment(frozenset(forward | reverse))
    if mode == "grow_diag":
        union = forward | reverse
        aligned = forward & reverse
        src_cov = {i for i, _ in aligned}
        tgt_cov = {j for _, j in aligned}
        changed = True
        while changed:
            changed = False
            for (i, j) in sorted(aligned):
                for di, dj in _NEIGHBORS:
                    ni, nj = i + di, j + dj
                    if not (0 <= ni < n_src and 0 <= nj < n_tgt):
                        continue
                    if (ni, nj) in aligned or (ni, nj) not in union:
                        continue
                    if ni in src_cov and nj in tgt_cov:
                        continue
                    aligned.add((ni, nj))
                    src_cov.add(ni)
                    tgt_cov.add(nj)
                    changed = True
        return Alignment(frozenset(aligned))
    raise ValueError(f"unknown symmetrization {mode!r}")


def align_pair(
    table_fwd: TranslationTable,
    table_rev: TranslationTable,
    src_tokens,
    tgt_tokens,
    symmetrization: str = "intersection",
) -> Alignment:
    """Align one sentence pair from two directional tables.

    table_fwd was trained source->target, table_rev on the swapped bitext.
    """
    forward = _directional_links(table_fwd, src_tokens, tgt_tokens)
    reverse_raw = _directional_links(table_rev, tgt_tokens, src_tokens)
    reverse = {(i, j) for (j, i) in reverse_raw}
    return symmetrize(forward, reverse, len(src_tokens), len(tgt_tokens), symmetrization)
