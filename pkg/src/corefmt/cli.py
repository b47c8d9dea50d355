"""Command-line entry point.

Every writing subcommand takes --out DIR and writes fixed filenames inside
it, plus a manifest.json recording the tool version, the arguments, and a
sha256 of each input file.  Exit codes: 0 on success, 1 when a metric is
undefined (EvalError), 2 for malformed inputs or usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from . import __version__, augment as aug, ingest, metrics as met, validate as val
from .align import (
    SYMMETRIZATIONS,
    align_pair,
    load_table_tsv,
    read_pharaoh,
    train_model1,
    write_pharaoh,
)
from .corpus import CORPUS_FORMATS, parse_corpus, parse_clusters
from .errors import EvalError, ParseError
from .morpho import load_lexicon, seed_lexicon

logger = logging.getLogger("corefmt")

# The one environment knob: a default for --cache-dir.
CACHE_DIR_ENV = "COREFMT_CACHE_DIR"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, subcommand: str, args, input_paths) -> None:
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k != "func" and isinstance(v, (str, int, float, bool, list, type(None)))
    }
    manifest = {
        "tool": "corefmt",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in sorted(set(map(str, input_paths)))},
        "created": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _read_bitext(source_path, target_path):
    def read_lines(path):
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return lines

    src = read_lines(source_path)
    tgt = read_lines(target_path)
    if len(src) != len(tgt):
        raise ParseError(
            f"bitext sides differ: {len(src)} lines in {source_path}, "
            f"{len(tgt)} in {target_path}"
        )
    return [(s.split(), t.split()) for s, t in zip(src, tgt)]


# ---------------------------------------------------------------------------
# evaluate


def _load_eval_lexicon(args):
    if args.lexicon:
        return load_lexicon(args.lexicon, args.language)
    return seed_lexicon(args.language)


def _evaluate_inputs(args, parser):
    if bool(args.translations) == bool(args.endpoint):
        parser.error("give exactly one of --translations or --endpoint")
    if args.endpoint and not args.cache_dir:
        parser.error(f"--endpoint needs --cache-dir (or {CACHE_DIR_ENV} set)")
    if args.alignments and (args.table_fwd or args.table_rev):
        parser.error("give --alignments or --table-fwd/--table-rev, not both")
    if bool(args.table_fwd) != bool(args.table_rev):
        parser.error("--table-fwd and --table-rev go together")
    if not args.alignments and not args.table_fwd:
        parser.error("give --alignments or --table-fwd/--table-rev")
    if args.alignments and args.endpoint:
        parser.error(
            "--alignments pairs lines with the corpus, which endpoint fetching "
            "cannot guarantee; use translation tables instead"
        )


def cmd_evaluate(args, parser) -> int:
    _evaluate_inputs(args, parser)
    out = _ensure_out(args)
    corpus = parse_corpus(args.corpus, args.corpus_format, dataset_name=args.dataset)
    lexicon = _load_eval_lexicon(args)
    inputs = [args.corpus]
    if args.lexicon:
        inputs.append(args.lexicon)

    if args.translations:
        translations = ingest.load_translations(
            args.translations, corpus, system=args.system, language=args.language
        )
        inputs.append(args.translations)
    else:
        config = ingest.load_endpoint_config(args.endpoint)
        inputs.append(args.endpoint)
        result = ingest.fetch_translations(
            corpus, config, args.language, args.cache_dir, jobs=args.jobs
        )
        if result.failures:
            logger.warning(
                "dropping %d sentence(s) that failed to translate: %s",
                len(result.failures),
                ", ".join(f.id for f in result.failures),
            )
        translations = result.translations

    sentences = [s for s in corpus.sentences if s.id in translations]
    if not sentences:
        raise EvalError("nothing to evaluate: no sentence has a translation")
    tgt_tokens = {s.id: translations.tokens(s.id) for s in sentences}

    if args.alignments:
        alignments_list = read_pharaoh(args.alignments)
        inputs.append(args.alignments)
        if len(alignments_list) != len(sentences):
            raise ParseError(
                f"{len(alignments_list)} alignment lines for "
                f"{len(sentences)} sentences in {args.alignments}"
            )
        alignments = {s.id: a for s, a in zip(sentences, alignments_list)}
    else:
        fwd = load_table_tsv(args.table_fwd)
        rev = load_table_tsv(args.table_rev)
        inputs.extend([args.table_fwd, args.table_rev])
        alignments = {
            s.id: align_pair(fwd, rev, s.tokens, tgt_tokens[s.id], args.sym)
            for s in sentences
        }

    def judge_one(sent):
        return met.judge_sentence(sent, tgt_tokens[sent.id], alignments[sent.id], lexicon)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            verdicts = list(pool.map(judge_one, sentences))
    else:
        verdicts = [judge_one(s) for s in sentences]

    dataset = args.dataset or corpus.dataset_name
    report = met.compute_report(
        verdicts, corpus, args.language, dataset=dataset, system=args.system
    )
    _write_json(os.path.join(out, "metrics.json"), report.to_dict())
    met.write_verdicts(os.path.join(out, "verdicts.jsonl"), verdicts)
    rendered = met.render_markdown(report)
    with open(os.path.join(out, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(rendered)
    _write_manifest(out, "evaluate", args, inputs)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    else:
        print(rendered)
    return 0


# ---------------------------------------------------------------------------
# alignment subcommands


def cmd_align_train(args, parser) -> int:
    out = _ensure_out(args)
    bitext = _read_bitext(args.source, args.target)
    fwd = train_model1(bitext, iterations=args.iterations, backend=args.backend)
    rev = train_model1(
        [(t, s) for s, t in bitext], iterations=args.iterations, backend=args.backend
    )
    fwd.save_tsv(os.path.join(out, "table-fwd.tsv"))
    rev.save_tsv(os.path.join(out, "table-rev.tsv"))
    _write_json(
        os.path.join(out, "training.json"),
        {
            "iterations": args.iterations,
            "skipped_pairs": fwd.skipped_pairs,
            "log_likelihoods_fwd": fwd.log_likelihoods,
            "log_likelihoods_rev": rev.log_likelihoods,
        },
    )
    _write_manifest(out, "align-train", args, [args.source, args.target])
    print(f"trained {args.iterations} iteration(s); final LL {fwd.log_likelihoods[-1]:.6f}")
    return 0


def cmd_align(args, parser) -> int:
    out = _ensure_out(args)
    bitext = _read_bitext(args.source, args.target)
    fwd = load_table_tsv(args.table_fwd)
    rev = load_table_tsv(args.table_rev)
    alignments = [
        align_pair(fwd, rev, src, tgt, args.sym) for src, tgt in bitext
    ]
    write_pharaoh(os.path.join(out, "alignments.pharaoh"), alignments)
    _write_manifest(
        out, "align", args, [args.source, args.target, args.table_fwd, args.table_rev]
    )
    print(f"aligned {len(alignments)} sentence pair(s) ({args.sym})")
    return 0


# ---------------------------------------------------------------------------
# augment


def _gold_cluster(sentence) -> list:
    spans = sorted(
        [sentence.entities[sentence.gold_antecedent], sentence.pronoun],
        key=lambda sp: (sp.start, sp.end),
    )
    return [spans]


def _augment_input(args, parser):
    """Resolve the augment input shape into CorefSentence values plus the
    list of files to hash into the manifest."""
    if (args.corpus is None) == (args.text is None):
        parser.error("augment needs exactly one of --corpus or --text")
    if args.markers == "gold":
        if args.corpus is None:
            parser.error("--markers gold reads annotation, so it needs --corpus")
        if args.clusters is not None:
            parser.error("--markers gold derives clusters from the corpus "
                         "annotation; drop --clusters")
    elif args.clusters is None:
        parser.error(f"--markers {args.markers} needs --clusters")

    if args.corpus is not None:
        corpus = parse_corpus(args.corpus, args.corpus_format)
        if args.markers == "gold":
            sentences = [
                aug.CorefSentence(s.id, list(s.tokens), _gold_cluster(s))
                for s in corpus.sentences
            ]
            return sentences, [args.corpus]
        by_id = parse_clusters(args.clusters, corpus)
        sentences = [
            aug.CorefSentence(
                s.id,
                list(s.tokens),
                by_id[s.id].clusters if s.id in by_id else [],
            )
            for s in corpus.sentences
        ]
        return sentences, [args.corpus, args.clusters]

    # raw pre-tokenized text, ids are 1-based line numbers
    with open(args.text, encoding="utf-8") as fh:
        tokenized = [line.split() for line in fh.read().splitlines()]
    ids = [str(i) for i in range(1, len(tokenized) + 1)]
    by_id = parse_clusters(args.clusters)
    unknown = sorted(set(by_id) - set(ids))
    if unknown:
        raise ParseError(
            f"cluster ids without a text line: {', '.join(unknown)}", args.clusters
        )
    sentences = []
    for ident, tokens in zip(ids, tokenized):
        s = aug.CorefSentence(
            ident, tokens, by_id[ident].clusters if ident in by_id else []
        )
        try:
            s.validate()
        except ValueError as exc:
            raise ParseError(str(exc), args.clusters) from None
        sentences.append(s)
    return sentences, [args.text, args.clusters]


def cmd_augment(args, parser) -> int:
    out = _ensure_out(args)
    sentences, inputs = _augment_input(args, parser)
    kept = aug.filter_coref(sentences)
    if args.mode == "gender":
        kept = aug.filter_gender(kept)
    if args.markers == "none":
        select = lambda s: aug.CorefSentence(s.id, s.tokens, [])  # noqa: E731
    elif args.pronoun_clusters_only:
        select = aug.pronoun_clusters
    else:
        select = aug.drop_singletons
    marked = [aug.insert_markers(select(s)) for s in kept]
    aug.save_marked(os.path.join(out, "marked.jsonl"), marked)
    with open(os.path.join(out, "marked.txt"), "w", encoding="utf-8") as fh:
        for m in marked:
            fh.write(m.text() + "\n")
    with open(os.path.join(out, "lines.jsonl"), "w", encoding="utf-8") as fh:
        for line_no, m in enumerate(marked, start=1):
            fh.write(json.dumps({"line": line_no, "id": m.id}) + "\n")
    _write_json(
        os.path.join(out, "stats.json"),
        {
            "n_input": len(sentences),
            "n_kept": len(kept),
            "n_dropped_mentions": sum(m.n_dropped_mentions for m in marked),
        },
    )
    _write_manifest(out, "augment", args, inputs)
    print(f"kept {len(kept)} of {len(sentences)} sentence(s) ({args.mode} mode)")
    return 0


# ---------------------------------------------------------------------------
# resolver scoring


def cmd_score_resolver(args, parser) -> int:
    out = _ensure_out(args)
    corpus = parse_corpus(args.corpus, args.corpus_format, dataset_name=args.dataset)
    predictions = parse_clusters(args.predictions, corpus)
    accuracy = met.resolver_accuracy(
        corpus,
        predictions,
        matching=args.matching,
        exclude_distractors=not args.allow_distractors,
    )
    _write_json(
        os.path.join(out, "resolver.json"),
        {
            "accuracy": accuracy,
            "matching": args.matching,
            "exclude_distractors": not args.allow_distractors,
            "n_sentences": len(corpus.sentences),
        },
    )
    _write_manifest(out, "score-resolver", args, [args.corpus, args.predictions])
    print(f"resolver accuracy {accuracy:.1f} ({args.matching})")
    return 0


# ---------------------------------------------------------------------------
# validation subcommands


def cmd_sample(args, parser) -> int:
    out = _ensure_out(args)
    corpus = parse_corpus(args.corpus, args.corpus_format, dataset_name=args.dataset)
    verdicts = met.read_verdicts(args.verdicts)
    translations = ingest.load_translations(
        args.translations, corpus, system=args.system, language=args.language
    )
    rows = val.sample(verdicts, corpus, translations, n=args.n, seed=args.seed)
    meta = val.SheetMeta(
        dataset=args.dataset or corpus.dataset_name,
        system=args.system,
        language=args.language,
    )
    val.write_sheet(os.path.join(out, "sheet.tsv"), rows, meta)
    _write_manifest(out, "sample", args, [args.corpus, args.verdicts, args.translations])
    print(f"sampled {len(rows)} row(s) into sheet.tsv (seed {args.seed})")
    return 0


def cmd_agree(args, parser) -> int:
    sheets = [val.read_sheet(p) for p in args.sheets]
    report = val.agreement(sheets)
    if args.out:
        out = _ensure_out(args)
        _write_json(os.path.join(out, "agreement.json"), report.to_dict())
        _write_manifest(out, "agree", args, args.sheets)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    else:
        for g in report.groups:
            print(
                f"{g.dataset}/{g.language}: {g.agreement_rate:.1f}% agreement "
                f"({g.n} rows, {g.alignment_errors} alignment errors, "
                f"{g.gender_errors} gender errors)"
            )
        print(f"mean agreement: {report.mean_agreement:.1f}%")
    return 0


# ---------------------------------------------------------------------------
# fetch


def cmd_fetch(args, parser) -> int:
    if not args.cache_dir:
        parser.error(f"fetch needs --cache-dir (or {CACHE_DIR_ENV} set)")
    out = _ensure_out(args)
    corpus = parse_corpus(args.corpus, args.corpus_format, dataset_name=args.dataset)
    config = ingest.load_endpoint_config(args.endpoint)
    result = ingest.fetch_translations(
        corpus, config, args.language, args.cache_dir, jobs=args.jobs
    )
    with open(os.path.join(out, "translations.jsonl"), "w", encoding="utf-8") as fh:
        for ident in result.translations.ids():
            obj = {"id": ident, "text": result.translations[ident]}
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
    _write_json(
        os.path.join(out, "failures.json"),
        [{"id": f.id, "error": f.error} for f in result.failures],
    )
    _write_manifest(out, "fetch", args, [args.corpus, args.endpoint])
    print(
        f"fetched {len(result.translations)} translation(s), "
        f"{len(result.failures)} failure(s)"
    )
    return 0 if not result.failures else 1


# ---------------------------------------------------------------------------
# parser


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_corpus_args(sub):
    sub.add_argument("--corpus", required=True, help="corpus file")
    sub.add_argument(
        "--corpus-format",
        choices=CORPUS_FORMATS,
        default="canonical",
        help="how to parse --corpus (default canonical)",
    )
    sub.add_argument("--dataset", default=None, help="dataset name for reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corefmt",
        description="Gender-agreement evaluation of machine translation, "
        "plus coreference data tooling.",
    )
    parser.add_argument("--version", action="version", version=f"corefmt {__version__}")
    subs = parser.add_subparsers(
        dest="subcommand", required=True, metavar="SUBCOMMAND",
        help="pipeline stage to run",
    )

    p = subs.add_parser("evaluate", help="judge translations and compute metrics")
    _add_corpus_args(p)
    p.add_argument("--translations", help="translations file (text or JSON Lines)")
    p.add_argument("--endpoint", help="endpoint config JSON (needs --cache-dir)")
    p.add_argument(
        "--cache-dir", default=os.environ.get(CACHE_DIR_ENV) or None,
        help=f"translation cache directory (default ${CACHE_DIR_ENV})",
    )
    p.add_argument("--alignments", help="Pharaoh alignments, one line per sentence")
    p.add_argument("--table-fwd", help="source-to-target translation table TSV")
    p.add_argument("--table-rev", help="target-to-source translation table TSV")
    p.add_argument(
        "--sym", choices=SYMMETRIZATIONS, default="intersection",
        help="symmetrization for table-based alignment",
    )
    p.add_argument("--lexicon", help="gender lexicon TSV (default: built-in for --language)")
    p.add_argument("--language", required=True, help="target language code")
    p.add_argument("--system", default="system", help="system name for reports")
    p.add_argument(
        "--format", choices=("md", "json"), default="md",
        help="report format printed to stdout",
    )
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel workers")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("align-train", help="train translation tables on a bitext")
    p.add_argument("--source", required=True, help="source side, one sentence per line")
    p.add_argument("--target", required=True, help="target side, one sentence per line")
    p.add_argument("--iterations", type=_positive_int, default=5, help="EM iterations (default 5)")
    p.add_argument(
        "--backend", choices=("auto", "pure", "compiled"), default=None,
        help="EM kernel (default: compiled when built, else pure)",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_align_train)

    p = subs.add_parser("align", help="align a bitext with trained tables")
    p.add_argument("--source", required=True, help="source side, one sentence per line")
    p.add_argument("--target", required=True, help="target side, one sentence per line")
    p.add_argument("--table-fwd", required=True, help="source-to-target translation table TSV")
    p.add_argument("--table-rev", required=True, help="target-to-source translation table TSV")
    p.add_argument(
        "--sym", choices=SYMMETRIZATIONS, default="intersection",
        help="symmetrization heuristic",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_align)

    p = subs.add_parser("augment", help="filter and mark a coreference corpus")
    p.add_argument("--corpus", help="annotated corpus file (see --corpus-format)")
    p.add_argument(
        "--corpus-format",
        choices=CORPUS_FORMATS,
        default="canonical",
        help="how to parse --corpus (default canonical)",
    )
    p.add_argument(
        "--text",
        help="raw pre-tokenized text, one sentence per line, instead of "
        "--corpus; cluster ids are 1-based line numbers",
    )
    p.add_argument(
        "--clusters",
        help="cluster file (JSON Lines of id/clusters) to filter and mark by",
    )
    p.add_argument(
        "--mode", choices=("coref", "gender"), default="coref",
        help="keep sentences with coreference, or only those with a gendered pronoun",
    )
    p.add_argument(
        "--markers", choices=("predicted", "gold", "none"), default="predicted",
        help="wrap mentions from --clusters (predicted), from the corpus "
        "annotation (gold), or emit filtered text with no markers (none)",
    )
    p.add_argument(
        "--pronoun-clusters-only", action="store_true",
        help="mark only clusters containing a gendered pronoun (default: all "
        "non-singleton clusters)",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_augment)

    p = subs.add_parser("score-resolver", help="score predicted coreference clusters")
    _add_corpus_args(p)
    p.add_argument("--predictions", required=True, help="JSON Lines of id/clusters")
    p.add_argument(
        "--matching", choices=met.MATCHING_MODES, default="head_overlap",
        help="how predicted spans are matched to annotated ones",
    )
    p.add_argument(
        "--allow-distractors", action="store_true",
        help="do not penalize clusters that also cover competing entities",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_score_resolver)

    p = subs.add_parser("sample", help="draw an annotation sheet from verdicts")
    _add_corpus_args(p)
    p.add_argument("--verdicts", required=True, help="verdicts JSON Lines from evaluate")
    p.add_argument(
        "--translations", required=True,
        help="translations file (text or JSON Lines)",
    )
    p.add_argument("--n", type=_positive_int, default=50, help="rows to draw (default 50)")
    p.add_argument(
        "--seed", type=int, required=True,
        help="sampling seed; required, there is no implicit default",
    )
    p.add_argument("--system", default="system", help="system name recorded in the sheet")
    p.add_argument("--language", required=True, help="target language code")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("agree", help="score filled annotation sheets")
    p.add_argument("--sheets", nargs="+", required=True, help="filled sheet TSVs")
    p.add_argument(
        "--format", choices=("md", "json"), default="md",
        help="report format printed to stdout",
    )
    p.add_argument("--out", default=None, help="also write agreement.json here")
    p.set_defaults(func=cmd_agree)

    p = subs.add_parser("fetch", help="translate a corpus through an endpoint")
    _add_corpus_args(p)
    p.add_argument("--endpoint", required=True, help="endpoint config JSON")
    p.add_argument(
        "--cache-dir", default=os.environ.get(CACHE_DIR_ENV) or None,
        help=f"translation cache directory (default ${CACHE_DIR_ENV})",
    )
    p.add_argument("--language", required=True, help="target language code")
    p.add_argument("--jobs", type=_positive_int, default=4, help="parallel workers")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fetch)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
