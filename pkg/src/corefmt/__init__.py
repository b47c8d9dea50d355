"""corefmt: coreference-focused evaluation of machine translation.

Judges whether a translation renders a source entity and the pronoun that
refers to it with matching grammatical gender, without needing reference
translations.  Also ships the supporting toolchain: IBM Model 1 word
alignment, gender lexicons, corpus adapters, a data-augmentation pass that
marks coreference clusters inline, human-validation sheets, and a CLI.
"""

__version__ = "0.1.0"

from .corpus import AnnotatedSentence, Corpus, Span, parse_corpus, tokenize
from .errors import CorefmtError, EvalError, ParseError
from .morpho import GenderCall, GenderLexicon, load_lexicon, seed_lexicon

__all__ = [
    "AnnotatedSentence",
    "Corpus",
    "CorefmtError",
    "EvalError",
    "GenderCall",
    "GenderLexicon",
    "ParseError",
    "Span",
    "__version__",
    "load_lexicon",
    "parse_corpus",
    "seed_lexicon",
    "tokenize",
]
