import random

import pytest

from corefmt.errors import ParseError
from corefmt.morpho import (
    AMBIGUOUS,
    NON_INFORMATIVE,
    UNKNOWN,
    GenderLexicon,
    GenderReading,
    entity_gender,
    load_lexicon,
    normalize_form,
    pronoun_gender,
    seed_lexicon,
)


class TestNormalizeForm:
    def test_lowercase_and_nfc(self):
        assert normalize_form("Sie") == "sie"
        assert normalize_form("Mére") == "mére"

    def test_hebrew_diacritics_stripped(self):
        dotted = "הַיֶּלֶד"
        assert normalize_form(dotted) == "הילד"

    def test_arabic_diacritics_stripped(self):
        dotted = "وَجَدَ"
        assert normalize_form(dotted) == "وجد"

    def test_plain_latin_unchanged(self):
        assert normalize_form("avion") == "avion"


class TestGenderReading:
    def test_valid(self):
        r = GenderReading("male", "noun")
        assert r.informative

    def test_bad_gender(self):
        with pytest.raises(ParseError, match="gender"):
            GenderReading("masc", "noun")

    def test_bad_category(self):
        with pytest.raises(ParseError, match="category"):
            GenderReading("male", "article")

    def test_noninformative_only_for_pronouns(self):
        GenderReading("male", "pronoun", informative=False)
        with pytest.raises(ParseError, match="noninformative"):
            GenderReading("male", "noun", informative=False)


class TestLexicon:
    def test_load_and_lookup(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text(
            "# comment\n"
            "er\tmale\tpronoun\n"
            "Haus\tneutral\tnoun\n"
            "sein\tmale\tpronoun\tnoninformative\n",
            encoding="utf-8",
        )
        lex = load_lexicon(str(p), "xt")
        assert len(lex) == 3
        assert lex.lookup("er")[0].gender == "male"
        # lookup goes through normalize_form
        assert lex.lookup("HAUS")[0].gender == "neutral"
        assert not lex.lookup("sein")[0].informative
        assert lex.lookup("unknownword") == ()

    def test_duplicate_reading_deduped(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("er\tmale\tpronoun\ner\tmale\tpronoun\n", encoding="utf-8")
        assert len(load_lexicon(str(p), "xt").lookup("er")) == 1

    def test_multiple_readings_per_form(self, tmp_path):
        p = tmp_path / "lex.tsv"
        p.write_text("ihr\tfemale\tpronoun\nihr\tneutral\tpronoun\n", encoding="utf-8")
        readings = load_lexicon(str(p), "xt").lookup("ihr")
        assert {r.gender for r in readings} == {"female", "neutral"}

    def test_bad_rows_rejected(self, tmp_path):
        for body, frag in [
            ("er\tmale\n", "columns"),
            ("er\tmasc\tpronoun\n", "gender"),
            ("er\tmale\tarticle\n", "category"),
            ("er\tmale\tpronoun\tweird\n", "flag"),
            ("", "no entries"),
        ]:
            p = tmp_path / "bad.tsv"
            p.write_text(body, encoding="utf-8")
            with pytest.raises(ParseError, match=frag):
                load_lexicon(str(p), "xt")

    def test_seed_lexicons_load(self):
        for lang in ("de", "fr", "ru", "es", "he", "ar"):
            lex = seed_lexicon(lang)
            assert len(lex) > 10, lang

    def test_seed_lexicon_miss_lists_available(self):
        with pytest.raises(ParseError) as err:
            seed_lexicon("xx")
        msg = str(err.value)
        assert "de" in msg and "fr" in msg


@pytest.fixture(scope="module")
def de():
    return seed_lexicon("de")


@pytest.fixture(scope="module")
def fr():
    return seed_lexicon("fr")


class TestEntityGender:
    def test_first_noun_wins(self, de):
        toks = ["die", "pflegerin", "arzt"]
        call = entity_gender(toks, [1, 2], de)
        assert call.value == "female"
        assert call.is_gender

    def test_skips_non_nouns(self, de):
        call = entity_gender(["die", "schöne", "ärztin"], [0, 1, 2], de)
        assert call.value == "female"

    def test_no_noun_is_unknown(self, de):
        call = entity_gender(["die", "schöne"], [0, 1], de)
        assert call.value == UNKNOWN
        assert not call.is_gender

    def test_ambiguous_noun_with_determiner_tiebreak(self, de):
        # "see" is male (lake) or female (sea); the determiner decides
        assert entity_gender(["der", "see"], [1], de).value == "male"
        assert entity_gender(["die", "see"], [1], de).value == "female"

    def test_ambiguous_noun_without_help_stays_ambiguous(self, de):
        call = entity_gender(["see"], [0], de)
        assert call.value == AMBIGUOUS

    def test_determiner_must_directly_precede(self, de):
        call = entity_gender(["der", "alte", "see"], [2], de)
        assert call.value == AMBIGUOUS

    def test_empty_alignment_rejected(self, de):
        with pytest.raises(ValueError):
            entity_gender(["haus"], [], de)
        with pytest.raises(ValueError):
            entity_gender(["haus"], [3], de)

    def test_evidence_recorded(self, de):
        call = entity_gender(["arzt"], [0], de)
        assert call.evidence[0][0] == "arzt"
        assert call.evidence[0][1].category == "noun"


class TestPronounGender:
    def test_simple_pronoun(self, de):
        assert pronoun_gender(["er"], [0], de).value == "male"
        assert pronoun_gender(["sie"], [0], de).value == "female"
        assert pronoun_gender(["es"], [0], de).value == "neutral"

    def test_union_across_tokens(self, fr):
        # elided subject clitic carries nothing; the participle decides
        call = pronoun_gender(["l'", "trouvée"], [0, 1], fr)
        assert call.value == "female"

    def test_conflicting_evidence_ambiguous(self, fr):
        call = pronoun_gender(["il", "trouvée"], [0, 1], fr)
        assert call.value == AMBIGUOUS

    def test_only_noninformative_readings(self, fr):
        # French possessives agree with the possessed noun, not the owner
        call = pronoun_gender(["son"], [0], fr)
        assert call.value == NON_INFORMATIVE
        assert not call.is_gender

    def test_informative_beats_noninformative(self, fr):
        call = pronoun_gender(["son", "elle"], [0, 1], fr)
        assert call.value == "female"

    def test_nothing_known_is_unknown(self, de):
        assert pronoun_gender(["xyzzy"], [0], de).value == UNKNOWN

    def test_noun_readings_are_not_pronoun_evidence(self, de):
        # an aligned noun must not masquerade as pronoun agreement
        assert pronoun_gender(["arzt"], [0], de).value == UNKNOWN


def _random_lexicon(rng):
    lex = GenderLexicon(language="xt", entries={})
    forms = [f"w{i}" for i in range(8)]
    for form in forms:
        for _ in range(rng.randint(0, 3)):
            cat = rng.choice(("pronoun", "participle", "adjective", "verb", "noun"))
            gender = rng.choice(("male", "female", "neutral"))
            informative = cat != "pronoun" or rng.random() > 0.3
            lex.add(form, GenderReading(gender, cat, informative=informative))
    return lex, forms


class TestPronounCallMonotonicity:
    """Growing the aligned token set can refine a pronoun call, but it can
    never flip a concrete gender straight to another concrete gender: the
    union semantics force it through ambiguous."""

    def test_adding_tokens_never_flips_directly(self):
        rng = random.Random(4711)
        for trial in range(300):
            lex, forms = _random_lexicon(rng)
            tokens = [rng.choice(forms) for _ in range(rng.randint(1, 6))]
            idxs = list(range(len(tokens)))
            for cut in range(1, len(idxs)):
                before = pronoun_gender(tokens, idxs[:cut], lex).value
                after = pronoun_gender(tokens, idxs[: cut + 1], lex).value
                if before in ("male", "female", "neutral") and after in (
                    "male",
                    "female",
                    "neutral",
                ):
                    assert before == after, (tokens, cut, before, after)
