import json
import unicodedata

import pytest

from corefmt.corpus import (
    AnnotatedSentence,
    ClusterSet,
    Corpus,
    Span,
    check_language,
    known_languages,
    parse_clusters,
    parse_corpus,
    register_language,
    sentence_to_json,
    serialize_corpus,
    tokenize,
    tokenize_with_origins,
)
from corefmt.errors import ParseError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


class TestTokenize:
    def test_plain_words(self):
        assert tokenize("the nurse helped") == ["the", "nurse", "helped"]

    def test_trailing_punct_peels(self):
        assert tokenize("He left.") == ["He", "left", "."]
        assert tokenize("really?!") == ["really", "?", "!"]

    def test_leading_punct_peels(self):
        assert tokenize("«hola»") == ["«", "hola", "»"]
        assert tokenize("(yes)") == ["(", "yes", ")"]

    def test_lone_punct_survives(self):
        assert tokenize(". . .") == [".", ".", "."]

    def test_elision_clitic_splits(self):
        assert tokenize("l'avion") == ["l'", "avion"]
        assert tokenize("qu’elle") == ["qu’", "elle"]

    def test_contraction_stays_whole(self):
        assert tokenize("didn't fit") == ["didn't", "fit"]

    def test_short_contraction_splits(self):
        # two-letter prefix before the apostrophe splits like a clitic
        assert tokenize("it's") == ["it'", "s"]

    def test_clitic_with_trailing_punct(self):
        assert tokenize("l'avion.") == ["l'", "avion", "."]

    def test_bare_clitic_keeps_apostrophe(self):
        assert tokenize("l' avion") == ["l'", "avion"]

    def test_nfc_normalization(self):
        decomposed = "mére"
        assert tokenize(decomposed) == [unicodedata.normalize("NFC", decomposed)]

    def test_origins_follow_whitespace_chunks(self):
        pairs = tokenize_with_origins("The nurse, she left.")
        assert pairs == [
            ("The", 0),
            ("nurse", 1),
            (",", 1),
            ("she", 2),
            ("left", 3),
            (".", 3),
        ]

    def test_empty_input(self):
        assert tokenize("") == []
        assert tokenize("   ") == []


class TestSpan:
    def test_bounds(self):
        s = Span(2, 4)
        assert s.start == 2 and s.end == 4
        assert s.to_list() == [2, 4]

    def test_rejects_empty_and_negative(self):
        with pytest.raises(ParseError):
            Span(3, 3)
        with pytest.raises(ParseError):
            Span(-1, 2)
        with pytest.raises(ParseError):
            Span(5, 2)

    def test_overlaps(self):
        assert Span(0, 3).overlaps(Span(2, 5))
        assert not Span(0, 2).overlaps(Span(2, 4))
        assert Span(1, 2).overlaps(Span(0, 9))


def make_sentence(**kw):
    base = dict(
        id="s1",
        tokens=["the", "doctor", "said", "he", "left"],
        entities=[Span(0, 2)],
        pronoun=Span(3, 4),
        gold_antecedent=0,
    )
    base.update(kw)
    return AnnotatedSentence(**base)


class TestAnnotatedSentence:
    def test_valid_passes(self):
        s = make_sentence()
        assert s.validate() is s
        assert s.entity_span() == Span(0, 2)

    def test_span_out_of_range(self):
        with pytest.raises(ParseError, match="exceeds"):
            make_sentence(entities=[Span(0, 9)]).validate()

    def test_overlapping_entities(self):
        with pytest.raises(ParseError, match="overlapping entity"):
            make_sentence(entities=[Span(0, 2), Span(1, 3)]).validate()

    def test_pronoun_overlapping_entity(self):
        with pytest.raises(ParseError, match="pronoun span overlaps"):
            make_sentence(pronoun=Span(1, 2)).validate()

    def test_antecedent_out_of_range(self):
        with pytest.raises(ParseError, match="gold_antecedent"):
            make_sentence(gold_antecedent=1).validate()

    def test_bad_gender_and_stereotype(self):
        with pytest.raises(ParseError, match="source_gender"):
            make_sentence(source_gender="masc").validate()
        with pytest.raises(ParseError, match="stereotype"):
            make_sentence(stereotype="pro").validate()

    def test_gold_pronoun_language_checked(self):
        with pytest.raises(ParseError, match="unknown language"):
            make_sentence(gold_target_pronouns={"zz": "er"}).validate()
        make_sentence(gold_target_pronouns={"de": "er"}).validate()

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ParseError, match="duplicate"):
            Corpus(dataset_name="d", sentences=[make_sentence(), make_sentence()])


class TestLanguageRegistry:
    def test_builtin_known(self):
        assert "de" in known_languages()
        assert check_language("de") == "de"

    def test_register_extends(self):
        register_language("xq")
        assert "xq" in known_languages()
        assert check_language("xq") == "xq"

    def test_bad_code_rejected(self):
        for bad in ("DE", "d", "deut", "d1"):
            with pytest.raises(ParseError):
                register_language(bad)


class TestCanonical:
    def test_round_trip_byte_exact(self, tmp_path):
        line = (
            '{"id":"a1","tokens":["The","doctor","said","she","left"],'
            '"entities":[[0,2]],"pronoun":[3,4],"gold_antecedent":0,'
            '"source_gender":"female","stereotype":"anti_stereotypical",'
            '"gold_target_pronouns":{"de":"sie","fr":"elle"}}'
        )
        path = write(tmp_path, "c.jsonl", line + "\n")
        corpus = parse_corpus(path, "canonical")
        assert serialize_corpus(corpus) == line + "\n"

    def test_pronoun_langs_sorted_on_write(self):
        s = make_sentence(gold_target_pronouns={"fr": "il", "de": "er"})
        obj = json.loads(sentence_to_json(s))
        assert list(obj["gold_target_pronouns"]) == ["de", "fr"]

    def test_unknown_key_rejected(self, tmp_path):
        path = write(
            tmp_path,
            "c.jsonl",
            '{"id":"a","tokens":["x","y"],"entities":[[0,1]],"pronoun":[1,2],'
            '"gold_antecedent":0,"extra":1}\n',
        )
        with pytest.raises(ParseError, match="unknown keys"):
            parse_corpus(path, "canonical")

    def test_missing_key_rejected(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id":"a","tokens":["x"]}\n')
        with pytest.raises(ParseError, match="missing keys"):
            parse_corpus(path, "canonical")

    def test_bool_is_not_an_index(self, tmp_path):
        path = write(
            tmp_path,
            "c.jsonl",
            '{"id":"a","tokens":["x","y"],"entities":[[0,1]],"pronoun":[1,2],'
            '"gold_antecedent":true}\n',
        )
        with pytest.raises(ParseError, match="gold_antecedent"):
            parse_corpus(path, "canonical")

    def test_error_carries_path_and_line(self, tmp_path):
        good = (
            '{"id":"a","tokens":["x","y"],"entities":[[0,1]],"pronoun":[1,2],'
            '"gold_antecedent":0}'
        )
        path = write(tmp_path, "c.jsonl", good + "\n" + "{bad json\n")
        with pytest.raises(ParseError) as err:
            parse_corpus(path, "canonical")
        assert "c.jsonl:2" in str(err.value)

    def test_empty_corpus_rejected(self, tmp_path):
        path = write(tmp_path, "c.jsonl", "\n\n")
        with pytest.raises(ParseError, match="empty corpus"):
            parse_corpus(path, "canonical")

    def test_dataset_name_defaults_to_stem(self, tmp_path):
        path = write(
            tmp_path,
            "mycorpus.jsonl",
            '{"id":"a","tokens":["x","y"],"entities":[[0,1]],"pronoun":[1,2],'
            '"gold_antecedent":0}\n',
        )
        assert parse_corpus(path, "canonical").dataset_name == "mycorpus"
        assert parse_corpus(path, "canonical", dataset_name="z").dataset_name == "z"


WINOX_LINE = json.dumps(
    {
        "qID": "3QZ9",
        "sentence": "The trophy didn't fit in the suitcase because it was too small .",
        "option1": "the trophy",
        "option2": "the suitcase",
        "answer": 2,
        "gold_target_pronouns": {"de": "er"},
    }
)


class TestWinoxAdapter:
    def test_basic_record(self, tmp_path):
        path = write(tmp_path, "w.jsonl", WINOX_LINE + "\n")
        corpus = parse_corpus(path, "winox")
        s = corpus.sentences[0]
        assert s.id == "3QZ9"
        assert s.tokens[:2] == ["The", "trophy"]
        assert s.entities == [Span(0, 2), Span(5, 7)]
        assert s.gold_antecedent == 1
        assert s.pronoun == Span(8, 9)
        assert s.gold_target_pronouns == {"de": "er"}

    def test_pronoun_context_window(self, tmp_path):
        obj = json.loads(WINOX_LINE)
        obj["sentence"] = (
            "It seemed the trophy didn't fit in the suitcase because it was too big ."
        )
        obj["option1"] = "the trophy"
        obj["option2"] = "the suitcase"
        del obj["gold_target_pronouns"]
        obj["answer"] = 1
        obj["pronoun_context"] = "because it was"
        path = write(tmp_path, "w.jsonl", json.dumps(obj) + "\n")
        s = parse_corpus(path, "winox").sentences[0]
        # the sentence-initial "It" sits outside the window; the later one wins
        assert s.pronoun.start == 10
        assert s.tokens[s.pronoun.start].lower() == "it"

    def test_option_not_found(self, tmp_path):
        obj = json.loads(WINOX_LINE)
        obj["option2"] = "the wardrobe"
        path = write(tmp_path, "w.jsonl", json.dumps(obj) + "\n")
        with pytest.raises(ParseError, match="option2"):
            parse_corpus(path, "winox")

    def test_same_option_text_twice_takes_distinct_spans(self, tmp_path):
        obj = {
            "qID": "x",
            "sentence": "the cat saw the cat before it ran",
            "option1": "the cat",
            "option2": "the cat",
            "answer": 1,
        }
        path = write(tmp_path, "w.jsonl", json.dumps(obj) + "\n")
        s = parse_corpus(path, "winox").sentences[0]
        assert s.entities == [Span(0, 2), Span(3, 5)]

    def test_bad_answer(self, tmp_path):
        obj = json.loads(WINOX_LINE)
        obj["answer"] = 3
        path = write(tmp_path, "w.jsonl", json.dumps(obj) + "\n")
        with pytest.raises(ParseError, match="answer"):
            parse_corpus(path, "winox")


TSV_ROW = (
    "male\t1\tThe developer argued with the designer because he did not like "
    "the design .\tdeveloper\the\tstereotypical"
)
TSV_HEADER = "gender\tprofession_index\tsentence\tprofession\tpronoun\tstereotype"


class TestTsvAdapters:
    def test_winomt_headerless(self, tmp_path):
        path = write(tmp_path, "w.tsv", TSV_ROW + "\n")
        corpus = parse_corpus(path, "winomt")
        s = corpus.sentences[0]
        assert s.id == "1"
        assert s.source_gender == "male"
        assert s.stereotype == "stereotypical"
        assert s.tokens[s.entities[0].start] == "developer"
        assert s.tokens[s.pronoun.start] == "he"

    def test_bug_requires_header(self, tmp_path):
        path = write(tmp_path, "b.tsv", TSV_HEADER + "\n" + TSV_ROW + "\n")
        corpus = parse_corpus(path, "bug")
        assert corpus.sentences[0].id == "1"

    def test_bug_header_mismatch_is_loud(self, tmp_path):
        path = write(tmp_path, "b.tsv", TSV_ROW + "\n")
        with pytest.raises(ParseError, match="refusing to guess"):
            parse_corpus(path, "bug")

    def test_stereotype_none_maps_to_null(self, tmp_path):
        row = TSV_ROW.replace("stereotypical", "none")
        path = write(tmp_path, "w.tsv", row + "\n")
        assert parse_corpus(path, "winomt").sentences[0].stereotype is None

    def test_profession_index_disambiguates(self, tmp_path):
        # "the guard" appears twice; the index picks the second occurrence
        row = (
            "female\t5\tThe guard talked to the guard because she was bored .\t"
            "guard\tshe\tnone"
        )
        path = write(tmp_path, "w.tsv", row + "\n")
        s = parse_corpus(path, "winomt").sentences[0]
        assert s.entities[0] == Span(5, 6)

    def test_profession_at_wrong_index_rejected(self, tmp_path):
        row = (
            "female\t3\tThe guard slept because she was bored .\t"
            "guard\tshe\tnone"
        )
        path = write(tmp_path, "w.tsv", row + "\n")
        with pytest.raises(ParseError, match="matched 0"):
            parse_corpus(path, "winomt")

    def test_column_count_checked(self, tmp_path):
        path = write(tmp_path, "w.tsv", "male\t0\tonly three\n")
        with pytest.raises(ParseError, match="columns"):
            parse_corpus(path, "winomt")


class TestFullSplitScale:
    def test_parses_a_full_sized_split(self, tmp_path):
        # synthetic stand-in for a real en->de split: same record shape,
        # same size, ids and order must survive parsing
        n = 3774
        lines = []
        for i in range(n):
            lines.append(
                json.dumps(
                    {
                        "qID": f"q{i:05d}",
                        "sentence": "The trophy didn't fit in the suitcase "
                        "because it was too small .",
                        "option1": "the trophy",
                        "option2": "the suitcase",
                        "answer": 1 + (i % 2),
                        "gold_target_pronouns": {"de": "er" if i % 2 else "sie"},
                    }
                )
            )
        path = write(tmp_path, "full.jsonl", "\n".join(lines) + "\n")
        corpus = parse_corpus(path, "winox")
        assert len(corpus.sentences) == n
        assert corpus.sentences[0].id == "q00000"
        assert corpus.sentences[-1].id == f"q{n - 1:05d}"
        assert [s.id for s in corpus.sentences] == [f"q{i:05d}" for i in range(n)]
        assert corpus.get("q01234").gold_antecedent == 0


class TestParseClusters:
    def test_basic(self, tmp_path):
        path = write(
            tmp_path, "p.jsonl", '{"id":"s1","clusters":[[[0,2],[3,4]],[[4,5]]]}\n'
        )
        out = parse_clusters(path)
        assert isinstance(out["s1"], ClusterSet)
        assert out["s1"].clusters == [[Span(0, 2), Span(3, 4)], [Span(4, 5)]]

    def test_validated_against_corpus(self, tmp_path):
        cpath = write(
            tmp_path,
            "c.jsonl",
            '{"id":"s1","tokens":["a","b","c"],"entities":[[0,1]],"pronoun":[2,3],'
            '"gold_antecedent":0}\n',
        )
        corpus = parse_corpus(cpath, "canonical")
        good = write(tmp_path, "g.jsonl", '{"id":"s1","clusters":[[[0,1],[2,3]]]}\n')
        assert parse_clusters(good, corpus)["s1"].clusters
        bad_span = write(tmp_path, "bs.jsonl", '{"id":"s1","clusters":[[[0,9]]]}\n')
        with pytest.raises(ParseError, match="exceeds"):
            parse_clusters(bad_span, corpus)
        bad_id = write(tmp_path, "bi.jsonl", '{"id":"zz","clusters":[]}\n')
        with pytest.raises(ParseError, match="not present"):
            parse_clusters(bad_id, corpus)

    def test_duplicate_id_rejected(self, tmp_path):
        path = write(
            tmp_path,
            "p.jsonl",
            '{"id":"s1","clusters":[]}\n{"id":"s1","clusters":[]}\n',
        )
        with pytest.raises(ParseError, match="duplicate"):
            parse_clusters(path)

    def test_spans_sorted_within_cluster(self, tmp_path):
        # Input order is not trusted; each cluster comes back sorted by
        # start (then end) ascending.
        path = write(
            tmp_path,
            "p.jsonl",
            '{"id":"s1","clusters":[[[7,8],[0,2],[3,4]],[[5,7],[5,6]]]}\n',
        )
        out = parse_clusters(path)
        assert out["s1"].clusters == [
            [Span(0, 2), Span(3, 4), Span(7, 8)],
            [Span(5, 6), Span(5, 7)],
        ]

    def test_duplicate_span_in_cluster_rejected(self, tmp_path):
        path = write(
            tmp_path,
            "p.jsonl",
            '{"id":"s1","clusters":[[[0,2],[3,4],[0,2]]]}\n',
        )
        with pytest.raises(ParseError, match="duplicate span"):
            parse_clusters(path)
