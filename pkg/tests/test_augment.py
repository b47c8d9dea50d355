import json
import logging
import random

import pytest

from corefmt.augment import (
    GENDERED_PRONOUNS,
    CorefSentence,
    MarkedSentence,
    drop_singletons,
    filter_coref,
    filter_gender,
    has_coref,
    has_gendered_pronoun,
    insert_markers,
    load_coref_corpus,
    pronoun_clusters,
    save_marked,
    strip_markers,
)
from corefmt.corpus import Span
from corefmt.errors import ParseError


def cs(ident, text, clusters):
    return CorefSentence(
        id=ident,
        tokens=text.split(),
        clusters=[[Span(a, b) for a, b in c] for c in clusters],
    )


class TestFilters:
    def test_gendered_pronoun_inventory(self):
        assert GENDERED_PRONOUNS == {"he", "she", "her", "him", "hers", "his"}

    def test_coref_needs_a_real_chain(self):
        chained = cs("a", "Mary said she left", [[(0, 1), (2, 3)]])
        singleton = cs("b", "Mary left early", [[(0, 1)]])
        bare = cs("c", "it rained", [])
        assert has_coref(chained)
        assert not has_coref(singleton)
        assert not has_coref(bare)
        assert filter_coref([chained, singleton, bare]) == [chained]

    def test_gender_needs_pronoun_inside_a_chain(self):
        she = cs("a", "Mary said she left", [[(0, 1), (2, 3)]])
        it = cs("b", "the car broke because it was old", [[(0, 2), (4, 5)]])
        lonely_he = cs("c", "he left and Mary stayed", [[(3, 4)], [(0, 1)]])
        assert has_gendered_pronoun(she)
        assert not has_gendered_pronoun(it)
        # "he" is a singleton cluster, so it does not count
        assert not has_gendered_pronoun(lonely_he)
        assert filter_gender([she, it, lonely_he]) == [she]

    def test_gender_matches_full_surface_case_insensitive(self):
        upper = cs("a", "HE said Mary saw HIM", [[(0, 1), (4, 5)]])
        multi = cs("b", "the he goat ran from Mary", [[(0, 3), (5, 6)]])
        assert has_gendered_pronoun(upper)
        # "the he goat" is not a pronoun mention even though it contains "he"
        assert not has_gendered_pronoun(multi)

    def test_gender_subset_of_coref(self):
        rng = random.Random(5)
        pool = []
        words = ["Mary", "John", "box", "he", "she", "it", "ran", "saw"]
        for i in range(80):
            tokens = [rng.choice(words) for _ in range(rng.randint(3, 8))]
            clusters = []
            for _ in range(rng.randint(0, 2)):
                k = rng.randint(1, 3)
                starts = rng.sample(range(len(tokens)), min(k, len(tokens)))
                clusters.append([Span(s, s + 1) for s in sorted(starts)])
            pool.append(CorefSentence(id=f"s{i}", tokens=tokens, clusters=clusters))
        coref_ids = {s.id for s in filter_coref(pool)}
        gender_ids = {s.id for s in filter_gender(pool)}
        assert gender_ids <= coref_ids


class TestClusterSelection:
    def test_drop_singletons(self):
        s = cs("a", "a b c d", [[(0, 1)], [(1, 2), (2, 3)]])
        trimmed = drop_singletons(s)
        assert trimmed.clusters == [[Span(1, 2), Span(2, 3)]]
        assert trimmed.tokens is s.tokens

    def test_pronoun_clusters(self):
        s = cs(
            "a",
            "Mary said she saw the car and it died",
            [[(0, 1), (2, 3)], [(4, 6), (7, 8)], [(3, 4)]],
        )
        kept = pronoun_clusters(s)
        # only the Mary/she chain has a gendered pronoun
        assert kept.clusters == [[Span(0, 1), Span(2, 3)]]


class TestInsertMarkers:
    def test_reference_layout(self):
        s = cs(
            "t",
            "The trophy didn't fit in the suitcase because it was too small",
            [[(6, 7), (8, 9)]],
        )
        m = insert_markers(s)
        assert m.text() == (
            "The trophy didn't fit in the <ENT1> suitcase </ENT1> "
            "because <ENT1> it </ENT1> was too small"
        )

    def test_clusters_numbered_by_first_kept_mention(self):
        s = cs("t", "a b c d e f", [[(4, 5), (5, 6)], [(0, 1), (2, 3)]])
        m = insert_markers(s)
        # the cluster starting at token 0 becomes ENT1 despite input order
        assert m.tokens[0] == "<ENT1>"
        assert m.clusters[0][0] == Span(0, 1)
        assert m.clusters[1][0] == Span(4, 5)

    def test_overlap_drops_later_shorter_mention(self, caplog):
        s = cs("t", "a b c d", [[(0, 2), (3, 4)], [(1, 2), (2, 3)]])
        with caplog.at_level(logging.WARNING):
            m = insert_markers(s)
        assert m.n_dropped_mentions == 1
        assert "dropping mention" in caplog.text
        # the longer [0,2) mention won; [1,2) lost; [2,3) survives disjointly
        assert m.clusters == ((Span(0, 2), Span(3, 4)), (Span(2, 3),))

    def test_same_start_prefers_longer(self):
        s = cs("t", "a b c d e f g h", [[(0, 1), (5, 6)], [(0, 3), (6, 7)]])
        m = insert_markers(s)
        # at token 0 the longer [0,3) mention wins; its cluster becomes ENT1
        assert m.clusters == ((Span(0, 3), Span(6, 7)), (Span(5, 6),))
        assert m.n_dropped_mentions == 1

    def test_singleton_cluster_rejected(self):
        s = cs("t", "a b c", [[(0, 1), (1, 2)], [(2, 3)]])
        with pytest.raises(ValueError, match="single mention"):
            insert_markers(s)
        m = insert_markers(drop_singletons(s))
        assert len(m.clusters) == 1

    def test_empty_clusters_no_markers(self):
        s = cs("t", "a b c", [])
        m = insert_markers(s)
        assert m.tokens == ("a", "b", "c")
        assert m.clusters == ()

    def test_adjacent_mentions_do_not_collide(self):
        s = cs("t", "a b c d", [[(0, 2), (2, 4)]])
        m = insert_markers(s)
        assert m.text() == "<ENT1> a b </ENT1> <ENT1> c d </ENT1>"


class TestStripMarkers:
    def test_inverts_insertion(self):
        s = cs("t", "a b c d e", [[(0, 1), (3, 4)], [(1, 3), (4, 5)]])
        m = insert_markers(s)
        tokens, clusters = strip_markers(m.tokens, "t")
        assert tokens == s.tokens
        assert clusters == [list(c) for c in m.clusters]

    def test_round_trip_fuzz(self):
        rng = random.Random(41)
        for _ in range(200):
            n = rng.randint(2, 12)
            tokens = [f"w{i}" for i in range(n)]
            clusters = []
            for _ in range(rng.randint(0, 3)):
                cluster = []
                for _ in range(rng.randint(2, 3)):
                    start = rng.randrange(n)
                    end = min(n, start + rng.randint(1, 3))
                    cluster.append(Span(start, end))
                clusters.append(cluster)
            sent = CorefSentence(id="f", tokens=tokens, clusters=clusters)
            m = insert_markers(sent)
            back_tokens, back_clusters = strip_markers(m.tokens, "f")
            assert back_tokens == tokens
            assert back_clusters == [list(c) for c in m.clusters]

    def test_error_positions_and_messages(self):
        cases = [
            (["<ENT1>", "</ENT1>"], "encloses no tokens"),
            (["<ENT1>", "a", "<ENT1>", "b", "</ENT1>", "</ENT1>"], "still open"),
            (["<ENT1>", "a", "<ENT2>", "b", "</ENT2>", "</ENT1>"], "still open"),
            (["a", "</ENT1>"], "nothing open"),
            (["<ENT1>", "a", "</ENT2>"], "does not match"),
            (["<ENT1>", "a"], "never closed"),
            (["<ENT0>", "a", "</ENT0>"], "leading zeros"),
            (["<ENT01>", "a", "</ENT01>"], "leading zeros"),
            (["<ENT3>", "a", "</ENT3>"], "not 1..1"),
            (["<ENTx>", "a"], "malformed marker"),
        ]
        for tokens, frag in cases:
            with pytest.raises(ParseError, match=frag):
                strip_markers(tokens, "bad")

    def test_position_reported(self):
        with pytest.raises(ParseError, match="token 2"):
            strip_markers(["a", "b", "</ENT1>"], "x")

    def test_no_markers_passthrough(self):
        tokens, clusters = strip_markers(["just", "words"], "x")
        assert tokens == ["just", "words"] and clusters == []


class TestCorpusIO:
    def test_load_save_round_trip(self, tmp_path):
        line = '{"id":"a","tokens":["x","y","z"],"clusters":[[[0,1],[2,3]]]}'
        src = tmp_path / "in.jsonl"
        src.write_text(line + "\n", encoding="utf-8")
        sentences = load_coref_corpus(str(src))
        assert sentences[0].clusters == [[Span(0, 1), Span(2, 3)]]
        marked = [insert_markers(s) for s in sentences]
        out = tmp_path / "out.jsonl"
        save_marked(str(out), marked)
        obj = json.loads(out.read_text(encoding="utf-8"))
        assert obj["tokens"][0] == "<ENT1>"
        assert obj["clusters"] == [[[0, 1], [2, 3]]]

    def test_bad_records_rejected(self, tmp_path):
        cases = [
            ('{"id":"a","tokens":["x"]}', "exactly the keys"),
            ('{"id":"a","tokens":[],"clusters":[]}', "non-empty list"),
            ('{"id":"a","tokens":["x"],"clusters":[[[0,5]]]}', "exceeds"),
            ('{"id":1,"tokens":["x"],"clusters":[]}', "non-empty string"),
            ("oops", "bad JSON"),
        ]
        for body, frag in cases:
            p = tmp_path / "bad.jsonl"
            p.write_text(body + "\n", encoding="utf-8")
            with pytest.raises(ParseError, match=frag):
                load_coref_corpus(str(p))

    def test_duplicate_ids_rejected(self, tmp_path):
        p = tmp_path / "dup.jsonl"
        p.write_text(
            '{"id":"a","tokens":["x"],"clusters":[]}\n'
            '{"id":"a","tokens":["y"],"clusters":[]}\n',
            encoding="utf-8",
        )
        with pytest.raises(ParseError, match="duplicate"):
            load_coref_corpus(str(p))
