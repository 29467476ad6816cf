import itertools
import random

import pytest
from hypothesis import given, strategies as st

from sensible_triggers.postagger import (
    UNIVERSAL_TAGS,
    POSPatternFilter,
    TagLexicon,
    load_patterns,
    matches_any,
    prefix_matches,
    tag,
)


@pytest.mark.parametrize("tokens,tags", [
    (["irredeemably", "disgusting", "garbage"], ["ADV", "ADJ", "NOUN"]),
    (["xyzzyq"], ["NOUN"]),
    (["quickly"], ["ADV"]),
    (["the", "it", "and"], ["DET", "PRON", "CONJ"]),
])
def test_tag_examples(lexicon, tokens, tags):
    assert tag(lexicon, tokens) == tags


def test_suffix_longest_match():
    lex = TagLexicon({}, suffix_rules=[("ly", "ADV"), ("ically", "NOUN")])
    assert lex.suffix_rules[0][0] == "ically"
    assert lex.tag_token("magically") == "NOUN"
    assert lex.tag_token("ly") == "NOUN"  # suffix must be a proper suffix


def test_rejects_unknown_tags():
    with pytest.raises(ValueError):
        TagLexicon({"x": "BOGUS"})


def test_shipped_patterns():
    pats = load_patterns()
    assert len(pats) == 7 and all(len(p) == 3 for p in pats)
    assert ("ADV", "ADJ", "NOUN") in pats and ("VERB", "PRON", "NOUN") in pats


@pytest.mark.parametrize("tags,expected", [
    (["ADV", "ADJ", "NOUN"], True), (["NOUN", "NOUN", "NOUN"], False), (["VERB", "PRON", "NOUN"], True),
])
def test_matches_any_examples(tags, expected):
    assert matches_any(tags, load_patterns()) is expected


def test_matches_any_brute_force():
    pats = load_patterns()
    rng = random.Random(0)
    universe = sorted(UNIVERSAL_TAGS)
    triples = [tuple(rng.choice(universe) for _ in range(3)) for _ in range(500)] + [tuple(p) for p in pats]
    for t in triples:
        assert matches_any(t, pats) == any(all(a == b for a, b in zip(t, p)) for p in pats)


def test_length_mismatch():
    with pytest.raises(ValueError):
        matches_any(["ADV", "ADJ"], load_patterns())


@given(st.lists(st.sampled_from(sorted(UNIVERSAL_TAGS)), max_size=3))
def test_prefix_matches_definition(tags):
    pats = load_patterns()
    completions = itertools.product(sorted(UNIVERSAL_TAGS), repeat=3 - len(tags))
    assert prefix_matches(tags, pats) == any(matches_any(list(tags) + list(c), pats) for c in completions)


@given(st.lists(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12), min_size=1, max_size=5))
def test_tag_total_and_deterministic(tokens):
    lex = TagLexicon.load()
    a = tag(lex, tokens)
    assert a == tag(lex, tokens) and len(a) == len(tokens)
    assert set(a) <= UNIVERSAL_TAGS


def test_pattern_filter_transformer(lexicon):
    docs = [["irredeemably", "disgusting", "garbage"], ["film", "film", "film"]]
    assert POSPatternFilter(lexicon).fit().transform(docs) == docs[:1]


def test_pattern_file_validation(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("# comment\nADV,ADJ,NOUN\n\nnoun , verb , adj\n")
    assert load_patterns(p) == (("ADV", "ADJ", "NOUN"), ("NOUN", "VERB", "ADJ"))
    p.write_text("ADV,FOO,NOUN\n")
    with pytest.raises(ValueError):
        load_patterns(p)
