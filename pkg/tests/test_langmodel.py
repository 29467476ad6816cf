import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensible_triggers.corpus import DatasetSplit, Example
from sensible_triggers.exceptions import EmptyDatasetError
from sensible_triggers.langmodel import EOS, NGramLM, perplexity, train_lm

COUNT_CORPUS = [["a", "b", "c"]] * 6 + [["a", "b", "d"]] * 3 + [["b", "c"]]


def test_trivial_unigram():
    lm = NGramLM(order=1, k=0).fit([["a", "b"]])
    for w in ("a", "b", EOS):
        assert lm.prob(w) == pytest.approx(1 / 3)


def test_train_lm_from_splits():
    split = DatasetSplit("train", [Example(("a", "b"), 0.9)])
    assert train_lm([split], order=1, k=0).prob("a") == pytest.approx(1 / 3)


@pytest.mark.parametrize("k", [0.0, 0.1, 1.0])
def test_normalisation_over_random_contexts(synth_splits, k):
    lm = NGramLM(order=3, k=k).fit(synth_splits["train"].tokens)
    rng = np.random.default_rng(0)
    events = lm.events_
    for _ in range(100):
        ctx = list(rng.choice(events[:-1], size=2))
        assert sum(lm.distribution(ctx).values()) == pytest.approx(1.0, abs=1e-9)


class TestCountOracle:
    """Probabilities computed by hand from COUNT_CORPUS."""

    def test_mle(self):
        lm = NGramLM(order=3, k=0).fit(COUNT_CORPUS)
        assert lm.prob("c", ["a", "b"]) == pytest.approx(6 / 9)
        assert lm.prob("d", ["a", "b"]) == pytest.approx(3 / 9)
        assert lm.prob("a") == pytest.approx(9 / 10)
        assert lm.prob("b") == pytest.approx(1 / 10)
        assert lm.prob(EOS, ["b", "c"]) == pytest.approx(1.0)
        # unseen trigram context backs off to the bigram "a" -> "b"
        assert lm.prob("b", ["c", "a"]) == pytest.approx(1.0)

    def test_smoothed(self):
        # six events {a, b, c, d, UNK, EOS}; unigram total 39 with c(d) = 3
        lm = NGramLM(order=3, k=1.0).fit(COUNT_CORPUS)
        assert NGramLM(order=2, k=1.0).fit(COUNT_CORPUS).prob("d", ["b"]) == pytest.approx(53 / 240)
        assert lm.prob("d", ["a", "b"]) == pytest.approx(173 / 600)
        assert lm.prob("zzz", ["a", "b"]) == lm.prob("@@UNKNOWN@@", ["a", "b"])


def test_single_sentence_deterministic():
    lm = NGramLM(order=3, k=0).fit([["the", "film", "works"]])
    assert lm.conditional_log_probs(["the", "film", "works"]) == [0.0, 0.0, 0.0, 0.0]
    assert lm.perplexity(["the", "film", "works"]) == 1.0


def test_permutation_sensitive():
    corpus = [["it", "is", "good"], ["it", "is", "bad"], ["they", "are", "good"]] * 5
    lm = NGramLM(order=3, k=0.1).fit(corpus)
    assert lm.log_prob(["it", "is", "good"]) > lm.log_prob(["good", "is", "it"])


def test_incremental_equals_batch(synth_splits, synth_lm):
    for doc in synth_splits["dev"].tokens[:30]:
        s = synth_lm.start()
        for t in doc:
            s = s.extend(t)
        assert s.finish() == synth_lm.log_prob(doc)


def test_uniform_lm_perplexity_100():
    vocab = [f"w{i:02d}" for i in range(98)]
    lm = NGramLM(order=1, k=0, vocabulary=vocab).fit([vocab + ["oov"]])
    assert lm.n_events == 100
    for seq in (["w00"], ["w05", "oov", "w97"], ["zz"] * 7):
        assert perplexity(lm, seq) == pytest.approx(100.0)


def test_perplexity_is_exp_mean_nll(synth_lm):
    toks = ["the", "movie", "was", "great"]
    lps = synth_lm.conditional_log_probs(toks)
    assert len(lps) == 5
    assert synth_lm.perplexity(toks) == pytest.approx(math.exp(-sum(lps) / 5))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "d", "q"]), min_size=1, max_size=6))
def test_perplexity_at_least_one(toks):
    lm = NGramLM(order=3, k=0.1).fit(COUNT_CORPUS)
    assert lm.perplexity(toks) >= 1.0


def test_kl_to_uniform_non_increasing_in_k(synth_splits):
    docs = synth_splits["train"].tokens
    lms = [NGramLM(order=3, k=k).fit(docs) for k in (0.01, 0.1, 1.0, 10.0)]
    events = lms[0].events_
    rng = np.random.default_rng(1)
    for _ in range(20):
        ctx = list(rng.choice(events[:-1], size=2))
        kls = []
        for lm in lms:
            p = np.array([lm.prob(w, ctx) for w in events])
            kls.append(float(np.sum(p * np.log(p * len(p)))))
        assert all(b <= a + 1e-12 for a, b in zip(kls, kls[1:]))


def test_save_load_round_trip(tmp_path, synth_lm):
    path = tmp_path / "lm.json"
    synth_lm.save(path)
    back = NGramLM.load(path)
    doc = ["a", "great", "film", "zzzz"]
    assert back.log_prob(doc) == synth_lm.log_prob(doc)
    back.save(tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_errors():
    with pytest.raises(EmptyDatasetError):
        NGramLM().fit([])
    with pytest.raises(ValueError):
        NGramLM(order=4).fit([["a"]])
    with pytest.raises(ValueError):
        NGramLM(order=1, k=0).fit([["a"]]).perplexity([])


def test_sst_fluent_trigger_has_lower_perplexity():
    from conftest import sst_dir
    from sensible_triggers.corpus import load_splits
    d = sst_dir()
    if d is None:
        pytest.fail("SST TSVs not found (set SENSIBLE_TRIGGERS_SST_DIR or run `sensible-triggers prepare-sst`)")
    lm = NGramLM(order=3, k=0.1).fit(load_splits(d, ("train",))["train"].tokens)
    assert lm.perplexity(["irredeemably", "disgusting", "garbage"]) < lm.perplexity(["zoning", "tapping", "fiennes"])
