import numpy as np
import pytest

from sensible_triggers.attacks import AttackConfig, Trigger
from sensible_triggers.corpus import DatasetSplit, Example, Polarity
from sensible_triggers.defense import (
    HISTORY_COLUMNS,
    AdversarialFineTuner,
    DefenseConfig,
    DefenseHistory,
    augment,
    defense_loop,
)

POOL = [Trigger((2, 3), ("t1", "t2"), Polarity.NEGATIVE), Trigger((4, 5), ("t3", "t4"), Polarity.NEGATIVE)]
FAST_ATTACK = AttackConfig(num_candidates=10, max_rounds=3, batch_size=64)


def hundred():
    return DatasetSplit("train", [Example((f"w{i}", "x"), 0.9 if i % 2 else 0.1) for i in range(100)])


def starts_with_trigger(ex):
    return any(ex.tokens[:2] == t.tokens for t in POOL)


class TestAugment:
    def test_beta_zero_is_multiset_identity(self):
        train = hundred()
        out = augment(train, POOL, 0.0, np.random.default_rng(0))
        assert sorted(out.examples, key=repr) == sorted(train.examples, key=repr)

    def test_beta_one_every_example(self):
        out = augment(hundred(), POOL, 1.0, np.random.default_rng(0))
        assert all(starts_with_trigger(ex) for ex in out)

    def test_beta_06_count(self):
        out = augment(hundred(), POOL, 0.6, np.random.default_rng(1))
        assert sum(starts_with_trigger(ex) for ex in out) == 60

    def test_labels_and_bodies_unchanged(self):
        train = hundred()
        by_word = {ex.tokens[0]: ex for ex in train}
        for ex in augment(train, POOL, 0.5, np.random.default_rng(2)):
            body = ex.tokens[2:] if starts_with_trigger(ex) else ex.tokens
            assert by_word[body[0]].tokens == body
            assert by_word[body[0]].label_prob == ex.label_prob

    def test_round_half_up(self):
        train = DatasetSplit("train", hundred().examples[:5])
        out = augment(train, POOL, 0.5, np.random.default_rng(0))
        assert sum(starts_with_trigger(ex) for ex in out) == 3

    def test_append_placement(self):
        out = augment(hundred(), POOL[:1], 1.0, np.random.default_rng(0), placement="append")
        assert all(ex.tokens[-2:] == ("t1", "t2") for ex in out)

    def test_empty_pool(self):
        with pytest.raises(ValueError):
            augment(hundred(), [], 0.5, np.random.default_rng(0))


class TestConfig:
    @pytest.mark.parametrize("kw", [{"iterations": 0}, {"alpha": 2}, {"beta_frac": 1.5}, {"epochs_per_iter": 0},
                                    {"attack_method": "nn"}, {"flip_direction": ("positive", "positive")}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            DefenseConfig(**kw)

    def test_parses_direction(self):
        assert DefenseConfig(flip_direction=("negative", "positive")).source is Polarity.NEGATIVE


@pytest.fixture(scope="module")
def short_run(synth_model, synth_splits):
    cfg = DefenseConfig(iterations=4, attack_cfg=FAST_ATTACK, seed=3, heldout_trigger=("the", "the", "the"))
    return defense_loop(synth_model.params_, synth_model.vocab_, synth_splits["train"], synth_splits["dev"], cfg)


class TestLoop:
    def test_pool_and_records(self, short_run):
        _, hist = short_run
        assert len(hist) == 4
        assert [r.iteration for r in hist.records] == [1, 2, 3, 4]
        sizes = [r.pool_size for r in hist.records]
        assert sizes == sorted(sizes)
        assert sizes[-1] == 4 - sum(r.duplicate for r in hist.records) - sum(r.failed for r in hist.records)
        assert len(hist.pool) == sizes[-1]
        assert hist.baseline_attacked_dev == hist.records[0].acc_attacked_dev
        assert all(np.isfinite(r.acc_heldout_trigger) for r in hist.records)
        # record k+1 starts from the model record k ended with
        for a, b in zip(hist.records, hist.records[1:]):
            assert b.acc_orig_dev == a.acc_orig_after

    def test_deterministic(self, short_run, synth_model, synth_splits):
        cfg = DefenseConfig(iterations=4, attack_cfg=FAST_ATTACK, seed=3, heldout_trigger=("the", "the", "the"))
        params, hist = defense_loop(synth_model.params_, synth_model.vocab_, synth_splits["train"],
                                    synth_splits["dev"], cfg)
        assert [r.row() for r in hist.records] == [r.row() for r in short_run[1].records]
        assert np.array_equal(params.embedding, short_run[0].embedding)

    def test_input_params_untouched(self, short_run, synth_model):
        assert not np.array_equal(short_run[0].embedding, synth_model.params_.embedding)

    def test_plain_finetune_equivalent(self, synth_model, synth_splits):
        cfg = DefenseConfig(iterations=1, alpha=1, beta_frac=0.0, attack_cfg=FAST_ATTACK)
        _, hist = defense_loop(synth_model.params_, synth_model.vocab_, synth_splits["train"],
                               synth_splits["dev"], cfg)
        assert abs(hist.final_orig_dev - hist.baseline_orig_dev) <= 0.05

    def test_csv_round_trip(self, short_run, tmp_path):
        _, hist = short_run
        path = tmp_path / "h.csv"
        hist.to_csv(path)
        assert path.read_text().splitlines()[0] == ",".join(HISTORY_COLUMNS)
        back = DefenseHistory.read_csv(path)
        assert [r.trigger for r in back.records] == [r.trigger for r in hist.records]
        assert back.column("acc_attacked_dev") == pytest.approx(hist.column("acc_attacked_dev"), abs=1e-6)
        assert [r.duplicate for r in back.records] == [r.duplicate for r in hist.records]

    def test_slope(self):
        hist = DefenseHistory()
        from sensible_triggers.defense import DefenseRecord
        for i, y in enumerate([0.1, 0.2, 0.3], start=1):
            hist.records.append(DefenseRecord(i, "", 0.8, y, 0.0, 0.8, y, float("nan"), i))
        assert hist.attacked_slope() == pytest.approx(0.1)


def test_estimator(synth_model, synth_splits):
    est = AdversarialFineTuner(synth_model, DefenseConfig(iterations=2, attack_cfg=FAST_ATTACK))
    est.fit(synth_splits["train"], synth_splits["dev"])
    assert len(est.history_) == 2
    assert len(est.predict(synth_splits["dev"].tokens[:3])) == 3
