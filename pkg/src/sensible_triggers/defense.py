"""Adversarial fine-tuning: alternate trigger search against the current
model with fine-tuning on trigger-augmented training data."""
from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .attacks import AttackConfig, AttackContext, Trigger, run_attack
from .classifier import (
    ClassifierParams,
    TrainConfig,
    accuracy_encoded,
    encode_split,
    evaluate_accuracy,
    train_encoded,
)
from .corpus import DatasetSplit, Polarity, Vocabulary, subset_by_polarity
from .exceptions import TriggerKitError
from .validation import check_probability

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = (
    "iteration", "trigger", "acc_orig_dev", "acc_attacked_dev", "train_loss",
    "acc_orig_after", "acc_attacked_after", "acc_heldout_trigger", "pool_size", "duplicate", "failed",
)


@dataclass(frozen=True)
class DefenseConfig:
    alpha: int = 0
    beta_frac: float = 1.0
    epochs_per_iter: int = 1
    iterations: int = 20
    seed: int = 0
    attack_cfg: AttackConfig = field(default_factory=AttackConfig)
    flip_direction: tuple = (Polarity.POSITIVE, Polarity.NEGATIVE)
    attack_method: str = "uat"
    learning_rate: float = 0.005
    batch_size: int = 32
    heldout_trigger: tuple | None = None

    def __post_init__(self):
        if self.alpha not in (0, 1):
            raise ValueError("alpha must be 0 or 1")
        check_probability(self.beta_frac, "beta_frac")
        if self.epochs_per_iter < 1:
            raise ValueError("epochs_per_iter must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.attack_method not in ("uat", "sensible"):
            raise ValueError("attack_method must be 'uat' or 'sensible'")
        src, tgt = (Polarity.parse(p) for p in self.flip_direction)
        if Polarity.NEUTRAL in (src, tgt) or src is tgt:
            raise ValueError("flip_direction must be (positive, negative) or (negative, positive)")
        object.__setattr__(self, "flip_direction", (src, tgt))
        if self.heldout_trigger is not None:
            object.__setattr__(self, "heldout_trigger", tuple(self.heldout_trigger))

    @property
    def source(self) -> Polarity:
        return self.flip_direction[0]

    def replace(self, **changes) -> "DefenseConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class DefenseRecord:
    iteration: int
    trigger: str
    acc_orig_dev: float
    acc_attacked_dev: float
    train_loss: float
    acc_orig_after: float
    acc_attacked_after: float
    acc_heldout_trigger: float
    pool_size: int
    duplicate: bool = False
    failed: bool = False

    def row(self) -> list:
        return [getattr(self, c) for c in HISTORY_COLUMNS]


@dataclass
class DefenseHistory:
    records: list[DefenseRecord] = field(default_factory=list)
    baseline_orig_dev: float = float("nan")
    baseline_attacked_dev: float = float("nan")
    pool: list[Trigger] = field(default_factory=list)

    @property
    def final_orig_dev(self) -> float:
        return self.records[-1].acc_orig_after if self.records else float("nan")

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def attacked_slope(self) -> float:
        """Least-squares slope of attacked-dev accuracy against iteration."""
        y = self.column("acc_attacked_dev")
        x = self.column("iteration")
        if len(y) < 2:
            return float("nan")
        return float(np.polyfit(x, y, 1)[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_COLUMNS)
            for r in self.records:
                w.writerow([_fmt(v) for v in r.row()])

    @classmethod
    def read_csv(cls, path) -> "DefenseHistory":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        hist = cls()
        for row in rows:
            missing = {"iteration", "acc_orig_dev", "acc_attacked_dev"} - set(row)
            if missing:
                raise ValueError(f"{path}: history is missing columns {sorted(missing)}")
            hist.records.append(DefenseRecord(
                iteration=int(row["iteration"]),
                trigger=row.get("trigger", ""),
                acc_orig_dev=float(row["acc_orig_dev"]),
                acc_attacked_dev=float(row["acc_attacked_dev"]),
                train_loss=float(row.get("train_loss") or "nan"),
                acc_orig_after=float(row.get("acc_orig_after") or "nan"),
                acc_attacked_after=float(row.get("acc_attacked_after") or "nan"),
                acc_heldout_trigger=float(row.get("acc_heldout_trigger") or "nan"),
                pool_size=int(row.get("pool_size") or 0),
                duplicate=row.get("duplicate") == "True",
                failed=row.get("failed") == "True",
            ))
        return hist


def _fmt(v):
    if isinstance(v, float):
        return "nan" if np.isnan(v) else f"{v:.6f}"
    return v


def augment(train: DatasetSplit, trigger_pool: Sequence[Trigger], beta_frac: float,
            rng: np.random.Generator, placement: str = "prepend") -> DatasetSplit:
    """Attach a pool trigger to ``round(beta_frac * N)`` examples drawn without
    replacement; labels never change. The result is shuffled."""
    check_probability(beta_frac, "beta_frac")
    examples = list(train)
    n = len(examples)
    n_aug = int(np.floor(beta_frac * n + 0.5))
    if n_aug and not trigger_pool:
        raise ValueError("trigger pool is empty but beta_frac > 0")
    chosen = rng.choice(n, size=n_aug, replace=False) if n_aug else np.array([], dtype=int)
    picks = rng.integers(len(trigger_pool), size=n_aug) if n_aug else np.array([], dtype=int)
    out = list(examples)
    for i, p in zip(chosen, picks):
        toks = trigger_pool[int(p)].tokens
        ex = examples[int(i)]
        out[int(i)] = ex.with_prefix(toks) if placement == "prepend" else type(ex)(ex.tokens + tuple(toks), ex.label_prob)
    order = rng.permutation(n)
    return DatasetSplit(train.name, [out[i] for i in order])


def defense_loop(params: ClassifierParams, vocab: Vocabulary, train: DatasetSplit, dev: DatasetSplit,
                 cfg: DefenseConfig, lm=None, lexicon=None) -> tuple[ClassifierParams, DefenseHistory]:
    """Run ``cfg.iterations`` rounds of attack, augment and fine-tune.

    Record ``k`` describes the model that iteration ``k`` attacks: its
    accuracy on the whole dev set and on the source-polarity dev subset
    with the trigger just found against it (a self-attack). The ``*_after``
    columns repeat both measurements once the iteration's fine-tuning is
    done; the held-out trigger is also measured after fine-tuning.
    """
    train = train.binary()
    dev = dev.binary()
    source = cfg.source
    placement = cfg.attack_cfg.placement
    dev_src = subset_by_polarity(dev, source)
    dev_batch, dev_targets = encode_split(dev, vocab)
    root = np.random.SeedSequence(cfg.seed)
    aug_seed, ft_seed, atk_seed = root.spawn(3)
    aug_rng = np.random.default_rng(aug_seed)
    ft_seeds = np.random.default_rng(ft_seed).integers(2 ** 31, size=cfg.iterations)
    atk_seeds = np.random.default_rng(atk_seed).integers(2 ** 31, size=cfg.iterations)
    heldout = tuple(vocab.id(t) for t in cfg.heldout_trigger) if cfg.heldout_trigger else None
    nan = float("nan")

    history = DefenseHistory()
    pool: list[Trigger] = history.pool
    params = params.copy()
    acc_orig = accuracy_encoded(params, dev_batch, dev_targets)
    history.baseline_orig_dev = acc_orig
    for it in range(1, cfg.iterations + 1):
        acfg = cfg.attack_cfg.replace(seed=int(atk_seeds[it - 1]))
        failed = duplicate = False
        trig = None
        try:
            ctx = AttackContext(params, vocab, list(dev_src), source, batch_size=acfg.batch_size,
                                seed=acfg.seed, placement=placement)
            trig = run_attack(cfg.attack_method, ctx, acfg, lm=lm, lexicon=lexicon)
            trig.attacked_accuracy = evaluate_accuracy(params, dev_src, vocab, trig.ids, placement)
        except (TriggerKitError, ValueError, RuntimeError, FloatingPointError) as exc:
            logger.warning("iteration %d: attack failed (%s); continuing", it, exc)
            failed = True
        acc_att = trig.attacked_accuracy if trig is not None else nan
        if it == 1:
            history.baseline_attacked_dev = acc_att
        if trig is not None:
            if any(p.tokens == trig.tokens for p in pool):
                duplicate = True
                logger.info("iteration %d: trigger %r already pooled", it, trig.text)
            else:
                pool.append(trig)

        loss = nan
        if pool or cfg.beta_frac == 0:
            ft_set = list(augment(train, pool, cfg.beta_frac, aug_rng, placement))
            if cfg.alpha == 1:
                ft_set = list(train) + ft_set
            batch, targets = encode_split(ft_set, vocab)
            tcfg = TrainConfig(cfg.learning_rate, cfg.epochs_per_iter, cfg.batch_size, int(ft_seeds[it - 1]))
            params, losses = train_encoded(params, batch, targets, tcfg)
            loss = losses[-1]

        acc_orig_after = accuracy_encoded(params, dev_batch, dev_targets)
        acc_att_after = evaluate_accuracy(params, dev_src, vocab, trig.ids, placement) if trig is not None else nan
        acc_held = evaluate_accuracy(params, dev_src, vocab, heldout, placement) if heldout else nan
        rec = DefenseRecord(it, trig.text if trig is not None else "", acc_orig, acc_att, loss,
                            acc_orig_after, acc_att_after, acc_held, len(pool), duplicate, failed)
        history.records.append(rec)
        logger.info("iteration %d trigger=%r orig=%.4f attacked=%.4f loss=%.4f",
                    it, rec.trigger, acc_orig, acc_att, loss)
        acc_orig = acc_orig_after
    return params, history


class AdversarialFineTuner(BaseEstimator):
    """Estimator wrapper: ``fit(train, dev)`` hardens a fitted classifier in place of a copy."""

    def __init__(self, classifier=None, config=None, lm=None, lexicon=None):
        self.classifier = classifier
        self.config = config
        self.lm = lm
        self.lexicon = lexicon

    def fit(self, train: DatasetSplit, dev: DatasetSplit):
        check_is_fitted(self.classifier, "params_")
        cfg = self.config if self.config is not None else DefenseConfig()
        params, self.history_ = defense_loop(self.classifier.params_, self.classifier.vocab_, train, dev,
                                             cfg, lm=self.lm, lexicon=self.lexicon)
        self.classifier_ = type(self.classifier).from_params(params, self.classifier.vocab_)
        return self

    def predict(self, X):
        check_is_fitted(self, "classifier_")
        return self.classifier_.predict(X)
