"""Trigger search: gradient-guided (HotFlip) coordinate ascent, the
POS-filtered perplexity-weighted beam search, simple baselines and an
exhaustive oracle for small instances.

All searches maximise the same objective::

    mean source-label cross-entropy of f(x; t)
        + perplexity_weight * perplexity_scale * perplexity(t) + objective_offset

``perplexity_weight`` is negative by default, so fluent triggers are
preferred. The offset is constant and never changes which trigger wins.
"""
from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .classifier import (
    PROB_FLOOR,
    ClassifierParams,
    EncodedBatch,
    evaluate_accuracy,
    head_probs,
)
from .corpus import PAD_ID, UNK_ID, DatasetSplit, Example, Polarity, Vocabulary
from .exceptions import EmptyDatasetError, SearchBudgetError
from .postagger import TagLexicon, matches_any, prefix_matches
from .validation import check_placement, check_token_docs

logger = logging.getLogger(__name__)

BRUTE_FORCE_BUDGET = 10 ** 6
_CHUNK_ELEMENTS = 1 << 21

METHODS = ("random", "nn", "hardcoded", "topfreq", "uat", "sensible")

# Names used by JSON configs that follow the objective's symbols.
CONFIG_ALIASES = {"lambda": "perplexity_weight", "lam": "perplexity_weight", "beta_const": "objective_offset"}


@dataclass(frozen=True)
class AttackConfig:
    trigger_len: int = 3
    num_candidates: int = 100
    beam_size: int = 5
    perplexity_weight: float = -0.00005
    objective_offset: float = 5.0
    perplexity_scale: float | str = 1.0
    patterns: tuple | None = None
    placement: str = "prepend"
    max_rounds: int = 10
    seed: int = 0
    batch_size: int = 256
    nn_step: float = 1.0
    init_token: str = "the"
    candidate_source: str = "hotflip"

    def __post_init__(self):
        if self.trigger_len < 1:
            raise ValueError("trigger_len must be >= 1")
        if not self.num_candidates >= self.beam_size >= 1:
            raise ValueError("need num_candidates >= beam_size >= 1")
        if self.max_rounds < 1 or self.batch_size < 1:
            raise ValueError("max_rounds and batch_size must be positive")
        if self.candidate_source not in ("hotflip", "random"):
            raise ValueError("candidate_source must be 'hotflip' or 'random'")
        if not (self.perplexity_scale == "auto" or float(self.perplexity_scale) > 0):
            raise ValueError("perplexity_scale must be positive or 'auto'")
        object.__setattr__(self, "placement", check_placement(self.placement))
        if self.patterns is not None:
            pats = tuple(tuple(p) for p in self.patterns)
            if any(len(p) != self.trigger_len for p in pats):
                raise ValueError("every POS pattern must have length trigger_len")
            object.__setattr__(self, "patterns", pats)

    @classmethod
    def from_dict(cls, data: dict) -> "AttackConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            key = CONFIG_ALIASES.get(key, key)
            if key not in names:
                raise ValueError(f"unknown attack setting {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def replace(self, **changes) -> "AttackConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["patterns"] = [list(p) for p in self.patterns] if self.patterns is not None else None
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class Trigger:
    ids: tuple[int, ...]
    tokens: tuple[str, ...]
    target: Polarity
    objective: float = float("nan")
    attacked_accuracy: float | None = None
    method: str = ""
    seed: int | None = None
    config_hash: str = ""
    fallback: bool = False
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.ids = tuple(int(i) for i in self.ids)
        self.tokens = tuple(self.tokens)
        if PAD_ID in self.ids:
            raise ValueError("a trigger may not contain the padding id")

    def __len__(self):
        return len(self.ids)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_record(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "ids": list(self.ids),
            "target": self.target.name.lower(),
            "objective": self.objective,
            "attacked_accuracy": self.attacked_accuracy,
            "method": self.method,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "fallback": self.fallback,
        }


@dataclass
class BeamHypothesis:
    ids: tuple[int, ...]
    score: float
    fallback: bool = False


class AttackContext:
    """Frozen model + source-polarity batch, with the per-example embedding
    sums cached so candidate triggers can be scored in bulk.

    Mean pooling makes the score independent of where the trigger is placed;
    ``placement`` is carried for reporting and for building attacked inputs.
    """

    def __init__(self, params: ClassifierParams, vocab: Vocabulary, examples: Sequence[Example],
                 source: Polarity, batch_size: int | None = None, seed: int = 0,
                 placement: str = "prepend"):
        examples = list(examples)
        if not examples:
            raise EmptyDatasetError("attack needs at least one source example")
        source = Polarity.parse(source)
        if any(ex.polarity is not source for ex in examples):
            raise ValueError("attack data must all carry the source polarity")
        if batch_size is not None and len(examples) > batch_size:
            pick = np.sort(np.random.default_rng(seed).choice(len(examples), batch_size, replace=False))
            examples = [examples[i] for i in pick]
        self.params = params
        self.vocab = vocab
        self.examples = examples
        self.source = source
        self.target = source.opposite
        self.placement = check_placement(placement)
        self.batch = EncodedBatch.from_sequences([vocab.encode(ex.tokens) for ex in examples])
        self.sums = self.batch.embedding_sums(params.embedding)
        self.lengths = self.batch.lengths.astype(np.float64)
        specials = np.zeros(params.vocab_size, dtype=bool)
        specials[[PAD_ID, UNK_ID]] = True
        self.specials = specials
        self.candidate_ids = np.flatnonzero(~specials)

    def __len__(self):
        return len(self.examples)

    def token_ids(self, tokens: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.vocab.id(t) for t in tokens)

    def tokens(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.vocab.token(i) for i in ids)

    def _pooled(self, triggers: np.ndarray) -> np.ndarray:
        length = triggers.shape[1]
        trig_sum = self.params.embedding[triggers].sum(axis=1)
        return (self.sums[None, :, :] + trig_sum[:, None, :]) / (self.lengths[None, :, None] + length)

    def classifier_losses(self, triggers) -> np.ndarray:
        """Mean source-label cross-entropy over the batch for each row of ``triggers``."""
        triggers = np.atleast_2d(np.asarray(triggers, dtype=np.int64))
        out = np.empty(len(triggers))
        step = max(1, _CHUNK_ELEMENTS // max(1, len(self) * self.params.dim))
        col = self.source.class_index
        for start in range(0, len(triggers), step):
            chunk = triggers[start:start + step]
            if chunk.shape[1] == 0:
                pooled = np.broadcast_to(self.sums / self.lengths[:, None], (len(chunk),) + self.sums.shape)
            else:
                pooled = self._pooled(chunk)
            probs = head_probs(self.params, pooled)[1]
            out[start:start + step] = (-np.log(np.maximum(probs[..., col], PROB_FLOOR))).mean(axis=1)
        return out

    def target_gradient(self, trigger_ids: Sequence[int], position: int) -> np.ndarray:
        """Batch-averaged gradient of the target-label loss w.r.t. the embedding at ``position``."""
        trig = np.asarray(trigger_ids, dtype=np.int64)
        if not 0 <= position < len(trig):
            raise ValueError(f"position {position} outside trigger of length {len(trig)}")
        pooled = self._pooled(trig[None, :])[0]
        hidden, probs = head_probs(self.params, pooled)
        dlogits = probs.copy()
        dlogits[:, self.target.class_index] -= 1.0
        dpre = (dlogits @ self.params.output_w.T) * (1.0 - hidden ** 2)
        dpooled = dpre @ self.params.hidden_w.T
        # every position of a mean-pooled input receives dL/dpooled / length
        per_example = dpooled / (self.lengths[:, None] + len(trig))
        return per_example.mean(axis=0)

    def predictions(self, trigger_ids: Sequence[int]) -> np.ndarray:
        trig = np.asarray(trigger_ids, dtype=np.int64)
        if trig.size == 0:
            pooled = self.sums / self.lengths[:, None]
        else:
            pooled = self._pooled(trig[None, :])[0]
        return head_probs(self.params, pooled)[1].argmax(axis=1)

    def accuracy(self, trigger_ids: Sequence[int] = ()) -> float:
        return float(np.mean(self.predictions(trigger_ids) == self.source.class_index))


class Scorer:
    """Full attack objective for batches of (possibly partial) triggers."""

    def __init__(self, ctx: AttackContext, cfg: AttackConfig, lm=None):
        self.ctx = ctx
        self.cfg = cfg
        self.lm = lm
        self.weight = float(cfg.perplexity_weight) if lm is not None else 0.0
        self.scale = 1.0
        if self.weight != 0.0:
            if cfg.perplexity_scale == "auto":
                self.scale = calibrate_perplexity_scale(ctx, lm, cfg)
            else:
                self.scale = float(cfg.perplexity_scale)
        self._ppl_cache: dict[tuple, float] = {}

    def perplexity(self, ids: tuple) -> float:
        hit = self._ppl_cache.get(ids)
        if hit is None:
            hit = self.lm.perplexity(self.ctx.tokens(ids))
            self._ppl_cache[ids] = hit
        return hit

    def __call__(self, triggers) -> np.ndarray:
        triggers = np.atleast_2d(np.asarray(triggers, dtype=np.int64))
        scores = self.ctx.classifier_losses(triggers)
        if self.weight != 0.0 and triggers.shape[1] > 0:
            ppl = np.array([self.perplexity(tuple(int(i) for i in row)) for row in triggers])
            scores = scores + self.weight * self.scale * ppl
        return scores + float(self.cfg.objective_offset)


def calibrate_perplexity_scale(ctx: AttackContext, lm, cfg: AttackConfig, n_samples: int = 1000) -> float:
    """Scale making the median random candidate's perplexity term about 1 in magnitude."""
    if cfg.perplexity_weight == 0:
        return 1.0
    rng = np.random.default_rng([cfg.seed, 7])
    samples = rng.choice(ctx.candidate_ids, size=(n_samples, cfg.trigger_len))
    ppl = np.array([lm.perplexity(ctx.tokens(row)) for row in samples])
    median = float(np.median(ppl))
    scale = 1.0 / (abs(cfg.perplexity_weight) * median)
    logger.info("perplexity scale calibrated to %.6g (median perplexity %.4g)", scale, median)
    return scale


def attack_objective(params: ClassifierParams, lm, batch: Sequence[Example], trigger, cfg: AttackConfig,
                     vocab: Vocabulary) -> float:
    """Objective of one full trigger (ids or a :class:`Trigger`) on a source-polarity batch."""
    ids = trigger.ids if isinstance(trigger, Trigger) else tuple(trigger)
    if len(ids) != cfg.trigger_len:
        raise ValueError("attack_objective expects a full-length trigger")
    ctx = AttackContext(params, vocab, batch, batch[0].polarity, placement=cfg.placement)
    return float(Scorer(ctx, cfg, lm)([ids])[0])


def init_trigger(vocab: Vocabulary, cfg: AttackConfig, lexicon: TagLexicon | None = None) -> tuple[int, ...]:
    """``trigger_len`` copies of the init token, or of the first determiner in the vocabulary."""
    if cfg.init_token in vocab:
        tok = vocab.id(cfg.init_token)
    else:
        lexicon = lexicon if lexicon is not None else TagLexicon.load()
        dets = [i for i in range(2, len(vocab)) if lexicon.tag_token(vocab.token(i)) == "DET"]
        tok = dets[0] if dets else 2
    return (tok,) * cfg.trigger_len


def _rank_desc(scores: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Order indices by descending score, ties by ascending token id."""
    return np.lexsort((ids, -scores))


def hotflip_candidates(ctx: AttackContext, trigger_ids: Sequence[int], position: int, k: int) -> np.ndarray:
    """Top-``k`` replacement ids for ``position`` by the first-order score
    ``(e_cand - e_cur) . (-grad)`` of the target-label loss."""
    grad = ctx.target_gradient(trigger_ids, position)
    emb = ctx.params.embedding
    cur = emb[int(trigger_ids[position])]
    scores = (emb - cur) @ (-grad)
    ids = ctx.candidate_ids
    order = _rank_desc(scores[ids], ids)
    return ids[order[:k]]


def _best_index(scores: np.ndarray, rows: np.ndarray) -> int:
    """Argmax with ties going to the lexicographically smallest id row."""
    top = scores.max()
    tied = np.flatnonzero(scores == top)
    if len(tied) == 1:
        return int(tied[0])
    keys = [tuple(rows[i]) for i in tied]
    return int(tied[min(range(len(tied)), key=keys.__getitem__)])


def _finish(ctx: AttackContext, ids, score, method, cfg, **extra) -> Trigger:
    return Trigger(ids=tuple(ids), tokens=ctx.tokens(ids), target=ctx.target, objective=float(score),
                   method=method, seed=cfg.seed, config_hash=cfg.digest(), **extra)


def generate_trigger_uat(ctx: AttackContext, cfg: AttackConfig, lm=None, init=None) -> Trigger:
    """Greedy coordinate ascent over trigger positions with HotFlip candidates.

    Each position in turn is replaced by the best of ``num_candidates``
    candidates under the true objective, if that improves it. Rounds repeat
    until one passes without improvement or ``max_rounds`` is hit.
    """
    score_fn = Scorer(ctx, cfg, lm)
    trig = np.array(init if init is not None else init_trigger(ctx.vocab, cfg), dtype=np.int64)
    current = float(score_fn([trig])[0])
    history = [current]
    for rnd in range(cfg.max_rounds):
        improved = False
        for pos in range(cfg.trigger_len):
            cands = hotflip_candidates(ctx, trig, pos, cfg.num_candidates)
            rows = np.repeat(trig[None, :], len(cands), axis=0)
            rows[:, pos] = cands
            scores = score_fn(rows)
            best = _best_index(scores, rows)
            if scores[best] > current:
                trig = rows[best].copy()
                current = float(scores[best])
                improved = True
        history.append(current)
        logger.debug("uat round %d objective %.5f trigger %s", rnd, current, ctx.tokens(trig))
        if not improved:
            break
    return _finish(ctx, trig, current, "uat", cfg, history=history)


def _random_candidates(ctx: AttackContext, rng: np.random.Generator, k: int) -> np.ndarray:
    k = min(k, len(ctx.candidate_ids))
    return np.sort(rng.choice(ctx.candidate_ids, size=k, replace=False))


def generate_trigger_sensible(ctx: AttackContext, lm, lexicon: TagLexicon | None, cfg: AttackConfig) -> Trigger:
    """Left-to-right beam search over trigger positions.

    Every hypothesis is extended with candidates for the next position
    (HotFlip-ranked, or random when ``cfg.candidate_source == 'random'``),
    dropping those whose tag prefix fits no pattern. Partial triggers are
    scored as they stand: classifier loss with the partial trigger attached
    plus the weighted perplexity of the partial sequence. If filtering leaves
    no beam anything to expand, the admissible tokens are re-ranked over the
    whole vocabulary; only if none exist does the step proceed unfiltered,
    and the result is then flagged.
    """
    patterns = cfg.patterns
    if patterns is not None and lexicon is None:
        lexicon = TagLexicon.load()
    score_fn = Scorer(ctx, cfg, lm)
    rng = np.random.default_rng([cfg.seed, 11])
    filler = np.array(init_trigger(ctx.vocab, cfg, lexicon), dtype=np.int64)
    tag_cache: dict[int, str] = {}

    def tag_of(i):
        t = tag_cache.get(i)
        if t is None:
            t = tag_cache[i] = lexicon.tag_token(ctx.vocab.token(i))
        return t

    def candidates(hyp, step, k):
        if cfg.candidate_source == "hotflip":
            probe = np.concatenate([np.array(hyp.ids, dtype=np.int64), filler[step:]])
            return hotflip_candidates(ctx, probe, step, k)
        return _random_candidates(ctx, rng, k)

    def admissible(hyp, cands):
        prefix = [tag_of(i) for i in hyp.ids]
        return [int(c) for c in cands if prefix_matches(prefix + [tag_of(int(c))], patterns)]

    beams = [BeamHypothesis((), 0.0)]
    for step in range(cfg.trigger_len):
        proposals = [(hyp, candidates(hyp, step, cfg.num_candidates), hyp.fallback) for hyp in beams]
        if patterns is not None:
            filtered = [(hyp, admissible(hyp, c), f) for hyp, c, f in proposals]
            if not any(c for _, c, _ in filtered):
                # every beam is a dead end among the usual candidates: rank the
                # whole vocabulary and keep the best admissible ones instead
                logger.info("no admissible candidates at step %d; widening the candidate list", step)
                everything = len(ctx.candidate_ids)
                filtered = [(hyp, admissible(hyp, candidates(hyp, step, everything))[:cfg.num_candidates], f)
                            for hyp, _, f in proposals]
            if any(c for _, c, _ in filtered):
                proposals = filtered
            else:
                proposals = [(hyp, c, True) for hyp, c, _ in proposals]
        rows, flags = [], []
        seen = set()
        for hyp, cands, fallback in proposals:
            for c in cands:
                new = hyp.ids + (int(c),)
                if new not in seen:
                    seen.add(new)
                    rows.append(new)
                    flags.append(fallback)
        if not rows:
            raise RuntimeError("beam search produced no expansions")
        arr = np.array(rows, dtype=np.int64)
        scores = score_fn(arr)
        order = np.lexsort(tuple(arr[:, j] for j in range(arr.shape[1] - 1, -1, -1)) + (-scores,))
        beams = [BeamHypothesis(rows[i], float(scores[i]), flags[i]) for i in order[:cfg.beam_size]]
        logger.debug("beam step %d best %s %.5f", step, ctx.tokens(beams[0].ids), beams[0].score)

    best = beams[0]
    if patterns is not None:
        valid = [b for b in beams if matches_any([tag_of(i) for i in b.ids], patterns)]
        if valid:
            best = valid[0]
        else:
            best = dataclasses.replace(best, fallback=True)
    if best.fallback:
        warnings.warn(f"no pattern-satisfying trigger found; returning {ctx.tokens(best.ids)}", stacklevel=2)
    return _finish(ctx, best.ids, best.score, "sensible", cfg, fallback=best.fallback)


def random_attack(ctx: AttackContext, cfg: AttackConfig) -> Trigger:
    """Best of ``max_rounds * num_candidates`` uniformly sampled triggers (classifier loss only)."""
    rng = np.random.default_rng([cfg.seed, 3])
    score_fn = Scorer(ctx, cfg, lm=None)
    best_ids, best_score = None, -np.inf
    for _ in range(cfg.max_rounds):
        rows = rng.choice(ctx.candidate_ids, size=(cfg.num_candidates, cfg.trigger_len))
        scores = score_fn(rows)
        i = int(np.argmax(scores))
        if scores[i] > best_score:
            best_ids, best_score = rows[i].copy(), float(scores[i])
    return _finish(ctx, best_ids, best_score, "random", cfg)


class EmbeddingIndex:
    """Exact Euclidean nearest-neighbour lookup over the non-special embedding rows."""

    def __init__(self, embedding: np.ndarray, ids: np.ndarray):
        self.ids = np.asarray(ids)
        self.points = embedding[self.ids]
        self.tree = cKDTree(self.points)

    def query(self, vectors: np.ndarray) -> np.ndarray:
        vectors = np.atleast_2d(vectors)
        k = min(2, len(self.ids))
        dist, idx = self.tree.query(vectors, k=k)
        dist = dist.reshape(len(vectors), k)
        idx = idx.reshape(len(vectors), k)
        out = self.ids[idx[:, 0]]
        if k == 2:
            # exact distance ties resolve to the smaller token id, as a linear scan would
            tie = dist[:, 1] == dist[:, 0]
            out[tie] = np.minimum(self.ids[idx[tie, 0]], self.ids[idx[tie, 1]])
        return out


def nearest_neighbor_scan(embedding: np.ndarray, ids: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    vectors = np.atleast_2d(vectors)
    pts = embedding[ids]
    d2 = ((vectors[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    return ids[np.argmin(d2, axis=1)]


def nearest_neighbor_attack(ctx: AttackContext, cfg: AttackConfig) -> Trigger:
    """Step each position along the normalised averaged gradient (descending
    the target-label loss) and snap to the nearest vocabulary embedding."""
    index = EmbeddingIndex(ctx.params.embedding, ctx.candidate_ids)
    trig = np.array(init_trigger(ctx.vocab, cfg), dtype=np.int64)
    for pos in range(cfg.trigger_len):
        grad = ctx.target_gradient(trig, pos)
        norm = np.linalg.norm(grad)
        point = ctx.params.embedding[trig[pos]].copy()
        if norm > 0 and cfg.nn_step:
            point -= cfg.nn_step * grad / norm
            trig[pos] = int(index.query(point)[0])
    score = float(Scorer(ctx, cfg, lm=None)([trig])[0])
    return _finish(ctx, trig, score, "nn", cfg)


def hardcoded_attack(ctx: AttackContext, tokens: Sequence[str], cfg: AttackConfig, method="hardcoded") -> Trigger:
    tokens = list(tokens)
    if not tokens:
        raise ValueError("a hardcoded trigger needs at least one token")
    missing = [t for t in tokens if t not in ctx.vocab]
    if missing:
        warnings.warn(f"tokens not in vocabulary, mapped to UNK: {missing}", stacklevel=2)
    ids = ctx.token_ids(tokens)
    score = float(Scorer(ctx, cfg.replace(trigger_len=len(ids), patterns=None), lm=None)([ids])[0])
    return Trigger(ids=ids, tokens=tuple(tokens), target=ctx.target, objective=score, method=method,
                   seed=cfg.seed, config_hash=cfg.digest())


def brute_force_best_trigger(ctx: AttackContext, vocab_subset: Sequence[int], length: int, cfg: AttackConfig,
                             lm=None, lexicon: TagLexicon | None = None, patterns=None) -> Trigger:
    """Exhaustive maximisation of the objective over ``vocab_subset ** length``."""
    subset = np.unique(np.asarray(vocab_subset, dtype=np.int64))
    if np.isin(subset, [PAD_ID, UNK_ID]).any():
        raise ValueError("vocab_subset may not contain special ids")
    total = len(subset) ** length
    if total > BRUTE_FORCE_BUDGET:
        raise SearchBudgetError(f"{len(subset)}^{length} = {total} sequences exceeds {BRUTE_FORCE_BUDGET}")
    cfg = cfg.replace(trigger_len=length, patterns=tuple(patterns) if patterns is not None else None)
    score_fn = Scorer(ctx, cfg, lm)
    rows = np.array(list(itertools.product(subset, repeat=length)), dtype=np.int64).reshape(-1, length)
    if patterns is not None:
        lexicon = lexicon if lexicon is not None else TagLexicon.load()
        tags = {int(i): lexicon.tag_token(ctx.vocab.token(int(i))) for i in subset}
        keep = [matches_any([tags[int(i)] for i in row], patterns) for row in rows]
        rows = rows[np.array(keep, dtype=bool)]
        if len(rows) == 0:
            raise ValueError("no sequence in the subset satisfies the patterns")
    scores = score_fn(rows)
    best = _best_index(scores, rows)
    return _finish(ctx, rows[best], scores[best], "brute_force", cfg)


def attacked_accuracy(ctx: AttackContext, trigger: Trigger | Sequence[int], subset: DatasetSplit | None = None) -> float:
    """Accuracy on ``subset`` (default: the context batch) with the trigger attached."""
    ids = trigger.ids if isinstance(trigger, Trigger) else tuple(trigger)
    if subset is None:
        return ctx.accuracy(ids)
    return evaluate_accuracy(ctx.params, subset, ctx.vocab, ids, ctx.placement)


def run_attack(method: str, ctx: AttackContext, cfg: AttackConfig, lm=None, lexicon=None,
               tokens: Sequence[str] | None = None) -> Trigger:
    """Dispatch by method name (``random``, ``nn``, ``hardcoded``, ``topfreq``, ``uat``, ``sensible``)."""
    if method == "uat":
        return generate_trigger_uat(ctx, cfg, lm=lm)
    if method == "sensible":
        if lm is None:
            raise ValueError("the sensible attack needs a language model")
        return generate_trigger_sensible(ctx, lm, lexicon, cfg)
    if method == "random":
        return random_attack(ctx, cfg)
    if method == "nn":
        return nearest_neighbor_attack(ctx, cfg)
    if method in ("hardcoded", "topfreq"):
        if not tokens:
            raise ValueError(f"method {method!r} needs trigger tokens")
        return hardcoded_attack(ctx, tokens, cfg, method=method)
    raise ValueError(f"unknown attack method {method!r}; expected one of {METHODS}")


class TriggerAttack(BaseEstimator, TransformerMixin):
    """Learn a universal trigger against a fitted :class:`MeanEmbeddingClassifier`.

    ``fit`` takes documents of the source polarity; ``transform`` attaches the
    learned trigger; ``score`` is the attacked accuracy.
    """

    def __init__(self, classifier=None, method="uat", source="positive", config=None, lm=None,
                 lexicon=None, tokens=None):
        self.classifier = classifier
        self.method = method
        self.source = source
        self.config = config
        self.lm = lm
        self.lexicon = lexicon
        self.tokens = tokens

    def fit(self, X, y=None):
        check_is_fitted(self.classifier, "params_")
        cfg = self.config if self.config is not None else AttackConfig()
        source = Polarity.parse(self.source)
        docs = check_token_docs(X)
        examples = [Example(tuple(d), 1.0 if source is Polarity.POSITIVE else 0.0) for d in docs]
        self.context_ = AttackContext(self.classifier.params_, self.classifier.vocab_, examples, source,
                                      batch_size=cfg.batch_size, seed=cfg.seed, placement=cfg.placement)
        self.trigger_ = run_attack(self.method, self.context_, cfg, lm=self.lm, lexicon=self.lexicon,
                                   tokens=self.tokens)
        self.trigger_.attacked_accuracy = self.context_.accuracy(self.trigger_.ids)
        return self

    def transform(self, X):
        check_is_fitted(self, "trigger_")
        trig = list(self.trigger_.tokens)
        docs = check_token_docs(X)
        if self.context_.placement == "prepend":
            return [trig + d for d in docs]
        return [d + trig for d in docs]

    def score(self, X, y=None):
        source = Polarity.parse(self.source)
        pred = self.classifier.predict(self.transform(X))
        return float(np.mean(pred == source))
