"""Mean-of-embeddings sentiment classifier with hand-written gradients.

The model is ``softmax(W2 . tanh(W1 . mean(E[ids]) + b1) + b2)`` over two
classes (column 0 negative, column 1 positive). Everything the attacks need
is exposed: per-position input-embedding gradients, and a batched path that
works from per-example embedding sums so a trigger can be swapped in without
re-encoding the batch.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import DatasetSplit, Polarity, Vocabulary
from .exceptions import NonFiniteLossError, UndefinedAccuracyError
from .validation import check_placement, check_token_docs, to_class_indices

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
CHECKPOINT_FORMAT = "sensible-triggers/classifier"
CHECKPOINT_VERSION = 1


@dataclass
class ClassifierParams:
    embedding: np.ndarray  # (V, d)
    hidden_w: np.ndarray  # (d, h)
    hidden_b: np.ndarray  # (h,)
    output_w: np.ndarray  # (h, 2)
    output_b: np.ndarray  # (2,)

    TENSORS = ("embedding", "hidden_w", "hidden_b", "output_w", "output_b")

    def __post_init__(self):
        V, d = self.embedding.shape
        if self.hidden_w.shape[0] != d or self.hidden_b.shape != (self.hidden_w.shape[1],):
            raise ValueError("hidden layer shape mismatch")
        if self.output_w.shape != (self.hidden_w.shape[1], 2) or self.output_b.shape != (2,):
            raise ValueError("output layer shape mismatch")

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def hidden(self) -> int:
        return self.hidden_w.shape[1]

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.TENSORS}

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(**{k: v.copy() for k, v in self.tensors().items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.tensors().values())


def init_params(vocab_size: int, dim: int, hidden: int, rng: np.random.Generator) -> ClassifierParams:
    """Uniform(-0.1, 0.1) initialisation of every tensor."""
    if vocab_size < 1 or dim < 1 or hidden < 1:
        raise ValueError("vocab_size, dim and hidden must be >= 1")

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    return ClassifierParams(u(vocab_size, dim), u(dim, hidden), u(hidden), u(hidden, 2), u(2))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# --- single example ----------------------------------------------------------

@dataclass
class ForwardTrace:
    ids: np.ndarray
    inputs: np.ndarray  # (n, d) embedding rows
    pooled: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


@dataclass
class Gradients:
    embedding: np.ndarray
    hidden_w: np.ndarray
    hidden_b: np.ndarray
    output_w: np.ndarray
    output_b: np.ndarray
    inputs: np.ndarray = field(default=None)  # (n, d) dL/d(input embedding) per position


def _check_ids(params: ClassifierParams, ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("forward needs a non-empty 1-d id sequence")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise ValueError("token id out of vocabulary range")
    return ids


def forward(params: ClassifierParams, ids) -> ForwardTrace:
    ids = _check_ids(params, ids)
    inputs = params.embedding[ids]
    pooled = inputs.mean(axis=0)
    hidden_pre = pooled @ params.hidden_w + params.hidden_b
    hidden = np.tanh(hidden_pre)
    logits = hidden @ params.output_w + params.output_b
    return ForwardTrace(ids, inputs, pooled, hidden_pre, hidden, logits, softmax(logits))


def loss(trace: ForwardTrace, target) -> float:
    """Cross-entropy of ``target`` (a polarity or class index)."""
    cls = _target_index(target)
    return float(-np.log(max(trace.probs[cls], PROB_FLOOR)))


def _target_index(target) -> int:
    if isinstance(target, Polarity):
        return target.class_index
    cls = int(target)
    if cls not in (0, 1):
        raise ValueError(f"class index must be 0 or 1, got {target!r}")
    return cls


def backward(params: ClassifierParams, trace: ForwardTrace, target) -> Gradients:
    cls = _target_index(target)
    dlogits = trace.probs.copy()
    dlogits[cls] -= 1.0
    d_out_w = np.outer(trace.hidden, dlogits)
    d_out_b = dlogits
    dhidden = params.output_w @ dlogits
    dpre = dhidden * (1.0 - trace.hidden ** 2)
    d_hid_w = np.outer(trace.pooled, dpre)
    d_hid_b = dpre
    dpooled = params.hidden_w @ dpre
    n = len(trace.ids)
    d_inputs = np.tile(dpooled / n, (n, 1))
    d_emb = np.zeros_like(params.embedding)
    np.add.at(d_emb, trace.ids, d_inputs)
    return Gradients(d_emb, d_hid_w, d_hid_b, d_out_w, d_out_b, d_inputs)


# --- batched path --------------------------------------------------------------

@dataclass
class EncodedBatch:
    """A ragged batch of id sequences stored flat."""

    flat: np.ndarray
    offsets: np.ndarray
    lengths: np.ndarray

    @classmethod
    def from_sequences(cls, seqs: Sequence[Sequence[int]]) -> "EncodedBatch":
        lengths = np.fromiter((len(s) for s in seqs), dtype=np.int64, count=len(seqs))
        if len(seqs) == 0:
            raise ValueError("empty batch")
        if (lengths == 0).any():
            raise ValueError("batch contains an empty sequence")
        flat = np.fromiter((i for s in seqs for i in s), dtype=np.int64, count=int(lengths.sum()))
        offsets = np.zeros(len(seqs), dtype=np.int64)
        np.cumsum(lengths[:-1], out=offsets[1:])
        return cls(flat, offsets, lengths)

    def __len__(self):
        return len(self.lengths)

    def take(self, idx) -> "EncodedBatch":
        idx = np.asarray(idx, dtype=np.int64)
        seqs = [self.flat[self.offsets[i]:self.offsets[i] + self.lengths[i]] for i in idx]
        return EncodedBatch.from_sequences(seqs)

    def sequences(self) -> list[np.ndarray]:
        return [self.flat[o:o + n] for o, n in zip(self.offsets, self.lengths)]

    def embedding_sums(self, embedding: np.ndarray) -> np.ndarray:
        return np.add.reduceat(embedding[self.flat], self.offsets, axis=0)


def head_probs(params: ClassifierParams, pooled: np.ndarray):
    """Hidden activations and class probabilities for pooled vectors of any leading shape."""
    hidden = np.tanh(pooled @ params.hidden_w + params.hidden_b)
    return hidden, softmax(hidden @ params.output_w + params.output_b)


def predict_proba_batch(params: ClassifierParams, batch: EncodedBatch) -> np.ndarray:
    pooled = batch.embedding_sums(params.embedding) / batch.lengths[:, None]
    return head_probs(params, pooled)[1]


def cross_entropy(probs: np.ndarray, targets) -> np.ndarray:
    """Per-row cross-entropy; ``probs`` may carry extra leading axes."""
    targets = np.asarray(targets)
    picked = np.take_along_axis(probs, np.broadcast_to(targets, probs.shape[:-1])[..., None], axis=-1)[..., 0]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def batch_loss_and_grads(params: ClassifierParams, batch: EncodedBatch, targets: np.ndarray, l2: float = 0.0):
    """Mean cross-entropy (+ L2) over a batch and dense gradients of every tensor."""
    B = len(batch)
    sums = batch.embedding_sums(params.embedding)
    pooled = sums / batch.lengths[:, None]
    hidden, probs = head_probs(params, pooled)
    value = float(cross_entropy(probs, targets).mean())
    dlogits = probs.copy()
    dlogits[np.arange(B), targets] -= 1.0
    dlogits /= B
    d_out_w = hidden.T @ dlogits
    d_out_b = dlogits.sum(axis=0)
    dpre = (dlogits @ params.output_w.T) * (1.0 - hidden ** 2)
    d_hid_w = pooled.T @ dpre
    d_hid_b = dpre.sum(axis=0)
    dpooled = dpre @ params.hidden_w.T
    per_token = np.repeat(dpooled / batch.lengths[:, None], batch.lengths, axis=0)
    d_emb = np.zeros_like(params.embedding)
    np.add.at(d_emb, batch.flat, per_token)
    grads = Gradients(d_emb, d_hid_w, d_hid_b, d_out_w, d_out_b)
    if l2:
        for name in ClassifierParams.TENSORS:
            w = getattr(params, name)
            value += 0.5 * l2 * float(np.sum(w * w))
            setattr(grads, name, getattr(grads, name) + l2 * w)
    return value, grads


# --- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    l2: float = 0.0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if not self.learning_rate >= 0 or not np.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be finite and non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.l2 >= 0:
            raise ValueError("l2 must be non-negative")


def encode_split(split: DatasetSplit | Sequence, vocab: Vocabulary):
    """Encode a binarized split into ``(EncodedBatch, class indices)``."""
    examples = list(split)
    if any(ex.polarity is Polarity.NEUTRAL for ex in examples):
        raise ValueError("split contains neutral examples; call .binary() first")
    batch = EncodedBatch.from_sequences([vocab.encode(ex.tokens) for ex in examples])
    targets = np.array([ex.polarity.class_index for ex in examples], dtype=np.int64)
    return batch, targets


class _Adam:
    def __init__(self, params: ClassifierParams, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {n: np.zeros_like(getattr(params, n)) for n in ClassifierParams.TENSORS}
        self.v = {n: np.zeros_like(getattr(params, n)) for n in ClassifierParams.TENSORS}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for n in ClassifierParams.TENSORS:
            g = getattr(grads, n)
            m, v = self.m[n], self.v[n]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            getattr(params, n)[...] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, params, lr):
        self.lr = lr

    def step(self, params, grads):
        for n in ClassifierParams.TENSORS:
            getattr(params, n)[...] -= self.lr * getattr(grads, n)


def train_encoded(params: ClassifierParams, batch: EncodedBatch, targets, cfg: TrainConfig):
    """Mini-batch training on pre-encoded data. Returns new params and per-epoch mean loss."""
    if len(batch) == 0:
        raise ValueError("cannot train on an empty split")
    targets = np.asarray(targets, dtype=np.int64)
    params = params.copy()
    rng = np.random.default_rng(cfg.seed)
    seqs = batch.sequences()
    history = []
    opt = (_Adam if cfg.optimizer == "adam" else _SGD)(params, cfg.learning_rate)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(seqs))
        total, seen = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            mb = EncodedBatch.from_sequences([seqs[i] for i in idx])
            value, grads = batch_loss_and_grads(params, mb, targets[idx], cfg.l2)
            if not np.isfinite(value):
                raise NonFiniteLossError(
                    f"non-finite loss {value} at epoch {epoch}, batch starting {start} "
                    f"(lr={cfg.learning_rate}, l2={cfg.l2}, max|E|={np.abs(params.embedding).max():.3g})"
                )
            if cfg.learning_rate:
                opt.step(params, grads)
            total += value * len(idx)
            seen += len(idx)
        history.append(total / seen)
        logger.debug("epoch %d loss %.5f", epoch, history[-1])
    return params, history


def train(params: ClassifierParams, split: DatasetSplit, cfg: TrainConfig, vocab: Vocabulary):
    batch, targets = encode_split(split, vocab)
    return train_encoded(params, batch, targets, cfg)


# --- evaluation --------------------------------------------------------------

def with_trigger(batch: EncodedBatch, trigger_ids: Sequence[int], placement: str = "prepend") -> EncodedBatch:
    placement = check_placement(placement)
    trig = [int(i) for i in trigger_ids]
    if not trig:
        return batch
    if placement == "prepend":
        return EncodedBatch.from_sequences([trig + list(s) for s in batch.sequences()])
    return EncodedBatch.from_sequences([list(s) + trig for s in batch.sequences()])


def accuracy_encoded(params: ClassifierParams, batch: EncodedBatch, targets) -> float:
    pred = predict_proba_batch(params, batch).argmax(axis=1)
    return float(np.mean(pred == np.asarray(targets)))


def evaluate_accuracy(params: ClassifierParams, subset: DatasetSplit, vocab: Vocabulary,
                      trigger: Sequence[int] | None = None, placement: str = "prepend") -> float:
    """TP / (TP + FN) over a single-polarity subset, optionally with a trigger attached."""
    examples = list(subset)
    if not examples:
        raise UndefinedAccuracyError("accuracy is undefined on an empty subset")
    polarities = {ex.polarity for ex in examples}
    if len(polarities) != 1:
        raise ValueError(f"subset must hold a single polarity, got {sorted(p.name for p in polarities)}")
    batch, targets = encode_split(examples, vocab)
    if trigger is not None:
        batch = with_trigger(batch, trigger, placement)
    pred = predict_proba_batch(params, batch).argmax(axis=1)
    tp = int(np.sum(pred == targets))
    fn = len(targets) - tp
    return tp / (tp + fn)


# --- checkpoints ---------------------------------------------------------------

def save_checkpoint(path, params: ClassifierParams, vocab: Vocabulary | None = None, **meta) -> None:
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "shapes": {k: list(v.shape) for k, v in params.tensors().items()},
        "vocab": vocab.to_list() if vocab is not None else None,
        "meta": meta,
    }
    arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in params.tensors().items()}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)


def load_checkpoint(path):
    """Returns ``(params, vocab_or_None, meta)``."""
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a classifier checkpoint")
        if header["version"] > CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint version {header['version']} is newer than supported")
        params = ClassifierParams(**{k: data[k].copy() for k in ClassifierParams.TENSORS})
    vocab = Vocabulary.from_tokens(header["vocab"][2:]) if header.get("vocab") else None
    return params, vocab, header.get("meta", {})


# --- estimator -----------------------------------------------------------------

class MeanEmbeddingClassifier(BaseEstimator, ClassifierMixin):
    """Sklearn-style wrapper around the functional model.

    ``X`` is a list of token lists; ``y`` holds polarities (or their names).
    Predictions are :class:`Polarity` values.
    """

    def __init__(self, embedding_dim=32, hidden_dim=32, learning_rate=0.005, epochs=10,
                 batch_size=32, l2=0.0, optimizer="adam", min_freq=1, vocabulary=None,
                 warm_start=False, random_state=0):
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.optimizer = optimizer
        self.min_freq = min_freq
        self.vocabulary = vocabulary
        self.warm_start = warm_start
        self.random_state = random_state

    def _train_config(self, epochs=None, seed_offset=0):
        return TrainConfig(self.learning_rate, epochs or self.epochs, self.batch_size,
                           int(self.random_state) + seed_offset, self.l2, self.optimizer)

    def fit(self, X, y):
        X = check_token_docs(X)
        targets = to_class_indices(y)
        if len(targets) != len(X):
            raise ValueError("X and y have different lengths")
        if not (self.warm_start and hasattr(self, "params_")):
            if self.vocabulary is not None:
                self.vocab_ = self.vocabulary
            else:
                self.vocab_ = Vocabulary(self.min_freq).fit(X)
            rng = np.random.default_rng(self.random_state)
            self.params_ = init_params(len(self.vocab_), self.embedding_dim, self.hidden_dim, rng)
            self.loss_history_ = []
            self.n_fits_ = 0
        batch = EncodedBatch.from_sequences(self.vocab_.transform(X))
        self.params_, hist = train_encoded(self.params_, batch, targets,
                                           self._train_config(seed_offset=getattr(self, "n_fits_", 0)))
        self.loss_history_ = list(self.loss_history_) + hist
        self.n_fits_ += 1
        self.classes_ = np.array([Polarity.NEGATIVE, Polarity.POSITIVE])
        return self

    @classmethod
    def from_params(cls, params: ClassifierParams, vocab: Vocabulary, **kwargs) -> "MeanEmbeddingClassifier":
        est = cls(embedding_dim=params.dim, hidden_dim=params.hidden, vocabulary=vocab, **kwargs)
        est.vocab_ = vocab
        est.params_ = params
        est.loss_history_ = []
        est.n_fits_ = 0
        est.classes_ = np.array([Polarity.NEGATIVE, Polarity.POSITIVE])
        return est

    def _encode(self, X):
        check_is_fitted(self, "params_")
        return EncodedBatch.from_sequences(self.vocab_.transform(check_token_docs(X)))

    def predict_proba(self, X):
        return predict_proba_batch(self.params_, self._encode(X))

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def score(self, X, y, sample_weight=None):
        pred = self.predict_proba(X).argmax(axis=1)
        return float(np.average(pred == to_class_indices(y), weights=sample_weight))

    def save(self, path, **meta):
        check_is_fitted(self, "params_")
        save_checkpoint(path, self.params_, self.vocab_, random_state=self.random_state, **meta)

    @classmethod
    def load(cls, path, **kwargs):
        params, vocab, meta = load_checkpoint(path)
        if vocab is None:
            raise ValueError(f"{path} carries no vocabulary")
        kwargs.setdefault("random_state", meta.get("random_state", 0))
        return cls.from_params(params, vocab, **kwargs)
