"""Additive-k n-gram language model with count-weighted interpolation.

For an order-``m`` context ``h`` with continuation counts ``c(h, .)``::

    P(w | h) = (c(h, w) + k * |E| * P_lower(w | h')) / (c(h) + k * |E|)

where ``E`` is the event set (vocabulary, UNK and EOS) and ``h'`` drops the
oldest token of ``h``. The unigram level backs off to the uniform
distribution, which makes it plain add-k. Interpolation weight on the
higher order is ``c(h) / (c(h) + k|E|)``, proportional to how often the
context was seen. With ``k = 0`` this is the maximum-likelihood estimate,
falling back to the lower order only for unseen contexts.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import UNK_TOKEN, DatasetSplit
from .exceptions import EmptyDatasetError

BOS = "<s>"
EOS = "</s>"
LM_FORMAT = "sensible-triggers/ngram-lm"
LM_VERSION = 1


class NGramLM(BaseEstimator):
    def __init__(self, order: int = 3, k: float = 0.1, vocabulary=None):
        self.order = order
        self.k = k
        self.vocabulary = vocabulary

    def _check_hyper(self):
        if not 1 <= int(self.order) <= 3:
            raise ValueError("order must be in [1, 3]")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    def fit(self, X, y=None):
        """Count n-grams over token sequences ``X``."""
        self._check_hyper()
        docs = [list(doc) for doc in X]
        if not docs or not any(docs):
            raise EmptyDatasetError("cannot train a language model on an empty corpus")
        if self.vocabulary is not None:
            vocab = set(self.vocabulary)
        else:
            vocab = {t for doc in docs for t in doc}
        vocab.discard(UNK_TOKEN)
        vocab.discard(EOS)
        vocab.discard(BOS)
        self.vocab_ = frozenset(vocab)
        n = int(self.order)
        counts = [defaultdict(Counter) for _ in range(n)]
        for doc in docs:
            seq = [BOS] * (n - 1) + [self._map(t) for t in doc] + [EOS]
            for i in range(n - 1, len(seq)):
                w = seq[i]
                for m in range(n):
                    counts[m][tuple(seq[i - m:i])][w] += 1
        self._set_counts(counts)
        return self

    def _set_counts(self, counts):
        self.counts_ = [{h: dict(c) for h, c in level.items()} for level in counts]
        self.context_totals_ = [{h: sum(c.values()) for h, c in level.items()} for level in self.counts_]
        self.events_ = sorted(self.vocab_) + [UNK_TOKEN, EOS]
        self._cache = {}

    def _map(self, token: str) -> str:
        return token if token in self.vocab_ else UNK_TOKEN

    @property
    def n_events(self) -> int:
        return len(self.events_)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """Smoothed ``P(word | context)``; only the last ``order - 1`` context tokens matter."""
        check_is_fitted(self, "counts_")
        n = int(self.order)
        ctx = [t if t == BOS else self._map(t) for t in context]
        ctx = tuple(([BOS] * (n - 1) + ctx)[len(ctx):]) if n > 1 else ()
        w = word if word == EOS else self._map(word)
        return self._prob(w, ctx)

    def _prob(self, w: str, ctx: tuple) -> float:
        key = (w, ctx)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        k_mass = self.k * len(self.events_)
        m = len(ctx)
        if m == 0:
            total = self.context_totals_[0].get((), 0)
            c = self.counts_[0].get((), {}).get(w, 0)
            p = (c + self.k) / (total + k_mass) if total + k_mass > 0 else 0.0
        else:
            lower = self._prob(w, ctx[1:])
            total = self.context_totals_[m].get(ctx, 0)
            if total == 0:
                p = lower
            else:
                c = self.counts_[m][ctx].get(w, 0)
                p = (c + k_mass * lower) / (total + k_mass)
        if len(self._cache) < 2_000_000:
            self._cache[key] = p
        return p

    def distribution(self, context: Sequence[str] = ()) -> dict[str, float]:
        return {w: self.prob(w, context) for w in self.events_}

    def conditional_log_probs(self, tokens: Sequence[str]) -> list[float]:
        """Natural-log probability of each token and of the closing EOS."""
        check_is_fitted(self, "counts_")
        if len(tokens) == 0:
            raise ValueError("cannot score an empty sequence")
        n = int(self.order)
        seq = [BOS] * (n - 1) + [self._map(t) for t in tokens] + [EOS]
        out = []
        for i in range(n - 1, len(seq)):
            p = self._prob(seq[i], tuple(seq[i - n + 1:i]) if n > 1 else ())
            out.append(math.log(p) if p > 0 else -math.inf)
        return out

    def log_prob(self, tokens: Sequence[str]) -> float:
        total = 0.0
        for lp in self.conditional_log_probs(tokens):
            total += lp
        return total

    def perplexity(self, tokens: Sequence[str]) -> float:
        """``exp(-log_prob / (len(tokens) + 1))``; the EOS event counts."""
        lp = self.log_prob(tokens)
        return math.exp(-lp / (len(tokens) + 1))

    def score(self, X, y=None) -> float:
        """Total log-likelihood of the documents in ``X``."""
        return float(sum(self.log_prob(doc) for doc in X))

    def start(self) -> "IncrementalScore":
        check_is_fitted(self, "counts_")
        return IncrementalScore(self, (BOS,) * (int(self.order) - 1), 0.0, 0)

    # -- serialization --
    def to_dict(self) -> dict:
        check_is_fitted(self, "counts_")
        levels = []
        for level in self.counts_:
            rows = [[list(h), {w: c for w, c in sorted(cont.items())}] for h, cont in level.items()]
            rows.sort(key=lambda r: r[0])
            levels.append(rows)
        return {
            "format": LM_FORMAT,
            "version": LM_VERSION,
            "order": int(self.order),
            "k": float(self.k),
            "vocab": sorted(self.vocab_),
            "counts": levels,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: dict) -> "NGramLM":
        if data.get("format") != LM_FORMAT:
            raise ValueError("not a language-model checkpoint")
        if data["version"] > LM_VERSION:
            raise ValueError(f"language-model version {data['version']} is newer than supported")
        lm = cls(order=data["order"], k=data["k"])
        lm._check_hyper()
        lm.vocab_ = frozenset(data["vocab"])
        counts = [{tuple(h): dict(cont) for h, cont in level} for level in data["counts"]]
        lm._set_counts(counts)
        return lm

    @classmethod
    def load(cls, path) -> "NGramLM":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class IncrementalScore:
    """Left-to-right scorer; ``finish()`` adds the EOS event."""

    __slots__ = ("lm", "context", "log_prob", "length")

    def __init__(self, lm: NGramLM, context: tuple, log_prob: float, length: int):
        self.lm = lm
        self.context = context
        self.log_prob = log_prob
        self.length = length

    def extend(self, token: str) -> "IncrementalScore":
        w = self.lm._map(token)
        p = self.lm._prob(w, self.context)
        lp = math.log(p) if p > 0 else -math.inf
        ctx = (self.context + (w,))[1:] if self.context else ()
        return IncrementalScore(self.lm, ctx, self.log_prob + lp, self.length + 1)

    def finish(self) -> float:
        p = self.lm._prob(EOS, self.context)
        return self.log_prob + (math.log(p) if p > 0 else -math.inf)


def train_lm(corpus: Iterable[DatasetSplit], order: int = 3, k: float = 0.1, vocabulary=None) -> NGramLM:
    docs = [list(ex.tokens) for split in corpus for ex in split]
    return NGramLM(order=order, k=k, vocabulary=vocabulary).fit(docs)


def log_prob(lm: NGramLM, tokens: Sequence[str]) -> float:
    return lm.log_prob(tokens)


def perplexity(lm: NGramLM, tokens: Sequence[str]) -> float:
    return lm.perplexity(tokens)
