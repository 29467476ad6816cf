"""SST-format sentiment data: loading, binarization, vocabulary and counts."""
from __future__ import annotations

import csv
import enum
import warnings
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DatasetFormatError, EmptyDatasetError

NEGATIVE_MAX = 0.4
POSITIVE_MIN = 0.6

PAD_TOKEN = "@@PADDING@@"
UNK_TOKEN = "@@UNKNOWN@@"
PAD_ID = 0
UNK_ID = 1

SPLIT_NAMES = ("train", "dev", "test")


class Polarity(enum.IntEnum):
    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @property
    def class_index(self) -> int:
        """Column of this polarity in the classifier's 2-way output."""
        if self is Polarity.NEUTRAL:
            raise ValueError("neutral has no class index in the binary task")
        return 0 if self is Polarity.NEGATIVE else 1

    @classmethod
    def from_class_index(cls, index: int) -> "Polarity":
        return cls.POSITIVE if int(index) == 1 else cls.NEGATIVE

    @classmethod
    def parse(cls, value) -> "Polarity":
        if isinstance(value, Polarity):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown polarity {value!r}") from None
        return cls(int(value))

    @property
    def opposite(self) -> "Polarity":
        if self is Polarity.NEUTRAL:
            raise ValueError("neutral has no opposite")
        return Polarity.POSITIVE if self is Polarity.NEGATIVE else Polarity.NEGATIVE


def binarize(label_prob: float) -> Polarity:
    """Map an SST sentiment probability onto a polarity bucket.

    ``[0, 0.4]`` is negative, ``(0.6, 1]`` positive and the middle band neutral.
    """
    p = float(label_prob)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"label probability {label_prob!r} outside [0, 1]")
    if p <= NEGATIVE_MAX:
        return Polarity.NEGATIVE
    if p > POSITIVE_MIN:
        return Polarity.POSITIVE
    return Polarity.NEUTRAL


def tokenize(text: str) -> list[str]:
    return text.lower().split()


@dataclass(frozen=True)
class Example:
    tokens: tuple[str, ...]
    label_prob: float
    polarity: Polarity = field(init=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if not tokens:
            raise ValueError("an example needs at least one token")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "polarity", binarize(self.label_prob))

    @classmethod
    def from_text(cls, text: str, label_prob: float) -> "Example":
        return cls(tuple(tokenize(text)), float(label_prob))

    def with_prefix(self, prefix: Sequence[str]) -> "Example":
        return Example(tuple(prefix) + self.tokens, self.label_prob)


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    examples: tuple[Example, ...]

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, idx):
        return self.examples[idx]

    @property
    def tokens(self) -> list[list[str]]:
        return [list(ex.tokens) for ex in self.examples]

    @property
    def polarities(self) -> list[Polarity]:
        return [ex.polarity for ex in self.examples]

    def binary(self) -> "DatasetSplit":
        """Drop neutral examples."""
        return DatasetSplit(self.name, [ex for ex in self.examples if ex.polarity is not Polarity.NEUTRAL])


def load_tsv(path, name: str | None = None) -> DatasetSplit:
    """Read ``<label prob>\\t<tokens>`` lines into a split, in file order."""
    path = Path(path)
    if name is None:
        name = path.stem
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise DatasetFormatError("expected '<label>\\t<text>'", path, lineno)
            try:
                prob = float(label)
            except ValueError:
                raise DatasetFormatError(f"bad label {label!r}", path, lineno) from None
            tokens = tokenize(text)
            if not tokens:
                raise DatasetFormatError("no tokens", path, lineno)
            try:
                examples.append(Example(tuple(tokens), prob))
            except ValueError as exc:
                raise DatasetFormatError(str(exc), path, lineno) from None
    if not examples:
        raise EmptyDatasetError(f"{path} contains no examples")
    return DatasetSplit(name, examples)


def write_tsv(split: DatasetSplit | Iterable[Example], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in split:
            fh.write(f"{ex.label_prob:g}\t{' '.join(ex.tokens)}\n")


def load_splits(data_dir, names: Sequence[str] = SPLIT_NAMES) -> dict[str, DatasetSplit]:
    data_dir = Path(data_dir)
    return {n: load_tsv(data_dir / f"{n}.tsv", name=n) for n in names}


def subset_by_polarity(split: DatasetSplit, polarity) -> DatasetSplit:
    polarity = Polarity.parse(polarity)
    return DatasetSplit(split.name, [ex for ex in split.examples if ex.polarity is polarity])


class Vocabulary(BaseEstimator, TransformerMixin):
    """Token/id mapping with fixed ``PAD=0`` and ``UNK=1``.

    Ids are assigned by descending corpus frequency, ties broken
    lexicographically, so fitting is deterministic.
    """

    def __init__(self, min_freq: int = 1):
        self.min_freq = min_freq

    def fit(self, X, y=None):
        if int(self.min_freq) < 1:
            raise ValueError("min_freq must be >= 1")
        counts = Counter()
        n_docs = 0
        for doc in X:
            counts.update(doc)
            n_docs += 1
        if n_docs == 0 or not counts:
            raise EmptyDatasetError("cannot build a vocabulary from an empty corpus")
        counts.pop(PAD_TOKEN, None)
        counts.pop(UNK_TOKEN, None)
        kept = sorted((t for t, c in counts.items() if c >= self.min_freq), key=lambda t: (-counts[t], t))
        self.itos_ = [PAD_TOKEN, UNK_TOKEN] + kept
        self.stoi_ = {t: i for i, t in enumerate(self.itos_)}
        self.counts_ = dict(counts)
        return self

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Vocabulary":
        """Build with an explicit id order (after the two specials)."""
        vocab = cls(min_freq=1)
        body = [t for t in tokens if t not in (PAD_TOKEN, UNK_TOKEN)]
        if len(set(body)) != len(body):
            raise ValueError("duplicate tokens")
        vocab.itos_ = [PAD_TOKEN, UNK_TOKEN] + list(body)
        vocab.stoi_ = {t: i for i, t in enumerate(vocab.itos_)}
        vocab.counts_ = {}
        return vocab

    def __len__(self):
        return len(self.itos_)

    def __contains__(self, token):
        return token in self.stoi_

    def id(self, token: str) -> int:
        return self.stoi_.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.itos_[idx]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        if len(tokens) == 0:
            warnings.warn("encoding an empty token sequence", stacklevel=2)
            return []
        return [self.stoi_.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.itos_[i] for i in ids]

    def transform(self, X):
        return [self.encode(doc) for doc in X]

    def inverse_transform(self, X):
        return [self.decode(ids) for ids in X]

    @property
    def special_ids(self) -> tuple[int, int]:
        return (PAD_ID, UNK_ID)

    def to_list(self) -> list[str]:
        return list(self.itos_)


def build_vocab(splits: Sequence[DatasetSplit], min_freq: int = 1) -> Vocabulary:
    if not splits:
        raise EmptyDatasetError("no splits given")
    docs = [ex.tokens for split in splits for ex in split]
    return Vocabulary(min_freq=min_freq).fit(docs)


def encode(example: Example | Sequence[str], vocab: Vocabulary) -> list[int]:
    tokens = example.tokens if isinstance(example, Example) else example
    return vocab.encode(tokens)


def load_stopwords(path=None) -> frozenset[str]:
    if path is None:
        text = resources.files(__package__).joinpath("resources/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def token_counts(split: DatasetSplit, polarity=None) -> Counter:
    counts = Counter()
    for ex in split:
        if polarity is None or ex.polarity is Polarity.parse(polarity):
            counts.update(ex.tokens)
    return counts


def top_frequent_words(split: DatasetSplit, polarity, k: int, stopwords: Iterable[str] = ()) -> list[str]:
    """The ``k`` most frequent non-stopword tokens among ``polarity`` examples.

    Tokens with no alphabetic character (punctuation, numbers) never count.
    Ties go to the lexicographically smaller token.
    """
    if k < 1:
        raise ValueError("k must be positive")
    stop = set(stopwords)
    counts = token_counts(split, polarity)
    ranked = sorted(
        (t for t in counts if t not in stop and any(ch.isalpha() for ch in t)),
        key=lambda t: (-counts[t], t),
    )
    if len(ranked) < k:
        warnings.warn(f"only {len(ranked)} distinct tokens available, fewer than k={k}", stacklevel=2)
    return ranked[:k]


def frequency_table(split: DatasetSplit, polarity, stopwords: Iterable[str] = ()) -> list[tuple[str, int]]:
    stop = set(stopwords)
    counts = token_counts(split, polarity)
    rows = [(t, c) for t, c in counts.items() if t not in stop and any(ch.isalpha() for ch in t)]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


# --- conversion from the raw SST distribution -------------------------------

_SST_SPLIT_CODES = {"1": "train", "2": "test", "3": "dev"}
_PTB_ESCAPES = {"-LRB-": "(", "-RRB-": ")"}


def _fix_mojibake(text: str) -> str:
    try:
        return text.encode("latin-1").decode("utf-8")
    except (UnicodeEncodeError, UnicodeDecodeError):
        return text


def convert_sst_raw(raw_dir, out_dir) -> dict[str, int]:
    """Write ``{train,dev,test}.tsv`` from an unpacked ``stanfordSentimentTreebank``.

    Needs ``datasetSentences.txt``, ``datasetSplit.txt``, ``dictionary.txt``
    and ``sentiment_labels.txt``. Sentence labels are looked up through the
    phrase dictionary; sentences are written in sentence-index order.
    """
    raw_dir, out_dir = Path(raw_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    phrase_ids = {}
    with open(raw_dir / "dictionary.txt", encoding="utf-8") as fh:
        for line in fh:
            phrase, _, pid = line.rstrip("\n").rpartition("|")
            phrase_ids[phrase] = pid
    labels = {}
    with open(raw_dir / "sentiment_labels.txt", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            pid, _, value = line.strip().partition("|")
            labels[pid] = value
    splits = {}
    with open(raw_dir / "datasetSplit.txt", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for idx, code in reader:
            splits[idx] = _SST_SPLIT_CODES[code]

    rows = {name: [] for name in SPLIT_NAMES}
    with open(raw_dir / "datasetSentences.txt", encoding="utf-8") as fh:
        next(fh)
        for lineno, line in enumerate(fh, start=2):
            idx, _, sentence = line.rstrip("\n").partition("\t")
            text = _fix_mojibake(sentence)
            for esc, ch in _PTB_ESCAPES.items():
                text = text.replace(esc, ch)
            pid = phrase_ids.get(text, phrase_ids.get(sentence))
            if pid is None:
                raise DatasetFormatError("sentence missing from dictionary.txt", raw_dir / "datasetSentences.txt", lineno)
            rows[splits[idx]].append((labels[pid], sentence))

    counts = {}
    for name, items in rows.items():
        with open(out_dir / f"{name}.tsv", "w", encoding="utf-8") as out:
            for value, sentence in items:
                out.write(f"{value}\t{sentence.lower()}\n")
        counts[name] = len(items)
    return counts
