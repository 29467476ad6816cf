"""Lexicon + suffix-rule tagger over the 12-tag universal tagset, and the
length-3 pattern filter used to keep triggers grammatical."""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

UNIVERSAL_TAGS = frozenset(
    ["NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "X", "PUNCT"]
)
DEFAULT_TAG = "NOUN"

# Longest match wins; kept sorted by decreasing suffix length at load time.
DEFAULT_SUFFIX_RULES = (
    ("ically", "ADV"),
    ("ness", "NOUN"),
    ("ment", "NOUN"),
    ("tion", "NOUN"),
    ("sion", "NOUN"),
    ("ship", "NOUN"),
    ("hood", "NOUN"),
    ("ity", "NOUN"),
    ("ism", "NOUN"),
    ("ist", "NOUN"),
    ("ous", "ADJ"),
    ("ful", "ADJ"),
    ("less", "ADJ"),
    ("able", "ADJ"),
    ("ible", "ADJ"),
    ("ive", "ADJ"),
    ("ish", "ADJ"),
    ("ic", "ADJ"),
    ("ize", "VERB"),
    ("ise", "VERB"),
    ("ify", "VERB"),
    ("ate", "VERB"),
    ("ing", "VERB"),
    ("ed", "VERB"),
    ("ly", "ADV"),
)


def _resource_text(name: str) -> str:
    return resources.files(__package__).joinpath("resources", name).read_text(encoding="utf-8")


class TagLexicon:
    def __init__(self, lexicon: Mapping[str, str] | None = None,
                 suffix_rules: Iterable[tuple[str, str]] = DEFAULT_SUFFIX_RULES,
                 default_tag: str = DEFAULT_TAG):
        self.lexicon = {k.lower(): v for k, v in (lexicon or {}).items()}
        bad = {t for t in self.lexicon.values() if t not in UNIVERSAL_TAGS}
        rules = sorted(((s.lower(), t) for s, t in suffix_rules), key=lambda r: (-len(r[0]), r[0]))
        bad |= {t for _, t in rules if t not in UNIVERSAL_TAGS}
        if default_tag not in UNIVERSAL_TAGS:
            bad.add(default_tag)
        if bad:
            raise ValueError(f"tags outside the universal tagset: {sorted(bad)}")
        self.suffix_rules = tuple(rules)
        self.default_tag = default_tag

    @classmethod
    def load(cls, path=None, **kwargs) -> "TagLexicon":
        """Read ``token<TAB>TAG`` lines; the shipped lexicon when ``path`` is None."""
        text = _resource_text("lexicon.tsv") if path is None else Path(path).read_text(encoding="utf-8")
        lex = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            token, sep, tag = line.partition("\t")
            if not sep:
                raise ValueError(f"lexicon line {lineno}: expected token<TAB>TAG")
            lex[token] = tag.strip()
        return cls(lex, **kwargs)

    def tag_token(self, token: str) -> str:
        low = token.lower()
        hit = self.lexicon.get(low)
        if hit is not None:
            return hit
        for suffix, tag in self.suffix_rules:
            if len(low) > len(suffix) and low.endswith(suffix):
                return tag
        return self.default_tag

    def __contains__(self, token):
        return token.lower() in self.lexicon


def tag(lex: TagLexicon, tokens: Sequence[str]) -> list[str]:
    return [lex.tag_token(t) for t in tokens]


def load_patterns(path=None) -> tuple[tuple[str, ...], ...]:
    """One comma-separated tag tuple per line; the shipped length-3 set by default."""
    text = _resource_text("patterns.txt") if path is None else Path(path).read_text(encoding="utf-8")
    patterns = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        pat = tuple(t.strip().upper() for t in line.split(","))
        unknown = [t for t in pat if t not in UNIVERSAL_TAGS]
        if unknown:
            raise ValueError(f"unknown tags {unknown} in pattern {line!r}")
        patterns.append(pat)
    return tuple(patterns)


def matches_any(tags: Sequence[str], patterns) -> bool:
    tags = tuple(tags)
    for pat in patterns:
        if len(pat) != len(tags):
            raise ValueError(f"tag sequence of length {len(tags)} against pattern of length {len(pat)}")
        if tuple(pat) == tags:
            return True
    return False


def prefix_matches(tags: Sequence[str], patterns) -> bool:
    """True if ``tags`` can still be completed into some pattern."""
    tags = tuple(tags)
    return any(len(tags) <= len(p) and tuple(p[:len(tags)]) == tags for p in patterns)


class POSPatternFilter(BaseEstimator, TransformerMixin):
    """Keeps the token sequences whose tags match one of ``patterns``."""

    def __init__(self, lexicon: TagLexicon | None = None, patterns=None):
        self.lexicon = lexicon
        self.patterns = patterns

    def fit(self, X=None, y=None):
        self.lexicon_ = self.lexicon if self.lexicon is not None else TagLexicon.load()
        self.patterns_ = tuple(self.patterns) if self.patterns is not None else load_patterns()
        return self

    def mask(self, X) -> list[bool]:
        return [matches_any(tag(self.lexicon_, doc), self.patterns_) for doc in X]

    def transform(self, X):
        return [doc for doc, ok in zip(X, self.mask(X)) if ok]
