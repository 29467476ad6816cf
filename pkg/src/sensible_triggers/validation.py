"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .corpus import Example, Polarity

PLACEMENTS = ("prepend", "append")


def check_token_docs(X) -> list[list[str]]:
    """Accept token lists, whitespace strings or :class:`Example` objects."""
    if isinstance(X, str):
        raise TypeError("expected a collection of documents, got a single string")
    docs = []
    for i, doc in enumerate(X):
        if isinstance(doc, Example):
            docs.append(list(doc.tokens))
        elif isinstance(doc, str):
            docs.append(doc.lower().split())
        else:
            docs.append([str(t) for t in doc])
        if not docs[-1]:
            raise ValueError(f"document {i} is empty")
    return docs


def to_class_indices(y) -> np.ndarray:
    """Map polarities (values, names or enum members) onto classifier columns 0/1."""
    out = []
    for v in y:
        if isinstance(v, (Polarity, str)):
            out.append(Polarity.parse(v).class_index)
        else:
            out.append(Polarity(int(v)).class_index)
    return np.asarray(out, dtype=np.int64)


def check_placement(placement) -> str:
    value = str(getattr(placement, "value", placement)).lower()
    if value not in PLACEMENTS:
        raise ValueError(f"placement must be one of {PLACEMENTS}, got {placement!r}")
    return value


def check_probability(value, name) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
