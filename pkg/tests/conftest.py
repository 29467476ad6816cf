import os
from pathlib import Path

import numpy as np
import pytest

from sensible_triggers.classifier import MeanEmbeddingClassifier
from sensible_triggers.corpus import DatasetSplit, Example
from sensible_triggers.langmodel import NGramLM
from sensible_triggers.postagger import TagLexicon
from sensible_triggers.synthetic import make_splits

ROOT = Path(__file__).resolve().parents[1]

TOY_POS_ADJ = ["good", "great", "charming"]
TOY_NEG_ADJ = ["bad", "dull", "awful"]
TOY_ADV = ["really", "truly", "painfully", "beautifully"]
TOY_NOUN = ["film", "plot", "gem", "mess", "story"]


def sst_dir():
    """Directory with the real SST TSVs, or None."""
    for cand in (os.environ.get("SENSIBLE_TRIGGERS_SST_DIR"), ROOT / "data"):
        if cand and all((Path(cand) / f"{n}.tsv").exists() for n in ("train", "dev", "test")):
            return Path(cand)
    return None


def toy_corpus(n=240, seed=0):
    """Small corpus over a 26-token vocabulary; sentiment carried by adjectives and a few nouns."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        positive = i % 2 == 0
        adj = TOY_POS_ADJ if positive else TOY_NEG_ADJ
        noun = rng.choice(["film", "plot", "story"])
        shape = rng.integers(4)
        if shape == 0:
            toks = ["the", noun, rng.choice(["is", "was"]), rng.choice(adj)]
        elif shape == 1:
            toks = ["a", rng.choice(adj), noun, "."]
        elif shape == 2:
            toks = ["it", rng.choice(["shines", "is"]) if positive else rng.choice(["fails", "was"]),
                    rng.choice(["really", "truly"]), rng.choice(adj)]
        else:
            toks = ["they", "was", "a", "gem" if positive else "mess", ",", "and", rng.choice(adj),
                    rng.choice(["beautifully", "painfully"])]
        out.append(Example(tuple(str(t) for t in toks), 0.9 if positive else 0.1))
    return DatasetSplit("train", out)


@pytest.fixture(scope="session")
def toy_split():
    return toy_corpus()


@pytest.fixture(scope="session")
def toy_model(toy_split):
    clf = MeanEmbeddingClassifier(embedding_dim=8, hidden_dim=8, epochs=30, learning_rate=0.01, random_state=0)
    return clf.fit(toy_split.tokens, toy_split.polarities)


@pytest.fixture(scope="session")
def toy_lm(toy_split):
    return NGramLM(order=3, k=0.1).fit(toy_split.tokens)


@pytest.fixture(scope="session")
def lexicon():
    return TagLexicon.load()


@pytest.fixture(scope="session")
def synth_splits():
    return make_splits(n_train=1200, n_dev=300, n_test=100, seed=0)


@pytest.fixture(scope="session")
def synth_model(synth_splits):
    tr = synth_splits["train"].binary()
    return MeanEmbeddingClassifier(random_state=0).fit(tr.tokens, tr.polarities)


@pytest.fixture(scope="session")
def synth_lm(synth_splits):
    return NGramLM(order=3, k=0.1).fit(synth_splits["train"].tokens)


# --- acceptance reporting -------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    n = mark.args[0]
    entry = _CRITERIA.setdefault(n, {"passed": True, "tests": [], "notes": []})
    ok = rep.outcome == "passed"
    entry["passed"] &= ok
    entry["tests"].append((item.name, rep.outcome, rep.duration))
    note = getattr(item, "criterion_note", None)
    if note:
        entry["notes"].append(note)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = "PASS" if entry["passed"] else "FAIL"
        secs = sum(d for _, _, d in entry["tests"])
        failed = [name for name, outcome, _ in entry["tests"] if outcome != "passed"]
        tail = f" (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n}: {status} [{len(entry['tests'])} tests, {secs:.1f}s]{tail}")
        for note in entry["notes"]:
            tr.write_line(f"    {note}")
