"""Seeded generator of SST-format movie-review sentences.

Used for tests and smoke runs when the real treebank is not on disk. The
sentences are template-built; polarity comes from a latent score that also
steers which sentiment words appear, with contrastive clauses and negations
mixed in so a bag-of-words model cannot reach perfect accuracy.
"""
from __future__ import annotations

import numpy as np

from .corpus import DatasetSplit, Example

POS_ADJ = """good great wonderful funny charming delightful brilliant beautiful moving
touching clever witty engaging entertaining enjoyable fresh smart powerful gorgeous
heartfelt memorable remarkable stunning superb terrific thoughtful vivid warm wise
inventive intelligent lovely magnificent poignant riveting satisfying sharp solid
sweet tender thrilling compelling captivating hilarious masterful affecting elegant
exhilarating gripping haunting luminous playful rich sincere sublime unforgettable""".split()
NEG_ADJ = """bad awful boring dull terrible stupid tedious lame pointless predictable
bland clumsy dreary flat forgettable hollow idiotic lifeless mediocre messy painful
pretentious shallow silly sloppy tired ugly unfunny weak worthless annoying
disappointing incoherent inept lousy miserable plodding stale tiresome trite vapid
wooden wretched awkward cheap confused dumb empty formulaic irritating listless
murky numbing obnoxious overlong""".split()
POS_ADV = """beautifully wonderfully brilliantly remarkably gracefully thoughtfully
vividly superbly warmly wisely cleverly sharply richly tenderly""".split()
NEG_ADV = """painfully badly awkwardly clumsily terribly dully sloppily miserably
tediously lazily needlessly uselessly""".split()
POS_NOUN = """masterpiece delight triumph gem joy treat pleasure charm wit grace
beauty heart warmth achievement marvel""".split()
NEG_NOUN = """mess disaster bore failure waste garbage chore dud misfire letdown
mistake embarrassment headache disappointment""".split()
POS_VERB = """delights charms dazzles moves impresses captivates entertains succeeds
shines soars""".split()
NEG_VERB = """fails bores drags sinks stumbles disappoints annoys falters collapses
sucks""".split()
INTENS = "very really quite so too rather extremely truly".split()
DOMAIN_NOUN = """story plot script cast director actor actress performance scene
scenes dialogue ending screenplay characters character camera soundtrack score
picture comedy drama thriller romance documentary sequel premise narrative
cinematography editing pacing humor tone setting production feature debut
material subject audience viewers filmmaker hero villain family life world time
way people kind moments minutes hour half role lead star stars effects style
genre year show series tale adaptation portrait journey""".split()
NEUTRAL_VERB = """takes makes gives shows tells follows offers brings turns finds
keeps comes goes feels looks seems tries plays becomes leaves""".split()
NAMES = """smith jones williams brown davis miller wilson moore taylor anderson
thomas jackson white harris martin thompson garcia martinez robinson clark lewis
lee walker hall allen young king wright scott green baker adams nelson hill""".split()
FILLER_NOUN = """house city street road window door table car train river island
summer winter night morning office school church party war island hospital
kitchen garden village forest mountain desert ocean boat letter phone picture
dog cat horse bird money job business police crime trial court prison teacher
student doctor lawyer soldier father mother brother sister son daughter wife
husband friend neighbor stranger boss king queen prince country history culture
music song dance game book novel poem painting photograph museum theater stage
audience crowd town valley bridge tower castle""".split()


def _sentiment_words(sign):
    if sign > 0:
        return POS_ADJ, POS_ADV, POS_NOUN, POS_VERB
    return NEG_ADJ, NEG_ADV, NEG_NOUN, NEG_VERB


class _Builder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def pick(self, words):
        return words[int(self.rng.integers(len(words)))]

    def filler(self):
        r = self.rng.random()
        if r < 0.3:
            return ["about", "a", self.pick(FILLER_NOUN), "and", "a", self.pick(FILLER_NOUN)]
        if r < 0.55:
            return ["with", self.pick(NAMES), "as", "the", self.pick(DOMAIN_NOUN)]
        if r < 0.8:
            return ["set", "in", "a", self.pick(FILLER_NOUN)]
        return ["that", self.pick(NEUTRAL_VERB), "the", self.pick(DOMAIN_NOUN), "of", "a", self.pick(FILLER_NOUN)]

    def clause(self, sign, negate=False):
        adj, adv, noun, verb = _sentiment_words(sign if not negate else -sign)
        r = self.rng.random()
        neg = ["not"] if negate else []
        if r < 0.3:
            mod = [self.pick(adv)] if self.rng.random() < 0.4 else ([self.pick(INTENS)] if self.rng.random() < 0.3 else [])
            return ["the", self.pick(DOMAIN_NOUN), "is"] + neg + mod + [self.pick(adj)]
        if r < 0.5:
            return ["a"] + neg + [self.pick(adj), self.pick(DOMAIN_NOUN)]
        if r < 0.65:
            return ["it", "'s"] + neg + ["a", self.pick(noun)]
        if r < 0.8:
            return ["the", self.pick(DOMAIN_NOUN)] + (["does", "n't"] if negate else []) + [self.pick(verb)]
        return [self.pick(adv), self.pick(adj)] if not negate else ["never", self.pick(adj)]


def generate_examples(n: int, rng: np.random.Generator) -> list[Example]:
    b = _Builder(rng)
    out = []
    for _ in range(n):
        # roughly SST-shaped: a mode near each pole plus a neutral bump
        u = rng.random()
        if u < 0.42:
            p = float(np.clip(rng.normal(0.22, 0.11), 0.0, 0.4))
        elif u < 0.84:
            p = float(np.clip(rng.normal(0.78, 0.11), 0.6001, 1.0))
        else:
            p = float(rng.uniform(0.4001, 0.6))
        lean = 0.5 + 0.5 * np.tanh(4.0 * (2 * p - 1))
        tokens = []
        n_clauses = int(rng.integers(1, 4))
        for c in range(n_clauses):
            sign = 1 if rng.random() < lean else -1
            negate = rng.random() < 0.12
            # negation keeps the clause's intended sign but uses the opposite lexicon
            part = b.clause(sign, negate=negate)
            if c and rng.random() < 0.5:
                tokens += [","] + (["but"] if rng.random() < 0.4 else ["and"])
            tokens += part
            if rng.random() < 0.5:
                tokens += b.filler()
        if rng.random() < 0.3:
            tokens = b.filler() + [","] + tokens
        tokens.append(".")
        out.append(Example(tuple(tokens), round(p, 5)))
    return out


def make_splits(n_train=2000, n_dev=400, n_test=400, seed=0) -> dict[str, DatasetSplit]:
    """Deterministic train/dev/test splits in SST format (neutral examples included)."""
    rng = np.random.default_rng(seed)
    return {
        "train": DatasetSplit("train", generate_examples(n_train, rng)),
        "dev": DatasetSplit("dev", generate_examples(n_dev, rng)),
        "test": DatasetSplit("test", generate_examples(n_test, rng)),
    }
