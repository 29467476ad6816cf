"""Build the shipped universal-tagset lexicon from a Brill-format lexicon file.

The input is the Brill tagger lexicon (one ``word TAG`` pair per line, Penn
Treebank tags, most frequent tag first) as distributed with the Pattern
library (``pattern/text/en/en-lexicon.txt``, BSD licensed). Tokens are
lowercased; when several surface forms collapse onto the same lowercase
token the lowercase entry wins, otherwise the first one seen.

    python scripts/build_lexicon.py en-lexicon.txt src/sensible_triggers/resources/lexicon.tsv
"""
import sys

PENN_TO_UNIVERSAL = {
    "!": "PUNCT", "#": "PUNCT", "$": "PUNCT", "''": "PUNCT", "(": "PUNCT",
    ")": "PUNCT", ",": "PUNCT", "-LRB-": "PUNCT", "-RRB-": "PUNCT", ".": "PUNCT",
    ":": "PUNCT", "?": "PUNCT", "``": "PUNCT", '"': "PUNCT",
    "CC": "CONJ", "CD": "NUM", "DT": "DET", "EX": "DET", "FW": "X", "IN": "ADP",
    "JJ": "ADJ", "JJR": "ADJ", "JJRJR": "ADJ", "JJS": "ADJ", "LS": "X", "MD": "VERB",
    "NN": "NOUN", "NNP": "NOUN", "NNPS": "NOUN", "NNS": "NOUN", "NP": "NOUN",
    "PDT": "DET", "POS": "PRT", "PRP": "PRON", "PRP$": "PRON", "PRT": "PRT",
    "RB": "ADV", "RBR": "ADV", "RBS": "ADV", "RN": "X", "RP": "PRT", "SYM": "X",
    "TO": "PRT", "UH": "X", "VB": "VERB", "VBD": "VERB", "VBG": "VERB",
    "VBN": "VERB", "VBP": "VERB", "VBZ": "VERB", "VP": "VERB", "WDT": "DET",
    "WH": "X", "WP": "PRON", "WP$": "PRON", "WRB": "ADV",
}


def main(src, dst):
    entries = {}
    exact = set()
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(";;;") or not line.strip():
                continue
            word, penn = line.split()[:2]
            tag = PENN_TO_UNIVERSAL.get(penn, "X")
            low = word.lower()
            if word == low:
                entries[low] = tag
                exact.add(low)
            elif low not in entries:
                entries[low] = tag
    with open(dst, "w", encoding="utf-8") as out:
        for word in sorted(entries):
            if "\t" in word:
                continue
            out.write(f"{word}\t{entries[word]}\n")
    print(f"wrote {len(entries)} entries to {dst}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
