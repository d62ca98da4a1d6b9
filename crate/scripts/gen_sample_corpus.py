#!/usr/bin/env python3
"""Generate the bundled sample corpus: 10k pre-tokenized English-like sentences.

Sentences come from a small phrase grammar over word classes with Zipfian
word choice, so the corpus has clear distributional classes (determiners,
nouns, verbs, ...) and a long tail of rare words.

    python3 scripts/gen_sample_corpus.py > data/sample_corpus.txt
"""

import random
import sys

SEED = 20140601
N_SENTENCES = 10_000

DET = "the a this that every some another each".split()
ADJ = (
    "old new small large quiet young green red bright dark cold warm "
    "famous strange simple local tired happy careful ancient narrow wooden "
    "broken heavy silent gentle modern rural"
).split()
NOUN = (
    "man woman child dog cat house car city river book letter table garden "
    "teacher doctor student farmer king queen soldier bird horse tree road "
    "village market window door boat ship train station school church bridge "
    "lake mountain forest island story song paper report company bank court "
    "office committee government minister council price market share claim "
    "record plan result"
).split()
NAME = (
    "Steve Martin Mary John Paris London Anna Peter Berlin Rome Clara Tom "
    "Lisa Oslo Vienna Karl"
).split()
VERB = (
    "saw found made took built bought sold opened closed watched followed "
    "helped visited painted carried pushed pulled wrote read loved hated "
    "needed wanted kept left met called liked found laid staked established "
    "proved rejected moved reached crossed"
).split()
INTRANS = "slept arrived left waited laughed smiled fell stayed rested sang".split()
PREP = "in on near under behind with from into across beside".split()
ADV = "already quickly slowly never often finally suddenly quietly again".split()
PRON = "he she they we it".split()


def zipf(rng, words):
    weights = [1.0 / (i + 1) for i in range(len(words))]
    return rng.choices(words, weights)[0]


def noun_phrase(rng):
    if rng.random() < 0.15:
        return [zipf(rng, NAME)]
    np = [zipf(rng, DET)]
    if rng.random() < 0.4:
        np.append(zipf(rng, ADJ))
    np.append(zipf(rng, NOUN))
    return np


def sentence(rng):
    if rng.random() < 0.2:
        subj = [zipf(rng, PRON)]
    else:
        subj = noun_phrase(rng)
    words = subj
    if rng.random() < 0.25:
        words.append(zipf(rng, ADV))
    if rng.random() < 0.2:
        words.append(zipf(rng, INTRANS))
    else:
        words.append(zipf(rng, VERB))
        words.extend(noun_phrase(rng))
    if rng.random() < 0.4:
        words.append(zipf(rng, PREP))
        words.extend(noun_phrase(rng))
    words.append(".")
    return words


def main():
    rng = random.Random(SEED)
    # A handful of rare tokens so the min-count filter has something to absorb.
    rare = [f"w{i:03d}" for i in range(60)]
    out = sys.stdout
    for _ in range(N_SENTENCES):
        words = sentence(rng)
        if rng.random() < 0.01:
            words.insert(rng.randrange(len(words)), rng.choice(rare))
        out.write(" ".join(words) + "\n")


if __name__ == "__main__":
    main()
