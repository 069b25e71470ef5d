"""Shared corpus builders for the test suite.

Two synthetic families are used throughout: a fully annotated toy corpus
(every annotation layer populated, strong two-sided label signal) for
end-to-end sweeps, and a plain-text family whose noise tokens are
progressively "uniquified" into a rare pool to drive feature density up
while label signal stays fixed.
"""

from __future__ import annotations

import numpy as np
import pytest

from fdw.corpus import (
    ALPHA,
    CHUNK,
    DEP,
    LEMMA,
    NER,
    POS,
    STOP,
    AnnotatedDoc,
    Corpus,
    TokenAnn,
    annotate_plain,
    builtin_stopwords,
    make_corpus,
    save_jsonl,
)

FULL_LAYERS = frozenset({LEMMA, POS, NER, DEP, CHUNK, STOP, ALPHA})

_NOUNS = [("dog", "dog"), ("dogs", "dog"), ("cat", "cat"), ("game", "game"),
          ("story", "story"), ("phone", "phone"), ("friends", "friend"), ("songs", "song")]
_VERBS = [("hates", "hate"), ("likes", "like"), ("plays", "play"), ("tells", "tell")]
_ADJS = [("dumb", "dumb"), ("cool", "cool"), ("lame", "lame"), ("nice", "nice")]
_NAMES = [(("John", "Smith"), "PERSON"), (("Mary",), "PERSON"), (("Acme", "Corp"), "ORG")]
_PUNCT = ["!", ".", "?"]


def _token(text, lemma, pos, head, deprel, stopwords, ent_type=""):
    return TokenAnn(
        text=text,
        lemma=lemma,
        pos=pos,
        ent_type=ent_type,
        head=head,
        deprel=deprel,
        is_stop=text.lower() in stopwords,
        is_alpha=text.isalpha(),
    )


def build_annotated_toy(n_docs: int = 200, pos_frac: float = 0.3, seed: int = 42) -> Corpus:
    """Fully annotated separable corpus: positives carry 'zap pow',
    negatives 'calm mild'; every pipeline layer is populated."""
    rng = np.random.default_rng(seed)
    stopwords = builtin_stopwords()
    docs = []
    n_pos = int(n_docs * pos_frac)
    for i in range(n_docs):
        label = int(i < n_pos)
        tokens = []
        entities = []
        chunks = []

        noun = _NOUNS[rng.integers(0, len(_NOUNS))]
        verb = _VERBS[rng.integers(0, len(_VERBS))]
        tokens.append(_token("the", "the", "DET", 1, "det", stopwords))
        tokens.append(_token(noun[0], noun[1], "NOUN", 2, "nsubj", stopwords))
        tokens.append(_token(verb[0], verb[1], "VERB", 2, "ROOT", stopwords))
        chunks.append((0, 2))

        signal = (("zap", "zap"), ("pow", "pow")) if label else (("calm", "calm"), ("mild", "mild"))
        for text, lemma in signal:
            tokens.append(_token(text, lemma, "NOUN", 2, "dobj", stopwords))

        if rng.random() < 0.5:
            words, etype = _NAMES[rng.integers(0, len(_NAMES))]
            start = len(tokens)
            for w in words:
                tokens.append(_token(w, w.lower(), "PROPN", 2, "nmod", stopwords,
                                     ent_type=etype))
            entities.append((start, len(tokens), etype))

        for _ in range(int(rng.integers(1, 3))):
            kind = rng.integers(0, 2)
            word = (_ADJS if kind else _NOUNS)[rng.integers(0, len(_ADJS if kind else _NOUNS))]
            tokens.append(_token(word[0], word[1], "ADJ" if kind else "NOUN", 2,
                                 "amod" if kind else "obl", stopwords))

        tokens.append(_token(_PUNCT[rng.integers(0, len(_PUNCT))], ".", "PUNCT", 2,
                             "punct", stopwords))
        docs.append(
            AnnotatedDoc(
                id=f"toy-{i:04d}",
                label=label,
                tokens=tuple(tokens),
                entities=tuple(entities),
                chunks=tuple(chunks),
                layers=FULL_LAYERS,
            )
        )
    return make_corpus(docs)


def build_trend_corpus(uniquify: float, n_docs: int = 160, seed: int = 7) -> Corpus:
    """Plain corpus whose noise tokens are progressively uniquified.

    ``uniquify`` is the fraction of noise draws taken from a rare pool sized
    for roughly two corpus-wide occurrences per token, so held-out rows stay
    in-vocabulary (the regime of the high-density dependency variants, which
    sit near two occurrences per unique unit). The label signal token 'zap'
    is fixed across the family.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(n_docs * 0.3)
    shared = [f"s{i}" for i in range(12)]
    rare_pool = max(1, int(n_docs * 10 * uniquify / 2))
    pairs = []
    for i in range(n_docs):
        label = int(i < n_pos)
        words = []
        for _ in range(10):
            if rng.random() < uniquify:
                words.append(f"r{rng.integers(0, rare_pool)}")
            else:
                words.append(shared[rng.integers(0, len(shared))])
        if label:
            words.insert(int(rng.integers(0, len(words))), "zap")
        pairs.append((" ".join(words), label))
    return annotate_plain(pairs)


@pytest.fixture(scope="session")
def toy_corpus() -> Corpus:
    return build_annotated_toy()

@pytest.fixture(scope="session")
def toy_jsonl(tmp_path_factory, toy_corpus) -> str:
    path = tmp_path_factory.mktemp("corpus") / "toy.jsonl"
    save_jsonl(toy_corpus, path)
    return str(path)


@pytest.fixture(scope="session")
def small_corpus() -> Corpus:
    """A 60-doc annotated corpus for quick CV tests."""
    return build_annotated_toy(n_docs=60, seed=11)
