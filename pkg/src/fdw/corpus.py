"""Annotated-corpus ingestion: JSONL and CoNLL-U loaders plus a degraded
plain-text mode for corpora without external annotations.

A corpus is a sequence of labeled documents whose tokens may carry lemma,
part-of-speech, entity, and dependency layers. Loaders record which layers
every document actually provides; downstream preprocessing refuses to run
on layers that are missing.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

# Annotation layer names.
LEMMA = "LEMMA"
POS = "POS"
NER = "NER"
DEP = "DEP"
CHUNK = "CHUNK"
STOP = "STOP"
ALPHA = "ALPHA"

ALL_LAYERS = frozenset({LEMMA, POS, NER, DEP, CHUNK, STOP, ALPHA})

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

ENV_STOPWORDS = "FDW_STOPWORDS"


class CorpusFormatError(ValueError):
    """A file could not be parsed as the expected corpus format."""


class CorpusValidationError(ValueError):
    """Parsed data violates a document invariant (spans, heads, labels)."""


@dataclass(frozen=True)
class TokenAnn:
    """One token with its linguistic annotations."""

    text: str
    lemma: str = ""
    pos: str = ""
    ent_type: str = ""
    head: int = 0
    deprel: str = "ROOT"
    is_stop: bool = False
    is_alpha: bool = False


@dataclass(frozen=True)
class AnnotatedDoc:
    """One labeled sample: tokens plus entity and noun-chunk spans.

    Spans are half-open ``(start, end)`` token index pairs. ``layers`` names
    the annotation layers this particular document provides; the corpus
    capability set is the intersection over documents.
    """

    id: str
    label: int
    tokens: tuple[TokenAnn, ...]
    entities: tuple[tuple[int, int, str], ...] = ()
    chunks: tuple[tuple[int, int], ...] = ()
    layers: frozenset[str] = frozenset({STOP, ALPHA})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def is_empty(self) -> bool:
        return not self.tokens


@dataclass(frozen=True)
class Corpus:
    docs: tuple[AnnotatedDoc, ...]
    capabilities: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def usable_docs(self) -> tuple[AnnotatedDoc, ...]:
        """Documents with at least one token (the trainable subset)."""
        return tuple(d for d in self.docs if not d.is_empty)


def builtin_stopwords() -> frozenset[str]:
    """The stopword list bundled with the package."""
    text = resources.files("fdw").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return _parse_stopword_text(text)


def load_stopwords(path: str | os.PathLike[str]) -> frozenset[str]:
    return _parse_stopword_text(Path(path).read_text("utf-8"))


def resolve_stopwords(path: str | None = None) -> frozenset[str]:
    """Stopword resolution order: explicit path, FDW_STOPWORDS, bundled list."""
    if path:
        return load_stopwords(path)
    env = os.environ.get(ENV_STOPWORDS)
    if env:
        return load_stopwords(env)
    return builtin_stopwords()


def _parse_stopword_text(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def _doc_capabilities(docs: Iterable[AnnotatedDoc]) -> frozenset[str]:
    caps: frozenset[str] | None = None
    for doc in docs:
        caps = doc.layers if caps is None else caps & doc.layers
    return caps if caps is not None else frozenset()


def make_corpus(docs: Sequence[AnnotatedDoc]) -> Corpus:
    """Assemble a corpus, computing capabilities as the layer intersection."""
    docs = tuple(docs)
    for doc in docs:
        validate_doc(doc)
    return Corpus(docs=docs, capabilities=_doc_capabilities(docs))


def validate_doc(doc: AnnotatedDoc) -> None:
    """Check token and span invariants, raising CorpusValidationError."""
    n = len(doc.tokens)
    if doc.label not in (0, 1):
        raise CorpusValidationError(f"doc {doc.id}: label must be 0 or 1, got {doc.label!r}")
    for i, tok in enumerate(doc.tokens):
        if not tok.text:
            raise CorpusValidationError(f"doc {doc.id}: token {i} has empty text")
        if not 0 <= tok.head < n:
            raise CorpusValidationError(f"doc {doc.id}: head out of range (token {i})")
        if DEP in doc.layers and tok.head == i and tok.deprel != "ROOT":
            raise CorpusValidationError(
                f"doc {doc.id}: root token {i} must have deprel ROOT, got {tok.deprel!r}"
            )
    _validate_spans(doc.id, "entity", [(s, e) for s, e, _ in doc.entities], n)
    _validate_spans(doc.id, "chunk", list(doc.chunks), n)
    if NER in doc.layers:
        covered = {}
        for start, end, etype in doc.entities:
            if not etype:
                raise CorpusValidationError(f"doc {doc.id}: entity span with empty type")
            for i in range(start, end):
                covered[i] = etype
        for i, tok in enumerate(doc.tokens):
            expect = covered.get(i, "")
            if tok.ent_type != expect:
                raise CorpusValidationError(
                    f"doc {doc.id}: token {i} ent_type {tok.ent_type!r} does not match "
                    f"entity spans (expected {expect!r})"
                )


def _validate_spans(doc_id: str, kind: str, spans: list[tuple[int, int]], n: int) -> None:
    seen: list[tuple[int, int]] = []
    for start, end in spans:
        if not (0 <= start < end <= n):
            raise CorpusValidationError(
                f"doc {doc_id}: {kind} span ({start}, {end}) out of bounds for {n} tokens"
            )
        for s0, e0 in seen:
            if start < e0 and s0 < end:
                raise CorpusValidationError(
                    f"doc {doc_id}: overlapping {kind} spans ({s0}, {e0}) and ({start}, {end})"
                )
        seen.append((start, end))


# ---------------------------------------------------------------------------
# JSONL interchange format
# ---------------------------------------------------------------------------

_OPTIONAL_TOKEN_KEYS = {"l": LEMMA, "p": POS, "e": NER, "h": DEP, "d": DEP}


def load_jsonl(path: str | os.PathLike[str]) -> Corpus:
    """Load the canonical JSONL interchange format.

    One JSON object per line: ``id``, ``label``, ``tokens`` (each with ``t``
    and optional ``l/p/e/h/d`` plus ``s``/``a`` flags), optional ``entities``
    and ``chunks`` span lists. Optional keys omitted in a document remove the
    matching layer from that document.
    """
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            docs.append(_doc_from_json(obj, lineno))
    corpus = make_corpus(docs)
    _warn_empty_docs(corpus)
    return corpus


def _doc_from_json(obj: dict, lineno: int) -> AnnotatedDoc:
    try:
        doc_id = str(obj["id"])
        label = obj["label"]
        raw_tokens = obj["tokens"]
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"line {lineno}: missing required key {exc}") from exc

    layers = {STOP, ALPHA}
    has = {key: True for key in _OPTIONAL_TOKEN_KEYS}
    tokens = []
    for tok in raw_tokens:
        if "t" not in tok:
            raise CorpusFormatError(f"line {lineno}: token without 't' in doc {doc_id}")
        for key in _OPTIONAL_TOKEN_KEYS:
            if key not in tok:
                has[key] = False
        tokens.append(tok)
    # Layer presence is vacuously true for zero-token docs, so an empty
    # document never strips capabilities from the rest of the corpus.
    if has["l"]:
        layers.add(LEMMA)
    if has["p"]:
        layers.add(POS)
    if has["h"] and has["d"]:
        layers.add(DEP)
    if has["e"] and "entities" in obj:
        layers.add(NER)
    if "chunks" in obj:
        layers.add(CHUNK)

    anns = tuple(
        TokenAnn(
            text=str(t["t"]),
            lemma=str(t.get("l", "")),
            pos=str(t.get("p", "")),
            ent_type=str(t.get("e", "")),
            head=int(t.get("h", i)),
            deprel=str(t.get("d", "ROOT")),
            is_stop=bool(t.get("s", False)),
            is_alpha=bool(t.get("a", False)),
        )
        for i, t in enumerate(tokens)
    )
    entities = tuple((int(s), int(e), str(ty)) for s, e, ty in obj.get("entities", []))
    chunks = tuple((int(s), int(e)) for s, e in obj.get("chunks", []))
    return AnnotatedDoc(
        id=doc_id,
        label=label,
        tokens=anns,
        entities=entities,
        chunks=chunks,
        layers=frozenset(layers),
    )


def save_jsonl(corpus: Corpus, path: str | os.PathLike[str]) -> None:
    """Write a corpus back to the JSONL interchange format.

    Optional keys are emitted per document according to its layer set, so
    ``load_jsonl(save_jsonl(c))`` reproduces ``c`` exactly for corpora that
    came from JSONL. Fields outside a document's layers (for example the
    informal lowercase lemma the plain-text annotator fills in) are not
    serialized.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.docs:
            fh.write(json.dumps(_doc_to_json(doc), ensure_ascii=False) + "\n")


def _doc_to_json(doc: AnnotatedDoc) -> dict:
    obj: dict = {"id": doc.id, "label": doc.label, "tokens": []}
    for i, tok in enumerate(doc.tokens):
        t: dict = {"t": tok.text}
        if LEMMA in doc.layers:
            t["l"] = tok.lemma
        if POS in doc.layers:
            t["p"] = tok.pos
        if NER in doc.layers:
            t["e"] = tok.ent_type
        if DEP in doc.layers:
            t["h"] = tok.head
            t["d"] = tok.deprel
        t["s"] = tok.is_stop
        t["a"] = tok.is_alpha
        obj["tokens"].append(t)
    if NER in doc.layers:
        obj["entities"] = [[s, e, ty] for s, e, ty in doc.entities]
    if CHUNK in doc.layers:
        obj["chunks"] = [[s, e] for s, e in doc.chunks]
    return obj


# ---------------------------------------------------------------------------
# CoNLL-U
# ---------------------------------------------------------------------------

def load_conllu(
    path: str | os.PathLike[str], stopwords: frozenset[str] | None = None
) -> Corpus:
    """Load a CoNLL-U file whose sentences carry ``# doc_id`` / ``# label``
    comments; consecutive sentences sharing a doc_id merge into one document.

    LEMMA/POS/DEP come from the standard columns (1-based HEAD converted to
    0-based; HEAD 0 becomes a self-headed ROOT token). Entity spans come from
    ``Ent=TYPE`` keys in MISC (contiguous same-type runs form one span);
    chunk spans from optional ``# chunks = start-end,...`` comments.
    ``is_stop``/``is_alpha`` are computed from the stopword list and an
    all-alphabetic check. Multiword-token ranges and empty nodes are skipped.
    """
    if stopwords is None:
        stopwords = builtin_stopwords()

    sentences = _parse_conllu_sentences(path)
    file_has_ent = any(ent for _, _, _, rows, _ in sentences for *_r, ent in rows)
    file_has_chunks = any(ch is not None for _, _, _, _, ch in sentences)

    docs: list[AnnotatedDoc] = []
    order: list[str] = []
    grouped: dict[str, list] = {}
    labels: dict[str, int] = {}
    for doc_id, label, lineno, rows, chunk_spans in sentences:
        if doc_id not in grouped:
            grouped[doc_id] = []
            order.append(doc_id)
            labels[doc_id] = label
        elif labels[doc_id] != label:
            raise CorpusValidationError(
                f"doc {doc_id}: conflicting labels {labels[doc_id]} and {label}"
            )
        grouped[doc_id].append((rows, chunk_spans))

    for doc_id in order:
        tokens: list[TokenAnn] = []
        entities: list[tuple[int, int, str]] = []
        chunks: list[tuple[int, int]] = []
        for rows, chunk_spans in grouped[doc_id]:
            offset = len(tokens)
            run_start, run_type = None, ""
            for j, (form, lemma, upos, head, deprel, ent) in enumerate(rows):
                idx = offset + j
                if head == 0:
                    h, rel = idx, "ROOT"
                else:
                    h, rel = offset + head - 1, deprel
                tokens.append(
                    TokenAnn(
                        text=form,
                        lemma=form if lemma == "_" else lemma,
                        pos="X" if upos == "_" else upos,
                        ent_type=ent,
                        head=h,
                        deprel=rel,
                        is_stop=form.lower() in stopwords,
                        is_alpha=form.isalpha(),
                    )
                )
                if ent != run_type:
                    if run_type:
                        entities.append((run_start, idx, run_type))
                    run_start, run_type = idx, ent
            if run_type:
                entities.append((run_start, offset + len(rows), run_type))
            if chunk_spans:
                chunks.extend((offset + s, offset + e) for s, e in chunk_spans)

        layers = {STOP, ALPHA, LEMMA, POS, DEP}
        if file_has_ent:
            layers.add(NER)
        if file_has_chunks:
            layers.add(CHUNK)
        docs.append(
            AnnotatedDoc(
                id=doc_id,
                label=labels[doc_id],
                tokens=tuple(tokens),
                entities=tuple(entities),
                chunks=tuple(chunks),
                layers=frozenset(layers),
            )
        )
    corpus = make_corpus(docs)
    _warn_empty_docs(corpus)
    return corpus


def _parse_conllu_sentences(path):
    sentences = []
    doc_id: str | None = None
    label: int | None = None
    chunk_spans: list[tuple[int, int]] | None = None
    rows: list = []
    start_line = 0

    def flush(lineno):
        if not rows and doc_id is None:
            return
        if doc_id is None:
            raise CorpusFormatError(f"sentence ending at line {lineno}: missing '# doc_id' comment")
        if label is None:
            raise CorpusFormatError(f"sentence ending at line {lineno}: missing '# label' comment")
        sentences.append((doc_id, label, start_line, list(rows), chunk_spans))

    with open(path, "r", encoding="utf-8") as fh:
        lineno = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                doc_id, label, chunk_spans, rows = None, None, None, []
                continue
            if line.startswith("#"):
                if not rows and doc_id is None and label is None and chunk_spans is None:
                    start_line = lineno
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key, value = key.strip(), value.strip()
                    if key == "doc_id":
                        doc_id = value
                    elif key == "label":
                        if value not in ("0", "1"):
                            raise CorpusFormatError(f"line {lineno}: label must be 0 or 1")
                        label = int(value)
                    elif key == "chunks":
                        chunk_spans = _parse_chunk_comment(value, lineno)
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise CorpusFormatError(
                    f"line {lineno}: expected 10 tab-separated columns, got {len(cols)}"
                )
            tok_id = cols[0]
            if "-" in tok_id or "." in tok_id:
                continue  # multiword-token range / empty node
            try:
                head = int(cols[6])
            except ValueError as exc:
                raise CorpusFormatError(f"line {lineno}: non-integer HEAD {cols[6]!r}") from exc
            ent = ""
            if cols[9] != "_":
                for attr in cols[9].split("|"):
                    k, _, v = attr.partition("=")
                    if k == "Ent":
                        ent = v
            rows.append((cols[1], cols[2], cols[3], head, cols[7], ent))
        flush(lineno)
    return sentences


def _parse_chunk_comment(value: str, lineno: int) -> list[tuple[int, int]]:
    spans = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if not m:
            raise CorpusFormatError(f"line {lineno}: bad chunk span {part!r}")
        spans.append((int(m.group(1)), int(m.group(2))))
    return spans


# ---------------------------------------------------------------------------
# Degraded plain-text mode
# ---------------------------------------------------------------------------

def annotate_plain(
    texts_with_labels: Iterable[tuple[str, int]],
    stopwords: frozenset[str] | None = None,
) -> Corpus:
    """Build a corpus from raw ``(text, label)`` pairs without an annotator.

    Tokenization splits on whitespace and separates punctuation; lemma is the
    lowercased text. Only the STOP and ALPHA layers are populated, so just the
    token-base pipelines without POS/NER/DEP/CHUNK requirements can run.
    """
    if stopwords is None:
        stopwords = builtin_stopwords()
    docs = []
    for i, (text, label) in enumerate(texts_with_labels):
        words = _TOKEN_RE.findall(text)
        tokens = tuple(
            TokenAnn(
                text=w,
                lemma=w.lower(),
                head=j,
                is_stop=w.lower() in stopwords,
                is_alpha=w.isalpha(),
            )
            for j, w in enumerate(words)
        )
        docs.append(AnnotatedDoc(id=f"plain-{i}", label=label, tokens=tokens))
    corpus = make_corpus(docs)
    _warn_empty_docs(corpus)
    return corpus


def _warn_empty_docs(corpus: Corpus) -> None:
    empty = [d.id for d in corpus.docs if d.is_empty]
    if empty:
        log.warning(
            "%d empty document(s) kept for density counts but excluded from training: %s",
            len(empty),
            ", ".join(empty[:5]) + ("..." if len(empty) > 5 else ""),
        )
