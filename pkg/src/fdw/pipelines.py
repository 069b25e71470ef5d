"""The 68 linguistic preprocessing variants and their document transforms.

A variant is a base representation (tokens, lemmas, noun chunks, dependency
triples, or bare POS tags) optionally combined with one entity modifier
(attach or replace) or one POS modifier (separate or combined), then run
through optional stopword and non-alphabetic filters. Each variant turns a
document into a flat sequence of feature units whose surfaces feed the
bag-of-features vectorizer and the density statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .corpus import ALPHA, CHUNK, DEP, LEMMA, NER, POS, STOP, AnnotatedDoc

BASES = ("TOK", "LEM", "CHNK", "DEP", "POSS")

NER_NONE, NER_ATTACH, NER_REPLACE = "NONE", "ATTACH", "REPLACE"
POS_NONE, POS_SEPARATE, POS_COMBINED = "NONE", "SEPARATE", "COMBINED"

# Joiners for merged surfaces; fixed so vocabularies are reproducible.
MERGE_SEP = "_"
DEP_SEP = "/"


class CapabilityError(ValueError):
    """A pipeline needs an annotation layer the corpus does not provide."""


class PipelineNameError(ValueError):
    """A string does not name one of the 68 canonical variants."""


class FeatureUnit(NamedTuple):
    """One emitted unit: its surface string and the index of the token it
    derives from (the span-initial token for merged spans)."""

    surface: str
    carrier: int


@dataclass(frozen=True)
class PipelineSpec:
    base: str
    ner_mode: str = NER_NONE
    pos_mode: str = POS_NONE
    stop_filter: bool = False
    alpha_filter: bool = False

    def __post_init__(self) -> None:
        if self.base not in BASES:
            raise ValueError(f"unknown base {self.base!r}")
        if self.ner_mode not in (NER_NONE, NER_ATTACH, NER_REPLACE):
            raise ValueError(f"unknown ner_mode {self.ner_mode!r}")
        if self.pos_mode not in (POS_NONE, POS_SEPARATE, POS_COMBINED):
            raise ValueError(f"unknown pos_mode {self.pos_mode!r}")
        if self.base == "POSS" and (self.ner_mode != NER_NONE or self.pos_mode != POS_NONE):
            raise ValueError("POSS base admits no NER/POS modifier")
        if self.base in ("CHNK", "DEP") and self.pos_mode != POS_NONE:
            raise ValueError(f"{self.base} base admits no POS modifier")
        if self.ner_mode != NER_NONE and self.pos_mode != POS_NONE:
            raise ValueError("NER and POS modifiers are mutually exclusive")

    @property
    def name(self) -> str:
        return pipeline_name(self)


def required_layers(spec: PipelineSpec) -> frozenset[str]:
    """The annotation layers a variant needs to run."""
    need = set()
    if spec.base == "LEM":
        need.add(LEMMA)
    elif spec.base == "CHNK":
        need.add(CHUNK)
    elif spec.base == "DEP":
        need.add(DEP)
    elif spec.base == "POSS":
        need.add(POS)
    if spec.pos_mode != POS_NONE:
        need.add(POS)
    if spec.ner_mode != NER_NONE:
        need.add(NER)
    if spec.stop_filter:
        need.add(STOP)
    if spec.alpha_filter:
        need.add(ALPHA)
    return frozenset(need)


def enumerate_pipelines() -> tuple[PipelineSpec, ...]:
    """All 68 variants in canonical order: base, then modifier, then filters.

    TOK and LEM take five modifier settings (plain, NER attach, NER replace,
    POS separate, POS combined), CHNK and DEP three (plain plus the two NER
    modes), POSS only plain; each crossed with the four filter combinations.
    """
    modifier_sets = {
        "TOK": _FULL_MODIFIERS,
        "LEM": _FULL_MODIFIERS,
        "CHNK": _NER_MODIFIERS,
        "DEP": _NER_MODIFIERS,
        "POSS": ((NER_NONE, POS_NONE),),
    }
    specs = []
    for base in BASES:
        for ner_mode, pos_mode in modifier_sets[base]:
            for stop, alpha in ((False, False), (True, False), (False, True), (True, True)):
                specs.append(
                    PipelineSpec(
                        base=base,
                        ner_mode=ner_mode,
                        pos_mode=pos_mode,
                        stop_filter=stop,
                        alpha_filter=alpha,
                    )
                )
    return tuple(specs)


_FULL_MODIFIERS = (
    (NER_NONE, POS_NONE),
    (NER_ATTACH, POS_NONE),
    (NER_REPLACE, POS_NONE),
    (NER_NONE, POS_SEPARATE),
    (NER_NONE, POS_COMBINED),
)
_NER_MODIFIERS = (
    (NER_NONE, POS_NONE),
    (NER_ATTACH, POS_NONE),
    (NER_REPLACE, POS_NONE),
)


def pipeline_name(spec: PipelineSpec) -> str:
    """Canonical report/CLI identifier, e.g. ``TOKPOSSTOP`` or ``LEMNERR``."""
    name = spec.base
    if spec.ner_mode == NER_ATTACH:
        name += "NER"
    elif spec.ner_mode == NER_REPLACE:
        name += "NERR"
    if spec.pos_mode == POS_SEPARATE:
        name += "POSS"
    elif spec.pos_mode == POS_COMBINED:
        name += "POS"
    if spec.stop_filter:
        name += "STOP"
    if spec.alpha_filter:
        name += "ALPHA"
    return name


def parse_pipeline_name(name: str) -> PipelineSpec:
    """Inverse of :func:`pipeline_name`; raises PipelineNameError otherwise."""
    for candidate in _parse_candidates(name):
        return candidate
    raise PipelineNameError(f"not a canonical pipeline name: {name!r}")


def _parse_candidates(name: str) -> Iterator[PipelineSpec]:
    for base in sorted(BASES, key=len, reverse=True):
        if not name.startswith(base):
            continue
        rest0 = name[len(base):]
        for ner_mode, ner_tok in ((NER_REPLACE, "NERR"), (NER_ATTACH, "NER"), (NER_NONE, "")):
            if not rest0.startswith(ner_tok):
                continue
            rest1 = rest0[len(ner_tok):]
            for pos_mode, pos_tok in ((POS_SEPARATE, "POSS"), (POS_COMBINED, "POS"), (POS_NONE, "")):
                if not rest1.startswith(pos_tok):
                    continue
                rest2 = rest1[len(pos_tok):]
                stop = rest2.startswith("STOP")
                rest3 = rest2[4:] if stop else rest2
                alpha = rest3.startswith("ALPHA")
                rest4 = rest3[5:] if alpha else rest3
                if rest4:
                    continue
                try:
                    yield PipelineSpec(base, ner_mode, pos_mode, stop, alpha)
                except ValueError:
                    continue


def resolve_pipelines(selection: str) -> tuple[PipelineSpec, ...]:
    """Turn a CLI selection (``all`` or comma-separated names) into specs."""
    if selection.strip().lower() == "all":
        return enumerate_pipelines()
    specs = []
    for part in selection.split(","):
        part = part.strip()
        if part:
            specs.append(parse_pipeline_name(part))
    if not specs:
        raise PipelineNameError("empty pipeline selection")
    return tuple(specs)


def apply_pipeline(spec: PipelineSpec, doc: AnnotatedDoc) -> tuple[FeatureUnit, ...]:
    """Transform a document into its feature units under one variant.

    Stages run in a fixed order: base transform, NER or POS modifier, stop
    filter, alpha filter. Filters test the carrier token, never the emitted
    surface, so their semantics are uniform across bases.
    """
    missing = required_layers(spec) - doc.layers
    if missing:
        raise CapabilityError(
            f"pipeline {pipeline_name(spec)} needs missing layer(s): "
            + ", ".join(sorted(missing))
        )
    toks = doc.tokens
    units = _base_units(spec, doc)

    if spec.ner_mode == NER_ATTACH:
        units = [
            FeatureUnit(u.surface + MERGE_SEP + toks[u.carrier].ent_type, u.carrier)
            if toks[u.carrier].ent_type
            else u
            for u in units
        ]
    elif spec.ner_mode == NER_REPLACE:
        units = _replace_entity_runs(units, doc)

    if spec.pos_mode == POS_COMBINED:
        units = [
            FeatureUnit(u.surface + MERGE_SEP + toks[u.carrier].pos, u.carrier) for u in units
        ]
    elif spec.pos_mode == POS_SEPARATE:
        interleaved = []
        for u in units:
            interleaved.append(u)
            interleaved.append(FeatureUnit(toks[u.carrier].pos, u.carrier))
        units = interleaved

    if spec.stop_filter:
        units = [u for u in units if not toks[u.carrier].is_stop]
    if spec.alpha_filter:
        units = [u for u in units if toks[u.carrier].is_alpha]
    return tuple(units)


def _base_units(spec: PipelineSpec, doc: AnnotatedDoc) -> list[FeatureUnit]:
    toks = doc.tokens
    if spec.base == "TOK":
        return [FeatureUnit(t.text, i) for i, t in enumerate(toks)]
    if spec.base == "LEM":
        return [FeatureUnit(t.lemma, i) for i, t in enumerate(toks)]
    if spec.base == "POSS":
        return [FeatureUnit(t.pos, i) for i, t in enumerate(toks)]
    if spec.base == "DEP":
        return [
            FeatureUnit(t.text + DEP_SEP + t.deprel + DEP_SEP + toks[t.head].text, i)
            for i, t in enumerate(toks)
        ]
    # CHNK: chunk spans merge into one unit; other tokens pass through.
    span_at = {start: (start, end) for start, end in doc.chunks}
    units = []
    i = 0
    while i < len(toks):
        if i in span_at:
            start, end = span_at[i]
            surface = MERGE_SEP.join(t.text for t in toks[start:end])
            units.append(FeatureUnit(surface, start))
            i = end
        else:
            units.append(FeatureUnit(toks[i].text, i))
            i += 1
    return units


def _replace_entity_runs(units: list[FeatureUnit], doc: AnnotatedDoc) -> list[FeatureUnit]:
    """Collapse each maximal run of units carried by one entity span into a
    single unit whose surface is the entity type."""
    span_id = {}
    for sid, (start, end, _etype) in enumerate(doc.entities):
        for i in range(start, end):
            span_id[i] = sid
    out: list[FeatureUnit] = []
    current = None
    for u in units:
        sid = span_id.get(u.carrier)
        if sid is None:
            out.append(u)
            current = None
        elif sid != current:
            out.append(FeatureUnit(doc.entities[sid][2], u.carrier))
            current = sid
    return out
