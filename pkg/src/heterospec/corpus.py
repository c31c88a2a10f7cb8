"""Synthetic corpora with planted low-entropy structure.

Each document mixes template blocks (copies of fixed symbol sequences,
each position corrupted with probability 1 - rho) into uniform filler
tokens. The planned number of template-slot tokens per document is
round(coverage * doc_len), so realized slot coverage is within half a
token of the requested rate. coverage = 0 yields a purely uniform corpus
with no planted structure.

Blocks are inserted at distinct positions between fillers whenever the
filler mass allows, so a block is normally preceded and followed by
filler: template entries and exits stay visible to the models instead of
being welded into one long periodic sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PlantedCorpusSpec:
    num_docs: int = 96
    doc_len: int = 140
    num_templates: int = 1
    template_len: int = 21
    coverage: float = 0.72  # fraction of each document inside template blocks
    rho: float = 0.97  # per-position copy fidelity inside a block
    vocab_size: int = 27
    pivots: int = 0  # recurrences of one pivot symbol inside each template

    def __post_init__(self):
        if self.num_docs < 1 or self.doc_len < 1:
            raise ConfigError("num_docs and doc_len must be >= 1")
        if self.num_templates < 1:
            raise ConfigError("num_templates must be >= 1")
        if not 2 <= self.template_len <= self.vocab_size + max(self.pivots - 1, 0):
            raise ConfigError("template_len too large for vocab_size")
        if not 0.0 <= self.coverage <= 1.0:
            raise ConfigError("coverage must be in [0, 1]")
        if not 0.5 < self.rho <= 1.0:
            raise ConfigError("rho must be in (0.5, 1]")
        if self.vocab_size < 2:
            raise ConfigError("vocab_size must be >= 2")
        if self.pivots < 0:
            raise ConfigError("pivots must be >= 0")
        if self.pivots and self.template_len < 2 * self.pivots + 1:
            raise ConfigError("template_len must be >= 2 * pivots + 1 so each "
                              "pivot sits between nonempty runs")


def corpus_symbols(vocab_size: int) -> list[str]:
    width = len(str(vocab_size - 1))
    return [f"w{i:0{width}d}" for i in range(vocab_size)]


def _make_template(spec: PlantedCorpusSpec, rng: np.random.Generator) -> list[int]:
    """Template symbols. With pivots, one symbol recurs at evenly spread
    interior positions, each time followed by a different symbol: a model
    whose context reaches past the pivot predicts the continuation, while
    a single-token context sees an ambiguous branch."""
    ids = [int(i) for i in rng.permutation(spec.vocab_size)]
    if spec.pivots == 0:
        return ids[:spec.template_len]
    pivot = ids[0]
    rest = ids[1:spec.template_len - spec.pivots + 1]
    base, extra = divmod(len(rest), spec.pivots + 1)
    template: list[int] = []
    start = 0
    for i in range(spec.pivots + 1):
        size = base + (1 if i < extra else 0)
        template.extend(rest[start:start + size])
        start += size
        if i < spec.pivots:
            template.append(pivot)
    return template


def _corrupt(tok: int, spec: PlantedCorpusSpec, rng: np.random.Generator) -> int:
    if spec.rho < 1.0 and rng.random() >= spec.rho:
        alt = int(rng.integers(spec.vocab_size - 1))
        return alt + 1 if alt >= tok else alt
    return tok


def _lay_out(blocks: list[list[int]], fillers: list[int],
             rng: np.random.Generator) -> list[tuple[bool, list[int]]]:
    """Order blocks and fillers within one document. Blocks go into
    distinct slots between fillers when there are enough fillers, keeping
    blocks non-adjacent; otherwise everything is shuffled flat."""
    if len(blocks) <= len(fillers) + 1:
        slots = sorted(int(g) for g in rng.choice(len(fillers) + 1,
                                                  size=len(blocks),
                                                  replace=False))
        order = [int(b) for b in rng.permutation(len(blocks))]
        at_slot = dict(zip(slots, order))
        out: list[tuple[bool, list[int]]] = []
        for gap in range(len(fillers) + 1):
            if gap in at_slot:
                out.append((True, blocks[at_slot[gap]]))
            if gap < len(fillers):
                out.append((False, [fillers[gap]]))
        return out
    segments = [(True, b) for b in blocks]
    segments += [(False, [f]) for f in fillers]
    return [segments[int(si)] for si in rng.permutation(len(segments))]


def gen_corpus(spec: PlantedCorpusSpec,
               rng: np.random.Generator) -> tuple[list[list[str]], list[list[str]]]:
    """Returns (documents, templates), all as symbol lists."""
    symbols = corpus_symbols(spec.vocab_size)
    templates = [_make_template(spec, rng) for _ in range(spec.num_templates)]
    docs: list[list[str]] = []
    for _ in range(spec.num_docs):
        planned = round(spec.coverage * spec.doc_len)
        nblocks, rem = divmod(planned, spec.template_len)
        blocks = [list(templates[int(rng.integers(spec.num_templates))])
                  for _ in range(nblocks)]
        if rem:
            blocks.append(templates[int(rng.integers(spec.num_templates))][:rem])
        fillers = [int(t) for t in rng.integers(spec.vocab_size,
                                                size=spec.doc_len - planned)]
        doc: list[int] = []
        for in_template, toks in _lay_out(blocks, fillers, rng):
            if in_template:
                doc.extend(_corrupt(t, spec, rng) for t in toks)
            else:
                doc.extend(toks)
        docs.append([symbols[t] for t in doc])
    return docs, [[symbols[t] for t in tpl] for tpl in templates]


def split_docs(docs: list, calibration_count: int,
               eval_count: int) -> tuple[list, list, list]:
    """Split documents into (train, calibration, eval) tails; training gets
    whatever precedes the two held-out slices."""
    held = calibration_count + eval_count
    if calibration_count < 1 or eval_count < 1:
        raise ConfigError("calibration and eval splits must each hold >= 1 doc")
    if len(docs) <= held:
        raise ConfigError(f"corpus has {len(docs)} docs, need more than {held} "
                          "to leave a training split")
    train = docs[:len(docs) - held]
    cal = docs[len(docs) - held:len(docs) - eval_count]
    return train, cal, docs[len(docs) - eval_count:]


def prompts_from(encoded_docs: list[list[int]],
                 prompt_tokens: int) -> list[tuple[int, ...]]:
    if prompt_tokens < 1:
        raise ConfigError("prompt_tokens must be >= 1")
    prompts = []
    for i, doc in enumerate(encoded_docs):
        if len(doc) < prompt_tokens:
            raise ConfigError(f"doc {i} has {len(doc)} tokens, cannot take a "
                              f"{prompt_tokens}-token prompt")
        prompts.append(tuple(doc[:prompt_tokens]))
    return prompts
