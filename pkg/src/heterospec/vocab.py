"""Closed vocabularies over plain-text corpora.

A corpus is a list of documents (one per line in the file form). Symbols
are single characters in ``char`` mode or whitespace-separated words in
``word`` mode. Every vocabulary reserves an unknown symbol so that
arbitrary text can always be mapped to token ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

UNK = "<unk>"

TokenId = int
Context = tuple[int, ...]


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[str, ...]
    mode: str  # "char" | "word"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in ("char", "word"):
            raise ConfigError(f"unknown tokenization mode: {self.mode!r}")
        if len(self.symbols) < 2:
            raise ConfigError("vocabulary needs at least 2 symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("vocabulary symbols must be distinct")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def unk_id(self) -> int:
        return self._index[UNK]

    def id_of(self, symbol: str) -> int:
        return self._index.get(symbol, self._index[UNK])

    def encode(self, text: str) -> tuple[int, ...]:
        return tuple(self.id_of(s) for s in split_symbols(text, self.mode))

    def decode(self, ids) -> str:
        sep = "" if self.mode == "char" else " "
        return sep.join(self.symbols[i] for i in ids)


def split_symbols(text: str, mode: str) -> list[str]:
    if mode == "char":
        return list(text)
    if mode == "word":
        return text.split()
    raise ConfigError(f"unknown tokenization mode: {mode!r}")


def build_vocab(corpus: list[str], mode: str = "char") -> Vocabulary:
    """Collect the distinct symbols of a corpus plus the reserved unknown id.

    Symbols are sorted for determinism; the unknown symbol always gets the
    last id.
    """
    if not corpus or all(not split_symbols(doc, mode) for doc in corpus):
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    seen: set[str] = set()
    for doc in corpus:
        seen.update(split_symbols(doc, mode))
    seen.discard(UNK)
    return Vocabulary(tuple(sorted(seen)) + (UNK,), mode)


def encode_corpus(corpus: list[str], vocab: Vocabulary) -> list[tuple[int, ...]]:
    return [vocab.encode(doc) for doc in corpus]


def read_corpus(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.rstrip("\n")]


def write_corpus(path, docs: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc + "\n")
