"""Document store, citation-graph expansion, and synthetic corpus assembly.

Addresses are plain integers resolved against a local manifest instead of
live arXiv/ISBN lookups, so two parties sharing the same store directory
reconstruct bit-identical increments.  Update rounds are logical (counted
in transmitted words), never wall-clock.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    EmptyIncrement,
    InvalidEncoding,
    MissingTransmittedData,
    UnknownAddress,
)

logger = logging.getLogger(__name__)

UPDATE_MODES = ("grow-radius", "transmitted-data", "split")

# Characters stripped from token edges.  ASCII punctuation, fixed forever:
# both parties must tokenize identically.
_PUNCT = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"


def tokenize(text: str | bytes) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation.

    Tokens that are pure punctuation vanish.  Bytes input must be valid
    UTF-8.  Tokens are interned: corpora repeat words millions of times
    and must not hold millions of duplicate string objects.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidEncoding(str(exc)) from None
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(sys.intern(tok))
    return out


@dataclass
class Document:
    text: str
    edges: list[int] = field(default_factory=list)


class DocumentStore:
    """Read-only map from integer address to document text plus out-edges.

    Edge targets that do not resolve are tolerated: they model citations
    of works outside the store and are skipped during expansion.
    """

    def __init__(self, manifest: dict[int, Document] | None = None):
        self.manifest: dict[int, Document] = dict(manifest or {})

    def __contains__(self, address: int) -> bool:
        return address in self.manifest

    def __len__(self) -> int:
        return len(self.manifest)

    def get(self, address: int) -> Document:
        try:
            return self.manifest[address]
        except KeyError:
            raise UnknownAddress(f"address {address} is not in the store") from None

    @classmethod
    def load(cls, manifest_path, root=None) -> "DocumentStore":
        """Parse a line-oriented manifest: ADDR/FILE entries then EDGE entries.

        File paths are resolved relative to `root` (default: the manifest's
        directory).
        """
        manifest_path = Path(manifest_path)
        base = Path(root) if root is not None else manifest_path.parent
        docs: dict[int, Document] = {}
        edges: list[tuple[int, int]] = []
        with open(manifest_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if parts[0] == "ADDR":
                    if len(parts) < 4 or parts[2] != "FILE":
                        raise ValueError(f"{manifest_path}:{lineno}: bad ADDR line")
                    address = int(parts[1])
                    rel = line.split(None, 3)[3]
                    text = (base / rel).read_text(encoding="utf-8")
                    docs[address] = Document(text=text)
                elif parts[0] == "EDGE":
                    if len(parts) != 3:
                        raise ValueError(f"{manifest_path}:{lineno}: bad EDGE line")
                    edges.append((int(parts[1]), int(parts[2])))
                else:
                    raise ValueError(f"{manifest_path}:{lineno}: unknown entry {parts[0]!r}")
        for src, dst in edges:
            if src in docs:
                docs[src].edges.append(dst)
            else:
                logger.warning("edge from unknown address %d ignored", src)
        return cls(docs)


def write_manifest(manifest_path, entries: dict[int, str], edges) -> None:
    """Write a store manifest; entries map address -> file path (relative)."""
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for address in entries:
            fh.write(f"ADDR {address} FILE {entries[address]}\n")
        for src, dst in edges:
            fh.write(f"EDGE {src} {dst}\n")


@dataclass(frozen=True)
class CorpusUnit:
    """One text blob in the increment graph, tagged with its BFS depth."""

    address: int
    depth: int
    text: str


@dataclass
class CorpusGraph:
    """Directed citation graph expanded out to a fixed radius.

    Vertices are stored in discovery (BFS) order; that order defines how
    the increment is flattened to text, so it must never change.
    """

    vertices: list[CorpusUnit]
    edges: list[tuple[int, int]]
    radius: int

    def addresses(self) -> list[int]:
        return [v.address for v in self.vertices]

    def flatten_tokens(self) -> list[str]:
        out: list[str] = []
        for v in self.vertices:
            out.extend(tokenize(v.text))
        return out


def resolve_initial(store: DocumentStore, n1: int) -> CorpusUnit:
    """Fetch the document the key's address field points at."""
    doc = store.get(n1)
    return CorpusUnit(address=n1, depth=0, text=doc.text)


def expand_graph(store: DocumentStore, initial: CorpusUnit, r: int) -> CorpusGraph:
    """Breadth-first expansion along out-edges up to depth r.

    Edge order follows the manifest; unknown targets are skipped with a
    log line.  Recorded edges are those between included vertices.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    def out_edges(address: int) -> list[int]:
        doc = store.manifest.get(address)
        return doc.edges if doc is not None else []

    order: list[CorpusUnit] = [initial]
    depth_of: dict[int, int] = {initial.address: 0}
    frontier = [initial.address]
    for depth in range(1, r + 1):
        nxt: list[int] = []
        for address in frontier:
            for target in out_edges(address):
                if target in depth_of:
                    continue
                if target not in store:
                    logger.info("skipping unresolved edge %d -> %d", address, target)
                    continue
                depth_of[target] = depth
                order.append(CorpusUnit(address=target, depth=depth, text=store.get(target).text))
                nxt.append(target)
        frontier = nxt
    included = set(depth_of)
    edges = []
    for unit in order:
        for target in out_edges(unit.address):
            if target in included:
                edges.append((unit.address, target))
    return CorpusGraph(vertices=order, edges=edges, radius=r)


@dataclass
class SyntheticCorpus:
    """Secret training text: public original plus key-addressed increment.

    `base` keeps the round-zero original so periodic restoration can reset
    growth.  `source_address`/`radius` remember how the increment was
    expanded so it can be grown in place.
    """

    original: tuple[str, ...]
    incremental: tuple[str, ...]
    version: int = 0
    base: tuple[str, ...] = ()
    source_address: int | None = None
    radius: int | None = None

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.original + self.incremental

    @property
    def increment_ratio(self) -> float:
        """Increment size relative to the original, in tokens."""
        return len(self.incremental) / len(self.original)


@dataclass
class UpdateSchedule:
    """Logical update cadence agreed by both parties.

    interval counts transmitted words per round; restore_every resets the
    original component every that many rounds; mode picks how the next
    increment is produced.
    """

    interval: int
    round: int = 0
    restore_every: int = 4
    mode: str = "grow-radius"
    splits: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError("interval must be at least one word")
        if self.restore_every < 1:
            raise ValueError("restore_every must be at least 1")
        if self.mode not in UPDATE_MODES:
            raise ValueError(f"mode must be one of {UPDATE_MODES}, got {self.mode!r}")

    def next_boundary(self) -> int:
        return self.interval * (self.round + 1)


def build_synthetic(original: list[str] | tuple[str, ...], graph: CorpusGraph) -> SyntheticCorpus:
    """Append the flattened increment to the original token stream."""
    original = tuple(original)
    if not original:
        raise ValueError("original corpus is empty")
    incremental = tuple(graph.flatten_tokens())
    if not incremental:
        raise EmptyIncrement("increment is empty; synthetic corpus would equal the original")
    root = graph.vertices[0]
    return SyntheticCorpus(
        original=original,
        incremental=incremental,
        version=0,
        base=original,
        source_address=root.address,
        radius=graph.radius,
    )


def update_corpus(
    current: SyntheticCorpus,
    schedule: UpdateSchedule,
    transmitted: list[str] | tuple[str, ...] | None = None,
    store: DocumentStore | None = None,
    mode: str | None = None,
) -> SyntheticCorpus:
    """Produce the next corpus version.

    The previous synthetic text becomes the new original, except every
    restore_every rounds when the original resets to the round-zero base.
    The new increment comes from the chosen mode: re-expansion at radius+1,
    the words transmitted during the last round, or the next pre-agreed
    split slice.
    """
    mode = mode or schedule.mode
    if mode not in UPDATE_MODES:
        raise ValueError(f"unknown update mode {mode!r}")
    version = current.version + 1
    if version % schedule.restore_every == 0:
        original = current.base
    else:
        original = current.tokens

    radius = current.radius
    if mode == "grow-radius":
        if store is None or current.source_address is None:
            raise ValueError("grow-radius update needs the store and a source address")
        radius = (current.radius or 0) + 1
        graph = expand_graph(store, resolve_initial(store, current.source_address), radius)
        incremental = tuple(graph.flatten_tokens())
    elif mode == "transmitted-data":
        if not transmitted:
            raise MissingTransmittedData("transmitted-data update requires last round's words")
        incremental = tuple(transmitted)
    else:  # split
        if not schedule.splits:
            raise ValueError("split update requires pre-partitioned slices on the schedule")
        incremental = tuple(schedule.splits[version % len(schedule.splits)])

    if not incremental:
        raise EmptyIncrement("update produced an empty increment")
    return replace(
        current,
        original=original,
        incremental=incremental,
        version=version,
        radius=radius,
    )


def write_tokens(path, tokens) -> None:
    """Token-per-line snapshot, plain UTF-8."""
    with open(path, "w", encoding="utf-8") as fh:
        for tok in tokens:
            fh.write(tok + "\n")


def read_tokens(path) -> tuple[str, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return tuple(line.rstrip("\n") for line in fh if line.rstrip("\n"))
