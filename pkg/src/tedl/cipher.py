"""Two-party session engine: indexing, inverted indexing, recovery, barriers.

Encrypting a word emits its current first-position hash and advances that
word's chain; decrypting looks the symbol up in the inverse index (or maps
it to the nearest valid hash if tampered) and advances the same chain, so
both parties' codebooks stay bit-identical.  Update barriers rebuild the
codebook from a revised corpus without touching the key.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

from . import corpus as corpus_mod
from . import embedding
from .codebook import Codebook, build_codebook, serialize_codebook
from .corpus import DocumentStore, SyntheticCorpus, UpdateSchedule
from .embedding import TrainingConfig
from .errors import (
    AmbiguousHash,
    CorruptFile,
    OutOfVocabulary,
    RecoveryFailed,
    RecoveryTie,
)

CIPHERTEXT_MAGIC = b"TEDLCT1"

SYMBOL_BYTES = 32
SYMBOL_BITS = 256


def hamming(a: bytes, b: bytes) -> int:
    """Bit positions where two equal-length byte strings differ."""
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).bit_count()


@dataclass(frozen=True)
class RecoveryPolicy:
    """How to treat symbols that miss the inverse index.

    max_distance bounds how many flipped bits a recovery may bridge;
    on_tie picks between failing and taking the lexicographically first
    of the equidistant candidates.
    """

    max_distance: int | None = None
    on_tie: str = "fail"

    def __post_init__(self):
        if self.max_distance is not None and not (0 <= self.max_distance <= SYMBOL_BITS):
            raise ValueError("max_distance must lie in [0, 256]")
        if self.on_tie not in ("fail", "first-lexicographic"):
            raise ValueError(f"unknown tie rule {self.on_tie!r}")


DEFAULT_POLICY = RecoveryPolicy()


def recover(symbol: bytes, valid, on_tie: str = "fail") -> tuple[bytes, int]:
    """Valid hash with the most overlap (minimum Hamming distance).

    Returns (hash, distance).  Ties raise RecoveryTie under the fail rule
    and resolve to the lexicographically first candidate otherwise.
    """
    best_h = None
    best_d = SYMBOL_BITS + 1
    tied = False
    for h in valid:
        dist = hamming(symbol, h)
        if dist < best_d:
            best_h, best_d, tied = h, dist, False
        elif dist == best_d and h != best_h:
            tied = True
            if h < best_h:
                best_h = h
    if best_h is None:
        raise ValueError("cannot recover against an empty valid set")
    if tied and on_tie == "fail":
        raise RecoveryTie(f"two valid hashes at distance {best_d}")
    return best_h, best_d


@dataclass
class CiphertextStream:
    """Ordered 256-bit symbols."""

    symbols: list[bytes] = field(default_factory=list)

    def __post_init__(self):
        for s in self.symbols:
            if len(s) != SYMBOL_BYTES:
                raise ValueError(f"symbol must be {SYMBOL_BYTES} bytes, got {len(s)}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


@dataclass
class SymbolOutcome:
    """Per-position decryption record for the session transcript."""

    position: int
    word: str | None
    recovered: bool
    distance: int = 0
    counter: int = 0
    error: str | None = None


@dataclass
class SessionState:
    """One party's mirrored cipher state.

    schedule/corpus/training may stay None for bare indexing sessions
    (stateless CLI encrypt/decrypt); update barriers require all three.
    """

    codebook: Codebook
    schedule: UpdateSchedule | None = None
    corpus: SyntheticCorpus | None = None
    training: TrainingConfig | None = None
    role: str = "sender"
    words_transmitted: int = 0

    def snapshot(self) -> bytes:
        return serialize_codebook(self.codebook)


def states_mirror(a: SessionState, b: SessionState) -> bool:
    """True when both parties hold bit-identical codebooks and counters."""
    return a.words_transmitted == b.words_transmitted and a.snapshot() == b.snapshot()


# ----------------------------------------------------------------------
# Per-word operations
# ----------------------------------------------------------------------

def encrypt_word(state: SessionState, word: str) -> bytes:
    """Index the word, emit its current head, advance its chain."""
    if word not in state.codebook:
        raise OutOfVocabulary(word)
    symbol = state.codebook.advance_word(word)
    state.words_transmitted += 1
    return symbol


def _decrypt_symbol_ex(state: SessionState, symbol: bytes,
                       policy: RecoveryPolicy) -> tuple[str, bool, int]:
    cb = state.codebook
    if symbol in cb.ambiguous:
        raise AmbiguousHash(f"symbol maps to {sorted(cb.ambiguous[symbol])}")
    word = cb.inverse.get(symbol)
    recovered = False
    dist = 0
    if word is None:
        try:
            best, dist = recover(symbol, cb.inverse.keys(), on_tie=policy.on_tie)
        except RecoveryTie as exc:
            raise RecoveryFailed(str(exc)) from None
        if policy.max_distance is not None and dist > policy.max_distance:
            raise RecoveryFailed(f"nearest valid hash is {dist} bits away")
        word = cb.inverse[best]
        recovered = True
    cb.advance_word(word)
    state.words_transmitted += 1
    return word, recovered, dist


def decrypt_symbol(state: SessionState, symbol: bytes,
                   policy: RecoveryPolicy = DEFAULT_POLICY) -> tuple[str, bool]:
    """Inverted indexing with nearest-valid-hash recovery.

    The matched word's chain advances either way, mirroring the sender.
    """
    word, recovered, _ = _decrypt_symbol_ex(state, symbol, policy)
    return word, recovered


# ----------------------------------------------------------------------
# Message-level operations
# ----------------------------------------------------------------------

def encrypt_message(state: SessionState, words) -> CiphertextStream:
    """Element-wise encryption; checks the whole message before advancing.

    Validating up front keeps the codebook untouched on failure, so a
    rejected message cannot desynchronize the parties.
    """
    words = list(words)
    for pos, word in enumerate(words):
        if word not in state.codebook:
            raise OutOfVocabulary(word, pos)
    return CiphertextStream([encrypt_word(state, w) for w in words])


def decrypt_message(state: SessionState, stream: CiphertextStream,
                    policy: RecoveryPolicy = DEFAULT_POLICY) -> tuple[list[str | None], list[SymbolOutcome]]:
    """Element-wise decryption reporting per-position outcomes.

    Recovery failures are recorded, not raised, so one ruined symbol does
    not abort the rest of the message.
    """
    words: list[str | None] = []
    outcomes: list[SymbolOutcome] = []
    for pos, symbol in enumerate(stream):
        try:
            word, recovered, dist = _decrypt_symbol_ex(state, symbol, policy)
            outcomes.append(SymbolOutcome(
                position=pos, word=word, recovered=recovered, distance=dist,
                counter=state.codebook.forward[word].counter,
            ))
            words.append(word)
        except (RecoveryFailed, AmbiguousHash) as exc:
            words.append(None)
            outcomes.append(SymbolOutcome(
                position=pos, word=None, recovered=False,
                error=f"{type(exc).__name__}: {exc}",
            ))
    return words, outcomes


# ----------------------------------------------------------------------
# Self-update barrier
# ----------------------------------------------------------------------

def seed_update(state: SessionState) -> int:
    """New training seed from the reserved hash of the first vocabulary word.

    Reserved values never appear on the wire, so the rolled seed stays as
    secret as the codebook itself.  Which word donates its reserved hash
    is a fixed convention both parties share.
    """
    first = min(state.codebook.forward)
    return int.from_bytes(state.codebook.forward[first].reserved, "big")


def run_update_barrier(
    state: SessionState,
    store: DocumentStore | None = None,
    mode: str | None = None,
    transmitted=None,
    reseed: bool = False,
) -> SessionState:
    """Advance the corpus one round, retrain, rebuild the codebook.

    Both parties run this at the same word-count boundary with the same
    arguments; determinism of every stage makes the rebuilt codebooks
    bit-identical.  With reseed=True the training seed is first replaced
    from the current codebook's reserved hashes.
    """
    if state.schedule is None or state.corpus is None or state.training is None:
        raise ValueError("update barriers need a full session state (schedule, corpus, training)")
    if state.words_transmitted < state.schedule.next_boundary():
        raise ValueError(
            f"barrier before round boundary: {state.words_transmitted} < "
            f"{state.schedule.next_boundary()} words"
        )
    cfg = state.training
    if reseed:
        cfg = replace(cfg, seed=seed_update(state))
    new_corpus = corpus_mod.update_corpus(
        state.corpus, state.schedule, transmitted=transmitted, store=store, mode=mode
    )
    vocab = embedding.build_vocab(new_corpus.tokens)
    tree = embedding.build_huffman(vocab)
    table = embedding.train_sghs(new_corpus.tokens, vocab, tree, cfg)
    cb = build_codebook(table)
    schedule = replace(state.schedule, round=state.schedule.round + 1)
    return SessionState(
        codebook=cb,
        schedule=schedule,
        corpus=new_corpus,
        training=cfg,
        role=state.role,
        words_transmitted=state.words_transmitted,
    )


# ----------------------------------------------------------------------
# Ciphertext files
# ----------------------------------------------------------------------

def write_ciphertext(path, stream: CiphertextStream, hex_mode: bool = False) -> None:
    """Binary by default; hex mode writes one 64-digit line per symbol."""
    if hex_mode:
        with open(path, "w", encoding="ascii") as fh:
            for s in stream:
                fh.write(s.hex() + "\n")
        return
    with open(path, "wb") as fh:
        fh.write(CIPHERTEXT_MAGIC)
        fh.write(struct.pack("<Q", len(stream)))
        for s in stream:
            fh.write(s)


def read_ciphertext(path, hex_mode: bool = False) -> CiphertextStream:
    if hex_mode:
        with open(path, "r", encoding="ascii") as fh:
            symbols = [bytes.fromhex(line.strip()) for line in fh if line.strip()]
        return CiphertextStream(symbols)
    with open(path, "rb") as fh:
        magic = fh.read(len(CIPHERTEXT_MAGIC))
        if magic != CIPHERTEXT_MAGIC:
            raise CorruptFile("bad ciphertext magic")
        (count,) = struct.unpack("<Q", fh.read(8))
        symbols = []
        for _ in range(count):
            s = fh.read(SYMBOL_BYTES)
            if len(s) != SYMBOL_BYTES:
                raise CorruptFile("truncated ciphertext")
            symbols.append(s)
        if fh.read(1):
            raise CorruptFile("trailing bytes after ciphertext payload")
    return CiphertextStream(symbols)
