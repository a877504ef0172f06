"""Time-varying codebook: quantized vectors, SHA-256 hash chains, indexing.

Each word's vector is cut into groups of five components; each group's
first sixteen significant digits (sign and exponent discarded) feed
SHA-256, yielding one 256-bit value per group.  All but the last form the
loop vector that rotates as symbols are consumed; the last is the
reserved value that salts every chain step and is never transmitted.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    DimensionNotMultipleOf5,
    HashCollision,
    NonFinite,
)
from .embedding import WordVectorTable

CODEBOOK_MAGIC = b"TEDLCBK1"

DIGITS_PER_COMPONENT = 16
COMPONENTS_PER_HASH = 5


def quantize_dim(x: float) -> str:
    """First sixteen significant decimal digits of |x| as a fixed string.

    The value is rendered in scientific notation with seventeen
    significant digits (round-half-even) and the seventeenth is cut off,
    so the result is a truncation, not a rounding.  Zero maps to sixteen
    zeros; short significands are right-padded by the rendering itself.
    """
    if not math.isfinite(x):
        raise NonFinite(f"cannot quantize {x!r}")
    if x == 0.0:
        return "0" * DIGITS_PER_COMPONENT
    rendered = format(abs(x), ".16e")
    mantissa = rendered.partition("e")[0].replace(".", "")
    return mantissa[:DIGITS_PER_COMPONENT]


def vector_to_hashes(vector) -> list[bytes]:
    """One SHA-256 digest per group of five quantized components.

    The hash input is the 80-character ASCII digit string formed by
    concatenating the five 16-digit significands in component order.
    """
    vector = np.asarray(vector, dtype=np.float64)
    d = vector.shape[0]
    if d % COMPONENTS_PER_HASH != 0:
        raise DimensionNotMultipleOf5(f"dimension {d} is not a multiple of 5")
    out = []
    for g in range(d // COMPONENTS_PER_HASH):
        chunk = "".join(
            quantize_dim(float(vector[g * COMPONENTS_PER_HASH + j]))
            for j in range(COMPONENTS_PER_HASH)
        )
        out.append(hashlib.sha256(chunk.encode("ascii")).digest())
    return out


def chain_step(value: bytes, reserved: bytes) -> bytes:
    """Next chain value: SHA-256 over the 64-byte concatenation."""
    return hashlib.sha256(value + reserved).digest()


@dataclass
class HashVector:
    """Per-word loop of rotating hashes plus the immutable reserved salt."""

    loop: list[bytes]
    reserved: bytes
    counter: int = 0

    def head(self) -> bytes:
        return self.loop[0]

    def advance(self) -> bytes:
        """Emit the head, append its chained successor, shift left."""
        emitted = self.loop.pop(0)
        self.loop.append(chain_step(emitted, self.reserved))
        self.counter += 1
        return emitted


class Codebook:
    """Forward word->HashVector map plus the inverse over current heads.

    The inverse index is the valid hash collection: exactly the set of
    symbols that decrypt without recovery.  Construction refuses duplicate
    heads; duplicates appearing later (astronomically unlikely) are kept
    in a side map so lookups can report ambiguity instead of guessing.
    """

    def __init__(self, forward: dict[str, HashVector], d: int, n3: int):
        self.forward = forward
        self.d = d
        self.n3 = n3
        self.inverse: dict[bytes, str] = {}
        self.ambiguous: dict[bytes, list[str]] = {}
        for word in forward:
            self._index_head(forward[word].head(), word)
        if self.ambiguous:
            words = sorted(w for ws in self.ambiguous.values() for w in ws)
            raise HashCollision(f"words share a first-position hash: {words}")

    # -- inverse index maintenance ------------------------------------

    def _index_head(self, head: bytes, word: str) -> None:
        if head in self.ambiguous:
            self.ambiguous[head].append(word)
        elif head in self.inverse:
            self.ambiguous[head] = [self.inverse.pop(head), word]
        else:
            self.inverse[head] = word

    def _unindex_head(self, head: bytes, word: str) -> None:
        if head in self.ambiguous:
            owners = self.ambiguous[head]
            owners.remove(word)
            if len(owners) == 1:
                self.inverse[head] = owners[0]
                del self.ambiguous[head]
        elif self.inverse.get(head) == word:
            del self.inverse[head]

    # -- operations -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.forward)

    def __contains__(self, word: str) -> bool:
        return word in self.forward

    def words(self) -> list[str]:
        return list(self.forward)

    def valid_hashes(self):
        """Current heads (the valid hash collection), including ambiguous ones."""
        return list(self.inverse) + list(self.ambiguous)

    def advance_word(self, word: str) -> bytes:
        """Advance one word's chain, keeping the inverse index consistent."""
        hv = self.forward[word]
        old = hv.head()
        emitted = hv.advance()
        self._unindex_head(old, word)
        self._index_head(hv.head(), word)
        return emitted

    def loop_len(self) -> int:
        return self.n3 + 1


def build_codebook(table: WordVectorTable, n3: int | None = None) -> Codebook:
    """Hash every word's vector and split into loop and reserved parts."""
    d = table.d
    if d % COMPONENTS_PER_HASH != 0:
        raise DimensionNotMultipleOf5(f"dimension {d} is not a multiple of 5")
    d_prime = d // COMPONENTS_PER_HASH
    if n3 is None:
        n3 = d_prime - 2
    if n3 + 2 != d_prime:
        raise ValueError(f"n3={n3} inconsistent with dimension {d}")
    forward: dict[str, HashVector] = {}
    for i, word in enumerate(table.words):
        hashes = vector_to_hashes(table.vectors[i])
        forward[word] = HashVector(loop=hashes[:-1], reserved=hashes[-1], counter=0)
    return Codebook(forward, d=d, n3=n3)


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------

def serialize_codebook(cb: Codebook) -> bytes:
    """Lossless binary snapshot including every chain counter.

    Layout: magic, d, n3, count, then per entry: word length, UTF-8 word,
    counter, loop hashes, reserved hash.
    """
    parts = [CODEBOOK_MAGIC, struct.pack("<IIQ", cb.d, cb.n3, len(cb.forward))]
    for word, hv in cb.forward.items():
        wb = word.encode("utf-8")
        parts.append(struct.pack("<I", len(wb)))
        parts.append(wb)
        parts.append(struct.pack("<Q", hv.counter))
        parts.extend(hv.loop)
        parts.append(hv.reserved)
    return b"".join(parts)


def deserialize_codebook(blob: bytes) -> Codebook:
    view = memoryview(blob)
    if bytes(view[:8]) != CODEBOOK_MAGIC:
        raise CorruptFile("bad codebook magic")
    off = 8
    try:
        d, n3, count = struct.unpack_from("<IIQ", view, off)
        off += 16
        loop_len = n3 + 1
        forward: dict[str, HashVector] = {}
        for _ in range(count):
            (wlen,) = struct.unpack_from("<I", view, off)
            off += 4
            if len(view[off : off + wlen]) != wlen:
                raise CorruptFile("truncated codebook entry")
            word = bytes(view[off : off + wlen]).decode("utf-8")
            off += wlen
            (counter,) = struct.unpack_from("<Q", view, off)
            off += 8
            loop = []
            for _ in range(loop_len):
                h = bytes(view[off : off + 32])
                if len(h) != 32:
                    raise CorruptFile("truncated hash")
                loop.append(h)
                off += 32
            reserved = bytes(view[off : off + 32])
            if len(reserved) != 32:
                raise CorruptFile("truncated reserved hash")
            off += 32
            forward[word] = HashVector(loop=loop, reserved=reserved, counter=counter)
    except (struct.error, UnicodeDecodeError) as exc:
        raise CorruptFile(f"malformed codebook: {exc}") from None
    if off != len(blob):
        raise CorruptFile(f"{len(blob) - off} trailing bytes after codebook payload")
    return Codebook(forward, d=d, n3=n3)


def write_codebook_file(path, cb: Codebook) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_codebook(cb))


def read_codebook_file(path) -> Codebook:
    with open(path, "rb") as fh:
        return deserialize_codebook(fh.read())
