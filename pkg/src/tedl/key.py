"""Key handling: layout, parsing, serialization, derived parameters.

A key is four unsigned integers packed big-endian into a single bit
string: initial address, graph radius, dimension selector, and the
training seed.  Everything the rest of the pipeline needs (radius,
vector dimension, hash-vector split, seed) is derived from it here.
"""

from __future__ import annotations

import random
import secrets
from dataclasses import dataclass

from .errors import LengthMismatch

KEY_MAGIC = "TEDL-KEY v1"

# Widths used throughout unless a caller supplies its own layout.
DEFAULT_LAYOUT_WIDTHS = (30, 2, 8, 256)


@dataclass(frozen=True)
class KeyLayout:
    """Bit widths of the four key fields."""

    x1: int
    x2: int
    x3: int
    x4: int

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "x4"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1 bit")
        if self.x4 > 256:
            # Seeds wider than the hash output cannot all map to distinct
            # initializations, so the seed field is capped at 256 bits.
            raise ValueError("x4 must not exceed 256 bits")

    @property
    def total_bits(self) -> int:
        return self.x1 + self.x2 + self.x3 + self.x4

    @property
    def hex_digits(self) -> int:
        return -(-self.total_bits // 4)

    def __str__(self) -> str:
        return f"{self.x1},{self.x2},{self.x3},{self.x4}"

    @classmethod
    def from_string(cls, text: str) -> "KeyLayout":
        parts = text.split(",")
        if len(parts) != 4:
            raise ValueError(f"layout must have four comma-separated widths, got {text!r}")
        return cls(*(int(p) for p in parts))


DEFAULT_LAYOUT = KeyLayout(*DEFAULT_LAYOUT_WIDTHS)


@dataclass(frozen=True)
class Key:
    """The four secret fields: address, radius, dimension selector, seed."""

    n1: int
    n2: int
    n3: int
    n4: int

    def fields(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)


@dataclass(frozen=True)
class DerivedParams:
    """Pipeline parameters computed from a key.

    d is always a multiple of five; each group of five vector components
    becomes one hash, giving d_prime hashes per word, of which the last
    is reserved and the first loop_len rotate as ciphertext.
    """

    r: int
    d: int
    d_prime: int
    loop_len: int
    seed: int


def validate_key(key: Key, layout: KeyLayout) -> None:
    """Raise ValueError unless every field fits its declared width."""
    for name, value, width in zip(
        ("n1", "n2", "n3", "n4"), key.fields(), (layout.x1, layout.x2, layout.x3, layout.x4)
    ):
        if value < 0 or value >> width:
            raise ValueError(f"{name}={value} does not fit in {width} bits")


def parse_key(encoded: str, layout: KeyLayout) -> Key:
    """Decode an uppercase-hex key payload under the given layout.

    The payload must carry exactly the layout's bit count: the hex digit
    count must match, and any slack bits in the leading digit must be zero.
    """
    text = encoded.strip()
    if len(text) != layout.hex_digits:
        raise LengthMismatch(
            f"expected {layout.hex_digits} hex digits ({layout.total_bits} bits), got {len(text)}"
        )
    try:
        value = int(text, 16)
    except ValueError:
        raise LengthMismatch(f"payload is not hexadecimal: {text!r}") from None
    if value >> layout.total_bits:
        raise LengthMismatch("payload has bits set beyond the declared width")
    n4 = value & ((1 << layout.x4) - 1)
    value >>= layout.x4
    n3 = value & ((1 << layout.x3) - 1)
    value >>= layout.x3
    n2 = value & ((1 << layout.x2) - 1)
    value >>= layout.x2
    n1 = value
    return Key(n1, n2, n3, n4)


def serialize_key(key: Key, layout: KeyLayout) -> str:
    """Pack the fields big-endian and render as left-padded uppercase hex."""
    validate_key(key, layout)
    value = (
        (key.n1 << (layout.x2 + layout.x3 + layout.x4))
        | (key.n2 << (layout.x3 + layout.x4))
        | (key.n3 << layout.x4)
        | key.n4
    )
    return format(value, f"0{layout.hex_digits}X")


def derive_params(key: Key) -> DerivedParams:
    """Map key fields to radius, dimensions, hash split, and seed."""
    d = 10 + 5 * key.n3
    d_prime = d // 5
    return DerivedParams(r=key.n2, d=d, d_prime=d_prime, loop_len=d_prime - 1, seed=key.n4)


def random_key(layout: KeyLayout, seed: int | None = None) -> Key:
    """Draw a uniform key.

    With seed given, uses a seeded PRNG so tests are reproducible; this
    path is not for production keys.
    """
    if seed is None:
        bits = lambda w: secrets.randbits(w)  # noqa: E731
    else:
        rng = random.Random(seed)
        bits = rng.getrandbits
    return Key(bits(layout.x1), bits(layout.x2), bits(layout.x3), bits(layout.x4))


def write_key_file(path, key: Key, layout: KeyLayout) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{KEY_MAGIC} {layout}\n")
        fh.write(serialize_key(key, layout) + "\n")


def read_key_file(path) -> tuple[Key, KeyLayout]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        payload = fh.readline().strip()
    if not header.startswith(KEY_MAGIC + " "):
        raise LengthMismatch(f"bad key file header: {header!r}")
    layout = KeyLayout.from_string(header[len(KEY_MAGIC) + 1 :])
    return parse_key(payload, layout), layout
