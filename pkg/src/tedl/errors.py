"""Exception hierarchy shared by all tedl modules."""


class TedlError(Exception):
    """Base class for every error raised by this package."""


# -- key ---------------------------------------------------------------

class LengthMismatch(TedlError):
    """Encoded payload does not carry exactly the expected number of bits."""


# -- corpus ------------------------------------------------------------

class UnknownAddress(TedlError):
    """Initial address is absent from the document store (wrong key or store)."""


class EmptyIncrement(TedlError):
    """Increment is empty, which would make the synthetic corpus public."""


class MissingTransmittedData(TedlError):
    """Update mode requires transmitted data but none was supplied."""


class InvalidEncoding(TedlError):
    """Input bytes are not valid UTF-8."""


# -- embedding ---------------------------------------------------------

class EmptyCorpus(TedlError):
    """Token stream is empty."""


class DegenerateVocab(TedlError):
    """Vocabulary has fewer than two words; no tree can be built."""


class NonFiniteUpdate(TedlError):
    """Training produced a NaN or infinity."""


class ZeroVector(TedlError):
    """Cosine similarity of a zero vector is undefined."""


class WordMissing(TedlError):
    """Requested word is absent from a vector table."""


# -- codebook ----------------------------------------------------------

class NonFinite(TedlError):
    """Cannot quantize a NaN or infinity."""


class DimensionNotMultipleOf5(TedlError):
    """Vector dimension must be a multiple of five to form hash groups."""


class HashCollision(TedlError):
    """Two words share a first-position hash at construction time."""


class CorruptFile(TedlError):
    """Serialized state failed a magic or length check."""


# -- cipher ------------------------------------------------------------

class OutOfVocabulary(TedlError):
    """Plaintext word has no codebook entry (it never occurred in the corpus)."""

    def __init__(self, word, position=None):
        self.word = word
        self.position = position
        at = f" at position {position}" if position is not None else ""
        super().__init__(f"word {word!r}{at} is not in the codebook")


class RecoveryTie(TedlError):
    """Two valid hashes are equidistant from the tampered symbol."""


class RecoveryFailed(TedlError):
    """Tampered symbol could not be mapped back to a unique valid hash."""


class AmbiguousHash(TedlError):
    """An exact inverse-index hit maps to more than one word."""


class StateDivergence(TedlError):
    """Sender and receiver states stopped mirroring each other."""


# -- metrics -----------------------------------------------------------

class NoEligiblePairs(TedlError):
    """No (word, inner unit) pair has traversals on both branches."""
