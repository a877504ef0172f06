"""TEDL: a two-stage symmetric text cipher.

Stage one derives everything from a short key: the key addresses a secret
increment in a shared document store, the increment joins a public corpus,
a de-randomized skip-gram model trains on the result, and the quantized,
hashed vectors become a time-varying codebook.  Stage two is cheap:
encryption is indexing, decryption is inverted indexing, and every use of
a word rotates its hash chain so no symbol ever repeats.
"""

from . import cipher, codebook, corpus, embedding, errors, key, metrics
from .cipher import (
    CiphertextStream,
    RecoveryPolicy,
    SessionState,
    decrypt_message,
    decrypt_symbol,
    encrypt_message,
    encrypt_word,
    recover,
    run_update_barrier,
    seed_update,
    states_mirror,
)
from .codebook import Codebook, HashVector, build_codebook, quantize_dim, vector_to_hashes
from .corpus import (
    DocumentStore,
    SyntheticCorpus,
    UpdateSchedule,
    build_synthetic,
    expand_graph,
    resolve_initial,
    tokenize,
    update_corpus,
)
from .embedding import (
    TrainingConfig,
    Vocabulary,
    WordVectorTable,
    build_huffman,
    build_vocab,
    check_security_conditions,
    cosine_sim,
    init_vectors,
    train_sghs,
)
from .key import DEFAULT_LAYOUT, DerivedParams, Key, KeyLayout, derive_params, parse_key, serialize_key

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
