"""Deterministic skip-gram hierarchical-softmax training.

Everything here is de-randomized: vocabulary order is a fixed sort, the
Huffman tree breaks ties by creation index, leaf vectors are seeded from
SHA-256 of (word, seed), the window never shrinks, there is no negative
sampling or subsampling, and the update loop runs on a single thread in
a fixed order.  Two runs on the same platform produce bit-identical
tables; that property is what lets two parties grow identical codebooks
from a shared key.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    DegenerateVocab,
    EmptyCorpus,
    NonFiniteUpdate,
    WordMissing,
    ZeroVector,
)

logger = logging.getLogger(__name__)

VEC_MAGIC = "TEDL-VEC v1"

# Sigmoid inputs are clamped here; beyond it the output saturates.
MAX_SIGMOID_INPUT = 30.0

# Learning rate is recomputed once per this many processed tokens.
ALPHA_UPDATE_EVERY = 10_000

# Similarity values are reported at this resolution.  Words whose vectors
# barely moved during a single early pass sit within ~1e-9 of full
# correlation, while genuinely diverged vectors stay at least ~1e-6 away,
# so eight decimals cleanly separates "still the seeded vector" from
# "perturbed".
SIM_REPORT_DECIMALS = 8


def sigmoid(x: float) -> float:
    """Clamped logistic function used by training and probability checks."""
    if x > MAX_SIGMOID_INPUT:
        x = MAX_SIGMOID_INPUT
    elif x < -MAX_SIGMOID_INPUT:
        x = -MAX_SIGMOID_INPUT
    return 1.0 / (1.0 + math.exp(-x))


# ----------------------------------------------------------------------
# Vocabulary
# ----------------------------------------------------------------------

@dataclass
class Vocabulary:
    """Words ordered by (count desc, word asc); rank is the stable id."""

    entries: list[tuple[str, int]]
    index: dict[str, int] = field(repr=False)

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.entries]

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.index


def build_vocab(corpus) -> Vocabulary:
    """Count every distinct token; nothing is dropped (min count 1).

    Every plaintext word must stay encryptable, so there is no frequency
    floor.
    """
    counts = Counter(corpus)
    if not counts:
        raise EmptyCorpus("cannot build a vocabulary from an empty stream")
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    index = {w: i for i, (w, _) in enumerate(entries)}
    return Vocabulary(entries=entries, index=index)


# ----------------------------------------------------------------------
# Huffman tree
# ----------------------------------------------------------------------

@dataclass(eq=False)
class HuffmanTree:
    """Paths from the root to every leaf, flattened for the update kernel.

    Inner units are numbered 0..len(vocab)-2 in merge order.  For leaf i,
    nodes[starts[i] : starts[i]+lens[i]] lists the inner units from the
    root down to the leaf's parent, and labels[...] is 1.0 where the path
    continues into the left child, 0.0 where it goes right.
    """

    inner_count: int
    starts: np.ndarray
    lens: np.ndarray
    nodes: np.ndarray
    labels: np.ndarray

    def path(self, leaf: int) -> list[int]:
        s = int(self.starts[leaf])
        return list(self.nodes[s : s + int(self.lens[leaf])])

    def path_labels(self, leaf: int) -> list[float]:
        s = int(self.starts[leaf])
        return list(self.labels[s : s + int(self.lens[leaf])])

    def path_signs(self, leaf: int) -> list[int]:
        return [1 if l == 1.0 else -1 for l in self.path_labels(leaf)]

    def code_len(self, leaf: int) -> int:
        return int(self.lens[leaf])


def build_huffman(vocab: Vocabulary) -> HuffmanTree:
    """Merge the two lowest-count nodes repeatedly, first-merged as left child.

    Ties are broken by creation index (leaves in vocabulary order first,
    then inner units in merge order), which pins the tree shape exactly.
    """
    n = len(vocab)
    if n < 2:
        raise DegenerateVocab("need at least two words to build a tree")
    heap: list[tuple[int, int]] = [(c, i) for i, c in enumerate(vocab.counts)]
    heapq.heapify(heap)
    parent = [-1] * (2 * n - 1)
    goes_left = [False] * (2 * n - 1)
    nxt = n
    while len(heap) > 1:
        c1, i1 = heapq.heappop(heap)
        c2, i2 = heapq.heappop(heap)
        parent[i1] = nxt
        goes_left[i1] = True
        parent[i2] = nxt
        goes_left[i2] = False
        heapq.heappush(heap, (c1 + c2, nxt))
        nxt += 1

    starts = np.zeros(n, dtype=np.int64)
    lens = np.zeros(n, dtype=np.int32)
    flat_nodes: list[int] = []
    flat_labels: list[float] = []
    for leaf in range(n):
        path: list[int] = []
        labels: list[float] = []
        node = leaf
        while parent[node] != -1:
            path.append(parent[node] - n)
            labels.append(1.0 if goes_left[node] else 0.0)
            node = parent[node]
        path.reverse()
        labels.reverse()
        starts[leaf] = len(flat_nodes)
        lens[leaf] = len(path)
        flat_nodes.extend(path)
        flat_labels.extend(labels)
    return HuffmanTree(
        inner_count=n - 1,
        starts=starts,
        lens=lens,
        nodes=np.asarray(flat_nodes, dtype=np.int32),
        labels=np.asarray(flat_labels, dtype=np.float64),
    )


def leaf_probabilities(tree: HuffmanTree, inner_vectors: np.ndarray, word_vector: np.ndarray) -> np.ndarray:
    """P(output = leaf | word) for every leaf; sums to one over the tree."""
    n = len(tree.starts)
    out = np.empty(n)
    for leaf in range(n):
        p = 1.0
        path = tree.path(leaf)
        for node, label in zip(path, tree.path_labels(leaf)):
            x = float(inner_vectors[node] @ word_vector)
            p *= sigmoid(x) if label == 1.0 else sigmoid(-x)
        out[leaf] = p
    return out


# ----------------------------------------------------------------------
# Vector tables
# ----------------------------------------------------------------------

@dataclass(eq=False)
class WordVectorTable:
    """word -> dense float64 vector, plus the config that produced it.

    `inner` keeps the trained inner-unit vectors; they never leave the
    machine (not serialized) but the factorization diagnostics need them.
    """

    words: tuple[str, ...]
    vectors: np.ndarray
    params: dict
    inner: np.ndarray | None = None
    _index: dict[str, int] = field(default=None, repr=False)

    def __post_init__(self):
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.words)}

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __getitem__(self, word: str) -> np.ndarray:
        try:
            return self.vectors[self._index[word]]
        except KeyError:
            raise WordMissing(word) from None

    def rank(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise WordMissing(word) from None


@dataclass
class TrainingConfig:
    """Algorithm-level hyperparameters; only d and seed come from the key."""

    d: int
    seed: int
    window: int = 5
    epochs: int = 2
    alpha_start: float = 0.025
    alpha_min: float = 0.0001

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if not (self.alpha_start > self.alpha_min > 0):
            raise ValueError("need alpha_start > alpha_min > 0")
        if self.epochs == 1:
            logger.warning(
                "epochs=1 leaves early words' vectors at their seeded values; "
                "similarity to the public table can reach 1.0"
            )


def seeded_vector(word: str, seed: int, d: int) -> np.ndarray:
    """Expand SHA-256(word || str(seed)) in counter mode into d components.

    Each 8-byte big-endian chunk u becomes (u / 2^64 - 0.5) / d, the usual
    +-0.5/d init range.
    """
    base = hashlib.sha256(word.encode("utf-8") + str(seed).encode("utf-8")).digest()
    comps = np.empty(d)
    i = 0
    k = 0
    while i < d:
        block = hashlib.sha256(base + k.to_bytes(8, "big")).digest()
        for off in range(0, 32, 8):
            if i == d:
                break
            u = int.from_bytes(block[off : off + 8], "big")
            comps[i] = (u / 2.0**64 - 0.5) / d
            i += 1
        k += 1
    return comps


def init_vectors(vocab: Vocabulary, seed: int, d: int) -> WordVectorTable:
    """Seeded leaf vectors; inner-unit vectors start at zero."""
    mat = np.empty((len(vocab), d))
    for i, word in enumerate(vocab.words):
        mat[i] = seeded_vector(word, seed, d)
    inner = np.zeros((max(len(vocab) - 1, 1), d))
    return WordVectorTable(
        words=tuple(vocab.words),
        vectors=mat,
        params={"d": d, "seed": seed},
        inner=inner,
    )


# ----------------------------------------------------------------------
# Training
# ----------------------------------------------------------------------

@njit(cache=True, fastmath=False)
def _sghs_kernel(ids, syn0, syn1, starts, lens, nodes, labels,
                 window, epochs, alpha_start, alpha_min):  # pragma: no cover
    n = ids.shape[0]
    d = syn0.shape[1]
    total = float(epochs) * n
    processed = 0
    alpha = alpha_start
    neu = np.zeros(d)
    for _epoch in range(epochs):
        for t in range(n):
            if processed % ALPHA_UPDATE_EVERY == 0:
                a = alpha_start * (1.0 - processed / total)
                alpha = a if a > alpha_min else alpha_min
            w = ids[t]
            lo = t - window
            if lo < 0:
                lo = 0
            hi = t + window
            if hi > n - 1:
                hi = n - 1
            for p in range(lo, hi + 1):
                if p == t:
                    continue
                c = ids[p]
                for k in range(d):
                    neu[k] = 0.0
                s = starts[c]
                e = s + lens[c]
                for j in range(s, e):
                    nd = nodes[j]
                    f = 0.0
                    for k in range(d):
                        f += syn1[nd, k] * syn0[w, k]
                    if f != f:
                        return 1
                    if f > MAX_SIGMOID_INPUT:
                        f = MAX_SIGMOID_INPUT
                    elif f < -MAX_SIGMOID_INPUT:
                        f = -MAX_SIGMOID_INPUT
                    f = 1.0 / (1.0 + np.exp(-f))
                    g = alpha * (labels[j] - f)
                    for k in range(d):
                        neu[k] += g * syn1[nd, k]
                    for k in range(d):
                        syn1[nd, k] += g * syn0[w, k]
                for k in range(d):
                    syn0[w, k] += neu[k]
            processed += 1
    return 0


def train_sghs(corpus, vocab: Vocabulary, tree: HuffmanTree, cfg: TrainingConfig) -> WordVectorTable:
    """Train word vectors by walking each context word's Huffman path.

    For every center position and every offset in the fixed window, each
    inner unit j on the context's path contributes f = sigmoid(v'_j . v_w)
    and g = alpha * (label_j - f); v'_j moves by g * v_w in path order and
    the accumulated error moves v_w after the path.  alpha decays linearly
    to its floor, recomputed every 10 000 tokens.  Single worker thread
    only; the output is a pure function of (corpus, config) on a platform.
    """
    corpus = list(corpus) if not isinstance(corpus, (list, tuple)) else corpus
    if not corpus:
        raise EmptyCorpus("cannot train on an empty stream")
    table = init_vectors(vocab, cfg.seed, cfg.d)
    index = vocab.index
    ids = np.fromiter((index[t] for t in corpus), np.int32, count=len(corpus))
    syn0 = table.vectors
    syn1 = table.inner
    rc = _sghs_kernel(
        ids, syn0, syn1,
        tree.starts, tree.lens, tree.nodes, tree.labels,
        cfg.window, cfg.epochs, cfg.alpha_start, cfg.alpha_min,
    )
    if rc != 0 or not np.isfinite(syn0).all() or not np.isfinite(syn1).all():
        raise NonFiniteUpdate("training produced a non-finite value")
    table.params.update(
        window=cfg.window, epochs=cfg.epochs,
        alpha_start=cfg.alpha_start, alpha_min=cfg.alpha_min,
    )
    return table


# ----------------------------------------------------------------------
# Similarity and security conditions
# ----------------------------------------------------------------------

def cosine_sim(u, v) -> float:
    """Cosine of the angle between two non-zero vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    uu = float(u @ u)
    vv = float(v @ v)
    if uu == 0.0 or vv == 0.0:
        raise ZeroVector("cosine similarity needs non-zero vectors")
    r = float(u @ v) / math.sqrt(uu * vv)
    return max(-1.0, min(1.0, r))


def report_sim(value: float) -> float:
    """Round a similarity to the fixed reporting resolution."""
    return round(value, SIM_REPORT_DECIMALS)


def nearest_neighbors(table: WordVectorTable, word: str, count: int) -> list[tuple[str, float]]:
    """The `count` most similar other words, ordered by similarity desc.

    Ties are broken lexicographically so rankings are reproducible.
    """
    target = table[word]
    mat = table.vectors
    norms = np.sqrt(np.einsum("ij,ij->i", mat, mat))
    tn = math.sqrt(float(target @ target))
    if tn == 0.0:
        raise ZeroVector(word)
    sims = (mat @ target) / (norms * tn)
    sims = np.clip(sims, -1.0, 1.0)
    order = sorted(
        (i for i in range(len(table)) if table.words[i] != word),
        key=lambda i: (-sims[i], table.words[i]),
    )
    return [(table.words[i], float(sims[i])) for i in order[:count]]


@dataclass
class SecurityReport:
    """Per-word outcome of the two similarity conditions."""

    word: str
    sim_xx: float
    nth_neighbor: str
    sim_xy_n: float
    condition1: bool
    condition2: bool


def check_security_conditions(
    t_alpha: WordVectorTable,
    t_gamma: WordVectorTable,
    limit_xx: float = 0.5,
    limit_xy: int = 10,
    words=None,
) -> list[SecurityReport]:
    """Evaluate both leakage conditions for each word.

    Condition 1: similarity between the word's public-table and
    secret-table vectors stays below limit_xx.  Condition 2: that
    similarity is smaller than the word's similarity to its limit_xy-th
    nearest neighbor in the public table.  If the vocabulary is too small
    to have limit_xy neighbors, the weakest available neighbor is used.

    Neighbor ranking costs one pass over the table per word; pass an
    explicit word list when auditing a large vocabulary.
    """
    if words is None:
        words = sorted(set(t_alpha.words) & set(t_gamma.words))
        if not words:
            raise WordMissing("tables share no vocabulary")
    reports = []
    for w in words:
        sim_xx = cosine_sim(t_alpha[w], t_gamma[w])  # raises WordMissing if absent
        neigh = nearest_neighbors(t_alpha, w, limit_xy)
        if not neigh:
            raise DegenerateVocab("no neighbors available")
        nth_word, sim_xy_n = neigh[min(limit_xy, len(neigh)) - 1]
        reports.append(
            SecurityReport(
                word=w,
                sim_xx=report_sim(sim_xx),
                nth_neighbor=nth_word,
                sim_xy_n=report_sim(sim_xy_n),
                condition1=sim_xx < limit_xx,
                condition2=sim_xx < sim_xy_n,
            )
        )
    return reports


# ----------------------------------------------------------------------
# File formats
# ----------------------------------------------------------------------

def write_vec_file(path, table: WordVectorTable) -> None:
    """Header line, then per word: the word, newline, d little-endian doubles."""
    with open(path, "wb") as fh:
        fh.write(f"{VEC_MAGIC} {len(table)} {table.d}\n".encode("utf-8"))
        for i, word in enumerate(table.words):
            fh.write(word.encode("utf-8") + b"\n")
            fh.write(table.vectors[i].astype("<f8").tobytes())


def read_vec_file(path) -> WordVectorTable:
    with open(path, "rb") as fh:
        header = fh.readline().decode("utf-8").strip()
        parts = header.split()
        if " ".join(parts[:2]) != VEC_MAGIC or len(parts) != 4:
            raise ValueError(f"bad vector file header: {header!r}")
        count, d = int(parts[2]), int(parts[3])
        words = []
        mat = np.empty((count, d))
        for i in range(count):
            word = fh.readline()
            if not word.endswith(b"\n"):
                raise ValueError("truncated vector file")
            words.append(word[:-1].decode("utf-8"))
            raw = fh.read(8 * d)
            if len(raw) != 8 * d:
                raise ValueError("truncated vector file")
            mat[i] = np.frombuffer(raw, dtype="<f8")
    return WordVectorTable(words=tuple(words), vectors=mat, params={"d": d})


def save_training_config(path, cfg: TrainingConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in ("d", "seed", "window", "epochs", "alpha_start", "alpha_min"):
            fh.write(f"{name}={getattr(cfg, name)}\n")


def load_training_config(path) -> TrainingConfig:
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, _, value = line.partition("=")
            raw[name.strip()] = value.strip()
    return TrainingConfig(
        d=int(raw["d"]),
        seed=int(raw["seed"]),
        window=int(raw.get("window", 5)),
        epochs=int(raw.get("epochs", 2)),
        alpha_start=float(raw.get("alpha_start", 0.025)),
        alpha_min=float(raw.get("alpha_min", 0.0001)),
    )
