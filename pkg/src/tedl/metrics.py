"""Desk-scale measurements: recovery rate, correlation, sensitivity, scaling.

Everything reports through MetricsReport so results can be dumped as
line-oriented CSV for external plotting; nothing here draws anything.
"""

from __future__ import annotations

import random
import statistics
import time
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from . import embedding
from .cipher import SYMBOL_BITS, recover
from .codebook import Codebook, build_codebook
from .embedding import HuffmanTree, TrainingConfig, Vocabulary, WordVectorTable, report_sim
from .errors import LengthMismatch, NoEligiblePairs

# ----------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------

@dataclass
class MetricsReport:
    """Named samples plus summary statistics and the config that made them."""

    metric: str
    samples: list[tuple[object, float]] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def values(self) -> list[float]:
        return [v for _, v in self.samples]

    def summarize(self) -> dict:
        vals = self.values()
        if vals:
            qs = statistics.quantiles(vals, n=4) if len(vals) > 1 else [vals[0]] * 3
            self.summary.update(
                count=len(vals),
                mean=statistics.fmean(vals),
                min=min(vals),
                q1=qs[0],
                median=qs[1],
                q3=qs[2],
                max=max(vals),
            )
        else:
            self.summary.update(count=0)
        return self.summary

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("metric,sample_id,value\n")
            for sid, value in self.samples:
                fh.write(f"{self.metric},{sid},{value}\n")


# ----------------------------------------------------------------------
# Bitwise correlation and change rates
# ----------------------------------------------------------------------

def _bit_difference(a: bytes, b: bytes) -> tuple[int, int]:
    if len(a) != len(b):
        raise LengthMismatch(f"length {len(a)} vs {len(b)}")
    diff = (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).bit_count()
    return diff, 8 * len(a)


def correlation_rxy(h_alpha: bytes, h_gamma: bytes) -> float:
    """Fraction of agreeing bits (zeros in the XOR) between two symbols."""
    diff, total = _bit_difference(h_alpha, h_gamma)
    return (total - diff) / total


def crc(h: bytes, h_prime: bytes) -> float:
    """Change rate of ciphertext: fraction of differing bits."""
    diff, total = _bit_difference(h, h_prime)
    return diff / total


def rxy_population(cb_alpha: Codebook, cb_gamma: Codebook, words=None) -> MetricsReport:
    """Per shared word, correlation between the two codebooks' current heads."""
    if words is None:
        words = sorted(set(cb_alpha.forward) & set(cb_gamma.forward))
    report = MetricsReport(metric="rxy", config={"words": len(words)})
    for w in words:
        report.samples.append(
            (w, correlation_rxy(cb_alpha.forward[w].head(), cb_gamma.forward[w].head()))
        )
    report.summarize()
    return report


def crc_population(cb_a: Codebook, cb_b: Codebook, words=None) -> MetricsReport:
    """Per shared word, bit change rate between the two codebooks' heads."""
    if words is None:
        words = sorted(set(cb_a.forward) & set(cb_b.forward))
    report = MetricsReport(metric="crc", config={"words": len(words)})
    for w in words:
        report.samples.append((w, crc(cb_a.forward[w].head(), cb_b.forward[w].head())))
    report.summarize()
    return report


# ----------------------------------------------------------------------
# Tampering experiments
# ----------------------------------------------------------------------

def flip_bits(symbol: bytes, positions) -> bytes:
    """Flip the given bit positions (0 = most significant of byte 0)."""
    value = int.from_bytes(symbol, "big")
    width = 8 * len(symbol)
    for p in positions:
        value ^= 1 << (width - 1 - p)
    return value.to_bytes(len(symbol), "big")


def racr_experiment(cb: Codebook, tamper_bits, samples: int, seed: int = 0) -> MetricsReport:
    """Recovery accuracy rate per tamper level.

    Each trial picks a random word, flips that many distinct random bit
    positions in its current head, and checks whether nearest-valid-hash
    recovery returns the original word.  Chains are not advanced; the
    valid set stays frozen for the whole experiment.
    """
    rng = random.Random(seed)
    words = sorted(cb.forward)
    heads = {w: cb.forward[w].head() for w in words}
    valid = list(cb.inverse.keys())
    report = MetricsReport(
        metric="racr",
        config={"samples": samples, "vocab": len(words), "seed": seed},
    )
    for bits in tamper_bits:
        correct = 0
        for _ in range(samples):
            w = words[rng.randrange(len(words))]
            tampered = flip_bits(heads[w], rng.sample(range(SYMBOL_BITS), bits))
            best, _dist = recover(tampered, valid, on_tie="first-lexicographic")
            if cb.inverse[best] == w:
                correct += 1
        report.samples.append((bits, correct / samples))
    report.summary = {int(b): v for b, v in report.samples}
    return report


def ccs_experiment(cb: Codebook, samples: int, bits: int | None = None,
                   seed: int = 0) -> MetricsReport:
    """Ciphertext change sensitivity: 1 - (tampered hashes still valid)/trials.

    bits=None draws a fresh flip count in [1, 256] per trial.  The summary
    carries the collision bound vocab / 2^256.
    """
    rng = random.Random(seed)
    words = sorted(cb.forward)
    still_valid = 0
    for _ in range(samples):
        w = words[rng.randrange(len(words))]
        k = bits if bits is not None else rng.randint(1, SYMBOL_BITS)
        tampered = flip_bits(cb.forward[w].head(), rng.sample(range(SYMBOL_BITS), k))
        if tampered in cb.inverse or tampered in cb.ambiguous:
            still_valid += 1
    ccs = 1.0 - still_valid / samples
    report = MetricsReport(
        metric="ccs",
        samples=[("ccs", ccs)],
        config={"samples": samples, "bits": bits, "vocab": len(words), "seed": seed},
    )
    report.summary = {
        "ccs": ccs,
        "n_co": still_valid,
        "n_t": samples,
        "collision_bound": len(words) * 2.0 ** -256,
    }
    return report


# ----------------------------------------------------------------------
# Frequency analysis
# ----------------------------------------------------------------------

def frequency_histogram(stream) -> MetricsReport:
    """Symbol counts plus the max-frequency statistic.

    Accepts tokens or 32-byte symbols; an empty stream yields an empty
    report.
    """
    counts = Counter(stream)
    report = MetricsReport(metric="frequency")
    for sym, n in counts.most_common():
        sid = sym.hex() if isinstance(sym, bytes) else sym
        report.samples.append((sid, float(n)))
    total = sum(counts.values())
    report.summary = {
        "total": total,
        "distinct": len(counts),
        "max_count": max(counts.values()) if counts else 0,
        "max_frequency": (max(counts.values()) / total) if total else 0.0,
    }
    return report


# ----------------------------------------------------------------------
# Path counts and the factorization diagnostic
# ----------------------------------------------------------------------

@dataclass
class PathCounts:
    """Left/right traversal counts per (center word, inner unit).

    Built from the same window enumeration the trainer uses, so for every
    center the per-unit total never exceeds the center's pair count.
    """

    left: dict[tuple[int, int], int] = field(default_factory=dict)
    right: dict[tuple[int, int], int] = field(default_factory=dict)
    center_pairs: dict[int, int] = field(default_factory=dict)

    def k_lr(self, word: int, node: int) -> tuple[int, int]:
        key = (word, node)
        return self.left.get(key, 0), self.right.get(key, 0)

    def keys(self):
        return sorted(set(self.left) | set(self.right))


def collect_path_counts(corpus, vocab: Vocabulary, tree: HuffmanTree, window: int) -> PathCounts:
    """Walk every in-window (center, context) pair's Huffman path."""
    ids = [vocab.index[t] for t in corpus]
    pc = PathCounts()
    n = len(ids)
    for t in range(n):
        w = ids[t]
        lo = max(0, t - window)
        hi = min(n - 1, t + window)
        for p in range(lo, hi + 1):
            if p == t:
                continue
            c = ids[p]
            pc.center_pairs[w] = pc.center_pairs.get(w, 0) + 1
            s = int(tree.starts[c])
            for j in range(s, s + int(tree.lens[c])):
                key = (w, int(tree.nodes[j]))
                if tree.labels[j] == 1.0:
                    pc.left[key] = pc.left.get(key, 0) + 1
                else:
                    pc.right[key] = pc.right.get(key, 0) + 1
    return pc


def factorization_residual(table: WordVectorTable, tree: HuffmanTree,
                           counts: PathCounts) -> MetricsReport:
    """|v'_n . v_w - (ln k_l - ln k_r)| over units traversed both ways.

    The gap to the stationary point shrinks as training runs longer, so
    the mean is a convergence diagnostic, not an exact-value check.
    """
    if table.inner is None:
        raise ValueError("table has no inner-unit vectors; train it in-process")
    report = MetricsReport(metric="factorization_residual")
    for (w, node) in counts.keys():
        kl, kr = counts.k_lr(w, node)
        if kl == 0 or kr == 0:
            continue
        target = np.log(kl) - np.log(kr)
        value = float(table.inner[node] @ table.vectors[w])
        report.samples.append(((w, node), abs(value - target)))
    if not report.samples:
        raise NoEligiblePairs("no (word, unit) pair was traversed both ways")
    report.summarize()
    return report


# ----------------------------------------------------------------------
# Similarity sweeps
# ----------------------------------------------------------------------

def sim_table(t_alpha: WordVectorTable, t_gamma: WordVectorTable) -> list[tuple[str, float]]:
    """Per shared word, similarity between the two tables, sorted ascending."""
    shared = sorted(set(t_alpha.words) & set(t_gamma.words))
    sims = [(w, report_sim(embedding.cosine_sim(t_alpha[w], t_gamma[w]))) for w in shared]
    sims.sort(key=lambda kv: (kv[1], kv[0]))
    return sims


def sim_experiments(original, increment_pool, cfg: TrainingConfig,
                    epochs_grid=(1, 2), ratio_grid=(1e-4,),
                    window_pair: tuple[int, int] | None = None) -> dict[str, MetricsReport]:
    """Train the public/secret table pairs over a small config grid.

    ratio values pick how much of increment_pool is appended, measured in
    tokens relative to the original.  window_pair additionally trains the
    original twice with two window sizes and reports that similarity.
    """
    original = tuple(original)
    increment_pool = tuple(increment_pool)
    out: dict[str, MetricsReport] = {}

    def train(tokens, **overrides) -> WordVectorTable:
        c = TrainingConfig(
            d=cfg.d, seed=cfg.seed,
            window=overrides.get("window", cfg.window),
            epochs=overrides.get("epochs", cfg.epochs),
            alpha_start=cfg.alpha_start, alpha_min=cfg.alpha_min,
        )
        vocab = embedding.build_vocab(tokens)
        tree = embedding.build_huffman(vocab)
        return embedding.train_sghs(tokens, vocab, tree, c)

    alphas = {e: train(original, epochs=e) for e in sorted(set(epochs_grid))}
    for epochs in epochs_grid:
        for ratio in ratio_grid:
            take = max(1, round(len(original) * ratio))
            tokens = original + increment_pool[:take]
            gamma = train(tokens, epochs=epochs)
            label = f"sim:epochs={epochs},ratio={ratio:g}"
            report = MetricsReport(
                metric=label,
                samples=list(sim_table(alphas[epochs], gamma)),
                config={"epochs": epochs, "ratio": ratio, "increment_tokens": take},
            )
            report.summarize()
            out[label] = report

    if window_pair is not None:
        w1, w2 = window_pair
        a = train(original, window=w1)
        b = train(original, window=w2)
        label = f"sim_prime:window={w1}vs{w2}"
        report = MetricsReport(
            metric=label,
            samples=list(sim_table(a, b)),
            config={"windows": window_pair},
        )
        report.summarize()
        out[label] = report
    return out


# ----------------------------------------------------------------------
# Scaling and throughput
# ----------------------------------------------------------------------

def linear_r2(xs, ys) -> float:
    """Coefficient of determination of the least-squares line."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    a, b = np.polyfit(xs, ys, 1)
    residuals = ys - (a * xs + b)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - float(np.sum(residuals**2)) / ss_tot


def _stage_one_seconds(tokens, cfg: TrainingConfig) -> float:
    """Wall time of one full first stage: train plus codebook build."""
    vocab = embedding.build_vocab(tokens)
    tree = embedding.build_huffman(vocab)
    t0 = time.perf_counter()
    table = embedding.train_sghs(tokens, vocab, tree, cfg)
    build_codebook(table)
    return time.perf_counter() - t0


def stage_one_scaling(tokens, cfg: TrainingConfig,
                      epochs_grid=(1, 2, 4, 8),
                      d_grid=(50, 100, 200, 400)) -> MetricsReport:
    """Stage-one time versus epochs (fixed d) and versus d (fixed epochs)."""
    tokens = tuple(tokens)
    report = MetricsReport(metric="stage_one_seconds",
                           config={"epochs_grid": list(epochs_grid), "d_grid": list(d_grid)})
    epoch_times = []
    for e in epochs_grid:
        sec = _stage_one_seconds(tokens, replace(cfg, epochs=e))
        epoch_times.append((e, sec))
        report.samples.append((f"epochs={e}", sec))
    d_times = []
    for d in d_grid:
        sec = _stage_one_seconds(tokens, replace(cfg, d=d))
        d_times.append((d, sec))
        report.samples.append((f"d={d}", sec))
    report.summary = {
        "r2_epochs": linear_r2(*zip(*epoch_times)),
        "r2_d": linear_r2(*zip(*d_times)),
    }
    return report


def stage_two_throughput(sender, receiver, words) -> MetricsReport:
    """Encrypt/decrypt words per second through a warm mirrored session."""
    from .cipher import decrypt_message, encrypt_message

    words = list(words)
    t0 = time.perf_counter()
    stream = encrypt_message(sender, words)
    enc = time.perf_counter() - t0
    t0 = time.perf_counter()
    decrypt_message(receiver, stream)
    dec = time.perf_counter() - t0
    report = MetricsReport(
        metric="throughput_wps",
        samples=[("encrypt", len(words) / enc), ("decrypt", len(words) / dec)],
        config={"words": len(words)},
    )
    return report
