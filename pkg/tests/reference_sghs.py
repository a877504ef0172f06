"""Straight-line pure-Python reference for the training update equations.

Written independently of the package (plain lists and floats, its own
vocabulary sort, tree build, seeding, and update loop) so trainer output
can be checked against a second implementation of the same contract.
"""

import hashlib
import heapq
import math


def ref_vocab(tokens):
    counts = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    order = sorted(counts, key=lambda w: (-counts[w], w))
    return order, [counts[w] for w in order]


def ref_tree(counts):
    """parent/left-flag arrays under (count, creation-index) merging."""
    n = len(counts)
    parent = [-1] * (2 * n - 1)
    left = [False] * (2 * n - 1)
    heap = [(c, i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    nxt = n
    while len(heap) > 1:
        c1, i1 = heapq.heappop(heap)
        c2, i2 = heapq.heappop(heap)
        parent[i1], left[i1] = nxt, True
        parent[i2], left[i2] = nxt, False
        heapq.heappush(heap, (c1 + c2, nxt))
        nxt += 1
    paths, labels = [], []
    for leaf in range(n):
        p, l = [], []
        node = leaf
        while parent[node] != -1:
            p.append(parent[node] - n)
            l.append(1.0 if left[node] else 0.0)
            node = parent[node]
        paths.append(p[::-1])
        labels.append(l[::-1])
    return paths, labels


def ref_seed_vector(word, seed, d):
    base = hashlib.sha256(word.encode() + str(seed).encode()).digest()
    comps = []
    k = 0
    while len(comps) < d:
        block = hashlib.sha256(base + k.to_bytes(8, "big")).digest()
        for off in range(0, 32, 8):
            if len(comps) == d:
                break
            u = int.from_bytes(block[off : off + 8], "big")
            comps.append((u / 2.0**64 - 0.5) / d)
        k += 1
    return comps


def ref_train(tokens, d, seed, window, epochs, alpha_start=0.025, alpha_min=0.0001):
    """Returns (words, syn0, syn1) as plain Python lists."""
    words, counts = ref_vocab(tokens)
    index = {w: i for i, w in enumerate(words)}
    paths, labels = ref_tree(counts)
    syn0 = [ref_seed_vector(w, seed, d) for w in words]
    syn1 = [[0.0] * d for _ in range(len(words) - 1)]
    ids = [index[t] for t in tokens]
    n = len(ids)
    total = float(epochs) * n
    processed = 0
    alpha = alpha_start
    for _ in range(epochs):
        for t in range(n):
            if processed % 10000 == 0:
                a = alpha_start * (1.0 - processed / total)
                alpha = a if a > alpha_min else alpha_min
            w = ids[t]
            lo = max(0, t - window)
            hi = min(n - 1, t + window)
            for p in range(lo, hi + 1):
                if p == t:
                    continue
                c = ids[p]
                neu = [0.0] * d
                for node, label in zip(paths[c], labels[c]):
                    f = 0.0
                    for k in range(d):
                        f += syn1[node][k] * syn0[w][k]
                    if f > 30.0:
                        f = 30.0
                    elif f < -30.0:
                        f = -30.0
                    f = 1.0 / (1.0 + math.exp(-f))
                    g = alpha * (label - f)
                    for k in range(d):
                        neu[k] += g * syn1[node][k]
                    for k in range(d):
                        syn1[node][k] += g * syn0[w][k]
                for k in range(d):
                    syn0[w][k] += neu[k]
            processed += 1
    return words, syn0, syn1
