"""Builders shared by the unit and acceptance suites."""

from __future__ import annotations

from tedl import cipher, codebook, corpus, embedding
from tedl.corpus import Document, DocumentStore, UpdateSchedule
from tedl.embedding import TrainingConfig


def train_table(tokens, d=10, seed=1, window=3, epochs=2):
    vocab = embedding.build_vocab(tokens)
    tree = embedding.build_huffman(vocab)
    cfg = TrainingConfig(d=d, seed=seed, window=window, epochs=epochs)
    return embedding.train_sghs(tokens, vocab, tree, cfg), cfg


def build_state(original_tokens, store: DocumentStore, address: int, radius: int = 0,
                d=10, seed=1, window=3, epochs=2, interval=16, restore_every=4,
                mode="grow-radius", splits=(), role="sender"):
    """One party's full session state from first principles."""
    graph = corpus.expand_graph(store, corpus.resolve_initial(store, address), radius)
    synthetic = corpus.build_synthetic(original_tokens, graph)
    table, cfg = train_table(synthetic.tokens, d=d, seed=seed, window=window, epochs=epochs)
    cb = codebook.build_codebook(table)
    schedule = UpdateSchedule(interval=interval, restore_every=restore_every,
                              mode=mode, splits=splits)
    return cipher.SessionState(codebook=cb, schedule=schedule, corpus=synthetic,
                               training=cfg, role=role)


def build_pair(original_tokens, store, address, **kw):
    """Two independently built, mirrored parties."""
    sender = build_state(original_tokens, store, address, role="sender", **kw)
    receiver = build_state(original_tokens, store, address, role="receiver", **kw)
    assert cipher.states_mirror(sender, receiver)
    return sender, receiver


def toy_store():
    """Five documents in a small citation diamond."""
    docs = {
        0: "increment zero body words here",
        1: "first cited text block",
        2: "second cited text block",
        3: "deep reference content page",
        4: "another deep reference page",
    }
    edges = {0: [1, 2], 1: [3], 2: [4], 3: [], 4: []}
    return DocumentStore({a: Document(text=t, edges=edges[a]) for a, t in docs.items()})
