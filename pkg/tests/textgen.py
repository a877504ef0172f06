"""Deterministic pseudo-natural text and document-store fixtures.

Generated text has a Zipf-like rank-frequency curve over a lexicon that
mixes real function words (including the sensitivity word groups and
their synonyms) with pronounceable synthetic words, so fixtures of any
vocabulary size are reproducible from a seed without shipping megabytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

FUNCTION_WORDS = (
    "the of and to a in is it you that he was for on are as with his they i "
    "at be this have from or one had by but not what all were we when your "
    "can said there use an each which she do how their if will up other "
    "about out many then them these so some her would make like him into "
    "time has two more go see no way could my than first been call who its "
    "now find long down day did get come made may part over new sound take "
    "only little work know place year live me back give most very after "
    "thing our just name good sentence man think say great where help "
    "through much before line right too mean old any same tell boy follow "
    "came want show also around form three small set put end does another "
    "well large must big even such because turn here why ask went men read "
    "need land different home us move try kind hand picture again change "
    "off play spell air away animal house point page letter mother answer "
    "found study still learn should america world"
).split()

# Sensitivity study words: six bases and single-token synonyms.
SENSITIVITY_GROUPS = {
    "people": ["persons", "humans", "individuals", "folk", "humanity", "mankind", "mortals"],
    "female": ["woman", "girl", "lady", "lass"],
    "male": ["masculine", "manly", "macho", "virile", "manlike", "manful"],
    "beautiful": ["attractive", "lovely", "gorgeous", "pretty", "stunning", "handsome"],
    "good": ["fine", "excellent", "splendid", "superb", "decent"],
    "look": ["gaze", "glance", "stare", "view", "watch", "notice"],
}

_ONSETS = "b br c ch cl d dr f fl g gr h j k l m n p pl pr r s sh sk sl sn st str t th tr v w z".split()
_VOWELS = "a e i o u ai ea ee oo ou".split()
_CODAS = " b ck d g k l m n nd ng nt p r rd rk s sh st t x".split()


def _synthetic_word(i: int) -> str:
    """Pronounceable word #i; distinct for every i."""
    parts = []
    n = i
    while True:
        o = n % len(_ONSETS)
        n //= len(_ONSETS)
        v = n % len(_VOWELS)
        n //= len(_VOWELS)
        c = n % len(_CODAS)
        n //= len(_CODAS)
        parts.append(_ONSETS[o] + _VOWELS[v] + _CODAS[c].strip())
        if n == 0:
            break
    return "".join(parts) + ("" if i < len(_ONSETS) * len(_VOWELS) * len(_CODAS) else str(i))


def make_lexicon(size: int) -> list[str]:
    """Function words, then sensitivity words, then synthetic filler."""
    words: list[str] = []
    seen = set()
    for w in FUNCTION_WORDS:
        if w not in seen:
            seen.add(w)
            words.append(w)
    for base, syns in SENSITIVITY_GROUPS.items():
        for w in [base] + syns:
            if w not in seen:
                seen.add(w)
                words.append(w)
    i = 0
    while len(words) < size:
        w = _synthetic_word(i)
        i += 1
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words[:size]


def zipf_weights(n: int, exponent: float = 1.05, shift: float = 2.7) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    w = 1.0 / (ranks + shift) ** exponent
    return w / w.sum()


def generate_tokens(n_tokens: int, vocab_size: int, seed: int,
                    opening: tuple[str, ...] = ()) -> list[str]:
    """Zipf-sampled token stream over a deterministic lexicon.

    `opening` tokens are planted at the very front, the way titles and
    names put rare words at the start of real documents.
    """
    lexicon = make_lexicon(vocab_size)
    rng = np.random.default_rng(seed)
    ids = rng.choice(len(lexicon), size=n_tokens - len(opening), p=zipf_weights(len(lexicon)))
    return list(opening) + [lexicon[i] for i in ids]


def tokens_to_text(tokens, seed: int = 0) -> str:
    """Arrange tokens into capitalized, punctuated sentences.

    The package tokenizer maps the result back to exactly these tokens.
    """
    rng = np.random.default_rng(seed ^ 0x5EA7)
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        length = int(rng.integers(6, 19))
        sent = list(tokens[i : i + length])
        i += length
        sent[0] = sent[0].capitalize()
        if len(sent) > 8:
            comma_at = int(rng.integers(3, len(sent) - 2))
            sent[comma_at] = sent[comma_at] + ","
        out.append(" ".join(sent) + ".")
    return "\n".join(out) + "\n"


def generate_text(n_tokens: int, vocab_size: int, seed: int) -> str:
    return tokens_to_text(generate_tokens(n_tokens, vocab_size, seed), seed=seed)


# ----------------------------------------------------------------------
# Document stores
# ----------------------------------------------------------------------

def layered_store(
    root: Path,
    initial_address: int,
    fanout: int = 4,
    depth: int = 3,
    tokens_per_doc: int = 60,
    vocab_size: int = 400,
    seed: int = 99,
    extra_roots: tuple[int, ...] = (),
) -> Path:
    """Write a citation tree rooted at initial_address plus a manifest.

    Level k documents cite fanout children each at level k+1.  Every
    document's text is distinct.  extra_roots get their own small trees
    (used e.g. for an address one bit away from the real root).
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries: dict[int, str] = {}
    edges: list[tuple[int, int]] = []
    next_addr = [max([initial_address, *extra_roots]) + 1]
    doc_seed = [seed]

    def new_doc(address: int) -> None:
        doc_seed[0] += 1
        text = generate_text(tokens_per_doc, vocab_size, doc_seed[0])
        name = f"doc{address}.txt"
        (root / name).write_text(text, encoding="utf-8")
        entries[address] = name

    def grow(address: int, levels: int) -> None:
        new_doc(address)
        frontier = [address]
        for _ in range(levels):
            nxt = []
            for a in frontier:
                for _ in range(fanout):
                    child = next_addr[0]
                    next_addr[0] += 1
                    new_doc(child)
                    edges.append((a, child))
                    nxt.append(child)
            frontier = nxt

    grow(initial_address, depth)
    for extra in extra_roots:
        grow(extra, min(depth, 1))
    manifest = root / "manifest.txt"
    with open(manifest, "w", encoding="utf-8") as fh:
        for address in sorted(entries):
            fh.write(f"ADDR {address} FILE {entries[address]}\n")
        for a, b in edges:
            fh.write(f"EDGE {a} {b}\n")
    return manifest
