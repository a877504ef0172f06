"""Batch command-line surface for the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 crypto/state error, 3 assertion
failure.  TEDL_STORE_ROOT overrides where manifest-relative document
paths resolve.  Codebook state is rewritten after encrypt/decrypt so the
chains keep rotating across process boundaries.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from pathlib import Path

from . import cipher, corpus, embedding, metrics
from . import codebook as codebook_mod
from . import key as key_mod
from .errors import StateDivergence, TedlError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CRYPTO = 2
EXIT_ASSERT = 3

STORE_ROOT_ENV = "TEDL_STORE_ROOT"


class UsageError(Exception):
    pass


class AssertionFailed(Exception):
    """An --assert band was not met; carries metric and band text."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------------
# State directory layout
# ----------------------------------------------------------------------

def _load_store(manifest_path) -> corpus.DocumentStore:
    root = os.environ.get(STORE_ROOT_ENV)
    return corpus.DocumentStore.load(manifest_path, root=root)


def save_state(state_dir, state: cipher.SessionState) -> None:
    state_dir = Path(state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    codebook_mod.write_codebook_file(state_dir / "codebook.bin", state.codebook)
    embedding.save_training_config(state_dir / "config.txt", state.training)
    sc = state.corpus
    corpus.write_tokens(state_dir / "original.tok", sc.original)
    corpus.write_tokens(state_dir / "incremental.tok", sc.incremental)
    corpus.write_tokens(state_dir / "base.tok", sc.base)
    with open(state_dir / "session.txt", "w", encoding="utf-8") as fh:
        sch = state.schedule
        fh.write(f"role={state.role}\n")
        fh.write(f"words_transmitted={state.words_transmitted}\n")
        fh.write(f"version={sc.version}\n")
        fh.write(f"source_address={sc.source_address}\n")
        fh.write(f"radius={sc.radius}\n")
        fh.write(f"interval={sch.interval}\n")
        fh.write(f"round={sch.round}\n")
        fh.write(f"restore_every={sch.restore_every}\n")
        fh.write(f"mode={sch.mode}\n")


def load_state(state_dir) -> cipher.SessionState:
    state_dir = Path(state_dir)
    cb = codebook_mod.read_codebook_file(state_dir / "codebook.bin")
    cfg = embedding.load_training_config(state_dir / "config.txt")
    fields: dict[str, str] = {}
    with open(state_dir / "session.txt", "r", encoding="utf-8") as fh:
        for line in fh:
            name, _, value = line.strip().partition("=")
            fields[name] = value
    sc = corpus.SyntheticCorpus(
        original=corpus.read_tokens(state_dir / "original.tok"),
        incremental=corpus.read_tokens(state_dir / "incremental.tok"),
        base=corpus.read_tokens(state_dir / "base.tok"),
        version=int(fields["version"]),
        source_address=None if fields["source_address"] == "None" else int(fields["source_address"]),
        radius=None if fields["radius"] == "None" else int(fields["radius"]),
    )
    schedule = corpus.UpdateSchedule(
        interval=int(fields["interval"]),
        round=int(fields["round"]),
        restore_every=int(fields["restore_every"]),
        mode=fields["mode"],
    )
    return cipher.SessionState(
        codebook=cb,
        schedule=schedule,
        corpus=sc,
        training=cfg,
        role=fields.get("role", "sender"),
        words_transmitted=int(fields["words_transmitted"]),
    )


def _bare_session(cb: codebook_mod.Codebook) -> cipher.SessionState:
    return cipher.SessionState(codebook=cb)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_keygen(args) -> int:
    try:
        layout = key_mod.KeyLayout.from_string(args.layout)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    k = key_mod.random_key(layout, seed=args.seed)
    key_mod.write_key_file(args.out, k, layout)
    print(f"wrote {layout.total_bits}-bit key to {args.out}")
    return EXIT_OK


def cmd_store_build(args) -> int:
    src = Path(args.dir)
    files = sorted(p.name for p in src.iterdir() if p.is_file())
    address_of = {name: args.base + i for i, name in enumerate(files)}
    edges = []
    if args.edges:
        with open(args.edges, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    a, b = line.split()
                except ValueError:
                    raise UsageError(f"{args.edges}:{lineno}: expected two file names")
                for name in (a, b):
                    if name not in address_of:
                        raise UsageError(f"{args.edges}:{lineno}: {name!r} is not in {args.dir}")
                edges.append((address_of[a], address_of[b]))
    # paths are stored relative to the manifest so the store moves as a unit
    base = Path(args.out).parent
    entries = {
        address_of[name]: os.path.relpath(src / name, start=base) for name in files
    }
    corpus.write_manifest(args.out, entries, edges)
    print(f"wrote manifest with {len(files)} documents, {len(edges)} edges to {args.out}")
    return EXIT_OK


def build_pipeline(key_path, manifest_path, original_path, window: int, epochs: int):
    """Shared stage-one: key -> corpus -> training -> codebook."""
    k, _layout = key_mod.read_key_file(key_path)
    params = key_mod.derive_params(k)
    store = _load_store(manifest_path)
    original = corpus.tokenize(Path(original_path).read_text(encoding="utf-8"))
    initial = corpus.resolve_initial(store, k.n1)
    graph = corpus.expand_graph(store, initial, params.r)
    synthetic = corpus.build_synthetic(original, graph)
    cfg = embedding.TrainingConfig(d=params.d, seed=params.seed, window=window, epochs=epochs)
    t0 = time.perf_counter()
    vocab = embedding.build_vocab(synthetic.tokens)
    tree = embedding.build_huffman(vocab)
    table = embedding.train_sghs(synthetic.tokens, vocab, tree, cfg)
    cb = codebook_mod.build_codebook(table)
    stage_one = time.perf_counter() - t0
    return synthetic, cfg, cb, stage_one


def cmd_build(args) -> int:
    synthetic, cfg, cb, stage_one = build_pipeline(
        args.key, args.store, args.original, args.window, args.epochs
    )
    schedule = corpus.UpdateSchedule(
        interval=args.interval, restore_every=args.restore_every, mode=args.mode
    )
    state = cipher.SessionState(
        codebook=cb, schedule=schedule, corpus=synthetic, training=cfg, role=args.role
    )
    save_state(args.out_dir, state)
    print(f"stage one: {stage_one:.2f} s "
          f"({len(cb)} words, d={cfg.d}, epochs={cfg.epochs})")
    print(f"state written to {args.out_dir}")
    return EXIT_OK


def _rewrite_codebook(path, cb) -> None:
    tmp = str(path) + ".tmp"
    codebook_mod.write_codebook_file(tmp, cb)
    os.replace(tmp, path)


def cmd_encrypt(args) -> int:
    cb = codebook_mod.read_codebook_file(args.codebook)
    state = _bare_session(cb)
    words = corpus.tokenize(Path(args.infile).read_text(encoding="utf-8"))
    stream = cipher.encrypt_message(state, words)
    cipher.write_ciphertext(args.out, stream, hex_mode=args.hex)
    _rewrite_codebook(args.codebook, cb)
    print(f"encrypted {len(words)} words to {args.out}")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    cb = codebook_mod.read_codebook_file(args.codebook)
    state = _bare_session(cb)
    stream = cipher.read_ciphertext(args.infile, hex_mode=args.hex)
    if args.tamper_bits:
        rng = random.Random(args.tamper_seed)
        tampered = []
        for s in stream:
            tampered.append(
                metrics.flip_bits(s, rng.sample(range(cipher.SYMBOL_BITS), args.tamper_bits))
            )
        stream = cipher.CiphertextStream(tampered)
    policy = cipher.RecoveryPolicy(max_distance=args.max_distance, on_tie=args.on_tie)
    words, outcomes = cipher.decrypt_message(state, stream, policy)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(" ".join(w if w is not None else "?" for w in words) + "\n")
    _rewrite_codebook(args.codebook, cb)
    recoveries = [o for o in outcomes if o.recovered]
    failures = [o for o in outcomes if o.error]
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for o in outcomes:
                fh.write(
                    f"{o.position} {o.word or '?'} recovered={int(o.recovered)} "
                    f"distance={o.distance} counter={o.counter}"
                    + (f" error={o.error}" if o.error else "") + "\n"
                )
    print(f"decrypted {len(words)} symbols: {len(recoveries)} recovered, "
          f"{len(failures)} failed")
    return EXIT_CRYPTO if failures else EXIT_OK


def cmd_session(args) -> int:
    states = {"A": load_state(args.state_a), "B": load_state(args.state_b)}
    dirs = {"A": args.state_a, "B": args.state_b}
    store = _load_store(args.store) if args.store else None
    transcript = open(args.transcript, "w", encoding="utf-8") if args.transcript else sys.stdout
    round_words: list[str] = []
    try:
        with open(args.script, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        for line in lines:
            parts = line.split()
            if parts[0] == "SEND":
                who, words = parts[1], parts[2:]
                other = "B" if who == "A" else "A"
                stream = cipher.encrypt_message(states[who], words)
                got, outcomes = cipher.decrypt_message(states[other], stream)
                transcript.write(f"MSG {who}->{other} {len(words)}\n")
                for o in outcomes:
                    transcript.write(f"{o.position} {o.word} {int(o.recovered)} {o.counter}\n")
                if got != words:
                    raise StateDivergence(f"roundtrip mismatch in {line!r}")
                round_words.extend(words)
            elif parts[0] == "BARRIER":
                mode = parts[1] if len(parts) > 1 else None
                reseed = "reseed" in parts[2:]
                for name in ("A", "B"):
                    states[name] = cipher.run_update_barrier(
                        states[name], store=store, mode=mode,
                        transmitted=tuple(round_words) or None, reseed=reseed,
                    )
                round_words = []
                transcript.write(
                    f"BARRIER mode={mode or states['A'].schedule.mode} "
                    f"reseed={int(reseed)} round={states['A'].schedule.round}\n"
                )
            else:
                raise UsageError(f"unknown script line: {line!r}")
            if not cipher.states_mirror(states["A"], states["B"]):
                raise StateDivergence(f"states diverged after {line!r}")
            transcript.write("MIRROR ok\n")
        for name in ("A", "B"):
            save_state(dirs[name], states[name])
    finally:
        if transcript is not sys.stdout:
            transcript.close()
    print("session complete; states mirrored")
    return EXIT_OK


# ----------------------------------------------------------------------
# Eval subcommands
# ----------------------------------------------------------------------

def _band_assert(enabled: bool, ok: bool, metric: str, band: str, value) -> None:
    if enabled and not ok:
        raise AssertionFailed(f"{metric}: value {value} outside band {band}")


def cmd_eval(args) -> int:
    needs = {
        "racr": ("codebook",), "ccs": ("codebook",),
        "rxy": ("codebook_a", "codebook_b"), "crc": ("codebook_a", "codebook_b"),
        "freq": ("infile",),
    }
    for attr in needs[args.metric]:
        if getattr(args, attr) is None:
            flag = "--in" if attr == "infile" else "--" + attr.replace("_", "-")
            raise UsageError(f"eval {args.metric} requires {flag}")
    if args.metric == "racr":
        cb = codebook_mod.read_codebook_file(args.codebook)
        bits = [int(b) for b in args.bits.split(",")]
        report = metrics.racr_experiment(cb, bits, samples=args.samples, seed=args.seed)
        for b, v in report.samples:
            print(f"racr bits={b} {v:.4f}")
        if args.do_assert:
            curve = dict(report.samples)
            for b, v in curve.items():
                if b == 0:
                    _band_assert(True, v == 1.0, "racr", "==1.0 at 0 bits", v)
                elif b <= 64:
                    _band_assert(True, v >= 0.99, "racr", ">=0.99 at <=64 bits", v)
                elif b >= 128:
                    _band_assert(True, v <= 0.05, "racr", "<=0.05 at >=128 bits", v)
            vals = [v for _, v in report.samples]
            _band_assert(True, all(a >= b for a, b in zip(vals, vals[1:])),
                         "racr", "monotone non-increasing", vals)
    elif args.metric == "rxy":
        a = codebook_mod.read_codebook_file(args.codebook_a)
        b = codebook_mod.read_codebook_file(args.codebook_b)
        report = metrics.rxy_population(a, b)
        mean = report.summary["mean"]
        print(f"rxy mean={mean:.5f} over {report.summary['count']} words")
        _band_assert(args.do_assert, 0.49 <= mean <= 0.51, "rxy", "[0.49, 0.51]", mean)
    elif args.metric == "crc":
        a = codebook_mod.read_codebook_file(args.codebook_a)
        b = codebook_mod.read_codebook_file(args.codebook_b)
        report = metrics.crc_population(a, b)
        mean = report.summary["mean"]
        print(f"crc mean={mean:.5f} over {report.summary['count']} words")
        _band_assert(args.do_assert, 0.45 <= mean <= 0.55, "crc", "[0.45, 0.55]", mean)
    elif args.metric == "ccs":
        cb = codebook_mod.read_codebook_file(args.codebook)
        report = metrics.ccs_experiment(cb, samples=args.samples, seed=args.seed)
        ccs = report.summary["ccs"]
        print(f"ccs={ccs} bound={report.summary['collision_bound']:.3e}")
        _band_assert(args.do_assert, ccs == 1.0, "ccs", "==1.0", ccs)
    elif args.metric == "freq":
        if args.ciphertext:
            stream = cipher.read_ciphertext(args.infile, hex_mode=args.hex)
            report = metrics.frequency_histogram(list(stream))
        else:
            report = metrics.frequency_histogram(
                corpus.tokenize(Path(args.infile).read_text(encoding="utf-8"))
            )
        print(f"freq total={report.summary['total']} distinct={report.summary['distinct']} "
              f"max_count={report.summary['max_count']}")
        _band_assert(args.do_assert and args.ciphertext,
                     report.summary["max_count"] <= 1,
                     "freq", "all symbols unique", report.summary["max_count"])
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown metric {args.metric!r}")
    if args.csv:
        report.write_csv(args.csv)
        print(f"csv written to {args.csv}")
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser wiring
# ----------------------------------------------------------------------

def make_parser() -> _Parser:
    parser = _Parser(prog="tedl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key file")
    p.add_argument("--layout", default=str(key_mod.DEFAULT_LAYOUT),
                   help="bit widths x1,x2,x3,x4 (default %(default)s)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="deterministic test entropy (not for production keys)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("store", help="document store tools")
    store_sub = p.add_subparsers(dest="store_command", required=True)
    pb = store_sub.add_parser("build", help="build a manifest from a directory")
    pb.add_argument("--dir", required=True, help="directory of text files")
    pb.add_argument("--edges", default=None,
                    help="file of '<from-file> <to-file>' citation pairs")
    pb.add_argument("--out", required=True)
    pb.add_argument("--base", type=int, default=0, help="first address (default 0)")
    pb.set_defaults(func=cmd_store_build)

    p = sub.add_parser("build", help="stage one: corpus -> training -> codebook")
    p.add_argument("--key", required=True)
    p.add_argument("--store", required=True, help="store manifest path")
    p.add_argument("--original", required=True, help="public corpus text file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--interval", type=int, default=10_000,
                   help="words per update round")
    p.add_argument("--restore-every", type=int, default=4)
    p.add_argument("--mode", default="grow-radius", choices=corpus.UPDATE_MODES)
    p.add_argument("--role", default="sender", choices=("sender", "receiver"))
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("encrypt", help="index words into symbols")
    p.add_argument("--codebook", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hex", action="store_true", help="hex text output")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="invert symbols back to words")
    p.add_argument("--codebook", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hex", action="store_true", help="hex text input")
    p.add_argument("--report", default=None, help="per-symbol outcome file")
    p.add_argument("--max-distance", type=int, default=None)
    p.add_argument("--on-tie", default="fail", choices=("fail", "first-lexicographic"))
    p.add_argument("--tamper-bits", type=int, default=0,
                   help="test flag: flip this many bits per symbol before decrypting")
    p.add_argument("--tamper-seed", type=int, default=0)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("session", help="scripted two-party session with barriers")
    p.add_argument("--state-a", required=True)
    p.add_argument("--state-b", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--store", default=None, help="manifest for grow-radius barriers")
    p.add_argument("--transcript", default=None)
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("eval", help="run a measurement")
    p.add_argument("metric", choices=("racr", "rxy", "crc", "ccs", "freq"))
    p.add_argument("--codebook")
    p.add_argument("--codebook-a")
    p.add_argument("--codebook-b")
    p.add_argument("--in", dest="infile")
    p.add_argument("--ciphertext", action="store_true",
                   help="treat --in as a ciphertext file")
    p.add_argument("--hex", action="store_true")
    p.add_argument("--bits", default="0,16,32,48,64,80,96,112,128,160,192,224,256")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None)
    p.add_argument("--assert", dest="do_assert", action="store_true",
                   help="exit 3 unless the acceptance band is met")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionFailed as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (TedlError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CRYPTO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
