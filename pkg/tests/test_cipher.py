import random

import pytest

from tedl.cipher import (
    CiphertextStream,
    RecoveryPolicy,
    decrypt_message,
    decrypt_symbol,
    encrypt_message,
    encrypt_word,
    hamming,
    read_ciphertext,
    recover,
    run_update_barrier,
    seed_update,
    states_mirror,
    write_ciphertext,
)
from tedl.errors import (
    AmbiguousHash,
    OutOfVocabulary,
    RecoveryFailed,
    RecoveryTie,
)
from tedl.metrics import flip_bits

from helpers import build_pair, build_state, toy_store
from textgen import generate_tokens

ORIGINAL = generate_tokens(2500, 120, seed=31)


@pytest.fixture(scope="module")
def pair():
    return build_pair(ORIGINAL, toy_store(), address=0, d=10, seed=1)


@pytest.fixture()
def fresh_pair():
    return build_pair(ORIGINAL, toy_store(), address=0, d=10, seed=1)


class TestEncrypt:
    def test_same_word_twice_distinct_symbols(self, fresh_pair):
        sender, _ = fresh_pair
        s1 = encrypt_word(sender, "the")
        s2 = encrypt_word(sender, "the")
        assert s1 != s2

    def test_oov_rejected(self, fresh_pair):
        sender, _ = fresh_pair
        with pytest.raises(OutOfVocabulary):
            encrypt_word(sender, "wordnotincorpus")

    def test_first_symbol_is_build_time_head(self):
        sender = build_state(ORIGINAL, toy_store(), address=0, d=10, seed=1)
        expected = sender.codebook.forward["the"].head()
        assert encrypt_word(sender, "the") == expected

    def test_counter_advances(self, fresh_pair):
        sender, _ = fresh_pair
        before = sender.words_transmitted
        encrypt_word(sender, "of")
        assert sender.words_transmitted == before + 1

    def test_message_oov_checked_before_any_advance(self, fresh_pair):
        sender, _ = fresh_pair
        snap = sender.snapshot()
        with pytest.raises(OutOfVocabulary) as exc:
            encrypt_message(sender, ["the", "of", "zzznotaword"])
        assert exc.value.position == 2
        assert sender.snapshot() == snap  # untouched


class TestDecrypt:
    def test_roundtrip_single(self, fresh_pair):
        sender, receiver = fresh_pair
        sym = encrypt_word(sender, "the")
        word, recovered = decrypt_symbol(receiver, sym)
        assert word == "the" and recovered is False

    def test_one_flipped_bit_recovers(self, fresh_pair):
        sender, receiver = fresh_pair
        sym = encrypt_word(sender, "the")
        tampered = flip_bits(sym, [13])
        word, recovered = decrypt_symbol(receiver, tampered)
        assert word == "the" and recovered is True

    def test_recovery_keeps_states_mirrored(self, fresh_pair):
        sender, receiver = fresh_pair
        sym = encrypt_word(sender, "of")
        decrypt_symbol(receiver, flip_bits(sym, [0, 200, 77]))
        assert states_mirror(sender, receiver)

    def test_ambiguous_exact_hit_reported(self, fresh_pair):
        _, receiver = fresh_pair
        cb = receiver.codebook
        words = sorted(cb.forward)[:2]
        head = cb.forward[words[0]].head()
        # forge a collision state: second word's head duplicates the first
        cb._unindex_head(cb.forward[words[1]].head(), words[1])
        cb.forward[words[1]].loop[0] = head
        cb._index_head(head, words[1])
        with pytest.raises(AmbiguousHash):
            decrypt_symbol(receiver, head)


class TestRecover:
    def test_member_returns_itself(self):
        valid = [bytes([i]) * 32 for i in range(5)]
        h, d = recover(valid[3], valid)
        assert h == valid[3] and d == 0

    def test_singleton_always_wins(self):
        only = bytes(range(32))
        h, d = recover(b"\xff" * 32, [only])
        assert h == only

    def test_tie_raises_under_fail(self):
        a, b = b"\x00" * 32, b"\xff" * 32
        midpoint = (b"\xff" * 16) + (b"\x00" * 16)
        assert hamming(midpoint, a) == hamming(midpoint, b) == 128
        with pytest.raises(RecoveryTie):
            recover(midpoint, [a, b], on_tie="fail")

    def test_tie_lexicographic_picks_smaller(self):
        a, b = b"\x00" * 32, b"\xff" * 32
        midpoint = (b"\xff" * 16) + (b"\x00" * 16)
        h, d = recover(midpoint, [a, b], on_tie="first-lexicographic")
        assert h == a and d == 128

    def test_empty_valid_set_rejected(self):
        with pytest.raises(ValueError):
            recover(b"\x00" * 32, [])

    def test_monte_carlo_matches_exhaustive_oracle(self, pair):
        sender, _ = pair
        cb = sender.codebook
        valid = list(cb.inverse)
        rng = random.Random(55)
        hits = 0
        trials = 300
        for _ in range(trials):
            original = valid[rng.randrange(len(valid))]
            tampered = flip_bits(original, rng.sample(range(256), 20))
            got, dist = recover(tampered, valid, on_tie="first-lexicographic")
            oracle = min(valid, key=lambda h: (hamming(tampered, h), h))
            assert got == oracle
            assert dist == hamming(tampered, oracle)
            hits += got == original
        assert hits >= trials - 1  # 20 flipped bits recover essentially always

    def test_max_distance_policy(self, fresh_pair):
        sender, receiver = fresh_pair
        sym = encrypt_word(sender, "the")
        tampered = flip_bits(sym, list(range(30)))
        with pytest.raises(RecoveryFailed):
            decrypt_symbol(receiver, tampered, RecoveryPolicy(max_distance=10))


class TestMessages:
    def test_roundtrip_long_message(self, fresh_pair):
        sender, receiver = fresh_pair
        vocab = sorted(sender.codebook.forward)
        rng = random.Random(7)
        msg = [vocab[rng.randrange(len(vocab))] for _ in range(2000)]
        stream = encrypt_message(sender, msg)
        words, outcomes = decrypt_message(receiver, stream)
        assert words == msg
        assert not any(o.recovered for o in outcomes)
        assert states_mirror(sender, receiver)

    def test_lightly_tampered_message_fully_recovers(self, fresh_pair):
        sender, receiver = fresh_pair
        vocab = sorted(sender.codebook.forward)
        rng = random.Random(8)
        msg = [vocab[rng.randrange(len(vocab))] for _ in range(500)]
        stream = encrypt_message(sender, msg)
        tampered = []
        flipped_positions = set()
        for i, sym in enumerate(stream):
            if rng.random() < 0.01:
                flipped_positions.add(i)
                sym = flip_bits(sym, rng.sample(range(256), 32))
            tampered.append(sym)
        words, outcomes = decrypt_message(receiver, CiphertextStream(tampered))
        assert words == msg
        assert {o.position for o in outcomes if o.recovered} == flipped_positions

    def test_empty_message(self, fresh_pair):
        sender, receiver = fresh_pair
        stream = encrypt_message(sender, [])
        assert len(stream) == 0
        words, outcomes = decrypt_message(receiver, stream)
        assert words == [] and outcomes == []

    def test_symbols_all_distinct(self, fresh_pair):
        sender, _ = fresh_pair
        vocab = sorted(sender.codebook.forward)
        msg = [vocab[i % len(vocab)] for i in range(1000)]
        stream = encrypt_message(sender, msg)
        assert len({bytes(s) for s in stream}) == len(msg)

    def test_reserved_hashes_never_emitted(self, fresh_pair):
        sender, _ = fresh_pair
        reserved = {hv.reserved for hv in sender.codebook.forward.values()}
        vocab = sorted(sender.codebook.forward)
        msg = [vocab[i % len(vocab)] for i in range(1000)]
        stream = encrypt_message(sender, msg)
        assert all(s not in reserved for s in stream)


class TestBarriers:
    def test_barrier_requires_boundary(self, fresh_pair):
        sender, _ = fresh_pair
        with pytest.raises(ValueError):
            run_update_barrier(sender, store=toy_store())

    def exchange(self, sender, receiver, count):
        vocab = sorted(sender.codebook.forward)
        msg = [vocab[i % 37] for i in range(count)]
        stream = encrypt_message(sender, msg)
        words, _ = decrypt_message(receiver, stream)
        assert words == msg
        return msg

    def test_grow_radius_barrier_mirrors(self, fresh_pair):
        sender, receiver = fresh_pair
        store = toy_store()
        self.exchange(sender, receiver, sender.schedule.interval)
        s2 = run_update_barrier(sender, store=store)
        r2 = run_update_barrier(receiver, store=store)
        assert states_mirror(s2, r2)
        assert s2.corpus.version == 1
        assert s2.corpus.radius == 1
        assert s2.schedule.round == 1
        # still usable after the barrier
        sym = encrypt_word(s2, "the")
        assert decrypt_symbol(r2, sym) == ("the", False)

    def test_transmitted_data_barrier(self, fresh_pair):
        sender, receiver = fresh_pair
        sent = self.exchange(sender, receiver, sender.schedule.interval)
        s2 = run_update_barrier(sender, mode="transmitted-data", transmitted=tuple(sent))
        r2 = run_update_barrier(receiver, mode="transmitted-data", transmitted=tuple(sent))
        assert states_mirror(s2, r2)
        assert s2.corpus.incremental == tuple(sent)

    def test_restoration_at_round_x(self):
        store = toy_store()
        sender, receiver = build_pair(ORIGINAL, store, address=0, d=10, seed=1,
                                      interval=8, restore_every=2,
                                      mode="transmitted-data")
        base = sender.corpus.base
        for round_no in (1, 2):
            sent = self.exchange(sender, receiver, 8)
            sender = run_update_barrier(sender, transmitted=tuple(sent))
            receiver = run_update_barrier(receiver, transmitted=tuple(sent))
            assert states_mirror(sender, receiver)
        assert sender.corpus.version == 2
        assert sender.corpus.original == base  # restored at round 2

    def test_words_counter_carries_over(self, fresh_pair):
        sender, receiver = fresh_pair
        self.exchange(sender, receiver, sender.schedule.interval)
        before = sender.words_transmitted
        s2 = run_update_barrier(sender, store=toy_store())
        assert s2.words_transmitted == before


class TestSeedUpdate:
    def test_equal_codebooks_equal_seeds(self, fresh_pair):
        sender, receiver = fresh_pair
        assert seed_update(sender) == seed_update(receiver)

    def test_new_seed_differs_from_old(self, fresh_pair):
        sender, _ = fresh_pair
        assert seed_update(sender) != sender.training.seed

    def test_seed_comes_from_first_word_reserved(self, fresh_pair):
        sender, _ = fresh_pair
        first = min(sender.codebook.forward)
        expected = int.from_bytes(sender.codebook.forward[first].reserved, "big")
        assert seed_update(sender) == expected

    def test_reseed_barrier_mirrors_and_changes_codebook(self, fresh_pair):
        from tedl.metrics import crc

        sender, receiver = fresh_pair
        store = toy_store()
        vocab = sorted(sender.codebook.forward)
        msg = [vocab[i % 11] for i in range(sender.schedule.interval)]
        stream = encrypt_message(sender, msg)
        decrypt_message(receiver, stream)
        s2 = run_update_barrier(sender, store=store, reseed=True)
        r2 = run_update_barrier(receiver, store=store, reseed=True)
        assert states_mirror(s2, r2)
        assert s2.training.seed != sender.training.seed
        assert s2.snapshot() != sender.snapshot()
        # retraining under the rolled seed rewrites roughly half of every symbol
        shared = [w for w in vocab if w in s2.codebook.forward]
        rates = [
            crc(sender.codebook.forward[w].head(), s2.codebook.forward[w].head())
            for w in shared
        ]
        assert 0.45 <= sum(rates) / len(rates) <= 0.55


class TestCiphertextFiles:
    def test_binary_roundtrip(self, tmp_path, fresh_pair):
        sender, _ = fresh_pair
        stream = encrypt_message(sender, ["the", "of", "and"])
        path = tmp_path / "ct.bin"
        write_ciphertext(path, stream)
        back = read_ciphertext(path)
        assert list(back) == list(stream)

    def test_hex_roundtrip(self, tmp_path, fresh_pair):
        sender, _ = fresh_pair
        stream = encrypt_message(sender, ["the", "of"])
        path = tmp_path / "ct.hex"
        write_ciphertext(path, stream, hex_mode=True)
        text = path.read_text().splitlines()
        assert all(len(line) == 64 for line in text)
        back = read_ciphertext(path, hex_mode=True)
        assert list(back) == list(stream)

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            RecoveryPolicy(max_distance=300)
        with pytest.raises(ValueError):
            RecoveryPolicy(on_tie="guess")
