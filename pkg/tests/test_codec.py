import itertools
import random

import numpy as np
import pytest

import oracles
from kfrag import _kernels
from kfrag.codec import (CodecParams, decode_chunks, decode_range,
                         decode_share, defragment, derive_point,
                         encode_chunks, encode_share, fragment,
                         generate_seed)
from kfrag.errors import (InvalidParams, NotEnoughFragments,
                          RangeOutOfBounds, RngFailure)
from kfrag.gf import GF256, GF65536, GFTables, PARAMS_Q8


def test_params_validation():
    CodecParams(k=2, n=2)
    CodecParams(k=255, n=255)
    CodecParams(k=300, n=400, q=16)
    with pytest.raises(InvalidParams):
        CodecParams(k=1, n=1)
    with pytest.raises(InvalidParams):
        CodecParams(k=3, n=2)
    with pytest.raises(InvalidParams):
        CodecParams(k=2, n=256)
    with pytest.raises(InvalidParams):
        CodecParams(k=2, n=2, q=12)
    with pytest.raises(InvalidParams):
        CodecParams(k=2, n=2, block_chunks=-1)


def test_derive_point():
    assert derive_point(1, 0x00) == 0x01
    assert derive_point(5, 0x05) == 0x01
    assert derive_point(2, 0x05) == 0x07
    for j in range(1, 256):
        for prev in (0, 1, j, 255):
            assert derive_point(j, prev) != 0


def test_encode_share_frozen_values():
    assert encode_share(0x41, (0x03, 0x05), 2) == 0x48
    assert encode_share(0x10, (0x02, 0x00, 0x01), 1) == 0x15
    assert decode_share(0x48, (0x03, 0x05), 2) == 0x41


def test_encode_share_zero_prev_is_identity(rng):
    for _ in range(50):
        c = rng.randrange(256)
        k = rng.randrange(2, 9)
        j = rng.randrange(1, k + 1)
        assert encode_share(c, (0,) * k, j) == c
        assert decode_share(c, (0,) * k, j) == c


def test_encode_share_against_power_sum_oracle(rng):
    for _ in range(2000):
        k = rng.randrange(2, 9)
        prev = tuple(rng.randrange(256) for _ in range(k))
        j = rng.randrange(1, k + 1)
        c = rng.randrange(256)
        assert encode_share(c, prev, j) == oracles.encode_oracle(c, prev, j)


def test_involution_sampled(rng):
    for _ in range(5000):
        k = rng.randrange(2, 12)
        prev = tuple(rng.randrange(256) for _ in range(k))
        j = rng.randrange(1, k + 1)
        c = rng.randrange(256)
        assert decode_share(encode_share(c, prev, j), prev, j) == c


def test_share_args_validated():
    with pytest.raises(InvalidParams):
        encode_share(1, (5,), 1)
    with pytest.raises(InvalidParams):
        encode_share(1, (5, 6), 0)
    with pytest.raises(InvalidParams):
        decode_share(1, (5, 6), 3)


class CountingField(GFTables):
    def __init__(self):
        super().__init__(PARAMS_Q8)
        self.mul_calls = 0

    def mul(self, a, b):
        self.mul_calls += 1
        return super().mul(a, b)


@pytest.mark.parametrize("k", [2, 3, 5, 10, 20])
def test_encode_uses_exactly_k_minus_1_multiplications(k, rng):
    field = CountingField()
    prev = tuple(rng.randrange(256) for _ in range(k))
    field.mul_calls = 0
    encode_share(rng.randrange(256), prev, rng.randrange(1, k + 1), field)
    assert field.mul_calls == k - 1


def test_kernel_matches_scalar_reference(rng):
    for q, field in ((8, GF256), (16, GF65536)):
        top = 1 << q
        m, k = 40, 5
        chunks = np.array([[rng.randrange(top) for _ in range(k)]
                           for _ in range(m)], dtype=np.int64)
        seed = np.array([rng.randrange(top) for _ in range(k)],
                        dtype=np.int64)
        out = np.empty_like(chunks)
        _kernels.encode_chain(chunks, seed, field.exp, field.log, out)
        prev = [int(v) for v in seed]
        for i in range(m):
            row = [encode_share(int(chunks[i, j - 1]), prev, j, field)
                   for j in range(1, k + 1)]
            assert row == [int(v) for v in out[i]]
            prev = row
        back = np.empty_like(out)
        _kernels.decode_chain(out, seed, field.exp, field.log, back)
        assert np.array_equal(back, chunks)


def test_chain_mutation_changes_downstream_decode(rng):
    # altering one stored share must corrupt at least one chunk of the
    # next row's decode
    k = 4
    field = GF256
    for _ in range(50):
        prev = [rng.randrange(256) for _ in range(k)]
        row = [rng.randrange(256) for _ in range(k)]
        shares = [encode_share(row[j - 1], prev, j, field)
                  for j in range(1, k + 1)]
        tampered = list(prev)
        pos = rng.randrange(k)
        tampered[pos] ^= rng.randrange(1, 256)
        decoded = [decode_share(shares[j - 1], tampered, j, field)
                   for j in range(1, k + 1)]
        assert decoded != row


def test_generate_seed_shape_and_range(rng):
    params = CodecParams(k=5, n=5)
    seed = generate_seed(params, rng)
    assert len(seed) == 5
    assert all(0 <= v < 256 for v in seed)
    seed16 = generate_seed(CodecParams(k=3, n=3, q=16), rng)
    assert all(0 <= v < 65536 for v in seed16)


def test_generate_seed_failure_paths():
    class Broken:
        def randrange(self, n):
            raise OSError("entropy pool empty")

    class OutOfRange:
        def randrange(self, n):
            return n

    with pytest.raises(RngFailure):
        generate_seed(CodecParams(k=2, n=2), Broken())
    with pytest.raises(RngFailure):
        generate_seed(CodecParams(k=2, n=2), OutOfRange())


def test_fragment_payload_sizes(rng):
    data = bytes(rng.randrange(256) for _ in range(9000))
    frags = fragment(data, CodecParams(k=3, n=3), rng=rng)
    assert [len(f.payload) for f in frags] == [3001, 3001, 3001]
    frags = fragment(b"", CodecParams(k=2, n=2), rng=rng)
    assert [len(f.payload) for f in frags] == [1, 1]
    assert defragment(frags) == b""


def test_fragment_roundtrip_all_subsets(rng):
    data = bytes(rng.randrange(256) for _ in range(997))
    params = CodecParams(k=3, n=5)
    frags = fragment(data, params, rng=rng)
    for subset in itertools.combinations(frags, 3):
        assert defragment(list(subset)) == data


def test_fragment_threshold(rng):
    data = bytes(rng.randrange(256) for _ in range(100))
    frags = fragment(data, CodecParams(k=3, n=4), rng=rng)
    with pytest.raises(NotEnoughFragments):
        defragment(frags[:2])


def test_fragment_q16_odd_length(rng):
    data = bytes(rng.randrange(256) for _ in range(1001))
    params = CodecParams(k=4, n=6, q=16)
    frags = fragment(data, params, rng=rng)
    # 1001 bytes -> 501 chunks -> 126 rows -> (126 + 1) * 2 bytes
    assert all(len(f.payload) == 254 for f in frags)
    assert defragment([frags[5], frags[1], frags[3], frags[0]]) == data


def test_fragment_block_mode_layout(rng):
    data = bytes(rng.randrange(256) for _ in range(1000))
    params = CodecParams(k=2, n=2, block_chunks=200)
    frags = fragment(data, params, rng=rng)
    # 500 rows -> blocks of 200/200/100 -> payload (500 + 3) bytes
    assert all(len(f.payload) == 503 for f in frags)
    assert defragment(frags) == data


def test_block_count_edges(rng):
    # block_chunks larger than the row count collapses to one block
    data = bytes(rng.randrange(256) for _ in range(40))
    frags = fragment(data, CodecParams(k=2, n=2, block_chunks=1000),
                     rng=rng)
    assert all(len(f.payload) == 21 for f in frags)
    # exact division leaves no short tail block
    frags = fragment(data, CodecParams(k=2, n=2, block_chunks=10), rng=rng)
    assert all(len(f.payload) == 22 for f in frags)
    assert defragment(frags) == data


def test_threads_do_not_change_output():
    data = bytes(random.Random(5).randrange(256) for _ in range(5000))
    params = CodecParams(k=3, n=4, block_chunks=64)
    one = fragment(data, params, rng=random.Random(99), threads=1)
    four = fragment(data, params, rng=random.Random(99), threads=4)
    assert [f.payload for f in one] == [f.payload for f in four]
    assert [f.header.run_id for f in one] == [f.header.run_id for f in four]
    assert defragment(one[:3], threads=4) == data


def test_fresh_seeds_make_distinct_fragments(rng):
    data = b"identical plaintext, repeated" * 10
    params = CodecParams(k=2, n=2)
    a = fragment(data, params, rng=rng)
    b = fragment(data, params, rng=rng)
    assert a[0].payload != b[0].payload
    assert a[0].header.run_id != b[0].header.run_id


def test_encode_chunks_explicit_seeds_roundtrip(rng):
    data = bytes(rng.randrange(256) for _ in range(640))
    params = CodecParams(k=4, n=4, block_chunks=50)
    seeds = [tuple(rng.randrange(256) for _ in range(4)) for _ in range(4)]
    shares, used = encode_chunks(data, params, seeds=seeds)
    assert used == seeds
    padded = decode_chunks(shares, seeds, params)
    assert padded[:len(data)] == data
    with pytest.raises(InvalidParams):
        encode_chunks(data, params, seeds=seeds[:2])


def test_decode_range_matches_full_output(rng):
    data = bytes(rng.randrange(256) for _ in range(4096))
    for params in (CodecParams(k=3, n=5),
                   CodecParams(k=2, n=3, q=16, block_chunks=100)):
        frags = fragment(data, params, rng=rng)
        full = defragment(frags[:params.k])
        assert full == data
        for _ in range(25):
            off = rng.randrange(len(data))
            ln = rng.randrange(0, len(data) - off + 1)
            assert decode_range(frags[:params.k], off, ln) == \
                data[off:off + ln]
        # whole-range case and single chunk rows
        assert decode_range(frags[:params.k], 0, len(data)) == data
        w = params.w
        assert decode_range(frags[:params.k], params.k * w, w) == \
            data[params.k * w:params.k * w + w]


def test_decode_range_from_redundant_fragments(rng):
    data = bytes(rng.randrange(256) for _ in range(512))
    frags = fragment(data, CodecParams(k=2, n=4), rng=rng)
    assert decode_range([frags[1], frags[3]], 100, 64) == data[100:164]


def test_decode_range_bounds(rng):
    data = bytes(rng.randrange(256) for _ in range(100))
    frags = fragment(data, CodecParams(k=2, n=2), rng=rng)
    assert decode_range(frags, 0, 0) == b""
    with pytest.raises(RangeOutOfBounds):
        decode_range(frags, 100, 1)
    with pytest.raises(RangeOutOfBounds):
        decode_range(frags, 90, 11)
    with pytest.raises(RangeOutOfBounds):
        decode_range(frags, -1, 5)


def test_padding_stripped_every_residue(rng):
    params = CodecParams(k=3, n=3)
    for size in range(0, 10):
        data = bytes(rng.randrange(256) for _ in range(size))
        assert defragment(fragment(data, params, rng=rng)) == data
