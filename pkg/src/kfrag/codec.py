"""Chained share encoding: chunking, seeds, fragments, recovery.

Data is cut into w-byte chunks, grouped into rows of k (one DataChunkSet
per row), and encoded row by row. Row i is masked using row i-1's
encoded output; row -1 is a fresh random seed. Chunk j of a row becomes
the constant term of a degree-(k-1) polynomial whose other coefficients
are the previous row's other k-1 shares, evaluated at a point derived
from the previous share in the same column. Decoding rebuilds the same
mask from stored shares, so any row can be decoded knowing only its
predecessor.

Share j of every row lands in fragment j, so no fragment ever holds two
shares of one row. Fragments k+1..n are Reed-Solomon extensions computed
in `redundancy`.
"""

import math
import secrets
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import container
from ._kernels import decode_chain, encode_chain
from .container import Fragment, FragmentHeader, block_rows, payload_layout
from .errors import (InvalidParams, NotEnoughFragments, RangeOutOfBounds,
                     RngFailure)
from .gf import GF256, GFTables, field_for
from .redundancy import rs_extend, rs_reconstruct

RUN_ID_BYTES = 16


@dataclass(frozen=True)
class CodecParams:
    """Fragmentation parameters.

    k: fragments required for recovery (each row splits into k shares).
    n: total fragments written, n - k of them redundant.
    q: field width in bits, 8 or 16.
    block_chunks: rows per independently-seeded block; 0 means one block.
    """

    k: int
    n: int
    q: int = 8
    block_chunks: int = 0

    def __post_init__(self):
        if self.q not in (8, 16):
            raise InvalidParams(f"q must be 8 or 16, got {self.q}")
        if self.k < 2:
            raise InvalidParams(f"k must be at least 2, got {self.k}")
        if self.n < self.k:
            raise InvalidParams(f"n ({self.n}) must be >= k ({self.k})")
        if self.n > (1 << self.q) - 1:
            raise InvalidParams(
                f"n ({self.n}) exceeds the {(1 << self.q) - 1} distinct "
                f"evaluation points of GF(2^{self.q})")
        if self.k >= (1 << self.q):
            raise InvalidParams("k must fit in a field element")
        if self.block_chunks < 0:
            raise InvalidParams("block_chunks must be >= 0")

    @property
    def field(self) -> GFTables:
        return field_for(self.q)

    @property
    def w(self) -> int:
        return self.q // 8


def generate_seed(params: CodecParams, rng) -> Tuple[int, ...]:
    """Draw k fresh uniform field elements to bootstrap one chain."""
    bound = 1 << params.q
    try:
        values = tuple(rng.randrange(bound) for _ in range(params.k))
    except Exception as exc:
        raise RngFailure(f"random source failed: {exc}") from exc
    if any(not (0 <= v < bound) for v in values):
        raise RngFailure("random source returned out-of-range value")
    return values


def derive_point(j: int, prev_share: int) -> int:
    """Evaluation point for column j given the previous share there.

    Never returns 0: the constant term sits at x=0, so evaluating there
    would leak the chunk unmasked.
    """
    x = j ^ prev_share
    return x if x != 0 else 1


def _mask(prev: Sequence[int], j: int, field: GFTables) -> int:
    # exactly k-1 multiplications: k-2 Horner steps plus the final lift
    # (every term has degree >= 1)
    k = len(prev)
    x = derive_point(j, prev[j - 1])
    coeffs = [prev[t] for t in range(k) if t != j - 1]
    acc = coeffs[-1]
    for t in range(len(coeffs) - 2, -1, -1):
        acc = field.mul(acc, x) ^ coeffs[t]
    return field.mul(acc, x)


def encode_share(chunk: int, prev: Sequence[int], j: int,
                 field: GFTables = GF256) -> int:
    """Encode one chunk against the previous share row.

    prev holds the k previous shares; j is the 1-based column. The
    result is chunk XOR P(x) where P takes prev's other elements as
    coefficients of degrees 1..k-1 in ascending source order.
    """
    if len(prev) < 2:
        raise InvalidParams("share rows need at least 2 elements")
    if not 1 <= j <= len(prev):
        raise InvalidParams(f"column {j} out of range 1..{len(prev)}")
    return chunk ^ _mask(prev, j, field)


def decode_share(share: int, prev: Sequence[int], j: int,
                 field: GFTables = GF256) -> int:
    """Inverse of encode_share; the mask depends only on (prev, j)."""
    if len(prev) < 2:
        raise InvalidParams("share rows need at least 2 elements")
    if not 1 <= j <= len(prev):
        raise InvalidParams(f"column {j} out of range 1..{len(prev)}")
    return share ^ _mask(prev, j, field)


def _element_dtype(w: int):
    return np.uint8 if w == 1 else np.dtype("<u2")


def _pad(data: bytes, k: int, w: int) -> Tuple[bytes, int]:
    """Zero-pad to a whole number of rows; returns (padded, row count)."""
    n_chunks = math.ceil(len(data) / w) if data else 0
    m = math.ceil(n_chunks / k)
    padded_len = m * k * w
    return data + b"\x00" * (padded_len - len(data)), m


def _to_rows(padded: bytes, k: int, w: int) -> np.ndarray:
    arr = np.frombuffer(padded, dtype=_element_dtype(w)).astype(np.int64)
    return arr.reshape(-1, k)


def _rows_to_bytes(rows: np.ndarray, w: int) -> bytes:
    return rows.astype(_element_dtype(w)).tobytes()


def encode_chunks(data: bytes, params: CodecParams,
                  seeds: Optional[List[Tuple[int, ...]]] = None,
                  rng=None, threads: int = 1
                  ) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """Pad, chunk and chain-encode data; no container framing.

    Returns the (m, k) share matrix and the per-block seed list. Seeds
    may be passed explicitly (sensitivity experiments); otherwise they
    are drawn from rng, sequentially even when encoding runs threaded,
    so rng consumption order never depends on the thread count.
    """
    padded, m = _pad(data, params.k, params.w)
    chunks = _to_rows(padded, params.k, params.w)
    rows = block_rows(m, params.block_chunks)
    if seeds is None:
        if rng is None:
            rng = secrets.SystemRandom()
        seeds = [generate_seed(params, rng) for _ in rows]
    if len(seeds) != len(rows):
        raise InvalidParams(f"need {len(rows)} block seeds, got {len(seeds)}")
    field = params.field
    shares = np.empty_like(chunks)
    spans = []
    lo = 0
    for nrows in rows:
        spans.append((lo, lo + nrows))
        lo += nrows

    def encode_block(span, seed):
        lo, hi = span
        seed_arr = np.asarray(seed, dtype=np.int64)
        encode_chain(chunks[lo:hi], seed_arr, field.exp, field.log,
                     shares[lo:hi])

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(encode_block, spans, seeds))
    else:
        for span, seed in zip(spans, seeds):
            encode_block(span, seed)
    return shares, seeds


def decode_chunks(shares: np.ndarray, seeds: List[Tuple[int, ...]],
                  params: CodecParams, threads: int = 1) -> bytes:
    """Invert encode_chunks; returns the padded byte stream."""
    m = shares.shape[0]
    rows = block_rows(m, params.block_chunks)
    if len(seeds) != len(rows):
        raise InvalidParams(f"need {len(rows)} block seeds, got {len(seeds)}")
    field = params.field
    chunks = np.empty_like(shares)
    jobs = []
    lo = 0
    for nrows, seed in zip(rows, seeds):
        seed_arr = np.asarray(seed, dtype=np.int64)
        if threads > 1 and nrows >= 2 * threads:
            # rows decode independently given their predecessor, so a
            # block splits into ranges seeded by the prior stored row
            step = math.ceil(nrows / threads)
            for off in range(0, nrows, step):
                a, b = lo + off, lo + min(off + step, nrows)
                prev0 = seed_arr if off == 0 else shares[a - 1]
                jobs.append((a, b, prev0))
        else:
            jobs.append((lo, lo + nrows, seed_arr))
        lo += nrows

    def decode_span(job):
        a, b, prev0 = job
        decode_chain(shares[a:b], np.ascontiguousarray(prev0),
                     field.exp, field.log, chunks[a:b])

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(decode_span, jobs))
    else:
        for job in jobs:
            decode_span(job)
    return _rows_to_bytes(chunks, params.w)


def _systematic_payload(shares: np.ndarray, seeds, spans, j: int,
                        w: int) -> bytes:
    """Assemble fragment j's payload: per block, seed share then column."""
    dtype = _element_dtype(w)
    parts = []
    for (lo, hi), seed in zip(spans, seeds):
        parts.append(np.asarray([seed[j]], dtype=dtype))
        parts.append(shares[lo:hi, j].astype(dtype))
    return np.concatenate(parts).tobytes()


def fragment(data: bytes, params: CodecParams, rng=None,
             threads: int = 1) -> List[Fragment]:
    """Fragment data into n self-describing fragments.

    Any k of the returned fragments recover data exactly; k-1 do not.
    Each systematic payload is (m_block + 1)*w bytes per block, the +1
    being that block's seed share.
    """
    if len(data) >= 1 << 64:
        raise InvalidParams("data length must fit in 64 bits")
    if rng is None:
        rng = secrets.SystemRandom()
    shares, seeds = encode_chunks(data, params, rng=rng, threads=threads)
    m = shares.shape[0]
    rows = block_rows(m, params.block_chunks)
    spans = []
    lo = 0
    for nrows in rows:
        spans.append((lo, lo + nrows))
        lo += nrows
    payloads = [_systematic_payload(shares, seeds, spans, j, params.w)
                for j in range(params.k)]
    payloads += rs_extend(payloads, params.n, params.field)
    try:
        run_id = bytes(rng.randrange(256) for _ in range(RUN_ID_BYTES))
    except Exception as exc:
        raise RngFailure(f"random source failed: {exc}") from exc
    frags = []
    for idx, payload in enumerate(payloads, start=1):
        header = FragmentHeader(
            q=params.q, k=params.k, n=params.n, frag_index=idx,
            block_chunks=params.block_chunks, original_length=len(data),
            run_id=run_id)
        frags.append(Fragment(header=header, payload=payload))
    return frags


def _share_matrix(payloads: List[bytes], params: CodecParams,
                  original_length: int
                  ) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """Split k systematic payloads back into a share matrix and seeds."""
    dtype = _element_dtype(params.w)
    cols = [np.frombuffer(p, dtype=dtype).astype(np.int64) for p in payloads]
    layout = payload_layout(original_length, params.k, params.w,
                            params.block_chunks)
    seeds = []
    col_parts = [[] for _ in range(params.k)]
    for elem_off, nrows in layout:
        seeds.append(tuple(int(c[elem_off]) for c in cols))
        for j, c in enumerate(cols):
            col_parts[j].append(c[elem_off + 1: elem_off + 1 + nrows])
    mat = np.column_stack([np.concatenate(parts) if parts else
                           np.empty(0, dtype=np.int64)
                           for parts in col_parts])
    return mat, seeds


def _systematic_payloads(fragments: Sequence[Fragment],
                         params: CodecParams) -> List[bytes]:
    by_index = {f.header.frag_index: f.payload for f in fragments}
    if all(j in by_index for j in range(1, params.k + 1)):
        return [by_index[j] for j in range(1, params.k + 1)]
    return rs_reconstruct(sorted(by_index.items()), params)


def defragment(fragments: Sequence[Fragment], threads: int = 1) -> bytes:
    """Recover the original bytes from any k consistent fragments."""
    params = container.validate_set(fragments)
    payloads = _systematic_payloads(fragments, params)
    original_length = fragments[0].header.original_length
    shares, seeds = _share_matrix(payloads, params, original_length)
    padded = decode_chunks(shares, seeds, params, threads=threads)
    return padded[:original_length]


def decode_range(fragments: Sequence[Fragment], offset: int,
                 length: int) -> bytes:
    """Decode only the rows covering [offset, offset+length).

    Work is proportional to the requested length (plus one predecessor
    row per touched block), not to the data size, when the k systematic
    fragments are present; missing ones are restored first.
    """
    params = container.validate_set(fragments)
    original_length = fragments[0].header.original_length
    if offset < 0 or length < 0 or offset + length > original_length:
        raise RangeOutOfBounds(
            f"range [{offset}, {offset + length}) outside data of "
            f"{original_length} bytes")
    if length == 0:
        return b""
    payloads = _systematic_payloads(fragments, params)
    k, w, field = params.k, params.w, params.field
    dtype = _element_dtype(w)
    layout = payload_layout(original_length, k, w, params.block_chunks)
    rows = [nrows for _, nrows in layout]
    starts = []
    acc = 0
    for nrows in rows:
        starts.append(acc)
        acc += nrows

    def read_row(r: int) -> List[int]:
        # row r of the share matrix, pulled element-wise from payloads
        b = 0
        while b + 1 < len(rows) and r >= starts[b + 1]:
            b += 1
        elem_off, _ = layout[b]
        lr = r - starts[b]
        pos = (elem_off + 1 + lr) * w
        return [int(np.frombuffer(p[pos:pos + w], dtype=dtype)[0])
                for p in payloads]

    def read_seed(b: int) -> List[int]:
        elem_off, _ = layout[b]
        pos = elem_off * w
        return [int(np.frombuffer(p[pos:pos + w], dtype=dtype)[0])
                for p in payloads]

    row_bytes = k * w
    r0 = offset // row_bytes
    r1 = (offset + length - 1) // row_bytes
    out = bytearray()
    prev = None
    prev_r = None
    for r in range(r0, r1 + 1):
        b = 0
        while b + 1 < len(rows) and r >= starts[b + 1]:
            b += 1
        if r == starts[b]:
            prev = read_seed(b)
        elif prev_r != r - 1:
            prev = read_row(r - 1)
        cur = read_row(r)
        decoded = [decode_share(cur[j - 1], prev, j, field)
                   for j in range(1, k + 1)]
        out += np.asarray(decoded, dtype=np.int64).astype(dtype).tobytes()
        prev = cur
        prev_r = r
    lo = offset - r0 * row_bytes
    return bytes(out[lo:lo + length])
