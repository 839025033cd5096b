"""Self-describing fragment file format.

One fragment per file, extension .kfrag. A fixed 46-byte little-endian
header carries everything a recipient needs to combine fragments: field
width, k, n, this fragment's index, block size, the original data
length, a 16-byte run identifier binding the set together, and a CRC32
over the preceding header bytes. The payload follows raw.

Layout (offsets in bytes, all integers little-endian):

    0   4  magic "KFRG"
    4   1  version (1)
    5   1  q (8 or 16)
    6   2  k
    8   2  n
    10  2  frag_index (1-based)
    12  2  flags (bit 0 = block mode, others reserved zero)
    14  4  block_chunks (0 = single block)
    18  8  original_length
    26 16  run_id
    42  4  crc32 of bytes 0..41

Payload, per block: one w-byte seed share, then the block's share
stream, w bytes per row. Redundant fragments carry the column-wise
code values of the systematic payloads, same length. The header is
integrity-checked; the payload is not (availability, not integrity,
is this format's job).
"""

import math
import struct
import zlib
from dataclasses import dataclass, field as dc_field
from typing import List, Sequence, Tuple

from .errors import (BadMagic, CorruptFragment, CrcMismatch, DuplicateIndex,
                     InconsistentSet, InvalidHeader, NotEnoughFragments,
                     TruncatedInput, UnsupportedVersion)

MAGIC = b"KFRG"
VERSION = 1
FLAG_BLOCK_MODE = 0x0001
_HEADER = struct.Struct("<4sBBHHHHIQ16s")
_CRC = struct.Struct("<I")
HEADER_LEN = _HEADER.size + _CRC.size


def total_rows(original_length: int, k: int, w: int) -> int:
    """Share-matrix row count m for a given plaintext length."""
    n_chunks = math.ceil(original_length / w)
    return math.ceil(n_chunks / k)


def block_rows(m: int, block_chunks: int) -> List[int]:
    """Rows per block; a single block when block_chunks is 0 or m is 0."""
    if block_chunks == 0 or m == 0:
        return [m]
    full, rest = divmod(m, block_chunks)
    return [block_chunks] * full + ([rest] if rest else [])


def payload_layout(original_length: int, k: int, w: int,
                   block_chunks: int) -> List[Tuple[int, int]]:
    """Per block: (element offset of its seed share, row count)."""
    out = []
    off = 0
    for nrows in block_rows(total_rows(original_length, k, w), block_chunks):
        out.append((off, nrows))
        off += 1 + nrows
    return out


def expected_payload_len(original_length: int, k: int, w: int,
                         block_chunks: int) -> int:
    """Every fragment of a run carries exactly this many payload bytes."""
    m = total_rows(original_length, k, w)
    blocks = len(block_rows(m, block_chunks))
    return (m + blocks) * w


@dataclass(frozen=True)
class FragmentHeader:
    q: int
    k: int
    n: int
    frag_index: int
    original_length: int
    run_id: bytes
    block_chunks: int = 0
    version: int = VERSION

    @property
    def flags(self) -> int:
        return FLAG_BLOCK_MODE if self.block_chunks > 0 else 0

    @property
    def w(self) -> int:
        return self.q // 8

    def validate(self):
        if self.version != VERSION:
            raise InvalidHeader(f"unwritable version {self.version}")
        if self.q not in (8, 16):
            raise InvalidHeader(f"q must be 8 or 16, got {self.q}")
        if not 2 <= self.k <= self.n <= (1 << self.q) - 1:
            raise InvalidHeader(
                f"need 2 <= k <= n <= {(1 << self.q) - 1}, "
                f"got k={self.k} n={self.n}")
        if not 1 <= self.frag_index <= self.n:
            raise InvalidHeader(
                f"frag_index {self.frag_index} outside 1..{self.n}")
        if not 0 <= self.block_chunks < 1 << 32:
            raise InvalidHeader("block_chunks out of range")
        if not 0 <= self.original_length < 1 << 64:
            raise InvalidHeader("original_length out of range")
        if len(self.run_id) != 16:
            raise InvalidHeader("run_id must be 16 bytes")

    def pack(self) -> bytes:
        self.validate()
        body = _HEADER.pack(MAGIC, self.version, self.q, self.k, self.n,
                            self.frag_index, self.flags, self.block_chunks,
                            self.original_length, self.run_id)
        return body + _CRC.pack(zlib.crc32(body))

    def expected_payload_len(self) -> int:
        return expected_payload_len(self.original_length, self.k, self.w,
                                    self.block_chunks)

    def run_key(self) -> tuple:
        """Fields that must agree across all fragments of one run."""
        return (self.run_id, self.version, self.q, self.k, self.n,
                self.original_length, self.block_chunks)


@dataclass(frozen=True)
class Fragment:
    header: FragmentHeader
    payload: bytes = dc_field(repr=False)

    def to_bytes(self) -> bytes:
        return write_fragment(self.header, self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Fragment":
        header, payload = parse_fragment(data)
        return cls(header=header, payload=payload)


def write_fragment(header: FragmentHeader, payload: bytes) -> bytes:
    """Serialize one fragment; deterministic and byte-exact."""
    packed = header.pack()
    if len(payload) != header.expected_payload_len():
        raise InvalidHeader(
            f"payload is {len(payload)} bytes, header implies "
            f"{header.expected_payload_len()}")
    return packed + payload


def parse_fragment(data: bytes) -> Tuple[FragmentHeader, bytes]:
    """Parse and fully validate one serialized fragment."""
    if len(data) < HEADER_LEN:
        raise TruncatedInput(
            f"{len(data)} bytes is shorter than the {HEADER_LEN}-byte header")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    body = data[:_HEADER.size]
    (stored_crc,) = _CRC.unpack_from(data, _HEADER.size)
    (_, version, q, k, n, frag_index, flags, block_chunks,
     original_length, run_id) = _HEADER.unpack(body)
    if version != VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    if stored_crc != zlib.crc32(body):
        raise CrcMismatch(
            f"header crc {stored_crc:#010x} != {zlib.crc32(body):#010x}")
    header = FragmentHeader(q=q, k=k, n=n, frag_index=frag_index,
                            original_length=original_length, run_id=run_id,
                            block_chunks=block_chunks, version=version)
    header.validate()
    if flags != header.flags:
        raise InvalidHeader(
            f"flags {flags:#06x} inconsistent with block_chunks "
            f"{block_chunks}")
    payload = data[HEADER_LEN:]
    expected = header.expected_payload_len()
    if len(payload) < expected:
        raise TruncatedInput(
            f"payload {len(payload)} bytes, header implies {expected}")
    if len(payload) > expected:
        raise CorruptFragment(
            f"{len(payload) - expected} trailing bytes after payload")
    return header, payload


def validate_set(fragments: Sequence[Fragment]):
    """Check fragments form one usable run; returns its CodecParams."""
    from .codec import CodecParams

    if not fragments:
        raise NotEnoughFragments("no fragments supplied")
    first = fragments[0].header
    for f in fragments[1:]:
        if f.header.run_key() != first.run_key():
            raise InconsistentSet(
                f"fragment {f.header.frag_index} belongs to a different "
                f"run or parameter set")
    seen = set()
    for f in fragments:
        if f.header.frag_index in seen:
            raise DuplicateIndex(
                f"fragment index {f.header.frag_index} appears twice")
        seen.add(f.header.frag_index)
    if len(fragments) < first.k:
        raise NotEnoughFragments(
            f"need {first.k} fragments, have {len(fragments)}")
    expected = first.expected_payload_len()
    for f in fragments:
        f.header.validate()
        if len(f.payload) != expected:
            raise CorruptFragment(
                f"fragment {f.header.frag_index} payload is "
                f"{len(f.payload)} bytes, run implies {expected}")
    return CodecParams(k=first.k, n=first.n, q=first.q,
                       block_chunks=first.block_chunks)
