"""Systematic Reed-Solomon extension and erasure reconstruction.

Fragment index u doubles as the field point u. The k systematic
payloads are treated, column by column, as values of a degree-(k-1)
polynomial at points 1..k; redundant fragment u holds that polynomial's
value at point u. Reconstruction interpolates each column from any k
available points. Erasures only; nothing here locates corruption.
"""

from typing import List, Sequence, Tuple

import numpy as np

from .errors import (DuplicateIndex, DuplicatePosition, InvalidParams,
                     LengthMismatch, NotEnoughFragments)
from .gf import GF256, GFTables


def lagrange_eval(points: Sequence[Tuple[int, int]], x: int,
                  field: GFTables = GF256) -> int:
    """Value at x of the unique degree-<=(len-1) polynomial through points."""
    xs = [p for p, _ in points]
    if len(set(xs)) != len(xs):
        raise DuplicatePosition(f"positions not distinct: {sorted(xs)}")
    result = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for t, (xt, _) in enumerate(points):
            if t == i:
                continue
            num = field.mul(num, x ^ xt)
            den = field.mul(den, xi ^ xt)
        result ^= field.mul(yi, field.div(num, den))
    return result


def _basis(xs: Sequence[int], x: int, field: GFTables) -> List[int]:
    """Lagrange basis coefficients l_i(x) for the given support."""
    out = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for t, xt in enumerate(xs):
            if t == i:
                continue
            num = field.mul(num, x ^ xt)
            den = field.mul(den, xi ^ xt)
        out.append(field.div(num, den))
    return out


def _columns(payloads: Sequence[bytes], w: int) -> List[np.ndarray]:
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    return [np.frombuffer(p, dtype=dtype).astype(np.int64) for p in payloads]


def _combine(cols: Sequence[np.ndarray], basis: Sequence[int],
             field: GFTables, w: int) -> bytes:
    acc = np.zeros_like(cols[0])
    for col, b in zip(cols, basis):
        acc ^= field.mul_array(col, b)
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    return acc.astype(dtype).tobytes()


def _check_lengths(payloads: Sequence[bytes], w: int):
    lengths = {len(p) for p in payloads}
    if len(lengths) > 1:
        raise LengthMismatch(f"payload lengths differ: {sorted(lengths)}")
    if lengths and next(iter(lengths)) % w:
        raise LengthMismatch(
            f"payload length must be a multiple of {w} bytes")


def rs_extend(systematic: Sequence[bytes], n: int,
              field: GFTables = GF256) -> List[bytes]:
    """Redundant payloads for fragments k+1..n; empty when n == k.

    The systematic payloads themselves are the code's first k outputs
    and are not rewritten.
    """
    k = len(systematic)
    if not k <= n <= field.order:
        raise InvalidParams(
            f"n must be in [{k}, {field.order}], got {n}")
    _check_lengths(systematic, field.w)
    if n == k:
        return []
    cols = _columns(systematic, field.w)
    xs = list(range(1, k + 1))
    out = []
    for u in range(k + 1, n + 1):
        out.append(_combine(cols, _basis(xs, u, field), field, field.w))
    return out


def rs_reconstruct(available: Sequence[Tuple[int, bytes]],
                   params) -> List[bytes]:
    """Recover the k systematic payloads from any k available fragments.

    available holds (fragment index, payload) pairs. When all of 1..k
    are present they are returned as-is; otherwise each missing column
    set is interpolated from the k lowest-indexed fragments supplied.
    """
    k, n, field = params.k, params.n, params.field
    indices = [i for i, _ in available]
    if len(set(indices)) != len(indices):
        dupes = sorted({i for i in indices if indices.count(i) > 1})
        raise DuplicateIndex(f"duplicate fragment indices: {dupes}")
    if any(not 1 <= i <= n for i in indices):
        raise InvalidParams(f"fragment index outside 1..{n}")
    if len(available) < k:
        raise NotEnoughFragments(
            f"need {k} fragments, have {len(available)}")
    _check_lengths([p for _, p in available], field.w)
    by_index = dict(available)
    if all(j in by_index for j in range(1, k + 1)):
        return [by_index[j] for j in range(1, k + 1)]
    sources = sorted(by_index)[:k]
    cols = _columns([by_index[i] for i in sources], field.w)
    out = []
    for t in range(1, k + 1):
        if t in by_index:
            out.append(by_index[t])
        else:
            out.append(_combine(cols, _basis(sources, t, field),
                                field, field.w))
    return out
