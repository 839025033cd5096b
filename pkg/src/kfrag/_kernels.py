"""Sequential chain kernels, JIT-compiled when numba is available.

The encode chain is inherently serial (every row masks with the previous
row's output), so the per-element cost dominates. Compiled kernels bring
a 10 MB encode from minutes of interpreter time down to well under a
second and release the GIL so block-level threads can overlap.

Setting KFRAG_NO_NUMBA=1 (or running without numba installed) falls back
to the same functions interpreted; results are bit-identical.

All arrays are int64: chunk/share matrices of shape (m, k), seeds of
shape (k,), and the field's exp/log tables.
"""

import os

HAVE_NUMBA = False
_njit = None
if not os.environ.get("KFRAG_NO_NUMBA"):
    try:
        from numba import njit as _njit
        HAVE_NUMBA = True
    except ImportError:
        _njit = None


def _jit(func):
    if HAVE_NUMBA:
        return _njit(cache=True, nogil=True)(func)
    return func


@_jit
def encode_chain(chunks, seed, exp, log, out):
    """Mask each row with its predecessor; row -1 is the seed.

    out[i, j] = chunks[i, j] ^ P_j(x) where P_j has the previous row's
    other k-1 values as coefficients of degrees 1..k-1 (ascending source
    index) and x = (j+1) ^ prev[j], remapped to 1 when zero.
    """
    m, k = chunks.shape
    prev = seed.copy()
    for i in range(m):
        for j in range(k):
            x = (j + 1) ^ prev[j]
            if x == 0:
                x = 1
            lx = log[x]
            acc = prev[k - 1] if j != k - 1 else prev[k - 2]
            start = k - 2 if j != k - 1 else k - 3
            for t in range(start, -1, -1):
                if t == j:
                    continue
                if acc != 0:
                    acc = exp[log[acc] + lx]
                acc ^= prev[t]
            if acc != 0:
                mask = exp[log[acc] + lx]
            else:
                mask = 0
            out[i, j] = chunks[i, j] ^ mask
        prev = out[i]


@_jit
def decode_chain(shares, prev0, exp, log, out):
    """Inverse of encode_chain; prev0 is the row before shares[0].

    Each output row depends only on stored rows, so callers may split
    the row range arbitrarily and pass shares[lo-1] as prev0.
    """
    m, k = shares.shape
    prev = prev0
    for i in range(m):
        for j in range(k):
            x = (j + 1) ^ prev[j]
            if x == 0:
                x = 1
            lx = log[x]
            acc = prev[k - 1] if j != k - 1 else prev[k - 2]
            start = k - 2 if j != k - 1 else k - 3
            for t in range(start, -1, -1):
                if t == j:
                    continue
                if acc != 0:
                    acc = exp[log[acc] + lx]
                acc ^= prev[t]
            if acc != 0:
                mask = exp[log[acc] + lx]
            else:
                mask = 0
            out[i, j] = shares[i, j] ^ mask
        prev = shares[i]
