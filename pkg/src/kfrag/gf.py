"""Arithmetic over GF(2^q) for q in {8, 16}.

Elements are plain Python ints in [0, 2^q). Addition is XOR. The heavy
operations run off log/antilog tables built once per field at import
time; the antilog table is stored twice over so that products need no
modular reduction of the exponent sum.

Fields
------
GF256 uses x^8 + x^4 + x^3 + x + 1 (0x11B) with generator 3; 2 is not
primitive under that polynomial. GF65536 uses x^16 + x^12 + x^3 + x + 1
(0x1100B) with generator 2. Building a table walks the generator's full
multiplicative cycle and verifies it hits every nonzero element, which
checks both the polynomial and the generator in one pass.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import InvalidParams, ZeroInverse


@dataclass(frozen=True)
class FieldParams:
    """Width and reduction polynomial of one binary field."""

    q: int
    reduction_poly: int
    generator: int

    def __post_init__(self):
        if self.q not in (8, 16):
            raise InvalidParams(f"q must be 8 or 16, got {self.q}")
        if self.reduction_poly >> self.q != 1:
            raise InvalidParams("reduction polynomial degree must equal q")

    @property
    def w(self) -> int:
        """Element width in bytes."""
        return self.q // 8

    @property
    def order(self) -> int:
        """Size of the multiplicative group, 2^q - 1."""
        return (1 << self.q) - 1


PARAMS_Q8 = FieldParams(q=8, reduction_poly=0x11B, generator=0x03)
PARAMS_Q16 = FieldParams(q=16, reduction_poly=0x1100B, generator=0x02)


def _shift_mul(a: int, b: int, poly: int, q: int) -> int:
    # standalone shift-and-add multiply, used only to build the tables
    mask = 1 << q
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & mask:
            a ^= poly
    return r


class GFTables:
    """Log/antilog tables and the operations running on them."""

    def __init__(self, params: FieldParams):
        self.params = params
        q, order, g = params.q, params.order, params.generator
        exp = np.zeros(2 * order, dtype=np.int64)
        log = np.zeros(1 << q, dtype=np.int64)
        x = 1
        for i in range(order):
            exp[i] = x
            log[x] = i
            x = _shift_mul(x, g, params.reduction_poly, q)
        if x != 1 or np.count_nonzero(exp[:order]) != order or \
                len(set(exp[:order].tolist())) != order:
            raise InvalidParams(
                f"generator {g:#x} does not cycle the full group of "
                f"poly {params.reduction_poly:#x}")
        exp[order:] = exp[:order]
        self.exp = exp
        self.log = log
        self.order = order

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def w(self) -> int:
        return self.params.w

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return int(self.exp[self.order - self.log[a]])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            raise InvalidParams("negative exponent")
        if e == 0:
            return 1
        if a == 0:
            return 0
        return int(self.exp[(int(self.log[a]) * e) % self.order])

    def mul_array(self, a: np.ndarray, c: int) -> np.ndarray:
        """Elementwise product of an integer array with the scalar c."""
        if c == 0:
            return np.zeros_like(a)
        out = self.exp[self.log[a] + self.log[c]]
        return np.where(a == 0, 0, out)


_FIELDS: Dict[int, GFTables] = {}


def field_for(q: int) -> GFTables:
    """Shared table instance for the requested width."""
    if q not in (8, 16):
        raise InvalidParams(f"q must be 8 or 16, got {q}")
    if q not in _FIELDS:
        _FIELDS[q] = GFTables(PARAMS_Q8 if q == 8 else PARAMS_Q16)
    return _FIELDS[q]


GF256 = field_for(8)
GF65536 = field_for(16)


def gf_add(a: int, b: int) -> int:
    """Characteristic-2 addition; its own inverse."""
    return a ^ b


def gf_mul(a: int, b: int, field: GFTables = GF256) -> int:
    return field.mul(a, b)


def gf_inv(a: int, field: GFTables = GF256) -> int:
    return field.inv(a)


def gf_pow(a: int, e: int, field: GFTables = GF256) -> int:
    return field.pow(a, e)


def poly_eval(coeffs: Sequence[int], x: int, field: GFTables = GF256) -> int:
    """Horner evaluation of sum(coeffs[i] * x^i) with coeffs[0] constant."""
    acc = 0
    for c in reversed(coeffs):
        acc = field.mul(acc, x) ^ c
    return acc
