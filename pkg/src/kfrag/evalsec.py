"""Statistical security evaluation of the fragmentation output.

Metrics: byte-level Shannon entropy, chi-squared uniformity against the
293.0 threshold (255 degrees of freedom at the 0.05 level), probability
density over byte values, Pearson correlation, bit difference, and
recurrence (delay) pairs for serial-structure plots. Protocols: a k
sweep over freshly seeded trials, a one-bit seed sensitivity check, and
a matrix-dispersal baseline that shows why plain dispersal preserves
plaintext patterns while the chained encoding does not.

Entropy estimates carry a negative bias of roughly 255/(2 N ln 2) bits
at sample size N, so values measured on pooled streams (N proportional
to k) rise with k even for ideally uniform output; the sweep reports
pooled values deliberately to keep that comparison meaningful.
"""

import itertools
import os
from collections import namedtuple
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .codec import CodecParams, encode_chunks
from .errors import (DelayTooLarge, EmptyInput, InvalidMatrix, InvalidParams,
                     LengthMismatch, SampleTooSmall, ZeroVariance)
from .gf import GFTables, field_for

CHI2_THRESHOLD = 293.0

ChiSquared = namedtuple("ChiSquared", "statistic passed")
SeedSensitivity = namedtuple("SeedSensitivity", "bit_difference correlation")


def _as_bytes(data) -> np.ndarray:
    return np.frombuffer(bytes(data), dtype=np.uint8)


def shannon_entropy(data) -> float:
    """Byte-level Shannon entropy in bits per byte."""
    arr = _as_bytes(data)
    if arr.size == 0:
        raise EmptyInput("entropy needs at least one byte")
    counts = np.bincount(arr, minlength=256)
    p = counts[counts > 0] / arr.size
    return float(-np.sum(p * np.log2(p)))


def chi_squared_uniform(data, min_expected: float = 5.0) -> ChiSquared:
    """Goodness of fit of byte frequencies against uniform.

    Passes when the statistic stays at or under 293.0. The classical
    approximation wants expected counts of at least min_expected per
    bin; callers knowingly working at smaller samples (the 1000-byte
    fragment protocol) pass min_expected=0.
    """
    arr = _as_bytes(data)
    expected = arr.size / 256.0
    if expected < min_expected:
        raise SampleTooSmall(
            f"{arr.size} bytes gives expected count {expected:.2f} < "
            f"{min_expected} per bin")
    if arr.size == 0:
        raise EmptyInput("empty sample")
    counts = np.bincount(arr, minlength=256)
    stat = float(np.sum((counts - expected) ** 2) / expected)
    return ChiSquared(statistic=stat, passed=stat <= CHI2_THRESHOLD)


def pdf_histogram(data) -> np.ndarray:
    """Occurrence probability of each of the 256 byte values."""
    arr = _as_bytes(data)
    if arr.size == 0:
        raise EmptyInput("histogram needs at least one byte")
    return np.bincount(arr, minlength=256) / arr.size


def pearson_correlation(a, b) -> float:
    """Sample Pearson coefficient over byte values."""
    xa, xb = _as_bytes(a), _as_bytes(b)
    if xa.size != xb.size:
        raise LengthMismatch(f"lengths differ: {xa.size} vs {xb.size}")
    fa = xa.astype(np.float64)
    fb = xb.astype(np.float64)
    if fa.size < 2 or fa.std() == 0 or fb.std() == 0:
        raise ZeroVariance("correlation undefined for constant input")
    return float(np.corrcoef(fa, fb)[0, 1])


def bit_difference(a, b) -> float:
    """Fraction of differing bits between two equal-length sequences."""
    xa, xb = _as_bytes(a), _as_bytes(b)
    if xa.size != xb.size:
        raise LengthMismatch(f"lengths differ: {xa.size} vs {xb.size}")
    if xa.size == 0:
        return 0.0
    return float(np.unpackbits(xa ^ xb).sum() / (8 * xa.size))


def recurrence_points(data, t: int = 1) -> np.ndarray:
    """(value_i, value_{i+t}) pairs, one row each, for delay plots."""
    if t < 1:
        raise InvalidParams(f"delay must be >= 1, got {t}")
    arr = _as_bytes(data)
    if arr.size <= t:
        raise DelayTooLarge(
            f"delay {t} leaves no pairs in {arr.size} bytes")
    return np.column_stack([arr[:-t], arr[t:]]).astype(np.int64)


def write_recurrence_csv(data, t: int, path: str) -> str:
    pairs = recurrence_points(data, t)
    with open(path, "w") as fh:
        fh.write("value_i,value_i_plus_t\n")
        for a, b in pairs:
            fh.write(f"{a},{b}\n")
    return path


# fragment streams for the protocols


def _fragment_streams(window: bytes, params: CodecParams, rng=None,
                      seeds=None) -> Tuple[List[bytes], np.ndarray]:
    """Encode one window; returns per-fragment share streams and chunks."""
    shares, _ = encode_chunks(window, params, seeds=seeds, rng=rng)
    w = params.w
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    streams = [shares[:, j].astype(dtype).tobytes()
               for j in range(params.k)]
    return streams, shares


def _source_stream(window: bytes, params: CodecParams, j: int) -> bytes:
    """The padded source chunks that fragment j encodes: j, j+k, ..."""
    w, k = params.w, params.k
    n_chunks = -(-len(window) // w)
    m = -(-n_chunks // k)
    padded = window + b"\x00" * (m * k * w - len(window))
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    arr = np.frombuffer(padded, dtype=dtype).reshape(-1, k)
    return arr[:, j].tobytes()


def seed_sensitivity_report(data: bytes, params: CodecParams, rng,
                            flip_bits: int = 1) -> SeedSensitivity:
    """Fragment twice with seeds differing by flip_bits random bits.

    Compares the full share streams (seed shares themselves excluded);
    flip_bits=0 is the determinism control and must report difference 0.
    """
    if len(data) < 1000:
        raise SampleTooSmall(
            f"need at least 1000 bytes for stable statistics, "
            f"got {len(data)}")
    shares1, seeds1 = encode_chunks(data, params, rng=rng)
    bits_per_seed = params.k * params.q
    total_bits = len(seeds1) * bits_per_seed
    positions = rng.sample(range(total_bits), flip_bits) if flip_bits else []
    seeds2 = [list(s) for s in seeds1]
    for pos in positions:
        block, rest = divmod(pos, bits_per_seed)
        elem, bit = divmod(rest, params.q)
        seeds2[block][elem] ^= 1 << bit
    shares2, _ = encode_chunks(data, params,
                               seeds=[tuple(s) for s in seeds2])
    w = params.w
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    s1 = shares1.astype(dtype).tobytes()
    s2 = shares2.astype(dtype).tobytes()
    if flip_bits == 0:
        return SeedSensitivity(bit_difference(s1, s2), 1.0)
    return SeedSensitivity(bit_difference(s1, s2),
                           pearson_correlation(s1, s2))


# matrix-dispersal baseline


@dataclass(frozen=True)
class IdaMatrix:
    """k x n dispersal matrix; every k-column minor must be invertible."""

    rows: np.ndarray
    q: int = 8

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def _minor_nonsingular(matrix: np.ndarray, cols: Sequence[int],
                       field: GFTables) -> bool:
    # Gaussian elimination over the field; singular iff no pivot found
    sub = [[int(matrix[r, c]) for c in cols] for r in range(len(cols))]
    size = len(cols)
    for col in range(size):
        pivot = next((r for r in range(col, size) if sub[r][col]), None)
        if pivot is None:
            return False
        sub[col], sub[pivot] = sub[pivot], sub[col]
        inv = field.inv(sub[col][col])
        for r in range(col + 1, size):
            factor = field.mul(sub[r][col], inv)
            if factor:
                sub[r] = [a ^ field.mul(factor, b)
                          for a, b in zip(sub[r], sub[col])]
    return True


def build_ida_matrix(k: int, n: int, q: int = 8,
                     check_minors: bool = True) -> IdaMatrix:
    """Power matrix over points 1..n: row i holds point^i.

    Every k-column minor is a Vandermonde determinant over distinct
    nonzero points, hence invertible; small instances are re-checked
    exhaustively anyway.
    """
    field = field_for(q)
    if not 1 <= k <= n <= field.order:
        raise InvalidMatrix(f"need 1 <= k <= n <= {field.order}")
    rows = np.array([[field.pow(u, i) for u in range(1, n + 1)]
                     for i in range(k)], dtype=np.int64)
    matrix = IdaMatrix(rows=rows, q=q)
    if check_minors and n <= 12:
        for cols in itertools.combinations(range(n), k):
            if not _minor_nonsingular(rows, cols, field):
                raise InvalidMatrix(f"singular minor at columns {cols}")
    return matrix


def ida_fragment(data: bytes, matrix: IdaMatrix) -> List[bytes]:
    """Matrix-multiplication dispersal, the pattern-preserving baseline.

    Present for comparison figures only; it is not a protection mode.
    """
    field = field_for(matrix.q)
    k, w = matrix.k, field.w
    if matrix.rows.ndim != 2 or matrix.rows.shape[0] > matrix.rows.shape[1]:
        raise InvalidMatrix("matrix must be k x n with k <= n")
    if np.any(matrix.rows < 0) or np.any(matrix.rows > field.order):
        raise InvalidMatrix("matrix entries outside the field")
    if len(data) % (k * w):
        raise InvalidParams(
            f"data length must be a multiple of k*w = {k * w}")
    dtype = np.uint8 if w == 1 else np.dtype("<u2")
    rows = np.frombuffer(data, dtype=dtype).astype(np.int64).reshape(-1, k)
    out = []
    for u in range(matrix.n):
        acc = np.zeros(rows.shape[0], dtype=np.int64)
        for i in range(k):
            acc ^= field.mul_array(rows[:, i], int(matrix.rows[i, u]))
        out.append(acc.astype(dtype).tobytes())
    return out


# the full sweep


@dataclass
class EvalReport:
    """Aggregated metrics of one evaluation run.

    entropy_by_k holds, per k, the mean over trials of the entropy of
    one complete fragmentation output (all k fragment streams pooled,
    k * fragment_size bytes); fragment_entropy_by_k averages the k
    per-stream values instead. Correlation matrices are averaged over
    trials; corr_pairs_by_k[k][i][j] pairs fragment i with fragment j.
    """

    k_values: List[int]
    trials: int
    fragment_size: int
    pairing: str
    original_entropy: float
    entropy_by_k: Dict[int, float] = dc_field(default_factory=dict)
    fragment_entropy_by_k: Dict[int, float] = dc_field(default_factory=dict)
    ida_entropy_by_k: Dict[int, float] = dc_field(default_factory=dict)
    pdf_extremes_by_k: Dict[int, Tuple[float, float]] = dc_field(
        default_factory=dict)
    chi2_stats_by_k: Dict[int, List[float]] = dc_field(default_factory=dict)
    chi2_pass_rate_by_k: Dict[int, float] = dc_field(default_factory=dict)
    corr_orig_by_k: Dict[int, List[float]] = dc_field(default_factory=dict)
    corr_pairs_by_k: Dict[int, List[List[float]]] = dc_field(
        default_factory=dict)
    bit_diff_by_k: Dict[int, List[float]] = dc_field(default_factory=dict)
    seed_sensitivity_by_k: Dict[int, SeedSensitivity] = dc_field(
        default_factory=dict)
    recurrence_paths: List[str] = dc_field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"k_values={','.join(str(k) for k in self.k_values)}",
            f"trials={self.trials}",
            f"fragment_size={self.fragment_size}",
            f"pairing={self.pairing}",
            f"original_entropy={self.original_entropy:.6f}",
        ]
        for k in self.k_values:
            lines.append(f"entropy[k={k}]={self.entropy_by_k[k]:.6f}")
            lines.append(
                f"fragment_entropy[k={k}]"
                f"={self.fragment_entropy_by_k[k]:.6f}")
            if k in self.ida_entropy_by_k:
                lines.append(
                    f"ida_entropy[k={k}]={self.ida_entropy_by_k[k]:.6f}")
            lo, hi = self.pdf_extremes_by_k[k]
            lines.append(f"pdf_min[k={k}]={lo:.6f}")
            lines.append(f"pdf_max[k={k}]={hi:.6f}")
            stats = self.chi2_stats_by_k[k]
            lines.append(f"chi2_mean[k={k}]={np.mean(stats):.3f}")
            lines.append(f"chi2_max[k={k}]={np.max(stats):.3f}")
            lines.append(
                f"chi2_pass_rate[k={k}]={self.chi2_pass_rate_by_k[k]:.4f}")
            corr = self.corr_orig_by_k[k]
            lines.append(
                f"corr_orig_max_abs[k={k}]={max(abs(c) for c in corr):.6f}")
            pairs = self.corr_pairs_by_k[k]
            off_diag = [pairs[i][j] for i in range(k) for j in range(k)
                        if i != j]
            if off_diag:
                lines.append(
                    f"corr_frag_min[k={k}]={min(off_diag):.6f}")
                lines.append(
                    f"corr_frag_max[k={k}]={max(off_diag):.6f}")
            bd = self.bit_diff_by_k[k]
            lines.append(f"bit_difference_mean[k={k}]={np.mean(bd):.6f}")
            if k in self.seed_sensitivity_by_k:
                ss = self.seed_sensitivity_by_k[k]
                lines.append(
                    f"seed_bit_difference[k={k}]={ss.bit_difference:.6f}")
                lines.append(
                    f"seed_correlation[k={k}]={ss.correlation:.6f}")
        for path in self.recurrence_paths:
            lines.append(f"recurrence_csv={path}")
        return "\n".join(lines) + "\n"


def load_sample_text() -> bytes:
    """The bundled English prose corpus."""
    ref = resources.files("kfrag").joinpath("corpus/english_sample.txt")
    return ref.read_bytes()


def evaluate_full(data: bytes, k_range: Sequence[int], trials: int, rng,
                  fragment_size: int = 1000, q: int = 8,
                  out_dir: Optional[str] = None,
                  seed_sensitivity: bool = True,
                  ida_baseline: bool = True) -> EvalReport:
    """Run every metric across a k sweep with fresh seeds per trial.

    Each trial encodes one window of fragment_size * k bytes drawn at a
    random offset. Preconditions: trials >= 1 and data long enough for
    the largest k's window.
    """
    k_range = list(k_range)
    if trials < 1:
        raise InvalidParams(f"trials must be >= 1, got {trials}")
    if not k_range:
        raise InvalidParams("k_range is empty")
    need = fragment_size * max(k_range)
    if len(data) < need:
        raise SampleTooSmall(
            f"need at least {need} bytes for k={max(k_range)}, "
            f"got {len(data)}")
    report = EvalReport(
        k_values=k_range, trials=trials, fragment_size=fragment_size,
        pairing="fragment j vs source chunks j, j+k, j+2k, ...",
        original_entropy=shannon_entropy(data))
    for k in k_range:
        params = CodecParams(k=k, n=k, q=q)
        win = fragment_size * k
        pooled_e, frag_e, ida_e = [], [], []
        pdf_lo, pdf_hi = 1.0, 0.0
        chi_stats: List[float] = []
        chi_pass = 0
        corr_orig = np.zeros(k)
        corr_pairs = np.zeros((k, k))
        bit_diffs = np.zeros(k)
        first_streams = None
        for _ in range(trials):
            off = rng.randrange(len(data) - win + 1)
            window = data[off:off + win]
            streams, shares = _fragment_streams(window, params, rng=rng)
            if first_streams is None:
                first_streams = (window, streams)
            w = params.w
            dtype = np.uint8 if w == 1 else np.dtype("<u2")
            pooled = shares.astype(dtype).tobytes()
            pooled_e.append(shannon_entropy(pooled))
            frag_e.append(np.mean([shannon_entropy(s) for s in streams]))
            pdf = pdf_histogram(pooled)
            pdf_lo = min(pdf_lo, float(pdf.min()))
            pdf_hi = max(pdf_hi, float(pdf.max()))
            sources = [_source_stream(window, params, j) for j in range(k)]
            for j, stream in enumerate(streams):
                res = chi_squared_uniform(stream, min_expected=0)
                chi_stats.append(res.statistic)
                chi_pass += res.passed
                corr_orig[j] += pearson_correlation(sources[j], stream)
                bit_diffs[j] += bit_difference(sources[j], stream)
            for i in range(k):
                corr_pairs[i, i] += 1.0
                for j in range(i + 1, k):
                    c = pearson_correlation(streams[i], streams[j])
                    corr_pairs[i, j] += c
                    corr_pairs[j, i] += c
            if ida_baseline:
                matrix = build_ida_matrix(k, k, q=q, check_minors=False)
                padded, _ = _pad_for_ida(window, k, w)
                ida_streams = ida_fragment(padded, matrix)
                ida_e.append(shannon_entropy(b"".join(ida_streams)))
        report.entropy_by_k[k] = float(np.mean(pooled_e))
        report.fragment_entropy_by_k[k] = float(np.mean(frag_e))
        if ida_e:
            report.ida_entropy_by_k[k] = float(np.mean(ida_e))
        report.pdf_extremes_by_k[k] = (pdf_lo, pdf_hi)
        report.chi2_stats_by_k[k] = chi_stats
        report.chi2_pass_rate_by_k[k] = chi_pass / (trials * k)
        report.corr_orig_by_k[k] = list(corr_orig / trials)
        report.corr_pairs_by_k[k] = (corr_pairs / trials).tolist()
        report.bit_diff_by_k[k] = list(bit_diffs / trials)
        if seed_sensitivity:
            report.seed_sensitivity_by_k[k] = seed_sensitivity_report(
                data[:win], params, rng)
        if out_dir is not None and first_streams is not None:
            window, streams = first_streams
            orig_path = os.path.join(out_dir, f"recurrence_orig_k{k}.csv")
            frag_path = os.path.join(out_dir, f"recurrence_frag_k{k}.csv")
            report.recurrence_paths.append(
                write_recurrence_csv(window[:fragment_size], 1, orig_path))
            report.recurrence_paths.append(
                write_recurrence_csv(streams[0], 1, frag_path))
    return report


def _pad_for_ida(window: bytes, k: int, w: int) -> Tuple[bytes, int]:
    unit = k * w
    short = (-len(window)) % unit
    return window + b"\x00" * short, short
