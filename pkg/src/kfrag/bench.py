"""Timing harness: k sweeps, size sweeps, thread speedup, linear fits.

Wall times are medians of warm repetitions (one untimed warmup run
precedes timing). Absolute numbers are hardware-bound; what the harness
checks is shape, chiefly that fragmentation time grows linearly in k
and in data size.
"""

import statistics
import time
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .codec import CodecParams, defragment, fragment
from .errors import InvalidParams


@dataclass
class BenchRecord:
    direction: str
    k: int
    n: int
    q: int
    data_size: int
    threads: int
    block_chunks: int
    runs: List[float] = dc_field(default_factory=list)

    def __post_init__(self):
        if self.direction not in ("fragment", "defragment"):
            raise InvalidParams(f"unknown direction {self.direction!r}")
        if self.runs and min(self.runs) <= 0:
            raise InvalidParams("wall times must be positive")

    @property
    def wall_time(self) -> float:
        return statistics.median(self.runs)

    @property
    def throughput(self) -> float:
        return self.data_size / self.wall_time


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Least-squares line through (xs, ys) with its R^2."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise InvalidParams("need at least two points to fit")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(float(slope), float(intercept), r2)


def make_input(size: int, seed: int = 20140613) -> bytes:
    """Deterministic pseudo-random benchmark input."""
    return np.random.default_rng(seed).integers(
        0, 256, size, dtype=np.uint8).tobytes()


def _default_blocks(size: int, params: CodecParams, threads: int) -> int:
    if threads <= 1:
        return 0
    n_chunks = -(-size // params.w)
    m = -(-n_chunks // params.k)
    return max(1, -(-m // (threads * 4)))


def bench_pair(data: bytes, params: CodecParams, repetitions: int = 3,
               threads: int = 1, rng=None) -> List[BenchRecord]:
    """Time fragment and defragment on one parameter point."""
    if repetitions < 3:
        raise InvalidParams("repetitions must be >= 3")
    frags = fragment(data, params, rng=rng, threads=threads)  # warmup
    defragment(frags[:params.k], threads=threads)
    rec_f = BenchRecord("fragment", params.k, params.n, params.q,
                        len(data), threads, params.block_chunks)
    rec_d = BenchRecord("defragment", params.k, params.n, params.q,
                        len(data), threads, params.block_chunks)
    for _ in range(repetitions):
        t0 = time.perf_counter()
        frags = fragment(data, params, rng=rng, threads=threads)
        rec_f.runs.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        out = defragment(frags[:params.k], threads=threads)
        rec_d.runs.append(time.perf_counter() - t0)
    if out != data:
        raise InvalidParams("benchmark round-trip mismatch")
    return [rec_f, rec_d]


def run_k_sweep(data_size: int, k_range: Sequence[int], q: int = 8,
                repetitions: int = 3, threads: int = 1,
                block_chunks: Optional[int] = None,
                rng=None) -> List[BenchRecord]:
    """Median times across k at fixed size; n = k throughout."""
    data = make_input(data_size)
    records = []
    for k in k_range:
        params = CodecParams(
            k=k, n=k, q=q,
            block_chunks=_default_blocks(data_size, CodecParams(k=k, n=k, q=q),
                                         threads)
            if block_chunks is None else block_chunks)
        records.extend(bench_pair(data, params, repetitions, threads, rng))
    return records


def run_size_sweep(sizes: Sequence[int], k: int, q: int = 8,
                   repetitions: int = 3, threads: int = 1,
                   rng=None) -> List[BenchRecord]:
    """Median times across data sizes at fixed k."""
    records = []
    for size in sizes:
        params = CodecParams(k=k, n=k, q=q)
        data = make_input(size)
        records.extend(bench_pair(data, params, repetitions, threads, rng))
    return records


def thread_speedup(data_size: int, k: int, thread_counts: Sequence[int],
                   q: int = 8, repetitions: int = 3,
                   rng=None) -> Dict[int, float]:
    """Median fragmentation time per thread count, block mode on."""
    out = {}
    data = make_input(data_size)
    for threads in thread_counts:
        params = CodecParams(
            k=k, n=k, q=q,
            block_chunks=_default_blocks(
                data_size, CodecParams(k=k, n=k, q=q),
                max(threads, max(thread_counts))))
        recs = bench_pair(data, params, repetitions, threads, rng)
        out[threads] = recs[0].wall_time
    return out


CSV_COLUMNS = ("direction,k,n,q,data_size,threads,block_chunks,"
               "repetitions,wall_time_median_s,throughput_bytes_per_s,"
               "runs_s")


def write_csv(records: Sequence[BenchRecord], path: str) -> str:
    """One row per record; raw runs kept semicolon-separated."""
    with open(path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for r in records:
            runs = ";".join(f"{t:.6f}" for t in r.runs)
            fh.write(f"{r.direction},{r.k},{r.n},{r.q},{r.data_size},"
                     f"{r.threads},{r.block_chunks},{len(r.runs)},"
                     f"{r.wall_time:.6f},{r.throughput:.1f},{runs}\n")
    return path


def fit_k_sweep(records: Sequence[BenchRecord],
                direction: str = "fragment") -> LinearFit:
    pts = sorted((r.k, r.wall_time) for r in records
                 if r.direction == direction)
    return linear_fit([p[0] for p in pts], [p[1] for p in pts])


def fit_size_sweep(records: Sequence[BenchRecord],
                   direction: str = "fragment") -> LinearFit:
    pts = sorted((r.data_size, r.wall_time) for r in records
                 if r.direction == direction)
    return linear_fit([p[0] for p in pts], [p[1] for p in pts])
