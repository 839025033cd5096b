"""Keyless k-of-n data fragmentation.

Plaintext is chain-encoded into k interdependent share streams (no
fragment decodes without its run's context), optionally extended to n
fragments with a systematic Reed-Solomon code so that any k of them
recover the data exactly. Ships with a statistical evaluation harness
and a timing benchmark.
"""

from . import errors
from .bench import (BenchRecord, LinearFit, bench_pair, fit_k_sweep,
                    fit_size_sweep, linear_fit, run_k_sweep, run_size_sweep,
                    thread_speedup, write_csv)
from .codec import (CodecParams, decode_range, decode_share, defragment,
                    derive_point, encode_share, fragment, generate_seed)
from .container import (Fragment, FragmentHeader, parse_fragment,
                        validate_set, write_fragment)
from .errors import KfragError
from .evalsec import (CHI2_THRESHOLD, EvalReport, IdaMatrix, SeedSensitivity,
                      bit_difference, build_ida_matrix, chi_squared_uniform,
                      evaluate_full, ida_fragment, load_sample_text,
                      pdf_histogram, pearson_correlation, recurrence_points,
                      seed_sensitivity_report, shannon_entropy,
                      write_recurrence_csv)
from .gf import (GF256, GF65536, FieldParams, GFTables, field_for, gf_add,
                 gf_inv, gf_mul, gf_pow)
from .redundancy import lagrange_eval, rs_extend, rs_reconstruct

__version__ = "1.0.0"

__all__ = [
    "BenchRecord", "CHI2_THRESHOLD", "CodecParams", "EvalReport",
    "FieldParams", "Fragment", "FragmentHeader", "GF256", "GF65536",
    "GFTables", "IdaMatrix", "KfragError", "LinearFit", "SeedSensitivity",
    "bench_pair", "bit_difference", "build_ida_matrix", "chi_squared_uniform",
    "decode_range", "decode_share", "defragment", "derive_point",
    "encode_share", "errors", "evaluate_full", "field_for", "fit_k_sweep",
    "fit_size_sweep", "fragment", "generate_seed", "gf_add", "gf_inv",
    "gf_mul", "gf_pow", "ida_fragment", "lagrange_eval", "linear_fit",
    "load_sample_text", "parse_fragment", "pdf_histogram",
    "pearson_correlation", "recurrence_points", "rs_extend", "rs_reconstruct",
    "run_k_sweep", "run_size_sweep", "seed_sensitivity_report",
    "shannon_entropy", "thread_speedup", "validate_set", "write_csv",
    "write_fragment", "write_recurrence_csv",
]
