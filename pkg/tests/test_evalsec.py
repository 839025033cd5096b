import math

import numpy as np
import pytest

import oracles
from kfrag.codec import CodecParams, encode_chunks
from kfrag.errors import (DelayTooLarge, EmptyInput, InvalidMatrix,
                          InvalidParams, LengthMismatch, SampleTooSmall,
                          ZeroVariance)
from kfrag.evalsec import (CHI2_THRESHOLD, IdaMatrix, bit_difference,
                           build_ida_matrix, chi_squared_uniform,
                           evaluate_full, ida_fragment, load_sample_text,
                           pdf_histogram, pearson_correlation,
                           recurrence_points, seed_sensitivity_report,
                           shannon_entropy, write_recurrence_csv)
from kfrag.gf import GF256


def test_entropy_analytic_cases():
    assert shannon_entropy(bytes(range(256))) == pytest.approx(8.0)
    assert shannon_entropy(b"\x41" * 1000) == 0.0
    assert shannon_entropy(b"\x00\x01" * 500) == pytest.approx(1.0)
    with pytest.raises(EmptyInput):
        shannon_entropy(b"")


def test_entropy_matches_plain_reimplementation(rng):
    data = bytes(rng.randrange(256) for _ in range(4096))
    assert shannon_entropy(data) == pytest.approx(
        oracles.entropy_plain(data), abs=1e-12)


def test_entropy_bounded_by_distinct_count(rng):
    data = bytes(rng.choice((3, 7, 11, 200)) for _ in range(2000))
    assert shannon_entropy(data) <= math.log2(4) + 1e-12


def test_chi_squared_analytic_cases():
    assert chi_squared_uniform(bytes(range(256)),
                               min_expected=0).statistic == 0.0
    # one value twice, another absent
    sample = bytes(range(255)) + b"\x00"
    res = chi_squared_uniform(sample, min_expected=0)
    assert res.statistic == pytest.approx(2.0)
    assert res.passed
    res = chi_squared_uniform(b"\x07" * 1280)
    assert res.statistic > CHI2_THRESHOLD
    assert not res.passed
    assert res.statistic == pytest.approx(oracles.chi2_plain(b"\x07" * 1280))


def test_chi_squared_minimum_sample():
    with pytest.raises(SampleTooSmall):
        chi_squared_uniform(bytes(range(256)))
    chi_squared_uniform(bytes(range(256)) * 5)


def test_chi_squared_matches_plain_reimplementation(rng):
    data = bytes(rng.randrange(256) for _ in range(2560))
    got = chi_squared_uniform(data).statistic
    assert got == pytest.approx(oracles.chi2_plain(data), rel=1e-12)


def test_pdf_histogram():
    pdf = pdf_histogram(bytes(range(256)))
    assert np.allclose(pdf, 1 / 256)
    pdf = pdf_histogram(b"\x41" * 10)
    assert pdf[0x41] == 1.0 and pdf.sum() == pytest.approx(1.0)
    with pytest.raises(EmptyInput):
        pdf_histogram(b"")


def test_pdf_concatenation_is_weighted_average(rng):
    a = bytes(rng.randrange(256) for _ in range(300))
    b = bytes(rng.randrange(256) for _ in range(700))
    combined = pdf_histogram(a + b)
    weighted = 0.3 * pdf_histogram(a) + 0.7 * pdf_histogram(b)
    assert np.allclose(combined, weighted)
    assert abs(combined.sum() - 1.0) < 1e-9


def test_pearson_analytic_cases(rng):
    a = bytes(rng.randrange(256) for _ in range(512))
    assert pearson_correlation(a, a) == pytest.approx(1.0)
    flipped = bytes(255 - v for v in a)
    assert pearson_correlation(a, flipped) == pytest.approx(-1.0)
    with pytest.raises(ZeroVariance):
        pearson_correlation(b"\x05" * 100, a[:100])
    with pytest.raises(LengthMismatch):
        pearson_correlation(a, a[:-1])


def test_pearson_symmetric_and_matches_numpy(rng):
    a = bytes(rng.randrange(256) for _ in range(256))
    b = bytes(rng.randrange(256) for _ in range(256))
    c1 = pearson_correlation(a, b)
    assert c1 == pytest.approx(pearson_correlation(b, a))
    fa = np.frombuffer(a, np.uint8).astype(float)
    fb = np.frombuffer(b, np.uint8).astype(float)
    assert c1 == pytest.approx(float(np.corrcoef(fa, fb)[0, 1]), abs=1e-12)
    # scale-location invariance on the real-valued shadow
    assert float(np.corrcoef(fa, 2.0 * fb + 3.0)[0, 1]) == pytest.approx(c1)


def test_bit_difference():
    a = b"\x0f\xf0"
    assert bit_difference(a, a) == 0.0
    assert bit_difference(a, bytes(v ^ 0xFF for v in a)) == 1.0
    assert bit_difference(b"\x01", b"\x03") == pytest.approx(1 / 8)
    assert bit_difference(a, b"\xf0\x0f") == \
        bit_difference(b"\xf0\x0f", a)
    with pytest.raises(LengthMismatch):
        bit_difference(a, a + b"x")


def test_recurrence_points():
    pts = recurrence_points(bytes([1, 2, 3]), 1)
    assert pts.tolist() == [[1, 2], [2, 3]]
    assert len(recurrence_points(bytes(100), 7)) == 93
    assert set(map(tuple, recurrence_points(b"\x05" * 50, 3).tolist())) \
        == {(5, 5)}
    with pytest.raises(DelayTooLarge):
        recurrence_points(bytes(5), 5)
    with pytest.raises(InvalidParams):
        recurrence_points(bytes(5), 0)


def test_recurrence_csv(tmp_path):
    path = write_recurrence_csv(bytes([9, 8, 7]), 1,
                                str(tmp_path / "rec.csv"))
    lines = open(path).read().splitlines()
    assert lines == ["value_i,value_i_plus_t", "9,8", "8,7"]


def test_seed_sensitivity_control_is_exact_zero(rng, corpus):
    params = CodecParams(k=4, n=4)
    res = seed_sensitivity_report(corpus[:4000], params, rng, flip_bits=0)
    assert res.bit_difference == 0.0


def test_seed_sensitivity_one_bit(rng, corpus):
    params = CodecParams(k=4, n=4)
    res = seed_sensitivity_report(corpus[:4000], params, rng)
    assert abs(res.bit_difference - 0.5) < 0.02
    assert abs(res.correlation) < 0.05


def test_seed_sensitivity_needs_data(rng):
    with pytest.raises(SampleTooSmall):
        seed_sensitivity_report(b"x" * 999, CodecParams(k=2, n=2), rng)


def test_ida_identity_extension_subsamples_plaintext(rng):
    k, n = 3, 5
    rows = np.zeros((k, n), dtype=np.int64)
    for i in range(k):
        rows[i, i] = 1
        for u in range(k, n):
            rows[i, u] = GF256.pow(u + 1, i)
    matrix = IdaMatrix(rows=rows)
    data = bytes(rng.randrange(256) for _ in range(30))
    frags = ida_fragment(data, matrix)
    arr = np.frombuffer(data, np.uint8).reshape(-1, k)
    for j in range(k):
        assert frags[j] == arr[:, j].tobytes()


def test_ida_preserves_patterns_on_periodic_input():
    block = bytes(range(64))
    data = block * 32
    matrix = build_ida_matrix(4, 6)
    frags = ida_fragment(data, matrix)
    period = 64 // 4
    for frag in frags:
        assert frag == frag[:period] * (len(frag) // period)
    # recurrence support stays as small as the plaintext's
    plain_pairs = {tuple(p) for p in recurrence_points(data, 1).tolist()}
    for frag in frags:
        frag_pairs = {tuple(p) for p in recurrence_points(frag, 1).tolist()}
        assert len(frag_pairs) <= len(plain_pairs)


def test_ida_any_k_columns_invert_back(rng):
    k, n = 3, 6
    matrix = build_ida_matrix(k, n)
    data = bytes(rng.randrange(256) for _ in range(60))
    frags = ida_fragment(data, matrix)
    arr = np.frombuffer(data, np.uint8).reshape(-1, k)
    cols = rng.sample(range(n), k)
    # solve the k x k system per row with the elimination oracle
    m_sub = [[int(matrix.rows[i, c]) for i in range(k)] for c in cols]
    for row_idx in range(arr.shape[0]):
        rhs = [frags[c][row_idx] for c in cols]
        solved = oracles.gauss_solve(m_sub, rhs)
        assert solved == [int(v) for v in arr[row_idx]]


def test_ida_validation():
    from kfrag.evalsec import _minor_nonsingular
    with pytest.raises(InvalidParams):
        ida_fragment(b"12345", build_ida_matrix(2, 2))
    with pytest.raises(InvalidMatrix):
        build_ida_matrix(3, 2)
    with pytest.raises(InvalidMatrix):
        # more rows than columns
        ida_fragment(b"12", IdaMatrix(rows=np.array([[1], [2]],
                                                    dtype=np.int64)))
    # columns 0,1 linearly dependent; every minor of a built matrix is not
    singular = np.array([[1, 1, 2], [1, 1, 3]], dtype=np.int64)
    assert not _minor_nonsingular(singular, (0, 1), GF256)
    good = build_ida_matrix(2, 3)
    assert _minor_nonsingular(good.rows, (0, 1), GF256)


def test_uniform_input_sanity_guard(rng):
    # on uniform random input the encoding cannot manufacture entropy
    data = bytes(rng.randrange(256) for _ in range(2000))
    params = CodecParams(k=2, n=2)
    shares, _ = encode_chunks(data, params, rng=rng)
    pooled = shares.astype(np.uint8).tobytes()
    assert shannon_entropy(pooled) <= 8.0
    assert abs(shannon_entropy(pooled) - shannon_entropy(data)) < 0.1


def test_evaluate_full_report_structure(rng, corpus, tmp_path):
    report = evaluate_full(corpus[:30000], [2, 3], trials=3, rng=rng,
                           fragment_size=600, out_dir=str(tmp_path))
    assert report.k_values == [2, 3]
    assert 4.0 <= report.original_entropy <= 6.0
    for k in (2, 3):
        assert 0.0 < report.entropy_by_k[k] <= 8.0
        assert 0.0 < report.fragment_entropy_by_k[k] <= 8.0
        assert k in report.ida_entropy_by_k
        assert 0.0 <= report.chi2_pass_rate_by_k[k] <= 1.0
        assert len(report.chi2_stats_by_k[k]) == 3 * k
        assert len(report.corr_orig_by_k[k]) == k
        pairs = report.corr_pairs_by_k[k]
        for i in range(k):
            assert pairs[i][i] == pytest.approx(1.0)
            for j in range(k):
                assert pairs[i][j] == pytest.approx(pairs[j][i])
        assert len(report.bit_diff_by_k[k]) == k
        assert k in report.seed_sensitivity_by_k
        lo, hi = report.pdf_extremes_by_k[k]
        assert 0.0 <= lo <= 1 / 256 <= hi <= 1.0
    assert len(report.recurrence_paths) == 4
    text = report.to_text()
    for line in text.strip().splitlines():
        assert "=" in line
    assert "entropy[k=2]=" in text


def test_evaluate_full_validation(rng, corpus):
    with pytest.raises(InvalidParams):
        evaluate_full(corpus[:5000], [2], trials=0, rng=rng)
    with pytest.raises(InvalidParams):
        evaluate_full(corpus[:5000], [], trials=1, rng=rng)
    with pytest.raises(SampleTooSmall):
        evaluate_full(b"short", [2], trials=1, rng=rng)


def test_corpus_is_english_prose_sized():
    corpus = load_sample_text()
    assert len(corpus) >= 200_000
    h = shannon_entropy(corpus)
    assert 4.0 <= h <= 6.0
