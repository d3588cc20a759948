import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import jacobi_eigen_spectral, opnorm_grid
from sparse_hw.matrix_norms import (
    MatrixStats,
    frobenius,
    gamma1,
    gamma2,
    load_matrix_bin,
    load_matrix_csv,
    lp_norm,
    max_abs,
    mixed_norm,
    opnorm,
    opnorm_detail,
    row_weighted_max,
    save_matrix_bin,
    save_matrix_csv,
    weighted_spectral,
)
from sparse_hw.streams import stream

EXCHANGE = np.array([[0.0, 1.0], [1.0, 0.0]])
SYM22 = np.array([[1.0, 2.0], [2.0, 1.0]])


def random_sym(seed: int, n: int) -> np.ndarray:
    m = stream(seed, 0).standard_normal((n, n))
    return 0.5 * (m + m.T)


def test_frobenius_and_max_abs_basics():
    assert math.isclose(frobenius(np.eye(2)), math.sqrt(2.0))
    assert max_abs(np.eye(2)) == 1.0
    assert frobenius(np.zeros((3, 2))) == 0.0
    assert max_abs(np.zeros((3, 2))) == 0.0
    assert math.isclose(frobenius(SYM22), math.sqrt(10.0))
    assert max_abs(SYM22) == 2.0


def test_matrix_validation():
    with pytest.raises(ValueError):
        frobenius([1.0, 2.0])  # 1-D
    with pytest.raises(ValueError):
        max_abs([[math.inf, 0.0], [0.0, 1.0]])


def test_lp_norm_cases():
    v = [3.0, -4.0]
    assert lp_norm(v, 1) == 7.0
    assert lp_norm(v, 2) == 5.0
    assert lp_norm(v, math.inf) == 4.0
    assert lp_norm([], 2) == 0.0
    with pytest.raises(ValueError):
        lp_norm(v, 0.5)


def test_lp_norm_avoids_overflow():
    # naive sum of |x|^7 would overflow at 1e200 entries
    v = [1e200, 1e200]
    assert math.isclose(lp_norm(v, 7), 1e200 * 2 ** (1 / 7))


def test_mixed_norm_values():
    assert math.isclose(mixed_norm(np.eye(2), 4), 2 ** 0.25)
    m = np.array([[0.0, 3.0, 0.0], [0.0, 0.0, 0.0]])
    for r in (1, 2, 3.5, math.inf):
        assert math.isclose(mixed_norm(m, r), 3.0)


@given(st.integers(0, 500))
@settings(deadline=None, max_examples=25)
def test_mixed_norm_r2_equals_frobenius(seed):
    m = stream(seed, 0).standard_normal((3, 4))
    assert math.isclose(mixed_norm(m, 2), frobenius(m), rel_tol=1e-12)


def test_opnorm_closed_forms():
    assert math.isclose(opnorm(np.diag([3.0, -4.0]), 2, 2), 4.0, rel_tol=1e-12)
    assert math.isclose(opnorm(SYM22, 2, math.inf), math.sqrt(5.0))
    assert math.isclose(opnorm(SYM22, 1, math.inf), 2.0)  # max_abs
    m = np.array([[1.0, 2.0], [2.0, 1.0], [0.0, 2.0]])
    assert math.isclose(opnorm(m, 1, 2), 3.0)  # max column l2 norm
    with pytest.raises(ValueError):
        opnorm(SYM22, 0.9, 2)


def test_opnorm_spectral_vs_jacobi_oracle():
    for seed, n in ((30, 4), (31, 9), (32, 16)):
        m = random_sym(seed, n)
        ours = opnorm(m, 2, 2)
        ref = jacobi_eigen_spectral(m)
        assert math.isclose(ours, ref, rel_tol=1e-8)


def test_opnorm_rectangular_spectral_vs_svd():
    m = stream(33, 0).standard_normal((5, 3))
    assert math.isclose(opnorm(m, 2, 2), float(np.linalg.svd(m, compute_uv=False)[0]), rel_tol=1e-10)


def test_opnorm_alternating_vs_grid_oracle():
    # nonconvex pairs: both sides are lower bounds of the true sup, so they
    # must agree to the grid resolution
    for seed, pair in ((40, (1.5, 3.0)), (41, (1.5, 3.0)), (42, (3.0, 4.0))):
        m = stream(seed, 0).standard_normal((3, 3))
        ours = opnorm(m, *pair, restarts=64, seed=seed)
        ref = opnorm_grid(m, *pair, n_random=100_000, seed=seed)
        assert abs(ours - ref) <= 0.01 * ref


def test_opnorm_detail_reports_convergence():
    res = opnorm_detail(stream(43, 0).standard_normal((3, 3)), 1.5, 3.0)
    assert res.restarts == 64
    assert res.converged
    assert res.value > 0


def test_opnorm_zero_matrix():
    assert opnorm(np.zeros((2, 2)), 1.5, 3.0) == 0.0


def test_gamma1_values():
    p = (0.5, 0.25)
    assert math.isclose(gamma1(SYM22, p), 1.75)
    m = random_sym(50, 4)
    assert math.isclose(gamma1(m, np.ones(4)), frobenius(m) ** 2, rel_tol=1e-12)
    assert gamma1(m, np.zeros(4)) == 0.0
    with pytest.raises(ValueError):
        gamma1(np.ones((2, 3)), (0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        gamma1(SYM22, (0.5, 1.5))


def test_gamma2_values():
    assert math.isclose(gamma2(SYM22, (0.5, 0.25)), 1.0)
    assert gamma2(np.diag([1.0, -5.0, 2.0]), (0.1, 0.1, 0.1)) == 5.0
    m = random_sym(51, 4)
    ab = np.abs(m)
    off = ab - np.diag(np.diag(ab))
    expected = max(float(np.max(off.sum(axis=1))), float(np.max(np.abs(np.diag(m)))))
    assert math.isclose(gamma2(m, np.ones(4)), expected, rel_tol=1e-12)


def test_weighted_functionals():
    assert math.isclose(weighted_spectral(np.eye(3), (1.0, 0.25, 1 / 9)), 1.0, rel_tol=1e-9)
    assert math.isclose(row_weighted_max(np.eye(3), (1.0, 0.25, 1 / 9)), 1.0)
    m = random_sym(52, 5)
    assert math.isclose(weighted_spectral(m, np.ones(5)), opnorm(m, 2, 2), rel_tol=1e-9)
    assert weighted_spectral(m, np.zeros(5)) == 0.0
    assert row_weighted_max(m, np.zeros(5)) == 0.0


@given(st.integers(0, 10**6))
@settings(deadline=None, max_examples=40)
def test_norm_chain_inequalities(seed):
    rng = stream(seed, 0)
    n = int(rng.integers(2, 9))
    m = rng.standard_normal((n, n))
    m = 0.5 * (m + m.T)
    p = rng.random(n)
    tol = 1e-9
    op2inf = opnorm(m, 2, math.inf)
    op22 = opnorm(m, 2, 2)
    assert row_weighted_max(m, p) <= op2inf + tol
    assert op2inf <= op22 + tol
    assert weighted_spectral(m, p) <= op22 + tol
    assert max_abs(m) <= op22 + tol


def test_conjugate_exponent_chain():
    # ||A||_{a -> a*} <= ||A||_{2 -> a*} <= ||A||_{2 -> 2} for a in [1, 2];
    # both nonconvex values are certified lower bounds, hence the slack
    for seed in (60, 61, 62):
        m = stream(seed, 0).standard_normal((3, 3))
        for a in (1.25, 1.5, 2.0):
            astar = a / (a - 1.0) if a > 1.0 else math.inf
            lo = opnorm(m, a, astar, seed=seed)
            mid = opnorm(m, 2, astar, seed=seed)
            hi = opnorm(m, 2, 2)
            assert lo <= mid * (1 + 1e-6)
            assert mid <= hi * (1 + 1e-6)


def test_gram_frobenius_submultiplicative():
    for seed in (70, 71, 72):
        m = stream(seed, 0).standard_normal((4, 4))
        assert frobenius(m.T @ m) <= opnorm(m, 2, 2) * frobenius(m) * (1 + 1e-12)


def test_matrix_stats_caches_and_protects():
    m = random_sym(80, 4)
    stats = MatrixStats(m)
    v1 = stats.opnorm(2, 2)
    v2 = stats.opnorm(2, 2)
    assert v1 == v2
    assert math.isclose(stats.frobenius(), frobenius(m))
    assert math.isclose(stats.gamma1(0.5), gamma1(m, np.full(4, 0.5)))
    assert math.isclose(stats.gamma2(0.5), gamma2(m, np.full(4, 0.5)))
    assert math.isclose(stats.weighted_spectral(0.5), weighted_spectral(m, np.full(4, 0.5)))
    assert math.isclose(stats.row_weighted_max(0.5), row_weighted_max(m, np.full(4, 0.5)))
    assert math.isclose(stats.mixed_norm(3), mixed_norm(m, 3))
    assert math.isclose(stats.max_abs(), max_abs(m))
    with pytest.raises(ValueError):
        stats.matrix[0, 0] = 99.0


def test_matrix_stats_concurrent_reads():
    stats = MatrixStats(random_sym(81, 12))
    results = []

    def read():
        results.append(stats.opnorm(2, 2))

    threads = [threading.Thread(target=read) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


def test_csv_round_trip(tmp_path):
    m = stream(90, 0).standard_normal((3, 5))
    path = tmp_path / "m.csv"
    save_matrix_csv(path, m)
    back = load_matrix_csv(path)
    assert back.shape == (3, 5)
    assert np.allclose(back, m, atol=0, rtol=1e-15)


def test_csv_single_row_keeps_2d(tmp_path):
    path = tmp_path / "row.csv"
    save_matrix_csv(path, np.array([[1.0, 2.0, 3.0]]))
    assert load_matrix_csv(path).shape == (1, 3)


def test_bin_round_trip_exact(tmp_path):
    m = stream(91, 0).standard_normal((4, 2))
    path = tmp_path / "m.bin"
    save_matrix_bin(path, m)
    assert np.array_equal(load_matrix_bin(path), m)


def test_bin_truncation_errors(tmp_path):
    m = np.ones((2, 2))
    path = tmp_path / "m.bin"
    save_matrix_bin(path, m)
    raw = path.read_bytes()
    short_header = tmp_path / "h.bin"
    short_header.write_bytes(raw[:8])
    with pytest.raises(ValueError, match="header"):
        load_matrix_bin(short_header)
    short_payload = tmp_path / "p.bin"
    short_payload.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="payload"):
        load_matrix_bin(short_payload)
