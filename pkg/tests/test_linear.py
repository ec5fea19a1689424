import numpy as np
import pytest

from rlblas.channel import draw_channel, draw_noise, snr_to_sigma2
from rlblas.constellation import build_qam
from rlblas.flops import FlopLedger
from rlblas.las import las_search, ml_cost
from rlblas.linear import (DegenerateChannelError, SearchSpaceError, SingularMatrixError,
                           build_gram, matched_filter_detect, ml_oracle, mmse_detect,
                           mmse_equalize, mmse_sic_detect, zf_detect, zf_equalize)
from rlblas.rlb import rlb_las_detect

QPSK = build_qam(4)


def instance(N, K, snr_db, seed, c=QPSK):
    gen = np.random.default_rng(seed)
    H = draw_channel(N, K, gen)
    x = c.points[gen.integers(0, c.order, K)]
    sigma2 = snr_to_sigma2(snr_db, K, c.mean_energy)
    return H, x, H @ x + draw_noise(N, sigma2, gen), sigma2


def orthonormal(N, K, seed=0):
    gen = np.random.default_rng(seed)
    q, _ = np.linalg.qr(gen.standard_normal((N, K)) + 1j * gen.standard_normal((N, K)))
    return q


def test_gram_of_orthonormal_columns_is_identity():
    H = orthonormal(6, 4)
    cache = build_gram(H, np.zeros(6))
    assert np.allclose(cache.G, np.eye(4), atol=1e-12)


def test_gram_hand_example():
    cache = build_gram(np.array([[1], [1j]]), np.array([1, 0]))
    assert cache.G.shape == (1, 1) and cache.G[0, 0] == 2
    assert cache.mf[0] == 1


def test_gram_hermitian_and_exact():
    H, _, y, _ = instance(10, 7, 5, 1)
    cache = build_gram(H, y)
    assert np.linalg.norm(cache.G - cache.G.conj().T) == 0
    direct = np.einsum("pi,pj->ij", H.conj(), H)
    assert np.linalg.norm(cache.G - direct) <= 1e-10 * np.linalg.norm(direct)
    assert np.all(cache.diag > 0)
    assert cache.y_energy == pytest.approx(np.sum(np.abs(y) ** 2))


def test_mf_exact_on_orthonormal_channel():
    H = orthonormal(8, 5)
    x = QPSK.points[[0, 3, 1, 2, 2]]
    assert np.array_equal(matched_filter_detect(build_gram(H, H @ x), QPSK), x)


def test_mf_scalar():
    h = 0.3 - 1.7j
    c = build_qam(4, "integer")
    assert matched_filter_detect(build_gram(np.array([[h]]), np.array([h * (1 + 1j)])), c)[0] == 1 + 1j


def test_mf_matches_loop_oracle():
    H, _, y, _ = instance(4, 4, 20, 2)
    got = matched_filter_detect(build_gram(H, y), QPSK)
    for p in range(4):
        num = sum(np.conj(H[i, p]) * y[i] for i in range(4))
        den = sum(abs(H[i, p]) ** 2 for i in range(4))
        soft = num / den
        nearest = min(QPSK.points, key=lambda q: abs(soft - q))
        assert got[p] == nearest


def test_mf_degenerate_channel():
    H = np.array([[1, 0], [1, 0]], dtype=complex)
    with pytest.raises(DegenerateChannelError):
        matched_filter_detect(build_gram(H, np.ones(2)), QPSK)


def test_zf_noiseless_exact_and_scalar():
    H, x, _, _ = instance(6, 6, 10, 3)
    assert np.array_equal(zf_detect(H, H @ x, QPSK), x)
    h, y = np.array([[0.4 + 0.2j]]), np.array([0.1 - 0.3j])
    assert np.array_equal(zf_detect(h, y, QPSK), matched_filter_detect(build_gram(h, y), QPSK))


def test_zf_residual():
    H, _, y, _ = instance(8, 6, 5, 4)
    x_soft = zf_equalize(H, y)
    assert np.linalg.norm(H.conj().T @ H @ x_soft - H.conj().T @ y) < 1e-8


def test_zf_singular():
    H = np.array([[1, 1], [2, 2], [3, 3]], dtype=complex)
    with pytest.raises(SingularMatrixError):
        zf_detect(H, np.ones(3), QPSK)


def test_mmse_zero_noise_matches_zf():
    H, _, y, _ = instance(6, 5, 8, 5)
    assert np.allclose(mmse_equalize(H, y, 0.0), zf_equalize(H, y), atol=1e-8)
    assert np.array_equal(mmse_detect(H, y, 0.0, QPSK), zf_detect(H, y, QPSK))


def test_mmse_infinite_noise_gives_tie_break_point():
    H, _, y, _ = instance(4, 4, 0, 6)
    assert np.all(mmse_detect(H, y, np.inf, QPSK) == QPSK.points[0])


def test_mmse_matches_direct_formula():
    H, _, y, sigma2 = instance(7, 5, 6, 7)
    direct = np.linalg.inv(H.conj().T @ H + sigma2 * np.eye(5)) @ H.conj().T @ y
    assert np.allclose(mmse_equalize(H, y, sigma2), direct, atol=1e-10)
    assert np.array_equal(mmse_detect(H, y, sigma2, QPSK), QPSK.slice(direct))


def test_sic_orthogonal_noiseless():
    H = orthonormal(6, 6, 1) * np.array([3, 1, 2, 0.5, 1.5, 4])
    x = QPSK.points[[1, 2, 3, 0, 0, 2]]
    assert np.array_equal(mmse_sic_detect(H, H @ x, 0.01, QPSK), x)


def test_sic_single_user_is_mmse():
    H, _, y, sigma2 = instance(4, 1, 3, 8)
    assert np.array_equal(mmse_sic_detect(H, y, sigma2, QPSK), mmse_detect(H, y, sigma2, QPSK))


def test_sic_ordering_against_sequential_oracle():
    """Reimplement ordered SIC with explicit inverses and compare decisions."""
    H, _, y, sigma2 = instance(6, 6, 10, 9)
    remaining, r, out = list(range(6)), y.copy(), np.zeros(6, complex)
    while remaining:
        Hr = H[:, remaining]
        W = np.linalg.inv(Hr.conj().T @ Hr + sigma2 * np.eye(len(remaining)))
        pick = int(np.argmin(np.diag(W).real))
        k = remaining.pop(pick)
        out[k] = QPSK.slice((W @ Hr.conj().T @ r)[pick])
        r = r - H[:, k] * out[k]
    assert np.array_equal(mmse_sic_detect(H, y, sigma2, QPSK), out)


def test_ml_oracle_noiseless_and_scalar():
    H, x, _, _ = instance(4, 4, 10, 10)
    d, cost = ml_oracle(H, H @ x, QPSK)
    assert np.array_equal(d, x)
    assert cost == pytest.approx(-np.sum(np.abs(H @ x) ** 2))
    h, y = np.array([[1.2 - 0.3j]]), np.array([-0.9 + 0.2j])
    d, _ = ml_oracle(h, y, QPSK)
    assert d[0] == min(QPSK.points, key=lambda q: abs(y[0] - h[0, 0] * q))


def test_ml_oracle_lexicographic_tie_break():
    # zero channel makes every vector tie; the first candidate wins
    H = np.zeros((2, 2), complex)
    d, _ = ml_oracle(H, np.zeros(2), QPSK)
    assert np.array_equal(d, QPSK.points[[0, 0]])


def test_ml_oracle_cap():
    with pytest.raises(SearchSpaceError):
        ml_oracle(np.ones((11, 11)), np.ones(11), QPSK)


@pytest.mark.parametrize("seed", range(5))
def test_ml_oracle_beats_every_detector(seed):
    H, _, y, sigma2 = instance(4, 4, 10, 100 + seed)
    _, best = ml_oracle(H, y, QPSK)
    cache = build_gram(H, y)
    mf = matched_filter_detect(cache, QPSK)
    outs = [mf, zf_detect(H, y, QPSK), mmse_detect(H, y, sigma2, QPSK),
            mmse_sic_detect(H, y, sigma2, QPSK), las_search(mf, cache, QPSK).d,
            rlb_las_detect(H, y, sigma2, QPSK, rng=seed).decision]
    for d in outs:
        assert ml_cost(d, cache) >= best - 1e-9


def test_sic_ber_between_mmse_and_ml():
    K, snr, trials = 8, 12, 400
    errs = {"mmse": 0, "sic": 0, "ml": 0}
    for t in range(trials):
        H, x, y, sigma2 = instance(K, K, snr, 1000 + t)
        bits = QPSK.symbols_to_bits(x)
        for name, d in (("mmse", mmse_detect(H, y, sigma2, QPSK)),
                        ("sic", mmse_sic_detect(H, y, sigma2, QPSK)),
                        ("ml", ml_oracle(H, y, QPSK)[0])):
            errs[name] += int(np.sum(QPSK.symbols_to_bits(d) != bits))
    assert errs["ml"] <= errs["sic"] <= errs["mmse"]


def test_ledgers_charge_work():
    H, _, y, sigma2 = instance(6, 4, 8, 11)
    ledgers = [FlopLedger() for _ in range(4)]
    matched_filter_detect(build_gram(H, y, ledgers[0]), QPSK, ledgers[0])
    zf_detect(H, y, QPSK, ledgers[1])
    mmse_sic_detect(H, y, sigma2, QPSK, ledgers[2])
    ml_oracle(H, y, QPSK, ledgers[3])
    totals = [lg.total for lg in ledgers]
    assert 0 < totals[0] < totals[1] < totals[2] < totals[3]
