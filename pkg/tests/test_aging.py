import numpy as np
import pytest

from bdris.aging import (ArModel, PatternBank, ar_predict, build_pattern_bank,
                         classify_pattern, default_bank_grid, derotate,
                         fit_ar_from_history, fit_jakes_ar, jakes_acf,
                         jakes_acf_sequence, levinson_durbin, preprocess_csi,
                         sample_acf)


# ---------------------------------------------------------------------------
# Jakes autocorrelation
# ---------------------------------------------------------------------------

def bessel_j0_oracle(x):
    """High-precision independent reference via mpmath."""
    import mpmath
    with mpmath.workdps(40):
        return float(mpmath.besselj(0, mpmath.mpf(x)))


def test_jakes_acf_trivial_values():
    assert jakes_acf(0.01, 0) == 1.0
    assert jakes_acf(0.0, 7) == 1.0


def test_jakes_acf_rejects_negative_doppler():
    with pytest.raises(ValueError):
        jakes_acf(-0.1, 1)


def test_jakes_acf_matches_series_oracle_spot():
    val = jakes_acf(0.005, 10)
    assert abs(val - bessel_j0_oracle(2 * np.pi * 0.005 * 10)) < 1e-10


def test_jakes_acf_oracle_grid():
    # 100-point grid spanning both evaluation branches
    f_ns = np.linspace(0.001, 0.5, 10)
    lags = range(0, 50, 5)
    for f_n in f_ns:
        for lag in lags:
            got = jakes_acf(f_n, lag)
            ref = bessel_j0_oracle(2 * np.pi * f_n * lag)
            assert abs(got - ref) < 1e-12, (f_n, lag)


def test_jakes_acf_scipy_cross_check():
    from scipy.special import j0
    xs = np.linspace(0.0, 40.0, 400)
    errs = [abs(jakes_acf(x / (2 * np.pi), 1) - j0(x)) for x in xs]
    assert max(errs) < 1e-12


# ---------------------------------------------------------------------------
# Levinson-Durbin
# ---------------------------------------------------------------------------

def test_levinson_order_one_closed_form():
    for f_n in (0.001, 0.005, 0.02):
        model = levinson_durbin([1.0, jakes_acf(f_n, 1)], epsilon=0.1)
        expected = -jakes_acf(f_n, 1) / 1.1
        assert abs(model.coeffs[0] - expected) < 1e-12


def test_levinson_white_noise():
    acf = np.zeros(9)
    acf[0] = 1.0
    model = levinson_durbin(acf, epsilon=0.1)
    np.testing.assert_allclose(model.coeffs, 0.0, atol=1e-14)
    assert abs(model.sigma2 - 1.1) < 1e-14


def toeplitz_residual(model):
    acf = np.asarray(model.acf, dtype=float)
    q = model.order
    idx = np.arange(q)
    r = acf[np.abs(idx[:, None] - idx[None, :])].astype(float)
    r = r + model.epsilon * np.eye(q)
    w = acf[1:q + 1]
    return np.max(np.abs(r @ model.coeffs + w))


def test_levinson_residual_against_direct_solve():
    model = fit_jakes_ar(0.005, 16, epsilon=0.1)
    assert toeplitz_residual(model) < 1e-10
    # cross-check the coefficients against numpy's dense solve
    acf = jakes_acf_sequence(0.005, 16)
    idx = np.arange(16)
    r = acf[np.abs(idx[:, None] - idx[None, :])] + 0.1 * np.eye(16)
    direct = -np.linalg.solve(r, acf[1:])
    np.testing.assert_allclose(model.coeffs, direct, atol=1e-12)


@pytest.mark.parametrize("q", [4, 16, 32])
@pytest.mark.parametrize("f_n", [0.001, 0.005, 0.02, 0.05])
def test_levinson_stability_sweep(q, f_n):
    model = fit_jakes_ar(f_n, q, epsilon=0.1)
    assert toeplitz_residual(model) < 1e-10
    assert np.max(np.abs(model.poles())) < 1.0


def test_levinson_variance_formula():
    model = fit_jakes_ar(0.01, 8, epsilon=0.1)
    acf = model.acf
    expected = acf[0] + 0.1 + model.coeffs @ acf[1:9]
    assert abs(model.sigma2 - expected) < 1e-12
    assert model.sigma2 >= 0


def test_levinson_singular_without_loading():
    with pytest.raises(np.linalg.LinAlgError):
        levinson_durbin(np.ones(9), epsilon=0.0)


def test_levinson_input_validation():
    with pytest.raises(ValueError):
        levinson_durbin([1.0], epsilon=0.1)
    with pytest.raises(ValueError):
        levinson_durbin([-1.0, 0.5], epsilon=0.1)
    with pytest.raises(ValueError):
        levinson_durbin([1.0, 0.5], epsilon=-0.1)


# ---------------------------------------------------------------------------
# AR prediction
# ---------------------------------------------------------------------------

def test_ar_predict_exact_on_noiseless_recursion():
    rng = np.random.default_rng(0)
    q = 4
    coeffs = np.array([-0.5, 0.2, -0.05, 0.01])
    model = ArModel(order=q, coeffs=coeffs, sigma2=0.0, epsilon=0.0,
                    acf=np.ones(q + 1))
    series = [rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
              for _ in range(q)]
    full = list(series)
    for _ in range(10):
        nxt = -sum(coeffs[i] * full[-1 - i] for i in range(q))
        full.append(nxt)
    preds = ar_predict(np.array(series), model, 10)
    for p, ref in zip(preds, full[q:]):
        np.testing.assert_allclose(p, ref, atol=1e-12)


def test_ar_predict_zero_model():
    model = ArModel(order=3, coeffs=np.zeros(3), sigma2=1.0, epsilon=0.1,
                    acf=np.ones(4))
    preds = ar_predict(np.ones((3, 2, 2)), model, 4)
    for p in preds:
        np.testing.assert_array_equal(p, 0.0)


def test_ar_predict_requires_history():
    model = ArModel(order=5, coeffs=np.zeros(5), sigma2=1.0, epsilon=0.1,
                    acf=np.ones(6))
    with pytest.raises(ValueError):
        ar_predict(np.ones((3, 2, 2)), model, 1)


def test_ar_predict_constant_signal_bound():
    # f_n = 0 channel with its own fitted AR: the loading bias bounds the
    # one-step error by eps/(1+eps)
    eps = 0.1
    model = fit_jakes_ar(0.0, 8, epsilon=eps)
    const = np.ones((8, 3, 2), dtype=complex) * (1.5 - 0.5j)
    pred = ar_predict(const, model, 1)[0]
    rel = np.linalg.norm(pred - const[0]) / np.linalg.norm(const[0])
    assert rel < eps / (1 + eps) + 1e-6


# ---------------------------------------------------------------------------
# preprocessing, sample ACF, bank
# ---------------------------------------------------------------------------

def test_preprocess_csi_real_channels():
    history = np.ones((3, 4, 2), dtype=complex)
    c = preprocess_csi(history, 3)
    assert c.shape == (8, 6)
    np.testing.assert_array_equal(c[4:], 0.0)


def test_preprocess_csi_imaginary_unit():
    c = preprocess_csi(np.array([[[1j]]]), 1)
    np.testing.assert_array_equal(c, [[0.0], [1.0]])


def test_preprocess_csi_roundtrip():
    rng = np.random.default_rng(1)
    history = rng.standard_normal((4, 3, 2)) + 1j * rng.standard_normal((4, 3, 2))
    c = preprocess_csi(history, 4)
    m = 3
    rebuilt = np.stack([c[:m, v * 2:(v + 1) * 2] + 1j * c[m:, v * 2:(v + 1) * 2]
                        for v in range(4)])
    np.testing.assert_allclose(rebuilt, history)


def test_preprocess_csi_length_mismatch():
    with pytest.raises(ValueError):
        preprocess_csi(np.ones((3, 2, 2)), 4)


def test_sample_acf_recovers_known_correlation():
    rng = np.random.default_rng(2)
    n_tracks = 4000
    rho = 0.8
    x = np.empty((50, n_tracks), dtype=complex)
    x[0] = rng.standard_normal(n_tracks) + 1j * rng.standard_normal(n_tracks)
    x[0] /= np.sqrt(2)
    for l in range(1, 50):
        w = (rng.standard_normal(n_tracks) + 1j * rng.standard_normal(n_tracks))
        x[l] = rho * x[l - 1] + np.sqrt((1 - rho ** 2) / 2) * w
    acf = sample_acf(x.reshape(50, n_tracks, 1), 3)
    # biased estimator: expectation is (1 - lag/V) * rho^lag
    for lag in range(1, 4):
        expected = (1 - lag / 50) * rho ** lag
        assert abs(acf[lag] - expected) < 0.02


def test_sample_acf_zero_extension():
    acf = sample_acf(np.ones((4, 1, 1)), 6)
    assert acf[5] == 0.0 and acf[6] == 0.0
    assert acf[0] == 1.0


def test_fit_ar_from_history_runs():
    rng = np.random.default_rng(3)
    history = rng.standard_normal((16, 4, 2)) + 1j * rng.standard_normal((16, 4, 2))
    model = fit_ar_from_history(history, 16)
    assert model.order == 16
    assert np.max(np.abs(model.poles())) < 1.0


def test_pattern_bank_ordering():
    with pytest.raises(ValueError):
        PatternBank([(0.01, None), (0.001, None)])
    bank = build_pattern_bank([0.004, 0.001], order=4)
    assert bank.f_n_values == [0.001, 0.004]


def test_default_bank_grid():
    grid = default_bank_grid()
    assert len(grid) == 10
    assert grid[0] == pytest.approx(2.5e-4)
    assert grid[-1] == pytest.approx(1e-2)
    assert all(b > a for a, b in zip(grid, grid[1:]))


class _StubClassifier:
    def __init__(self, scores):
        self._scores = np.asarray(scores, dtype=float)

    def decision_scores(self, x):
        return np.tile(self._scores, (x.shape[0], 1))


def test_classify_pattern_argmax_and_tie_break():
    bank = build_pattern_bank([0.001, 0.002, 0.004], order=4)
    c = np.zeros((4, 4))
    chosen = classify_pattern(_StubClassifier([0.1, 0.9, 0.2]), c, bank)
    assert chosen.f_n == 0.002
    tied = classify_pattern(_StubClassifier([0.5, 0.5, 0.1]), c, bank)
    assert tied.f_n == 0.001  # lowest index wins ties


def test_classify_pattern_single_entry_bank():
    bank = build_pattern_bank([0.003], order=4)
    chosen = classify_pattern(_StubClassifier([0.7]), np.zeros((2, 2)), bank)
    assert chosen.f_n == 0.003


def test_derotate_removes_common_phase():
    f_n = 0.01
    base = np.ones((5, 2, 2), dtype=complex)
    rotated = np.stack([base[0] * np.exp(2j * np.pi * f_n * l) for l in range(5)])
    flat = derotate(rotated, f_n)
    for l in range(5):
        np.testing.assert_allclose(flat[l], base[0], atol=1e-12)
