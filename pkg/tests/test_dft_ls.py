import numpy as np
import pytest

from bdris.channel import generate_channel_set, simulate_training
from bdris.config import SystemConfig
from bdris.dft_ls import DftLs
from bdris.metrics import nmse
from bdris.reflections import build_dft_book, random_symmetric_unitary
from bdris.tensor_ops import kron, vec


def ls_cfg(m=4, groups=1, **kw):
    base = dict(n_bs=3, n_users=2, n_ris=m, groups=groups,
                n_blocks=groups * (m // groups) ** 2,
                t_coherence=10000, f_n=0.005)
    base.update(kw)
    return SystemConfig(**base)


def make_problem(cfg, seed, snr_db=np.inf):
    rng = np.random.default_rng(seed)
    channels = generate_channel_set(cfg, rng, n_intervals=1)
    book, phi = build_dft_book(cfg)
    obs = simulate_training(channels, book, 1, snr_db, rng)
    return channels, book, phi, obs


def true_composite(channels, group_size, groups):
    blocks = []
    for g in range(groups):
        sl = slice(g * group_size, (g + 1) * group_size)
        blocks.append(kron(channels.E(1)[sl, :].T, channels.H[:, sl]))
    return np.concatenate(blocks, axis=1)


def test_noiseless_composite_recovery():
    cfg = ls_cfg(m=4)
    channels, _, _, obs = make_problem(cfg, 0)
    est = DftLs(4, 1).fit(obs.Y)
    z = true_composite(channels, 4, 1)
    assert np.linalg.norm(est.Z_ - z) / np.linalg.norm(z) < 1e-10


def test_noiseless_composite_recovery_group():
    cfg = ls_cfg(m=4, groups=2)
    channels, _, _, obs = make_problem(cfg, 1)
    est = DftLs(2, 2).fit(obs.Y)
    z = true_composite(channels, 2, 2)
    assert np.linalg.norm(est.Z_ - z) / np.linalg.norm(z) < 1e-10


def test_matches_full_normal_equation_formula():
    cfg = ls_cfg(m=2)
    _, _, phi, obs = make_problem(cfg, 2, snr_db=10.0)
    est = DftLs(2, 1).fit(obs.Y)
    ups = obs.Y.reshape(6, 4, order="F")
    reference = ups @ phi.conj().T @ np.linalg.inv(phi @ phi.conj().T)
    np.testing.assert_allclose(est.Z_, reference, atol=1e-12)


def test_fully_connected_needs_m_squared_blocks():
    est = DftLs(4, 1)
    assert est.n_blocks == 16
    with pytest.raises(ValueError, match="T = G"):
        est.fit(np.zeros((3, 2, 15), dtype=complex))


def test_cascade_exact_for_any_feasible_theta():
    cfg = ls_cfg(m=4)
    channels, _, _, obs = make_problem(cfg, 3)
    est = DftLs(4, 1).fit(obs.Y)
    theta = random_symmetric_unitary(4, np.random.default_rng(4))
    want = channels.H @ theta @ channels.E(1)
    np.testing.assert_allclose(est.cascade(theta), want, atol=1e-10)
    np.testing.assert_allclose(est.cascade(), channels.H @ channels.E(1),
                               atol=1e-10)


def test_cascade_zero_theta():
    cfg = ls_cfg(m=4)
    _, _, _, obs = make_problem(cfg, 5)
    est = DftLs(4, 1).fit(obs.Y)
    np.testing.assert_array_equal(est.cascade(np.zeros((4, 4))), 0.0)


def test_cascade_kron_identity_oracle():
    # vec(G) = (E^T kron H) vec(Theta) on a random tiny instance
    rng = np.random.default_rng(6)
    cfg = ls_cfg(m=2)
    channels, _, _, obs = make_problem(cfg, 6)
    est = DftLs(2, 1).fit(obs.Y)
    theta = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    want = vec(channels.H @ theta @ channels.E(1))
    got = vec(est.cascade(theta))
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_nmse_scales_inversely_with_snr():
    # LS error power tracks 1/SNR: one decade of SNR, one decade of NMSE
    cfg = ls_cfg(m=4, n_bs=3, n_users=3)
    rng = np.random.default_rng(7)
    means = []
    for snr_db in (0.0, 10.0, 20.0):
        vals = []
        for drop in range(200):
            rng_d = np.random.default_rng([7, drop])
            channels = generate_channel_set(cfg, rng_d, n_intervals=1)
            book, _ = build_dft_book(cfg)
            obs = simulate_training(channels, book, 1, snr_db, rng_d)
            est = DftLs(4, 1).fit(obs.Y)
            vals.append(nmse(est.cascade(), channels.cascade(1)))
        means.append(np.mean(vals))
    for lo, hi in zip(means[1:], means[:-1]):
        decade = hi / lo
        assert 10 ** 0.9 < decade < 10 ** 1.1


def test_rejects_nonfinite_observation():
    bad = np.full((3, 2, 16), np.nan, dtype=complex)
    with pytest.raises(ValueError, match="finite"):
        DftLs(4, 1).fit(bad)


def test_theta_shape_validation():
    cfg = ls_cfg(m=4)
    _, _, _, obs = make_problem(cfg, 8)
    est = DftLs(4, 1).fit(obs.Y)
    with pytest.raises(ValueError):
        est.cascade(np.eye(3))
