import numpy as np
import pytest

from bdris.config import SystemConfig
from bdris.reflections import (build_dft_book, build_training_book,
                               check_reflection, dft_pilot_phi,
                               random_symmetric_unitary,
                               validate_identifiability)


def cfg_fully(**kw):
    base = dict(n_bs=4, n_users=4, n_ris=4, groups=1, n_blocks=6,
                t_coherence=1000)
    base.update(kw)
    return SystemConfig(**base)


def test_random_symmetric_unitary_scalar():
    rng = np.random.default_rng(0)
    theta = random_symmetric_unitary(1, rng)
    assert abs(abs(theta[0, 0]) - 1.0) < 1e-12


@pytest.mark.parametrize("m", [2, 4, 8, 16])
def test_random_symmetric_unitary_constraints(m):
    rng = np.random.default_rng(m)
    theta = random_symmetric_unitary(m, rng)
    assert np.linalg.norm(theta @ theta.conj().T - np.eye(m)) < 1e-10
    assert np.linalg.norm(theta - theta.T) < 1e-12


def test_random_symmetric_unitary_varies_with_seed():
    t1 = random_symmetric_unitary(4, np.random.default_rng(1))
    t2 = random_symmetric_unitary(4, np.random.default_rng(2))
    assert np.linalg.norm(t1 - t2) > 0


def test_identifiability_fully():
    ok = validate_identifiability(SystemConfig(n_bs=5, n_users=5, n_ris=16,
                                               n_blocks=20))
    assert ok
    bad = validate_identifiability(SystemConfig(n_bs=2, n_users=2, n_ris=16,
                                                n_blocks=4, t_coherence=100))
    assert not bad
    assert "16" in bad.message


def test_identifiability_group():
    ok = validate_identifiability(SystemConfig(n_bs=5, n_users=5, n_ris=16,
                                               groups=2, n_blocks=22,
                                               t_coherence=1000))
    assert ok


def test_build_training_book_fully():
    cfg = cfg_fully()
    book = build_training_book(cfg, np.random.default_rng(3))
    assert len(book) == 6
    for t in range(6):
        check_reflection(book.effective(t))
    # pilots are orthogonal
    x = book.pilots
    np.testing.assert_allclose(x @ x.conj().T, np.eye(4), atol=1e-12)


def test_build_training_book_group_schedule():
    cfg = SystemConfig(n_bs=4, n_users=4, n_ris=4, groups=2, n_blocks=8,
                       t_coherence=1000)
    book = build_training_book(cfg, np.random.default_rng(4))
    assert book.blocks_for_group(0) == [0, 1, 2, 3]
    assert book.blocks_for_group(1) == [4, 5, 6, 7]
    for t in range(4):
        eff = book.effective(t)
        # inactive block rows/cols are zero in the effective reflection
        assert np.all(eff[2:, :] == 0) and np.all(eff[:, 2:] == 0)
        block = eff[:2, :2]
        assert np.linalg.norm(block @ block.conj().T - np.eye(2)) < 1e-10


def test_build_training_book_rejects_unidentifiable():
    cfg = SystemConfig(n_bs=2, n_users=2, n_ris=8, n_blocks=3, t_coherence=100)
    with pytest.raises(ValueError, match="identifiability"):
        build_training_book(cfg, np.random.default_rng(0))


def test_training_book_low_column_correlation():
    # columns across the book stay nearly uncorrelated for M >= 4
    cfg = cfg_fully(n_ris=8, n_blocks=10, n_bs=8, n_users=8)
    worst = 0.0
    for seed in range(5):
        book = build_training_book(cfg, np.random.default_rng(seed))
        cols = np.concatenate([b for b in book.thetas], axis=1)
        cols = cols / np.linalg.norm(cols, axis=0)
        gram = np.abs(cols.conj().T @ cols)
        np.fill_diagonal(gram, 0.0)
        worst = max(worst, gram.max())
    assert worst < 0.95  # pairwise distinct
    means = []
    for seed in range(5):
        book = build_training_book(cfg, np.random.default_rng(seed))
        cols = np.concatenate([b for b in book.thetas], axis=1)
        cols = cols / np.linalg.norm(cols, axis=0)
        gram = np.abs(cols.conj().T @ cols)
        np.fill_diagonal(gram, 0.0)
        means.append(gram.mean())
    assert np.mean(means) < 0.5


def test_dft_pilot_phi_trivial():
    phi = dft_pilot_phi(1, 1)
    assert phi.shape == (1, 1)
    np.testing.assert_allclose(phi, [[1.0]])


def test_dft_pilot_phi_orthogonal_m2():
    phi = dft_pilot_phi(2, 1)
    assert phi.shape == (4, 4)
    gram = phi @ phi.conj().T
    np.testing.assert_allclose(gram, gram[0, 0] * np.eye(4), atol=1e-12)


def test_dft_pilot_phi_group_full_rank():
    phi = dft_pilot_phi(2, 2)
    assert phi.shape == (8, 8)
    s = np.linalg.svd(phi, compute_uv=False)
    assert s.min() > 1e-8 * s.max()


@pytest.mark.parametrize("m_bar,groups", [(2, 1), (4, 1), (2, 2), (4, 2)])
def test_dft_pilot_phi_gram_scale(m_bar, groups):
    phi = dft_pilot_phi(m_bar, groups)
    t = groups * m_bar ** 2
    np.testing.assert_allclose(phi @ phi.conj().T,
                               groups * m_bar * np.eye(t), atol=1e-10)


def test_build_dft_book_matches_phi_columns():
    cfg = cfg_fully(n_ris=2, n_blocks=4)
    book, phi = build_dft_book(cfg)
    assert len(book) == 4
    assert not book.feasible
    for t in range(4):
        np.testing.assert_allclose(book.effective(t).reshape(-1, order="F"),
                                   phi[:, t])
