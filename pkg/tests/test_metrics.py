import numpy as np
import pytest

from bdris.config import SystemConfig
from bdris.metrics import (average_overhead, flop_model, loglog_slope, nmse,
                           overhead_reduction, pilot_length)


def cfg_for(m, groups, t, q=16, p=10):
    return SystemConfig(n_bs=5, n_users=5, n_ris=m, groups=groups,
                        n_blocks=t, q_intervals=q, p_intervals=p,
                        t_coherence=10_000, f_n=0.005)


def test_nmse_trivial_values():
    xi = np.array([[1.0 + 1j, 2.0], [0.5, -1j]])
    assert nmse(xi, xi) == 0.0
    assert nmse(np.zeros_like(xi), xi) == pytest.approx(1.0)
    assert nmse(2 * xi, xi) == pytest.approx(1.0)


def test_nmse_zero_truth_rejected():
    with pytest.raises(ValueError):
        nmse(np.ones((2, 2)), np.zeros((2, 2)))


def test_pilot_length_formulas():
    cfg = cfg_for(16, 1, 20)
    assert pilot_length("FC-CONV", cfg) == 256 * 26
    assert pilot_length("FC-PROP", cfg) == 21 * 16
    g_cfg = cfg_for(16, 2, 22)
    assert pilot_length("GC-CONV", g_cfg) == 128 * 26
    assert pilot_length("GC-PROP", g_cfg) == 24 * 16


def test_average_overhead_conventional_row():
    cfg = cfg_for(16, 1, 20)
    assert average_overhead("FC-CONV", cfg) == pytest.approx(256.0)
    assert average_overhead("FC-PROP", cfg) == pytest.approx(21 * 16 / 26)


def test_overhead_reduction_values():
    # six-row table at Q/(Q+P) = 8/13
    rows = [
        ("FC", 16, 1, 20, 256, 21, 94.95),
        ("FC", 32, 1, 36, 1024, 37, 97.78),
        ("FC", 64, 1, 78, 4096, 79, 98.81),
        ("GC", 16, 2, 22, 128, 24, 88.46),
        ("GC", 32, 2, 40, 512, 42, 94.95),
        ("GC", 64, 2, 84, 2048, 86, 97.42),
    ]
    for arch, m, groups, t, conv, coeff, reduction in rows:
        cfg = cfg_for(m, groups, t)
        pa_conv = average_overhead(f"{arch}-CONV", cfg)
        pa_prop = average_overhead(f"{arch}-PROP", cfg)
        assert pa_conv == pytest.approx(conv)
        assert pa_prop == pytest.approx(coeff * 16 / 26)
        assert overhead_reduction(pa_prop, pa_conv) == pytest.approx(
            reduction, abs=0.05)


def test_overhead_reduction_trivial():
    assert overhead_reduction(5.0, 5.0) == 0.0
    with pytest.raises(ValueError):
        overhead_reduction(1.0, 0.0)


def test_proposed_always_cheaper_on_grid():
    for arch, m, groups, t in (("FC", 16, 1, 20), ("FC", 32, 1, 36),
                               ("FC", 64, 1, 78), ("GC", 16, 2, 22),
                               ("GC", 32, 2, 40), ("GC", 64, 2, 84)):
        cfg = cfg_for(m, groups, t)
        assert (average_overhead(f"{arch}-PROP", cfg)
                < average_overhead(f"{arch}-CONV", cfg))


def test_flop_model_proposed_fc_value():
    cfg = cfg_for(16, 1, 20)
    # i*Q*(M^2 T (K+N) + 2NKTM) + CNN inference tail
    got = flop_model("FC-PROP", cfg, iterations=36)
    expected = 36 * 16 * (256 * 20 * 10 + 2 * 25 * 20 * 16) \
        + 28514 * 5 * 16 * 16 + 64 * 17 + 8192
    assert got == expected
    assert got == pytest.approx(7.5e7, rel=0.01)


def test_flop_model_conventional_values():
    cfg = cfg_for(16, 1, 20)
    assert flop_model("FC-CONV", cfg) == 26 * 16 ** 4 * 26
    g_cfg = cfg_for(16, 2, 22)
    assert flop_model("GC-CONV", g_cfg) == 26 * 4 * 8 ** 4 * 26


def test_flop_model_quadruples_with_m():
    lo = flop_model("FC-PROP", cfg_for(16, 1, 20), iterations=30)
    hi = flop_model("FC-PROP", cfg_for(32, 1, 20), iterations=30)
    core_lo = lo - (28514 * 5 * 16 * 16 + 64 * 17 + 8192)
    core_hi = hi - (28514 * 5 * 32 * 16 + 64 * 17 + 8192)
    assert core_hi / core_lo == pytest.approx(4.0, rel=0.15)


def test_unknown_scheme_rejected():
    cfg = cfg_for(16, 1, 20)
    with pytest.raises(ValueError):
        pilot_length("FC-MAGIC", cfg)


def test_loglog_slope():
    xs = [1.0, 2.0, 4.0, 8.0]
    ys = [3.0 * x ** 2 for x in xs]
    assert loglog_slope(xs, ys) == pytest.approx(2.0)
