"""Accuracy, pilot-overhead and complexity accounting for the four schemes.

Scheme tags: FC/GC for fully-/group-connected, PROP for the tensor-fit
estimator with prediction, CONV for per-interval conventional LS.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import FlopCounter

SCHEMES = ("FC-CONV", "GC-CONV", "FC-PROP", "GC-PROP")


def nmse(estimate, truth):
    """Squared-error ratio ||est - true||^2 / ||true||^2."""
    truth = np.asarray(truth)
    denom = np.linalg.norm(truth) ** 2
    if denom == 0.0:
        raise ValueError("true channel is zero; NMSE undefined")
    return float(np.linalg.norm(np.asarray(estimate) - truth) ** 2 / denom)


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")


def pilot_length(scheme, cfg):
    """Total pilot blocks spent over the Q+P coherence intervals.

    Conventional schemes re-estimate every interval at the full composite
    cost; the proposed schemes train for Q intervals only, plus one anchor
    probe per group and interval (the "+1"/"+G" terms).
    """
    _check_scheme(scheme)
    q, p, t = cfg.q_intervals, cfg.p_intervals, cfg.n_blocks
    mb, g = cfg.group_size, cfg.groups
    if scheme == "FC-CONV":
        return cfg.n_ris ** 2 * (q + p)
    if scheme == "GC-CONV":
        return mb ** 2 * g * (q + p)
    if scheme == "FC-PROP":
        return (t + 1) * q
    return (t + g) * q


def average_overhead(scheme, cfg):
    """Average pilot blocks per coherence interval, P_a."""
    return pilot_length(scheme, cfg) / (cfg.q_intervals + cfg.p_intervals)


def overhead_reduction(proposed_pa, conventional_pa):
    """Percent overhead saved by the proposed scheme."""
    if conventional_pa <= 0:
        raise ValueError("conventional overhead must be positive")
    return 100.0 * (1.0 - proposed_pa / conventional_pa)


_CNN_INFERENCE = lambda k, m, q: 28514 * k * m * q + 64 * (q + 1) + 8192


def flop_model(scheme, cfg, iterations=30):
    """Leading-order complexity model of each scheme.

    Proposed: per-interval tensor fit over Q intervals, i iterations each,
    plus the fixed classifier inference cost.  Conventional: the composite
    LS applied in all Q+P intervals.
    """
    _check_scheme(scheme)
    n, k = cfg.n_bs, cfg.n_users
    m, mb, g = cfg.n_ris, cfg.group_size, cfg.groups
    q, p, t = cfg.q_intervals, cfg.p_intervals, cfg.n_blocks
    if scheme == "FC-PROP":
        core = iterations * q * (m * m * t * (k + n) + 2 * n * k * t * m)
        return core + _CNN_INFERENCE(k, m, q)
    if scheme == "GC-PROP":
        core = iterations * q * g * (mb * mb * t * (k + n) + 2 * n * k * t * mb)
        return core + _CNN_INFERENCE(k, m, q)
    if scheme == "FC-CONV":
        return (q + p) * m ** 4 * (1 + n * k)
    return (q + p) * g ** 2 * mb ** 4 * (1 + n * k)


@dataclass
class MetricsReport:
    """One experiment row: accuracy, rate, overhead and work."""

    scheme: str
    nmse_per_interval: list = field(default_factory=list)
    mean_sum_rate: float = float("nan")
    total_pilot_len: int = 0
    q_plus_p: int = 1
    flop_count: int = 0

    def __post_init__(self):
        _check_scheme(self.scheme)

    @property
    def P_a(self):
        return self.total_pilot_len / self.q_plus_p


def loglog_slope(xs, ys):
    """LS slope of log(y) against log(x): empirical growth exponent."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


__all__ = [
    "nmse", "pilot_length", "average_overhead", "overhead_reduction",
    "flop_model", "MetricsReport", "FlopCounter", "loglog_slope", "SCHEMES",
]
