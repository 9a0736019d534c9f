"""Ground-truth channel generation and the noisy uplink pilot observation.

The RIS-BS channel is quasi-static correlated Rician fading.  The user-RIS
channels age across coherence intervals; the default generator is a
high-order AR process matched to the Jakes autocorrelation (the same model
family the predictor assumes), lightly loaded for stability.  A
deterministic common-phase-rotation generator is kept as an ablation
alternative.
"""

from dataclasses import dataclass

import numpy as np

from .aging import fit_jakes_ar, jakes_acf_sequence
from .reflections import PilotBook

GENERATOR_AR_ORDER = 32
GENERATOR_LOADING = 1e-3


def complex_normal(rng, *shape):
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_correlation(dim, rho):
    """Exponential correlation matrix, entry (i, j) = rho^|i-j|.

    Hermitian positive semi-definite with trace equal to ``dim``.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(dim)
    return (rho ** np.abs(idx[:, None] - idx[None, :])).astype(float)


def matrix_sqrt(r):
    """Hermitian PSD square root via eigendecomposition."""
    w, v = np.linalg.eigh(r)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass
class ChannelSet:
    """Ground truth for one drop: static H and the aged E series."""

    H: np.ndarray              # N x M, constant over the whole drop
    E_series: np.ndarray       # (Q+P, M, K)
    R_RIS: np.ndarray
    R_BS: np.ndarray
    f_n: float
    beta_e: float = 1.0
    beta_h: float = 1.0

    def E(self, interval):
        """UE-RIS channel of coherence interval ``interval`` (1-based)."""
        return self.E_series[interval - 1]

    def cascade(self, interval, theta=None):
        e = self.E(interval)
        if theta is None:
            return self.H @ e
        return self.H @ theta @ e


@dataclass
class PilotObservation:
    """Post-processed pilot tensor of one coherence interval."""

    Y: np.ndarray              # N x K x T, slice t = H Theta_t E + noise
    noise_power: float         # sigma_n^2
    pilot_power: float         # P_p


def gen_H(cfg, r_bs, r_ris, rng):
    """Quasi-static correlated Rician RIS-BS channel.

    H = sqrt(beta_H) R_BS^(1/2) Q_H R_RIS^(1/2) with a Rician inner matrix;
    the line-of-sight part is an outer product of unit-modulus steering
    vectors whose spatial frequencies are drawn once per drop.
    """
    n, m = cfg.n_bs, cfg.n_ris
    if r_bs.shape != (n, n) or r_ris.shape != (m, m):
        raise ValueError("correlation matrix dimensions do not match the config")
    kappa = cfg.rician_factor
    nu_bs, nu_ris = rng.random(2)
    a = np.exp(2j * np.pi * nu_bs * np.arange(n))
    b = np.exp(2j * np.pi * nu_ris * np.arange(m))
    q_los = np.outer(a, b)
    q = (np.sqrt(kappa / (kappa + 1.0)) * q_los
         + np.sqrt(1.0 / (kappa + 1.0)) * complex_normal(rng, n, m))
    return np.sqrt(cfg.beta_h) * matrix_sqrt(r_bs) @ q @ matrix_sqrt(r_ris)


def _ar_generator_series(f_n, n_intervals, n_tracks, rng):
    """Unit-variance aged tracks: AR(32) matched to the Jakes ACF."""
    order = GENERATOR_AR_ORDER
    try:
        model = fit_jakes_ar(f_n, order, GENERATOR_LOADING)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"aging generator AR fit failed at f_n={f_n}: {exc}; "
            "the generator loading is too small for this Doppler"
        ) from exc
    acf = jakes_acf_sequence(f_n, order - 1)
    acf[0] += model.epsilon
    idx = np.arange(order)
    toep = acf[np.abs(idx[:, None] - idx[None, :])]
    chol = np.linalg.cholesky(toep + 1e-12 * np.eye(order))
    init = complex_normal(rng, n_tracks, order) @ chol.T
    out = np.empty((n_tracks, max(n_intervals, order)), dtype=complex)
    out[:, :order] = init
    a_rev = model.coeffs[::-1]
    sigma = np.sqrt(model.sigma2)
    for l in range(order, out.shape[1]):
        w = sigma * complex_normal(rng, n_tracks)
        out[:, l] = -(out[:, l - order:l] @ a_rev) + w
    return out[:, :n_intervals]


def gen_E_series(cfg, r_ris, rng, n_intervals=None, generator="ar"):
    """Temporally correlated UE-RIS channels for Q+P coherence intervals.

    generator:
      "ar"    -- stationary AR(32) fitted to the Jakes ACF (default)
      "phase" -- deterministic common rotation e^(j 2 pi f_n l) of a single
                 Rayleigh draw (the idealized aging model, for ablations)

    Returns an array of shape (n_intervals, M, K).
    """
    m, k = cfg.n_ris, cfg.n_users
    if n_intervals is None:
        n_intervals = cfg.q_intervals + cfg.p_intervals
    f_n = cfg.normalized_doppler
    sqrt_r = matrix_sqrt(r_ris)
    if f_n == 0.0:
        base = complex_normal(rng, m, k)
        series = np.repeat(base[None, :, :], n_intervals, axis=0)
    elif generator == "phase":
        base = complex_normal(rng, m, k)
        phase = np.exp(2j * np.pi * f_n * np.arange(1, n_intervals + 1))
        series = base[None, :, :] * phase[:, None, None]
    elif generator == "ar":
        tracks = _ar_generator_series(f_n, n_intervals, m * k, rng)
        series = tracks.T.reshape(n_intervals, m, k)
    else:
        raise ValueError(f"unknown aging generator: {generator!r}")
    colored = np.einsum("ij,ljk->lik", sqrt_r, series)
    return np.sqrt(cfg.beta_e) * colored


def generate_channel_set(cfg, rng, n_intervals=None, generator="ar"):
    """Draw one full drop (H plus the aged E series) from a seeded stream."""
    r_ris = gen_correlation(cfg.n_ris, cfg.rho_ris)
    r_bs = gen_correlation(cfg.n_bs, cfg.rho_bs)
    h = gen_H(cfg, r_bs, r_ris, rng)
    e_series = gen_E_series(cfg, r_ris, rng, n_intervals, generator)
    return ChannelSet(H=h, E_series=e_series, R_RIS=r_ris, R_BS=r_bs,
                      f_n=cfg.normalized_doppler,
                      beta_e=cfg.beta_e, beta_h=cfg.beta_h)


def simulate_training(channels: ChannelSet, book: PilotBook, interval, snr_db, rng):
    """Observe one coherence interval through the book's training blocks.

    Block t receives Y_t = sqrt(P_p) H Theta_t E X + V; removing the
    orthogonal pilots leaves slice t = H Theta_t E + V X^H / sqrt(P_p).
    P_p is normalized to 1 and sigma_n^2 = 10^(-snr/10), so the pilot SNR
    P_p/sigma_n^2 matches ``snr_db`` with the large-scale gains at one.
    """
    e = channels.E(interval)
    h = channels.H
    n, k = h.shape[0], e.shape[1]
    t_blocks = len(book)
    pilot_power = 1.0
    noise_power = 0.0 if np.isinf(snr_db) else 10.0 ** (-snr_db / 10.0)
    x = book.pilots
    y = np.empty((n, k, t_blocks), dtype=complex)
    for t in range(t_blocks):
        clean = h @ book.effective(t) @ e
        if noise_power > 0.0:
            v = np.sqrt(noise_power) * complex_normal(rng, n, k)
            y[:, :, t] = clean + (v @ x.conj().T) / np.sqrt(pilot_power)
        else:
            y[:, :, t] = clean
    return PilotObservation(Y=y, noise_power=noise_power, pilot_power=pilot_power)


def probe_anchor(channels: ChannelSet, group_size=None, snr_db=np.inf, rng=None):
    """First-element probes that pin the scaling gauge of each group.

    Switching on only the first RIS element of a group and the first BS
    antenna exposes [H_g]_{1,1}; optionally corrupted at the pilot SNR for
    sensitivity studies.
    """
    m = channels.H.shape[1]
    if group_size is None:
        group_size = m
    anchors = []
    for start in range(0, m, group_size):
        value = channels.H[0, start]
        if np.isfinite(snr_db):
            value = value + np.sqrt(10.0 ** (-snr_db / 10.0)) * complex_normal(rng)
        anchors.append(complex(value))
    return anchors
