"""Channel-aging models: Jakes autocorrelation, loaded AR fits, forecasting.

The temporal correlation of a mobile user's channel across coherence
intervals is J0(2*pi*f_n*lag) with f_n the normalized Doppler.  An AR(Q)
model matched to that autocorrelation through a diagonally loaded
Levinson-Durbin solve both generates aged channels (see
:mod:`bdris.channel`) and forecasts them; the loading keeps high-order
fits stable at the cost of a small bias.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "jakes_acf",
    "jakes_acf_sequence",
    "levinson_durbin",
    "ArModel",
    "fit_jakes_ar",
    "fit_ar_from_history",
    "sample_acf",
    "ar_predict",
    "preprocess_csi",
    "PatternBank",
    "build_pattern_bank",
    "classify_pattern",
]

_SERIES_ASYMPTOTIC_SPLIT = 12.0


def _j0_power_series(x):
    # Alternating series in extended precision; cancellation near the split
    # point eats ~4 digits, which longdouble absorbs.
    x = np.longdouble(x)
    q = (x / 2.0) ** 2
    term = np.longdouble(1.0)
    acc = np.longdouble(1.0)
    for k in range(1, 400):
        term *= -q / np.longdouble(k) ** 2
        acc += term
        if abs(term) < np.longdouble(1e-25) * abs(acc) + np.longdouble(1e-30):
            break
    return float(acc)


def _j0_asymptotic(x):
    # Hankel expansion, optimally truncated (terms kept while decreasing).
    p_sum, q_sum = 0.0, 0.0
    c = 1.0
    prev = np.inf
    for m in range(0, 80):
        t = c / x ** m
        if abs(t) > prev:
            break
        prev = abs(t)
        k, odd = divmod(m, 2)
        if odd:
            q_sum += (-1.0) ** k * t
        else:
            p_sum += (-1.0) ** k * t
        c *= (2 * m + 1) ** 2 / (8.0 * (m + 1))
    chi = x - np.pi / 4.0
    # the odd-term series enters with a flipped sign for order zero
    return np.sqrt(2.0 / (np.pi * x)) * (p_sum * np.cos(chi) + q_sum * np.sin(chi))


def _j0(x):
    x = abs(float(x))
    if x < _SERIES_ASYMPTOTIC_SPLIT:
        return _j0_power_series(x)
    return _j0_asymptotic(x)


def jakes_acf(f_n, lag):
    """Autocorrelation J0(2*pi*f_n*|lag|) of a Jakes-faded channel entry."""
    if f_n < 0:
        raise ValueError("normalized Doppler must be non-negative")
    return _j0(2.0 * np.pi * f_n * abs(int(lag)))


def jakes_acf_sequence(f_n, n_lags):
    """ACF at lags 0..n_lags (inclusive) as a float array."""
    return np.array([jakes_acf(f_n, lag) for lag in range(n_lags + 1)])


@dataclass
class ArModel:
    """AR(Q) aging model: x[l] = -sum_q a[q] x[l-q] + w[l]."""

    order: int
    coeffs: np.ndarray          # a_1 .. a_Q
    sigma2: float               # innovation variance
    epsilon: float              # diagonal loading applied at lag 0
    f_n: float | None = None
    acf: np.ndarray = field(default=None, repr=False)  # unloaded lags 0..Q

    @property
    def loaded_acf0(self):
        return self.acf[0] + self.epsilon

    def poles(self):
        return np.roots(np.concatenate(([1.0], self.coeffs)))

    def is_stable(self, margin=0.0):
        return bool(np.max(np.abs(self.poles())) < 1.0 - margin)


def levinson_durbin(acf, epsilon=0.1, f_n=None):
    """Fit AR coefficients to an ACF through the loaded Toeplitz system.

    Solves (R + eps on the lag-0 diagonal) a = -w by the Levinson-Durbin
    recursion, where R is the Hermitian Toeplitz matrix of lags 0..Q-1 and
    w holds lags 1..Q.  The innovation variance follows the fitted model:
    sigma2 = (R[0] + eps) + sum_q a_q R[q].

    Parameters
    ----------
    acf : array, lags 0..Q inclusive (Q >= 1), acf[0] > 0
    epsilon : non-negative loading added to the zero lag

    Returns
    -------
    ArModel
    """
    acf = np.asarray(acf)
    if acf.ndim != 1 or acf.size < 2:
        raise ValueError("need ACF lags 0..Q with Q >= 1")
    if acf[0].real <= 0:
        raise ValueError("acf[0] must be positive")
    if epsilon < 0:
        raise ValueError("loading must be non-negative")
    q_order = acf.size - 1
    r = acf.astype(complex)
    r0 = r[0] + epsilon

    phi = np.zeros(q_order, dtype=complex)   # x[l] = sum phi_q x[l-q] + w
    err = r0.real
    for i in range(1, q_order + 1):
        acc = r[i]
        if i > 1:
            acc = acc - phi[:i - 1] @ r[i - 1:0:-1]
        if err <= 0:
            raise np.linalg.LinAlgError(
                "loaded Toeplitz system became singular during the recursion"
            )
        k = acc / err
        new = phi.copy()
        new[i - 1] = k
        if i > 1:
            new[:i - 1] = phi[:i - 1] - k * np.conj(phi[i - 2::-1])
        phi = new
        err *= float(1.0 - abs(k) ** 2)

    a = -phi
    if np.allclose(a.imag, 0.0, atol=1e-14):
        a = a.real
    sigma2 = float((r0 + a @ np.conj(r[1:q_order + 1])).real)
    model = ArModel(order=q_order, coeffs=a, sigma2=sigma2,
                    epsilon=float(epsilon), f_n=f_n, acf=np.asarray(acf))
    if not model.is_stable():
        raise np.linalg.LinAlgError(
            "fitted AR filter is unstable; increase the diagonal loading"
        )
    return model


def fit_jakes_ar(f_n, order, epsilon=0.1):
    """AR model matched to the exact Jakes ACF."""
    return levinson_durbin(jakes_acf_sequence(f_n, order), epsilon, f_n=f_n)


def sample_acf(history, max_lag):
    """Biased sample ACF of a matrix-valued series, averaged over entries.

    ``history`` has shape (V, M, K); lag-l products are averaged over all
    entries with a 1/V normalization, the standard biased estimator that
    keeps the Toeplitz system well conditioned.  Lags at or beyond V carry
    no data and are zero, so high-order fits from short histories see no
    information past the window (rather than failing).
    """
    history = np.asarray(history)
    v = history.shape[0]
    flat = history.reshape(v, -1)
    out = np.zeros(max_lag + 1, dtype=complex)
    for lag in range(min(max_lag, v - 1) + 1):
        out[lag] = np.mean(
            np.sum(flat[lag:] * np.conj(flat[:v - lag]), axis=0)
        ) / v
    if np.allclose(out.imag, 0.0, atol=1e-12 * abs(out[0].real)):
        out = out.real
    return out


def fit_ar_from_history(history, order, epsilon=0.1):
    """AR fit from measured CSI alone (the plain AR predictor baseline)."""
    return levinson_durbin(sample_acf(history, order), epsilon)


def ar_predict(history, model, horizon):
    """Forecast ``horizon`` future intervals from the most recent history.

    The first step uses measured CSI only; step p >= 2 mixes measured CSI
    (for lags beyond p) with the already predicted values (for lags within
    p).  Entries are predicted independently with the shared scalar
    coefficients.
    """
    history = np.asarray(history)
    q_order = model.order
    if history.shape[0] < q_order:
        raise ValueError(
            f"need at least {q_order} measured intervals, got {history.shape[0]}"
        )
    a = model.coeffs
    measured = list(history[-q_order:]) if q_order > 0 else []
    predicted = []
    for _ in range(horizon):
        acc = np.zeros(history.shape[1:], dtype=complex)
        p = len(predicted)
        for q in range(1, q_order + 1):
            # q <= p reaches into the predicted run, q > p into measurements
            src = predicted[p - q] if q <= p else measured[q_order + p - q]
            acc = acc - a[q - 1] * src
        predicted.append(acc)
    return predicted


def preprocess_csi(history, v):
    """Stack V estimated channels into the real classifier input.

    Returns the 2M x V*K real matrix [Re E[1] .. Re E[V]; Im E[1] .. Im E[V]].
    """
    history = np.asarray(history)
    if history.shape[0] != v:
        raise ValueError(f"expected {v} intervals, got {history.shape[0]}")
    top = np.concatenate([history[i].real for i in range(v)], axis=1)
    bottom = np.concatenate([history[i].imag for i in range(v)], axis=1)
    return np.concatenate([top, bottom], axis=0)


@dataclass
class PatternBank:
    """Precomputed AR models for the trained Doppler classes."""

    entries: list  # [(f_n, ArModel)], f_n strictly increasing

    def __post_init__(self):
        fns = [fn for fn, _ in self.entries]
        if any(b <= a for a, b in zip(fns, fns[1:])):
            raise ValueError("bank f_n values must be strictly increasing")

    def __len__(self):
        return len(self.entries)

    @property
    def f_n_values(self):
        return [fn for fn, _ in self.entries]

    def model(self, index):
        return self.entries[index][1]


def build_pattern_bank(f_n_values, order=16, epsilon=0.1):
    entries = [(fn, fit_jakes_ar(fn, order, epsilon)) for fn in sorted(f_n_values)]
    return PatternBank(entries)


def default_bank_grid(n_classes=10, f_n_min=2.5e-4, f_n_max=1e-2):
    """Log-spaced Doppler grid covering walking to high-speed-rail mobility."""
    return list(np.geomspace(f_n_min, f_n_max, n_classes))


def classify_pattern(classifier, c, bank):
    """Select the bank model for one preprocessed CSI matrix.

    Ties resolve to the lowest class index (argmax of the score vector).
    """
    scores = classifier.decision_scores(c[None, ...])[0]
    return bank.model(int(np.argmax(scores)))


def derotate(history, f_n):
    """Remove the common per-interval Doppler phase e^{j 2 pi f_n l}."""
    history = np.asarray(history)
    l_idx = np.arange(history.shape[0])
    phase = np.exp(-2j * np.pi * f_n * l_idx)
    return history * phase[:, None, None]
