"""Conventional least-squares estimation of the composite channel.

The baseline stacks the vectorized pilot slices and inverts the pilot
reflection matrix Phi: Z_hat = Upsilon Phi^H (Phi Phi^H)^{-1}.  With the
DFT-based design Phi Phi^H equals (G * M_bar) I exactly, so the Gram
inverse is a scalar.  Recovery of the full composite requires exactly
T = G * M_bar^2 training blocks, re-spent every coherence interval.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .reflections import dft_pilot_phi
from .tensor_ops import FlopCounter, unvec, vec


class DftLs(BaseEstimator):
    """LS estimator of the composite channel Z = [Z_1, ..., Z_G].

    Parameters
    ----------
    group_size : int
        Elements per group (equals M for the fully-connected layout).
    groups : int
        Number of groups (1 for fully-connected).
    counter : FlopCounter or None
        Optional flop instrumentation.

    Attributes (after :meth:`fit`)
    ------------------------------
    Z_ : (N*K) x (G*M_bar^2) composite estimate
    phi_ : the pilot reflection matrix used
    """

    def __init__(self, group_size, groups=1, counter: FlopCounter | None = None):
        self.group_size = group_size
        self.groups = groups
        self.counter = counter

    @property
    def n_blocks(self):
        return self.groups * self.group_size ** 2

    def fit(self, Y):
        """Fit from the N x K x T observation tensor, T = G * M_bar^2."""
        y = np.asarray(Y, dtype=complex)
        if y.ndim != 3:
            raise ValueError(f"expected an N x K x T tensor, got shape {y.shape}")
        n, k, t = y.shape
        if t != self.n_blocks:
            raise ValueError(
                f"composite recovery needs T = G*M_bar^2 = {self.n_blocks} "
                f"blocks, got {t}"
            )
        if not np.all(np.isfinite(y)):
            raise ValueError("observation contains non-finite entries")
        phi = dft_pilot_phi(self.group_size, self.groups)
        ups = y.reshape(n * k, t, order="F")
        gram_scale = self.groups * self.group_size   # Phi Phi^H = scale * I
        if self.counter is not None:
            self.counter.add_matmul(n * k, t, t)
            self.counter.add_matmul(t, t, 1)
        self.Z_ = (ups @ phi.conj().T) / gram_scale
        self.phi_ = phi
        self.n_bs_, self.n_users_ = n, k
        return self

    def cascade(self, theta=None):
        """Composite-based cascade estimate for a block-diagonal theta.

        vec(G_hat) = sum_g Z_g vec(Theta_g); ``theta`` is the full M x M
        reflection (its diagonal blocks are read out), identity when None.
        """
        mb, g = self.group_size, self.groups
        m = mb * g
        if theta is None:
            theta = np.eye(m, dtype=complex)
        theta = np.asarray(theta)
        if theta.shape != (m, m):
            raise ValueError(f"theta must be {m} x {m}, got {theta.shape}")
        chunks = [vec(theta[i * mb:(i + 1) * mb, i * mb:(i + 1) * mb])
                  for i in range(g)]
        stacked = np.concatenate(chunks)
        return unvec(self.Z_ @ stacked, self.n_bs_, self.n_users_)
