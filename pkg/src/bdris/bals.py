"""Bilinear alternating least squares fit of the pilot tensor.

The post-processed pilot tensor of one coherence interval follows a
Tucker2 model whose core slices are the known training reflections:
slice t equals H Theta_t E.  Alternating the two least-squares updates

    H <- Y_(1) [ [Theta_1 E, ..., Theta_T E] ]^+
    E^T <- Y_(2) [ [(H Theta_1)^T, ..., (H Theta_T)^T] ]^+

recovers both factors up to one complex scale per (group) fit, which a
one-element probe of H pins down afterwards.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .reflections import PilotBook
from .tensor_ops import FlopCounter, mode_unfold, pinv, vec

PINV_RTOL = 1e-12


def _nkp_init(y, thetas, counter=None):
    """Deterministic initial E from the lifted linear system.

    The minimum-norm solution of vec(Y_t) = Z vec(Theta_t) is rearranged so
    that a Kronecker-structured Z becomes a rank-one matrix; its leading
    singular pair then yields factor estimates.  Random inits frequently
    strand the alternating fit in poor stationary points at realistic sizes,
    this start does not.
    """
    n, k, t = y.shape
    m = thetas[0].shape[0]
    ups = y.reshape(n * k, t, order="F")
    phib = np.stack([vec(th) for th in thetas], axis=1)
    zmn = ups @ pinv(phib, PINV_RTOL, counter=counter)
    if counter is not None:
        counter.add_matmul(n * k, t, m * m)
    zr = zmn.reshape(n, k, m, m, order="F")          # [n, k, m2, m1]
    r = zr.transpose(1, 3, 0, 2).reshape(k * m, n * m)
    if counter is not None:
        counter.add_svd(k * m, n * m)
    u, s, vh = np.linalg.svd(r, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((m, k), dtype=complex)
    a = (u[:, 0] * np.sqrt(s[0])).reshape(k, m)      # E^T
    return a.T


def _bals_core(y, thetas, e_init, tol, max_iter, counter=None):
    """One alternating fit; returns (H, E, residual_history, converged)."""
    n, k, t = y.shape
    thetas_arr = np.asarray(thetas)
    m = thetas_arr.shape[1]
    y1 = mode_unfold(y, 1)                            # N x KT = [Y_1 .. Y_T]
    y2 = mode_unfold(y, 2)                            # K x NT = [Y_1^T .. Y_T^T]
    e = e_init
    h = np.zeros((n, m), dtype=complex)
    prev = float(np.linalg.norm(y) ** 2)              # residual of the zero model
    history = []
    converged = False
    rel_ref = max(prev, 1e-30)
    for _ in range(max_iter):
        z1 = (thetas_arr @ e).transpose(1, 0, 2).reshape(m, t * k)
        if counter is not None:
            counter.add_matmul(t * m, m, k)
        h = y1 @ pinv(z1, PINV_RTOL, counter=counter)
        z2 = (h @ thetas_arr).transpose(2, 0, 1).reshape(m, t * n)
        if counter is not None:
            counter.add_matmul(t * n, m, m)
            counter.add_matmul(n * k, t, m)           # the two pinv applications
            counter.add_matmul(n * k, t, m)
        e = (y2 @ pinv(z2, PINV_RTOL, counter=counter)).T
        y_hat = (h @ thetas_arr) @ e                  # (T, N, K)
        if counter is not None:
            counter.add_matmul(t * n, m, k)
        res = float(np.linalg.norm(y - y_hat.transpose(1, 2, 0)) ** 2)
        history.append(res)
        delta = abs(res - prev)
        if delta <= tol or delta <= tol * rel_ref:
            converged = True
            break
        prev = res
    return h, e, history, converged


class Tucker2Bals(BaseEstimator):
    """Joint (H, E) estimator for one coherence interval.

    Parameters
    ----------
    book : PilotBook
        Training reflections (known at the receiver) and pilot symbols.
        A group-connected book makes the fit run independently per group
        on that group's sub-frame.
    tol : float
        Convergence threshold on the absolute residual change; a relative
        variant (scaled by the initial residual) guards badly scaled input.
    max_iter : int
        Iteration cap per (group) fit.
    init : {"nkp", "random"}
        Initial E strategy: the deterministic nearest-Kronecker start or
        i.i.d. CN(0, 1) entries from ``random_state``.
    random_state : int or None
        Seed for the random init.
    counter : FlopCounter or None
        Optional instrumentation of matrix products and SVDs.

    Attributes (after :meth:`fit`)
    ------------------------------
    H_, E_ : factor estimates (N x M and M x K)
    n_iters_ : iterations used, one entry per group
    histories_ : residual history, one list per group
    converged_ : True when every group fit converged
    scaling_resolved_ : set by :meth:`resolve_scaling`
    """

    def __init__(self, book: PilotBook, tol=1e-6, max_iter=30, init="nkp",
                 random_state=None, counter: FlopCounter | None = None):
        self.book = book
        self.tol = tol
        self.max_iter = max_iter
        self.init = init
        self.random_state = random_state
        self.counter = counter

    def _initial_e(self, y, thetas, m, k, rng):
        if self.init == "nkp":
            return _nkp_init(y, thetas, counter=self.counter)
        if self.init == "random":
            return (rng.standard_normal((m, k))
                    + 1j * rng.standard_normal((m, k))) / np.sqrt(2.0)
        raise ValueError(f"unknown init strategy: {self.init!r}")

    def fit(self, Y):
        """Fit the factor matrices to the observed N x K x T tensor."""
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        y = np.asarray(Y, dtype=complex)
        if y.ndim != 3:
            raise ValueError(f"expected an N x K x T tensor, got shape {y.shape}")
        book = self.book
        n, k, t = y.shape
        if t != len(book):
            raise ValueError(f"observation has {t} blocks, book has {len(book)}")
        rng = np.random.default_rng(self.random_state)
        mb = book.group_size
        h_parts, e_parts = [], []
        self.histories_ = []
        self.n_iters_ = []
        self.converged_ = True
        for g in range(book.groups):
            blocks = book.blocks_for_group(g)
            t_g = len(blocks)
            if mb > min(n * t_g, k * t_g):
                raise ValueError(
                    f"unidentifiable fit: M_bar={mb} > min(N*T_g, K*T_g)="
                    f"{min(n * t_g, k * t_g)}"
                )
            y_g = y[:, :, blocks]
            thetas = [book.group_block(tt, g) for tt in blocks]
            e0 = self._initial_e(y_g, thetas, mb, k, rng)
            h_g, e_g, hist, conv = _bals_core(
                y_g, thetas, e0, self.tol, self.max_iter, self.counter
            )
            h_parts.append(h_g)
            e_parts.append(e_g)
            self.histories_.append(hist)
            self.n_iters_.append(len(hist))
            self.converged_ &= conv
        self.H_ = np.concatenate(h_parts, axis=1)
        self.E_ = np.concatenate(e_parts, axis=0)
        self.scaling_resolved_ = False
        self.anchors_ = None
        return self

    # -- post-fit utilities -------------------------------------------------
    @property
    def residual_history_(self):
        """Residual history of the single fit (fully-connected books)."""
        if len(self.histories_) != 1:
            raise AttributeError("per-group histories are in histories_")
        return self.histories_[0]

    def resolve_scaling(self, anchors):
        """Remove the per-group scale ambiguity given probed H entries.

        ``anchors`` holds the true leading entry of each group's H block
        (a scalar for fully-connected books).  Each block of H is scaled
        so its leading entry matches; E compensates, so cascades are
        unchanged.  A zero leading entry leaves that group untouched with
        only cascade-level validity (recorded, not raised).
        """
        if np.isscalar(anchors) or isinstance(anchors, complex):
            anchors = [anchors]
        book = self.book
        mb = book.group_size
        if len(anchors) != book.groups:
            raise ValueError(f"need {book.groups} anchors, got {len(anchors)}")
        resolved = True
        for g, anchor in enumerate(anchors):
            sl = slice(g * mb, (g + 1) * mb)
            lead = self.H_[0, g * mb]
            if lead == 0:
                resolved = False
                continue
            c = anchor / lead
            self.H_[:, sl] *= c
            self.E_[sl, :] /= c
        self.scaling_resolved_ = resolved
        self.anchors_ = list(anchors)
        return self

    def cascade(self, theta=None):
        """Estimated cascade H_hat Theta E_hat (Theta=None means identity)."""
        if theta is None:
            return self.H_ @ self.E_
        theta = np.asarray(theta)
        if theta.shape != (self.H_.shape[1],) * 2:
            raise ValueError("theta does not match the RIS dimension")
        return self.H_ @ theta @ self.E_
