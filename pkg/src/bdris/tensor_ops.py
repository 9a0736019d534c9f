"""Dense complex linear and multilinear algebra kernels.

Third-order tensors are plain ``numpy`` arrays of shape ``(I1, I2, I3)``
with ``entries[i1, i2, i3]``; the frontal slice ``t`` is ``entries[:, :, t]``.
Unfoldings use the cyclic (column-major) convention under which

    unfold(G x1 A x2 B, 1) == A @ unfold(G, 1) @ kron(I_{I3}, B).T

holds exactly, so a tensor built slice-wise as ``X_t = A @ G_t @ B.T``
unfolds to ``[X_1, X_2, ..., X_{I3}]`` along mode 1.
"""

import numpy as np

__all__ = [
    "vec",
    "unvec",
    "kron",
    "mode_unfold",
    "fold",
    "n_mode_product",
    "pinv",
    "circshift",
    "dft_matrix",
    "FlopCounter",
    "matmul",
]


class FlopCounter:
    """Accumulates complex-multiplication counts of the instrumented kernels.

    Only matrix products and SVDs are counted; they dominate every
    estimator in this package.
    """

    def __init__(self):
        self.total = 0

    def add_matmul(self, m, k, n):
        self.total += int(m) * int(k) * int(n)

    def add_svd(self, m, n):
        lo, hi = sorted((int(m), int(n)))
        self.total += lo * lo * hi

    def reset(self):
        self.total = 0


def matmul(a, b, counter=None):
    """``a @ b`` with optional flop accounting."""
    if counter is not None:
        counter.add_matmul(a.shape[0], a.shape[1], b.shape[1] if b.ndim == 2 else 1)
    return a @ b


def vec(m):
    """Column-stacking vectorization of a matrix."""
    m = np.asarray(m)
    return m.reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def kron(a, b):
    """Kronecker product, satisfying vec(A B C^T) = kron(C, A) vec(B)."""
    return np.kron(a, b)


def _check_mode(t, n):
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    if n not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {n}")
    return t


def mode_unfold(t, n):
    """Mode-``n`` unfolding (cyclic convention), ``n`` in {1, 2, 3}.

    Mode 1 yields ``I1 x (I2*I3)`` with columns ordered so the result is
    the horizontal concatenation of the frontal slices.
    """
    t = _check_mode(t, n)
    return np.reshape(np.moveaxis(t, n - 1, 0), (t.shape[n - 1], -1), order="F")


def fold(m, n, dims):
    """Refold a mode-``n`` unfolding back into a tensor of shape ``dims``."""
    if n not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {n}")
    dims = tuple(dims)
    lead = (dims[n - 1],) + tuple(d for i, d in enumerate(dims) if i != n - 1)
    return np.moveaxis(np.reshape(np.asarray(m), lead, order="F"), 0, n - 1)


def n_mode_product(t, m, n):
    """n-mode product ``t x_n m``; ``m.cols`` must match ``t.dims[n]``."""
    t = _check_mode(t, n)
    m = np.asarray(m)
    if m.shape[1] != t.shape[n - 1]:
        raise ValueError(
            f"mode-{n} product needs m.cols == {t.shape[n - 1]}, got {m.shape[1]}"
        )
    dims = list(t.shape)
    dims[n - 1] = m.shape[0]
    return fold(m @ mode_unfold(t, n), n, dims)


def pinv(m, rel_tol=1e-12, counter=None):
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``rel_tol * sigma_max`` are truncated.
    """
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("pinv requires a finite matrix")
    if counter is not None:
        counter.add_svd(*m.shape)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]), dtype=m.dtype)
    keep = s > rel_tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    if counter is not None:
        counter.add_matmul(vh.shape[1], keep.sum(), u.shape[0])
    return (vh.conj().T * inv_s) @ u.conj().T


def circshift(v, k):
    """Circularly shift a vector: output[i] = input[(i - k) mod len]."""
    return np.roll(np.asarray(v), int(k))


def dft_matrix(n):
    """Unnormalized DFT matrix: entry (j, k) = exp(-2*pi*i*j*k/n)."""
    if n < 1:
        raise ValueError("dft_matrix needs n >= 1")
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n)
