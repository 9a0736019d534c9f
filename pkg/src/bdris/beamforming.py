"""Reflection and precoder optimization for the downlink weighted sum power.

The objective sum_k alpha_k P_d |u_k^T (H Theta E)[:, k]|^2 is maximized by
alternating (i) matched single-stream precoders jointly renormalized to the
unit sum-energy budget and (ii) a projected-ascent step on Theta, where the
projection onto the symmetric-unitary set sets every Takagi singular value
of the symmetrized ascent matrix to one.  Either step is kept only when it
improves the objective, so the trace is non-decreasing by construction.
The optimizer consumes only cascades, never the factor gauge.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import unvec, vec

ASCENT_STEPS = (0.1, 0.3, 1.0, 3.0, 10.0)


def takagi(s):
    """Takagi factorization of a complex symmetric matrix: s = Q diag(v) Q^T.

    Uses the real embedding B = [[Re s, Im s], [Im s, -Re s]]: eigenpairs
    B (x; y) = v (x; y) with v >= 0 give Takagi pairs q = x + i y, because
    s conj(q) = v q.  ``eigh`` keeps this deterministic and free of the
    branch-cut trouble an SVD-plus-matrix-square-root construction has.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[0]
    b = np.block([[s.real, s.imag], [s.imag, -s.real]])
    vals, vecs = np.linalg.eigh(b)
    # eigenvalues come in +/- pairs; take the non-negative copies
    order = np.argsort(vals)[::-1][:n]
    q = vecs[:n, order] + 1j * vecs[n:, order]
    return q, vals[order]


def project_symmetric_unitary(a):
    """Nearest symmetric-unitary matrix to sym(a) in Frobenius norm.

    All Takagi singular values are replaced by one.  A vanishing spectrum
    makes the projection non-unique; the identity is returned then.
    """
    a = np.asarray(a, dtype=complex)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.eye(n, dtype=complex)
    q, _ = takagi(a)
    theta = q @ q.T
    defect = np.linalg.norm(theta @ theta.conj().T - np.eye(n))
    if defect > 1e-10 * n:
        # an exactly singular Takagi spectrum leaves part of the projection
        # unconstrained; a small deterministic shift restores feasibility
        q, _ = takagi(a + 1e-6 * scale * np.eye(n))
        theta = q @ q.T
    return theta


def project_diagonal_unitary(a):
    """Phase-only projection used for the conventional diagonal surface."""
    d = np.diag(np.asarray(a))
    phases = np.where(np.abs(d) > 0, d / np.abs(np.where(np.abs(d) > 0, d, 1.0)), 1.0)
    return np.diag(phases)


class CascadeChannel:
    """CSI abstraction the optimizer works on.

    Either factored (H, E) knowledge or a composite estimate Z can drive
    the optimization; both expose the cascade map Theta -> H Theta E and
    its adjoint for gradient ascent.
    """

    def __init__(self, apply_fn, grad_fn, m, groups):
        self._apply = apply_fn
        self._grad = grad_fn
        self.m = m
        self.groups = groups

    @classmethod
    def from_factors(cls, h, e, groups=1):
        h = np.asarray(h, dtype=complex)
        e = np.asarray(e, dtype=complex)
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(e))):
            raise ValueError("CSI contains non-finite entries")

        def apply_fn(theta):
            return h @ theta @ e

        def grad_fn(d_g):
            return h.conj().T @ d_g @ e.conj().T

        return cls(apply_fn, grad_fn, h.shape[1], groups)

    @classmethod
    def from_composite(cls, z, n_bs, n_users, group_size, groups=1):
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise ValueError("CSI contains non-finite entries")
        m = group_size * groups

        def blocks_of(theta):
            return np.concatenate([
                vec(theta[i * group_size:(i + 1) * group_size,
                          i * group_size:(i + 1) * group_size])
                for i in range(groups)
            ])

        def apply_fn(theta):
            return unvec(z @ blocks_of(theta), n_bs, n_users)

        def grad_fn(d_g):
            stacked = z.conj().T @ vec(d_g)
            out = np.zeros((m, m), dtype=complex)
            for i in range(groups):
                sl = slice(i * group_size, (i + 1) * group_size)
                out[sl, sl] = unvec(
                    stacked[i * group_size ** 2:(i + 1) * group_size ** 2],
                    group_size, group_size,
                )
            return out

        return cls(apply_fn, grad_fn, m, groups)

    def cascade(self, theta):
        return self._apply(theta)

    def ascent_direction(self, theta, precoders, weights, p_d):
        """d f / d conj(Theta) of the weighted sum power."""
        g = self._apply(theta)
        s = np.einsum("nk,nk->k", precoders, g)
        d_g = precoders.conj() * (weights * p_d * s)[None, :]
        return self._grad(d_g)


def weighted_sum_power(csi, theta, precoders, weights, p_d):
    g = csi.cascade(theta)
    s = np.einsum("nk,nk->k", precoders, g)
    return float(np.sum(weights * p_d * np.abs(s) ** 2))


def matched_precoders(csi, theta):
    """Per-user matched filters under the joint unit sum-energy budget."""
    g = csi.cascade(theta)
    scale = np.linalg.norm(g)
    if scale == 0.0:
        n = g.shape[0]
        u = np.zeros_like(g)
        u[0, :] = 1.0 / np.sqrt(g.shape[1])
        return u
    return g.conj() / scale


def zero_forcing_precoders(csi, theta):
    """Interference-nulling alternative, jointly renormalized."""
    g = csi.cascade(theta)
    u = np.linalg.pinv(g.T)
    scale = np.linalg.norm(u)
    if scale == 0.0:
        return matched_precoders(csi, theta)
    return u / scale


@dataclass
class BeamformingSolution:
    theta: np.ndarray
    precoders: np.ndarray        # N x K, column k = u_k
    weights: np.ndarray
    objective_trace: list = field(default_factory=list)
    topology: str = "fully"

    @property
    def objective(self):
        return self.objective_trace[-1]


def _project(a, topology, groups, group_size):
    if topology == "diagonal":
        return project_diagonal_unitary(a)
    if groups == 1:
        return project_symmetric_unitary(a)
    out = np.zeros_like(np.asarray(a, dtype=complex))
    for g in range(groups):
        sl = slice(g * group_size, (g + 1) * group_size)
        out[sl, sl] = project_symmetric_unitary(np.asarray(a)[sl, sl])
    return out


def _ascent_loop(csi, theta, precoder_fn, weights, p_d, rounds, tol,
                 topology, groups, group_size, trace):
    # precoders are a function of theta, so each candidate reflection is
    # scored together with its own precoders; rejecting non-improving
    # candidates makes the trace non-decreasing by construction
    u = precoder_fn(csi, theta)
    best = weighted_sum_power(csi, theta, u, weights, p_d)
    if not trace:
        trace.append(best)
    for _ in range(rounds):
        round_start = best
        d = csi.ascent_direction(theta, u, weights, p_d)
        d_norm = np.linalg.norm(d)
        if d_norm > 0:
            base = np.linalg.norm(theta) / d_norm
            candidates = [_project(theta + eta * base * d, topology, groups,
                                   group_size) for eta in ASCENT_STEPS]
            candidates.append(_project(d, topology, groups, group_size))
            for cand in candidates:
                u_cand = precoder_fn(csi, cand)
                val = weighted_sum_power(csi, cand, u_cand, weights, p_d)
                if val > best:
                    theta, u, best = cand, u_cand, val
            trace.append(best)
        if best <= round_start * (1.0 + tol):
            break
    return theta, u, best


def optimize(csi: CascadeChannel, topology="fully", p_d=1.0, weights=None,
             rounds=50, tol=1e-8, precoding="matched"):
    """Alternating maximization of the weighted sum power.

    For the beyond-diagonal topologies the loop first solves the diagonal
    restriction and continues from its optimum, so the returned objective
    never falls below the diagonal one (the feasible set only grows).

    Parameters
    ----------
    csi : CascadeChannel
    topology : {"fully", "group", "diagonal"}
    p_d : downlink transmit power
    weights : per-user positive weights alpha_k (default 1/K)
    precoding : {"matched", "zero-forcing"}
    """
    m, groups = csi.m, csi.groups
    group_size = m // groups
    probe = csi.cascade(np.eye(m, dtype=complex))
    k = probe.shape[1]
    weights = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, float)
    if np.any(weights <= 0):
        raise ValueError("user weights must be positive")
    precoder_fn = {"matched": matched_precoders,
                   "zero-forcing": zero_forcing_precoders}[precoding]

    trace = []
    theta = np.eye(m, dtype=complex)
    theta, u, best = _ascent_loop(csi, theta, precoder_fn, weights, p_d,
                                  rounds, tol, "diagonal", groups, group_size,
                                  trace)
    if topology != "diagonal":
        theta, u, best = _ascent_loop(csi, theta, precoder_fn, weights, p_d,
                                      rounds, tol, topology, groups,
                                      group_size, trace)
    return BeamformingSolution(theta=theta, precoders=u, weights=weights,
                               objective_trace=trace, topology=topology)


def sinr(solution: BeamformingSolution, true_cascade, k, p_d, sigma2_k):
    """Post-optimization SINR of user k against the true channels.

    ``true_cascade`` is H Theta E built from ground truth with the
    optimized Theta.
    """
    g = np.asarray(true_cascade)
    n_users = g.shape[1]
    if not 0 <= k < n_users:
        raise ValueError(f"user index {k} out of range")
    u = solution.precoders
    alpha = solution.weights[k]
    s = np.einsum("n,nk->k", g[:, k], u)   # s_i = g_k^T u_i
    signal = alpha * p_d * np.abs(s[k]) ** 2
    interference = alpha * p_d * (np.sum(np.abs(s) ** 2) - np.abs(s[k]) ** 2)
    return float(signal / (interference + sigma2_k))


def sum_rate(sinrs, data_fraction):
    """Effective downlink sum rate lambda * sum log2(1 + SINR)."""
    if not 0.0 <= data_fraction <= 1.0:
        raise ValueError("the data transmission coefficient must lie in [0, 1]")
    sinrs = np.asarray(sinrs, float)
    if np.any(sinrs < 0):
        raise ValueError("SINR values must be non-negative")
    return float(data_fraction * np.sum(np.log2(1.0 + sinrs)))
