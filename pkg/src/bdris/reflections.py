"""Reflection matrices and training books for both RIS architectures.

A feasible reflecting state is symmetric unitary (fully-connected) or
block-diagonal with symmetric-unitary blocks (group-connected).  Training
books hold one reflecting state per training block plus, for the
group-connected layout, the on/off schedule that activates a single group
per block.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_ops import circshift, dft_matrix, kron, unvec, vec

SYMMETRY_TOL = 1e-10
UNITARITY_TOL = 1e-10


@dataclass
class IdentifiabilityReport:
    ok: bool
    message: str

    def __bool__(self):
        return self.ok


def validate_identifiability(cfg):
    """Full-row-rank condition of the bilinear fit.

    Fully-connected: M <= min(N*T, K*T).  Group-connected: the same with
    per-group sizes, M_bar <= min(N*T_g, K*T_g) where T_g = T/G.
    """
    n, k, t = cfg.n_bs, cfg.n_users, cfg.n_blocks
    if cfg.groups == 1:
        bound = min(n * t, k * t)
        if cfg.n_ris <= bound:
            return IdentifiabilityReport(True, "ok")
        return IdentifiabilityReport(
            False, f"M={cfg.n_ris} exceeds min(N*T, K*T)={bound}"
        )
    if t % cfg.groups != 0:
        return IdentifiabilityReport(
            False, f"T={t} is not divisible by G={cfg.groups} groups"
        )
    t_g = t // cfg.groups
    bound = min(n * t_g, k * t_g)
    if cfg.group_size <= bound:
        return IdentifiabilityReport(True, "ok")
    return IdentifiabilityReport(
        False, f"M_bar={cfg.group_size} exceeds min(N*T_g, K*T_g)={bound}"
    )


def random_symmetric_unitary(m, rng):
    """Draw a random symmetric unitary matrix as U U^T, U Haar-unitary.

    U comes from the QR factorization of a complex Gaussian matrix with the
    phases of R's diagonal absorbed into Q, which makes the law Haar.
    U U^T is symmetric by construction and unitary because
    (U U^T)(U U^T)^H = U (U^H U)* U^H = I.
    """
    a = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q @ q.T


def check_reflection(theta, groups=1):
    """Raise if ``theta`` is not symmetric unitary (per block)."""
    theta = np.asarray(theta)
    m = theta.shape[0]
    if np.linalg.norm(theta - theta.T) > SYMMETRY_TOL * max(1.0, np.linalg.norm(theta)):
        raise ValueError("reflection matrix is not symmetric")
    mb = m // groups
    for g in range(groups):
        block = theta[g * mb:(g + 1) * mb, g * mb:(g + 1) * mb]
        if np.linalg.norm(block @ block.conj().T - np.eye(mb)) > UNITARITY_TOL * mb:
            raise ValueError(f"block {g} of the reflection matrix is not unitary")
    if groups > 1:
        off = theta.copy()
        for g in range(groups):
            off[g * mb:(g + 1) * mb, g * mb:(g + 1) * mb] = 0.0
        if np.linalg.norm(off) > SYMMETRY_TOL * m:
            raise ValueError("group-connected reflection has energy outside its blocks")


@dataclass
class PilotBook:
    """Reflecting states and pilot symbols for one training frame.

    ``thetas[t]`` is the M x M reflecting state of block ``t``.  For the
    group-connected layout ``schedule[t]`` names the single active group of
    block ``t`` and :meth:`effective` zeroes every other block, modelling
    the switched-off elements.  ``feasible`` is False for the DFT-designed
    baseline book, whose states ignore the symmetric-unitary constraints.
    """

    thetas: list
    pilots: np.ndarray
    groups: int = 1
    schedule: list | None = None
    feasible: bool = True
    group_size: int = field(init=False)

    def __post_init__(self):
        m = self.thetas[0].shape[0]
        self.group_size = m // self.groups
        if self.groups > 1 and self.schedule is None:
            raise ValueError("group-connected book needs a schedule")

    def __len__(self):
        return len(self.thetas)

    @property
    def n_ris(self):
        return self.thetas[0].shape[0]

    def effective(self, t):
        """Reflection applied during block ``t`` (off groups zeroed)."""
        theta = self.thetas[t]
        if self.groups == 1:
            return theta
        g = self.schedule[t]
        mb = self.group_size
        out = np.zeros_like(theta)
        sl = slice(g * mb, (g + 1) * mb)
        out[sl, sl] = theta[sl, sl]
        return out

    def blocks_for_group(self, g):
        if self.groups == 1:
            return list(range(len(self.thetas)))
        return [t for t, active in enumerate(self.schedule) if active == g]

    def group_block(self, t, g):
        mb = self.group_size
        sl = slice(g * mb, (g + 1) * mb)
        return self.thetas[t][sl, sl]


def _pilot_symbols(k):
    # K x K scaled DFT, X X^H = I_K
    return dft_matrix(k) / np.sqrt(k)


def build_training_book(cfg, rng):
    """Random feasible training book for the Tucker2 fit.

    Fully-connected: T independent random symmetric unitaries.
    Group-connected: T/G blocks per group; within a group's sub-frame only
    that group is switched on.
    """
    report = validate_identifiability(cfg)
    if not report:
        raise ValueError(f"identifiability violated: {report.message}")
    m, t = cfg.n_ris, cfg.n_blocks
    if cfg.groups == 1:
        thetas = [random_symmetric_unitary(m, rng) for _ in range(t)]
        return PilotBook(thetas, _pilot_symbols(cfg.n_users))
    mb = cfg.group_size
    t_g = cfg.blocks_per_group
    thetas, schedule = [], []
    for g in range(cfg.groups):
        for _ in range(t_g):
            theta = np.zeros((m, m), dtype=complex)
            for h in range(cfg.groups):
                sl = slice(h * mb, (h + 1) * mb)
                theta[sl, sl] = random_symmetric_unitary(mb, rng)
            thetas.append(theta)
            schedule.append(g)
    return PilotBook(thetas, _pilot_symbols(cfg.n_users), groups=cfg.groups,
                     schedule=schedule)


def dft_pilot_phi(m_bar, groups):
    """MSE-optimal pilot reflection matrix of the LS baseline.

    Phi = Psi1 (x) Psi2 with Psi1 the G x G DFT matrix and Psi2 built
    column-wise from circular shifts of vec(F_Mbar) Hadamard-scaled by the
    columns of F_Mbar/sqrt(Mbar).  Shape (G*Mbar^2, G*Mbar^2); satisfies
    Phi Phi^H = G*Mbar * I.
    """
    u1 = dft_matrix(m_bar)
    u2 = dft_matrix(m_bar) / np.sqrt(m_bar)
    v1 = vec(u1)
    psi2 = np.empty((m_bar * m_bar, m_bar * m_bar), dtype=complex)
    ones = np.ones(m_bar)
    for m in range(1, m_bar + 1):
        for n in range(1, m_bar + 1):
            col = circshift(v1, (n - 1) * m_bar) * kron(u2[:, m - 1], ones)
            psi2[:, (m - 1) * m_bar + n - 1] = col
    return kron(dft_matrix(groups), psi2)


def build_dft_book(cfg):
    """Training states of the conventional LS baseline.

    The t-th column of Phi, split into G chunks of length Mbar^2, gives the
    per-group reflecting states of block t by inverse vectorization.  These
    states are not feasibility-constrained (they target MSE-optimal
    composite estimation, not realizable reflections).
    """
    mb, g = cfg.group_size, cfg.groups
    phi = dft_pilot_phi(mb, g)
    t_total = g * mb * mb
    m = cfg.n_ris
    thetas = []
    for t in range(t_total):
        theta = np.zeros((m, m), dtype=complex)
        for h in range(g):
            chunk = phi[h * mb * mb:(h + 1) * mb * mb, t]
            sl = slice(h * mb, (h + 1) * mb)
            theta[sl, sl] = unvec(chunk, mb, mb)
        thetas.append(theta)
    book = PilotBook(thetas, _pilot_symbols(cfg.n_users), groups=1,
                     schedule=None, feasible=False)
    return book, phi
