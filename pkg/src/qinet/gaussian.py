"""Phase-space algebra for Gaussian bosonic states.

Conventions used throughout the package:

* quadratures are interleaved, ``r = (q0, p0, q1, p1, ...)``;
* natural units with ``hbar = 2``, so ``a = (q + ip)/2``, ``[q, p] = 2i``
  and the vacuum covariance matrix is the identity;
* the symplectic form is block diagonal with per-mode blocks
  ``[[0, 1], [-1, 0]]``;
* the covariance matrix is ``V_ij = <{dr_i, dr_j}>/2`` with
  ``dr = r - <r>`` (see Weedbrook et al., Rev. Mod. Phys. 84, 621 (2012)
  for the general framework).

All operations are pure: states are immutable values, every function
returns fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "GaussianState",
    "SymplecticOp",
    "symplectic_form",
    "vacuum",
    "thermal",
    "coherent",
    "tmsv",
    "beamsplitter",
    "balanced_beamsplitter",
    "phase_shift",
    "two_mode_pa",
    "interferometer",
    "embed",
    "apply",
    "tensor",
    "partial_trace",
    "condition_heterodyne",
    "marginal_quadrature",
    "williamson_eigs",
    "williamson",
    "photon_moments",
    "is_physical",
    "PhotonMoments",
    "PhysicalityReport",
]

SYM_TOL = 1e-12          # relative symmetry tolerance for covariance matrices
PHYS_TOL = 1e-9          # eigenvalue slack for the uncertainty relation
SYMPLECTIC_TOL = 1e-10   # |S Omega S^T - Omega| tolerance


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


def symplectic_form(n_modes: int) -> np.ndarray:
    """Symplectic form Omega for ``n_modes`` modes, interleaved ordering."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    return omega


def mode_slice(mode: int) -> slice:
    """Rows/columns of mode ``mode`` in the interleaved quadrature order."""
    return slice(2 * mode, 2 * mode + 2)


def _quad_indices(modes) -> np.ndarray:
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    return np.concatenate([[2 * m, 2 * m + 1] for m in modes])


@dataclass(frozen=True)
class GaussianState:
    """An ``n``-mode Gaussian state given by its first and second moments."""

    cov: np.ndarray
    mean: np.ndarray = None

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square with even dimension, got {cov.shape}")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYM_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean = self.mean
        if mean is None:
            mean = np.zeros(cov.shape[0])
        mean = np.asarray(mean, dtype=float).reshape(-1)
        if mean.size != cov.shape[0]:
            raise ValueError("mean vector length does not match the covariance matrix")
        object.__setattr__(self, "cov", _readonly(cov))
        object.__setattr__(self, "mean", _readonly(mean))

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def mode_mean(self, mode: int) -> np.ndarray:
        return self.mean[mode_slice(mode)]

    def mode_cov(self, mode: int, other: int | None = None) -> np.ndarray:
        other = mode if other is None else other
        return self.cov[mode_slice(mode), mode_slice(other)]


@dataclass(frozen=True)
class SymplecticOp:
    """Affine Gaussian transformation ``r -> S r + d``."""

    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be square with even dimension, got {s.shape}")
        omega = symplectic_form(s.shape[0] // 2)
        defect = np.abs(s @ omega @ s.T - omega).max()
        if defect > SYMPLECTIC_TOL * max(1.0, float(np.abs(s).max()) ** 2):
            raise ValueError(f"matrix is not symplectic (defect {defect:.3e})")
        d = self.displacement
        if d is None:
            d = np.zeros(s.shape[0])
        d = np.asarray(d, dtype=float).reshape(-1)
        if d.size != s.shape[0]:
            raise ValueError("displacement length does not match the matrix")
        object.__setattr__(self, "matrix", _readonly(s))
        object.__setattr__(self, "displacement", _readonly(d))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def then(self, other: "SymplecticOp") -> "SymplecticOp":
        """Composition ``other @ self`` (self acts first)."""
        return SymplecticOp(
            other.matrix @ self.matrix,
            other.matrix @ self.displacement + other.displacement,
        )


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def vacuum(n_modes: int) -> GaussianState:
    """``n_modes``-mode vacuum: zero mean, identity covariance."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.eye(2 * n_modes))


def thermal(n_mean: float, n_modes: int = 1) -> GaussianState:
    """Product of ``n_modes`` thermal states with ``n_mean`` photons each."""
    if n_mean < 0:
        raise ValueError("mean photon number must be nonnegative")
    return GaussianState((2.0 * n_mean + 1.0) * np.eye(2 * n_modes))


def coherent(alpha: complex) -> GaussianState:
    """Single-mode coherent state; mean quadratures ``(2 Re a, 2 Im a)``."""
    return GaussianState(np.eye(2), [2.0 * alpha.real, 2.0 * alpha.imag])


def tmsv(n_s: float) -> GaussianState:
    """Two-mode squeezed vacuum with ``n_s`` mean photons per arm.

    Diagonal blocks ``(2 n_s + 1) I``, off-diagonal block
    ``2 sqrt(n_s (n_s + 1)) Z``.
    """
    if n_s < 0:
        raise ValueError("mean photon number must be nonnegative")
    c = 2.0 * n_s + 1.0
    s = 2.0 * np.sqrt(n_s * (n_s + 1.0))
    z = np.diag([1.0, -1.0])
    cov = np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return GaussianState(cov)


# ---------------------------------------------------------------------------
# symplectic constructors
# ---------------------------------------------------------------------------

def beamsplitter(tau: float) -> SymplecticOp:
    """Two-mode beamsplitter with transmissivity ``tau``.

    Mode operators transform as ``a -> sqrt(tau) a + sqrt(1-tau) b``,
    ``b -> -sqrt(1-tau) a + sqrt(tau) b``; ``tau = 1`` is the identity.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError("transmissivity must lie in [0, 1]")
    t, r = np.sqrt(tau), np.sqrt(1.0 - tau)
    s = np.kron(np.array([[t, r], [-r, t]]), np.eye(2))
    return SymplecticOp(s)


def balanced_beamsplitter() -> SymplecticOp:
    """50:50 beamsplitter ``a -> (a+b)/sqrt2``, ``b -> (a-b)/sqrt2``."""
    s = np.kron(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0), np.eye(2))
    return SymplecticOp(s)


def phase_shift(theta: float) -> SymplecticOp:
    """Single-mode rotation ``a -> e^{i theta} a``."""
    c, s = np.cos(theta), np.sin(theta)
    return SymplecticOp(np.array([[c, -s], [s, c]]))


def rotation2(theta: float) -> np.ndarray:
    """The 2x2 rotation matrix of :func:`phase_shift`."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def two_mode_pa(gain: float) -> SymplecticOp:
    """Phase-conjugating two-mode parametric amplifier of gain ``g >= 1``.

    On modes ``(1, 2)`` the quadratures transform as::

        q1 -> sqrt(g-1) q1 + sqrt(g) q2      p1 -> -sqrt(g-1) p1 + sqrt(g) p2
        q2 -> sqrt(g)   q1 + sqrt(g-1) q2    p2 -> sqrt(g)    p1 - sqrt(g-1) p2

    so the mode-1 output carries the phase conjugate of the mode-1 input.
    """
    if gain < 1.0:
        raise ValueError("parametric gain must be >= 1")
    u, v = np.sqrt(gain - 1.0), np.sqrt(gain)
    s = np.array(
        [
            [u, 0.0, v, 0.0],
            [0.0, -u, 0.0, v],
            [v, 0.0, u, 0.0],
            [0.0, v, 0.0, -u],
        ]
    )
    return SymplecticOp(s)


def interferometer(w: np.ndarray) -> SymplecticOp:
    """Passive mode mixer from a real orthogonal matrix ``w``.

    Output mode ``i`` is ``sum_j w_ij a_j``; both quadratures mix with the
    same coefficients.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("interferometer matrix must be square")
    if np.abs(w @ w.T - np.eye(w.shape[0])).max() > SYMPLECTIC_TOL:
        raise ValueError("interferometer matrix must be orthogonal")
    return SymplecticOp(np.kron(w, np.eye(2)))


def embed(op: SymplecticOp, modes, n_total: int) -> SymplecticOp:
    """Embed ``op`` acting on the listed ``modes`` of an ``n_total``-mode system."""
    modes = list(modes)
    if len(modes) != op.n_modes:
        raise ValueError("mode list does not match the operation size")
    if len(set(modes)) != len(modes) or min(modes) < 0 or max(modes) >= n_total:
        raise ValueError("invalid mode indices")
    idx = _quad_indices(modes)
    s = np.eye(2 * n_total)
    s[np.ix_(idx, idx)] = op.matrix
    d = np.zeros(2 * n_total)
    d[idx] = op.displacement
    return SymplecticOp(s, d)


# ---------------------------------------------------------------------------
# state transformations
# ---------------------------------------------------------------------------

def apply(state: GaussianState, op: SymplecticOp) -> GaussianState:
    """Moment update ``mean -> S mean + d``, ``cov -> S cov S^T``."""
    if op.n_modes != state.n_modes:
        raise ValueError(
            f"operation acts on {op.n_modes} modes, state has {state.n_modes}"
        )
    s = op.matrix
    return GaussianState(s @ state.cov @ s.T, s @ state.mean + op.displacement)


def tensor(*states: GaussianState) -> GaussianState:
    """Product state of the given states, modes concatenated in order."""
    cov = scipy.linalg.block_diag(*[st.cov for st in states])
    mean = np.concatenate([st.mean for st in states])
    return GaussianState(cov, mean)


def partial_trace(state: GaussianState, keep) -> GaussianState:
    """Restrict to the modes in ``keep`` (order preserved)."""
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one mode")
    if len(set(keep)) != len(keep) or min(keep) < 0 or max(keep) >= state.n_modes:
        raise ValueError("invalid mode indices")
    idx = _quad_indices(keep)
    return GaussianState(state.cov[np.ix_(idx, idx)], state.mean[idx])


def condition_heterodyne(state: GaussianState, mode: int, x) -> tuple[GaussianState, float]:
    """Heterodyne measurement of ``mode`` with outcome ``x = 2(Re chi, Im chi)``.

    Returns the conditional state of the remaining modes together with the
    outcome probability density (normalized over ``d^2 x``).  For a measured
    block ``B`` with covariance ``sigma_B`` the outcome is Gaussian with
    covariance ``sigma_B + I``; the conditional covariance
    ``V_A - sigma_AB (sigma_B + I)^{-1} sigma_AB^T`` is outcome independent.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    n = state.n_modes
    if not 0 <= mode < n:
        raise ValueError("invalid mode index")
    if n == 1:
        raise ValueError("cannot condition away the only mode")
    rest = [m for m in range(n) if m != mode]
    ia, ib = _quad_indices(rest), _quad_indices([mode])
    v_a = state.cov[np.ix_(ia, ia)]
    v_b = state.cov[np.ix_(ib, ib)]
    v_ab = state.cov[np.ix_(ia, ib)]
    m_b = v_b + np.eye(2)
    gain = v_ab @ np.linalg.inv(m_b)
    cov = v_a - gain @ v_ab.T
    mean = state.mean[ia] + gain @ (x - state.mean[ib])
    resid = x - state.mean[ib]
    dens = np.exp(-0.5 * resid @ np.linalg.solve(m_b, resid))
    dens /= 2.0 * np.pi * np.sqrt(np.linalg.det(m_b))
    return GaussianState(cov, mean), float(dens)


def marginal_quadrature(state: GaussianState, selection) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian outcome distribution of ideal homodyne on chosen quadratures.

    ``selection`` is a sequence of ``(mode, 'q' | 'p')`` pairs, one per
    measured mode.  Returns ``(mean, cov)`` of the joint outcome
    distribution (rows/columns of the state moments at the selected
    quadratures).
    """
    idx = []
    for mode, quad in selection:
        if not 0 <= mode < state.n_modes:
            raise ValueError("invalid mode index")
        if quad not in ("q", "p"):
            raise ValueError("quadrature must be 'q' or 'p'")
        idx.append(2 * mode + (0 if quad == "q" else 1))
    idx = np.asarray(idx, dtype=int)
    return state.mean[idx].copy(), state.cov[np.ix_(idx, idx)].copy()


# ---------------------------------------------------------------------------
# spectra and diagnostics
# ---------------------------------------------------------------------------

def williamson_eigs(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a symmetric positive-definite covariance.

    Computed as the absolute values of the (paired) spectrum of
    ``i Omega V``; sorted ascending, one entry per mode.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    if np.linalg.eigvalsh(cov).min() <= 0:
        raise ValueError("covariance must be positive definite")
    omega = symplectic_form(n)
    vals = np.abs(np.linalg.eigvals(1j * omega @ cov))
    vals.sort()
    # the spectrum comes in +/- pairs; average each pair for robustness
    return 0.5 * (vals[0::2] + vals[1::2])


def williamson(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Williamson normal form ``V = S diag(mu_j I_2) S^T`` with symplectic S.

    Returns ``(S, mu)`` with ``mu`` ascending.  Uses the real Schur form of
    the antisymmetric matrix ``V^{1/2} Omega V^{1/2}``.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    omega = symplectic_form(n)
    w, u = np.linalg.eigh(cov)
    if w.min() <= 0:
        raise ValueError("covariance must be positive definite")
    root = u @ np.diag(np.sqrt(w)) @ u.T
    kern = root @ omega @ root
    kern = 0.5 * (kern - kern.T)
    t, q = scipy.linalg.schur(kern, output="real")
    # normalize each 2x2 block of t to [[0, mu], [-mu, 0]] with mu > 0
    mus = np.empty(n)
    for j in range(n):
        blk = t[2 * j : 2 * j + 2, 2 * j : 2 * j + 2]
        if blk[0, 1] < 0:
            q[:, [2 * j, 2 * j + 1]] = q[:, [2 * j + 1, 2 * j]]
        mus[j] = abs(blk[0, 1])
    order = np.argsort(mus)
    perm = np.empty(2 * n, dtype=int)
    for j, src in enumerate(order):
        perm[2 * j : 2 * j + 2] = (2 * src, 2 * src + 1)
    q = q[:, perm]
    mus = mus[order]
    d_half = np.repeat(np.sqrt(mus), 2)
    s = root @ q / d_half
    return s, mus


@dataclass(frozen=True)
class PhysicalityReport:
    ok: bool
    min_eig: float
    tol: float = PHYS_TOL

    def __bool__(self) -> bool:
        return self.ok


def is_physical(cov: np.ndarray, tol: float = PHYS_TOL) -> PhysicalityReport:
    """Check the bona fide condition ``V + i Omega >= 0``.

    The report carries the minimum eigenvalue of the Hermitian matrix
    ``V + i Omega`` as a diagnostic.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError("covariance must be square with even dimension")
    scale = max(1.0, float(np.abs(cov).max()))
    if np.abs(cov - cov.T).max() > SYM_TOL * scale:
        return PhysicalityReport(False, -np.inf, tol)
    omega = symplectic_form(cov.shape[0] // 2)
    min_eig = float(np.linalg.eigvalsh(cov + 1j * omega).min())
    return PhysicalityReport(min_eig >= -tol, min_eig, tol)


# ---------------------------------------------------------------------------
# photon-number moments (Wick / Isserlis)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhotonMoments:
    means: np.ndarray
    cov: np.ndarray
    modes: tuple = field(default=())


def photon_moments(state: GaussianState, modes=None) -> PhotonMoments:
    """First and second moments of the photon numbers of the given modes.

    With ``hbar = 2``, ``N_j = (q_j^2 + p_j^2 - 2)/4``, so for a Gaussian
    state with mode moments ``(xi_j, V_jk)``::

        <N_j>         = (tr V_jj + |xi_j|^2 - 2) / 4
        Cov(N_j, N_k) = (tr(V_jk V_jk^T) - 2 delta_jk) / 8
                        + xi_j^T V_jk xi_k / 4

    The quartic expectations follow from the Wick/Isserlis expansion of the
    symmetrically ordered quadrature moments; the ``-2 delta_jk`` term is
    the commutator correction for equal modes.
    """
    if modes is None:
        modes = range(state.n_modes)
    modes = tuple(modes)
    k = len(modes)
    means = np.empty(k)
    cov = np.empty((k, k))
    for a, ma in enumerate(modes):
        xa = state.mode_mean(ma)
        vaa = state.mode_cov(ma)
        means[a] = 0.25 * (np.trace(vaa) + xa @ xa - 2.0)
        for b, mb in enumerate(modes):
            xb = state.mode_mean(mb)
            vab = state.mode_cov(ma, mb)
            cov[a, b] = 0.125 * (np.sum(vab * vab) - 2.0 * (ma == mb)) + 0.25 * (
                xa @ vab @ xb
            )
    cov = 0.5 * (cov + cov.T)
    return PhotonMoments(means, cov, modes)
