"""Fisher-information engines for Gaussian state and measurement families.

Quantum Fisher information uses the phase-space formula (transcribed to
this package's hbar = 2, interleaved-quadrature convention)::

    F_ij = 1/2 vec(dV_i)^T (V (x) V - Omega (x) Omega)^{-1} vec(dV_j)
           + dxi_i^T V^{-1} dxi_j

whose normalization is pinned by two anchors (thermal-state QFI
``1/(N(N+1))`` for the mean-photon parameter, coherent-state phase QFI
``4 |alpha|^2``) and verified end to end against the Fock-space SLD oracle
in the tests.  Classical Fisher information of a Gaussian outcome model
``N(mu(theta), Sigma(theta))`` uses the standard expression
``F_ij = 1/2 tr[S^-1 dS_i S^-1 dS_j] + dmu_i^T S^-1 dmu_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import gaussian as g
from .network import NetworkConfig, nb_prime

__all__ = [
    "FisherMatrix",
    "ParamFamily",
    "GaussianDistributionFamily",
    "SingularFisherError",
    "qfim_gaussian",
    "cfim_gaussian_distribution",
    "rwmse_from_fim",
    "reparameterize",
    "average_phase_errors_degenerate",
    "central_step",
]

PSD_TOL = 1e-9
SYM_TOL = 1e-10


class SingularFisherError(np.linalg.LinAlgError):
    """Raised when a Fisher matrix cannot be inverted.

    ``null_direction`` holds the (approximate) unidentifiable parameter
    combination.
    """

    def __init__(self, message: str, null_direction: np.ndarray):
        super().__init__(message)
        self.null_direction = null_direction


@dataclass(frozen=True)
class FisherMatrix:
    """Symmetric positive-semidefinite information matrix with labels."""

    matrix: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Fisher matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > SYM_TOL * scale:
            raise ValueError("Fisher matrix must be symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m).min() < -PSD_TOL * scale:
            raise ValueError("Fisher matrix must be positive semidefinite")
        labels = tuple(self.labels) or tuple(f"theta_{j}" for j in range(m.shape[0]))
        if len(labels) != m.shape[0]:
            raise ValueError("label count must match the matrix size")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def central_step(value: float) -> float:
    """Default central-difference step, ``max(1, |x|) eps^{1/3}``."""
    return max(1.0, abs(value)) * np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class ParamFamily:
    """Differentiable map from parameters to a Gaussian state.

    ``evaluate(params) -> GaussianState``; optional ``derivative(params, i)
    -> (dmean_i, dcov_i)`` for families with analytic derivatives.  When no
    analytic derivative is supplied, central finite differences with the
    step policy are used.
    """

    evaluate: Callable
    base_point: np.ndarray
    step: Callable = central_step
    derivative: Callable | None = None
    labels: tuple = ()
    near_pure: bool = False

    def params(self) -> np.ndarray:
        return np.asarray(self.base_point, dtype=float)


def _fd_state_derivative(family: ParamFamily, params: np.ndarray, i: int):
    h = family.step(params[i])
    up = params.copy()
    lo = params.copy()
    up[i] += h
    lo[i] -= h
    s_up = family.evaluate(up)
    s_lo = family.evaluate(lo)
    return (s_up.mean - s_lo.mean) / (2 * h), (s_up.cov - s_lo.cov) / (2 * h)


def qfim_gaussian(family: ParamFamily, params=None) -> FisherMatrix:
    """Quantum Fisher information matrix of a Gaussian state family."""
    params = family.params() if params is None else np.asarray(params, dtype=float)
    n_par = params.size
    state = family.evaluate(params)
    v = state.cov
    omega = g.symplectic_form(state.n_modes)
    r = np.kron(v, v) - np.kron(omega, omega)
    if family.near_pure:
        r = r + 1e-10 * np.linalg.norm(r, 2) * np.eye(r.shape[0])
    dmeans, dcovs = [], []
    for i in range(n_par):
        if family.derivative is not None:
            dm, dc = family.derivative(params, i)
        else:
            dm, dc = _fd_state_derivative(family, params, i)
        dmeans.append(np.asarray(dm, dtype=float))
        dcovs.append(np.asarray(dc, dtype=float))
    try:
        sol = np.linalg.solve(r, np.stack([dc.reshape(-1, order="F") for dc in dcovs], axis=1))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "phase-space curvature matrix is singular (pure state family?); "
            "flag the family as near_pure to regularize"
        ) from exc
    vinv_dm = np.linalg.solve(v, np.stack(dmeans, axis=1))
    fim = np.empty((n_par, n_par))
    for i in range(n_par):
        for j in range(i, n_par):
            cov_term = 0.5 * dcovs[i].reshape(-1, order="F") @ sol[:, j]
            mean_term = dmeans[i] @ vinv_dm[:, j]
            fim[i, j] = fim[j, i] = cov_term + mean_term
    fim = np.where(np.abs(fim) < 1e4 * np.finfo(float).eps, 0.0, fim)
    return FisherMatrix(0.5 * (fim + fim.T), family.labels)


@dataclass(frozen=True)
class GaussianDistributionFamily:
    """Parametric Gaussian outcome model ``theta -> (mu, Sigma)``."""

    moments: Callable
    base_point: np.ndarray
    step: Callable = central_step
    derivative: Callable | None = None
    labels: tuple = ()


def cfim_gaussian_distribution(family: GaussianDistributionFamily, params=None) -> FisherMatrix:
    """Classical Fisher information of a multivariate normal model."""
    params = (
        np.asarray(family.base_point, dtype=float)
        if params is None
        else np.asarray(params, dtype=float)
    )
    n_par = params.size
    mu, sigma = family.moments(params)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    try:
        chol = scipy.linalg.cho_factor(sigma)
    except scipy.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("outcome covariance is singular") from exc
    dmu, dsig = [], []
    for i in range(n_par):
        if family.derivative is not None:
            dm, ds = family.derivative(params, i)
        else:
            h = family.step(params[i])
            up, lo = params.copy(), params.copy()
            up[i] += h
            lo[i] -= h
            mu_u, sig_u = family.moments(up)
            mu_l, sig_l = family.moments(lo)
            dm = (np.asarray(mu_u, dtype=float) - mu_l) / (2 * h)
            ds = (np.asarray(sig_u, dtype=float) - sig_l) / (2 * h)
        dmu.append(np.asarray(dm, dtype=float))
        dsig.append(np.asarray(ds, dtype=float))
    a = [scipy.linalg.cho_solve(chol, ds) for ds in dsig]  # Sigma^-1 dSigma
    b = [scipy.linalg.cho_solve(chol, dm) for dm in dmu]
    fim = np.empty((n_par, n_par))
    for i in range(n_par):
        for j in range(i, n_par):
            fim[i, j] = fim[j, i] = 0.5 * np.sum(a[i] * a[j].T) + dmu[i] @ b[j]
    fim = np.where(np.abs(fim) < 1e4 * np.finfo(float).eps, 0.0, fim)
    return FisherMatrix(0.5 * (fim + fim.T), family.labels)


def rwmse_from_fim(fim: FisherMatrix, weights=None) -> float:
    """Cramer-Rao root weighted mean-square error, ``sqrt(sum_j w_j (F^-1)_jj)``.

    Default weights are uniform ``1/m``.  A singular matrix raises
    :class:`SingularFisherError` carrying the null-space direction.
    """
    m = fim.dim
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    if w.size != m:
        raise ValueError("weight vector length must match the matrix")
    vals, vecs = np.linalg.eigh(fim.matrix)
    scale = max(vals.max(), 0.0)
    if vals.min() <= 1e-12 * max(scale, 1e-300):
        direction = vecs[:, int(np.argmin(vals))]
        labels = ", ".join(
            f"{c:+.3f}*{lab}" for c, lab in zip(direction, fim.labels) if abs(c) > 1e-6
        )
        raise SingularFisherError(
            f"Fisher matrix is singular; unidentifiable combination {labels}",
            direction,
        )
    inv_diag = np.einsum("jk,k,jk->j", vecs, 1.0 / vals, vecs)
    return float(np.sqrt(np.sum(w * inv_diag)))


def reparameterize(fim: FisherMatrix, jacobian: np.ndarray, labels=()) -> FisherMatrix:
    """Push a Fisher matrix through a parameter change, ``J^T F J``.

    ``jacobian[i, j] = d old_i / d new_j``; it must have full column rank.
    """
    jac = np.atleast_2d(np.asarray(jacobian, dtype=float))
    if jac.shape[0] != fim.dim:
        raise ValueError("jacobian row count must match the matrix")
    if np.linalg.matrix_rank(jac) < jac.shape[1]:
        raise ValueError("jacobian is rank deficient")
    out = jac.T @ fim.matrix @ jac
    return FisherMatrix(0.5 * (out + out.T), labels)


def average_phase_errors_degenerate(cfg: NetworkConfig) -> tuple[float, float]:
    """RMSE of weighted-average-phase estimation in the degenerate case.

    All inter-transmitter phase differences are known, so the single
    remaining parameter is the weighted average phase.  Returns
    ``(eps_qi, eps_ci)``: the network value
    ``sqrt((nb'+1)(2 n_s+1) / (4 m nu n_s (n_s+1)))`` and the coherent-probe
    value ``sqrt((2 n_b+1) / (4 m^2 nu n_s))`` whose extra ``1/m`` comes
    from amplitude interference at the receiver.
    """
    if cfg.n_s <= 0:
        raise ValueError("need a nonzero signal brightness")
    nbp = nb_prime(cfg)
    eps_qi = np.sqrt(
        (nbp + 1.0)
        * (2.0 * cfg.n_s + 1.0)
        / (4.0 * cfg.m * cfg.nu * cfg.n_s * (cfg.n_s + 1.0))
    )
    eps_ci = np.sqrt((2.0 * cfg.n_b + 1.0) / (4.0 * cfg.m**2 * cfg.nu * cfg.n_s))
    return float(eps_qi), float(eps_ci)
