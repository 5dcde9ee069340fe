"""Binary classification of reflectivity patterns.

The network discriminates two reflectivity vectors with equal priors.  The
heterodyne stage of the correlation-to-displacement receiver maps each
hypothesis to displaced idler states whose Chernoff overlap gives the error
exponent; the coherent-probe baseline is a displaced thermal state whose
amplitude adds coherently across transmitters.  The characteristic
difference: the network exponent sums ``(sqrt(eta0) - sqrt(eta1))^2`` over
transmitters, the coherent baseline squares the coherent sum, so balanced
sign patterns are invisible classically.

Phases are assumed known and corrected to zero for classification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian as g
from .network import NetworkConfig, nb_prime

__all__ = [
    "HypothesisPair",
    "chernoff_aux",
    "chernoff_overlap_gaussian",
    "PatternError",
    "p_qi",
    "p_ci",
    "ExponentRatio",
    "exponent_ratio",
]


@dataclass(frozen=True)
class HypothesisPair:
    """Two equal-prior reflectivity patterns of the same length."""

    eta0: np.ndarray
    eta1: np.ndarray

    def __post_init__(self):
        eta0 = np.atleast_1d(np.asarray(self.eta0, dtype=float))
        eta1 = np.atleast_1d(np.asarray(self.eta1, dtype=float))
        if eta0.shape != eta1.shape:
            raise ValueError("patterns must have equal length")
        for eta in (eta0, eta1):
            if np.any(eta < 0) or np.any(eta > 1):
                raise ValueError("reflectivities must lie in [0, 1]")
        object.__setattr__(self, "eta0", eta0)
        object.__setattr__(self, "eta1", eta1)

    @property
    def m(self) -> int:
        return self.eta0.size

    def root_difference(self) -> np.ndarray:
        return np.sqrt(self.eta0) - np.sqrt(self.eta1)


def chernoff_aux(mu: float, p: float) -> tuple[float, float]:
    """The scalar building blocks of the Gaussian Chernoff overlap.

    ``G_p(mu) = 2^p / ((mu+1)^p - (mu-1)^p)`` and
    ``Lambda_p(mu) = ((mu+1)^p + (mu-1)^p) / ((mu+1)^p - (mu-1)^p)`` for a
    symplectic eigenvalue ``mu >= 1``; the pure-state limit ``mu = 1``
    gives ``(1, 1)``.
    """
    if mu < 1.0:
        raise ValueError("symplectic eigenvalues of physical states are >= 1")
    if not 0.0 < p <= 1.0:
        raise ValueError("exponent must lie in (0, 1]")
    up = (mu + 1.0) ** p
    dn = (mu - 1.0) ** p if mu > 1.0 else 0.0
    return 2.0**p / (up - dn), (up + dn) / (up - dn)


def _lambda_weighted_cov(state: g.GaussianState, p: float) -> tuple[np.ndarray, np.ndarray]:
    """``S [ (+) Lambda_p(mu_j) I_2 ] S^T`` in the Williamson basis of the state."""
    s, mus = g.williamson(state.cov)
    lam = np.array([chernoff_aux(max(mu, 1.0), p)[1] for mu in mus])
    return s @ np.diag(np.repeat(lam, 2)) @ s.T, mus


def chernoff_overlap_gaussian(state0: g.GaussianState, state1: g.GaussianState, s: float) -> float:
    """``tr[rho0^s rho1^{1-s}]`` for Gaussian states.

    Overlap ``Q_s exp(-1/2 dxi^T (V0_s + V1_{1-s})^{-1} dxi)`` with
    ``Q_s = 2^m prod_j G_s(mu0_j) G_{1-s}(mu1_j) / sqrt(det(V0_s +
    V1_{1-s}))`` and the Lambda-weighted covariances rebuilt in each
    state's Williamson basis.
    """
    if state0.n_modes != state1.n_modes:
        raise ValueError("states must have the same mode count")
    if not 0.0 < s < 1.0:
        raise ValueError("the Chernoff parameter must lie in (0, 1)")
    n = state0.n_modes
    v0s, mus0 = _lambda_weighted_cov(state0, s)
    v1s, mus1 = _lambda_weighted_cov(state1, 1.0 - s)
    wsum = v0s + v1s
    sign, logdet = np.linalg.slogdet(wsum)
    if sign <= 0:
        raise np.linalg.LinAlgError("degenerate covariance sum in the overlap")
    log_q = n * np.log(2.0) - 0.5 * logdet
    for mu in mus0:
        log_q += np.log(chernoff_aux(max(mu, 1.0), s)[0])
    for mu in mus1:
        log_q += np.log(chernoff_aux(max(mu, 1.0), 1.0 - s)[0])
    dxi = state0.mean - state1.mean
    expo = -0.5 * dxi @ np.linalg.solve(wsum, dxi)
    return float(np.exp(log_q + expo))


def _check_pair(cfg: NetworkConfig, pair: HypothesisPair):
    if pair.m != cfg.m:
        raise ValueError("pattern length must equal the transmitter count")


def _lambda_half(n: float) -> float:
    """``Lambda_{1/2}(2n+1) = (sqrt(n+1) + sqrt(n))^2``."""
    return (np.sqrt(n + 1.0) + np.sqrt(n)) ** 2


@dataclass(frozen=True)
class PatternError:
    closed_form: float
    exact_average: float


def p_qi(cfg: NetworkConfig, pair: HypothesisPair) -> PatternError:
    """Network error probability for the reflectivity-pattern pair.

    ``closed_form`` is the exponential
    ``1/2 exp[- nu n_s (n_s+1) sum_j w_j d_j^2 / ((nb'+1) Lambda_{1/2}(2
    n_s+1))]`` with ``d_j = sqrt(eta0_j) - sqrt(eta1_j)``;
    ``exact_average`` integrates the single-round Chernoff exponent over
    the heterodyne outcome distribution, which closes to
    ``1/2 [1 + (that exponent rate)]^{-nu}``.
    """
    _check_pair(cfg, pair)
    nbp = nb_prime(cfg)
    rate = (
        cfg.n_s
        * (cfg.n_s + 1.0)
        * np.sum(cfg.weights * pair.root_difference() ** 2)
        / ((nbp + 1.0) * _lambda_half(cfg.n_s))
    )
    closed = 0.5 * np.exp(-cfg.nu * rate)
    exact = 0.5 * (1.0 + rate) ** (-cfg.nu)
    return PatternError(float(closed), float(exact))


def p_ci(cfg: NetworkConfig, pair: HypothesisPair) -> float:
    """Coherent-probe error probability without power concentration.

    ``1/2 exp{- nu n_s |sum_j d_j|^2 / (m_re Lambda_{1/2}(2 n_b+1))}``; a
    balanced sign pattern has a vanishing exponent and the error stays
    exactly 1/2.
    """
    _check_pair(cfg, pair)
    coherent_sum = np.abs(np.sum(np.sqrt(cfg.weights) * pair.root_difference())) ** 2
    expo = cfg.nu * cfg.n_s * coherent_sum / _lambda_half(cfg.n_b)
    return float(0.5 * np.exp(-expo))


@dataclass(frozen=True)
class ExponentRatio:
    exact: float
    approx: float

    @property
    def db_exact(self) -> float:
        return 10.0 * np.log10(self.exact)

    @property
    def db_approx(self) -> float:
        return 10.0 * np.log10(self.approx)


def exponent_ratio(cfg: NetworkConfig, pair: HypothesisPair) -> ExponentRatio:
    """Error-exponent advantage ``ln(2 p_qi) / ln(2 p_ci)``.

    ``exact`` evaluates the ratio of the closed-form exponents; ``approx``
    is the bright-background, weak-signal limit
    ``4 sum_j d_j^2 / |sum_j d_j|^2``.  Raises when the classical exponent
    is zero (balanced pattern).
    """
    _check_pair(cfg, pair)
    diffs = pair.root_difference()
    coherent_sum = np.abs(np.sum(diffs)) ** 2
    if coherent_sum == 0.0 or p_ci(cfg, pair) >= 0.5:
        raise ValueError("classical exponent is zero for this pattern")
    nbp = nb_prime(cfg)
    exact = (
        _lambda_half(cfg.n_b)
        * (cfg.n_s + 1.0)
        / (_lambda_half(cfg.n_s) * (nbp + 1.0))
        * np.sum(diffs**2)
        / coherent_sum
    )
    approx = 4.0 * np.sum(diffs**2) / coherent_sum
    return ExponentRatio(float(exact), float(approx))
