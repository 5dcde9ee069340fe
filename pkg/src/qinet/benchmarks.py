"""Coherent-state baselines and non-asymptotic bounds.

Asymptotic side: the best rWMSE of any coherent-probe strategy with the
same mean energy per transmitter obeys::

    eps >= sqrt( m_re (2 n_b + 1) / (4 nu n_s max_j eta_j) )

and the matching two-phases-per-round protocol achieves
``sqrt(m_re (2 n_b+1) sum_j eta_j^{-1} / (4 m nu n_s))`` whenever the round
count is a multiple of ``m/2`` (``m`` even).

Non-asymptotic side (round count below ``m/2``): a coherent probe only
carries two independent phases per round, so the error is bracketed by a
Bayesian single-observable bound (Personick-style Sylvester solve in
truncated Fock space) from below and by a concrete homodyne
arccos-estimator strategy from above, each mixed with the random-guess
variance ``pi^2/3`` for the phases left unprobed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from . import fock as fk
from .network import NetworkConfig, nb_prime

__all__ = [
    "GUESS_VARIANCE",
    "classical_asymptotic_rwmse",
    "AchievableRwmse",
    "classical_achievable_rwmse",
    "AveragePhaseRmse",
    "classical_average_phase_rmse",
    "homodyne_mse",
    "BayesProbe",
    "fig_probe_two_mode",
    "single_probe_amplitude",
    "bayes_mse",
    "NonAsymPlan",
    "nonasym_bounds",
    "NonAsymBounds",
]

GUESS_VARIANCE = np.pi**2 / 3.0  # min_x int dtheta/2pi (x - theta)^2


def classical_asymptotic_rwmse(cfg: NetworkConfig) -> float:
    """Coherent-probe lower bound on the phase rWMSE (many-round regime)."""
    eta_max = float(cfg.eta.max())
    if eta_max == 0.0:
        raise ValueError("all reflectivities vanish; phases are unidentifiable")
    return float(
        np.sqrt(cfg.m_re * (2.0 * cfg.n_b + 1.0) / (4.0 * cfg.nu * cfg.n_s * eta_max))
    )


@dataclass(frozen=True)
class AchievableRwmse:
    value: float
    valid: bool  # True when nu = l m / 2 with m even


def classical_achievable_rwmse(cfg: NetworkConfig) -> AchievableRwmse:
    """Error of the two-phases-per-round coherent protocol.

    Exact when the round count is a multiple of ``m/2`` with ``m`` even;
    otherwise the value is still returned with ``valid=False``.
    """
    if np.any(cfg.eta == 0.0):
        raise ValueError("zero reflectivity makes a phase unidentifiable")
    value = np.sqrt(
        cfg.m_re
        * (2.0 * cfg.n_b + 1.0)
        * np.sum(1.0 / cfg.eta)
        / (4.0 * cfg.m * cfg.nu * cfg.n_s)
    )
    valid = cfg.m % 2 == 0 and (2.0 * cfg.nu) % cfg.m == 0
    return AchievableRwmse(float(value), bool(valid))


@dataclass(frozen=True)
class AveragePhaseRmse:
    per_probe: float  # energy spread over the array
    concentrated: float  # full power concentrated in one probe (extra 1/m)


def classical_average_phase_rmse(cfg: NetworkConfig) -> AveragePhaseRmse:
    """Coherent-probe RMSE for the weighted average phase, both power modes."""
    base = (2.0 * cfg.n_b + 1.0) / (4.0 * cfg.nu * cfg.n_s)
    return AveragePhaseRmse(
        per_probe=float(np.sqrt(base / cfg.m)),
        concentrated=float(np.sqrt(base / cfg.m**2)),
    )


# ---------------------------------------------------------------------------
# homodyne arccos-estimator MSE (non-asymptotic upper bound ingredient)
# ---------------------------------------------------------------------------

def homodyne_mse(c: float, n_b: float, rel_tol: float = 1e-6, grid: int = 512) -> float:
    """Single-round MSE of the homodyne arccos estimator.

    A bright single-mode probe of received amplitude ``c`` on a thermal
    background gives a homodyne outcome ``q ~ N(c cos(theta), 2 n_b + 1)``.
    The estimator returns ``arccos(q / c)`` in range and a fixed guess
    ``3 pi / 2`` out of range; the phase prior is uniform on ``[0, 2 pi)``.
    The double integral is evaluated with a periodic trapezoid rule in the
    prior (spectrally accurate) and adaptive quadrature in the outcome.
    """
    if c <= 0.0:
        raise ValueError("need a positive probe amplitude")
    sig2 = 2.0 * n_b + 1.0
    norm = 1.0 / np.sqrt(2.0 * np.pi * sig2)

    def inner(theta: float) -> float:
        def integrand(tp: float) -> float:
            return (
                np.sin(tp)
                * np.exp(-0.5 * c**2 * (np.cos(tp) - np.cos(theta)) ** 2 / sig2)
                * (tp - theta) ** 2
            )

        val, err = scipy.integrate.quad(
            integrand, 0.0, np.pi, epsrel=rel_tol, epsabs=1e-12, limit=200
        )
        in_range = c * norm * val
        amp = c / np.sqrt(2.0 * sig2)
        tail = 0.5 * (
            2.0
            - scipy.special.erf(amp * (1.0 - np.cos(theta)))
            - scipy.special.erf(amp * (1.0 + np.cos(theta)))
        )
        return in_range + tail * (1.5 * np.pi - theta) ** 2

    thetas = 2.0 * np.pi * np.arange(grid) / grid
    values = np.array([inner(t) for t in thetas])
    return float(values.mean())


# ---------------------------------------------------------------------------
# Bayesian single-observable bound (Personick / Sylvester solve)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BayesProbe:
    """Received displacement ``alpha_fixed + alpha_rotating e^{-i theta}``."""

    alpha_fixed: complex
    alpha_rotating: complex


def fig_probe_two_mode(cfg: NetworkConfig, concentrated: bool = False) -> BayesProbe:
    """Two-mode coherent probe of the non-asymptotic benchmark.

    The round's energy budget (``n_s`` per transmitter by default, or the
    whole ``m n_s`` when ``concentrated``) is split between a
    phase-reference mode and the mode carrying the unknown phase, so each
    received component has amplitude ``sqrt(w eta E / 2)``.
    """
    energy = cfg.m * cfg.n_s if concentrated else cfg.n_s
    amp = np.sqrt(float(cfg.eta[0]) * energy / (2.0 * cfg.m_re))
    return BayesProbe(alpha_fixed=amp, alpha_rotating=amp)


def single_probe_amplitude(cfg: NetworkConfig) -> float:
    """Received amplitude ``sqrt(m w eta n_s)`` of the concentrated single probe."""
    return float(np.sqrt(cfg.m * cfg.eta[0] * cfg.n_s / cfg.m_re))


def bayes_mse(
    probe: BayesProbe,
    n_b: float,
    cutoff: int = 300,
    grid: int = 512,
    leak_budget: float = 1e-6,
) -> float:
    """Minimum single-observable Bayesian MSE for the phase of ``probe``.

    ``rho(theta)`` is the displaced thermal state of the received mode.
    Solving the Sylvester equation ``B rho_bar + rho_bar B = 2 Gamma`` with
    ``rho_bar = E[rho]`` and ``Gamma = E[theta rho]`` (uniform prior on
    ``[0, 2 pi)``) gives the optimal estimator observable, and the bound::

        E = E[theta^2] - tr(rho_bar B^2).

    The theta integrals use the periodic trapezoid rule (``grid`` points);
    the thermal mixture is truncated where its tail is below 1e-16.
    """
    pops = fk._thermal_populations(n_b, cutoff)
    keep = min(int(np.searchsorted(np.cumsum(pops), 1.0 - 1e-16)) + 1, cutoff)
    pops = pops[:keep]
    thetas = 2.0 * np.pi * np.arange(grid) / grid

    cols = np.empty((grid, cutoff, keep), dtype=complex)
    worst_leak = 0.0
    for i, th in enumerate(thetas):
        beta = probe.alpha_fixed + probe.alpha_rotating * np.exp(-1j * th)
        c = fk.displacement_columns(beta, cutoff, keep)
        cols[i] = c
        worst_leak = max(worst_leak, 1.0 - float(np.sum(pops * (np.abs(c) ** 2).sum(0))))
    if worst_leak > leak_budget:
        raise ValueError(
            f"cutoff {cutoff} leaks {worst_leak:.2e} > {leak_budget:.1e}; increase it"
        )

    w_state = np.sqrt(pops / grid)
    stack = (cols * w_state).transpose(1, 0, 2).reshape(cutoff, grid * keep)
    rho_bar = stack @ stack.conj().T
    w_gamma = np.sqrt(np.outer(thetas, pops) / grid)
    stack_g = (cols * w_gamma[:, None, :]).transpose(1, 0, 2).reshape(cutoff, grid * keep)
    gamma = stack_g @ stack_g.conj().T

    vals, vecs = np.linalg.eigh(rho_bar)
    gmat = vecs.conj().T @ gamma @ vecs
    denom = vals[:, None] + vals[None, :]
    mask = denom > fk.EIG_FLOOR * max(vals.max(), 1e-300)
    bmat = np.zeros_like(gmat)
    bmat[mask] = 2.0 * gmat[mask] / denom[mask]
    rho_in_basis = np.diag(vals)
    prior_second_moment = 4.0 * np.pi**2 / 3.0
    correction = np.trace(rho_in_basis @ bmat @ bmat).real
    return float(prior_second_moment - correction)


# ---------------------------------------------------------------------------
# non-asymptotic bracket
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonAsymPlan:
    rounds_per_phase: int  # nu'
    phases_estimated: int  # J (lower) or J' (upper)
    value: float


@dataclass(frozen=True)
class NonAsymBounds:
    lower: float
    upper: float
    lower_plan: NonAsymPlan
    upper_plan: NonAsymPlan
    strict_regime: bool  # nu < ceil(m/2)


def nonasym_bounds(
    cfg: NetworkConfig,
    nu: int,
    e_baye: float | None = None,
    e_homo: float | None = None,
    cutoff: int = 300,
    grid: int = 512,
) -> NonAsymBounds:
    """Bracket the coherent-probe rWMSE at small round counts.

    Lower bound: minimize over ``nu'`` with ``J = min(floor(2 nu / nu'), m)``
    phases estimated at Bayesian cost ``e_baye / nu'`` each, the rest at the
    guess variance.  Upper bound: same search with ``J' = min(floor(nu /
    nu'), m)`` and the homodyne cost ``e_homo / nu'``.  ``e_baye``/``e_homo``
    default to :func:`bayes_mse` on the two-mode concentrated probe and
    :func:`homodyne_mse` at the concentrated single-probe amplitude.
    """
    if nu < 0:
        raise ValueError("round count must be nonnegative")
    m = cfg.m
    if e_baye is None:
        e_baye = bayes_mse(fig_probe_two_mode(cfg), cfg.n_b, cutoff=cutoff, grid=grid)
    if e_homo is None:
        e_homo = homodyne_mse(single_probe_amplitude(cfg), cfg.n_b)

    def search(budget_factor: int, cost: float) -> NonAsymPlan:
        # nu' = 0 stands for the all-guess plan
        best = NonAsymPlan(0, 0, GUESS_VARIANCE)
        for nup in range(1, max(nu, 0) + 1):
            j = min((budget_factor * nu) // nup, m)
            if j == 0:
                continue
            value = (j / m) * (cost / nup) + (1.0 - j / m) * GUESS_VARIANCE
            if value < best.value - 1e-15 or (
                abs(value - best.value) <= 1e-15 and j < best.phases_estimated
            ):
                best = NonAsymPlan(nup, int(j), float(value))
        return best

    lower_plan = search(2, e_baye)
    upper_plan = search(1, e_homo)
    return NonAsymBounds(
        lower=float(np.sqrt(lower_plan.value)),
        upper=float(np.sqrt(upper_plan.value)),
        lower_plan=lower_plan,
        upper_plan=upper_plan,
        strict_regime=nu < int(np.ceil(m / 2)),
    )
