"""Measurement designs for the sensing network.

Two parametric-amplifier receivers and the heterodyne-homodyne
(correlation-to-displacement) receiver are modeled:

* ``ppcr``: the return is phase conjugated once, split ``m`` ways, and each
  portion interferes with one idler on a balanced beamsplitter; the signal
  is the photon-number difference at each beamsplitter.
* ``spcr``: the return passes through a chain of ``m`` amplifiers; each
  stage's conjugate output interferes with one idler.  The stage-``j``
  statistics carry an amplification factor ``g^j``.
* ``ctod``: heterodyne on the return converts the signal-idler correlation
  into an idler displacement, the ``nu`` rounds are concentrated into a
  single m-mode state by passive optics, and homodyne reads it out.

For the PA receivers the photon-count record over ``nu`` rounds is treated
as Gaussian (central-limit regime) with::

    mu_j    = sqrt(2) nu b_j,       Sigma = nu (diag(a) + b b^T)
    a_j     = f_j (g-1)(nb'+1)(2 n_s+1) + n_s
    b_j     = sqrt(2 f_j (g-1) n_s (n_s+1) eta_j / m_re) cos(theta_j)

with ``f_j = 1/m`` (ppcr) or ``g^j`` (spcr).  These closed forms are
verified against the fully composed Gaussian chains in the tests.

Operating-point convention: the count statistics are phase sensitive, and
at ``cos(theta_j) = 0`` the parameter is unidentifiable.  The quoted
leading-order error uses the phase-corrected operating point (receiver
biased to the most sensitive quadrature), which carries the
``cos^2(theta_j)`` factor below; the exact count-model Fisher matrix at the
raw operating point is exposed separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian as g
from .estimation import (
    FisherMatrix,
    GaussianDistributionFamily,
    cfim_gaussian_distribution,
    rwmse_from_fim,
)
from .network import NetworkConfig, build_output_state, nb_prime, receiver_unitary

__all__ = [
    "ReceiverSpec",
    "CountStatistics",
    "UnidentifiableError",
    "pa_coefficients",
    "ppcr_statistics",
    "spcr_statistics",
    "pa_chain_state",
    "pa_chain_count_moments",
    "pa_fim",
    "pa_rwmse",
    "optimize_gain",
    "GainOptimum",
    "ctod_conditional",
    "ctod_concentrate",
    "ctod_concentrate_compositional",
    "ctod_homodyne_model",
    "ctod_average_cfim",
    "ctod_average_qfim",
    "ctod_rwmse",
    "CtodRwmse",
]

PA_KINDS = ("ppcr", "spcr")


class UnidentifiableError(ValueError):
    """A parameter carries no first-order information at this operating point."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class ReceiverSpec:
    kind: str  # "ppcr" | "spcr" | "ctod"
    gain: float | None = None

    def __post_init__(self):
        if self.kind not in PA_KINDS + ("ctod",):
            raise ValueError(f"unknown receiver kind {self.kind!r}")
        if self.kind in PA_KINDS:
            if self.gain is None or self.gain <= 1.0:
                raise ValueError("PA receivers need gain > 1")


@dataclass(frozen=True)
class CountStatistics:
    """Gaussian model of the total photon-difference record over ``nu`` rounds."""

    mu: np.ndarray
    sigma: np.ndarray
    nu: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (mu.size, mu.size):
            raise ValueError("covariance shape does not match the mean")
        if np.abs(sigma - sigma.T).max() > 1e-10 * max(1.0, np.abs(sigma).max()):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))


def _gain_factors(kind: str, m: int, gain: float) -> np.ndarray:
    if kind == "ppcr":
        return np.full(m, 1.0 / m)
    if kind == "spcr":
        return gain ** np.arange(m)
    raise ValueError(f"not a PA receiver: {kind!r}")


def pa_coefficients(cfg: NetworkConfig, kind: str, gain: float, theta=None):
    """Per-channel variance floor ``a_j`` and signal amplitude ``b_j``.

    Returns ``(a, b, beta)`` with ``b_j = beta_j cos(theta_j)``.
    """
    if gain <= 1.0:
        raise ValueError("PA gain must exceed 1")
    theta = cfg.theta if theta is None else np.asarray(theta, dtype=float)
    f = _gain_factors(kind, cfg.m, gain)
    nbp = nb_prime(cfg)
    a = f * (gain - 1.0) * (nbp + 1.0) * (2.0 * cfg.n_s + 1.0) + cfg.n_s
    beta = np.sqrt(
        2.0 * f * (gain - 1.0) * cfg.n_s * (cfg.n_s + 1.0) * cfg.eta / cfg.m_re
    )
    return a, beta * np.cos(theta), beta


def _pa_statistics(cfg: NetworkConfig, kind: str, gain: float) -> CountStatistics:
    a, b, _ = pa_coefficients(cfg, kind, gain)
    mu = np.sqrt(2.0) * cfg.nu * b
    sigma = cfg.nu * (np.diag(a) + np.outer(b, b))
    return CountStatistics(mu, sigma, cfg.nu)


def ppcr_statistics(cfg: NetworkConfig, gain: float) -> CountStatistics:
    return _pa_statistics(cfg, "ppcr", gain)


def spcr_statistics(cfg: NetworkConfig, gain: float) -> CountStatistics:
    return _pa_statistics(cfg, "spcr", gain)


# ---------------------------------------------------------------------------
# fully composed receiver chains (Wick-oracle route)
# ---------------------------------------------------------------------------

def pa_chain_state(cfg: NetworkConfig, kind: str, gain: float) -> g.GaussianState:
    """Compose the receiver optics on the network output state.

    Returns the 2m-mode Gaussian state of the detector ports, ordered
    ``(0+, 0-, 1+, 1-, ...)``; the ``j`` pair is the balanced-beamsplitter
    output fed by the ``j``-th conjugate-return portion and idler ``j``.
    """
    m = cfg.m
    out = build_output_state(cfg, check=False).state  # (R, I_0..I_{m-1})

    if kind == "ppcr":
        # PA with a vacuum, keep the conjugate output (mode of the return slot)
        st = g.tensor(out, g.vacuum(1))  # modes: R, I_0.., vac
        st = g.apply(st, g.embed(g.two_mode_pa(gain), [0, m + 1], m + 2))
        st = g.partial_trace(st, range(m + 1))  # drop the amplifier idler
        # distribute the conjugate over m ports: m-1 vacua + conjugate
        st = g.tensor(st, g.vacuum(m - 1)) if m > 1 else st
        mixer_inputs = list(range(m + 1, 2 * m)) + [0]  # vacua..., conjugate last
        u = receiver_unitary(m)  # last column 1/sqrt(m): every output gets its share
        st = g.apply(st, g.embed(g.interferometer(u), mixer_inputs, 2 * m))
        ports = mixer_inputs  # outputs sit on the same mode slots
        idlers = list(range(1, m + 1))
    elif kind == "spcr":
        st = out
        conj_ports = []
        feed = 0  # current pass-through mode (starts at the return)
        for _ in range(m):
            n = st.n_modes
            st = g.tensor(st, g.vacuum(1))
            st = g.apply(st, g.embed(g.two_mode_pa(gain), [feed, n], n + 1))
            # mode `feed` now carries the conjugate output, mode `n` the
            # amplified pass-through for the next stage
            conj_ports.append(feed)
            feed = n
        st = g.partial_trace(st, [p for p in range(st.n_modes) if p != feed])
        # after dropping the final pass-through, indices shift by nothing for
        # modes below `feed` (feed is always the last mode)
        ports = conj_ports
        idlers = list(range(1, m + 1))
    else:
        raise ValueError(f"not a PA receiver: {kind!r}")

    # pairwise balanced beamsplitters (port_j, idler_j) -> (j+, j-)
    n = st.n_modes
    for j in range(m):
        st = g.apply(st, g.embed(g.balanced_beamsplitter(), [ports[j], idlers[j]], n))
    order = []
    for j in range(m):
        order.extend([ports[j], idlers[j]])
    return g.partial_trace(st, order)


def pa_chain_count_moments(cfg: NetworkConfig, kind: str, gain: float):
    """Photon-difference moments of the composed chain via Wick moments.

    Returns ``(mean, cov)`` of the per-round differences ``N_{j+} - N_{j-}``;
    multiply by ``nu`` for the total-count model.
    """
    st = pa_chain_state(cfg, kind, gain)
    m = cfg.m
    pm = g.photon_moments(st)
    d = np.zeros((m, 2 * m))
    for j in range(m):
        d[j, 2 * j] = 1.0
        d[j, 2 * j + 1] = -1.0
    return d @ pm.means, d @ pm.cov @ d.T


# ---------------------------------------------------------------------------
# PA Fisher information
# ---------------------------------------------------------------------------

def _require_identifiable(cfg: NetworkConfig, tol: float = 1e-12):
    bad = np.where(np.abs(np.cos(cfg.theta)) < tol)[0]
    if bad.size:
        j = int(bad[0])
        raise UnidentifiableError(
            f"parameter {j} unidentifiable at this operating point "
            f"(cos(theta_{j}) = 0)",
            j,
        )


def pa_rwmse(cfg: NetworkConfig, kind: str, gain: float) -> float:
    """Leading-order error of the PA receiver at the phase-corrected point.

    ``sqrt( sum_j m_re a_j / (2 m nu [2 f_j (g-1) n_s (n_s+1) eta_j
    cos^2(theta_j)]) )``; errors out when some ``cos(theta_j) = 0``.
    """
    _require_identifiable(cfg)
    a, b, _ = pa_coefficients(cfg, kind, gain)
    if np.any(b == 0.0):
        j = int(np.where(b == 0.0)[0][0])
        raise UnidentifiableError(f"parameter {j} carries no signal (b_j = 0)", j)
    return float(np.sqrt(np.sum(a / (2.0 * cfg.m * cfg.nu * b**2))))


def pa_fim_leading(cfg: NetworkConfig, kind: str, gain: float) -> FisherMatrix:
    """Closed-form count-model Fisher matrix, leading order in ``nu``.

    ``F_jk = 2 nu db_j db_k [delta_jk / a_j - b_j b_k / (a_j a_k (1 + b^T
    diag(a)^{-1} b))]`` with ``db_j = -b_j tan(theta_j)`` evaluated at the
    phase-corrected sensitivity ``|db_j| -> beta_j cos(theta_j)``.
    """
    _require_identifiable(cfg)
    a, b, _ = pa_coefficients(cfg, kind, gain)
    denom = 1.0 + np.sum(b * b / a)
    core = np.diag(1.0 / a) - np.outer(b / a, b / a) / denom
    fim = 2.0 * cfg.nu * np.outer(b, b) * core
    return FisherMatrix(fim)


def pa_count_family(cfg: NetworkConfig, kind: str, gain: float) -> GaussianDistributionFamily:
    """The exact Gaussian count model ``theta -> (mu, Sigma)`` with analytic derivatives."""

    def moments(theta):
        a, b, _ = pa_coefficients(cfg, kind, gain, theta)
        return np.sqrt(2.0) * cfg.nu * b, cfg.nu * (np.diag(a) + np.outer(b, b))

    def derivative(theta, i):
        _, b, beta = pa_coefficients(cfg, kind, gain, theta)
        db = np.zeros(cfg.m)
        db[i] = -beta[i] * np.sin(theta[i])
        dsig = cfg.nu * (np.outer(db, b) + np.outer(b, db))
        return np.sqrt(2.0) * cfg.nu * db, dsig

    return GaussianDistributionFamily(
        moments, np.asarray(cfg.theta, dtype=float), derivative=derivative
    )


@dataclass(frozen=True)
class PaFim:
    """Exact and leading-order Fisher data for a PA receiver."""

    fim_exact: FisherMatrix
    fim_leading: FisherMatrix
    rwmse_exact: float
    rwmse_leading: float


def pa_fim(cfg: NetworkConfig, spec: ReceiverSpec) -> PaFim:
    """Count-model Fisher matrix, both the exact form and the closed form.

    The exact matrix differentiates the Gaussian model at the configured
    phases; the leading form is the displayable closed expression.  The
    reported errors are the corresponding Cramer-Rao rWMSEs, with the
    leading one evaluated at the phase-corrected operating point.
    """
    if spec.kind not in PA_KINDS:
        raise ValueError("pa_fim needs a PA receiver")
    exact = cfim_gaussian_distribution(pa_count_family(cfg, spec.kind, spec.gain))
    leading = pa_fim_leading(cfg, spec.kind, spec.gain)
    return PaFim(
        fim_exact=exact,
        fim_leading=leading,
        rwmse_exact=rwmse_from_fim(exact),
        rwmse_leading=pa_rwmse(cfg, spec.kind, spec.gain),
    )


@dataclass(frozen=True)
class GainOptimum:
    gain: float
    rwmse: float
    at_boundary: bool


def optimize_gain(cfg: NetworkConfig, kind: str, g_range=None) -> GainOptimum:
    """Minimize the leading-order PA error over the amplifier gain.

    Coarse 64-point grid, logarithmic in ``g - 1``, followed by
    golden-section refinement to relative width 1e-6.  The default range is
    ``(1 + 1e-6, 10 m]``; a minimizer at either end is flagged as a
    boundary solution.
    """
    if g_range is None:
        g_range = (1.0 + 1e-6, 10.0 * cfg.m)
    lo, hi = float(g_range[0]), float(g_range[1])
    if not (1.0 < lo < hi):
        raise ValueError("gain range must satisfy 1 < lo < hi")

    def objective(gain):
        return pa_rwmse(cfg, kind, gain)

    grid = 1.0 + np.geomspace(lo - 1.0, hi - 1.0, 64)
    values = np.array([objective(gn) for gn in grid])
    best = int(np.argmin(values))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid.size - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while (b - a) > 1e-6 * max(1.0, abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = objective(x2)
    g_star = 0.5 * (a + b)
    val = objective(g_star)
    at_boundary = best in (0, grid.size - 1)
    return GainOptimum(float(g_star), float(val), bool(at_boundary))


# ---------------------------------------------------------------------------
# correlation-to-displacement pipeline
# ---------------------------------------------------------------------------

def ctod_conditional(cfg: NetworkConfig, x) -> tuple[g.GaussianState, float]:
    """Heterodyne the return mode of the network output on outcome ``x``."""
    out = build_output_state(cfg, check=False)
    return g.condition_heterodyne(out.state, 0, x)


def _concentrated_magnitude(outcomes: np.ndarray) -> tuple[float, np.ndarray]:
    norms = np.linalg.norm(outcomes, axis=1)
    total = float(np.sqrt(np.sum(norms**2)))
    if total == 0.0:
        return 0.0, np.zeros(2)
    ref = outcomes[int(np.argmax(norms))]
    return total, ref / np.linalg.norm(ref)


def ctod_concentrate(cfg: NetworkConfig, outcomes) -> g.GaussianState:
    """Concentrate ``nu`` heterodyne rounds into one m-mode displaced state.

    Phase rotations align the per-round displacements, and an interferometer
    across the rounds concentrates them, so the output has the single-round
    conditional covariance and mean ``sqrt(sum_n |x_n|^2) S_j e_x /
    (2 (nb' + 1))``.  All-zero outcomes are allowed (zero mean).
    """
    outcomes = np.atleast_2d(np.asarray(outcomes, dtype=float))
    if outcomes.shape[1] != 2:
        raise ValueError("each heterodyne outcome is a 2-vector")
    out = build_output_state(cfg, check=False)
    total, e_x = _concentrated_magnitude(outcomes)
    cond, _ = g.condition_heterodyne(out.state, 0, np.zeros(2))
    mean = np.concatenate([s @ e_x for s in out.s_blocks]) * (
        total / (2.0 * (out.nb_prime + 1.0))
    )
    return g.GaussianState(cond.cov, mean)


def ctod_concentrate_compositional(cfg: NetworkConfig, outcomes) -> g.GaussianState:
    """Same output as :func:`ctod_concentrate` built with explicit optics.

    Conditions each round, rotates every idler of round ``n`` to align its
    displacement with the reference round, then applies one nu-mode
    interferometer per idler slot and keeps the concentrated mode.  Only
    sensible for small ``m * nu`` (testing aid).
    """
    outcomes = np.atleast_2d(np.asarray(outcomes, dtype=float))
    nu = outcomes.shape[0]
    m = cfg.m
    out = build_output_state(cfg, check=False)
    rounds = [g.condition_heterodyne(out.state, 0, x)[0] for x in outcomes]
    joint = g.tensor(*rounds)  # mode (n, j) at index n*m + j
    norms = np.linalg.norm(outcomes, axis=1)
    ref = int(np.argmax(norms)) if norms.max() > 0 else 0
    ref_angle = np.arctan2(outcomes[ref, 1], outcomes[ref, 0])
    for n in range(nu):
        if norms[n] == 0.0:
            continue
        angle = np.arctan2(outcomes[n, 1], outcomes[n, 0]) - ref_angle
        for j in range(m):
            joint = g.apply(
                joint, g.embed(g.phase_shift(angle), [n * m + j], m * nu)
            )
    total = float(np.sqrt(np.sum(norms**2)))
    weights = norms / total if total > 0 else np.eye(nu)[0]
    # orthogonal completion with `weights` as the first row
    basis = np.eye(nu)
    basis[0] = weights
    q, _ = np.linalg.qr(basis.T)
    mixer = q.T
    if mixer[0] @ weights < 0:
        mixer = -mixer
    mixer[0] = weights  # exact first row
    # re-orthogonalize the remainder against the exact first row
    for row in range(1, nu):
        for prev in range(row):
            mixer[row] -= (mixer[row] @ mixer[prev]) * mixer[prev]
        mixer[row] /= np.linalg.norm(mixer[row])
    for j in range(m):
        modes = [n * m + j for n in range(nu)]
        joint = g.apply(joint, g.embed(g.interferometer(mixer), modes, m * nu))
    return g.partial_trace(joint, [0 * m + j for j in range(m)])


def ctod_homodyne_model(cfg: NetworkConfig, magnitude: float, e_x=None):
    """Gaussian model of the q-quadrature homodyne on the concentrated state.

    Returns ``(mean(theta), cov(theta))`` callables evaluated at arbitrary
    phases for a fixed concentrated displacement ``magnitude * e_x``.
    """
    out = build_output_state(cfg, check=False)
    nbp = out.nb_prime
    e_x = np.array([1.0, 0.0]) if e_x is None else np.asarray(e_x, dtype=float)
    w = cfg.weights

    def moments(theta):
        amp = np.sqrt(cfg.n_s * (cfg.n_s + 1.0)) / (nbp + 1.0)
        mean = (
            magnitude
            * amp
            * np.sqrt(w * cfg.eta)
            * (e_x[0] * np.cos(theta) + e_x[1] * np.sin(theta))
        )
        tmat = np.sqrt(np.outer(w * cfg.eta, w * cfg.eta)) * np.cos(
            theta[:, None] - theta[None, :]
        )
        cov = (2.0 * cfg.n_s + 1.0) * np.eye(cfg.m) - (
            2.0 * cfg.n_s * (cfg.n_s + 1.0) / (nbp + 1.0)
        ) * tmat
        return mean, cov

    return moments


def ctod_average_cfim(cfg: NetworkConfig) -> FisherMatrix:
    """Homodyne-record Fisher matrix averaged over heterodyne outcomes.

    The per-outcome matrix is linear in the concentrated quadratic form
    ``X X^T`` whose expectation is ``2 nu (nb'+1) I``, so the average is
    analytic::

        F = (4 nu n_s (n_s+1) / (nb'+1)) * (T o M)

    with the Hadamard product of ``T_jk = sqrt(w_j w_k eta_j eta_k)
    cos(theta_j - theta_k)`` and ``M = [(2 n_s+1) I - 2 n_s (n_s+1) T /
    (nb'+1)]^{-1}``.
    """
    nbp = nb_prime(cfg)
    w = cfg.weights
    tmat = np.sqrt(np.outer(w * cfg.eta, w * cfg.eta)) * np.cos(
        cfg.theta[:, None] - cfg.theta[None, :]
    )
    mmat = np.linalg.inv(
        (2.0 * cfg.n_s + 1.0) * np.eye(cfg.m)
        - (2.0 * cfg.n_s * (cfg.n_s + 1.0) / (nbp + 1.0)) * tmat
    )
    fim = (4.0 * cfg.nu * cfg.n_s * (cfg.n_s + 1.0) / (nbp + 1.0)) * (tmat * mmat)
    return FisherMatrix(0.5 * (fim + fim.T))


def ctod_average_qfim(cfg: NetworkConfig, gh_order: int = 5) -> FisherMatrix:
    """Average conditional-state quantum Fisher matrix over heterodyne outcomes.

    Single-shot (``nu`` scales it linearly).  The conditional covariance is
    outcome independent and the mean is linear in the outcome, so the
    Gauss-Hermite average over the isotropic outcome distribution is exact
    at modest order.
    """
    from .estimation import ParamFamily, qfim_gaussian

    out = build_output_state(cfg, check=False)
    nbp = out.nb_prime
    nodes, weights = np.polynomial.hermite_e.hermegauss(gh_order)
    sigma = np.sqrt(2.0 * (nbp + 1.0))
    acc = np.zeros((cfg.m, cfg.m))
    wsum = 0.0
    for iq, xq in enumerate(nodes):
        for ip, xp in enumerate(nodes):
            x = sigma * np.array([xq, xp])
            wgt = weights[iq] * weights[ip]

            def family_eval(theta, _x=x):
                cfg_t = cfg.with_(theta=theta)
                outn = build_output_state(cfg_t, check=False)
                return g.condition_heterodyne(outn.state, 0, _x)[0]

            fam = ParamFamily(family_eval, cfg.theta)
            acc += wgt * qfim_gaussian(fam).matrix
            wsum += wgt
    return FisherMatrix(acc / wsum)


@dataclass(frozen=True)
class CtodRwmse:
    exact: float
    leading_order: float


def ctod_rwmse(cfg: NetworkConfig) -> CtodRwmse:
    """Phase-estimation error of the heterodyne-homodyne receiver.

    ``leading_order`` is the closed form
    ``sqrt(m_re (nb'+1)(2 n_s+1) sum_j eta_j^{-1} / (4 m nu n_s (n_s+1)))``;
    ``exact`` inverts the outcome-averaged homodyne Fisher matrix of
    :func:`ctod_average_cfim`.
    """
    if np.any(cfg.eta == 0.0):
        j = int(np.where(cfg.eta == 0.0)[0][0])
        raise UnidentifiableError(f"eta_{j} = 0: phase {j} is unidentifiable", j)
    if cfg.n_s <= 0:
        raise ValueError("need a nonzero signal brightness")
    nbp = nb_prime(cfg)
    leading = np.sqrt(
        cfg.m_re
        * (nbp + 1.0)
        * (2.0 * cfg.n_s + 1.0)
        * np.sum(1.0 / cfg.eta)
        / (4.0 * cfg.m * cfg.nu * cfg.n_s * (cfg.n_s + 1.0))
    )
    exact = rwmse_from_fim(ctod_average_cfim(cfg))
    return CtodRwmse(exact=float(exact), leading_order=float(leading))
