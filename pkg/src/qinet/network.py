"""Construction of the sensing-network output state.

An array of ``m`` transmitters sends the signal arms of two-mode squeezed
vacua through independent thermal-loss channels (reflectivity ``eta_j``,
phase ``theta_j``, additive background ``n_b``).  The returns interfere on
a multiple-access channel that excites ``m_re`` spatial modes of which a
single one reaches the receiver, so the accessible output is one return
mode plus the ``m`` retained idlers.

The (m+1)-mode covariance has the arrowhead form::

    [ (2 nb' + 1) I2   S_0^T  ...  S_{m-1}^T ]
    [ S_0              (2 n_s+1) I2    0     ]
    [ ...                 0    ...           ]
    [ S_{m-1}             0        (2 n_s+1) I2 ]

with coupling blocks ``S_j = 2 sqrt(eta_j n_s (n_s+1) / m_re) Z R(theta_j)^T``.

Two conventions for the adjusted background ``nb'`` of the received mode
are supported and must be chosen explicitly in the configuration:

* ``"multiple-access"``: ``nb' = sum_j (eta_j n_s + n_b) / m_re`` -- the
  received photon number of the physical channel composition; this is what
  the compositional pipeline below produces.
* ``"main-text"``: ``nb' = n_b + sum_j eta_j n_s / m`` -- keeps the full
  background brightness on the received mode regardless of ``m/m_re``;
  used for figure-style comparisons against classical baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import gaussian as g

__all__ = [
    "NetworkConfig",
    "OutputState",
    "nb_prime",
    "thermal_loss",
    "multiple_access",
    "receiver_unitary",
    "build_output_state",
    "coupling_blocks",
    "received_photon_number",
]

CONVENTIONS = ("multiple-access", "main-text")


@dataclass(frozen=True)
class NetworkConfig:
    """All scalars of one sensing scenario.

    ``eta`` and ``theta`` may be given as scalars (broadcast over the ``m``
    transmitters) or as length-``m`` sequences.  ``nu`` is the number of
    probe repetitions (time-bandwidth product).
    """

    m: int
    m_re: int
    n_s: float
    n_b: float
    eta: np.ndarray = 1.0
    theta: np.ndarray = 0.0
    nu: float = 1.0
    nb_prime_convention: str = "multiple-access"

    def __post_init__(self):
        if not 1 <= self.m <= self.m_re:
            raise ValueError("need 1 <= m <= m_re")
        if self.n_s < 0 or self.n_b < 0:
            raise ValueError("photon numbers must be nonnegative")
        if self.nu < 1:
            raise ValueError("repetition count must be >= 1")
        if self.nb_prime_convention not in CONVENTIONS:
            raise ValueError(f"unknown nb' convention {self.nb_prime_convention!r}")
        eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (self.m,)).copy()
        theta = np.broadcast_to(np.asarray(self.theta, dtype=float), (self.m,)).copy()
        if np.any(eta < 0) or np.any(eta > 1):
            raise ValueError("reflectivities must lie in [0, 1]")
        eta.flags.writeable = False
        theta.flags.writeable = False
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "theta", theta)

    @property
    def weights(self) -> np.ndarray:
        """Interference weights; fixed uniform ``1/m_re``."""
        return np.full(self.m, 1.0 / self.m_re)

    def with_(self, **kwargs) -> "NetworkConfig":
        return replace(self, **kwargs)


def nb_prime(cfg: NetworkConfig) -> float:
    """Adjusted background photon number of the received mode."""
    if cfg.nb_prime_convention == "multiple-access":
        return float(np.sum(cfg.eta * cfg.n_s + cfg.n_b) / cfg.m_re)
    return float(cfg.n_b + np.sum(cfg.eta) * cfg.n_s / cfg.m)


def received_photon_number(cfg: NetworkConfig) -> float:
    """Mean photon number of the received mode, ``sum_j (eta_j n_s + n_b)/m_re``."""
    return float(np.sum(cfg.eta * cfg.n_s + cfg.n_b) / cfg.m_re)


def thermal_loss(
    state: g.GaussianState, mode: int, eta: float, theta: float, n_b: float
) -> g.GaussianState:
    """Phase-shifted thermal-loss channel ``a -> e^{i theta} sqrt(eta) a + sqrt(1-eta) a_B``.

    The environment mode carries ``n_b / (1 - eta)`` photons so that the
    additive background contribution is exactly ``n_b`` regardless of the
    reflectivity.  Implemented as phase rotation, beamsplitter with a
    thermal ancilla, and partial trace.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    if eta == 1.0:
        if n_b > 0.0:
            raise ValueError(
                "eta = 1 with n_b > 0 is undefined: the environment photon "
                "number n_b/(1-eta) diverges"
            )
        return g.apply(state, g.embed(g.phase_shift(theta), [mode], state.n_modes))
    n_env = n_b / (1.0 - eta)
    n = state.n_modes
    joint = g.tensor(state, g.thermal(n_env))
    joint = g.apply(joint, g.embed(g.phase_shift(theta), [mode], n + 1))
    joint = g.apply(joint, g.embed(g.beamsplitter(eta), [mode, n], n + 1))
    return g.partial_trace(joint, range(n))


def receiver_unitary(m_re: int) -> np.ndarray:
    """Real orthogonal ``m_re x m_re`` mixer whose last row is ``1/sqrt(m_re)``.

    The last output row is the single mode accessible to the receiver.
    Built as a Householder reflection, so the matrix is symmetric.
    """
    if m_re == 1:
        return np.eye(1)
    u = np.full(m_re, 1.0 / np.sqrt(m_re))
    v = np.zeros(m_re)
    v[-1] = 1.0
    v = v - u
    return np.eye(m_re) - 2.0 * np.outer(v, v) / (v @ v)


def multiple_access(
    state: g.GaussianState, signal_modes, m_re: int, w: np.ndarray | None = None
) -> g.GaussianState:
    """Interfere ``m`` signal modes with ``m_re - m`` vacua; keep one output.

    Returns the state of (received mode, all non-signal modes of the
    input), with the received mode first.
    """
    signal_modes = list(signal_modes)
    m = len(signal_modes)
    if m > m_re:
        raise ValueError("more signal modes than excitable spatial modes")
    if w is None:
        w = receiver_unitary(m_re)
    w = np.asarray(w, dtype=float)
    if w.shape != (m_re, m_re):
        raise ValueError("mixer has the wrong shape")
    n = state.n_modes
    pad = m_re - m
    joint = g.tensor(state, g.vacuum(pad)) if pad else state
    # inputs to the mixer: the signal modes followed by the padding vacua
    mix_modes = signal_modes + list(range(n, n + pad))
    joint = g.apply(joint, g.embed(g.interferometer(w), mix_modes, n + pad))
    received = mix_modes[-1]  # last mixer row
    others = [mode for mode in range(n) if mode not in signal_modes]
    return g.partial_trace(joint, [received] + others)


@dataclass(frozen=True)
class OutputState:
    """Accessible (m+1)-mode state: received mode first, then the idlers."""

    state: g.GaussianState
    s_blocks: tuple
    nb_prime: float


def coupling_blocks(cfg: NetworkConfig) -> list[np.ndarray]:
    """Return-idler coupling blocks ``S_j = 2 sqrt(w_j eta_j n_s (n_s+1)) Z R_j^T``."""
    z = np.diag([1.0, -1.0])
    blocks = []
    for j in range(cfg.m):
        amp = 2.0 * np.sqrt(cfg.weights[j] * cfg.eta[j] * cfg.n_s * (cfg.n_s + 1.0))
        blocks.append(amp * z @ g.rotation2(cfg.theta[j]).T)
    return blocks


def _closed_form_cov(cfg: NetworkConfig, nbp: float) -> np.ndarray:
    m = cfg.m
    cov = np.zeros((2 * (m + 1), 2 * (m + 1)))
    cov[0:2, 0:2] = (2.0 * nbp + 1.0) * np.eye(2)
    blocks = coupling_blocks(cfg)
    for j in range(m):
        sl = g.mode_slice(j + 1)
        cov[sl, sl] = (2.0 * cfg.n_s + 1.0) * np.eye(2)
        cov[sl, 0:2] = blocks[j]
        cov[0:2, sl] = blocks[j].T
    return cov


def _pipeline_state(cfg: NetworkConfig) -> g.GaussianState:
    # modes: (S_0, I_0, S_1, I_1, ...) -> loss on each signal -> mixer
    state = g.tensor(*[g.tmsv(cfg.n_s) for _ in range(cfg.m)])
    for j in range(cfg.m):
        state = thermal_loss(state, 2 * j, cfg.eta[j], cfg.theta[j], cfg.n_b)
    signals = [2 * j for j in range(cfg.m)]
    return multiple_access(state, signals, cfg.m_re)


def build_output_state(cfg: NetworkConfig, check: bool = True) -> OutputState:
    """Accessible output state of the network.

    The state is assembled in closed form; with ``check=True`` it is also
    built through the compositional pipeline (tmsv -> thermal loss ->
    multiple access -> discard) and the two are asserted equal.  The
    pipeline realizes the ``"multiple-access"`` background convention; under
    ``"main-text"`` only the received-mode block is replaced by the
    configured ``nb'``.
    """
    nbp_pipeline = float(np.sum(cfg.eta * cfg.n_s + cfg.n_b) / cfg.m_re)
    if check:
        closed = _closed_form_cov(cfg, nbp_pipeline)
        piped = _pipeline_state(cfg)
        defect = np.abs(piped.cov - closed).max()
        if defect > 1e-10 * max(1.0, np.abs(closed).max()):
            raise AssertionError(
                f"closed-form and compositional covariances disagree ({defect:.3e})"
            )
    nbp = nb_prime(cfg)
    cov = _closed_form_cov(cfg, nbp)
    state = g.GaussianState(cov)
    report = g.is_physical(state.cov)
    if not report:
        raise ValueError(f"network output is unphysical (min eig {report.min_eig:.3e})")
    return OutputState(state, tuple(coupling_blocks(cfg)), nbp)
