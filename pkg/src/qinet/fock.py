"""Truncated Fock-space oracle for small instances.

Everything here exists to verify the Gaussian phase-space code through an
independent route: dense density matrices for at most a few modes, channels
via explicit unitary dilations, QFI from the symmetric logarithmic
derivative, and Chernoff overlaps from fractional matrix powers.  Sizes are
deliberately small (the practical cap is a total dimension of a few
thousand); parameters fed to the oracle should be chosen accordingly.

Quadratures follow the package convention ``q = a + a^dag``,
``p = -i (a - a^dag)`` (hbar = 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "FockState",
    "destroy",
    "displacement_matrix",
    "displacement_columns",
    "fock_vacuum",
    "fock_thermal",
    "fock_tmsv",
    "fock_displaced_thermal",
    "fock_phase",
    "fock_beamsplitter_unitary",
    "apply_two_mode_unitary",
    "fock_partial_trace",
    "fock_thermal_loss",
    "quadrature_moments",
    "fock_qfi",
    "fock_overlap",
    "fidelity",
]

EIG_FLOOR = 1e-14  # relative floor for (lambda_a + lambda_b) in Sylvester solves


@dataclass(frozen=True)
class FockState:
    """Dense density matrix on a product of truncated Fock spaces."""

    rho: np.ndarray
    dims: tuple

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        if rho.shape != (int(np.prod(dims)),) * 2:
            raise ValueError("density matrix shape does not match dims")
        if np.abs(rho - rho.conj().T).max() > 1e-12 * max(1.0, np.abs(rho).max()):
            raise ValueError("density matrix is not Hermitian")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def leakage(self) -> float:
        """Probability weight lost to the truncation, ``1 - tr rho``."""
        return float(1.0 - np.trace(self.rho).real)


def destroy(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


def displacement_columns(beta: complex, d: int, ncols: int) -> np.ndarray:
    """First ``ncols`` columns of the displacement matrix ``<m|D(beta)|n>``.

    Filled by the recurrence ``sqrt(m+1) d_{m+1,n} = beta d_{m,n}
    + sqrt(n) d_{m,n-1}`` (from ``a D = D (a + beta)``), seeded with the
    closed-form row ``<0|D|n> = (-conj(beta))^n e^{-|beta|^2/2}/sqrt(n!)``.
    O(d * ncols), numerically benign since all entries are bounded by 1.
    """
    out = np.zeros((d, ncols), dtype=complex)
    lognorm = -0.5 * abs(beta) ** 2
    row0 = np.zeros(ncols, dtype=complex)
    for n in range(ncols):
        if n == 0:
            row0[0] = np.exp(lognorm)
        else:
            row0[n] = row0[n - 1] * (-np.conj(beta)) / np.sqrt(n)
    out[0] = row0
    sq = np.sqrt(np.arange(d))
    for m in range(d - 1):
        prev = out[m]
        nxt = beta * prev
        nxt[1:] += sq[1:ncols] * prev[:-1]
        out[m + 1] = nxt / sq[m + 1]
    return out


def displacement_matrix(beta: complex, d: int) -> np.ndarray:
    return displacement_columns(beta, d, d)


def fock_vacuum(dims) -> FockState:
    dims = tuple(dims)
    dim = int(np.prod(dims))
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return FockState(rho, dims)


def _thermal_populations(n_mean: float, d: int) -> np.ndarray:
    if n_mean == 0.0:
        p = np.zeros(d)
        p[0] = 1.0
        return p
    k = np.arange(d)
    return np.exp(k * np.log(n_mean / (n_mean + 1.0)) - np.log(n_mean + 1.0))


def fock_thermal(n_mean: float, cutoff: int) -> FockState:
    return FockState(np.diag(_thermal_populations(n_mean, cutoff)).astype(complex), (cutoff,))


def fock_tmsv(n_s: float, cutoff: int, leak_budget: float = 1e-8) -> FockState:
    """Two-mode squeezed vacuum, Schmidt form ``sum_k c_k |kk>``."""
    amps = np.sqrt(_thermal_populations(n_s, cutoff))
    leak = 1.0 - float(np.sum(amps**2))
    if leak > leak_budget:
        raise ValueError(f"cutoff {cutoff} leaks {leak:.2e} > {leak_budget:.1e}")
    psi = np.zeros(cutoff * cutoff, dtype=complex)
    psi[np.arange(cutoff) * cutoff + np.arange(cutoff)] = amps
    return FockState(np.outer(psi, psi.conj()), (cutoff, cutoff))


def fock_displaced_thermal(
    alpha: complex, n_mean: float, cutoff: int, leak_budget: float = 1e-6
) -> FockState:
    """``D(alpha) rho_th D(alpha)^dag`` from displaced number states.

    The thermal sum is truncated where its tail drops below 1e-16; each
    retained term is an outer product of a displaced-number-state column.
    """
    pops = _thermal_populations(n_mean, cutoff)
    keep = min(int(np.searchsorted(np.cumsum(pops), 1.0 - 1e-16)) + 1, cutoff)
    cols = displacement_columns(alpha, cutoff, keep)
    rho = (cols * pops[:keep]) @ cols.conj().T
    state = FockState(rho, (cutoff,))
    if state.leakage > leak_budget:
        raise ValueError(f"cutoff {cutoff} leaks {state.leakage:.2e} > {leak_budget:.1e}")
    return state


def _mode_matrix_apply(state: FockState, u: np.ndarray, modes) -> FockState:
    """Apply a (possibly joint) matrix ``u`` on the listed modes: rho -> u rho u^dag."""
    dims = state.dims
    n = len(dims)
    modes = list(modes)
    k = len(modes)
    sub = [dims[m] for m in modes]
    umat = np.asarray(u, dtype=complex).reshape(sub + sub)
    tensor = state.rho.reshape(dims + dims)

    # left action on the ket axes of the chosen modes
    tensor = np.tensordot(umat, tensor, axes=(list(range(k, 2 * k)), modes))
    cur = modes + [ax for ax in range(2 * n) if ax not in modes]
    tensor = tensor.transpose([cur.index(ax) for ax in range(2 * n)])

    # right action with u^dagger on the bra axes
    bra = [n + m for m in modes]
    tensor = np.tensordot(tensor, umat.conj(), axes=(bra, list(range(k, 2 * k))))
    cur = [ax for ax in range(2 * n) if ax not in bra] + bra
    tensor = tensor.transpose([cur.index(ax) for ax in range(2 * n)])

    dim = int(np.prod(dims))
    return FockState(tensor.reshape(dim, dim), dims)


def fock_phase(state: FockState, theta: float, mode: int) -> FockState:
    """Number-operator rotation ``e^{i theta n}`` on one mode."""
    d = state.dims[mode]
    u = np.diag(np.exp(1j * theta * np.arange(d)))
    return _mode_matrix_apply(state, u, [mode])


def fock_beamsplitter_unitary(mix_angle: float, d1: int, d2: int) -> np.ndarray:
    """``exp(phi (a^dag b - a b^dag))`` on dims ``(d1, d2)``.

    Photon number is conserved, so the matrix is built per total-photon
    block; within block ``n`` the generator is tridiagonal.  Mode operators
    transform as ``a -> cos(phi) a + sin(phi) b``.
    """
    u = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for n in range(d1 + d2 - 1):
        ks = np.arange(max(0, n - (d2 - 1)), min(n, d1 - 1) + 1)
        if ks.size == 0:
            continue
        gen = np.zeros((ks.size, ks.size))
        for i, k in enumerate(ks[:-1]):
            # <k+1, n-k-1| a^dag b |k, n-k> = sqrt((k+1)(n-k))
            val = np.sqrt((k + 1.0) * (n - k))
            gen[i + 1, i] = val
            gen[i, i + 1] = -val
        blk = scipy.linalg.expm(mix_angle * gen)
        flat = ks * d2 + (n - ks)
        u[np.ix_(flat, flat)] = blk
    return u


def apply_two_mode_unitary(state: FockState, u: np.ndarray, modes) -> FockState:
    return _mode_matrix_apply(state, u, modes)


def fock_partial_trace(state: FockState, keep) -> FockState:
    keep = list(keep)
    dims = state.dims
    n = len(dims)
    tensor = state.rho.reshape(dims + dims)
    cur_modes = list(range(n))
    for m in [m for m in range(n) if m not in keep][::-1]:
        pos = cur_modes.index(m)
        ncur = len(cur_modes)
        tensor = np.trace(tensor, axis1=pos, axis2=pos + ncur)
        cur_modes.pop(pos)
    # reorder the kept modes as requested
    perm_modes = [cur_modes.index(m) for m in keep]
    ncur = len(cur_modes)
    tensor = tensor.transpose(perm_modes + [p + ncur for p in perm_modes])
    new_dims = tuple(dims[m] for m in keep)
    dim = int(np.prod(new_dims))
    return FockState(tensor.reshape(dim, dim), new_dims)


def _loss_superop(d_s: int, eta: float, n_b: float, env_cutoff: int) -> np.ndarray:
    """Superoperator of the thermal-loss channel on a ``d_s``-dim mode.

    Dilation: beamsplitter of transmissivity ``eta`` with a thermal
    environment of ``n_b / (1 - eta)`` photons, environment traced out.
    Returns ``S[a, b, c, d]`` with ``rho'_{ab} = S[a,b,c,d] rho_{cd}``.
    """
    n_env = n_b / (1.0 - eta)
    pops = _thermal_populations(n_env, env_cutoff)
    u = fock_beamsplitter_unitary(np.arccos(np.sqrt(eta)), d_s, env_cutoff)
    u4 = u.reshape(d_s, env_cutoff, d_s, env_cutoff)
    # m[(a,c), (l,k)] = u4[a, l, c, k]
    m = u4.transpose(0, 2, 1, 3).reshape(d_s * d_s, env_cutoff * env_cutoff)
    weighted = m * np.tile(pops, env_cutoff)[None, :]
    r = weighted @ m.conj().T  # r[(a,c), (b,d)]
    return r.reshape(d_s, d_s, d_s, d_s).transpose(0, 2, 1, 3)


def fock_thermal_loss(
    state: FockState,
    mode: int,
    eta: float,
    theta: float,
    n_b: float,
    env_cutoff: int | None = None,
) -> FockState:
    """Thermal-loss channel via beamsplitter dilation with a thermal environment.

    The environment is never instantiated jointly with the state: the
    channel is compiled to a one-mode superoperator first, which keeps the
    memory footprint at ``d_mode^4`` regardless of the other modes.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError("oracle loss channel needs 0 <= eta < 1")
    n_env = n_b / (1.0 - eta)
    d_s = state.dims[mode]
    if env_cutoff is None:
        env_cutoff = d_s + int(np.ceil(10.0 * np.sqrt(max(n_env, 1.0))))
    state = fock_phase(state, theta, mode)
    sup = _loss_superop(d_s, eta, n_b, env_cutoff)

    dims = state.dims
    n = len(dims)
    tensor = state.rho.reshape(dims + dims)
    ket, bra = mode, n + mode
    tensor = np.tensordot(sup, tensor, axes=([2, 3], [ket, bra]))
    # tensordot put the new (ket, bra) axes first; restore ordering
    cur = [ket, bra] + [ax for ax in range(2 * n) if ax not in (ket, bra)]
    tensor = tensor.transpose([cur.index(ax) for ax in range(2 * n)])
    dim = int(np.prod(dims))
    return FockState(tensor.reshape(dim, dim), dims)


def quadrature_moments(state: FockState) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix in the package's phase-space convention."""
    dims = state.dims
    n = len(dims)
    quads = []
    for m in range(n):
        a = destroy(dims[m])
        ops = [np.eye(d, dtype=complex) for d in dims]
        ops[m] = a + a.conj().T
        q = ops[0]
        for o in ops[1:]:
            q = np.kron(q, o)
        ops[m] = -1j * (a - a.conj().T)
        p = ops[0]
        for o in ops[1:]:
            p = np.kron(p, o)
        quads.extend([q, p])
    tr = np.trace(state.rho).real
    mean = np.array([np.trace(state.rho @ op).real / tr for op in quads])
    cov = np.empty((2 * n, 2 * n))
    for i, qi in enumerate(quads):
        for j, qj in enumerate(quads):
            if j < i:
                continue
            anti = 0.5 * (qi @ qj + qj @ qi)
            cov[i, j] = cov[j, i] = (
                np.trace(state.rho @ anti).real / tr - mean[i] * mean[j]
            )
    return mean, cov


def fock_qfi(rho_of_param, value: float, step: float | None = None) -> float:
    """Quantum Fisher information via the symmetric logarithmic derivative.

    ``rho_of_param`` maps a scalar parameter to a :class:`FockState`.  The
    derivative is a central difference; the SLD equation
    ``L rho + rho L = 2 drho`` is solved in the eigenbasis of ``rho``,
    dropping pairs with ``lambda_a + lambda_b`` below the floor.
    """
    if step is None:
        step = max(1.0, abs(value)) * np.finfo(float).eps ** (1.0 / 3.0)
    hi = rho_of_param(value + step).rho
    lo = rho_of_param(value - step).rho
    drho = (hi - lo) / (2.0 * step)
    rho = rho_of_param(value).rho
    vals, vecs = np.linalg.eigh(rho)
    dmat = vecs.conj().T @ drho @ vecs
    denom = vals[:, None] + vals[None, :]
    mask = denom > EIG_FLOOR * max(vals.max(), 1e-300)
    qfi = 2.0 * np.sum((np.abs(dmat) ** 2)[mask] / denom[mask])
    return float(qfi)


def _frac_power(rho: np.ndarray, p: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    with np.errstate(divide="ignore"):
        powed = np.where(vals > 0, vals**p, 0.0)
    return (vecs * powed) @ vecs.conj().T


def fock_overlap(rho0: FockState, rho1: FockState, s: float) -> float:
    """``tr[rho0^s rho1^{1-s}]`` by Hermitian fractional powers."""
    if rho0.dims != rho1.dims:
        raise ValueError("states must share the truncation")
    return float(np.trace(_frac_power(rho0.rho, s) @ _frac_power(rho1.rho, 1.0 - s)).real)


def fidelity(rho0: FockState, rho1: FockState) -> float:
    """Uhlmann fidelity ``tr sqrt(sqrt(rho0) rho1 sqrt(rho0))``."""
    r0 = _frac_power(rho0.rho, 0.5)
    inner = r0 @ rho1.rho @ r0
    vals = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))
