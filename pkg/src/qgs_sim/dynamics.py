"""Wave-packet propagation and observables.

Time evolution uses a short-iterative Lanczos propagator: the action of
exp(-i H dt / hbar) is evaluated in a Krylov subspace that grows until
the standard residual estimate drops below tolerance.  The subspace
projection of a Hermitian H conserves both norm and energy to floating
point accuracy, independent of the truncation error in the state itself.

Observables recorded along a trajectory: the aggregated electronic
reduced density matrix over excited labels, per-monomer excited
populations, mean dimensionless mode positions <Q_k>, norm, energy, and
the ground-surface emission overlaps consumed by the signal module.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConservationViolation,
    DimensionOverBudget,
    NoConvergence,
    ZeroInitialState,
    ZeroNormState,
)
from .model import BasisLayout, VibronicModel
from .operators import DipoleOperators, HamiltonianAction
from .units import HBAR_EV_FS

_BREAKDOWN_CUTOFF = 1e-14


@dataclass
class StateVector:
    """Complex amplitudes over the flat basis, tagged with a time stamp."""

    data: np.ndarray
    layout: BasisLayout
    time_fs: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def copy(self) -> "StateVector":
        return StateVector(self.data.copy(), self.layout, self.time_fs)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t0 + dt * [0..n_steps]."""

    dt_fs: float
    n_steps: int
    t0_fs: float = 0.0

    def __post_init__(self):
        if self.dt_fs <= 0 or self.n_steps < 0:
            raise ValueError("need dt > 0 and n_steps >= 0")

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        return self.t0_fs + self.dt_fs * np.arange(self.n_points)

    @staticmethod
    def span(t_max_fs: float, dt_fs: float) -> "TimeGrid":
        n = int(np.floor(t_max_fs / dt_fs + 1e-9))
        return TimeGrid(dt_fs, n)


@dataclass
class Recorders:
    """Which quantities :func:`propagate_trajectory` stores per step."""

    rdm: bool = True
    positions: bool = True
    norm_energy: bool = True
    overlap_indices: np.ndarray | None = None   # vib indices of channels
    dipoles: DipoleOperators | None = None      # needed for overlaps


@dataclass
class Trajectory:
    grid: TimeGrid
    rho: np.ndarray | None = None                # (N+1, 2, 2) complex
    monomer_populations: np.ndarray | None = None  # (N+1, n_mon, 2) real
    positions: np.ndarray | None = None          # (N+1, n_instances) real
    norms: np.ndarray | None = None
    energies: np.ndarray | None = None
    overlaps: np.ndarray | None = None           # (n_channels, N+1) complex

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def initial_excited_state(model: VibronicModel, layout: BasisLayout,
                          dipoles: DipoleOperators) -> StateVector:
    """V^dag applied to the vibrationless ground state (not normalized)."""
    psi = np.zeros(layout.dim, dtype=np.complex128)
    psi[0] = 1.0
    out = dipoles.excite(psi)
    if not np.any(out):
        warnings.warn("all transition dipoles are zero; initial state vanishes",
                      ZeroInitialState, stacklevel=2)
    return StateVector(out, layout, 0.0)


# --------------------------------------------------------------------------
# Lanczos propagation
# --------------------------------------------------------------------------

def _lanczos_expm(H: HamiltonianAction, v0: np.ndarray, dt_fs: float,
                  m_cap: int, tol: float) -> tuple[np.ndarray, float]:
    """exp(-i H dt / hbar) v0 for a unit vector v0.

    Returns (result, alpha1) where alpha1 = <v0|H|v0> (the energy of the
    input state).  Grows the Krylov space adaptively; a happy breakdown
    (vanishing off-diagonal) is treated as exact.  One full
    reorthogonalization pass per vector keeps the basis orthonormal so
    that norm and energy pass through the subspace exponential unchanged.
    """
    tau = dt_fs / HBAR_EV_FS
    n = v0.shape[0]
    V = np.empty((m_cap + 1, n), dtype=np.complex128)
    V[0] = v0
    alphas: list[float] = []
    betas: list[float] = []
    w = H @ v0
    a = float(np.vdot(v0, w).real)
    alphas.append(a)
    alpha1 = a
    w -= a * v0
    scale = max(float(np.linalg.norm(w)), abs(a), 1e-30)
    err = np.inf

    for j in range(1, m_cap + 1):
        b = float(np.linalg.norm(w))
        if b <= _BREAKDOWN_CUTOFF * scale:
            u = _tridiag_expm_col(alphas, betas, tau)
            return u @ V[: len(u)], alpha1
        V[j] = w
        V[j] /= b
        coef = V[:j].conj() @ V[j]
        V[j] -= coef @ V[:j]
        nv = float(np.linalg.norm(V[j]))
        if nv <= _BREAKDOWN_CUTOFF:
            u = _tridiag_expm_col(alphas, betas, tau)
            return u @ V[: len(u)], alpha1
        V[j] /= nv
        betas.append(b)
        w = H @ V[j]
        a = float(np.vdot(V[j], w).real)
        alphas.append(a)
        w -= a * V[j]
        w -= b * V[j - 1]

        u = _tridiag_expm_col(alphas, betas, tau)
        # residual-based local error estimate for the subspace exponential
        err = float(np.linalg.norm(w)) * abs(u[-1]) * abs(tau)
        if err <= tol:
            return u @ V[: len(u)], alpha1

    raise NoConvergence(
        f"Krylov dimension cap {m_cap} reached (last error estimate {err:.3e})"
    )


def _tridiag_expm_col(alphas, betas, tau) -> np.ndarray:
    d = np.asarray(alphas)
    e = np.asarray(betas)
    if e.size == 0:
        return np.array([np.exp(-1j * tau * d[0])])
    lam, q = sla.eigh_tridiagonal(d, e)
    return q @ (np.exp(-1j * tau * lam) * q[0, :].conj())


def krylov_step(H: HamiltonianAction, psi: StateVector, dt_fs: float,
                m: int = 40, tol: float = 1e-10) -> StateVector:
    """One step of exp(-i H dt / hbar) applied to ``psi``.

    ``m`` caps the Krylov dimension; the subspace grows until the local
    error estimate is below ``tol``.  dt = 0 returns a copy.
    """
    if dt_fs == 0.0:
        return psi.copy()
    if dt_fs < 0:
        raise ValueError("dt must be >= 0")
    nrm = psi.norm()
    if nrm == 0.0:
        return StateVector(psi.data.copy(), psi.layout, psi.time_fs + dt_fs)
    out, _ = _lanczos_expm(H, psi.data / nrm, dt_fs, m, tol)
    return StateVector(nrm * out, psi.layout, psi.time_fs + dt_fs)


def propagate_trajectory(H: HamiltonianAction, psi0: StateVector,
                         grid: TimeGrid, recorders: Recorders | None = None,
                         m_cap: int = 60, tol: float = 1e-12,
                         drift_tol: float = 1e-8) -> Trajectory:
    """Repeated Lanczos stepping with per-point observable recording.

    Asserts that norm and energy drift stay below ``drift_tol``
    (relative) over the full run, raising :class:`ConservationViolation`
    otherwise.
    """
    rec = recorders or Recorders()
    layout = psi0.layout
    n_pts = grid.n_points
    traj = Trajectory(grid)
    if rec.rdm:
        traj.rho = np.empty((n_pts, 2, 2), dtype=np.complex128)
        traj.monomer_populations = np.empty(
            (n_pts, layout.electronic.n_monomers, 2))
    if rec.positions:
        traj.positions = np.empty((n_pts, layout.n_instances))
    if rec.norm_energy:
        traj.norms = np.empty(n_pts)
        traj.energies = np.empty(n_pts)
    if rec.overlap_indices is not None:
        if rec.dipoles is None:
            raise ValueError("overlap recording needs dipole operators")
        traj.overlaps = np.empty((len(rec.overlap_indices), n_pts),
                                 dtype=np.complex128)

    psi = psi0.copy()
    psi.time_fs = grid.t0_fs
    norm0 = psi.norm()
    energy0 = None

    for i in range(n_pts):
        _record_point(traj, rec, psi, i)
        if i < grid.n_steps:
            nrm = psi.norm()
            if nrm == 0.0:
                out = psi.data.copy()
                alpha1 = 0.0
            else:
                out, alpha1 = _lanczos_expm(H, psi.data / nrm, grid.dt_fs,
                                            m_cap, tol)
                out *= nrm
            if rec.norm_energy:
                traj.energies[i] = alpha1
                if energy0 is None:
                    energy0 = alpha1
            psi = StateVector(out, layout, psi.time_fs + grid.dt_fs)

    if rec.norm_energy:
        # final grid point has no follow-on step; evaluate <H> directly
        traj.energies[n_pts - 1] = H.expectation(psi.data)
        if energy0 is None:
            energy0 = traj.energies[n_pts - 1]
        _check_conservation(traj, norm0, energy0, drift_tol)
    return traj


def _record_point(traj: Trajectory, rec: Recorders, psi: StateVector, i: int):
    if rec.rdm:
        rho, pops = _rdm_and_pops(psi)
        traj.rho[i] = rho
        traj.monomer_populations[i] = pops
    if rec.positions:
        for inst in range(psi.layout.n_instances):
            traj.positions[i, inst] = _q_expectation_raw(psi, inst)
    if rec.norm_energy:
        traj.norms[i] = psi.norm()
    if traj.overlaps is not None:
        w = rec.dipoles.ground_block(psi.data)
        traj.overlaps[:, i] = w[rec.overlap_indices]


def _check_conservation(traj: Trajectory, norm0: float, energy0: float,
                        drift_tol: float):
    nref = norm0 if norm0 > 0 else 1.0
    norm_drift = float(np.max(np.abs(traj.norms - norm0))) / nref
    eref = abs(energy0) if abs(energy0) > 1e-12 else 1.0
    energy_drift = float(np.max(np.abs(traj.energies - energy0))) / eref
    if norm_drift > drift_tol or energy_drift > drift_tol:
        raise ConservationViolation(
            f"relative drift over run: norm {norm_drift:.3e}, "
            f"energy {energy_drift:.3e} (tolerance {drift_tol:.1e})"
        )


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

def _rdm_and_pops(psi: StateVector):
    layout = psi.layout
    n_mon = layout.electronic.n_monomers
    blk = psi.data[layout.n_vib:].reshape(n_mon, 2, layout.n_vib)
    rho = np.einsum("mav,mbv->ab", blk.conj(), blk)
    pops = np.einsum("mav,mav->ma", blk.conj(), blk).real
    return rho, pops


def electronic_rdm(psi: StateVector) -> np.ndarray:
    """Excited-label RDM aggregated over monomers: rho[a,b] (2x2, raw)."""
    rho, _ = _rdm_and_pops(psi)
    return rho


def monomer_populations(psi: StateVector) -> np.ndarray:
    """Per-monomer excited populations, shape (n_monomers, 2)."""
    _, pops = _rdm_and_pops(psi)
    return pops


def _q_expectation_raw(psi: StateVector, instance: int) -> float:
    """<psi| Q_instance |psi> without normalization (real by symmetry)."""
    layout = psi.layout
    d = layout.mode_dims[instance]
    if d == 1:
        return 0.0
    s = layout.strides[instance]
    left = 1
    for dd in layout.mode_dims[:instance]:
        left *= dd
    right = s
    x = psi.data.reshape(layout.electronic.dim * left, d, right)
    n = np.arange(1, d)
    coeff = np.sqrt(n / 2.0)
    val = np.einsum("lnr,n,lnr->", x[:, 1:, :].conj(), coeff, x[:, :-1, :])
    return float(2.0 * val.real)


def mode_position_expectation(psi: StateVector, instance: int) -> float:
    """Normalized <Q> of one mode instance; raises on a zero-norm state."""
    n2 = float(np.vdot(psi.data, psi.data).real)
    if n2 == 0.0:
        raise ZeroNormState("cannot take <Q> of a zero state")
    return _q_expectation_raw(psi, instance) / n2


def exact_eigensolve_small(H: HamiltonianAction,
                           limit: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Dense Hermitian diagonalization oracle (ascending eigenvalues)."""
    if H.dim > limit:
        raise DimensionOverBudget(
            f"dense eigensolve of dimension {H.dim} exceeds limit {limit}"
        )
    evals, evecs = np.linalg.eigh(H.to_dense(limit=limit))
    return evals, evecs


def spectral_propagate(evals: np.ndarray, evecs: np.ndarray,
                       psi0: np.ndarray, t_fs: float) -> np.ndarray:
    """Propagate via the spectral decomposition (test oracle)."""
    coeff = evecs.conj().T @ psi0
    return evecs @ (np.exp(-1j * evals * t_fs / HBAR_EV_FS) * coeff)
