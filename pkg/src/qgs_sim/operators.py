"""Hamiltonian and dipole operators on the product basis.

The aggregate Hamiltonian is

    H = H_el + H_vib + H_el-vib

with diagonal state energies, nearest-neighbor exciton hopping J_a within
each excited state a, harmonic mode energies sum_k omega_k (n_k + 1/2),
and linear vibronic couplings g * Q_k(m) attached to the electronic
projectors of monomer m.  The dimensionless coordinate convention is
Q = (b + b^dag)/sqrt(2), P = i(b^dag - b)/sqrt(2).

Operators are assembled once into sparse CSR matrices; application to a
state is a single sparse matrix-vector product and never materializes a
dense matrix.  Sparse matvec is sequential and bitwise deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionOverBudget
from .model import BasisLayout, VibronicModel

DENSE_DIM_LIMIT = 2000


class HamiltonianAction:
    """Apply H to flat state vectors without building a dense matrix."""

    def __init__(self, matrix: sp.csr_matrix, layout: BasisLayout,
                 diagonal: np.ndarray):
        self.matrix = matrix
        self.layout = layout
        self.diagonal = diagonal

    @property
    def dim(self) -> int:
        return self.layout.dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    __matmul__ = apply

    def expectation(self, x: np.ndarray) -> float:
        n2 = np.vdot(x, x).real
        if n2 == 0.0:
            return 0.0
        return np.vdot(x, self.matrix @ x).real / n2

    def to_dense(self, limit: int = DENSE_DIM_LIMIT) -> np.ndarray:
        if self.dim > limit:
            raise DimensionOverBudget(
                f"dense export of dimension {self.dim} exceeds limit {limit}"
            )
        return self.matrix.toarray()

    def spectral_bounds(self) -> tuple[float, float]:
        """Cheap Gershgorin-style bounds on the spectrum."""
        absrow = np.abs(self.matrix).sum(axis=1).A.ravel() \
            if hasattr(np.abs(self.matrix).sum(axis=1), "A") \
            else np.asarray(np.abs(self.matrix).sum(axis=1)).ravel()
        d = self.diagonal.real
        off = absrow - np.abs(d)
        return float((d - off).min()), float((d + off).max())


@dataclass(frozen=True)
class DipoleOperators:
    """Condon raising/lowering dipole operators.

    ``raise_op`` is V^dag = sum_m sum_a mu_a |m,a><G| (x) 1_vib, and
    ``lower_op`` its adjoint.  Vibrational occupations are untouched.
    """

    raise_op: sp.csr_matrix
    lower_op: sp.csr_matrix
    layout: BasisLayout

    def excite(self, x: np.ndarray) -> np.ndarray:
        return self.raise_op @ x

    def deexcite(self, x: np.ndarray) -> np.ndarray:
        return self.lower_op @ x

    def ground_block(self, x: np.ndarray) -> np.ndarray:
        """Vibrational-space vector <G| V |x> for all occupations at once."""
        y = self.lower_op @ x
        return y[: self.layout.n_vib]


def _q_pairs(layout: BasisLayout, instance: int):
    """Index pairs and amplitudes of Q acting on one mode axis.

    Returns (lo, hi, coeff) with hi = lo + stride and coeff =
    sqrt((n+1)/2) for every vib index whose occupation n is below cutoff.
    """
    occ = layout.occupations(instance)
    d = layout.mode_dims[instance]
    s = layout.strides[instance]
    mask = occ < d - 1
    lo = np.nonzero(mask)[0]
    coeff = np.sqrt((occ[lo] + 1.0) / 2.0)
    return lo, lo + s, coeff


def build_hamiltonian(model: VibronicModel, layout: BasisLayout) -> HamiltonianAction:
    """Assemble H as a sparse CSR operator over the flat basis."""
    el = layout.electronic
    n_vib = layout.n_vib
    dim = layout.dim

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add(r, c, v):
        rows.append(np.asarray(r, dtype=np.int64))
        cols.append(np.asarray(c, dtype=np.int64))
        vals.append(np.asarray(v, dtype=np.float64))

    # diagonal: electronic energy + harmonic ladder (+ global reference)
    vib_e = layout.vib_energies()
    arange_vib = np.arange(n_vib, dtype=np.int64)
    diag = np.empty(dim)
    for e in range(el.dim):
        if e == 0:
            e_el = model.ground_energy_ev
        else:
            state = (e - 1) % 2
            e_el = model.ground_energy_ev + model.state_energies[state]
        diag[e * n_vib:(e + 1) * n_vib] = e_el + vib_e
    add(np.arange(dim, dtype=np.int64), np.arange(dim, dtype=np.int64), diag)

    # nearest-neighbor exciton hopping, open boundary
    for m in range(el.n_monomers - 1):
        for state in (0, 1):
            j = model.exciton_couplings[state]
            if j == 0.0:
                continue
            a = el.index(m, state)
            b = el.index(m + 1, state)
            ones = np.full(n_vib, j)
            add(a * n_vib + arange_vib, b * n_vib + arange_vib, ones)
            add(b * n_vib + arange_vib, a * n_vib + arange_vib, ones)

    # linear vibronic couplings on each monomer's own modes
    for m in range(el.n_monomers):
        for k, mode in enumerate(model.modes):
            inst = layout.instance(m, k)
            lo, hi, coeff = _q_pairs(layout, inst)
            if lo.size == 0:
                continue
            # diagonal couplings g_aa Q on |m,a><m,a|
            for state in (0, 1):
                g = mode.g_diag(state)
                if g == 0.0:
                    continue
                a = el.index(m, state)
                add(a * n_vib + hi, a * n_vib + lo, g * coeff)
                add(a * n_vib + lo, a * n_vib + hi, g * coeff)
            # off-diagonal coupling g_12 Q between |m,S1> and |m,S2>
            g = mode.g_off_ev
            if g != 0.0:
                a = el.index(m, 0)
                b = el.index(m, 1)
                add(a * n_vib + hi, b * n_vib + lo, g * coeff)
                add(a * n_vib + lo, b * n_vib + hi, g * coeff)
                add(b * n_vib + hi, a * n_vib + lo, g * coeff)
                add(b * n_vib + lo, a * n_vib + hi, g * coeff)

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.sum_duplicates()
    # complex data avoids a per-call upcast when applied to complex states
    matrix = matrix.astype(np.complex128)
    return HamiltonianAction(matrix, layout, diag)


def build_dipole_operators(model: VibronicModel, layout: BasisLayout) -> DipoleOperators:
    """Condon-approximation raising and lowering dipole operators."""
    el = layout.electronic
    n_vib = layout.n_vib
    arange_vib = np.arange(n_vib, dtype=np.int64)

    rows, cols, vals = [], [], []
    for m in range(el.n_monomers):
        for state in (0, 1):
            mu = model.dipoles[state]
            if mu == 0.0:
                continue
            a = el.index(m, state)
            rows.append(a * n_vib + arange_vib)
            cols.append(arange_vib)  # ground block
            vals.append(np.full(n_vib, mu))
    if rows:
        raise_op = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(layout.dim, layout.dim),
        ).tocsr().astype(np.complex128)
    else:
        raise_op = sp.csr_matrix((layout.dim, layout.dim), dtype=np.complex128)
    lower_op = raise_op.conj().T.tocsr()
    return DipoleOperators(raise_op, lower_op, layout)
