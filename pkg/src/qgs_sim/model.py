"""Molecular model definition: parameters, electronic basis, Fock truncation.

A :class:`VibronicModel` bundles every Hamiltonian and dipole parameter of
the linear vibronic-coupling aggregate: per-state vertical energies and
transition dipoles, nearest-neighbor exciton couplings, a per-monomer set
of harmonic modes with diagonal and off-diagonal linear couplings, and the
intrinsic decay rate used by the signal module.

Model files are INI documents with sections ``[electronic]``,
``[couplings]``, ``[modes]`` and ``[rates]``; numeric keys carry a unit
suffix (``_ev``, ``_cm1``, ``_fs``).  See ``models/pbi1_dimer.conf`` for a
complete example.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DimensionOverBudget,
    MissingField,
    NonHermitianCoupling,
    NonPositiveFrequency,
    UnknownUnit,
)
from .units import EV_PER_CM1

STATE_LABELS = ("S1", "S2")

# flat product-space dimension allowed by default; large enough for the
# shipped dimer/trimer configs, small enough to fail fast on typos
DEFAULT_DIM_BUDGET = 32_000_000


@dataclass(frozen=True)
class Mode:
    """One per-monomer vibrational mode (energies in eV)."""

    omega_ev: float
    g_s1_ev: float = 0.0
    g_s2_ev: float = 0.0
    g_off_ev: float = 0.0

    def g_diag(self, state: int) -> float:
        return self.g_s1_ev if state == 0 else self.g_s2_ev


@dataclass(frozen=True)
class VibronicModel:
    """All Hamiltonian/dipole parameters of the aggregate (eV / fs units)."""

    n_monomers: int
    e_s1_ev: float
    e_s2_ev: float
    mu_s1: float
    mu_s2: float
    j_s1_ev: float = 0.0
    j_s2_ev: float = 0.0
    modes: tuple[Mode, ...] = ()
    gamma0_ev: float = 0.0
    ground_energy_ev: float = 0.0

    def __post_init__(self):
        if self.n_monomers not in (1, 2, 3):
            raise ConfigError(
                f"n_monomers must be 1, 2 or 3, got {self.n_monomers}"
            )
        for name in ("e_s1_ev", "e_s2_ev", "j_s1_ev", "j_s2_ev",
                     "mu_s1", "mu_s2", "gamma0_ev", "ground_energy_ev"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonHermitianCoupling(f"{name} is not a finite real: {v!r}")
        if self.mu_s1 < 0 or self.mu_s2 < 0:
            raise ConfigError("transition dipoles must be non-negative "
                              "(sign is absorbed into the state phase)")
        if self.gamma0_ev < 0:
            raise ConfigError("gamma0_ev must be >= 0")
        for k, m in enumerate(self.modes):
            if not math.isfinite(m.omega_ev) or m.omega_ev <= 0:
                raise NonPositiveFrequency(
                    f"mode {k + 1}: omega must be > 0, got {m.omega_ev!r}"
                )
            for gname in ("g_s1_ev", "g_s2_ev", "g_off_ev"):
                g = getattr(m, gname)
                if not math.isfinite(g):
                    raise NonHermitianCoupling(
                        f"mode {k + 1}: {gname} is not a finite real: {g!r}"
                    )

    # -- convenience views ------------------------------------------------
    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def state_energies(self) -> tuple[float, float]:
        return (self.e_s1_ev, self.e_s2_ev)

    @property
    def dipoles(self) -> tuple[float, float]:
        return (self.mu_s1, self.mu_s2)

    @property
    def exciton_couplings(self) -> tuple[float, float]:
        return (self.j_s1_ev, self.j_s2_ev)


@dataclass(frozen=True)
class ElectronicBasis:
    """Global ground state plus the single-exciton manifold.

    Index 0 is |G>; state (monomer m, excited state a) sits at
    ``1 + 2*m + a`` with a=0 for S1, a=1 for S2.
    """

    n_monomers: int

    @property
    def dim(self) -> int:
        return 1 + 2 * self.n_monomers

    def index(self, monomer: int, state: int) -> int:
        if not (0 <= monomer < self.n_monomers) or state not in (0, 1):
            raise IndexError(f"no electronic state ({monomer}, {state})")
        return 1 + 2 * monomer + state

    def labels(self) -> list[str]:
        out = ["G"]
        for m in range(self.n_monomers):
            for s in STATE_LABELS:
                out.append(f"m{m}:{s}")
        return out


@dataclass(frozen=True)
class FockTruncation:
    """Max occupation per mode instance, monomer-major: nmax[m][k]."""

    nmax: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for row in self.nmax:
            for n in row:
                if n < 0:
                    raise ConfigError(f"nmax entries must be >= 0, got {n}")

    @staticmethod
    def uniform(model: VibronicModel, per_mode: list[int] | tuple[int, ...]) -> "FockTruncation":
        if len(per_mode) != model.n_modes:
            raise ConfigError(
                f"nmax has {len(per_mode)} entries for {model.n_modes} modes"
            )
        row = tuple(int(n) for n in per_mode)
        return FockTruncation(tuple(row for _ in range(model.n_monomers)))

    @staticmethod
    def defaults(model: VibronicModel, low_cut_ev: float = 0.0992,
                 nmax_low: int = 9, nmax_high: int = 5) -> "FockTruncation":
        """Frequency-based default cutoffs (low-frequency modes get more)."""
        per = [nmax_low if m.omega_ev < low_cut_ev else nmax_high
               for m in model.modes]
        return FockTruncation.uniform(model, per)


@dataclass(frozen=True)
class BasisLayout:
    """Deterministic lexicographic index map for electronic x Fock space.

    Mode instances are ordered monomer-major ((m=0,k=0), (m=0,k=1), ...),
    and occupations are laid out C-order, so the flat index is
    ``el * n_vib + sum_i occ_i * stride_i``.
    """

    electronic: ElectronicBasis
    truncation: FockTruncation
    mode_dims: tuple[int, ...]          # per instance: nmax + 1
    mode_omegas: tuple[float, ...]      # per instance, eV
    mode_monomer: tuple[int, ...]       # owning monomer per instance
    mode_index: tuple[int, ...]         # per-monomer mode number per instance

    @property
    def n_instances(self) -> int:
        return len(self.mode_dims)

    @property
    def n_vib(self) -> int:
        out = 1
        for d in self.mode_dims:
            out *= d
        return out

    @property
    def dim(self) -> int:
        return self.electronic.dim * self.n_vib

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        acc = 1
        for d in reversed(self.mode_dims):
            out.append(acc)
            acc *= d
        return tuple(reversed(out))

    def instance(self, monomer: int, mode: int) -> int:
        """Flat instance index of mode ``mode`` on ``monomer``."""
        for i, (m, k) in enumerate(zip(self.mode_monomer, self.mode_index)):
            if m == monomer and k == mode:
                return i
        raise IndexError(f"no mode instance ({monomer}, {mode})")

    def vib_index(self, occs) -> int:
        if len(occs) != self.n_instances:
            raise ValueError("occupation tuple has wrong length")
        idx = 0
        for n, d, s in zip(occs, self.mode_dims, self.strides):
            if not (0 <= n < d):
                raise IndexError(f"occupation {n} outside cutoff {d - 1}")
            idx += n * s
        return idx

    def flat_index(self, el: int, occs) -> int:
        return el * self.n_vib + self.vib_index(occs)

    def occupations(self, instance: int) -> np.ndarray:
        """Occupation of one mode instance for every vib index (len n_vib)."""
        s = self.strides[instance]
        d = self.mode_dims[instance]
        return (np.arange(self.n_vib) // s) % d

    def vib_energies(self) -> np.ndarray:
        """Harmonic energy sum_k omega_k (n_k + 1/2) for every vib index."""
        e = np.full(self.n_vib, 0.5 * sum(self.mode_omegas))
        for i, w in enumerate(self.mode_omegas):
            e += w * self.occupations(i)
        return e

    @property
    def zero_point_energy_ev(self) -> float:
        return 0.5 * sum(self.mode_omegas)


def build_basis(model: VibronicModel, trunc: FockTruncation | None = None,
                dim_budget: int = DEFAULT_DIM_BUDGET) -> BasisLayout:
    """Assemble the product basis layout; fails if over the memory budget."""
    if trunc is None:
        trunc = FockTruncation.defaults(model)
    if len(trunc.nmax) != model.n_monomers:
        raise ConfigError(
            f"truncation covers {len(trunc.nmax)} monomers, model has "
            f"{model.n_monomers}"
        )
    dims, omegas, owners, knums = [], [], [], []
    for m in range(model.n_monomers):
        if len(trunc.nmax[m]) != model.n_modes:
            raise ConfigError(
                f"truncation row {m} has {len(trunc.nmax[m])} entries for "
                f"{model.n_modes} modes"
            )
        for k, mode in enumerate(model.modes):
            dims.append(trunc.nmax[m][k] + 1)
            omegas.append(mode.omega_ev)
            owners.append(m)
            knums.append(k)
    el = ElectronicBasis(model.n_monomers)
    layout = BasisLayout(el, trunc, tuple(dims), tuple(omegas),
                         tuple(owners), tuple(knums))
    if layout.dim < 1 or layout.dim > dim_budget:
        raise DimensionOverBudget(
            f"flat dimension {layout.dim} exceeds budget {dim_budget}"
        )
    return layout


# --------------------------------------------------------------------------
# config file parsing
# --------------------------------------------------------------------------

_SCALARS = {
    # canonical name -> (section, kind, required, default)
    "n_monomers": ("electronic", "int", True, None),
    "e_s1": ("electronic", "energy", True, None),
    "e_s2": ("electronic", "energy", True, None),
    "mu_s1": ("electronic", "plain", True, None),
    "mu_s2": ("electronic", "plain", True, None),
    "ground_energy": ("electronic", "energy", False, 0.0),
    "j_s1": ("couplings", "energy", True, None),
    "j_s2": ("couplings", "energy", True, None),
    "gamma0": ("rates", "energy", True, None),
}

_MODE_ARRAYS = {
    "omega": True,   # required
    "g_s1": False,
    "g_s2": False,
    "g_off": False,
}

_ENERGY_SUFFIXES = {"_ev": 1.0, "_cm1": EV_PER_CM1}


def _find_energy_key(section: configparser.SectionProxy, base: str,
                     context: str):
    """Locate ``base`` with a unit suffix; reject unknown suffixes."""
    hits = []
    for key in section:
        if key == base or key.startswith(base + "_"):
            if key in (base + "_ev", base + "_cm1"):
                hits.append(key)
            else:
                raise UnknownUnit(
                    f"{context}: key {key!r} does not carry a recognized "
                    "unit suffix (_ev or _cm1)"
                )
    if not hits:
        return None, None
    if len(hits) > 1:
        raise ConfigError(f"{context}: duplicate keys {hits} for {base!r}")
    key = hits[0]
    return key, _ENERGY_SUFFIXES["_" + key.rsplit("_", 1)[1]]


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as a number") from None


def parse_model_config(text: str) -> VibronicModel:
    """Parse an INI model document into a validated :class:`VibronicModel`.

    All energies are converted to eV.  Raises :class:`MissingField`,
    :class:`NonPositiveFrequency`, :class:`NonHermitianCoupling` or
    :class:`UnknownUnit`, naming the offending key.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed model document: {exc}") from None

    values: dict[str, float] = {}
    for name, (section, kind, required, default) in _SCALARS.items():
        if section not in cp:
            if required:
                raise MissingField(f"missing section [{section}]")
            values[name] = default
            continue
        sec = cp[section]
        if kind == "energy":
            key, factor = _find_energy_key(sec, name, f"[{section}]")
            if key is None:
                if required:
                    raise MissingField(f"[{section}] missing key {name}_ev/_cm1")
                values[name] = default
            else:
                values[name] = _parse_float(sec[key], key) * factor
        elif kind == "int":
            if name not in sec:
                raise MissingField(f"[{section}] missing key {name!r}")
            values[name] = int(sec[name])
        else:
            if name not in sec:
                raise MissingField(f"[{section}] missing key {name!r}")
            values[name] = _parse_float(sec[name], name)

    if "modes" not in cp:
        raise MissingField("modes")
    msec = cp["modes"]
    arrays: dict[str, list[float]] = {}
    for base, required in _MODE_ARRAYS.items():
        key, factor = _find_energy_key(msec, base, "[modes]")
        if key is None:
            if required:
                raise MissingField(f"[modes] missing key {base}_ev/_cm1")
            arrays[base] = []
            continue
        raw = msec[key].split()
        arrays[base] = [_parse_float(tok, key) * factor for tok in raw]

    n = len(arrays["omega"])
    for base, vals in arrays.items():
        if not vals:
            arrays[base] = [0.0] * n
        elif len(vals) != n:
            raise ConfigError(
                f"[modes] key {base!r} has {len(vals)} entries, expected {n}"
            )
    modes = tuple(
        Mode(arrays["omega"][k], arrays["g_s1"][k], arrays["g_s2"][k],
             arrays["g_off"][k])
        for k in range(n)
    )

    return VibronicModel(
        n_monomers=int(values["n_monomers"]),
        e_s1_ev=values["e_s1"],
        e_s2_ev=values["e_s2"],
        mu_s1=values["mu_s1"],
        mu_s2=values["mu_s2"],
        j_s1_ev=values["j_s1"],
        j_s2_ev=values["j_s2"],
        modes=modes,
        gamma0_ev=values["gamma0"],
        ground_energy_ev=values["ground_energy"],
    )


def truncation_from_config(text: str, model: VibronicModel) -> FockTruncation:
    """Read the optional per-mode ``nmax`` row from a model document."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    if "modes" in cp and "nmax" in cp["modes"]:
        per_mode = [int(tok) for tok in cp["modes"]["nmax"].split()]
        return FockTruncation.uniform(model, per_mode)
    return FockTruncation.defaults(model)


def serialize_model(model: VibronicModel,
                    trunc: FockTruncation | None = None) -> str:
    """Render a model back to the INI format (exact float round-trip)."""
    f = io.StringIO()
    g = lambda x: format(float(x), ".17g")
    f.write("[electronic]\n")
    f.write(f"n_monomers = {model.n_monomers}\n")
    f.write(f"e_s1_ev = {g(model.e_s1_ev)}\n")
    f.write(f"e_s2_ev = {g(model.e_s2_ev)}\n")
    f.write(f"mu_s1 = {g(model.mu_s1)}\n")
    f.write(f"mu_s2 = {g(model.mu_s2)}\n")
    f.write(f"ground_energy_ev = {g(model.ground_energy_ev)}\n")
    f.write("\n[couplings]\n")
    f.write(f"j_s1_ev = {g(model.j_s1_ev)}\n")
    f.write(f"j_s2_ev = {g(model.j_s2_ev)}\n")
    f.write("\n[modes]\n")
    f.write("omega_ev = " + " ".join(g(m.omega_ev) for m in model.modes) + "\n")
    f.write("g_s1_ev = " + " ".join(g(m.g_s1_ev) for m in model.modes) + "\n")
    f.write("g_s2_ev = " + " ".join(g(m.g_s2_ev) for m in model.modes) + "\n")
    f.write("g_off_ev = " + " ".join(g(m.g_off_ev) for m in model.modes) + "\n")
    if trunc is not None:
        f.write("nmax = " + " ".join(str(n) for n in trunc.nmax[0]) + "\n")
    f.write("\n[rates]\n")
    f.write(f"gamma0_ev = {g(model.gamma0_ev)}\n")
    return f.getvalue()


def load_model_file(path) -> tuple[VibronicModel, FockTruncation]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    model = parse_model_config(text)
    return model, truncation_from_config(text, model)
