"""Truncated Hilbert spaces, basis indexing and canonical states.

Basis layout: the collective-spin (or Holstein-Primakoff c-boson) index is
the outer index and the field Fock index the inner one, so the amplitude of
``|s>|n>`` sits at ``s * (n_max + 1) + n``.  This ordering is part of the
serialized state format and does not change.

The spin index is basis-agnostic: for the Dicke Hamiltonian in the S_z basis
``s = m_s`` labels the S_z eigenvalue ``m_s - N/2``; in the S_x frame used by
:mod:`dicke_hp.hpx` it is the c-boson number, ``S_x = -N/2 + s``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CutoffError, DimensionError, ValidationError

NORM_TOL = 1e-10


@dataclass(frozen=True)
class HilbertSpec:
    """Joint space of ``n_atoms`` spins (j = N/2 sector) and one Fock mode.

    ``spin_cutoff`` restricts the spin/c-boson ladder to ``0..spin_cutoff``;
    by default the full ``0..N`` ladder is kept.
    """

    n_atoms: int
    n_max: int
    spin_cutoff: int | None = None

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValidationError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValidationError(f"n_max must be a non-negative integer, got {self.n_max!r}")
        if self.spin_cutoff is not None and not 0 <= self.spin_cutoff <= self.n_atoms:
            raise ValidationError(
                f"spin_cutoff must lie in [0, {self.n_atoms}], got {self.spin_cutoff!r}"
            )

    @property
    def spin_dim(self) -> int:
        top = self.n_atoms if self.spin_cutoff is None else self.spin_cutoff
        return top + 1

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    @property
    def total_dim(self) -> int:
        return self.spin_dim * self.field_dim

    def index(self, s: int, n: int) -> int:
        if not (0 <= s < self.spin_dim and 0 <= n <= self.n_max):
            raise ValidationError(f"basis label ({s}, {n}) outside {self}")
        return s * self.field_dim + n

    def with_n_max(self, n_max: int) -> "HilbertSpec":
        return HilbertSpec(self.n_atoms, n_max, self.spin_cutoff)

    def to_dict(self) -> dict:
        d = {"n_atoms": self.n_atoms, "n_max": self.n_max}
        if self.spin_cutoff is not None:
            d["spin_cutoff"] = self.spin_cutoff
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HilbertSpec":
        return cls(int(d["n_atoms"]), int(d["n_max"]), d.get("spin_cutoff"))


@dataclass(frozen=True)
class ModelParams:
    """Dicke model constants.  ``lam`` = sqrt(N) g, ``big_omega`` = 4 N g^2 / omega."""

    n_atoms: int
    delta: float
    omega: float
    g: float

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValidationError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if not self.omega > 0:
            raise ValidationError(f"omega must be positive, got {self.omega!r}")
        if not self.delta >= 0:
            raise ValidationError(f"delta must be non-negative, got {self.delta!r}")
        if not self.g >= 0:
            raise ValidationError(f"g must be non-negative, got {self.g!r}")

    @classmethod
    def from_lambda(cls, n_atoms: int, delta: float, omega: float, lam: float) -> "ModelParams":
        return cls(n_atoms, delta, omega, lam / math.sqrt(n_atoms))

    @property
    def lam(self) -> float:
        return math.sqrt(self.n_atoms) * self.g

    @property
    def big_omega(self) -> float:
        return 4.0 * self.n_atoms * self.g**2 / self.omega

    @property
    def alpha(self) -> float:
        """Field displacement N g / omega of the S_x = -N/2 sector."""
        return self.n_atoms * self.g / self.omega

    @property
    def eta(self) -> float:
        """Polaron displacement 2 g / omega per c-boson quantum."""
        return 2.0 * self.g / self.omega

    def replace(self, **changes) -> "ModelParams":
        d = self.to_dict()
        d.update(changes)
        return ModelParams(d["n_atoms"], d["delta"], d["omega"], d["g"])

    def to_dict(self) -> dict:
        return {"n_atoms": self.n_atoms, "delta": self.delta, "omega": self.omega, "g": self.g}


@dataclass(frozen=True)
class CatParams:
    gamma: float
    phi: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be non-negative, got {self.gamma!r}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector on ``spec``; the array is read-only."""

    spec: HilbertSpec
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.spec.total_dim:
            raise DimensionError(
                f"amplitude length {amps.shape[0]} != total_dim {self.spec.total_dim}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {nrm!r} deviates from 1 by more than {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, spec: HilbertSpec, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(spec, amps / nrm)

    def as_grid(self) -> np.ndarray:
        """Amplitudes reshaped to (spin_dim, field_dim)."""
        return self.amplitudes.reshape(self.spec.spin_dim, self.spec.field_dim)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.spec != self.spec:
            raise DimensionError(f"{self.spec} vs {other.spec}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "StateVector":
        spec = HilbertSpec.from_dict(d["spec"])
        amps = np.array([complex(re, im) for re, im in d["amplitudes"]])
        return cls(spec, amps)

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        return cls.from_dict(json.loads(text))


def build_spec(n_atoms: int, n_max: int, spin_cutoff: int | None = None) -> HilbertSpec:
    return HilbertSpec(n_atoms, n_max, spin_cutoff)


def required_cutoff(amplitude: float) -> int:
    """Smallest n_max allowed for a state of field amplitude ``amplitude``."""
    b = abs(amplitude)
    # guard against ceil(82.00000000000001) style round-up
    return int(math.ceil(b * b + 6.0 * b + 10.0 - 1e-9))


def check_cutoff(n_max: int, amplitude: float, allow_truncation: bool = False) -> None:
    need = required_cutoff(amplitude)
    if n_max >= need:
        return
    msg = f"n_max={n_max} below {need} required for field amplitude {abs(amplitude):.6g}"
    if allow_truncation:
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    else:
        raise CutoffError(msg)


def _spin_vector(spec: HilbertSpec, spin) -> np.ndarray:
    if isinstance(spin, (int, np.integer)):
        if not 0 <= spin < spec.spin_dim:
            raise ValidationError(f"spin index {spin} outside 0..{spec.spin_dim - 1}")
        v = np.zeros(spec.spin_dim, dtype=np.complex128)
        v[spin] = 1.0
        return v
    v = np.asarray(spin, dtype=np.complex128).reshape(-1)
    if v.shape[0] != spec.spin_dim:
        raise DimensionError(f"spin vector length {v.shape[0]} != spin_dim {spec.spin_dim}")
    return v / np.linalg.norm(v)


def product_state(spec: HilbertSpec, spin, field_amplitudes) -> StateVector:
    """``spin`` is a basis index or a spin amplitude vector."""
    f = np.asarray(field_amplitudes, dtype=np.complex128).reshape(-1)
    if f.shape[0] != spec.field_dim:
        raise DimensionError(f"field vector length {f.shape[0]} != field_dim {spec.field_dim}")
    return StateVector.normalized(spec, np.kron(_spin_vector(spec, spin), f))


def fock_state(spec: HilbertSpec, m_s: int, n: int) -> StateVector:
    amps = np.zeros(spec.total_dim, dtype=np.complex128)
    amps[spec.index(m_s, n)] = 1.0
    return StateVector(spec, amps)


def coherent_amplitudes(beta: complex, n_max: int, allow_truncation: bool = False) -> np.ndarray:
    """Field-only coherent amplitudes, renormalized on ``0..n_max``."""
    check_cutoff(n_max, abs(beta), allow_truncation)
    amps = _kernels.coherent_amplitudes_raw(beta, n_max)
    return amps / np.linalg.norm(amps)


def coherent_state(spec: HilbertSpec, beta: complex, spin=0, allow_truncation=False) -> StateVector:
    return product_state(spec, spin, coherent_amplitudes(beta, spec.n_max, allow_truncation))


def displaced_number_amplitudes(alpha: float, n: int, n_max: int, allow_truncation=False):
    """Field amplitudes of exp(alpha (a^dag - a)) |n>, renormalized on ``0..n_max``."""
    if n < 0 or n > n_max:
        raise ValidationError(f"Fock index {n} outside 0..{n_max}")
    check_cutoff(n_max, abs(alpha) + math.sqrt(n), allow_truncation)
    col = _kernels.displacement_matrix(alpha, n_max + 1, n + 1)[:, n]
    return col / np.linalg.norm(col)


def displaced_number_state(spec: HilbertSpec, alpha: float, n: int, spin=0,
                           allow_truncation=False) -> StateVector:
    amps = displaced_number_amplitudes(alpha, n, spec.n_max, allow_truncation)
    return product_state(spec, spin, amps)


def cat_amplitudes(cat: CatParams, n_max: int, allow_truncation=False) -> np.ndarray:
    """Normalized |gamma e^{i phi}> + |gamma e^{-i phi}> on ``0..n_max``."""
    check_cutoff(n_max, cat.gamma, allow_truncation)
    plus = _kernels.coherent_amplitudes_raw(cat.gamma * np.exp(1j * cat.phi), n_max)
    minus = _kernels.coherent_amplitudes_raw(cat.gamma * np.exp(-1j * cat.phi), n_max)
    s = plus + minus
    return s / np.linalg.norm(s)


def cat_state(spec: HilbertSpec, cat: CatParams, spin=0, allow_truncation=False) -> StateVector:
    return product_state(spec, spin, cat_amplitudes(cat, spec.n_max, allow_truncation))


def tail_weight(state: StateVector, levels: int = 2) -> float:
    """Probability carried by the top ``levels`` Fock levels."""
    grid = state.as_grid()
    return float(np.sum(np.abs(grid[:, -levels:]) ** 2))
