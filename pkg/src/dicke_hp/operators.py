"""Operator matrices on the truncated spaces and a Hermitian eigensolver.

All matrices are dense numpy arrays.  Tensor products follow the basis
layout of :mod:`dicke_hp.hilbert` (spin outer, field inner).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import DimensionError, NotHermitianError, SolverError, ValidationError
from .hilbert import HilbertSpec, ModelParams, StateVector

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Square matrix with an optional Hermitian guarantee.

    ``spec`` is the joint space when the operator acts on one, otherwise
    ``None`` (single-factor operators such as ``S_z`` or ``a``).
    """

    entries: np.ndarray = field(repr=False)
    hermitian: bool = False
    spec: HilbertSpec | None = None

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"operator must be square, got shape {a.shape}")
        if self.spec is not None and a.shape[0] != self.spec.total_dim:
            raise DimensionError(f"matrix dim {a.shape[0]} != total_dim {self.spec.total_dim}")
        if self.hermitian:
            dev = hermiticity_defect(a)
            if dev >= HERMITIAN_TOL * max(1.0, float(np.abs(a).max(initial=0.0))):
                raise NotHermitianError(f"max |A - A^dag| = {dev:.3e}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, state: StateVector) -> complex:
        if state.spec.total_dim != self.dim:
            raise DimensionError(f"state dim {state.spec.total_dim} != operator dim {self.dim}")
        v = state.amplitudes
        return complex(np.vdot(v, self.entries @ v))


def hermiticity_defect(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a - a.conj().T).max(initial=0.0))


def hermitian(a, spec=None) -> OperatorMatrix:
    """Symmetrize ``a`` and flag it Hermitian."""
    a = np.asarray(a)
    return OperatorMatrix(0.5 * (a + a.conj().T), True, spec)


def commutator(a, b) -> np.ndarray:
    a = getattr(a, "entries", a)
    b = getattr(b, "entries", b)
    return a @ b - b @ a


def ladder(n_max: int) -> np.ndarray:
    """Annihilation operator on Fock levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1)


def spin_operators(n_atoms: int) -> dict[str, OperatorMatrix]:
    """Collective spin j = N/2; basis index m_s = 0..N has S_z = m_s - N/2."""
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValidationError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    j = n_atoms / 2.0
    m = np.arange(n_atoms + 1) - j
    s_plus = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), -1)
    s_minus = s_plus.T.copy()
    return {
        "S_z": OperatorMatrix(np.diag(m), True),
        "S_x": hermitian(0.5 * (s_plus + s_minus)),
        "S_y": hermitian(-0.5j * (s_plus - s_minus)),
        "S_plus": OperatorMatrix(s_plus),
        "S_minus": OperatorMatrix(s_minus),
    }


def field_operators(n_max: int) -> dict[str, OperatorMatrix]:
    """Truncated ladder operators.

    ``[a, a^dag]`` is the identity except at the (n_max, n_max) corner, where
    it equals ``-n_max``; states used in comparisons keep negligible weight
    there.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max!r}")
    a = ladder(n_max)
    return {
        "a": OperatorMatrix(a),
        "a_dagger": OperatorMatrix(a.T.copy()),
        "number": OperatorMatrix(np.diag(np.arange(n_max + 1, dtype=float)), True),
    }


def _require_full_spin(params: ModelParams, spec: HilbertSpec) -> None:
    if params.n_atoms != spec.n_atoms:
        raise DimensionError(f"params N={params.n_atoms} but spec N={spec.n_atoms}")
    if spec.spin_dim != spec.n_atoms + 1:
        raise DimensionError("the S_z-basis Hamiltonian needs the full spin ladder")


def dicke_hamiltonian(params: ModelParams, spec: HilbertSpec) -> OperatorMatrix:
    """H = Delta S_z + omega a^dag a + (2 lambda / sqrt N) S_x (a^dag + a)."""
    _require_full_spin(params, spec)
    spin = spin_operators(spec.n_atoms)
    a = ladder(spec.n_max)
    eye_s = np.eye(spec.spin_dim)
    eye_f = np.eye(spec.field_dim)
    coupling = 2.0 * params.lam / math.sqrt(params.n_atoms)
    h = (
        params.delta * np.kron(spin["S_z"].entries, eye_f)
        + params.omega * np.kron(eye_s, a.T @ a)
        + coupling * np.kron(spin["S_x"].entries, a + a.T)
    )
    return hermitian(h, spec)


def parity_operator(spec: HilbertSpec) -> OperatorMatrix:
    """exp(i pi (a^dag a + S_z + N/2)), diagonal with entries (-1)^(n + m_s)."""
    s = np.repeat(np.arange(spec.spin_dim), spec.field_dim)
    n = np.tile(np.arange(spec.field_dim), spec.spin_dim)
    return OperatorMatrix(np.diag(np.where((s + n) % 2 == 0, 1.0, -1.0)), True, spec)


def spin_x_ground(n_atoms: int) -> np.ndarray:
    """The S_x = -N/2 eigenvector written in the S_z basis (phase-fixed)."""
    _, vecs = np.linalg.eigh(spin_operators(n_atoms)["S_x"].entries)
    return _fix_phases(vecs[:, :1].astype(np.complex128))[:, 0]


def critical_coupling(delta: float, omega: float) -> float:
    return 0.5 * math.sqrt(delta * omega)


def normal_mode_frequencies(delta: float, omega: float, lam: float) -> tuple[float, float]:
    """(eps_minus, eps_plus) of the quadratic two-oscillator Hamiltonian H0."""
    root = math.sqrt((omega**2 - delta**2) ** 2 + 16.0 * lam**2 * omega * delta)
    lo = 0.5 * (omega**2 + delta**2 - root)
    if lo < 0:
        raise ValidationError(f"lambda={lam} beyond the critical coupling; H0 is unbounded")
    return math.sqrt(lo), math.sqrt(0.5 * (omega**2 + delta**2 + root))


def hp_sz_hamiltonians(params: ModelParams, n_field: int, n_b: int,
                       field_factor: bool = True) -> dict[str, OperatorMatrix]:
    """Leading and 1/N terms of the S_z-axis Holstein-Primakoff expansion.

    Two-boson space, b-mode outer and field mode inner.  The constant
    ``-N Delta / 2`` is omitted.  ``H1`` carries the factor (a^dag + a) that
    the expansion of the coupling produces; ``field_factor=False`` drops it
    and returns the bare -(lambda / 2N)(b^dag b^dag b + b^dag b b).
    """
    if n_field < 1 or n_b < 1:
        raise ValidationError("both boson cutoffs must be >= 1")
    a = ladder(n_field)
    b = ladder(n_b)
    eye_a = np.eye(n_field + 1)
    eye_b = np.eye(n_b + 1)
    x_a = a + a.T
    x_b = b + b.T
    lam = params.lam
    h0 = (
        params.delta * np.kron(b.T @ b, eye_a)
        + params.omega * np.kron(eye_b, a.T @ a)
        + lam * np.kron(x_b, x_a)
    )
    cubic = b.T @ b.T @ b + b.T @ b @ b
    field_op = x_a if field_factor else eye_a
    h1 = -(lam / (2.0 * params.n_atoms)) * np.kron(cubic, field_op)
    return {"H0": hermitian(h0), "H1": hermitian(h1)}


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residual: float

    def to_dict(self, params: ModelParams | None = None, spec: HilbertSpec | None = None) -> dict:
        return {
            "params": None if params is None else params.to_dict(),
            "spec": None if spec is None else spec.to_dict(),
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "residual": float(self.residual),
        }

    def to_json(self, params=None, spec=None) -> str:
        return json.dumps(self.to_dict(params, spec))


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)[None, :]


def diagonalize(h: OperatorMatrix, k: int | None = None, method: str = "dense") -> SpectrumResult:
    """Lowest ``k`` (or all) eigenpairs, ascending, phase-fixed.

    ``method="dense"`` uses LAPACK; ``method="lanczos"`` uses ARPACK for a few
    extremal pairs of large matrices.
    """
    if not h.hermitian:
        raise NotHermitianError("diagonalize requires an operator flagged Hermitian")
    a = h.entries
    dim = a.shape[0]
    if k is not None and not 1 <= k <= dim:
        raise ValidationError(f"k={k} outside 1..{dim}")
    if method == "dense":
        if k is None or k == dim:
            vals, vecs = sla.eigh(a)
        else:
            vals, vecs = sla.eigh(a, subset_by_index=[0, k - 1])
    elif method == "lanczos":
        if k is None or k >= dim - 1:
            raise ValidationError("lanczos needs k < dim - 1")
        try:
            vals, vecs = eigsh(a, k=k, which="SA", tol=0.0, v0=np.ones(dim))
        except ArpackNoConvergence as exc:
            raise SolverError(str(exc)) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ValidationError(f"unknown method {method!r}")
    vecs = _fix_phases(vecs.astype(np.complex128) if np.iscomplexobj(a) else vecs.astype(float))
    residual = float(np.abs(a @ vecs - vecs * vals[None, :]).max(initial=0.0))
    if k is None or k == dim:
        scale = float(vals[-1] - vals[0])
    else:
        scale = float(np.abs(a).sum(axis=1).max())
    if residual >= 1e-8 * max(scale, 1.0):
        raise SolverError(f"eigen-residual {residual:.3e} too large (scale {scale:.3e})")
    return SpectrumResult(vals, vecs, residual)
