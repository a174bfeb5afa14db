"""Time evolution: exact spectral propagation and the leading-order analytics.

Conventions confirmed against exact evolution with exp(-iHt) at Delta = 0:
a coherent branch starting at beta0, with the atoms in the S_x = -N/2 state,
stays coherent with

    center(t) = alpha (1 - e^{-i w t}) + beta0 e^{-i w t},     alpha = N g / w
    phase(t)  = xi(t) + alpha [Im beta0 - Im(beta0 e^{-i w t})]
    xi(t)     = alpha^2 (w t - sin w t).

The vacuum gives the amplifier trajectory beta(t) = alpha (1 - e^{-i w t});
the two branches of a phase cat give the phases phi1, phi2.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffError, DimensionError, NotHermitianError, ValidationError
from .hilbert import (CatParams, HilbertSpec, ModelParams, StateVector, check_cutoff,
                      coherent_amplitudes, product_state, tail_weight)
from .hpx import leading_eigensystem
from .operators import OperatorMatrix, diagonalize, SpectrumResult


@dataclass(frozen=True)
class TimeGrid:
    """``steps`` evenly spaced samples from t_start to t_end inclusive.

    A single sample (``steps=1``) sits at t_start and may have t_end == t_start.
    """

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")
        if self.steps > 1 and not self.t_end > self.t_start:
            raise ValidationError("t_end must exceed t_start")
        if self.steps == 1 and self.t_end < self.t_start:
            raise ValidationError("t_end must not precede t_start")

    @property
    def samples(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([float(self.t_start)])
        return np.linspace(self.t_start, self.t_end, self.steps)

    @classmethod
    def periods(cls, omega: float, periods: float = 1.0, steps: int = 65) -> "TimeGrid":
        return cls(0.0, 2.0 * math.pi * periods / omega, steps)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled times with named observable columns and optional states."""

    times: np.ndarray
    columns: dict
    states: tuple | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, name):
        if name == "t":
            return self.times
        return self.columns[name]

    def column_names(self) -> list[str]:
        return ["t", *self.columns]

    def to_csv(self, header: list[str] | None = None) -> str:
        """CSV text; ``header`` lines are emitted first as ``# `` comments."""
        buf = io.StringIO()
        for line in header or []:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = self.column_names()
        writer.writerow(names)
        cols = [self.times, *self.columns.values()]
        for row in zip(*cols):
            writer.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = {"t": [float(t) for t in self.times]}
        for k, v in self.columns.items():
            d[k] = [float(x) for x in v]
        return {"meta": self.meta, "columns": d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def photon_number(state: StateVector) -> float:
    grid = state.as_grid()
    return float(np.sum(np.abs(grid) ** 2 * np.arange(state.spec.field_dim)[None, :]))


def field_mean(state: StateVector) -> complex:
    """<a>."""
    grid = state.as_grid()
    sq = np.sqrt(np.arange(1, state.spec.field_dim))
    return complex(np.sum(grid[:, :-1].conj() * grid[:, 1:] * sq[None, :]))


def quadratures(state: StateVector) -> tuple[float, float]:
    """(<x>, <p>) with x = (a + a^dag)/sqrt 2, p = i (a^dag - a)/sqrt 2."""
    mean = field_mean(state)
    return math.sqrt(2.0) * mean.real, math.sqrt(2.0) * mean.imag


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for pure states."""
    return abs(a.overlap(b)) ** 2


def branch_visibility(center1: complex, center2: complex) -> float:
    """|<b1|b2>| for coherent branches."""
    return math.exp(-0.5 * abs(center1 - center2) ** 2)


def observables(state: StateVector) -> dict:
    x, p = quadratures(state)
    return {"photon_number": photon_number(state), "x": x, "p": p}


def macro_ratio_closed_form(params: ModelParams, cat: CatParams) -> float:
    """Branch separation 2 gamma |sin phi| over the peak drive amplitude 2 N g / omega."""
    return cat.gamma * abs(math.sin(cat.phi)) * params.omega / (params.n_atoms * params.g)


def qamp_beta(params: ModelParams, t):
    return params.alpha * (1.0 - np.exp(-1j * params.omega * np.asarray(t)))


def qamp_xi(params: ModelParams, t):
    wt = params.omega * np.asarray(t)
    return params.alpha**2 * (wt - np.sin(wt))


def branch_evolution(params: ModelParams, beta0: complex, t):
    """(center, phase) of a coherent branch started at ``beta0``."""
    t = np.asarray(t, dtype=float)
    rot = np.exp(-1j * params.omega * t)
    center = params.alpha * (1.0 - rot) + beta0 * rot
    phase = qamp_xi(params, t) + params.alpha * (np.imag(beta0) - np.imag(beta0 * rot))
    return center, phase


def _check_tail(state: StateVector, tol: float) -> None:
    w = tail_weight(state)
    if w >= tol:
        raise CutoffError(f"initial state carries weight {w:.3e} in the top Fock levels")


def evolve_exact(h: OperatorMatrix, psi0: StateVector, grid: TimeGrid,
                 spectrum: SpectrumResult | None = None, tail_tol: float = 1e-10) -> TimeSeries:
    """psi(t) = sum_k exp(-i E_k t) <v_k|psi0> v_k from the full decomposition."""
    if not h.hermitian:
        raise NotHermitianError("evolve_exact needs a Hermitian Hamiltonian")
    if h.dim != psi0.spec.total_dim:
        raise DimensionError(f"H dim {h.dim} != state dim {psi0.spec.total_dim}")
    _check_tail(psi0, tail_tol)
    spectrum = diagonalize(h) if spectrum is None else spectrum
    vals, vecs = spectrum.eigenvalues, spectrum.eigenvectors
    coeffs = vecs.conj().T @ psi0.amplitudes
    times = grid.samples
    phases = np.exp(-1j * np.outer(vals, times))
    block = vecs @ (coeffs[:, None] * phases)
    if times[0] == 0.0:
        block[:, 0] = psi0.amplitudes
    states = []
    norms, energies, photons = [], [], []
    hm = h.entries
    for k in range(len(times)):
        v = block[:, k]
        norms.append(np.linalg.norm(v))
        energies.append(np.vdot(v, hm @ v).real)
        st = StateVector(psi0.spec, v)
        photons.append(photon_number(st))
        states.append(st)
    cols = {"norm": np.array(norms), "energy": np.array(energies),
            "photon_number": np.array(photons)}
    return TimeSeries(times, cols, tuple(states))


def evolve_leading(params: ModelParams, spec: HilbertSpec, coefficients: dict,
                   grid: TimeGrid, frame: str = "lab") -> TimeSeries:
    """Apply the leading-order propagator to sum c_{mn} |m; n>.

    Each component acquires exp(-i E0_{mn} t); the -N^2 g^2/omega part of E0
    is the common factor exp(i N^2 g^2 t / omega).
    """
    total = sum(abs(c) ** 2 for c in coefficients.values())
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"coefficients have squared norm {total!r}, expected 1")
    pairs = list(coefficients)
    basis = [leading_eigensystem(params, spec, m, n, frame) for m, n in pairs]
    mat = np.stack([b.state.amplitudes for b in basis], axis=1)
    energies = np.array([b.energy for b in basis])
    c = np.array([coefficients[p] for p in pairs], dtype=np.complex128)
    times = grid.samples
    block = mat @ (c[:, None] * np.exp(-1j * np.outer(energies, times)))
    states = tuple(StateVector(spec, block[:, k]) for k in range(len(times)))
    photons = np.array([photon_number(s) for s in states])
    return TimeSeries(times, {"photon_number": photons}, states,
                      {"pairs": [list(p) for p in pairs], "frame": frame})


def leading_decomposition(params: ModelParams, spec: HilbertSpec, psi: StateVector,
                          pairs, frame: str = "lab") -> dict:
    """<m; n|psi> for each (m, n) in ``pairs``."""
    return {
        (m, n): complex(leading_eigensystem(params, spec, m, n, frame).state.overlap(psi))
        for m, n in pairs
    }


def qamp_trajectory(params: ModelParams, grid: TimeGrid) -> TimeSeries:
    """Vacuum amplification records: beta(t), xi(t), |beta(t)|^2."""
    t = grid.samples
    beta = qamp_beta(params, t)
    return TimeSeries(t, {
        "beta_re": beta.real,
        "beta_im": beta.imag,
        "xi": qamp_xi(params, t),
        "photon_number": np.abs(beta) ** 2,
    }, meta={"params": params.to_dict()})


def qamp_state(params: ModelParams, spec: HilbertSpec, t: float, spin=0,
               allow_truncation: bool = False) -> StateVector:
    """exp(i xi(t)) |beta(t)> with the atoms in ``spin`` (default c = 0)."""
    beta = complex(qamp_beta(params, t))
    amps = np.exp(1j * float(qamp_xi(params, t))) * coherent_amplitudes(
        beta, spec.n_max, allow_truncation)
    return product_state(spec, spin, amps)


def coherent_branch_state(params: ModelParams, spec: HilbertSpec, beta0: complex, t: float,
                          spin=0, allow_truncation: bool = False) -> StateVector:
    center, phase = branch_evolution(params, beta0, t)
    amps = np.exp(1j * float(phase)) * coherent_amplitudes(complex(center), spec.n_max,
                                                          allow_truncation)
    return product_state(spec, spin, amps)


def cat_phases(params: ModelParams, cat: CatParams, t):
    """(phi1, phi2) of the two branches."""
    wt = params.omega * np.asarray(t, dtype=float)
    k = cat.gamma * params.alpha
    phi1 = k * (math.sin(cat.phi) + np.sin(wt - cat.phi))
    phi2 = -k * (math.sin(cat.phi) - np.sin(wt + cat.phi))
    return phi1, phi2


def cat_evolution(params: ModelParams, cat: CatParams, grid: TimeGrid,
                  spec: HilbertSpec | None = None, spin=0,
                  allow_truncation: bool = False) -> TimeSeries:
    """Two-branch analytic evolution of a phase cat with the atoms passive.

    With ``spec`` the normalized state
    exp(i xi) N (e^{i phi1}|b1> + e^{i phi2}|b2>) (x) spin is rebuilt per sample.
    """
    t = grid.samples
    b1_0 = cat.gamma * np.exp(1j * cat.phi)
    b2_0 = cat.gamma * np.exp(-1j * cat.phi)
    c1, _ = branch_evolution(params, b1_0, t)
    c2, _ = branch_evolution(params, b2_0, t)
    phi1, phi2 = cat_phases(params, cat, t)
    xi = qamp_xi(params, t)
    macro = np.abs(qamp_beta(params, t))
    distance = np.abs(c1 - c2)
    peak = macro.max()
    ratio = distance / peak if peak > 0 else np.full_like(distance, np.inf)
    cols = {
        "branch1_re": c1.real, "branch1_im": c1.imag,
        "branch2_re": c2.real, "branch2_im": c2.imag,
        "phi1": phi1, "phi2": phi2, "xi": xi,
        "branch_distance": distance,
        "macro_amplitude": macro,
        "macro_ratio": ratio,
        "visibility": np.exp(-0.5 * distance**2),
    }
    states = None
    if spec is not None:
        reach = float(max(np.abs(c1).max(), np.abs(c2).max()))
        check_cutoff(spec.n_max, reach, allow_truncation)
        states = []
        for k, tk in enumerate(t):
            f1 = coherent_amplitudes(complex(c1[k]), spec.n_max, True)
            f2 = coherent_amplitudes(complex(c2[k]), spec.n_max, True)
            amps = np.exp(1j * xi[k]) * (np.exp(1j * phi1[k]) * f1 + np.exp(1j * phi2[k]) * f2)
            states.append(product_state(spec, spin, amps))
        states = tuple(states)
    return TimeSeries(t, cols, states, {"params": params.to_dict(),
                                        "gamma": cat.gamma, "phi": cat.phi})
