"""Strong-coupling machinery: Holstein-Primakoff bosons along S_x.

With ``S_x = -N/2 + c^dag c`` the Dicke Hamiltonian reads

    H = omega a^dag a - N g (a + a^dag) + 2 g c^dag c (a + a^dag)
        + (Delta/2) sqrt(N) [c^dag F + F c],   F = sqrt(1 - c^dag c / N).

The polaron unitary ``U = exp(eta c^dag c (a^dag - a))``, ``eta = 2 g / omega``,
removes the c-dependent field coupling: ``U H U^dag`` is the H' series.  Three
frames are used throughout:

``"lab"``      the Hamiltonian above (c-number basis for the spins);
``"polaron"``  ``U H U^dag``;
``"shifted"``  the polaron frame followed by the field shift a -> a + N g/omega,
               in which the leading eigenstates are plain Fock products.

All three are unitarily equivalent; the shifted frame needs the smallest Fock
cutoff and is the default for convergence studies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from . import _kernels
from .errors import CutoffError, DimensionError, ResonanceError, ValidationError
from .hilbert import HilbertSpec, ModelParams, StateVector, check_cutoff, fock_state, product_state
from .hilbert import displaced_number_amplitudes
from .operators import OperatorMatrix, hermitian, ladder

FRAMES = ("lab", "polaron", "shifted")
AMPLITUDE_FLOOR = 1e-12


def _check(params: ModelParams, spec: HilbertSpec) -> None:
    if params.n_atoms != spec.n_atoms:
        raise DimensionError(f"params N={params.n_atoms} but spec N={spec.n_atoms}")


def _c_parts(spec: HilbertSpec):
    top = spec.spin_dim - 1
    c = ladder(top) if top > 0 else np.zeros((1, 1))
    m = np.arange(top + 1, dtype=float)
    sqrt_factor = np.diag(np.sqrt(1.0 - m / spec.n_atoms))
    return c, m, sqrt_factor


def truncated_displacement(x: float, n_max: int) -> np.ndarray:
    """exp(x (a^dag - a)) with the ladder truncated at n_max (exactly unitary)."""
    a = ladder(n_max)
    w, v = np.linalg.eigh(1j * (a.T - a))
    return ((v * np.exp(-1j * x * w)[None, :]) @ v.conj().T).real


def displacement_matrix(x: float, n_max: int) -> np.ndarray:
    """Untruncated matrix elements <n1|exp(x (a^dag - a))|n> for n, n1 <= n_max."""
    return _kernels.displacement_matrix(x, n_max + 1)


def displacement_element(n: int, n1: int, x: float) -> float:
    """C_{n,n1}(x) = <n1| exp(x (a^dag - a)) |n>, associated-Laguerre form."""
    if n < 0 or n1 < 0:
        raise ValidationError("Fock indices must be non-negative")
    x = float(x)
    lo, hi = min(n, n1), max(n, n1)
    if x == 0.0:
        return 1.0 if n == n1 else 0.0
    # sqrt(lo!/hi!) x^(hi-lo) e^{-x^2/2} L_lo^(hi-lo)(x^2); sign flips for n > n1
    k = hi - lo
    log_pref = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + k * math.log(abs(x)) - 0.5 * x * x
    sign = 1.0 if x > 0 or k % 2 == 0 else -1.0
    if n > n1 and k % 2 == 1:
        sign = -sign
    return sign * math.exp(log_pref) * float(eval_genlaguerre(lo, k, x * x))


def hp_sx_hamiltonian(params: ModelParams, spec: HilbertSpec, frame: str = "lab",
                      expanded: bool = False) -> OperatorMatrix:
    """Dicke Hamiltonian in the S_x-axis Holstein-Primakoff representation.

    The square root F is diagonal in the c-number basis and is used exactly.
    ``expanded=True`` (lab frame only) replaces it by its series through
    1/sqrt(N):  (Delta/2) sqrt(N)(c^dag + c) - Delta/(4 sqrt(N))(c^dag c^dag c + c^dag c c).
    """
    _check(params, spec)
    if frame not in FRAMES:
        raise ValidationError(f"frame must be one of {FRAMES}, got {frame!r}")
    if expanded and frame != "lab":
        raise ValidationError("the expanded series is only provided in the lab frame")
    c, m, sqrt_factor = _c_parts(spec)
    a = ladder(spec.n_max)
    eye_c = np.eye(spec.spin_dim)
    eye_f = np.eye(spec.field_dim)
    nc = np.diag(m)
    x_a = a + a.T
    w, g, delta, big_n = params.omega, params.g, params.delta, params.n_atoms
    drive = 0.5 * delta * math.sqrt(big_n)

    if frame == "lab":
        if expanded:
            spin_part = drive * (c.T + c) - delta / (4.0 * math.sqrt(big_n)) * (
                c.T @ c.T @ c + c.T @ c @ c
            )
        else:
            raise_op = c.T @ sqrt_factor
            spin_part = drive * (raise_op + raise_op.T)
        h = (
            w * np.kron(eye_c, a.T @ a)
            - big_n * g * np.kron(eye_c, x_a)
            + 2.0 * g * np.kron(nc, x_a)
            + np.kron(spin_part, eye_f)
        )
        return hermitian(h, spec)

    disp = displacement_matrix(params.eta, spec.n_max)
    raise_term = np.kron(c.T @ sqrt_factor, disp)
    diag_c = params.big_omega * m - 4.0 * g * g / w * m * m
    h = w * np.kron(eye_c, a.T @ a) + np.kron(np.diag(diag_c), eye_f)
    h = h + drive * (raise_term + raise_term.T)
    if frame == "polaron":
        h = h - big_n * g * np.kron(eye_c, x_a)
    else:
        h = h - (big_n * g) ** 2 / w * np.eye(spec.total_dim)
    return hermitian(h, spec)


def polaron_transform(params: ModelParams, spec: HilbertSpec,
                      allow_truncation: bool = False) -> OperatorMatrix:
    """U = exp((2g/omega) c^dag c (a^dag - a)), block-diagonal in c^dag c.

    ``U H U^dag`` reproduces the H' series.  Each c-sector block is a field
    displacement by ``eta * m``; it is built from the truncated generator, so
    U is exactly unitary on the truncated space.
    """
    _check(params, spec)
    top = spec.spin_dim - 1
    check_cutoff(spec.n_max, params.eta * top, allow_truncation)
    a = ladder(spec.n_max)
    w, v = np.linalg.eigh(1j * (a.T - a))
    u = np.zeros((spec.total_dim, spec.total_dim))
    fd = spec.field_dim
    for m in range(top + 1):
        block = ((v * np.exp(-1j * params.eta * m * w)[None, :]) @ v.conj().T).real
        u[m * fd:(m + 1) * fd, m * fd:(m + 1) * fd] = block
    return OperatorMatrix(u, False, spec)


def hprime_terms(params: ModelParams, spec: HilbertSpec,
                 allow_truncation: bool = False) -> dict[str, OperatorMatrix]:
    """The transformed series H'_0 .. H'_3 on the (c, field) space.

    H'_3 is taken with the coefficient Delta / (4 sqrt(N)) produced by the
    square-root expansion.  Field exponentials are truncated matrix
    exponentials.
    """
    _check(params, spec)
    top = spec.spin_dim - 1
    check_cutoff(spec.n_max, params.eta * top, allow_truncation)
    c, m, _ = _c_parts(spec)
    a = ladder(spec.n_max)
    eye_c = np.eye(spec.spin_dim)
    w, g, delta, big_n = params.omega, params.g, params.delta, params.n_atoms
    d_plus = truncated_displacement(params.eta, spec.n_max)
    d_minus = d_plus.T  # real orthogonal: D(-eta) = D(eta)^T
    h0 = (
        w * np.kron(eye_c, a.T @ a)
        - big_n * g * np.kron(eye_c, a + a.T)
        + params.big_omega * np.kron(np.diag(m), np.eye(spec.field_dim))
    )
    h1 = 0.5 * delta * math.sqrt(big_n) * (np.kron(c.T, d_plus) + np.kron(c, d_minus))
    h2 = -4.0 * g * g / w * np.kron(np.diag(m * m), np.eye(spec.field_dim))
    h3 = -delta / (4.0 * math.sqrt(big_n)) * (
        np.kron(c.T @ c.T @ c, d_plus) + np.kron(c.T @ c @ c, d_minus)
    )
    return {
        "H0p": hermitian(h0, spec),
        "H1p": hermitian(h1, spec),
        "H2p": hermitian(h2, spec),
        "H3p": hermitian(h3, spec),
    }


def interior_indices(params: ModelParams, spec: HilbertSpec, tail_tol: float = 1e-20) -> np.ndarray:
    """Basis indices whose polaron images stay clear of the Fock cutoff.

    Field level n is interior when exp(x (a^dag - a))|n>, for the largest
    displacement x = eta * (top c level), leaves weight below ``tail_tol`` on
    levels >= n_max - 1 (one ladder step of headroom).
    """
    shift = params.eta * (spec.spin_dim - 1)
    rows = 2 * spec.n_max + 64
    disp = _kernels.displacement_matrix(shift, rows, spec.field_dim)
    tails = np.sum(disp[spec.n_max - 1:, :] ** 2, axis=0)
    ok = tails < tail_tol
    n_int = int(np.argmin(ok)) - 1 if not ok.all() else spec.n_max
    if n_int < 0:
        raise CutoffError("no interior field levels at this cutoff")
    n = np.tile(np.arange(spec.field_dim), spec.spin_dim)
    return np.flatnonzero(n <= n_int)


def leading_energy(params: ModelParams, m: int, n: int) -> float:
    """E0_{mn} = m Omega + n omega - N^2 g^2 / omega."""
    return m * params.big_omega + n * params.omega - (params.n_atoms * params.g) ** 2 / params.omega


@dataclass(frozen=True)
class LeadingEigenpair:
    m: int
    n: int
    energy: float
    state: StateVector = field(repr=False)
    frame: str = "lab"


def leading_displacement(params: ModelParams, m: int, frame: str = "lab") -> float:
    if frame == "lab":
        return params.g / params.omega * (params.n_atoms - 2 * m)
    if frame == "polaron":
        return params.alpha
    if frame == "shifted":
        return 0.0
    raise ValidationError(f"frame must be one of {FRAMES}, got {frame!r}")


def leading_eigensystem(params: ModelParams, spec: HilbertSpec, m: int, n: int,
                        frame: str = "lab", allow_truncation: bool = False) -> LeadingEigenpair:
    """|m; n> = |m>_c exp((g/omega)(N - 2m)(a^dag - a)) |n> and its energy.

    In the lab frame this is an eigenstate of :func:`leading_hamiltonian`;
    ``frame="polaron"`` returns ``U |m; n>`` and ``frame="shifted"`` the bare
    Fock product.
    """
    _check(params, spec)
    if not 0 <= m < spec.spin_dim:
        raise ValidationError(f"c-boson number {m} outside 0..{spec.spin_dim - 1}")
    if not 0 <= n <= spec.n_max:
        raise ValidationError(f"field index {n} outside 0..{spec.n_max}")
    alpha = leading_displacement(params, m, frame)
    if alpha == 0.0:
        state = fock_state(spec, m, n)
    else:
        amps = displaced_number_amplitudes(alpha, n, spec.n_max, allow_truncation)
        state = product_state(spec, m, amps)
    return LeadingEigenpair(m, n, leading_energy(params, m, n), state, frame)


def leading_hamiltonian(params: ModelParams, spec: HilbertSpec, frame: str = "lab") -> OperatorMatrix:
    """The leading-order Hamiltonian whose eigenpairs are E0_{mn}, |m; n>.

    polaron frame: H'_0.  lab frame: U^dag H'_0 U, i.e. the Delta = 0 Dicke
    Hamiltonian plus (4 g^2/omega)(c^dag c)^2.  shifted frame: diagonal.
    """
    _check(params, spec)
    _, m, _ = _c_parts(spec)
    a = ladder(spec.n_max)
    eye_c = np.eye(spec.spin_dim)
    eye_f = np.eye(spec.field_dim)
    w, g, big_n = params.omega, params.g, params.n_atoms
    x_a = a + a.T
    h = w * np.kron(eye_c, a.T @ a)
    if frame == "lab":
        h = h - big_n * g * np.kron(eye_c, x_a) + 2.0 * g * np.kron(np.diag(m), x_a)
        h = h + 4.0 * g * g / w * np.kron(np.diag(m * m), eye_f)
    elif frame == "polaron":
        h = h - big_n * g * np.kron(eye_c, x_a) + params.big_omega * np.kron(np.diag(m), eye_f)
    elif frame == "shifted":
        h = h + params.big_omega * np.kron(np.diag(m), eye_f)
        h = h - (big_n * g) ** 2 / w * np.eye(spec.total_dim)
    else:
        raise ValidationError(f"frame must be one of {FRAMES}, got {frame!r}")
    return hermitian(h, spec)


@dataclass(frozen=True, eq=False)
class CorrectionLedger:
    """One Rayleigh-Schroedinger correction, first order in H'_order.

    ``state_delta`` is expressed in the shifted frame, where the unperturbed
    states |m'; n1> are Fock products; ``coefficients`` maps (m', n1) to the
    same amplitudes.
    """

    params: ModelParams
    m: int
    n: int
    order: int
    energy_shift: float
    state_delta: np.ndarray = field(repr=False)
    truncation_n1: int
    coefficients: dict = field(default_factory=dict, repr=False)

    @property
    def max_amplitude(self) -> float:
        return float(np.abs(self.state_delta).max(initial=0.0))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "m": self.m,
            "n": self.n,
            "order": self.order,
            "energy_shift": self.energy_shift,
            "truncation_n1": self.truncation_n1,
            "max_amplitude": self.max_amplitude,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _branch_sums(params, m, n, upper_weight, lower_weight, exclude_diagonal, tol):
    """Collect (m', n1) -> numerator * C / denominator for both c-branches."""
    eta = params.eta
    w, big_omega = params.omega, params.big_omega
    branches = []
    if upper_weight != 0.0:
        branches.append((m + 1, eta, -big_omega, upper_weight))
    if lower_weight != 0.0:
        branches.append((m - 1, -eta, big_omega, lower_weight))
    coeffs = {}
    last = 0
    for m_prime, x, offset, weight in branches:
        rows = max(64, 2 * (n + 1), int(math.ceil((math.sqrt(n) + abs(x)) ** 2 * 2)) + 16)
        while True:
            col = _kernels.displacement_matrix(x, rows, n + 1)[:, n]
            den = (n - np.arange(rows)) * w + offset
            terms = np.abs(weight * col) / np.maximum(np.abs(den), tol)
            big = np.flatnonzero(terms >= AMPLITUDE_FLOOR)
            stop = (big[-1] + 1) if big.size else 0
            if stop + 8 < rows:
                break
            rows *= 2
        # keep one term below the floor so the last kept term is < 1e-12
        stop = max(stop + 1, n + 1)
        last = max(last, stop - 1)
        for n1 in range(stop):
            if exclude_diagonal and n1 == n:
                continue
            if abs(den[n1]) <= tol:
                raise ResonanceError(
                    f"denominator {den[n1]:.3e} at (m'={m_prime}, n1={n1}); "
                    "non-degenerate perturbation theory does not apply"
                )
            coeffs[(m_prime, n1)] = weight * col[n1] / den[n1]
    return coeffs, last


def rs_corrections(params: ModelParams, spec: HilbertSpec, m: int, n: int, order: int,
                   resonance_tol: float | None = None,
                   exclude_diagonal: bool = False) -> CorrectionLedger:
    """Rayleigh-Schroedinger correction to |m; n> from the term H'_order.

    order 1: E = 0, state sum over |m+-1; n1> with denominators
             (n - n1) omega -+ Omega;
    order 2: E = -4 (g^2/omega) m^2, no state correction;
    order 3: E = 0, state sum weighted by m sqrt(m+1) and (m-1) sqrt(m).

    Sums run over every n1 (including n1 = n, which is not degenerate since
    the c-number changes); ``exclude_diagonal=True`` drops n1 = n.  The n1
    range grows until the last kept term is below 1e-12.
    """
    _check(params, spec)
    if order not in (1, 2, 3):
        raise ValidationError(f"order must be 1, 2 or 3, got {order!r}")
    if not 0 <= m < spec.spin_dim:
        raise ValidationError(f"c-boson number {m} outside 0..{spec.spin_dim - 1}")
    if not 0 <= n <= spec.n_max:
        raise ValidationError(f"field index {n} outside 0..{spec.n_max}")
    tol = 1e-6 * params.omega if resonance_tol is None else resonance_tol
    delta, big_n = params.delta, params.n_atoms
    delta_vec = np.zeros(spec.total_dim, dtype=float)
    has_upper = m + 1 < spec.spin_dim

    if order == 2:
        shift = -4.0 * params.g**2 / params.omega * m * m
        return CorrectionLedger(params, m, n, 2, shift, delta_vec, 0, {})

    if order == 1:
        pref = 0.5 * delta * math.sqrt(big_n)
        upper = pref * math.sqrt(m + 1) if has_upper else 0.0
        lower = pref * math.sqrt(m)
    else:
        pref = -delta / (4.0 * math.sqrt(big_n))
        upper = pref * m * math.sqrt(m + 1) if has_upper else 0.0
        lower = pref * (m - 1) * math.sqrt(m) if m >= 1 else 0.0

    coeffs, last = _branch_sums(params, m, n, upper, lower, exclude_diagonal, tol)
    for (m_prime, n1), amp in coeffs.items():
        if n1 > spec.n_max:
            if abs(amp) >= AMPLITUDE_FLOOR:
                raise CutoffError(
                    f"correction needs field level {n1} > n_max={spec.n_max}"
                )
            continue
        delta_vec[spec.index(m_prime, n1)] = amp
    return CorrectionLedger(params, m, n, order, 0.0, delta_vec, last, coeffs)
