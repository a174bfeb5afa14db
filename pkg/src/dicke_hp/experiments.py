"""Parameter sweeps that measure how the leading-order solution converges.

Ground-state and dynamics studies run in the shifted polaron frame (see
:mod:`dicke_hp.hpx`) restricted to the single-well sector ``c^dag c <= N/2``.
The full c-ladder also contains the mirror well around S_x = +N/2; its
ground state is degenerate with ours up to an exponentially small tunnel
splitting, so the exact eigenvector there is an arbitrary mixture of the two
wells.  The expansion is about one well, and so are these studies.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy import stats

from . import _kernels
from .dynamics import TimeGrid, evolve_leading
from .errors import ValidationError
from .hilbert import HilbertSpec, ModelParams, required_cutoff
from .hpx import hp_sx_hamiltonian
from .operators import critical_coupling, dicke_hamiltonian

SPECTRUM_TOL = 1e-8
FIDELITY_TOL = 1e-6


@dataclass(frozen=True)
class AuditResult:
    passed: bool
    n_max: int
    n_max_doubled: int
    change: float
    tol: float
    tail_weight: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def cutoff_audit(compute: Callable, n_max: int, kind: str = "spectrum",
                 tol: float | None = None) -> AuditResult:
    """Recompute ``compute(n_max)`` at ``2 * n_max`` and compare.

    ``compute`` returns a scalar or array metric, or a ``(metric, state)``
    pair; with a state the weight in its top two Fock levels is recorded.
    Passes when the metric moves by less than 1e-8 (``kind="spectrum"``) or
    1e-6 (``kind="fidelity"``).
    """
    if tol is None:
        tol = {"spectrum": SPECTRUM_TOL, "fidelity": FIDELITY_TOL}.get(kind)
        if tol is None:
            raise ValidationError(f"unknown audit kind {kind!r}")
    first = compute(n_max)
    second = compute(2 * n_max)
    tail = None
    if isinstance(first, tuple):
        first, state = first
        second = second[0]
        grid = state.as_grid()
        tail = float(np.sum(np.abs(grid[:, -2:]) ** 2))
    a = np.atleast_1d(np.asarray(first, dtype=float))
    b = np.atleast_1d(np.asarray(second, dtype=float))
    k = min(a.size, b.size)
    change = float(np.abs(a[:k] - b[:k]).max()) if k else 0.0
    return AuditResult(bool(change < tol), int(n_max), int(2 * n_max), change, tol, tail)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    ci_low: float
    ci_high: float
    prefactor: float
    n_points: int

    def to_dict(self) -> dict:
        # strict JSON has no infinities; a two-point fit has no error bar
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


def power_law_fit(x, y, confidence: float = 0.95) -> PowerLawFit:
    """Least squares of log y on log x; CI from the t distribution."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValidationError("a power-law fit needs at least two points")
    lx, ly = np.log(x), np.log(y)
    if x.size == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return PowerLawFit(float(slope), math.inf, -math.inf, math.inf,
                           float(math.exp(ly[0] - slope * lx[0])), 2)
    res = stats.linregress(lx, ly)
    half = stats.t.ppf(0.5 + confidence / 2, x.size - 2) * res.stderr
    return PowerLawFit(float(res.slope), float(res.stderr), float(res.slope - half),
                       float(res.slope + half), float(math.exp(res.intercept)), int(x.size))


@dataclass
class SweepPoint:
    value: float
    metrics: dict
    audit: AuditResult


@dataclass
class SweepResult:
    experiment: str
    axis: str
    points: list
    fit: PowerLawFit | None = None
    fit_drop_first: PowerLawFit | None = None
    table: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points.sort(key=lambda p: p.value)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def metric(self, name: str) -> np.ndarray:
        return np.array([p.metrics[name] for p in self.points])

    @property
    def warnings(self) -> int:
        return sum(not p.audit.passed for p in self.points)

    def rows(self) -> list[dict]:
        out = []
        for p in self.points:
            row = {self.axis: p.value}
            row.update(p.metrics)
            row["audit_passed"] = p.audit.passed
            row["audit_change"] = p.audit.change
            out.append(row)
        return out

    def to_csv(self, header: list[str] | None = None) -> str:
        rows = self.rows()
        buf = io.StringIO()
        for line in header or []:
            buf.write(f"# {line}\n")
        if not rows:
            return buf.getvalue()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(rows[0])
        writer.writerow(names)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in names])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "axis": self.axis,
            "rows": [{k: _jsonable(v) for k, v in r.items()} for r in self.rows()],
            "fit": None if self.fit is None else self.fit.to_dict(),
            "fit_drop_first": None if self.fit_drop_first is None else self.fit_drop_first.to_dict(),
            "table": [{k: _jsonable(v) for k, v in r.items()} for r in self.table],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def filename(self, timestamp: str | None = None) -> str:
        stem = f"{self.experiment}-{self.axis}"
        return stem if timestamp is None else f"{stem}-{timestamp}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fit_pair(points, metric):
    good = [p for p in points if p.audit.passed and p.metrics[metric] > 0]
    if len(good) < 2:
        return None, None
    x = [p.value for p in good]
    y = [p.metrics[metric] for p in good]
    fit = power_law_fit(x, y)
    drop = power_law_fit(x[1:], y[1:]) if len(good) > 2 else None
    return fit, drop


# -- ground state of the single-well sector ---------------------------------

def single_well_spec(params: ModelParams, n_max: int) -> HilbertSpec:
    return HilbertSpec(params.n_atoms, n_max, params.n_atoms // 2)


def shifted_frame_cutoff(params: ModelParams) -> int:
    """Fock cutoff for the shifted frame: two c-quanta worth of displacement."""
    return max(16, required_cutoff(2.0 * params.eta))


def ground_infidelity(params: ModelParams, n_max: int | None = None) -> tuple[float, float]:
    """(1 - |<0;0|ground>|^2, ground energy) in the single-well sector."""
    n_max = shifted_frame_cutoff(params) if n_max is None else n_max
    spec = single_well_spec(params, n_max)
    h = hp_sx_hamiltonian(params, spec, frame="shifted").entries
    vals, vecs = sla.eigh(h, subset_by_index=[0, 0])
    overlap = abs(vecs[spec.index(0, 0), 0]) ** 2
    return float(max(0.0, 1.0 - overlap)), float(vals[0])


def _infidelity_point(args):
    params, n_max = args
    n_max = shifted_frame_cutoff(params) if n_max is None else int(n_max)
    infid, energy = ground_infidelity(params, n_max)
    audit = cutoff_audit(lambda k: ground_infidelity(params, k)[0], n_max, "fidelity")
    metrics = {"infidelity": infid, "ground_energy": energy, "n_max": n_max,
               "audit_passed": audit.passed}
    return metrics, audit


def _infidelity_sweep(name, axis, param_list, values, workers, n_max):
    results = _map(_infidelity_point, [(p, n_max) for p in param_list], workers)
    points = [SweepPoint(float(v), m, a) for v, (m, a) in zip(values, results)]
    fit, drop = _fit_pair(sorted(points, key=lambda p: p.value), "infidelity")
    return SweepResult(name, axis, points, fit, drop,
                       meta={"base": param_list[0].to_dict(), "frame": "shifted",
                             "sector": "single-well"})


def convergence_in_N(base: ModelParams, n_list, workers: int = 1,
                     n_max: int | None = None) -> SweepResult:
    """Ground-state infidelity against |0;0> as the atom number grows.

    ``n_max`` pins the Fock cutoff for every point instead of the per-point
    automatic choice; points whose audit then fails are flagged and left out
    of the fits.
    """
    n_list = sorted(int(n) for n in n_list)
    plist = [base.replace(n_atoms=n) for n in n_list]
    return _infidelity_sweep("convergence", "N", plist, n_list, workers, n_max)


def convergence_in_g(base: ModelParams, g_list, workers: int = 1,
                     n_max: int | None = None) -> SweepResult:
    """Ground-state infidelity against |0;0> as the coupling grows at fixed N."""
    g_list = sorted(float(g) for g in g_list)
    plist = [base.replace(g=g) for g in g_list]
    return _infidelity_sweep("convergence", "g", plist, g_list, workers, n_max)


# -- phase transition ---------------------------------------------------------

def scan_cutoff(n_atoms: int, lam_max: float, omega: float) -> int:
    return required_cutoff(math.sqrt(n_atoms) * lam_max / omega)


def _even_parity_ground(params: ModelParams, n_max: int):
    spec = HilbertSpec(params.n_atoms, n_max)
    h = dicke_hamiltonian(params, spec).entries
    s = np.repeat(np.arange(spec.spin_dim), spec.field_dim)
    n = np.tile(np.arange(spec.field_dim), spec.spin_dim)
    idx = np.flatnonzero((s + n) % 2 == 0)
    vals, vecs = sla.eigh(h[np.ix_(idx, idx)], subset_by_index=[0, 0])
    psi = np.zeros(spec.total_dim)
    psi[idx] = vecs[:, 0]
    prob = psi**2
    photons = float(prob @ n)
    sz = float(prob @ (s - params.n_atoms / 2.0))
    return float(vals[0]), photons, sz


def _scan_one(args):
    n_atoms, delta, omega, lambdas = args
    n_max = scan_cutoff(n_atoms, max(lambdas), omega)
    rows = []
    for lam in lambdas:
        p = ModelParams.from_lambda(n_atoms, delta, omega, lam)
        e, photons, sz = _even_parity_ground(p, n_max)
        rows.append({"N": n_atoms, "lambda": float(lam), "energy_per_atom": e / n_atoms,
                     "photons_per_atom": photons / n_atoms, "sz_per_atom": sz / n_atoms})
    energy = np.array([r["energy_per_atom"] for r in rows])
    h = float(lambdas[1] - lambdas[0])
    curvature = -_kernels.second_difference(energy, h)
    k = int(np.argmax(curvature))
    if k == 0 or k == curvature.size - 1:
        raise ValidationError(
            f"lambda grid too coarse or too narrow to bracket the curvature peak for N={n_atoms}"
        )
    y0, y1, y2 = curvature[k - 1:k + 2]
    offset = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
    lam_star = float(lambdas[k + 1] + offset * h)

    # audit at the grid point nearest the peak
    lam_peak = float(lambdas[k + 1])
    p = ModelParams.from_lambda(n_atoms, delta, omega, lam_peak)
    audit = cutoff_audit(lambda m: _even_parity_ground(p, m)[0], n_max, "spectrum")
    lam_c = critical_coupling(delta, omega)
    metrics = {"lambda_star": lam_star, "shift": abs(lam_star - lam_c), "lambda_c": lam_c,
               "peak_curvature": float(curvature[k]), "n_max": n_max,
               "audit_passed": audit.passed}
    return metrics, audit, rows


def phase_transition_scan(delta: float, omega: float, lambda_grid, n_list,
                          workers: int = 1) -> SweepResult:
    """Ground energy per atom across lambda; pseudo-critical lambda*(N).

    lambda*(N) is the maximum of -d^2(E0/N)/dlambda^2 (the ground energy is
    concave in lambda), located by finite differences on the uniform grid and
    refined by a three-point parabola.  Ground states are taken in the even
    parity sector, which holds the ground state at every finite N.
    """
    lambdas = np.asarray(lambda_grid, dtype=float)
    if lambdas.size < 5 or not np.allclose(np.diff(lambdas), lambdas[1] - lambdas[0]):
        raise ValidationError("lambda_grid must be uniform with at least 5 points")
    n_list = sorted(int(n) for n in n_list)
    results = _map(_scan_one, [(n, delta, omega, lambdas) for n in n_list], workers)
    points, table = [], []
    for n, (metrics, audit, rows) in zip(n_list, results):
        points.append(SweepPoint(float(n), metrics, audit))
        table.extend(rows)
    return SweepResult("phase_transition", "N", points, table=table,
                       meta={"delta": delta, "omega": omega,
                             "lambda_grid": [float(x) for x in lambdas]})


# -- leading-order dynamics versus exact --------------------------------------

def dynamics_deficit(params: ModelParams, coefficients: dict, grid: TimeGrid,
                     n_max: int | None = None) -> float:
    """Mean over ``grid`` of 1 - |<psi_leading(t)|psi_exact(t)>|^2.

    Both evolutions run in the shifted frame on the single-well sector;
    ``coefficients`` maps (m, n) to amplitudes of the initial |m; n> mixture.
    """
    n_max = shifted_frame_cutoff(params) if n_max is None else n_max
    spec = single_well_spec(params, n_max)
    lead = evolve_leading(params, spec, coefficients, grid, frame="shifted")
    h = hp_sx_hamiltonian(params, spec, frame="shifted").entries
    vals, vecs = np.linalg.eigh(h)
    psi0 = lead.states[0].amplitudes
    c = vecs.T @ psi0
    block = vecs @ (c[:, None] * np.exp(-1j * np.outer(vals, grid.samples)))
    deficits = [1.0 - abs(np.vdot(s.amplitudes, block[:, k])) ** 2
                for k, s in enumerate(lead.states)]
    return float(np.mean(deficits))


def deficit_sweep(base: ModelParams, axis: str, values, coefficients: dict,
                  periods: float = 1.0, steps: int = 65) -> SweepResult:
    """dynamics_deficit along N or g; the grid spans ``periods`` field periods."""
    if axis not in ("N", "g"):
        raise ValidationError("axis must be 'N' or 'g'")
    points = []
    for v in values:
        p = base.replace(n_atoms=int(v)) if axis == "N" else base.replace(g=float(v))
        grid = TimeGrid.periods(p.omega, periods, steps)
        n_max = shifted_frame_cutoff(p)
        d = dynamics_deficit(p, coefficients, grid, n_max)
        audit = cutoff_audit(lambda k: dynamics_deficit(p, coefficients, grid, k), n_max,
                             "fidelity")
        points.append(SweepPoint(float(v), {"deficit": d, "n_max": n_max,
                                            "audit_passed": audit.passed}, audit))
    fit, drop = _fit_pair(sorted(points, key=lambda q: q.value), "deficit")
    return SweepResult("deficit", axis, points, fit, drop, meta={"base": base.to_dict()})
