"""Command-line front end: ``dicke-hp spectrum|evolve|sweep|audit``.

Configuration comes from an optional YAML key-value file (``--config``);
``--set KEY=VALUE`` and the dedicated flags override file values.  Exit codes:
0 ok, 2 validation error, 3 cutoff-audit failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import dynamics, experiments
from .errors import CutoffError, ResonanceError, SolverError, ValidationError
from .hilbert import (CatParams, HilbertSpec, ModelParams, cat_state, coherent_amplitudes,
                      coherent_state, product_state, required_cutoff)
from .hpx import hp_sx_hamiltonian
from .operators import diagonalize, dicke_hamiltonian

log = logging.getLogger("dicke_hp")

EXIT_OK, EXIT_VALIDATION, EXIT_AUDIT, EXIT_NUMERICAL = 0, 2, 3, 4
EXPERIMENTS = ("convergence_N", "convergence_g", "phase_transition")


@dataclass
class RunConfig:
    n_atoms: int = 4
    delta: float = 1.0
    omega: float = 1.0
    g: float | None = None
    lam: float | None = None
    n_max: int | str = "auto"
    k: int = 10
    initial: str = "vacuum"
    t_start: float = 0.0
    t_end: float | None = None
    steps: int = 65
    experiment: str | None = None
    values: list = field(default_factory=list)
    lambda_min: float = 0.3
    lambda_max: float = 0.9
    lambda_step: float = 0.005
    target: str = "spectrum"
    beta: float = 1.0
    workers: int = 1
    out: str | None = None
    format: str = "json"
    deterministic: bool = False

    # filled in by resolve()
    params: ModelParams | None = field(default=None, repr=False)

    def resolve(self) -> "RunConfig":
        if (self.g is None) == (self.lam is None):
            raise ValidationError("exactly one of 'g' and 'lambda' must be given")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if self.g is not None:
            self.params = ModelParams(int(self.n_atoms), float(self.delta), float(self.omega),
                                      float(self.g))
        else:
            self.params = ModelParams.from_lambda(int(self.n_atoms), float(self.delta),
                                                  float(self.omega), float(self.lam))
        if self.n_max != "auto":
            if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 1:
                raise ValidationError(f"n_max must be 'auto' or a positive integer, got {self.n_max!r}")
            self.n_max = int(self.n_max)
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError("steps must be a positive integer")
        return self

    def as_record(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "params"}
        d["lambda"] = d.pop("lam")
        if self.params is not None:
            d["g"] = self.params.g
            d["lambda"] = self.params.lam
            d["g_from"] = "g" if self.lam is None else "lambda"
        return d


_KEY_ALIASES = {"lambda": "lam", "N": "n_atoms", "n-atoms": "n_atoms", "n-max": "n_max"}
_FIELDS = {f.name for f in dataclasses.fields(RunConfig)} - {"params"}


def _apply(cfg: RunConfig, mapping: dict, source: str) -> None:
    for key, value in mapping.items():
        name = _KEY_ALIASES.get(key, key).replace("-", "_")
        if name not in _FIELDS:
            raise ValidationError(f"unknown config key {key!r} in {source}")
        setattr(cfg, name, value)


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a key-value mapping")
        _apply(cfg, data, args.config)
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        overrides[key.strip()] = yaml.safe_load(raw)
    _apply(cfg, overrides, "--set")
    flags = {
        "n_atoms": args.n_atoms, "delta": args.delta, "omega": args.omega, "g": args.g,
        "lam": args.lam, "n_max": args.n_max, "out": args.out, "format": args.format,
    }
    _apply(cfg, {k: v for k, v in flags.items() if v is not None}, "flags")
    if args.deterministic:
        cfg.deterministic = True
    return cfg.resolve()


def _header(cfg: RunConfig) -> dict:
    head = {"config": cfg.as_record()}
    if not cfg.deterministic:
        head["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return head


def _csv_header(cfg: RunConfig, extra: dict | None = None) -> list[str]:
    lines = [f"{k}={json.dumps(v, sort_keys=True)}" for k, v in _header(cfg).items()]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={json.dumps(v, sort_keys=True)}")
    return lines


def _write(cfg: RunConfig, text: str, default_name: str) -> Path | None:
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(text)
        return None
    path = Path(cfg.out)
    if cfg.out.endswith("/") or path.is_dir():
        path.mkdir(parents=True, exist_ok=True)
        path = path / f"{default_name}.{cfg.format}"
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _timestamp(cfg: RunConfig) -> str | None:
    if cfg.deterministic:
        return None
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")


# -- spectrum ------------------------------------------------------------------

def _spectrum_cutoff(cfg: RunConfig) -> int:
    if cfg.n_max != "auto":
        return cfg.n_max
    p = cfg.params
    return required_cutoff(p.alpha + math.sqrt(cfg.k))


def _lowest(params: ModelParams, n_max: int, k: int):
    spec = HilbertSpec(params.n_atoms, n_max)
    kk = min(k, spec.total_dim)
    return diagonalize(dicke_hamiltonian(params, spec), kk), spec


def cmd_spectrum(cfg: RunConfig) -> int:
    n_max = _spectrum_cutoff(cfg)
    result, spec = _lowest(cfg.params, n_max, cfg.k)
    audit = experiments.cutoff_audit(
        lambda m: _lowest(cfg.params, m, cfg.k)[0].eigenvalues, n_max, "spectrum")
    if cfg.format == "json":
        body = {**_header(cfg), **result.to_dict(cfg.params, spec), "audit": audit.to_dict()}
        text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    else:
        lines = _csv_header(cfg, {"spec": spec.to_dict(), "residual": result.residual,
                                  "audit": audit.to_dict()})
        rows = [f"{i},{format(float(e), '.17g')}" for i, e in enumerate(result.eigenvalues)]
        text = "".join(f"# {l}\n" for l in lines) + "index,eigenvalue\n" + "\n".join(rows) + "\n"
    _write(cfg, text, "spectrum")
    if not audit.passed:
        log.error("cutoff audit failed: eigenvalues moved by %.3e", audit.change)
        return EXIT_AUDIT
    return EXIT_OK


# -- evolve --------------------------------------------------------------------

def parse_initial(text: str):
    """'vacuum' | 'coherent:BETA' | 'cat:GAMMA,PHI' -> (kind, payload)."""
    text = text.strip()
    if text == "vacuum":
        return "vacuum", 0j
    kind, _, arg = text.partition(":")
    try:
        if kind == "coherent":
            return "coherent", complex(arg.replace(" ", ""))
        if kind == "cat":
            gamma, phi = (float(v) for v in arg.split(","))
            return "cat", CatParams(gamma, phi)
    except ValueError as exc:
        raise ValidationError(f"cannot parse initial state {text!r}") from exc
    raise ValidationError(f"initial state must be vacuum, coherent:BETA or cat:GAMMA,PHI; got {text!r}")


def cmd_evolve(cfg: RunConfig) -> int:
    p = cfg.params
    kind, payload = parse_initial(cfg.initial)
    reach0 = payload.gamma if kind == "cat" else abs(payload)
    n_max = cfg.n_max if cfg.n_max != "auto" else required_cutoff(2.0 * p.alpha + reach0)
    spec = HilbertSpec(p.n_atoms, n_max)
    if kind == "cat":
        psi0 = cat_state(spec, payload)
    else:
        psi0 = coherent_state(spec, payload)
    t_end = cfg.t_end if cfg.t_end is not None else 2.0 * math.pi / p.omega
    grid = dynamics.TimeGrid(cfg.t_start, t_end, cfg.steps)
    h = hp_sx_hamiltonian(p, spec, frame="lab")
    exact = dynamics.evolve_exact(h, psi0, grid)
    t = exact.times
    cols = dict(exact.columns)
    quad = np.array([dynamics.quadratures(s) for s in exact.states])
    cols["x"], cols["p"] = quad[:, 0], quad[:, 1]
    if kind == "cat":
        analytic = dynamics.cat_evolution(p, payload, grid, spec)
        for name in ("phi1", "phi2", "xi", "branch_distance", "macro_ratio"):
            cols[name] = analytic.columns[name]
        ref = analytic.states
    else:
        centers, phases = dynamics.branch_evolution(p, payload, t)
        cols["beta_re"], cols["beta_im"] = centers.real, centers.imag
        cols["xi"] = dynamics.qamp_xi(p, t)
        cols["photon_number_analytic"] = np.abs(centers) ** 2
        ref = [product_state(spec, 0, np.exp(1j * ph) * coherent_amplitudes(c, n_max, True))
               for c, ph in zip(centers, phases)]
    cols["leading_fidelity"] = np.array([dynamics.fidelity(a, b) for a, b in zip(ref, exact.states)])
    series = dynamics.TimeSeries(t, cols)
    if cfg.format == "json":
        text = json.dumps({**_header(cfg), "spec": spec.to_dict(), **series.to_dict()},
                          indent=2, sort_keys=True) + "\n"
    else:
        text = series.to_csv(_csv_header(cfg, {"spec": spec.to_dict()}))
    _write(cfg, text, f"evolve-{kind}")
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

def cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.params
    if cfg.experiment not in EXPERIMENTS:
        raise ValidationError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if not cfg.values:
        raise ValidationError("sweep needs a non-empty 'values' list")
    pinned = None if cfg.n_max == "auto" else cfg.n_max
    if cfg.experiment == "convergence_N":
        result = experiments.convergence_in_N(p, cfg.values, cfg.workers, pinned)
    elif cfg.experiment == "convergence_g":
        result = experiments.convergence_in_g(p, cfg.values, cfg.workers, pinned)
    else:
        grid = np.arange(cfg.lambda_min, cfg.lambda_max + 0.5 * cfg.lambda_step, cfg.lambda_step)
        result = experiments.phase_transition_scan(p.delta, p.omega, grid, cfg.values, cfg.workers)
    if cfg.format == "json":
        text = json.dumps({**_header(cfg), **result.to_dict()}, indent=2, sort_keys=True) + "\n"
    else:
        fits = {"fit": None if result.fit is None else result.fit.to_dict(),
                "fit_drop_first": None if result.fit_drop_first is None
                else result.fit_drop_first.to_dict()}
        text = result.to_csv(_csv_header(cfg, fits))
    _write(cfg, text, result.filename(_timestamp(cfg)))
    if result.warnings:
        log.warning("%d sweep point(s) failed the cutoff audit and were excluded from fits",
                    result.warnings)
    return EXIT_OK


# -- audit ---------------------------------------------------------------------

def cmd_audit(cfg: RunConfig) -> int:
    p = cfg.params
    if cfg.target == "coherent":
        n_max = cfg.n_max if cfg.n_max != "auto" else required_cutoff(cfg.beta)

        def metric(m):
            amps = coherent_amplitudes(cfg.beta, m, allow_truncation=True)
            return float(np.sum(np.abs(amps) ** 2 * np.arange(m + 1)))

        audit = experiments.cutoff_audit(metric, n_max, "spectrum")
    elif cfg.target == "spectrum":
        n_max = _spectrum_cutoff(cfg)
        audit = experiments.cutoff_audit(
            lambda m: _lowest(p, m, cfg.k)[0].eigenvalues, n_max, "spectrum")
    elif cfg.target == "qamp":
        n_max = cfg.n_max if cfg.n_max != "auto" else required_cutoff(2.0 * p.alpha)
        grid = dynamics.TimeGrid.periods(p.omega, 1.0, cfg.steps)

        def metric(m):
            spec = HilbertSpec(p.n_atoms, m)
            ex = dynamics.evolve_exact(hp_sx_hamiltonian(p, spec), coherent_state(spec, 0), grid)
            fids = [dynamics.fidelity(dynamics.qamp_state(p, spec, t, allow_truncation=True), s)
                    for t, s in zip(grid.samples, ex.states)]
            return min(fids)

        audit = experiments.cutoff_audit(metric, n_max, "fidelity")
    else:
        raise ValidationError(f"audit target must be coherent, spectrum or qamp; got {cfg.target!r}")
    body = {**_header(cfg), "target": cfg.target, "audit": audit.to_dict()}
    _write(cfg, json.dumps(body, indent=2, sort_keys=True) + "\n", f"audit-{cfg.target}")
    return EXIT_OK if audit.passed else EXIT_AUDIT


COMMANDS = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "sweep": cmd_sweep, "audit": cmd_audit}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML key-value config file")
    common.add_argument("--out", help="output file or directory (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--deterministic", action="store_true",
                        help="omit timestamps so identical configs give identical files")
    common.add_argument("--n-atoms", type=int, dest="n_atoms")
    common.add_argument("--delta", type=float)
    common.add_argument("--omega", type=float)
    common.add_argument("--g", type=float)
    common.add_argument("--lambda", type=float, dest="lam")
    common.add_argument("--n-max", dest="n_max", type=_n_max_arg)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="dicke-hp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return ap


def _n_max_arg(text: str):
    return text if text == "auto" else int(text)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (ValidationError, CutoffError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (ResonanceError, SolverError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
