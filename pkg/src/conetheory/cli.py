"""Scenario runner: ``conetheory <scenario> [options]`` or ``conetheory run --config file.ini``.

Every scenario writes ``report.json`` (numbers with 17 significant digits, no
timing, so repeated serial runs are byte-identical) and ``timing.json`` into the
output directory, plus CSV tables where relevant. Exit status: 0 when every
check passes, 1 when a check fails, 2 on malformed input.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from ._linalg import matrix_to_json
from .errors import InputError, NumericError, PreconditionError, TruncationWarning, ValidationError

STOCHASTIC = {"decohere", "jordan-check", "moment-demo", "full-suite"}


class ConfigError(InputError):
    pass


# --------------------------------------------------------------------------- JSON


def _encode(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number, type(None))) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [inner + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits (exact double round trip)."""
    return _encode(obj, indent, 0) + "\n"


# --------------------------------------------------------------------------- config


@dataclass
class Param:
    kind: Callable
    default: object
    help: str = ""


@dataclass
class Scenario:
    name: str
    description: str
    params: dict
    runner: Callable


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict = field(default_factory=dict)
    seed: int | None = None
    output_dir: Path = Path("out")
    serial: bool = False

    def resolved(self) -> dict:
        spec = SCENARIOS[self.scenario].params
        unknown = set(self.parameters) - set(spec)
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.scenario}: {', '.join(sorted(unknown))}")
        out = {}
        for key, p in spec.items():
            raw = self.parameters.get(key, p.default)
            try:
                out[key] = None if raw is None else p.kind(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"parameter {key}={raw!r}: {exc}") from exc
        return out


def _seed(text) -> int:
    val = int(text)
    if not 0 <= val < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return val


def read_config(path: Path) -> ScenarioConfig:
    """Parse an INI file with a single ``[scenario]`` section.

    Reserved keys are ``name``, ``seed``, ``out`` and ``serial``; everything else
    is a scenario parameter and is validated against the scenario's table.
    """
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    extra = [s for s in parser.sections() if s != "scenario"]
    if extra or "scenario" not in parser:
        raise ConfigError(f"{path}: expected exactly one [scenario] section, found {parser.sections()}")
    sec = dict(parser["scenario"])
    name = sec.pop("name", None)
    if name is None:
        raise ConfigError(f"{path}: [scenario] needs a 'name' key")
    if name not in SCENARIOS:
        raise ConfigError(f"{path}: unknown scenario {name!r}")
    lines = {ln.split("=", 1)[0].strip(): i + 1 for i, ln in enumerate(text.splitlines()) if "=" in ln}
    for key in sec:
        if key not in SCENARIOS[name].params and key not in ("seed", "out", "serial"):
            raise ConfigError(f"{path}:{lines.get(key, '?')}: unknown key {key!r} for scenario {name}")
    try:
        seed = _seed(sec.pop("seed")) if "seed" in sec else None
    except ValueError as exc:
        raise ConfigError(f"{path}:{lines.get('seed', '?')}: {exc}") from exc
    out = Path(sec.pop("out", "out"))
    serial = sec.pop("serial", "false").strip().lower() in ("1", "true", "yes")
    return ScenarioConfig(name, sec, seed, out, serial)


def read_matrix_csv(path: str) -> np.ndarray:
    """Rows of complex literals (``1``, ``0.5-0.5j``)."""
    try:
        with open(path, newline="") as fh:
            rows = [[complex(c.strip().replace(" ", "")) for c in row] for row in csv.reader(fh) if row]
    except OSError as exc:
        raise InputError(f"cannot read matrix file {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InputError(f"{path}: matrix must be square")
    m = np.array(rows)
    return m.real.copy() if not np.any(m.imag) else m


def _matrix_param(value: str | None, default: np.ndarray) -> np.ndarray:
    if value is None:
        return default
    if value.startswith("diag:"):
        try:
            return np.diag([float(v) for v in value[5:].split(",")])
        except ValueError as exc:
            raise InputError(f"cannot parse {value!r}: {exc}") from exc
    return read_matrix_csv(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])


# --------------------------------------------------------------------------- scenarios


def _run_born(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .decoherence import born_probabilities
    from .statespace import DensityState, Generator

    h = _matrix_param(p["hamiltonian"], np.diag([0.0, 1.0]))
    n = h.shape[0]
    if p["state"] in (None, "plus"):
        k = DensityState(np.full((n, n), 1.0 / n))
    else:
        k = DensityState(read_matrix_csv(p["state"]))
    table = born_probabilities(Generator(h), k)
    probs = table.probabilities
    checks = {
        "sum_to_one": abs(float(probs.sum()) - 1) <= 1e-10,
        "nonnegative": bool(probs.min() >= -1e-12),
    }
    data = {"labels": table.labels, "probabilities": probs, "state": matrix_to_json(k.matrix)}
    return checks, data


def _run_decohere(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .decoherence import AdiabaticFamily, EnsembleSpec, ensemble_average
    from .statespace import DensityState

    n = p["dim"]
    h = _matrix_param(p["hamiltonian"], np.diag(np.arange(n, dtype=float)))
    n = h.shape[0]
    k0 = DensityState(np.full((n, n), 1.0 / n))
    fam = AdiabaticFamily(h, g0=p["g0"], a=p["a"])
    spec = EnsembleSpec(p["n_paths"], p["scale"], cfg.seed, p["mode"])
    workers = 1 if cfg.serial else p["workers"]
    res = ensemble_average(fam, spec, k0, n_workers=workers)
    diag_err = float(np.abs(np.diag(res.mean) - np.diag(k0.matrix)).max())
    checks = {"mean_offdiag_abs<=threshold": res.mean_offdiag_abs <= p["threshold"]}
    if spec.mode == "adiabatic_formula":
        checks["diagonal_exact"] = diag_err <= 1e-12
    else:
        checks["diagonal_drift<=5a"] = diag_err <= 5 * p["a"]
    return checks, res.report()


def _run_jordan(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .jordan import algebra_from_name
    from .jordan.checks import identity_residuals, passes

    alg = algebra_from_name(p["kind"])
    if p["samples"] < 1:
        raise InputError("samples must be positive")
    res = identity_residuals(alg, p["samples"], np.random.default_rng(cfg.seed))
    return passes(res), {"kind": alg.name, "dim": alg.dim, "residuals": res}


def _run_moment(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .momentmap import (
        ClassicalEnsemble,
        CoadjointOrbit,
        equivalence_check,
        flow_consistency,
        majorized,
        nu,
        robust_modes_on_orbit,
    )
    from ._linalg import random_hermitian

    rng = np.random.default_rng(cfg.seed)
    orbit = CoadjointOrbit.parse(p["orbit"]) if p["orbit"] else CoadjointOrbit((1.0, 0.0), (1, p["n"] - 1))
    if orbit.n != p["n"]:
        raise InputError(f"orbit multiplicities sum to {orbit.n}, expected n = {p['n']}")
    size = p["points"]

    def ensemble():
        w = rng.dirichlet(np.ones(size))
        return ClassicalEnsemble(tuple(w), tuple(orbit.random_point(rng) for _ in range(size)))

    rho1, rho2 = ensemble(), ensemble()
    w, v = np.linalg.eigh(nu(rho1))
    rho1b = rho1.transform((v * np.exp(1.7j * w)) @ v.conj().T)  # same nu, moved points
    same = equivalence_check(rho1, rho1b)
    diff = equivalence_check(rho1, rho2)
    x = random_hermitian(orbit.n, rng)
    try:
        times = [float(t) for t in p["times"].split(",")]
    except ValueError as exc:
        raise InputError(f"times must be a comma-separated list, got {p['times']!r}") from exc
    flows = [flow_consistency(x, rho1, t) for t in times]
    modes = robust_modes_on_orbit(np.diag(np.arange(orbit.n, dtype=float)), orbit)
    checks = {
        "nu_majorized": majorized(nu(rho1), orbit),
        "same_nu_equivalent": same.equivalent,
        "different_nu_distinct": not diff.equivalent and diff.gap > 1e-8,
        "flow_consistency": max(flows) <= 1e-9,
    }
    data = {
        "orbit": {"eigenvalues": orbit.eigenvalues, "multiplicities": orbit.multiplicities},
        "nu": matrix_to_json(nu(rho1)),
        "same_nu_distance": same.distance,
        "different_nu_distance": diff.distance,
        "witness": matrix_to_json(diff.witness) if diff.witness is not None else None,
        "witness_gap": diff.gap,
        "flow_times": times,
        "flow_residuals": flows,
        "robust_mode_count": len(modes),
    }
    return checks, data


def _alpha_grid(path: str | None) -> np.ndarray:
    if path is None:
        r = np.array([0.25, 0.5, 1.0])
        return np.concatenate([[0.0]] + [r * np.exp(1j * ph) for ph in (0.0, np.pi / 3, 2.0)])
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].strip().startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read alpha grid {path}: {exc}") from exc
    out = []
    for row in rows:
        try:
            out.append(complex(float(row[0]), float(row[1]) if len(row) > 1 else 0.0))
        except ValueError:
            if out or len(rows) == 1:
                raise InputError(f"{path}: bad alpha row {row}")
            continue  # header line
    return np.array(out)


def _run_lfunc(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .lfunc import StateFamily, TruncatedFock, hbar_scan, l_evolution_check, l_functional

    fam = StateFamily.parse(p["state"])
    grid = _alpha_grid(p["alpha_grid"])
    fock = TruncatedFock(p["dim"], p["hbar"])
    k = fam.state(fock)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        vals = np.array([l_functional(k, al, fock) for al in grid])
        evo, _ = l_evolution_check(k, p["omega"], p["t"], grid, fock)
    ref = fam.classical(grid)
    resid = np.abs(vals - ref)
    hbars = [p["hbar"] / 2**j for j in range(4)]
    rows = hbar_scan(fam, grid, hbars, dim=max(p["dim"], 256))
    scan = [r.residual for r in rows if r.valid]
    checks = {
        "evolution_rotation": evo <= 1e-6,
        "hbar_scan_rows_valid": all(r.valid for r in rows),
        "hbar_scan_monotone": all(b <= a + 1e-15 for a, b in zip(scan, scan[1:])),
    }
    if fam.kind == "coherent":
        checks["coherent_closed_form"] = bool(resid.max() <= 1e-8)
    if cfg.output_dir is not None:
        _write_csv(
            cfg.output_dir / "lfunc.csv",
            ["alpha_re", "alpha_im", "L_re", "L_im", "residual"],
            zip(grid.real, grid.imag, vals.real, vals.imag, resid),
        )
    data = {
        "family": fam.kind,
        "hbar": p["hbar"],
        "dim": p["dim"],
        "max_residual_vs_classical": float(resid.max()),
        "evolution_residual": evo,
        "truncation_warnings": len(caught),
        "hbar_scan": {
            "dim": max(p["dim"], 256),
            "hbar": hbars,
            "residual": [r.residual for r in rows],
            "valid": [r.valid for r in rows],
        },
    }
    return checks, data


def _run_dispersion(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .excitations import (
        ElementarySpace,
        Wavepacket,
        bump,
        essential_support_check,
        parse_dispersion,
        position_density,
        time_translate,
    )

    try:
        lo, hi = (float(v) for v in p["support"].split(":"))
    except ValueError as exc:
        raise InputError(f"support must look like lo:hi, got {p['support']!r}") from exc
    space = ElementarySpace(parse_dispersion(p["eps"]), n_k=p["grid"], k_max=p["kmax"])
    phi = Wavepacket(space, bump(space.k_grid, lo, hi))
    res = essential_support_check(phi, p["tau"], p["inflation"])
    checks = {
        "outside_mass<=1e-4": res.outside_mass <= 1e-4,
        "exponent_fit>=4": res.exponent_fit >= 4,
        "outside_mass_nonincreasing": res.outside_mass_2tau <= res.outside_mass,
    }
    if cfg.output_dir is not None:
        dens = position_density(time_translate(phi, p["tau"]))
        _write_csv(cfg.output_dir / "dispersion.csv", ["x", "density"], zip(space.x_grid, dens))
    data = {
        "outside_mass": res.outside_mass,
        "outside_mass_2tau": res.outside_mass_2tau,
        "exponent_fit": res.exponent_fit,
        "region": list(res.region),
        "velocity_interval": list(res.velocity_interval),
    }
    return checks, data


def _run_full_suite(p: dict, cfg: ScenarioConfig) -> tuple[dict, dict]:
    from .acceptance import run_all

    results = run_all(cfg.seed, n_workers=1 if cfg.serial else 4)
    checks = {f"{c.number}. {c.name}": c.passed for c in results}
    data = {f"criterion_{c.number}": {"name": c.name, "passed": c.passed, **c.details} for c in results}
    return checks, data


def _optional_str(v):
    return None if v in (None, "") else str(v)


SCENARIOS: dict[str, Scenario] = {
    "born": Scenario(
        "born",
        "Born probabilities over pure robust zero modes (section 2, 'the probability to find')",
        {
            "hamiltonian": Param(_optional_str, None, "CSV path or diag:e0,e1,...; default diag(0,1)"),
            "state": Param(_optional_str, None, "CSV path or 'plus' (uniform superposition)"),
        },
        _run_born,
    ),
    "decohere": Scenario(
        "decohere",
        "Random adiabatic loop ensemble and dephasing (section 2, 'in adiabatic approximation')",
        {
            "dim": Param(int, 2, "dimension when no Hamiltonian file is given"),
            "hamiltonian": Param(_optional_str, None, "CSV path or diag:...; default diag(0..dim-1)"),
            "a": Param(float, 1e-2, "adiabatic rate"),
            "g0": Param(float, 1.0, "loop endpoint"),
            "n_paths": Param(int, 2000, "ensemble size"),
            "scale": Param(float, 1.0, "perturbation scale"),
            "mode": Param(str, "adiabatic_formula", "adiabatic_formula or full_ode"),
            "threshold": Param(float, 0.05, "pass threshold on the mean off-diagonal magnitude"),
            "workers": Param(int, 4, "threads when not --serial"),
        },
        _run_decohere,
    ),
    "jordan-check": Scenario(
        "jordan-check",
        "Sampled Jordan, power-associativity, quadratic-map and cone identities (section 4)",
        {
            "kind": Param(str, "albert", "spinN, hermNr, hermNc or albert"),
            "samples": Param(int, 1000, "number of random elements"),
        },
        _run_jordan,
    ),
    "moment-demo": Scenario(
        "moment-demo",
        "Coadjoint-orbit ensembles, the quotient map nu and flow consistency (section 3)",
        {
            "n": Param(int, 2, "matrix size"),
            "orbit": Param(_optional_str, None, "eigenvalue:multiplicity list; default rank-one projectors"),
            "points": Param(int, 4, "points per random ensemble"),
            "times": Param(str, "0.3,1,3", "flow times"),
        },
        _run_moment,
    ),
    "lfunc": Scenario(
        "lfunc",
        "L-functionals of a truncated bosonic mode and the hbar -> 0 limit (section 3, Eq. (l))",
        {
            "state": Param(str, "coherent:1", "coherent:z or gibbs:T"),
            "hbar": Param(float, 1.0, "Planck constant"),
            "dim": Param(int, 64, "Fock truncation"),
            "alpha_grid": Param(_optional_str, None, "CSV of alpha_re,alpha_im rows"),
            "omega": Param(float, 1.0, "harmonic frequency"),
            "t": Param(float, 0.7, "evolution time"),
        },
        _run_lfunc,
    ),
    "dispersion": Scenario(
        "dispersion",
        "Wavepacket essential-support check for a scalar dispersion (section 5, Lemma 1)",
        {
            "eps": Param(str, "k^2/2", "dispersion expression in k"),
            "support": Param(str, "0.9:1.1", "bump support lo:hi"),
            "grid": Param(int, 4096, "momentum grid size"),
            "kmax": Param(float, 8.0, "momentum cutoff"),
            "tau": Param(float, 200.0, "propagation time"),
            "inflation": Param(float, 1.2, "velocity-interval inflation"),
        },
        _run_dispersion,
    ),
    "full-suite": Scenario(
        "full-suite",
        "All acceptance checks, sections 1 to 5",
        {},
        _run_full_suite,
    ),
}


def list_scenarios() -> list[tuple[str, str]]:
    return [(s.name, s.description) for s in SCENARIOS.values()]


def run_scenario(cfg: ScenarioConfig) -> dict:
    """Run one scenario, write its outputs, and return the report dictionary."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; try 'list'")
    params = cfg.resolved()
    if cfg.scenario in STOCHASTIC and cfg.seed is None:
        raise ConfigError(f"scenario {cfg.scenario} is stochastic and needs --seed")
    cfg.output_dir = Path(cfg.output_dir)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    checks, data = SCENARIOS[cfg.scenario].runner(params, cfg)
    elapsed = time.perf_counter() - start
    checks = {k: bool(v) for k, v in checks.items()}
    report = {
        "scenario": cfg.scenario,
        "version": __version__,
        "seed": cfg.seed,
        "serial": cfg.serial,
        "config": params,
        "checks": checks,
        "all_passed": all(checks.values()),
        "data": data,
    }
    (cfg.output_dir / "report.json").write_text(dumps(report))
    (cfg.output_dir / "timing.json").write_text(dumps({"scenario": cfg.scenario, "wall_clock_seconds": elapsed}))
    return report


# --------------------------------------------------------------------------- argparse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, help="INI file with a [scenario] section")
    sp.add_argument("--seed", type=str, help="unsigned 64-bit master seed")
    sp.add_argument("--out", type=Path, help="output directory (default ./out)")
    sp.add_argument("--serial", action="store_true", help="force single-threaded deterministic mode")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conetheory", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list scenarios")
    run = sub.add_parser("run", help="run the scenario named by --scenario or the config file")
    run.add_argument("--scenario")
    _add_common(run)
    for sc in SCENARIOS.values():
        sp = sub.add_parser(sc.name, help=sc.description)
        _add_common(sp)
        for key, prm in sc.params.items():
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"param_{key}", help=prm.help)
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    cfg = read_config(args.config) if args.config else None
    name = args.command if args.command != "run" else (args.scenario or (cfg.scenario if cfg else None))
    if name is None:
        raise ConfigError("no scenario given; use --scenario or a config file")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; try 'list'")
    if cfg is None:
        cfg = ScenarioConfig(name)
    elif cfg.scenario != name:
        raise ConfigError(f"config names scenario {cfg.scenario!r} but {name!r} was requested")
    for key, val in vars(args).items():
        if key.startswith("param_") and val is not None:
            cfg.parameters[key[6:]] = val
    if args.seed is not None:
        try:
            cfg.seed = _seed(args.seed)
        except ValueError as exc:
            raise ConfigError(f"--seed: {exc}") from exc
    if args.out is not None:
        cfg.output_dir = args.out
    cfg.serial = cfg.serial or args.serial
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in list_scenarios():
            print(f"{name:14s} {desc}")
        return 0
    try:
        cfg = config_from_args(args)
        report = run_scenario(cfg)
    except (InputError, ValidationError, PreconditionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    for key, ok in report["checks"].items():
        print(f"[{'PASS' if ok else 'FAIL'}] {key}")
    print(f"report written to {cfg.output_dir / 'report.json'}")
    return 0 if report["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
