"""Batch runner: JSON scenario files in, CSV tables and a text report out.

Scenario document (JSON object)::

    {
      "kind": "solve",              # solve | impulsive | timescale | horizon | sap | dependence | certificate
      "catalog": "example_3x",      # see `hmde catalog`
      "params": {"gamma": 1.0},     # optional, defaults filled in
      "options": {"grid_step": 0.001, "point_tol": 1e-13, "sweep_tol": 1e-9, "max_sweeps": 3},
      "output_dir": "out",          # optional
      "seed": 0                     # optional
    }
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import catalog as cat
from .asymptotics import HorizonProblem, bounded_condition_check, chain_solve, generate_example_path, sap_profile
from .dependence import dependence_run, hypothesis_check
from .frontends import restrict_solution
from .regulated import DomainError
from .solver import SolverOptions, certificate_A, solve_forward

log = logging.getLogger(__name__)

KINDS = ("solve", "impulsive", "timescale", "horizon", "sap", "dependence", "certificate")
TOP_FIELDS = {"kind", "catalog", "params", "options", "output_dir", "seed"}
OPTION_DEFAULTS = {"grid_step": 1e-3, "point_tol": 1e-13, "sweep_tol": 1e-9, "max_sweeps": 3}


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class Scenario:
    kind: str
    catalog: str
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def solver_options(self) -> SolverOptions:
        o = self.options
        return SolverOptions(step=o["grid_step"], point_tol=o["point_tol"], sweep_tol=o["sweep_tol"],
                             max_sweeps=o["max_sweeps"])


def _finite_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_param(p: cat.Param, v, where: str) -> list[str]:
    if p.kind == "float":
        if not _finite_number(v):
            return [f"{where}: expected a finite number, got {v!r}"]
        if p.positive and not v > 0:
            return [f"{where}: must be positive"]
    elif p.kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            return [f"{where}: expected an integer, got {v!r}"]
        if p.positive and v < 1:
            return [f"{where}: must be positive"]
    elif p.kind == "floats":
        if not isinstance(v, list) or not all(_finite_number(x) for x in v):
            return [f"{where}: expected a list of finite numbers"]
    elif p.kind == "pairs":
        if not isinstance(v, list) or not all(isinstance(x, list) and len(x) == 2 and all(map(_finite_number, x)) for x in v):
            return [f"{where}: expected a list of [number, number] pairs"]
    elif p.kind == "choice":
        if v not in p.choices:
            return [f"{where}: {v!r} not one of {list(p.choices)}"]
    return []


def _semantic(entry: cat.CatalogEntry, params: dict, options: dict) -> list[str]:
    """Cross-field checks the builders would otherwise reject at run time."""
    errs = []
    if entry.id == "impulsive_linear":
        for i, t in enumerate(params["taus"]):
            if not 0.0 < t < params["a"]:
                errs.append(f"params.taus[{i}]: impulse time {t!r} outside (t0, t0+a) = (0, {params['a']!r})")
        if any(b <= a for a, b in zip(params["taus"], params["taus"][1:])):
            errs.append("params.taus: impulse times must be strictly increasing")
    if entry.id == "example_3x":
        for i, (t, d) in enumerate(params["jumps"]):
            if not 0.0 < t < 1.0 or d < 0:
                errs.append(f"params.jumps[{i}]: need 0 < tau < 1 and delta >= 0")
    if entry.id == "timescale_linear":
        comps = params["components"]
        if not comps:
            errs.append("params.components: empty time scale")
        for i, (lo, hi) in enumerate(comps):
            if hi < lo:
                errs.append(f"params.components[{i}]: hi < lo")
        if any(b[0] <= a[1] for a, b in zip(comps, comps[1:])):
            errs.append("params.components: components must be sorted and disjoint")
    if entry.id == "damped_horizon" and not 0.0 <= params["kappa"] < 1.0:
        errs.append("params.kappa: need 0 <= kappa < 1")
    if entry.id == "example_4x_sap" and not params["omega"] < params["H"]:
        errs.append("params.omega: must be smaller than H")
    return errs


def validate_config(text: str) -> Scenario:
    """Parse and validate a scenario document; raise :class:`ConfigError` listing every problem."""
    try:
        doc = json.loads(text, parse_constant=lambda c: float(c))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["document: expected a JSON object"])
    errs = [f"{k}: unknown field" for k in sorted(set(doc) - TOP_FIELDS)]
    for k in ("kind", "catalog"):
        if k not in doc:
            errs.append(f"{k}: missing field")
    kind = doc.get("kind")
    if "kind" in doc and kind not in KINDS:
        errs.append(f"kind: unknown kind {kind!r}; expected one of {list(KINDS)}")
    entry = cat.CATALOG.get(doc.get("catalog")) if isinstance(doc.get("catalog"), str) else None
    if "catalog" in doc and entry is None:
        errs.append(f"catalog: unknown catalog id {doc.get('catalog')!r}")
    if entry is not None and kind in KINDS and kind not in entry.kinds:
        errs.append(f"kind: catalog {entry.id!r} supports {list(entry.kinds)}, not {kind!r}")

    params = doc.get("params", {})
    if not isinstance(params, dict):
        errs.append("params: expected an object")
        params = {}
    full = {}
    if entry is not None:
        schema = entry.schema()
        errs += [f"params.{k}: unknown parameter for {entry.id!r}" for k in sorted(set(params) - set(schema))]
        for name, p in schema.items():
            v = params.get(name, p.default)
            e = _check_param(p, v, f"params.{name}")
            errs += e
            if not e:
                full[name] = v

    options = doc.get("options", {})
    if not isinstance(options, dict):
        errs.append("options: expected an object")
        options = {}
    errs += [f"options.{k}: unknown option" for k in sorted(set(options) - set(OPTION_DEFAULTS))]
    opts = {}
    for name, dflt in OPTION_DEFAULTS.items():
        v = options.get(name, dflt)
        if name == "max_sweeps":
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                errs.append(f"options.{name}: expected a nonnegative integer")
        elif not _finite_number(v) or not v > 0:
            errs.append(f"options.{name}: expected a positive finite number")
        opts[name] = v

    out = doc.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        errs.append("output_dir: expected a nonempty string")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        errs.append("seed: expected an integer")
    if entry is not None and len(full) == len(entry.params):
        errs += _semantic(entry, full, opts)
    if errs:
        raise ConfigError(errs)
    return Scenario(kind, entry.id, full, opts, out, seed)


# --- output helpers -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _solution_csv(path: Path, sol, extra: dict | None = None) -> None:
    n = sol.dim
    header = ["t"] + [f"{p}_{i + 1}" for p in ("x", "left", "right") for i in range(n)]
    cols = [sol.times[:, None], sol.value, sol.left, sol.right]
    for name, col in (extra or {}).items():
        header += [f"{name}_{i + 1}" for i in range(n)]
        cols.append(np.asarray(col).reshape(sol.times.size, n))
    _write_csv(path, header, np.hstack(cols))


def _profile_csv(path: Path, prof) -> None:
    _write_csv(path, ["t", "gap"], zip(prof.times, prof.gaps))


def _profile_lines(prof) -> list[str]:
    lines = [f"omega: {prof.omega!r}", f"eps: {prof.eps!r}"]
    lines += [f"window [{a:.6g}, {b:.6g}] sup gap: {float(s)!r}"
              for a, b, s in zip(prof.window_edges[:-1], prof.window_edges[1:], prof.window_sup)]
    lines += [f"windows nonincreasing: {prof.windows_nonincreasing()}",
              f"classification: {'SAP' if prof.is_sap else 'not SAP'} at tolerance {prof.eps!r} over horizon {float(prof.times[-1] + prof.omega)!r}"]
    return lines


# --- runners ------------------------------------------------------------------

def _run_solve(s: Scenario, out: Path):
    p = s.params
    prob = cat.example_3x(p["gamma"], p["eta"], p["x0"], jumps=p["jumps"], options=s.solver_options())
    rep = solve_forward(prob, certify=True)
    _solution_csv(out / "solution.csv", rep.solution)
    c = rep.certificate
    lines = [f"residual: {rep.residual!r}", f"sweeps: {rep.sweeps}", f"x(end): {rep.solution.value[-1].tolist()!r}",
             f"certificate A: N={c.N!r} margin={c.margin!r} success={c.success}"]
    return ["solution.csv"], lines + rep.notes


def _run_certificate(s: Scenario, out: Path):
    p = s.params
    prob = cat.example_3x(p["gamma"], p["eta"], p["x0"], jumps=p["jumps"], options=s.solver_options())
    c = certificate_A(prob)
    rows = [(2.0 ** k, *_margin(prob, 2.0 ** k)) for k in range(int(math.log2(c.N)) + 1)]
    _write_csv(out / "certificate.csv", ["N", "margin", "success"], rows)
    lines = [f"H0: {c.H0!r}", f"K0: {c.K0!r}", f"initial term: {c.initial_term!r}",
             f"first N: {c.N!r}", f"margin: {c.margin!r}", f"success: {c.success}"]
    return ["certificate.csv"], lines


def _margin(prob, N):
    from .solver import certificate_margin

    r = certificate_margin(prob, N)
    return r.margin, r.success


def _run_impulsive(s: Scenario, out: Path):
    p = s.params
    spec, prob = cat.impulsive_linear(p["lam"], p["beta"], p["x0"], p["a"], p["taus"], s.solver_options())
    rep = solve_forward(prob)
    sol = rep.solution
    t = sol.times
    oracle = cat.impulsive_oracle(t, p["lam"], p["beta"], p["x0"], p["taus"])
    _solution_csv(out / "solution.csv", sol, {"oracle": oracle})
    err = float(np.max(np.abs(sol.value[:, 0] - oracle)))
    tab = restrict_solution(sol, spec)
    lines = [f"residual: {rep.residual!r}", f"sup error vs product formula: {err!r}"]
    lines += [f"jump at {float(tau)!r}: {j.tolist()!r}" for tau, j in zip(tab["tau"], tab["jump"])]
    return ["solution.csv"], lines


def _run_timescale(s: Scenario, out: Path):
    p = s.params
    spec, prob = cat.timescale_linear(p["lam"], p["x0"], [tuple(c) for c in p["components"]], s.solver_options())
    rep = solve_forward(prob)
    tab = restrict_solution(rep.solution, spec)
    oracle = cat.timescale_oracle(spec, p["lam"], tab["t"])
    _write_csv(out / "solution.csv", ["t", "x_1", "oracle_1"], zip(tab["t"], tab["x"][:, 0], oracle))
    err = float(np.max(np.abs(tab["x"][:, 0] - oracle)))
    return ["solution.csv"], [f"residual: {rep.residual!r}", f"sup error vs oracle on T: {err!r}"]


def _run_horizon(s: Scenario, out: Path):
    p = s.params
    prob = cat.damped_horizon(p["H"], p["lam"], p["c"], p["delta"], p["kappa"], p["x0"], s.solver_options())
    hp = HorizonProblem(prob, 1.0)
    rep = chain_solve(hp)
    bc = bounded_condition_check(hp, [2.0 ** k for k in range(8)])
    prof = sap_profile(rep.solution, 1.0, p["windows"], p["eps"])
    _solution_csv(out / "solution.csv", rep.solution)
    _profile_csv(out / "profile.csv", prof)
    lines = [f"residual: {rep.residual!r}", f"bounded condition ratios: {bc.ratios.tolist()!r}",
             f"bounded condition passed: {bc.passed}"] + _profile_lines(prof)
    return ["solution.csv", "profile.csv"], lines


def _run_sap(s: Scenario, out: Path):
    p = s.params
    path = generate_example_path(cat.example_4x_sequence(p["sequence"]), p["H"])
    prof = sap_profile(path, p["omega"], p["windows"], p["eps"])
    _profile_csv(out / "profile.csv", prof)
    return ["profile.csv"], [f"sequence: {p['sequence']}"] + _profile_lines(prof)


def _run_dependence(s: Scenario, out: Path):
    p = s.params
    seq = cat.dependence_family(p["family"], p["k_max"], p["gamma"], p["eta"], p["x0"], s.solver_options())
    tab = dependence_run(seq)
    hyp = hypothesis_check(seq, seed=s.seed)
    _write_csv(out / "dependence.csv", ["k", "gap", "solved_flag"], zip(tab.k, tab.gaps, tab.solved))
    lines = [f"monotone fraction: {tab.monotone_fraction!r}",
             f"min gap over k >= k_max/2: {tab.tail_min(max(1, p['k_max'] // 2))!r}",
             f"C estimate (seed {s.seed}): {hyp.C!r}", f"integral of limit bound: {hyp.C_limit!r}",
             f"phi ratio liminf at R={hyp.R!r}: {hyp.phi_liminf!r}"]
    lines += [f"hypothesis {k}: {'pass' if v else 'FAIL'}" for k, v in hyp.passed.items()]
    lines += [f"instance {k} failed: {e}" for k, e in sorted(tab.errors.items())]
    return ["dependence.csv"], lines


RUNNERS = {
    "solve": _run_solve,
    "certificate": _run_certificate,
    "impulsive": _run_impulsive,
    "timescale": _run_timescale,
    "horizon": _run_horizon,
    "sap": _run_sap,
    "dependence": _run_dependence,
}


def run_scenario(s: Scenario, out_dir: str | Path | None = None) -> list[Path]:
    """Execute a validated scenario; return the written files (report last).

    Module errors are written to the report and re-raised.
    """
    out = Path(out_dir or s.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = [f"kind: {s.kind}", f"catalog: {s.catalog}", f"params: {json.dumps(s.params, sort_keys=True)}",
            f"options: {json.dumps(s.options, sort_keys=True)}", f"seed: {s.seed}"]
    try:
        files, lines = RUNNERS[s.kind](s, out)
    except Exception as exc:
        (out / "report.txt").write_text("\n".join(head + [f"ERROR: {type(exc).__name__}: {exc}"]) + "\n", encoding="utf-8")
        raise
    (out / "report.txt").write_text("\n".join(head + lines) + "\n", encoding="utf-8")
    return [out / f for f in files] + [out / "report.txt"]


def list_catalog() -> str:
    lines = []
    for e in cat.CATALOG.values():
        lines.append(f"{e.id}  [{', '.join(e.kinds)}]  {e.doc}")
        lines.append(f"  anchor: {e.anchor}")
        for p in e.params:
            extra = f" one of {list(p.choices)}" if p.choices else ""
            lines.append(f"  {p.name} ({p.kind}, default {p.default!r}){extra}: {p.doc}")
    return "\n".join(lines) + "\n"


# --- entry point ---------------------------------------------------------------

def _load(path: str, args) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    s = validate_config(text)
    if args.grid_step is not None:
        s.options["grid_step"] = args.grid_step
    if args.tol is not None:
        s.options["sweep_tol"] = args.tol
    if args.seed is not None:
        s.seed = args.seed
    if args.out_dir is not None:
        s.output_dir = args.out_dir
    return validate_config(s.to_json())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hmde", description="Run hybrid measure differential equation scenarios.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("run", "validate"):
        sp = sub.add_parser(verb)
        sp.add_argument("config")
        sp.add_argument("--out-dir")
        sp.add_argument("--grid-step", type=float)
        sp.add_argument("--tol", type=float, help="residual tolerance (sweep_tol)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dump-config", action="store_true", help="print the normalized scenario")
    sub.add_parser("catalog")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "catalog":
        sys.stdout.write(list_catalog())
        return 0
    try:
        s = _load(args.config, args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"{args.config}: {e}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(s.to_json())
    if args.verb == "validate":
        if not args.dump_config:
            print("ok")
        return 0
    try:
        files = run_scenario(s)
    except (ArithmeticError, ValueError, RuntimeError, DomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
