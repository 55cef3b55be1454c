"""Command-line front end.

Subcommands: ``bracket``, ``simulate``, ``verify``, ``parse-check``.
Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numeric failure.  Output is byte-stable: CSV values use 17 significant
digits and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bracket import bracket_affine
from .bundle import Chart, Current, DensityCoefficient, HamiltonianSection
from .expr import DomainError, ExprError, ParseError, parse, simplify
from .models import (ContinuumSpec, GasConstants, PerfectGasModel, WaveModel,
                     model_td_mechanics)
from .solver import NewtonError, OdeState, SolverConfig, evolve_field, \
    hdw_residual, integrate_ode
from .verify import run_suites, SUITES

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class ModelFileError(Exception):
    pass


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ModelFileError(f"unknown key(s) {unknown} in {where}; "
                             f"allowed: {sorted(allowed)}")


# ---------------------------------------------------------------------------
# Model files

_SOLVER_KEYS = {"dt", "t_final", "K", "dx", "x0", "boundary", "scheme",
                "p_reconstruction", "newton_tol", "newton_max_iter"}


class ModelFile:
    """Parsed and validated model description.

    JSON schema (unknown keys rejected):

    .. code-block:: json

        {
          "name": "label",
          "model": "wave | perfect_gas | td_mechanics",
          "potential": "u1^2/2",
          "chart": {"m": 1, "n": 1},
          "hamiltonian": "p1_1^2/2 + u1^2/2",
          "currents": [{"name": "q", "F": "u1"},
                       {"name": "flux", "Y": ["1"], "beta": ["0", "0"]}],
          "initial": {"u": ["sin(x2)"], "M": ["-cos(x2)"], "p": ["0"]},
          "solver": {"dt": 0.01, "t_final": 1.0, "K": 128, "dx": 0.05}
        }

    ``model`` selects a built-in theory; otherwise ``chart`` and
    ``hamiltonian`` define a custom one.  Current entries carry either a
    plain density coefficient ``F`` (m = 1) or the pair ``Y``/``beta``
    (m >= 2).  Initial data are expressions in the spatial coordinate
    x2 for fields, or constant expressions for mechanics.
    """

    def __init__(self, data: dict, source: str = "<model>"):
        if not isinstance(data, dict):
            raise ModelFileError(f"{source}: top level must be an object")
        _check_keys(data, {"name", "model", "potential", "chart", "hamiltonian",
                           "currents", "initial", "solver"}, source)
        self.source = source
        self.name = data.get("name", data.get("model", "custom"))
        self.field_model = None  # built-in object with reconstruct_P, if any

        builtin = data.get("model")
        if builtin is not None:
            self.hamiltonian = self._build_builtin(builtin, data)
        else:
            if "chart" not in data or "hamiltonian" not in data:
                raise ModelFileError(f"{source}: need either 'model' or both "
                                     f"'chart' and 'hamiltonian'")
            chart_obj = data["chart"]
            _check_keys(chart_obj, {"m", "n"}, f"{source}: chart")
            chart = Chart(m=int(chart_obj["m"]), n=int(chart_obj["n"]))
            self.hamiltonian = HamiltonianSection(chart, parse(data["hamiltonian"]))
        self.chart = self.hamiltonian.chart

        self.currents: dict[str, Current | DensityCoefficient] = {}
        for k, entry in enumerate(data.get("currents", []), start=1):
            _check_keys(entry, {"name", "F", "Y", "beta"},
                        f"{source}: currents[{k}]")
            name = entry.get("name", f"current{k}")
            if "F" in entry:
                if "Y" in entry or "beta" in entry:
                    raise ModelFileError(f"{source}: currents[{k}] mixes "
                                         f"'F' with 'Y'/'beta'")
                self.currents[name] = DensityCoefficient(self.chart, parse(entry["F"]))
            else:
                if "Y" not in entry or "beta" not in entry:
                    raise ModelFileError(f"{source}: currents[{k}] needs "
                                         f"'F' or both 'Y' and 'beta'")
                self.currents[name] = Current(self.chart,
                                              tuple(parse(e) for e in entry["Y"]),
                                              tuple(parse(e) for e in entry["beta"]),
                                              name=name)

        self.initial = data.get("initial", {})
        _check_keys(self.initial, {"u", "M", "p"}, f"{source}: initial")

        solver_obj = data.get("solver", {})
        _check_keys(solver_obj, _SOLVER_KEYS, f"{source}: solver")
        self.solver_data = solver_obj

    def _build_builtin(self, builtin: str, data: dict) -> HamiltonianSection:
        if builtin == "wave":
            model = WaveModel()
            self.field_model = model
            return model.hamiltonian
        if builtin == "perfect_gas":
            model = PerfectGasModel(ContinuumSpec(gas=GasConstants()))
            self.field_model = model
            return model.hamiltonian
        if builtin == "td_mechanics":
            potential = data.get("potential", "0")
            return model_td_mechanics(parse(potential))
        raise ModelFileError(f"{self.source}: unknown built-in model "
                             f"'{builtin}' (wave, perfect_gas, td_mechanics)")

    def solver_config(self) -> SolverConfig:
        if "dt" not in self.solver_data or "t_final" not in self.solver_data:
            raise ModelFileError(f"{self.source}: solver needs 'dt' and 't_final'")
        return SolverConfig(**self.solver_data)


def load_model(path: str) -> ModelFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from exc
    return ModelFile(data, source=path)


# ---------------------------------------------------------------------------
# Subcommands


def _parse_point(text: str) -> dict[str, float]:
    binding = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ModelFileError(f"evaluation point entry '{item}' is not name=value")
        name, _, value = item.partition("=")
        try:
            binding[name.strip()] = float(value)
        except ValueError as exc:
            raise ModelFileError(f"bad value in point entry '{item}'") from exc
    return binding


def cmd_bracket(args) -> int:
    model = load_model(args.model)
    if not model.currents:
        raise ModelFileError(f"{model.source}: no currents defined")
    if args.current:
        if args.current not in model.currents:
            raise ModelFileError(f"unknown current '{args.current}'; available: "
                                 f"{sorted(model.currents)}")
        names = [args.current]
    else:
        names = sorted(model.currents)

    points = [_parse_point(p) for p in args.at or []]
    for name in names:
        result = bracket_affine(model.currents[name], model.hamiltonian)
        expr = simplify(result.F)
        print(f"{name}: {expr}")
        for point in points:
            spec = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(point.items()))
            print(f"  at {spec}: {_fmt(expr.eval(point))}")
    return EXIT_OK


def _eval_profile(exprs: list[str], x: np.ndarray, chart: Chart) -> np.ndarray:
    rows = []
    for text in exprs:
        e = parse(text)
        extra = e.variables() - {"x2"}
        if extra:
            raise ModelFileError(f"initial profile may only use x2, got {sorted(extra)}")
        rows.append(np.broadcast_to(np.atleast_1d(e.eval_many({"x2": x})), x.shape))
    if len(rows) != chart.n:
        raise ModelFileError(f"expected {chart.n} initial profiles, got {len(rows)}")
    return np.stack(rows)


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    config = model.solver_config()
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    chart = model.chart

    if chart.m == 1:
        u0 = np.array([parse(e).eval({}) for e in model.initial.get("u", [])])
        p0 = np.array([parse(e).eval({}) for e in model.initial.get("p", [])])
        if u0.shape != (chart.n,) or p0.shape != (chart.n,):
            raise ModelFileError(f"mechanics initial data needs {chart.n} 'u' "
                                 f"and {chart.n} 'p' entries")
        traj = integrate_ode(model.hamiltonian, OdeState(t=0.0, u=u0, p=p0), config)
        header = ["t"] + list(chart.u_names) + list(chart.p_names)
        lines = [",".join(header)]
        for s in traj:
            lines.append(",".join([_fmt(s.t)] + [_fmt(v) for v in s.u]
                                  + [_fmt(v) for v in s.p]))
        norms = hdw_residual(traj, model.hamiltonian, config.dt)
    elif chart.m == 2:
        if model.field_model is None:
            raise ModelFileError("field simulation needs a built-in model "
                                 "(closed-form stress reconstruction)")
        if not config.K or not config.dx:
            raise ModelFileError("field simulation needs solver.K and solver.dx")
        x = config.x0 + config.dx * np.arange(config.K)
        u0 = _eval_profile(model.initial.get("u", []), x, chart)
        M0 = _eval_profile(model.initial.get("M", []), x, chart)
        traj = evolve_field(model.field_model, config, u0, M0)
        header = ["t", "x"]
        for a in range(1, chart.n + 1):
            header += [f"u{a}", f"M{a}", f"P{a}"]
        lines = [",".join(header)]
        for s in traj:
            for k in range(len(s.x)):
                row = [_fmt(s.t), _fmt(s.x[k])]
                for a in range(chart.n):
                    row += [_fmt(s.u[a, k]), _fmt(s.M[a, k]), _fmt(s.P[a, k])]
                lines.append(",".join(row))
        norms = hdw_residual(traj, model.hamiltonian, config.dt, dx=config.dx,
                             boundary=config.boundary)
    else:
        raise ModelFileError("simulation supports base dimensions 1 and 2")

    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")
    _write_manifest(out, {
        "model": model.name,
        "config": {k: v for k, v in sorted(model.solver_data.items())},
        "snapshots": len(traj),
        "residual_norms": norms,
    })
    print(f"wrote {out / 'trajectory.csv'} ({len(traj)} snapshots)")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = args.suite or None
    try:
        reports = run_suites(names, seed=args.seed)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    for report in reports:
        print(report.summary())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [r.to_dict() for r in reports]
        (out / "verification.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    print(f"all {len(reports)} suite(s) passed")
    return EXIT_OK


def cmd_parse_check(args) -> int:
    status = EXIT_OK
    for text in args.expression:
        try:
            e = parse(text)
        except ParseError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_USAGE
            continue
        print(f"ok: {simplify(e)}")
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdw",
        description="Brackets, solvers and verification for first-order "
                    "Hamiltonian field theories in local coordinates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bracket", help="print a current-Hamiltonian bracket")
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--current", help="current name (default: all)")
    p.add_argument("--at", action="append", metavar="BINDING",
                   help="evaluation point, e.g. 'x1=0,u1=1,p1_1=2' (repeatable)")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("simulate", help="integrate the evolution equations")
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--out", help="output directory (default: cwd)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES),
                   help="suite name (repeatable; default: all)")
    p.add_argument("--seed", type=int, help="random seed for sampled suites")
    p.add_argument("--out", help="directory for the JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("parse-check", help="parse expressions and print them back")
    p.add_argument("expression", nargs="+", help="expression text")
    p.set_defaults(func=cmd_parse_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching the contract
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ModelFileError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NewtonError, FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ExprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
