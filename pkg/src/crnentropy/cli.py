"""``crn`` command-line front end.

Exit codes: 0 success, 1 parse or validation failure, 2 I/O error (and bad
arguments), 3 equilibrium solver failure, 4 integration failure, 5 an
inequality or bound check reported violations.
"""

from __future__ import annotations

import argparse
import ast
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import eed, experiments
from .equilibria import boundary_equilibria, solve_positive_equilibrium
from .errors import (
    InfeasibleConstraint,
    NonConvergence,
    NonFiniteState,
    NotComplexBalanced,
    StepRejected,
    StepSizeUnderflow,
    SupportEnumerationTooLarge,
)
from .grid import Grid1D
from .netparse import NetworkFileError, parse_network
from .network import conservation_basis, validate_network
from .networks import BUNDLED, bundled_text
from .ode import fit_decay_rate, integrate_ode, write_csv
from .pde import integrate_pde

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_SOLVER, EXIT_INTEGRATION, EXIT_VIOLATION = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ----------------------------------------------------------------------------
# helpers


def load(path: str):
    """Parse a network file; ``builtin:NAME`` selects a bundled network.

    A missing ``examples/NAME.crn`` whose NAME is bundled also resolves to the
    bundled copy.
    """
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name not in BUNDLED:
            raise CliError(f"{path}: unknown bundled network (choose from {', '.join(BUNDLED)})", EXIT_IO)
        return parse_network(bundled_text(name), filename=path)
    p = Path(path)
    if not p.exists() and p.parent.name == "examples" and p.suffix == ".crn" and p.stem in BUNDLED:
        return parse_network(bundled_text(p.stem), filename=path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}", EXIT_IO) from exc
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not valid UTF-8 ({exc.reason})", EXIT_IO) from exc
    return parse_network(text, filename=str(p))


def floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def fmt(v: float) -> str:
    """Compact number for tables: 12 significant digits, no negative zero."""
    v = float(v)
    if abs(v) < 1e-300:
        v = 0.0
    s = "%.12g" % v
    return "0" if s == "-0" else s


_ALLOWED_NAMES = {
    "x": None, "pi": np.pi, "e": np.e,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "minimum": np.minimum, "maximum": np.maximum,
}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
)


def profile(expr: str):
    """Compile an initial profile such as ``1+0.4*sin(2*pi*x)`` into a function of ``x``."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise CliError(f"bad profile expression {expr!r}: {exc.msg}", EXIT_INVALID) from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise CliError(f"bad profile expression {expr!r}: {type(node).__name__} not allowed", EXIT_INVALID)
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES:
            raise CliError(f"bad profile expression {expr!r}: unknown name {node.id!r}", EXIT_INVALID)
    code = compile(tree, "<profile>", "eval")

    def f(x):
        env = dict(_ALLOWED_NAMES, x=x)
        return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float), np.shape(x))

    return f


def emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise CliError(f"{out}: {exc.strerror or exc}", EXIT_IO) from exc


def note(msg: str):
    print(msg, file=sys.stderr)


# ----------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    net = load(args.network)
    problems = validate_network(net)
    for v in problems:
        note(f"{args.network}: {v.message}")
    if problems:
        return EXIT_INVALID
    print(f"{args.network}: ok ({net.n_species} species, {net.n_reactions} reactions)")
    return EXIT_OK


def cmd_conserved(args) -> int:
    net = load(args.network)
    basis = conservation_basis(net)
    print(",".join(net.species))
    for row in basis.exact:
        print(",".join(str(Fraction(v)) for v in row))
    note(f"m = {basis.m}")
    return EXIT_OK


def _mass_from_args(args, net, basis):
    if args.c0 is not None:
        if args.c0.size != net.n_species:
            raise CliError(f"--c0 needs {net.n_species} values", EXIT_INVALID)
        return basis.mass(args.c0)
    if args.mass is None:
        raise CliError("give --mass or --c0", EXIT_INVALID)
    if args.mass.size != basis.m:
        raise CliError(f"--mass needs {basis.m} values for this network", EXIT_INVALID)
    return args.mass


def cmd_equilibrium(args) -> int:
    net = load(args.network)
    basis = conservation_basis(net)
    M = _mass_from_args(args, net, basis)
    points = []
    if basis.m == 0 or np.all(M > 0):
        points.append(solve_positive_equilibrium(net, basis, M))
    if not args.no_boundary:
        points.extend(boundary_equilibria(net, basis, M, max_species=args.max_species))
    print(",".join(list(net.species) + ["kind", "location"]))
    for p in points:
        print(",".join([fmt(v) for v in p.c] + [p.kind, p.location]))
        note("residuals " + " ".join("%.3e" % r for r in p.residuals) + f" mass_residual {p.mass_residual:.3e}")
    return EXIT_OK


def cmd_ode(args) -> int:
    net = load(args.network)
    if args.c0.size != net.n_species:
        raise CliError(f"--c0 needs {net.n_species} values", EXIT_INVALID)
    trace = integrate_ode(net, args.c0, args.t_end, rtol=args.rtol, atol=args.atol)
    emit(trace.to_csv(), args.out)
    note("final " + ",".join(fmt(v) for v in trace.final))
    note(f"max mass_residual {np.max(trace.mass_residual):.3e}")
    if trace.c_inf is not None:
        note("c_inf " + ",".join(fmt(v) for v in trace.c_inf))
        try:
            start = float(trace.times[np.argmax(trace.E <= trace.E[0] * 1e-2)]) if trace.E[0] > 0 else 0.0
            rate, r2 = fit_decay_rate(trace, start)
            note(f"entropy decay rate {rate:.6g} (r^2 {r2:.6f})")
        except ValueError as exc:
            note(f"no decay fit: {exc}")
    return EXIT_OK


def _initial_grid(net, specs, J, x_lo, x_hi):
    given = {}
    for spec in specs:
        if "=" not in spec:
            raise CliError(f"--init expects NAME=EXPR, got {spec!r}", EXIT_INVALID)
        name, expr = spec.split("=", 1)
        name = name.strip()
        if name not in net.species:
            raise CliError(f"--init: unknown species {name!r}", EXIT_INVALID)
        given[name] = profile(expr)
    missing = [s for s in net.species if s not in given]
    if missing:
        raise CliError(f"--init missing for species {', '.join(missing)}", EXIT_INVALID)
    grid = Grid1D.from_functions([given[s] for s in net.species], J, x_lo, x_hi)
    if np.any(grid.values < 0):
        raise CliError("initial profile is negative somewhere", EXIT_INVALID)
    return grid


def cmd_pde(args) -> int:
    net = load(args.network)
    grid = _initial_grid(net, args.init, args.J, args.x_lo, args.x_hi)
    trace = integrate_pde(net, grid, args.t_end, dt_max=args.dt, snapshot_times=() if args.snapshot_times is None else args.snapshot_times)
    emit(trace.to_csv(), args.out)
    if args.snapshot_dir:
        Path(args.snapshot_dir).mkdir(parents=True, exist_ok=True)
        trace.write_snapshots(args.snapshot_dir)
    note("final means " + ",".join(fmt(v) for v in trace.means[-1]))
    note(f"max mass_residual {np.max(trace.mass_residual):.3e}; steps {trace.n_steps}")
    if np.all(np.isfinite(trace.E)):
        note(f"max entropy increase per step {max(0.0, float(np.max(np.diff(trace.E)))):.3e}")
    return EXIT_OK


def _report(rep, args) -> int:
    if args.out:
        emit(rep.to_csv(), args.out)
    print(f"violations: {rep.violations}, min_ratio: {rep.min_ratio:.6g}")
    if rep.cases is not None:
        names, counts = np.unique(rep.cases, return_counts=True)
        print("cases: " + ", ".join(f"{n}={c}" for n, c in zip(names, counts)))
    return EXIT_VIOLATION if rep.violations else EXIT_OK


def cmd_eed(args) -> int:
    kind = args.suite
    if kind == "finite-cycle":
        alphas = args.alphas or [1] * args.n
        rep = eed.verify_finite_cycle_inequality(alphas, samples=args.samples, seed=args.seed)
        print(f"constant N^-N = {rep.constant:.6g}")
        return _report(rep, args)
    if kind == "g6":
        rep = eed.verify_3x3_inequality(tuple(args.ks) if args.ks is not None else (1.0, 1.0, 1.0),
                                        args.mass_scalar or 4.0, args.epsilon, args.samples, seed=args.seed)
        print(f"K5 = {rep.constant:.6g}")
        return _report(rep, args)
    if kind == "averaged-cycle":
        alphas = args.alphas or [1] * args.n
        ks = list(args.ks) if args.ks is not None else [1.0] * len(alphas)
        rep = eed.verify_averaged_cyclic_inequality(alphas, ks, args.mass_scalar or 2.0, args.samples, seed=args.seed)
        print(f"K2 = {rep.extra['K2']:.6g}, K3_sampled = {rep.extra['K3_sampled']:.6g}")
        return _report(rep, args)
    # lambda / quadratic need a network
    if not args.network:
        raise CliError(f"eed {kind} needs --network", EXIT_INVALID)
    net = load(args.network)
    basis = conservation_basis(net)
    M = _mass_from_args(args, net, basis)
    eq = solve_positive_equilibrium(net, basis, M)
    lam_q = eed.quadratic_form_Lambda(net, eq, basis)
    if kind == "quadratic":
        print(f"Lambda_quadratic: {lam_q:.12g}")
        print(f"mass Gram positive definite: {eed.mass_gram_is_positive_definite(basis, eq.c)}")
        return EXIT_OK
    cset = eed.ConstraintSet(basis, np.asarray(M, dtype=float), args.K, eq.c)
    est = eed.estimate_lambda_ode(net, eq, cset, budget=args.samples, seed=args.seed)
    print(f"lambda_lo: {est.lambda_lo:.12g}")
    print("witness: " + ",".join(fmt(v) for v in est.witness))
    print(f"Lambda_quadratic: {lam_q:.12g}")
    print(f"feasible samples: {est.n_feasible}/{est.n_drawn}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    name = args.name
    if name == "2x2-bounds" or name == "2x2-smooth":
        t_end = args.t_end or 20.0
        grid = Grid1D.from_functions(
            [lambda x: 1 + 0.4 * np.sin(2 * np.pi * x), lambda x: 1 - 0.4 * np.sin(2 * np.pi * x)], args.J or 256
        )
        rep = experiments.experiment_2x2_bounds(grid, t_end, eps=args.epsilon or 0.5, upper=args.upper or 2.0,
                                                dt_max=args.dt or 1e-3)
        tr = rep.trace
        if args.out:
            emit(tr.to_csv(), args.out)
        print(f"bound violations: {rep.violations}")
        print(f"max mass_residual: {np.max(tr.mass_residual):.3e}")
        print(f"max entropy increase: {max(0.0, float(np.max(np.diff(tr.E)))):.3e}")
        print(f"final L2 gap: {rep.l2_gap[-1]:.3e}")
        print(f"L2 decay rate: {rep.decay_rate:.6g} (r^2 {rep.r_squared:.6f})")
        return EXIT_VIOLATION if rep.violations else EXIT_OK
    if name == "3x3-lower-bound":
        rep = experiments.experiment_3x3_lower_bound(args.b0 or 1.0, args.t_end or 50.0, J=args.J or 128,
                                                     alpha=args.alpha, dt_max=args.dt or 5e-3)
        if args.out:
            cols = ["t", "min_b", "bound"]
            emit(write_csv(cols, np.column_stack([rep.times, rep.min_b, rep.bound])), args.out)
        print(f"violations: {rep.violations}")
        print(f"worst margin: {rep.worst_margin:.6g}")
        return EXIT_VIOLATION if rep.violations else EXIT_OK
    if name == "boundary-convergence":
        rep = experiments.experiment_boundary_convergence(d_c=args.d_c, J=args.J or 256, t_end=args.t_end or 0.5,
                                                          dt_max=args.dt or 1e-4)
        if args.out:
            emit(write_csv(["t", "gap_sq"], np.column_stack([rep.times, rep.gap_sq])), args.out)
        print(f"exponent: {rep.exponent:.6g} expected: {rep.expected:.6g} relative error: {rep.relative_error:.3e}")
        print(f"max |a|,|b|: {rep.max_other:.3e}")
        return EXIT_VIOLATION if rep.relative_error > 0.02 or rep.max_other > 0 else EXIT_OK
    if name == "boundary-degeneracy":
        rep = experiments.boundary_degeneracy()
        cols = ["delta", "E", "D"]
        emit(write_csv(cols, np.column_stack([rep.deltas, rep.E, rep.D])), args.out)
        note(f"E limit {rep.E_limit:.12g}; D monotone {rep.D_monotone}")
        return EXIT_OK if rep.D_monotone else EXIT_VIOLATION
    raise CliError(f"unknown experiment {name!r}", EXIT_INVALID)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crn", description="Mass-action reaction network toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check network well-formedness")
    s.add_argument("network")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("conserved", help="print the exact conservation-law basis")
    s.add_argument("network")
    s.set_defaults(func=cmd_conserved)

    s = sub.add_parser("equilibrium", help="positive and boundary equilibria for a mass vector")
    s.add_argument("network")
    s.add_argument("--mass", type=floats)
    s.add_argument("--c0", type=floats, help="take the mass vector from this state")
    s.add_argument("--no-boundary", action="store_true")
    s.add_argument("--max-species", type=positive_int, default=12)
    s.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("ode", help="integrate the mass-action ODE, CSV trace")
    s.add_argument("network")
    s.add_argument("--c0", type=floats, required=True)
    s.add_argument("--t-end", type=positive, default=20.0)
    s.add_argument("--rtol", type=positive, default=1e-8)
    s.add_argument("--atol", type=positive, default=1e-10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ode)

    s = sub.add_parser("pde", help="integrate the 1-D reaction-diffusion system, CSV trace")
    s.add_argument("network")
    s.add_argument("--init", action="append", default=[], metavar="NAME=EXPR")
    s.add_argument("--J", type=positive_int, default=128)
    s.add_argument("--x-lo", type=float, default=0.0)
    s.add_argument("--x-hi", type=float, default=1.0)
    s.add_argument("--t-end", type=positive, default=1.0)
    s.add_argument("--dt", type=positive, default=1e-3)
    s.add_argument("--snapshot-times", type=floats)
    s.add_argument("--snapshot-dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_pde)

    s = sub.add_parser("eed", help="entropy-dissipation suites")
    s.add_argument("suite", choices=["finite-cycle", "g6", "averaged-cycle", "lambda", "quadratic"])
    s.add_argument("--n", type=positive_int, default=3)
    s.add_argument("--alphas", type=ints)
    s.add_argument("--ks", type=floats)
    s.add_argument("--epsilon", type=positive, default=0.5)
    s.add_argument("--samples", type=positive_int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--network")
    s.add_argument("--mass", type=floats)
    s.add_argument("--c0", type=floats)
    s.add_argument("--K", type=positive, default=1.0, help="entropy cap of the constraint set")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eed)

    s = sub.add_parser("experiment", help="named reaction-diffusion scenarios")
    s.add_argument("name", choices=["2x2-bounds", "2x2-smooth", "3x3-lower-bound", "boundary-convergence",
                                    "boundary-degeneracy"])
    s.add_argument("--t-end", type=positive)
    s.add_argument("--J", type=positive_int)
    s.add_argument("--dt", type=positive)
    s.add_argument("--epsilon", type=positive)
    s.add_argument("--upper", type=positive)
    s.add_argument("--b0", type=positive)
    s.add_argument("--alpha", type=positive_int, default=1)
    s.add_argument("--d-c", type=positive, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    mass = getattr(args, "mass", None)
    args.mass_scalar = float(mass[0]) if mass is not None and mass.size == 1 else None
    if mass is not None and np.any(mass <= 0):
        note("error: --mass entries must be positive")
        return EXIT_INVALID
    try:
        return args.func(args)
    except CliError as exc:
        note(f"error: {exc}")
        return exc.code
    except NetworkFileError as exc:
        note(str(exc))
        return EXIT_INVALID
    except (NonConvergence, NotComplexBalanced, SupportEnumerationTooLarge, InfeasibleConstraint) as exc:
        note(f"solver error: {exc}")
        return EXIT_SOLVER
    except (StepSizeUnderflow, NonFiniteState, StepRejected) as exc:
        note(f"integration error: {exc}")
        return EXIT_INTEGRATION
    except OSError as exc:
        note(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
