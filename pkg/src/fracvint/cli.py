"""Batch front-end: parse a run configuration, dispatch, write CSV artifacts.

Config values come from flags or from a flat `key = value` file given with
--config; flags override file values and unknown file keys are rejected.
Every artifact is CSV with a header row and 15-significant-digit values,
so identical configurations produce byte-identical output.  Exit codes:
0 success, 2 invalid configuration, 3 solver non-convergence, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .grid import as_sigma, make_grid
from .lagrangian import BUILTIN_MODELS, builtin_model
from .operators import gl_coefficients
from .schemes import (
    SCHEME_KINDS,
    EmbeddingScheme,
    coherence_report,
    embed_friction_residual,
    variational_residual,
)
from .solver import (
    SingularMatrixError,
    SolveConfig,
    StepConvergenceError,
    harmonic_convergence_study,
    solve_bvp,
)

__all__ = ["ConfigError", "RunConfig", "main", "parse_config", "run"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Invalid run configuration; `field` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"field '{field_name}': {message}")
        self.field = field_name


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_sigma(raw: str) -> int:
    try:
        return as_sigma(raw)
    except ValueError:
        return as_sigma(int(raw))


def _parse_vector(raw: str) -> tuple[float, ...]:
    parts = [p for p in str(raw).split(",") if p.strip() != ""]
    if not parts:
        raise ValueError("empty vector")
    return tuple(float(p) for p in parts)


def _parse_int_list(raw: str) -> tuple[int, ...]:
    parts = [p for p in str(raw).split(",") if p.strip() != ""]
    if not parts:
        raise ValueError("empty list")
    return tuple(int(p) for p in parts)


def _parse_str(raw: str) -> str:
    return str(raw)


@dataclass(frozen=True)
class FieldSpec:
    parse: Callable[[str], Any]
    help: str
    default: Any = None
    required: bool = False


# Field tables per command; file keys are validated against these.
_SCHEME_FIELDS = {
    "kind": FieldSpec(_parse_str, f"scheme kind, one of {', '.join(SCHEME_KINDS)}", required=True),
    "sigma": FieldSpec(_parse_sigma, "orientation, '-' or '+'", required=True),
    "alpha": FieldSpec(_parse_float, "derivative order in (0, 1] (default 1)", default=1.0),
}
_GRID_FIELDS = {
    "a": FieldSpec(_parse_float, "interval start (default 0)", default=0.0),
    "b": FieldSpec(_parse_float, "interval end (default 1)", default=1.0),
    "N": FieldSpec(_parse_int, "number of steps", required=True),
}

COMMAND_FIELDS: dict[str, dict[str, FieldSpec]] = {
    "coeffs": {
        "alpha": FieldSpec(_parse_float, "derivative order in (0, 1]", required=True),
        "n": FieldSpec(_parse_int, "largest weight index to tabulate", required=True),
        "out": FieldSpec(_parse_str, "output CSV path (default coeffs.csv)", default="coeffs.csv"),
    },
    "coherence": {
        **_SCHEME_FIELDS,
        **_GRID_FIELDS,
        "model": FieldSpec(_parse_str, "built-in model name (default harmonic)", default="harmonic"),
        "dim": FieldSpec(_parse_int, "model dimension (default 1)", default=1),
        "samples": FieldSpec(_parse_int, "number of random trajectories", required=True),
        "seed": FieldSpec(_parse_int, "random seed (default 0)", default=0),
        "out": FieldSpec(_parse_str, "output CSV path (default coherence.csv)", default="coherence.csv"),
    },
    "solve": {
        **_SCHEME_FIELDS,
        **_GRID_FIELDS,
        "model": FieldSpec(_parse_str, "built-in model name", required=True),
        "q0": FieldSpec(_parse_vector, "left endpoint, comma-separated components", required=True),
        "qN": FieldSpec(_parse_vector, "right endpoint, comma-separated components", required=True),
        "tol": FieldSpec(_parse_float, "residual tolerance (default 1e-10)", default=1e-10),
        "max_iters": FieldSpec(_parse_int, "Newton iteration budget (default 50)", default=50),
        "out": FieldSpec(_parse_str, "output CSV path (default solve.csv)", default="solve.csv"),
    },
    "converge": {
        "model": FieldSpec(_parse_str, "model name (only 'harmonic' is supported)", required=True),
        "Ns": FieldSpec(_parse_int_list, "step counts, comma-separated (default 8,16,32,64)",
                        default=(8, 16, 32, 64)),
        "a": FieldSpec(_parse_float, "interval start (default 0)", default=0.0),
        "b": FieldSpec(_parse_float, "interval end (default 1)", default=1.0),
        "sigma": FieldSpec(_parse_sigma, "orientation, '-' or '+' (default '-')", default=-1),
        "out": FieldSpec(_parse_str, "output CSV path (default converge.csv)", default="converge.csv"),
    },
    "friction-demo": {
        "N": FieldSpec(_parse_int, "number of steps", required=True),
        "h": FieldSpec(_parse_float, "step size", required=True),
        "a": FieldSpec(_parse_float, "interval start (default 0)", default=0.0),
        "q0": FieldSpec(_parse_vector, "first node value", required=True),
        "q1": FieldSpec(_parse_vector, "second node value", required=True),
        "out": FieldSpec(_parse_str, "output CSV path (default friction.csv)", default="friction.csv"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """A validated command plus its resolved option values."""

    command: str
    options: dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name: str) -> Any:
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _read_config_file(path: str, allowed: dict[str, FieldSpec]) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("config", f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in allowed:
            raise ConfigError(key, f"unknown key on line {lineno}")
        values[key] = raw.strip()
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracvint",
        description="Discrete embeddings of classical and fractional Lagrangian systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, fields in COMMAND_FIELDS.items():
        p = sub.add_parser(command, help=f"run the {command} command")
        p.add_argument("--config", default=None, help="flat key=value config file; flags override")
        for name, spec in fields.items():
            p.add_argument(f"--{name}", dest=f"opt_{name}", default=None, help=spec.help)
    return parser


def _validate(command: str, opts: dict[str, Any]) -> None:
    def bad(name: str, msg: str) -> None:
        raise ConfigError(name, msg)

    if "alpha" in opts:
        if not 0.0 < opts["alpha"] <= 1.0:
            bad("alpha", f"expected a value in (0, 1], got {opts['alpha']}")
    if "kind" in opts:
        if opts["kind"] not in SCHEME_KINDS:
            bad("kind", f"expected one of {', '.join(SCHEME_KINDS)}, got {opts['kind']!r}")
        if opts["kind"] != "fractional" and opts.get("alpha", 1.0) != 1.0:
            bad("alpha", f"classical kinds require alpha = 1, got {opts['alpha']}")
    if "n" in opts and opts["n"] < 0:
        bad("n", f"expected a nonnegative index, got {opts['n']}")
    if "N" in opts and opts["N"] < 2:
        bad("N", f"expected N >= 2, got {opts['N']}")
    if "a" in opts and "b" in opts and not opts["b"] > opts["a"]:
        bad("b", f"expected b > a, got a={opts['a']}, b={opts['b']}")
    if "h" in opts and not opts["h"] > 0.0:
        bad("h", f"expected a positive step size, got {opts['h']}")
    if "samples" in opts and opts["samples"] < 1:
        bad("samples", f"expected a positive count, got {opts['samples']}")
    if "dim" in opts and opts["dim"] < 1:
        bad("dim", f"expected a positive dimension, got {opts['dim']}")
    if "tol" in opts and not opts["tol"] > 0.0:
        bad("tol", f"expected a positive tolerance, got {opts['tol']}")
    if "max_iters" in opts and opts["max_iters"] < 1:
        bad("max_iters", f"expected a positive count, got {opts['max_iters']}")
    if "model" in opts and opts["model"] not in BUILTIN_MODELS:
        bad("model", f"unknown model {opts['model']!r} (known: {', '.join(sorted(BUILTIN_MODELS))})")
    if command == "converge":
        if opts["model"] != "harmonic":
            bad("model", "refinement study supports only the harmonic model")
        if len(opts["Ns"]) < 2:
            bad("Ns", "need at least two step counts to fit an order")
        for n in opts["Ns"]:
            if n < 2:
                bad("Ns", f"every step count must be >= 2, got {n}")
    if command == "solve" and len(opts["q0"]) != len(opts["qN"]):
        bad("qN", f"dimension {len(opts['qN'])} does not match q0 dimension {len(opts['q0'])}")
    if command == "friction-demo" and len(opts["q0"]) != len(opts["q1"]):
        bad("q1", f"dimension {len(opts['q1'])} does not match q0 dimension {len(opts['q0'])}")


def parse_config(argv=None) -> RunConfig:
    """Turn command-line arguments (plus an optional config file) into a RunConfig.

    Flags override file values; unknown file keys, missing required fields,
    and constraint violations raise ConfigError naming the field.
    """
    args = _build_parser().parse_args(argv)
    command = args.command
    fields = COMMAND_FIELDS[command]

    raw: dict[str, str] = {}
    if args.config is not None:
        try:
            raw.update(_read_config_file(args.config, fields))
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from exc
    for name in fields:
        flag_value = getattr(args, f"opt_{name}")
        if flag_value is not None:
            raw[name] = flag_value

    missing = [name for name, spec in fields.items() if spec.required and name not in raw]
    if missing:
        raise ConfigError(missing[0], f"missing required fields: {', '.join(missing)}")

    opts: dict[str, Any] = {}
    for name, spec in fields.items():
        if name in raw:
            try:
                opts[name] = spec.parse(raw[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, f"cannot parse {raw[name]!r}: {exc}") from exc
        else:
            opts[name] = spec.default
    _validate(command, opts)
    return RunConfig(command=command, options=opts)


def _fmt(x: float) -> str:
    return f"{float(x):.15g}"


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _trajectory_rows(g, values: np.ndarray, residual) -> tuple[list[str], list[list[str]]]:
    d = values.shape[1]
    header = ["k", "t"]
    header += [f"Q_{c}" for c in range(d)]
    header += [f"residual_{c}" for c in range(d)]
    rows = []
    for k in range(g.N + 1):
        row = [str(k), _fmt(g.tau[k])]
        row += [_fmt(x) for x in values[k]]
        if residual is not None and residual.start <= k < residual.stop:
            row += [_fmt(x) for x in residual.node(k)]
        else:
            row += [""] * d
        rows.append(row)
    return header, rows


def _run_coeffs(cfg: RunConfig) -> int:
    table = gl_coefficients(cfg.alpha, cfg.n)
    rows = [[str(r), _fmt(c)] for r, c in enumerate(table.coeffs)]
    _write_csv(cfg.out, ["r", "alpha_r"], rows)
    print(f"coeffs: alpha={_fmt(cfg.alpha)} n={cfg.n} -> {cfg.out}")
    return EXIT_OK


def _run_coherence(cfg: RunConfig) -> int:
    g = make_grid(cfg.a, cfg.b, cfg.N)
    model = builtin_model(cfg.model, cfg.dim)
    scheme = EmbeddingScheme(sigma=cfg.sigma, alpha=cfg.alpha, kind=cfg.kind)
    report = coherence_report(scheme, g, model, cfg.samples, cfg.seed)
    sigma_txt = "-" if cfg.sigma < 0 else "+"
    _write_csv(
        cfg.out,
        ["kind", "sigma", "alpha", "N", "max_abs_discrepancy", "gradient_check_error"],
        [[cfg.kind, sigma_txt, _fmt(cfg.alpha), str(cfg.N),
          _fmt(report.max_abs_discrepancy), _fmt(report.gradient_check_error)]],
    )
    print(
        f"coherence: kind={cfg.kind} sigma={sigma_txt} alpha={_fmt(cfg.alpha)} N={cfg.N} "
        f"max_abs_discrepancy={_fmt(report.max_abs_discrepancy)} "
        f"compared={report.compared_indices.start}..{report.compared_indices.stop - 1} "
        f"-> {cfg.out}"
    )
    return EXIT_OK


def _run_solve(cfg: RunConfig) -> int:
    g = make_grid(cfg.a, cfg.b, cfg.N)
    dim = len(cfg.q0)
    model = builtin_model(cfg.model, dim)
    scheme = EmbeddingScheme(sigma=cfg.sigma, alpha=cfg.alpha, kind=cfg.kind)
    solve_cfg = SolveConfig(tol=cfg.tol, max_iters=cfg.max_iters)
    result = solve_bvp(scheme, g, model, cfg.q0, cfg.qN, config=solve_cfg)
    if not result.converged:
        print(
            f"error: convergence: residual_norm={_fmt(result.residual_norm)} "
            f"after {result.iterations} iterations (tol={_fmt(cfg.tol)})",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    residual = variational_residual(scheme, g, model, result.trajectory)
    header, rows = _trajectory_rows(g, result.trajectory.values, residual)
    _write_csv(cfg.out, header, rows)
    print(
        f"solve: converged in {result.iterations} iterations "
        f"residual_norm={_fmt(result.residual_norm)} -> {cfg.out}"
    )
    return EXIT_OK


def _run_converge(cfg: RunConfig) -> int:
    study = harmonic_convergence_study(cfg.Ns, a=cfg.a, b=cfg.b, sigma=cfg.sigma)
    rows = [[str(N), _fmt(h), _fmt(err)] for (N, h, err) in study.rows]
    _write_csv(cfg.out, ["N", "h", "max_error"], rows)
    print(f"converge: fitted_order={_fmt(study.fitted_order)} -> {cfg.out}")
    return EXIT_OK


def _run_friction(cfg: RunConfig) -> int:
    g = make_grid(cfg.a, cfg.a + cfg.N * cfg.h, cfg.N)
    h = g.h
    d = len(cfg.q0)
    traj = np.empty((cfg.N + 1, d))
    traj[0] = cfg.q0
    traj[1] = cfg.q1
    # march the scheme: each new node solves its residual equation exactly
    lead = 1.0 / h**2 + 1.0 / h + 1.0
    for k in range(2, cfg.N + 1):
        traj[k] = ((2.0 / h**2 + 1.0 / h) * traj[k - 1] - traj[k - 2] / h**2) / lead
    residual = embed_friction_residual(g, traj)
    header, rows = _trajectory_rows(g, traj, residual)
    _write_csv(cfg.out, header, rows)
    final = ",".join(f"{x:.6f}" for x in traj[cfg.N])
    print(f"friction-demo: Q_{cfg.N} = {final} -> {cfg.out}")
    return EXIT_OK


_RUNNERS = {
    "coeffs": _run_coeffs,
    "coherence": _run_coherence,
    "solve": _run_solve,
    "converge": _run_converge,
    "friction-demo": _run_friction,
}


def run(config: RunConfig) -> int:
    """Dispatch a validated RunConfig; returns the process exit status."""
    return _RUNNERS[config.command](config)


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(config)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepConvergenceError, SingularMatrixError) as exc:
        print(f"error: convergence: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
