"""Command-line front end.

Exit codes: 0 ok, 2 usage or domain error, 3 I/O failure, 4 numerical failure.
Every subcommand accepts ``--config file.json`` with the same keys as its
flags (dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from importlib import resources

import numpy as np

from .core import ArrowOfTimeViolation, ComplexPole, GamowError
from .density import (
    build_density,
    check_exponential,
    evolve_density,
    exponential_subspace,
    frobenius_norm,
    projection_residual,
)
from .fitting import (
    AllFitsFailed,
    FitOptions,
    IllConditioned,
    NoSignal,
    NonConvergence,
    PoleModel,
    fit_poles,
    leading_residue_significant,
    select_order,
)
from .lineshape import higher_order_lineshape
from .semigroup import evolve_ket
from .series import Series, fmt, read_series_csv, write_series_csv

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def data_path(name: str):
    """Path of a bundled fixture, e.g. ``order2_synthetic.csv``."""
    return resources.files("gamow") / "data" / name


def dump_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats as ``%.17g``; key order is insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dump_json(v) for v in seq) + "]"
        items = [pad + dump_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


# -- option handling ---------------------------------------------------------

DEFAULTS = {
    "er": 0.0,
    "k": 0,
    "n": 0,
    "steps": 100,
    "tol": 1e-10,
    "points": 401,
    "threshold": 0.05,
    "max_iterations": 500,
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    merged = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
        else:
            merged.setdefault(key, None)
    return argparse.Namespace(**merged)


def _need(ns, *names):
    missing = [n for n in names if getattr(ns, n, None) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        raise UsageError(f"missing required option(s): {flags}")
    return [getattr(ns, n) for n in names]


def _number(value, name, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"--{name.replace('_', '-')} must be a number, got {value!r}") from None
    if kind is float and not math.isfinite(out):
        raise UsageError(f"--{name.replace('_', '-')} must be finite")
    return out


def _pole(ns) -> ComplexPole:
    er, gamma, order = _need(ns, "er", "gamma", "order")
    try:
        return ComplexPole(_number(er, "er"), _number(gamma, "gamma"), _number(order, "order", int))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _times(ns) -> np.ndarray:
    t_max, steps = _need(ns, "t_max", "steps")
    t_max = _number(t_max, "t_max")
    steps = _number(steps, "steps", int)
    if t_max < 0:
        raise UsageError(f"--t-max must satisfy t >= 0 (got {t_max}); evolution runs forward only")
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    return np.linspace(0.0, t_max, steps + 1)


# -- subcommands -------------------------------------------------------------


def cmd_evolve(ns) -> int:
    pole = _pole(ns)
    k = _number(ns.k, "k", int)
    if not 0 <= k < pole.order:
        raise UsageError(f"--k must lie in 0..{pole.order - 1}")
    (out,) = _need(ns, "out")
    times = _times(ns)
    header = ["t"]
    for j in range(pole.order):
        header += [f"re_c{j}", f"im_c{j}"]
    rows = []
    for t in times:
        c = evolve_ket(pole, k, t).coeffs
        row = [t]
        for cj in c:
            row += [cj.real, cj.imag]
        rows.append(row)
    _write_csv(out, header, rows)
    return EXIT_OK


def cmd_density(ns) -> int:
    pole = _pole(ns)
    n = _number(ns.n, "n", int)
    if not 0 <= n < pole.order:
        raise UsageError(f"--n must lie in 0..{pole.order - 1} for a pole of order {pole.order}")
    tol = _number(ns.tol, "tol")
    if not tol > 0:
        raise UsageError("--tol must be > 0")
    (out,) = _need(ns, "out")
    times = _times(ns)
    w0 = build_density(pole, n)
    norm0 = frobenius_norm(w0)
    report = check_exponential(w0, times, tol)
    rows = []
    for t, dev in zip(times, report.deviations):
        norm = frobenius_norm(evolve_density(w0, t))
        rows.append([t, norm, norm / norm0, dev])
    _write_csv(out, ["t", "frobenius_norm", "norm_ratio", "max_deviation"], rows)
    print(dump_json({"is_exponential": report.is_exponential, "max_deviation": report.max_deviation}))
    return EXIT_OK


def _matrix_json(m: np.ndarray) -> dict:
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def cmd_uniqueness(ns) -> int:
    (order,) = _need(ns, "order")
    order = _number(order, "order", int)
    tol = _number(ns.tol, "tol")
    if not tol > 0:
        raise UsageError("--tol must be > 0")
    gamma = _number(ns.gamma if ns.gamma is not None else 1.0, "gamma")
    try:
        pole = ComplexPole(_number(ns.er, "er"), gamma, order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    basis = exponential_subspace(pole, tol)
    residuals = [projection_residual(build_density(pole, m), basis) for m in range(order)]
    report = {
        "order": order,
        "dimension": len(basis),
        "basis_matrices": [_matrix_json(b.matrix) for b in basis],
        "projection_residuals": residuals,
    }
    text = dump_json(report) + "\n"
    if getattr(ns, "out", None):
        _write_text(ns.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def _weights(raw) -> list:
    if isinstance(raw, (list, tuple)):
        parts = list(raw)
    else:
        parts = [p for p in str(raw).split(",")]
    try:
        w = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"malformed --weights {raw!r}; expected comma-separated numbers") from None
    if not w or not all(math.isfinite(x) for x in w):
        raise UsageError(f"malformed --weights {raw!r}")
    return w


def cmd_lineshape(ns) -> int:
    er, gamma, raw, e_min, e_max, points, out = _need(
        ns, "er", "gamma", "weights", "e_min", "e_max", "points", "out"
    )
    weights = _weights(raw)
    try:
        pole = ComplexPole(_number(er, "er"), _number(gamma, "gamma"), len(weights))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    e_min, e_max = _number(e_min, "e_min"), _number(e_max, "e_max")
    points = _number(points, "points", int)
    if points < 2 or not e_max > e_min:
        raise UsageError("need --points >= 2 and --e-max > --e-min")
    e = np.linspace(e_min, e_max, points)
    y = higher_order_lineshape(e, pole, weights)
    buf = io.StringIO()
    write_series_csv(Series(e, y), buf, "E", "value")
    _write_text(out, buf.getvalue())
    return EXIT_OK


def _fit_entry(fit) -> dict:
    p = fit.model.poles[0]
    return {
        "order": p.order,
        "pole": [p.z.real, p.z.imag],
        "residues": [[a.real, a.imag] for a in p.residues],
        "residual_rms": fit.residual_rms,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "leading_residue_significant": leading_residue_significant(fit),
    }


def cmd_fit(ns) -> int:
    data_file, init_file, out = _need(ns, "data", "init", "out")
    try:
        data = read_series_csv(data_file)
    except OSError as exc:
        raise UsageError(f"cannot read data {data_file}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"malformed data CSV {data_file}: {exc}") from None
    try:
        with open(init_file, encoding="utf-8") as fh:
            init_raw = json.load(fh)
        init = PoleModel.from_dict(init_raw)
    except OSError as exc:
        raise UsageError(f"cannot read init {init_file}: {exc.strerror or exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed init JSON {init_file}: {exc}") from None
    if not init.poles:
        raise UsageError("init model must contain at least one pole")
    try:
        opts = FitOptions(
            max_iterations=_number(ns.max_iterations, "max_iterations", int),
            **{k: float(v) for k, v in init_raw.get("options", {}).items() if k != "max_iterations"},
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad fit options: {exc}") from None

    report = {"data": str(data_file), "samples": len(data)}
    status = EXIT_OK
    try:
        if ns.max_order is not None:
            max_order = _number(ns.max_order, "max_order", int)
            threshold = _number(ns.threshold, "threshold")
            sel = select_order(data, init.poles[0].z, max_order, threshold, opts)
            best = sel.best
            report.update(_fit_entry(best))
            report["selected_order"] = sel.order
            report["candidates"] = [_fit_entry(f) for f in sel.fits]
            report["failed_orders"] = [{"order": o, "error": m} for o, m in sel.failures]
        else:
            fit = fit_poles(data, init, opts)
            report.update(_fit_entry(fit))
            report["model"] = fit.model.to_dict()
    except NonConvergence as exc:
        status = EXIT_NUMERIC
        report["error"] = str(exc)
        if exc.result is not None:
            report.update(_fit_entry(exc.result))
            report["converged"] = False
    except (AllFitsFailed, IllConditioned) as exc:
        status = EXIT_NUMERIC
        report["error"] = str(exc)
    except (NoSignal, ValueError) as exc:
        raise UsageError(str(exc)) from None
    _write_text(out, dump_json(report) + "\n")
    return status


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file with default values for the flags")
        p.set_defaults(func=func)
        return p

    def pole_flags(p):
        p.add_argument("--er", type=float, help="resonance energy E_R")
        p.add_argument("--gamma", type=float, help="width Gamma > 0")
        p.add_argument("--order", type=int, help="pole order r >= 1")

    def time_flags(p):
        p.add_argument("--t-max", type=float, help="last time (t >= 0)")
        p.add_argument("--steps", type=int, help="number of time steps (default 100)")

    p = add("evolve", cmd_evolve, "evolve one chain ket, write coefficients")
    pole_flags(p)
    p.add_argument("--k", type=int, help="chain index 0..order-1")
    time_flags(p)
    p.add_argument("--out", help="output CSV")

    p = add("density", cmd_density, "evolve W(n), write norm and decay deviation")
    pole_flags(p)
    p.add_argument("--n", type=int, help="density index 0..order-1")
    time_flags(p)
    p.add_argument("--tol", type=float, help="decay-law tolerance (default 1e-10)")
    p.add_argument("--out", help="output CSV")

    p = add("uniqueness", cmd_uniqueness, "basis of all purely exponentially decaying operators")
    p.add_argument("--order", type=int, help="pole order r >= 1")
    p.add_argument("--tol", type=float, help="relative SVD rank tolerance (default 1e-10)")
    p.add_argument("--er", type=float, help="resonance energy (default 0)")
    p.add_argument("--gamma", type=float, help="width (default 1)")
    p.add_argument("--out", help="also write the JSON report here")

    p = add("lineshape", cmd_lineshape, "Breit-Wigner plus derivative line shape")
    p.add_argument("--er", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--weights", help="comma-separated weights w0,w1,...")
    p.add_argument("--e-min", type=float)
    p.add_argument("--e-max", type=float)
    p.add_argument("--points", type=int, help="grid points (default 401)")
    p.add_argument("--out", help="output CSV")

    p = add("fit", cmd_fit, "fit a pole model to intensity data")
    p.add_argument("--data", help="CSV with columns E, intensity")
    p.add_argument("--init", help="JSON initial pole model")
    p.add_argument("--max-order", type=int, help="select order 1..max-order")
    p.add_argument("--threshold", type=float, help="order-selection threshold (default 0.05)")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--out", help="output JSON report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    func = args.func
    del args.func, args.command
    try:
        ns = _merge_config(args)
        return func(ns)
    except (UsageError, ArrowOfTimeViolation) as exc:
        print(f"gamow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gamow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GamowError as exc:
        print(f"gamow: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
