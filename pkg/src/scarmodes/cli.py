"""
Command-line front end: ``python3 -m scarmodes <command> [flags]``.

Commands: symbol, bnf, evolve, quasimode, cylinder, sweep.  Every command
accepts ``--config FILE.json`` (keys are flag destinations, e.g.
``"epsilon2": 0.3``); explicit flags override the file.  Every artifact
embeds the full configuration and the library version.  Exit codes: 0 ok,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import operator
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


# --- symbol expressions --------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul}


def parse_symbol_expr(text: str, r: int = 1):
    """Polynomial symbol from an expression in x, xi, hbar (or x0, xi0, x1, ...).

    Example: ``"2*x*xi + x**3"``.  Only +, -, *, integer powers and numeric
    constants are accepted.
    """
    from .weyl_symbols import PolySymbol

    names = {"hbar": PolySymbol.hbar(r)}
    for i in range(r):
        names[f"x{i}"] = PolySymbol.x(i, r)
        names[f"xi{i}"] = PolySymbol.xi(i, r)
    if r == 1:
        names["x"], names["xi"] = names["x0"], names["xi0"]

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return PolySymbol.constant(r, node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown variable {node.id!r}")
            return names[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -1 * v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int) and node.right.value >= 0):
                    raise ConfigError("exponents must be non-negative integer literals")
                return ev(node.left) ** node.right.value
            if type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"unsupported expression element: {ast.dump(node)[:60]}")

    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse symbol expression: {exc}") from None
    return ev(tree).prune()


def _load_symbol(args):
    from .birkhoff import HBAR_WEIGHT, transverse_symbol
    from .weyl_symbols import PolySymbol

    if args.expr:
        return parse_symbol_expr(args.expr, args.r)
    if args.input:
        return PolySymbol.from_jsonl(Path(args.input).read_text(), args.r)
    return transverse_symbol(args.E0, args.r, args.taylor_cap, args.m).truncate(args.taylor_cap, HBAR_WEIGHT)


# --- artifact helpers ---------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


def config_dict(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def envelope(args, result) -> dict:
    return {"schema": SCHEMA, "version": __version__, "config": config_dict(args), "result": _jsonable(result)}


def csv_text(args, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"#schema={SCHEMA}\n")
    buf.write(f"#version={__version__}\n")
    buf.write("#config=" + json.dumps(_jsonable(config_dict(args)), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def read_csv(text: str):
    """Parse an artifact CSV: returns (meta, rows) with meta holding schema, version and config."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key] = json.loads(val) if key == "config" else val
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _emit(args, text: str, name: str | None = None):
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text)
    elif args.output_dir and name:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _hbar_value(text) -> float:
    """Accept decimals or powers of two written as 2^-k."""
    s = str(text).strip()
    if s.startswith("2^"):
        return 2.0 ** float(s[2:])
    return float(s)


def _hbar_list(text) -> list:
    return [_hbar_value(v) for v in str(text).split(",") if v.strip()]


# --- commands -----------------------------------------------------------------


def cmd_symbol(args):
    from .birkhoff import HBAR_WEIGHT
    from .weyl_symbols import moyal_bracket, moyal_product, poisson_bracket, quantize

    p = _load_symbol(args)
    if args.op == "show":
        out = p
    else:
        if not args.other:
            raise ConfigError(f"--other is required for --op {args.op}")
        q = parse_symbol_expr(args.other, args.r)
        if args.op == "product":
            out = moyal_product(p, q, args.max_weight, HBAR_WEIGHT if args.max_weight is not None else 1)
        elif args.op == "bracket":
            out = moyal_bracket(p, q)
        elif args.op == "poisson":
            out = poisson_bracket(p, q)
        else:  # pragma: no cover - argparse restricts choices
            raise ConfigError(args.op)
    if args.quantize:
        M = quantize(out, _hbar_value(args.hbar), args.basis_cap)
        res = {"symbol": _symbol_rows(out), "matrix_re": M.entries.real, "matrix_im": M.entries.imag,
               "interior": M.interior}
        _emit(args, json.dumps(envelope(args, res), indent=1) + "\n", "symbol.json")
    else:
        _emit(args, out.to_jsonl(), "symbol.jsonl")
    return EXIT_OK


def _symbol_rows(sym):
    return [{"alpha": list(a), "beta": list(b), "k": k, "re": c.real, "im": c.imag}
            for (a, b, k), c in sorted(sym.terms.items())]


def cmd_bnf(args):
    from .birkhoff import classical_bnf, quantum_symbol_bnf, roundtrip_error, symplectic_normalization

    sym = _load_symbol(args)
    if args.degree_cap < 2:
        raise ConfigError("degree cap must be >= 2")
    lam = _float_list(args.lam) if args.lam else list(np.atleast_1d(symplectic_normalization(sym)[1]))
    fn = quantum_symbol_bnf if args.quantum else classical_bnf
    res = fn(sym, lam, args.degree_cap)
    data = res.to_dict()
    data["roundtrip_error"] = roundtrip_error(res)
    _emit(args, json.dumps(envelope(args, data), indent=1) + "\n", "bnf.json")
    if args.table:
        lines = ["degree  alpha  beta  k  coefficient"]
        for d in range(2, args.degree_cap + 3):
            block = res.resonant.select(lambda key, c, d=d: sum(key[0]) + sum(key[1]) + 2 * key[2] == d)
            for (a, b, k), c in sorted(block.terms.items()):
                lines.append(f"{d:6d}  {list(a)}  {list(b)}  {k}  {c.real:+.12g}{c.imag:+.3g}j")
        lines.append("generators:")
        for d, a, b, k, c in res.generator_table():
            lines.append(f"{d:6d}  {list(a)}  {list(b)}  {k}  {c.real:+.12g}{c.imag:+.3g}j")
        sys.stderr.write("\n".join(lines) + "\n")
    return EXIT_OK


def _normal_form(args, hbar):
    from .birkhoff import HBAR_WEIGHT, quadratic_normal_form, quantum_bnf, transverse_symbol

    if args.model == "quadratic":
        return quadratic_normal_form([2.0 * np.sqrt(args.E0)], hbar, args.basis_cap)
    sym = transverse_symbol(args.E0, 1, args.degree_cap + 2).truncate(args.degree_cap + 2, HBAR_WEIGHT)
    return quantum_bnf(sym, [2.0 * np.sqrt(args.E0)], args.degree_cap, hbar, args.basis_cap, with_remainder=False)


def _check_order(args, hbar):
    from .fermi_model import validate_parameter_order

    validate_parameter_order(args.epsilon1, args.epsilon2, args.degree_cap, args.dyson_order, hbar, args.hbar0)


def _resolve_degree_cap(args):
    from .birkhoff import default_degree_cap

    if args.degree_cap is None:
        args.degree_cap = default_degree_cap(args.epsilon2)


def cmd_evolve(args):
    from .propagation import EvolutionPlan, dyson_error, evolve_full, microlocal_mass_outside

    _resolve_degree_cap(args)
    hbar = _hbar_value(args.hbar)
    _check_order(args, hbar)
    nf = _normal_form(args, hbar)
    plan = EvolutionPlan(nf.lam, nf, args.dyson_order, args.epsilon2)
    fracs = _float_list(args.t_grid)
    rows = []
    for frac in fracs:
        t = frac * plan.T_eps
        st = evolve_full(plan, t)
        rows.append({
            "t": t,
            "norm": st.norm(),
            "dyson_error": dyson_error(plan, t),
            "mass_outside": microlocal_mass_outside(st, hbar ** (args.epsilon2 / 3)),
        })
    _emit(args, csv_text(args, ["t", "norm", "dyson_error", "mass_outside"], rows), "evolve.csv")
    return EXIT_OK


QUASIMODE_COLUMNS = ["hbar", "T", "measured_width", "predicted_width", "norm_ratio", "mass_outside", "retained_mass"]


def quasimode_result(args, hbar: float) -> dict:
    from .fermi_model import partial_localization, periodic_grid, restrict, transport_to_grid, upsilon
    from .propagation import EvolutionPlan
    from .quasimode import make_cutoff, quasimode_report, width_constant

    nf = _normal_form(args, hbar)
    plan = EvolutionPlan(nf.lam, nf, args.dyson_order, args.epsilon2)
    chi = make_cutoff(args.epsilon2)
    T = plan.T_eps if args.T is None else args.T
    rep, avg = quasimode_report(plan, chi, T, args.f_slope, with_mass=not args.no_mass)
    eps3 = width_constant(max(plan.lam), args.epsilon2) / 4 if args.epsilon3 is None else args.epsilon3
    if eps3 > 0 and args.model == "full":
        work = periodic_grid(3 * args.epsilon1, 3 * args.n_x)
        x = periodic_grid(args.epsilon1, args.n_x)
        tr = transport_to_grid(avg, nf, work)
        u = upsilon(x, args.epsilon1) * restrict(tr.values, work, x)
        u = u / np.linalg.norm(u)
        loc = partial_localization(u, x, hbar, args.E0, args.f_slope * hbar, eps3 * hbar / abs(np.log(hbar)))
        rep.retained_mass = loc["retained_mass"]
        rep.extra.update(epsilon3=eps3, best_mass=loc["best_mass"], grid_width=loc["width"])
    d = rep.to_dict()
    d["within_bound"] = bool(rep.measured_width <= rep.width_bound)
    return d


def cmd_quasimode(args):
    _resolve_degree_cap(args)
    hbar = _hbar_value(args.hbar)
    _check_order(args, hbar)
    d = quasimode_result(args, hbar)
    _emit(args, json.dumps(envelope(args, d), indent=1) + "\n", "quasimode.json")
    if args.csv:
        path = Path(args.csv)
        row = csv_text(args, QUASIMODE_COLUMNS, [d])
        if path.exists() and path.stat().st_size > 0:
            row = row.splitlines(keepends=True)[-1]
        with path.open("a") as fh:
            fh.write(row)
    return EXIT_OK


CYLINDER_COLUMNS = ["hbar", "k", "E0", "residual", "bound", "ratio", "husimi_mass", "retained_mass", "L", "n_s"]


def cylinder_row(args, k: int) -> dict:
    from .fermi_model import CylinderConfig, cylinder_run

    cfg = CylinderConfig(
        L=args.length, epsilon1=args.epsilon1, epsilon2=args.epsilon2, degree_cap=args.degree_cap,
        l=args.dyson_order, basis_cap=args.basis_cap, n_x=args.n_x, n_s=args.n_s, hbar0=args.hbar0,
        epsilon3=args.epsilon3,
    )
    if args.dump_fields:
        rep, fld = cylinder_run(cfg, k, return_field=True)
        out = Path(args.dump_fields)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"field_L{args.length:g}_k{k}.bin").write_bytes(fld.to_bytes())
        side = dict(fld.sidecar(), hbar=rep.hbar, k=k, version=__version__)
        (out / f"field_L{args.length:g}_k{k}.json").write_text(json.dumps(_jsonable(side), indent=1) + "\n")
    else:
        rep = cylinder_run(cfg, k)
    return _jsonable(rep.to_dict())


def _cylinder_modes(args) -> list:
    from .fermi_model import mode_for_hbar

    if args.mode_k:
        return [int(v) for v in str(args.mode_k).split(",") if v.strip()]
    if args.hbar_list:
        return [mode_for_hbar(args.length, h) for h in _hbar_list(args.hbar_list)]
    raise ConfigError("cylinder needs --mode-k or --hbar-list")


def cmd_cylinder(args):
    _resolve_degree_cap(args)
    modes = _cylinder_modes(args)
    rows = _map(args, cylinder_row, modes)
    _emit(args, csv_text(args, CYLINDER_COLUMNS, rows), "cylinder.csv")
    return EXIT_OK


def _sweep_quasimode(args, hbar):
    _check_order(args, hbar)
    return quasimode_result(args, hbar)


def _map(args, fn, items):
    workers = getattr(args, "workers", 1) or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(args, it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, args, it) for it in items]
        return [f.result() for f in futures]  # merged in parameter order


def cmd_sweep(args):
    _resolve_degree_cap(args)
    hbars = _hbar_list(args.hbar_list)
    if not hbars:
        raise ConfigError("sweep needs --hbar-list")
    if args.target == "quasimode":
        rows = _map(args, _sweep_quasimode, hbars)
        text = csv_text(args, QUASIMODE_COLUMNS, rows)
    else:
        from .fermi_model import mode_for_hbar

        rows = _map(args, cylinder_row, [mode_for_hbar(args.length, h) for h in hbars])
        text = csv_text(args, CYLINDER_COLUMNS, rows)
    _emit(args, text, f"sweep_{args.target}.csv")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--output", help="write the artifact here instead of stdout")
    p.add_argument("--output-dir", dest="output_dir", help="directory for artifacts (when --output is absent)")
    p.add_argument("--seed", type=int, default=0, help="seed echoed into artifacts (runs are deterministic)")


def _physics(p, hbar_required: bool = False):
    p.add_argument("--epsilon1", type=float, default=0.5)
    p.add_argument("--epsilon2", type=float, default=0.3)
    p.add_argument("--degree-cap", dest="degree_cap", type=int, default=None, help="default floor(3/epsilon2)")
    p.add_argument("--dyson-order", dest="dyson_order", type=int, default=2)
    p.add_argument("--basis-cap", dest="basis_cap", type=int, default=64)
    p.add_argument("--E0", dest="E0", type=float, default=1.0)
    p.add_argument("--hbar0", type=float, default=2.0**-8, help="largest admissible hbar")
    p.add_argument("--model", choices=["full", "quadratic"], default="full")
    if hbar_required:
        p.add_argument("--hbar", required=True, help="decimal or 2^-k")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scarmodes", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("symbol", help="symbol algebra and quantization")
    _common(p)
    p.add_argument("--expr", help='symbol expression, e.g. "2*x*xi + x**3"')
    p.add_argument("--input", help="JSON-lines symbol file")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--E0", dest="E0", type=float, default=1.0)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--taylor-cap", dest="taylor_cap", type=int, default=6)
    p.add_argument("--op", choices=["show", "product", "bracket", "poisson"], default="show")
    p.add_argument("--other", help="second operand expression")
    p.add_argument("--max-weight", dest="max_weight", type=int, default=None)
    p.add_argument("--quantize", action="store_true")
    p.add_argument("--hbar", default="0.01")
    p.add_argument("--basis-cap", dest="basis_cap", type=int, default=16)
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("bnf", help="Birkhoff normal form")
    _common(p)
    p.add_argument("--expr")
    p.add_argument("--input")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--E0", dest="E0", type=float, default=1.0)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--taylor-cap", dest="taylor_cap", type=int, default=12)
    p.add_argument("--degree-cap", dest="degree_cap", type=int, required=True)
    p.add_argument("--lam", help="comma-separated rates (default: from the quadratic part)")
    p.add_argument("--quantum", action="store_true", help="Moyal-bracket conjugation")
    p.add_argument("--table", action="store_true", help="human-readable table on stderr")
    p.set_defaults(func=cmd_bnf)

    p = sub.add_parser("evolve", help="propagate the ground state under the normal form")
    _common(p)
    _physics(p, hbar_required=True)
    p.add_argument("--t-grid", dest="t_grid", default="0,0.25,0.5,0.75,1", help="times as fractions of T_eps")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("quasimode", help="averaged quasimode report")
    _common(p)
    _physics(p, hbar_required=True)
    p.add_argument("--epsilon3", type=float, default=None, help="window half-width in hbar/|log hbar| units")
    p.add_argument("--f-slope", dest="f_slope", type=float, default=0.0, help="f(hbar)/hbar")
    p.add_argument("--T", dest="T", type=float, default=None, help="averaging time (default T_eps)")
    p.add_argument("--n-x", dest="n_x", type=int, default=512)
    p.add_argument("--no-mass", dest="no_mass", action="store_true")
    p.add_argument("--csv", help="append a sweep row to this CSV")
    p.set_defaults(func=cmd_quasimode)

    p = sub.add_parser("cylinder", help="end-to-end residual on the hyperbolic cylinder")
    _common(p)
    _physics(p)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--mode-k", dest="mode_k", help="comma-separated circle modes")
    p.add_argument("--hbar-list", dest="hbar_list", help="comma-separated target hbar values")
    p.add_argument("--epsilon3", type=float, default=None)
    p.add_argument("--n-x", dest="n_x", type=int, default=512)
    p.add_argument("--n-s", dest="n_s", type=int, default=None)
    p.add_argument("--dump-fields", dest="dump_fields", help="directory for binary field dumps")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_cylinder)

    p = sub.add_parser("sweep", help="parallel sweep over hbar")
    _common(p)
    _physics(p)
    p.add_argument("--target", choices=["quasimode", "cylinder"], default="quasimode")
    p.add_argument("--hbar-list", dest="hbar_list", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--epsilon3", type=float, default=None)
    p.add_argument("--f-slope", dest="f_slope", type=float, default=0.0)
    p.add_argument("--T", dest="T", type=float, default=None)
    p.add_argument("--n-x", dest="n_x", type=int, default=512)
    p.add_argument("--n-s", dest="n_s", type=int, default=None)
    p.add_argument("--no-mass", dest="no_mass", action="store_true")
    p.add_argument("--dump-fields", dest="dump_fields", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in _subparsers(parser):
        try:
            cfg = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {known.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k: v for k, v in cfg.items() if k != "command"}
        sub = _subparsers(parser)[known.command]
        known_dests = {a.dest for a in sub._actions}
        unknown = set(cfg) - known_dests
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for action in sub._actions:
            if action.dest in cfg:
                action.required = False  # satisfied by the file
        sub.set_defaults(**cfg)
    return parser.parse_args(argv)  # explicit flags override the file


def _subparsers(parser) -> dict:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
