"""Command-line entry point: configure, run, and report.

Subcommands: ``rho`` (critical-radius tables), ``seminorm`` (membership
reports), ``verify`` (named theorem surrogates), ``op`` (operator
application plus optional regularity-shift check) and ``semigroup`` (raw
W_y / P_y dumps).  Configuration comes from an INI-style file plus
command-line flags; flags win.  JSON reports are deterministic: rerunning
the same configuration produces byte-identical output.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, GridFunction, export_csv, import_csv
from .functions import builtin
from .potentials import (UNBOUNDED, PotentialDescriptor, critical_radius,
                         load_tabulated_radial, rho_comparison_check)
from .heat import SemigroupEngine, export_kernel_csv, perturbation_difference
from .poisson import apply_poisson, poisson_derivative
from .lipschitz import (SmoothnessParams, heat_scaling_fit,
                        verify_space_equivalence, HEAT_SLOPE_TOL)
from .operators import (DivergenceError, MultiplierSymbol, OperatorSpec,
                        apply_operator, regularity_shift_check)

SCHEMA_VERSION = 1

_EXIT = {"PASS": 0, "FAIL": 1, "INDETERMINATE": 2, "NOT-APPLICABLE": 2}


@dataclass
class RunConfiguration:
    """Flat record of everything a command run depends on."""

    potential: str = "zero"
    dim: int = 1
    grid_extent: float = 8.0
    grid_points: int = 513
    regime: str | None = None
    f: str | None = None
    alpha: float | None = None
    beta: float | None = None
    y_min: float | None = None
    y_max: float | None = None
    output: str = "json"
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"potential": self.potential, "dim": self.dim,
             "grid_extent": self.grid_extent,
             "grid_points": self.grid_points, "regime": self.regime,
             "f": self.f, "alpha": self.alpha, "beta": self.beta,
             "y_min": self.y_min, "y_max": self.y_max,
             "output": self.output}
        d.update(self.extras)
        return d

    # -- construction helpers ---------------------------------------------

    def potential_descriptor(self) -> PotentialDescriptor:
        spec = self.potential
        if spec == "zero":
            return PotentialDescriptor("zero", self.dim)
        if spec == "hermite":
            return PotentialDescriptor("hermite", self.dim)
        if spec.startswith("radial:"):
            return PotentialDescriptor("radial-power", self.dim,
                                       power=float(spec.split(":", 1)[1]))
        if spec.startswith("table:"):
            return load_tabulated_radial(spec.split(":", 1)[1], self.dim)
        raise ValueError(f"unknown potential spec {spec!r}; use zero, "
                         f"hermite, radial:<power> or table:<csv path>")

    def grid(self) -> Grid:
        return Grid(1, self.grid_extent, self.grid_points)

    def engine(self) -> SemigroupEngine:
        v = self.potential_descriptor()
        regime = self.regime
        if regime is None:
            regime = ("gaussian" if v.is_zero
                      else "mehler" if v.kind == "hermite" and self.dim == 1
                      else "spectral")
        return SemigroupEngine(regime, self.grid(), potential=v)

    def function(self, grid: Grid):
        """The configured f: a ProfileFunction or (from CSV) GridFunction."""
        if self.f is None:
            raise ValueError("this command needs --f")
        if self.f.startswith("csv:"):
            return import_csv(self.f.split(":", 1)[1], grid)
        return builtin(self.f)

    def window(self):
        if self.y_min is None and self.y_max is None:
            return None
        return (self.y_min or 0.0, self.y_max or np.inf)


def _load_config(path) -> dict:
    """Flat key = value pairs from all sections of an INI file."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_string("[run]\n" + fh.read())
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key.replace("-", "_")] = value
    return flat


def _build_configuration(args) -> RunConfiguration:
    cfg = RunConfiguration()
    if getattr(args, "config", None):
        loaded = _load_config(args.config)
        for key, value in loaded.items():
            if key in ("dim", "grid_points"):
                value = int(value)
            elif key in ("grid_extent", "alpha", "beta", "y_min", "y_max"):
                value = float(value)
            if hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                cfg.extras[key] = value
    for key in ("potential", "dim", "grid_extent", "grid_points", "regime",
                "f", "alpha", "beta", "y_min", "y_max", "output"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _input_hash(cfg: RunConfiguration) -> str:
    """sha256 over the canonical configuration and referenced CSV files."""
    digest = hashlib.sha256()
    digest.update(json.dumps(cfg.as_dict(), sort_keys=True).encode())
    for spec in (cfg.f, cfg.potential):
        if spec and (spec.startswith("csv:") or spec.startswith("table:")):
            with open(spec.split(":", 1)[1], "rb") as fh:
                digest.update(fh.read())
    return digest.hexdigest()


def _emit(payload: dict, cfg: RunConfiguration, out=None) -> None:
    """Structured payload to stdout (or a file), configuration embedded."""
    report = {"schema_version": SCHEMA_VERSION,
              "configuration": cfg.as_dict(),
              "input_sha256": _input_hash(cfg)}
    report.update(payload)
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _emit_table(rows, header, cfg: RunConfiguration, out=None) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    text = "\n".join(lines)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _symbol_from_spec(spec: str) -> MultiplierSymbol:
    """--a formats: const:<c>, indicator:<T>, table:<csv with s,value>."""
    if spec.startswith("const:"):
        return MultiplierSymbol("const", value=float(spec.split(":", 1)[1]))
    if spec.startswith("indicator:"):
        return MultiplierSymbol("indicator",
                                threshold=float(spec.split(":", 1)[1]))
    if spec.startswith("table:"):
        import csv as _csv
        ss, vals = [], []
        with open(spec.split(":", 1)[1], newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["s", "value"]:
                raise ValueError("symbol table needs an s,value header")
            for row in reader:
                ss.append(float(row[0]))
                vals.append(float(row[1]))
        return MultiplierSymbol("table", table=(tuple(ss), tuple(vals)))
    raise ValueError(f"unknown symbol spec {spec!r}")


# -- subcommands -----------------------------------------------------------


def cmd_rho(args) -> int:
    cfg = _build_configuration(args)
    v = cfg.potential_descriptor()
    xs = np.linspace(0.0, cfg.grid_extent, args.samples)
    rho = [critical_radius(v, float(x)) for x in xs]
    rows = [(repr(float(x)),
             "unbounded" if r is UNBOUNDED else repr(float(r)))
            for x, r in zip(xs, rho)]
    if cfg.output == "csv":
        _emit_table(rows, ["x", "rho"], cfg, args.out)
        return 0
    payload = {"table": [{"x": float(x),
                          "rho": None if r is UNBOUNDED else float(r)}
                         for x, r in zip(xs, rho)]}
    if args.compare and rho[0] is not UNBOUNDED:
        pairs = [(float(x), float(x) + 0.5) for x in xs[::4]]
        payload["comparison"] = rho_comparison_check(v, pairs)
    _emit(payload, cfg, args.out)
    return 0


def cmd_seminorm(args) -> int:
    cfg = _build_configuration(args)
    if cfg.alpha is None:
        raise ValueError("seminorm needs --alpha")
    engine = cfg.engine()
    profile = cfg.function(engine.grid)
    report = verify_space_equivalence(
        engine, profile, cfg.alpha, heat_window=cfg.window(),
        poisson_window=cfg.window(), fit_radius=args.fit_radius)
    d = report.as_dict()
    if cfg.output == "csv":
        rows = [(k, v) for k, v in sorted(d.items())
                if not isinstance(v, (dict, list))]
        _emit_table(rows, ["field", "value"], cfg, args.out)
    else:
        _emit({"report": d}, cfg, args.out)
    return _EXIT[report.verdict]


_THEOREMS = ("identities", "identities4", "tam2", "schau", "holder",
             "triesz", "multiplicador", "comparacion")


def cmd_verify(args) -> int:
    cfg = _build_configuration(args)
    name = args.theorem
    if name not in _THEOREMS:
        raise ValueError(f"unknown theorem {name!r}; registry: "
                         + ", ".join(_THEOREMS))
    engine = cfg.engine()
    window = cfg.window()

    if name in ("identities", "identities4"):
        if name == "identities4" and engine.potential.kind != "hermite":
            raise ValueError("identities4 is the Hermite-potential "
                             "equivalence; configure --potential hermite")
        report = verify_space_equivalence(
            engine, cfg.function(engine.grid), _need(cfg.alpha, "--alpha"),
            heat_window=window, poisson_window=window,
            fit_radius=args.fit_radius)
        _emit({"theorem": name, "verdict": report.verdict,
               "report": report.as_dict()}, cfg, args.out)
        return _EXIT[report.verdict]

    if name == "tam2":
        alpha = _need(cfg.alpha, "--alpha")
        params = SmoothnessParams(alpha, engine.grid.dimension,
                                  engine.potential.rh_exponent)
        f = cfg.function(engine.grid)
        if not isinstance(f, GridFunction):
            f = f.sample(engine.grid)
        fit = heat_scaling_fit(engine, f, params.k_heat, window=window,
                               alpha=alpha, fit_radius=args.fit_radius)
        gap = abs(fit.slope - (-params.k_heat + alpha / 2.0))
        verdict = ("PASS" if gap <= HEAT_SLOPE_TOL
                   else "FAIL" if gap >= 2.0 * HEAT_SLOPE_TOL
                   else "INDETERMINATE")
        _emit({"theorem": name, "verdict": verdict, "fit": fit.as_dict()},
              cfg, args.out)
        return _EXIT[verdict]

    if name == "comparacion":
        f = cfg.function(engine.grid)
        if not isinstance(f, GridFunction):
            f = f.sample(engine.grid)
        alpha = _need(cfg.alpha, "--alpha")
        y0 = cfg.y_min if cfg.y_min else 0.025
        ts = y0 * 2.0 ** np.arange(6)
        result = perturbation_difference(engine, f, ts)
        predicted = -(1.0 - alpha / 2.0)
        slope = result.get("slope")
        verdict = ("INDETERMINATE" if slope is None
                   else "PASS" if slope >= predicted - 0.1 else "FAIL")
        _emit({"theorem": name, "verdict": verdict, "slope": slope,
               "predicted_exponent": predicted}, cfg, args.out)
        return _EXIT[verdict]

    # regularity-shift family
    if name == "multiplicador":
        symbol = _symbol_from_spec(args.a or "const:1")
        if symbol.kind == "const":
            f = cfg.function(engine.grid)
            if not isinstance(f, GridFunction):
                f = f.sample(engine.grid)
            out_f = apply_operator(
                engine, OperatorSpec("laplace_multiplier", symbol=symbol), f)
            gap = float(np.max(np.abs(out_f.values
                                      - symbol.value * f.values)))
            verdict = "PASS" if gap <= 1e-8 else "FAIL"
            _emit({"theorem": name, "verdict": verdict,
                   "identity_gap": gap}, cfg, args.out)
            return _EXIT[verdict]
    alpha = _need(cfg.alpha, "--alpha")
    if name == "schau":
        spec = OperatorSpec("bessel", beta=_need(cfg.beta, "--beta"))
    elif name == "holder":
        beta = _need(cfg.beta, "--beta")
        if not beta < alpha:
            raise ValueError("Holder estimates need beta < alpha (the "
                             "fractional Laplacian may not exhaust the "
                             "available smoothness)")
        spec = OperatorSpec("frac_laplacian", beta=beta)
    elif name == "triesz":
        params = SmoothnessParams(alpha, engine.grid.dimension,
                                  engine.potential.rh_exponent)
        if not 1.0 < alpha <= params.alpha_max:
            raise ValueError(f"Riesz boundedness needs 1 < alpha <= "
                             f"{params.alpha_max:g}")
        spec = OperatorSpec("riesz_calderon" if args.variant == "calderon"
                            else "riesz_adjoint")
    else:  # multiplicador with a non-constant symbol
        spec = OperatorSpec("laplace_multiplier",
                            symbol=_symbol_from_spec(args.a or "const:1"))
    f = cfg.function(engine.grid)
    if not isinstance(f, GridFunction):
        f = f.sample(engine.grid)
    record = regularity_shift_check(engine, spec, f, alpha, window=window,
                                    fit_radius=args.fit_radius)
    _emit({"theorem": name, "verdict": record["verdict"],
           "alpha_out": record["alpha_out"],
           "implied_alpha": record["implied_alpha"],
           "fit_in": record["fit_in"].as_dict(),
           "fit_out": record["fit_out"].as_dict()}, cfg, args.out)
    return _EXIT[record["verdict"]]


_OP_KINDS = {"bessel": "bessel", "fracint": "frac_integral",
             "fraclap": "frac_laplacian", "riesz": None,
             "multiplier": "laplace_multiplier"}


def cmd_op(args) -> int:
    cfg = _build_configuration(args)
    engine = cfg.engine()
    kind = args.operator
    if kind not in _OP_KINDS:
        raise ValueError(f"unknown operator {kind!r}; choose from "
                         + ", ".join(_OP_KINDS))
    if kind == "riesz":
        spec = OperatorSpec("riesz_calderon" if args.variant == "calderon"
                            else "riesz_adjoint")
    elif kind == "multiplier":
        spec = OperatorSpec("laplace_multiplier",
                            symbol=_symbol_from_spec(args.a or "const:1"))
    else:
        spec = OperatorSpec(_OP_KINDS[kind], beta=_need(cfg.beta, "--beta"))
    f = cfg.function(engine.grid)
    if not isinstance(f, GridFunction):
        f = f.sample(engine.grid)
    try:
        out_f = apply_operator(engine, spec, f)
    except DivergenceError as exc:
        _emit({"error": "divergence", "message": str(exc)}, cfg, args.out)
        return 1
    if args.values_csv:
        export_csv(out_f, args.values_csv)
    payload = {"operator": kind,
               "sup_norm": float(np.max(np.abs(out_f.values))),
               "values_csv": args.values_csv}
    code = 0
    if cfg.alpha is not None and args.shift_check:
        record = regularity_shift_check(engine, spec, f, cfg.alpha,
                                        window=cfg.window(),
                                        fit_radius=args.fit_radius)
        payload["shift_check"] = {
            "verdict": record["verdict"],
            "alpha_out": record["alpha_out"],
            "implied_alpha": record["implied_alpha"],
            "fit_out": record["fit_out"].as_dict()}
        code = _EXIT[record["verdict"]]
    if cfg.output == "csv" and not args.values_csv:
        axis = engine.grid.axis
        _emit_table(zip(map(repr, axis), map(repr, out_f.values)),
                    ["x1", "value"], cfg, args.out)
        return code
    _emit(payload, cfg, args.out)
    return code


def cmd_semigroup(args) -> int:
    cfg = _build_configuration(args)
    engine = cfg.engine()
    f = cfg.function(engine.grid)
    if not isinstance(f, GridFunction):
        f = f.sample(engine.grid)
    y = args.y
    if args.operator == "heat":
        out_f = engine.apply(f, y, k=args.k)
    elif args.k == 0:
        out_f = apply_poisson(engine, f, y)
    else:
        out_f = poisson_derivative(engine, f, y, k=args.k)
    if args.kernel_csv:
        export_kernel_csv(engine, y, args.kernel_csv, k=args.k)
    if args.values_csv:
        export_csv(out_f, args.values_csv)
    if cfg.output == "csv" and not args.values_csv:
        _emit_table(zip(map(repr, engine.grid.axis),
                        map(repr, out_f.values)),
                    ["x1", "value"], cfg, args.out)
        return 0
    _emit({"operator": args.operator, "y": y, "k": args.k,
           "sup_norm": float(np.max(np.abs(out_f.values))),
           "values_csv": args.values_csv, "kernel_csv": args.kernel_csv},
          cfg, args.out)
    return 0


def _need(value, flag):
    if value is None:
        raise ValueError(f"this command needs {flag}")
    return value


# -- argument parsing ------------------------------------------------------


def _common_flags(sub):
    sub.add_argument("--config", help="INI configuration file; flags win")
    sub.add_argument("--potential", help="zero | hermite | radial:<p> | "
                                         "table:<csv>")
    sub.add_argument("--dim", type=int)
    sub.add_argument("--grid-extent", dest="grid_extent", type=float)
    sub.add_argument("--grid-points", dest="grid_points", type=int)
    sub.add_argument("--regime", choices=("gaussian", "mehler", "spectral"))
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--y-min", dest="y_min", type=float)
    sub.add_argument("--y-max", dest="y_max", type=float)
    sub.add_argument("--f", help="builtin family spec or csv:<path>")
    sub.add_argument("--output", choices=("json", "csv"))
    sub.add_argument("--out", help="write the payload to a file")
    sub.add_argument("--fit-radius", dest="fit_radius", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semilip",
        description="Schrodinger-semigroup smoothness laboratory")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("rho", help="critical-radius table")
    _common_flags(p)
    p.add_argument("--samples", type=int, default=21)
    p.add_argument("--compare", action="store_true",
                   help="append two-point comparison constants")
    p.set_defaults(run=cmd_rho)

    p = subs.add_parser("seminorm", help="three-legged membership report")
    _common_flags(p)
    p.set_defaults(run=cmd_seminorm)

    p = subs.add_parser("verify", help="named theorem surrogate")
    _common_flags(p)
    p.add_argument("theorem", help="one of: " + ", ".join(_THEOREMS))
    p.add_argument("--variant", choices=("calderon", "adjoint"),
                   default="calderon")
    p.add_argument("--a", help="multiplier symbol: const:<c> | "
                               "indicator:<T> | table:<csv>")
    p.set_defaults(run=cmd_verify)

    p = subs.add_parser("op", help="apply an operator")
    _common_flags(p)
    p.add_argument("operator", help="bessel | fracint | fraclap | riesz | "
                                    "multiplier")
    p.add_argument("--variant", choices=("calderon", "adjoint"),
                   default="calderon")
    p.add_argument("--a", help="multiplier symbol spec")
    p.add_argument("--values-csv", dest="values_csv",
                   help="export the output GridFunction as CSV")
    p.add_argument("--shift-check", dest="shift_check", action="store_true")
    p.set_defaults(run=cmd_op)

    p = subs.add_parser("semigroup", help="raw W_y / P_y dumps")
    _common_flags(p)
    p.add_argument("--operator", choices=("heat", "poisson"),
                   default="heat")
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--values-csv", dest="values_csv")
    p.add_argument("--kernel-csv", dest="kernel_csv")
    p.set_defaults(run=cmd_semigroup)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
