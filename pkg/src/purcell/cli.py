"""Command-line front end and config-file I/O.

Config files are TOML::

    kappa = 1.0

    [[atoms]]
    g = 0.05
    gamma = 0.0
    delta = 0.0
    excited = true

    [[atoms]]
    g = 3.0
    gamma = 1.0
    delta = 0.0
    excited = false

If ``kappa`` is not 1, every rate is divided by it on loading.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import experiments, rates
from .effective import build_effective_matrix
from .errors import NumericalError, ParseError, ValidationError
from .lindblad import evolve
from .model import AtomSpec, SystemConfig, normalized, set_param, validate_config
from .spectra import eigenpairs, find_ep2, find_ep3

ATOM_FIELDS = ("g", "gamma", "delta", "excited")


def parse_config(text: str) -> SystemConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config: {exc}") from None
    extra = set(doc) - {"kappa", "atoms"}
    if extra:
        raise ParseError(f"config: unknown field(s) {sorted(extra)}")
    if "kappa" not in doc:
        raise ParseError("config: missing required field 'kappa'")
    if "atoms" not in doc:
        raise ParseError("config: missing required field 'atoms'")
    kappa = _number(doc["kappa"], "kappa")
    if not isinstance(doc["atoms"], list):
        raise ParseError("config: 'atoms' must be an array of tables")
    atoms = []
    for i, entry in enumerate(doc["atoms"]):
        if not isinstance(entry, dict):
            raise ParseError(f"config: atoms[{i}] must be a table")
        extra = set(entry) - set(ATOM_FIELDS)
        if extra:
            raise ParseError(f"config: atoms[{i}]: unknown field(s) {sorted(extra)}")
        if "g" not in entry:
            raise ParseError(f"config: atoms[{i}]: missing required field 'g'")
        excited = entry.get("excited", False)
        if not isinstance(excited, bool):
            raise ParseError(f"config: atoms[{i}].excited must be true or false")
        atoms.append(AtomSpec(_number(entry["g"], f"atoms[{i}].g"),
                              _number(entry.get("gamma", 0.0), f"atoms[{i}].gamma"),
                              _number(entry.get("delta", 0.0), f"atoms[{i}].delta"),
                              excited))
    cfg = SystemConfig(kappa, tuple(atoms))
    validate_config(cfg)
    return normalized(cfg)


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"config: field '{name}' must be a number, got {value!r}")
    return float(value)


def load_config(path: str) -> SystemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_config(cfg: SystemConfig) -> str:
    """Canonical TOML text for ``cfg`` (fixed field order, 17 significant digits)."""
    lines = [f"kappa = {_fmt(cfg.kappa)}"]
    for a in cfg.atoms:
        lines += ["", "[[atoms]]", f"g = {_fmt(a.g)}", f"gamma = {_fmt(a.gamma)}",
                  f"delta = {_fmt(a.delta)}", f"excited = {'true' if a.excited else 'false'}"]
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: SystemConfig, overrides: list[str]) -> SystemConfig:
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key.endswith(".excited"):
            if value.lower() not in ("true", "false"):
                raise ValidationError(f"override {key}: expected true or false")
            cfg = set_param(cfg, key, value.lower() == "true")
        else:
            try:
                num = float(value)
            except ValueError:
                raise ValidationError(f"override {key}: {value!r} is not a number") from None
            cfg = set_param(cfg, key, num)
    validate_config(cfg)
    return normalized(cfg)


def parse_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse grid {text!r}") from None


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv_rows(header, rows) -> str:
    out = [",".join(header)]
    out += [",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in r)
            for r in rows]
    return "\n".join(out) + "\n"


# --- commands --------------------------------------------------------------------

def _config(args) -> SystemConfig:
    if not args.config:
        raise ValidationError("a config file is required for this command")
    return apply_overrides(load_config(args.config), args.set)


def cmd_spectrum(args) -> str:
    cfg = _config(args)
    m = build_effective_matrix(cfg)
    spec = eigenpairs(m)
    if args.format == "csv":
        rows = [(k, float(z.real), float(z.imag), spec.multiplicity[k])
                for k, z in enumerate(spec.eigenvalues)]
        return _csv_rows(("k", "re", "im", "multiplicity"), rows)
    out = {"matrix": m.to_json(), **spec.to_json()}
    try:
        sm = rates.slow_mode_rate(m, cfg.excited_index)
        out["slow_mode"] = {"rate": sm.rate, "eigenvalue": _cplx(sm.eigenvalue), "overlap": sm.overlap}
    except NumericalError as exc:
        out["slow_mode"] = {"error": str(exc)}
    return _dumps(out)


def _t_end_dt(args, cfg):
    t_end = rates.default_t_end(cfg) if args.t_end is None else args.t_end
    dt = rates.default_dt(cfg) if args.dt is None else args.dt
    return t_end, dt


def cmd_evolve(args) -> str:
    cfg = _config(args)
    traj = evolve(cfg, *_t_end_dt(args, cfg))
    if args.format == "json":
        pops = traj.populations
        cols = traj.columns()
        data = {"t": [float(t) for t in traj.times]}
        for k, name in enumerate(cols[1:-1]):
            data[name] = [float(x) for x in pops[:, k]]
        data["trace_error"] = [float(x) for x in traj.trace_error]
        return _dumps(data)
    return traj.to_csv()


def cmd_rates(args) -> str:
    cfg = _config(args)
    t_end, dt = _t_end_dt(args, cfg)
    report = rates.extract_decay_rate(evolve(cfg, t_end, dt))
    sm = rates.slow_mode(cfg)
    a = cfg.atoms[cfg.excited_index]
    out = {
        "fit": report.to_json(),
        "slow_mode": {"rate": sm.rate, "eigenvalue": _cplx(sm.eigenvalue), "overlap": sm.overlap},
        "bare_purcell_rate": rates.purcell_rate(a.g, cfg.kappa),
        "t_end": t_end,
        "dt": dt,
        "convention": "amplitude rates; populations decay at twice the rate",
    }
    if args.format == "csv":
        r = report
        return _csv_rows(
            ("extracted_rate", "population_rate", "t_a", "t_b", "rms_residual",
             "closed_form_prediction", "formula_tag", "relative_deviation", "slow_mode_rate"),
            [(r.extracted_rate, r.population_rate, r.fit_window[0], r.fit_window[1], r.rms_residual,
              r.closed_form_prediction, r.formula_tag, r.relative_deviation, sm.rate)])
    return _dumps(out)


def cmd_ep_find(args) -> str:
    if (args.gamma_b is None) == (args.gamma_c is None):
        raise ValidationError("give exactly one of --gamma-b (EP2) or --gamma-c (EP3)")
    if args.gamma_b is not None:
        rep = find_ep2(args.kappa, args.gamma_b)
    else:
        rep = find_ep3(args.kappa, args.gamma_c)
    if args.format == "csv":
        p = rep.parameters
        return _csv_rows(("order", "kappa", "gamma_b", "gamma_c", "g_b", "min_gap", "max_overlap",
                          "splitting_exponent"),
                         [(rep.order, p["kappa"], p["gamma_b"], p.get("gamma_c"), p["g_b"],
                           rep.min_gap, rep.max_overlap, rep.splitting_exponent)])
    return _dumps(rep.to_json())


def cmd_sweep(args) -> str:
    if args.preset == "fig4":
        res = experiments.fig4_sweep(args.delta, args.gamma_b if args.gamma_b is not None else 1.0,
                                     parse_grid(args.grid) if args.grid else None, jobs=args.jobs)
    elif args.preset == "fig4-gamma":
        res = experiments.fig4_gamma_sweep(args.delta, args.g_b if args.g_b is not None else 5.0,
                                           parse_grid(args.grid) if args.grid else None, jobs=args.jobs)
    else:
        if not (args.param and args.grid and args.observable):
            raise ValidationError("sweep needs --param, --grid and --observable (or --preset)")
        spec = experiments.SweepSpec(_config(args), args.param, parse_grid(args.grid), args.observable,
                                     normalize=args.normalize, t_end=args.t_end, dt=args.dt)
        res = experiments.run_sweep(spec, jobs=args.jobs)
    return _dumps(res.to_json()) if args.format == "json" else res.to_csv()


def cmd_reproduce(args) -> str:
    rows = experiments.reproduce_paper_numbers()
    if args.format == "json":
        return experiments.rows_to_json(rows) + "\n"
    if args.format == "csv":
        return _csv_rows(("scenario", "paper_value", "closed_form", "fitted", "closed_form_deviation",
                          "fit_deviation"),
                         [(r.scenario, r.paper_value, r.closed_form, r.fitted,
                           r.closed_form_deviation, r.fit_deviation) for r in rows])
    return experiments.format_table(rows)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="purcell", description="Purcell-decay control in cavity QED")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True, default_format="json", formats=("csv", "json")):
        if config:
            p.add_argument("config", nargs="?", help="TOML config file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config value, e.g. atoms[1].g=3")
        p.add_argument("-o", "--output", help="write the result here instead of stdout")
        p.add_argument("--format", choices=formats, default=default_format)

    def timing(p):
        p.add_argument("--t-end", type=float, help="default: 50 / predicted rate")
        p.add_argument("--dt", type=float, help="default: min(0.01, 0.01 / max rate)")

    p = sub.add_parser("spectrum", help="eigenvalues and eigenvectors of the effective matrix")
    common(p)
    p = sub.add_parser("evolve", help="master-equation trajectory")
    common(p, default_format="csv")
    timing(p)
    p = sub.add_parser("rates", help="fitted and predicted decay rate of the excited atom")
    common(p)
    timing(p)
    p = sub.add_parser("ep-find", help="locate an exceptional point and report diagnostics")
    common(p, config=False)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--gamma-b", type=float)
    p.add_argument("--gamma-c", type=float)
    p = sub.add_parser("sweep", help="evaluate an observable over a parameter grid")
    common(p, default_format="csv")
    timing(p)
    p.add_argument("--param", help="parameter path, e.g. atoms[1].g")
    p.add_argument("--grid", help="start:stop:num or a comma-separated list")
    p.add_argument("--observable",
                   help="fitted_rate | slow_mode_rate | closed_form:<tag> | min_gap | max_overlap")
    p.add_argument("--normalize", choices=("purcell", "detuned"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--preset", choices=("fig4", "fig4-gamma"))
    p.add_argument("--delta", type=float, default=5.0, help="fig4 presets only")
    p.add_argument("--gamma-b", type=float, help="fig4 preset only")
    p.add_argument("--g-b", type=float, help="fig4-gamma preset only")
    p = sub.add_parser("reproduce", help="the quoted inhibition ratios")
    common(p, config=False, default_format="table", formats=("table", "csv", "json"))
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "rates": cmd_rates,
    "ep-find": cmd_ep_find,
    "sweep": cmd_sweep,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"purcell: validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"purcell: numerical failure: {exc}", file=sys.stderr)
        return 3
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
