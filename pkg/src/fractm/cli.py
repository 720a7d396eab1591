"""Command line driver: ``fractm <command> [options]``.

Every command builds a table of rows, writes it as CSV or JSON (stdout
unless ``--out`` is given) and, with ``--out``, a ``<out>.manifest.json``
sidecar holding the version, a config hash and the wall time.  Tables carry
no timing information, so identical configs give byte-identical tables.

Exit codes: 0 success, 2 configuration error (nothing written), 3 some
rows failed (overflow, resolution, ...) and are flagged in the output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import re
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, FractmError
from .function_space import (
    Grid,
    GridFunction,
    h12_norm_sq,
    l2_norm_sq,
    sample,
    seminorm_fourier_sq,
    seminorm_gagliardo_sq,
)
from .functionals import (
    FunctionalSpec,
    relation_bound,
    tm_integral,
    transport_factor,
    transport_to_B,
)
from .moser import (
    Moser,
    asymptotic_epsilon,
    asymptotic_lower_bound,
    blowup_slope,
    check_resolution,
    critical_blowup_scan,
    seminorm_excess_constant,
    moser_grid,
    moser_table,
    MoserParam,
)
from .optimize import (
    BETA0,
    MaximizeConfig,
    gn_ratio,
    maximize,
    normalize_to_M,
    orbit_derivative_fd,
    orbit_derivative_series,
)
from .profiles import Bump, Gaussian, Hat, Indicator, TwoBump, Zero, random_bump_mixture
from .rearrangement import rearrange

COMMANDS = ("norms", "moser-scan", "blowup", "maximize", "relation", "orbit", "gn")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

_PI = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def parse_real(text: str | float) -> float:
    """Float, or a multiple of pi written ``0.5pi`` / ``0.5*pi`` / ``pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI.match(text)
    try:
        if m:
            coef = m.group(1)
            return (float(coef) if coef else 1.0) * math.pi
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def _real_list(value: Any) -> tuple[float, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if isinstance(value, (int, float)):
        value = [value]
    return tuple(parse_real(v) for v in value)


def _str_list(value: Any) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = value.split(",")
    return tuple(str(v).strip() for v in value if str(v).strip())


# -- configuration ----------------------------------------------------------

DEFAULT_FIXTURES = ("gaussian:1", "gaussian:0.25", "bump:2", "hat:1", "two_bump:3:1.5", "indicator:1", "zero")
SMOOTH_FIXTURES = ("gaussian:1", "gaussian:0.25", "bump:2", "bump:1:1.5", "two_bump:3:1.5")

DEFAULTS: dict[str, dict[str, Any]] = {
    "norms": dict(grid_L=20.0, grid_n=4096, fixtures=DEFAULT_FIXTURES),
    "moser-scan": dict(eps=(1e-2, 1e-3, 1e-4), alpha=(0.5 * math.pi,)),
    "blowup": dict(eps=(1e-2, 1e-3, 1e-4), alpha=(math.pi,)),
    "maximize": dict(grid_L=20.0, grid_n=16384, alpha=(0.3 * math.pi, 0.5 * math.pi, 0.7 * math.pi)),
    "relation": dict(grid_L=20.0, grid_n=16384, alpha=(0.3 * math.pi, 0.5 * math.pi, 0.7 * math.pi)),
    "orbit": dict(grid_L=20.0, grid_n=4096, alpha=(0.05, 0.5, 1.0), fixtures=SMOOTH_FIXTURES),
    "gn": dict(grid_L=20.0, grid_n=4096, q=(2.0, 4.0, 10.0, 40.0), fixtures=("gaussian:0.5",)),
}
ASYMPTOTIC_ALPHAS = (0.5 * math.pi, 0.7 * math.pi, 0.8 * math.pi)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    grid_L: float | None = None
    grid_n: int | None = None
    alpha: tuple[float, ...] = ()
    eps: tuple[float, ...] = ()
    q: tuple[float, ...] = ()
    fixtures: tuple[str, ...] = ()
    kind: str = "A_tilde"
    max_iters: int = 5000
    tol: float = 1e-8
    j_max: int = 60
    h_tau: float = 1e-3
    asymptotic: bool = False
    format: str = "csv"
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.grid_L is not None and not (math.isfinite(self.grid_L) and self.grid_L > 0):
            raise ConfigError(f"grid_L must be positive, got {self.grid_L}")
        if self.grid_n is not None and (self.grid_n < 16 or self.grid_n % 2):
            raise ConfigError(f"grid_n must be an even integer >= 16, got {self.grid_n}")
        if any(not (math.isfinite(a) and a > 0) for a in self.alpha):
            raise ConfigError("alpha values must be positive")
        if any(not 0 < e < 1 for e in self.eps):
            raise ConfigError("eps values must lie in (0, 1)")
        if any(q < 2 for q in self.q):
            raise ConfigError("q values must be >= 2")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.kind not in ("A_tilde", "E"):
            raise ConfigError(f"kind must be A_tilde or E, got {self.kind!r}")
        if self.max_iters < 1 or not self.tol > 0 or self.j_max < 1 or not 0 < self.h_tau <= 0.1:
            raise ConfigError("invalid optimizer or orbit settings")
        if self.command in ("maximize", "relation") and any(a >= math.pi for a in self.alpha):
            raise ConfigError("maximize/relation need alpha < pi")
        for name in self.fixtures:
            parse_fixture_name(name)
        return self

    def grid(self) -> Grid | None:
        if self.grid_n is None:
            return None
        return Grid(self.grid_L if self.grid_L is not None else 2.0, self.grid_n)

    def echo(self) -> dict[str, Any]:
        """Canonical config used for headers and hashing (excludes the output path)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in ("alpha", "eps", "q"):
            return _real_list(value)
        if key == "fixtures":
            return _str_list(value)
        if key in ("grid_n", "max_iters", "j_max"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if key in ("grid_L", "tol", "h_tau"):
            return parse_real(value)
        if key == "asymptotic":
            if not isinstance(value, bool):
                raise ValueError
            return value
        return None if value is None else str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def load_config_file(path: str) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def build_config(command: str, file_values: dict[str, Any], flag_values: dict[str, Any]) -> ExperimentConfig:
    """Command defaults, overridden by the config file, overridden by flags."""
    merged: dict[str, Any] = dict(DEFAULTS.get(command, {}))
    if command == "moser-scan" and (file_values.get("asymptotic") or flag_values.get("asymptotic")):
        merged["alpha"] = ASYMPTOTIC_ALPHAS
    for source in (file_values, flag_values):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key in ("command", "config"):
                continue
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = _coerce(key, value)
    return ExperimentConfig(command=command, **merged).validate()


# -- fixtures ---------------------------------------------------------------


def parse_fixture_name(name: str) -> tuple[str, tuple[float, ...]]:
    kind, *args = name.split(":")
    kind = kind.strip().lower()
    arity = {"gaussian": 1, "hat": 1, "bump": 2, "indicator": 1, "two_bump": 2,
             "moser": 1, "zero": 0, "mixture": 1, "maximizer": 1}
    if kind not in arity:
        raise ConfigError(f"unknown fixture {name!r}")
    if len(args) > arity[kind]:
        raise ConfigError(f"too many parameters in fixture {name!r}")
    vals = tuple(parse_real(a) for a in args)
    if kind in ("gaussian", "hat", "indicator", "moser", "mixture") and vals and vals[0] <= 0:
        raise ConfigError(f"fixture parameter must be positive in {name!r}")
    if kind == "bump" and vals and vals[0] <= 0:
        raise ConfigError(f"bump radius must be positive in {name!r}")
    if kind == "moser" and vals and vals[0] >= 1:
        raise ConfigError(f"moser eps must lie in (0, 1) in {name!r}")
    if kind == "maximizer" and (not vals or not 0 < vals[0] < math.pi):
        raise ConfigError(f"maximizer needs 0 < alpha < pi in {name!r}")
    return kind, vals


def make_fixture(name: str, grid: Grid, max_iters: int = 5000, tol: float = 1e-8) -> GridFunction:
    kind, v = parse_fixture_name(name)
    arg = lambda i, default: v[i] if len(v) > i else default  # noqa: E731
    if kind == "gaussian":
        return sample(grid, Gaussian(arg(0, 1.0)))
    if kind == "hat":
        return sample(grid, Hat(0.0, arg(0, 1.0)))
    if kind == "bump":
        return sample(grid, Bump(arg(1, 0.0), arg(0, 1.0)))
    if kind == "indicator":
        w = arg(0, 1.0)
        return sample(grid, Indicator(-w, w))
    if kind == "two_bump":
        return sample(grid, TwoBump(arg(0, 3.0), Bump(0.0, arg(1, 1.0))))
    if kind == "moser":
        p = MoserParam(arg(0, math.exp(-2.0)))
        check_resolution(p, grid)
        return sample(grid, Moser(p.epsilon))
    if kind == "mixture":
        return sample(grid, random_bump_mixture(np.random.default_rng(int(arg(0, 0)))))
    if kind == "maximizer":
        a = v[0]
        cfg = MaximizeConfig(a, grid, max_iters=max_iters, tol=tol)
        return maximize(FunctionalSpec.of("A_tilde", a), cfg).best_function
    return sample(grid, Zero())


# -- commands ---------------------------------------------------------------

Row = dict[str, Any]


def _context(grid: Grid | None) -> Row:
    return {"L": grid.L if grid else float("nan"), "n": grid.n if grid else 0, "version": __version__}


def _failed(exc: Exception) -> str:
    return f"error:{type(exc).__name__}"


def cmd_norms(cfg: ExperimentConfig) -> list[Row]:
    grid = cfg.grid()
    rows = []
    nan = float("nan")
    for name in cfg.fixtures:
        row: Row = {"fixture": name}
        try:
            f = make_fixture(name, grid)
            l2, sf, sg = l2_norm_sq(f), seminorm_fourier_sq(f), seminorm_gagliardo_sq(f)
            gap = abs(sf - sg) / max(abs(sf), abs(sg)) if max(abs(sf), abs(sg)) > 0 else 0.0
            row.update(l2=l2, seminorm_fourier=sf, seminorm_gagliardo=sg, h12=sf + l2, relative_gap=gap, status="ok")
        except FractmError as exc:
            row.update(l2=nan, seminorm_fourier=nan, seminorm_gagliardo=nan, h12=nan, relative_gap=nan, status=_failed(exc))
        row.update(_context(grid))
        rows.append(row)
    return rows


_MOSER_COLUMNS = ("epsilon", "T", "l2_exact", "l2_numeric", "seminorm", "ratio_at_alpha", "alpha", "L", "n", "status")


def _moser_rows(table) -> list[Row]:
    rows = []
    for r in table:
        row = {k: getattr(r, k) for k in _MOSER_COLUMNS}
        row["version"] = __version__
        rows.append(row)
    return rows


def cmd_moser_scan(cfg: ExperimentConfig) -> list[Row]:
    grid = cfg.grid()
    if cfg.asymptotic:
        rows = []
        for a in cfg.alpha:
            row: Row = {"alpha": a}
            try:
                p = asymptotic_epsilon(a)
                g = grid or moser_grid(p, cfg.grid_L or 2.0)
                value = asymptotic_lower_bound(a, g)
                row.update(epsilon=p.epsilon, T=p.T, lower_bound=value,
                           scaled=(1.0 - a / math.pi) * value, status="ok")
                row.update(_context(g))
            except (FractmError, ValueError) as exc:
                row.update(epsilon=float("nan"), T=float("nan"), lower_bound=float("nan"),
                           scaled=float("nan"), status=_failed(exc))
                row.update(_context(grid))
            rows.append(row)
        return rows
    rows = []
    for a in cfg.alpha:
        rows.extend(_moser_rows(moser_table(cfg.eps, a, grid)))
    return rows


def cmd_blowup(cfg: ExperimentConfig) -> list[Row]:
    return _moser_rows(critical_blowup_scan(cfg.eps, cfg.grid()))


def _maximizer(cfg: ExperimentConfig, alpha: float, kind: str = "A_tilde"):
    grid = cfg.grid()
    mc = MaximizeConfig(alpha, grid, max_iters=cfg.max_iters, tol=cfg.tol)
    return maximize(FunctionalSpec.of(kind, alpha), mc)


def cmd_maximize(cfg: ExperimentConfig) -> tuple[list[Row], dict[str, np.ndarray]]:
    rows, arrays = [], {}
    for i, a in enumerate(cfg.alpha):
        row: Row = {"alpha": a, "kind": cfg.kind}
        try:
            rep = _maximizer(cfg, a, cfg.kind)
            res = rep.constraint_residuals
            tr = rep.traces[rep.best_start]
            row.update(best_value=rep.best_value, margin=rep.best_value - a,
                       seminorm_residual=res.get("seminorm-1", float("nan")),
                       l2_residual=res.get("l2-1", float("nan")),
                       best_start=rep.best_start, iterations=tr.iterations[-1], status=rep.status)
            arrays[f"alpha_{i}"] = np.asarray(rep.best_function.values)
        except FractmError as exc:
            row.update(best_value=float("nan"), margin=float("nan"), seminorm_residual=float("nan"),
                       l2_residual=float("nan"), best_start=-1, iterations=0, status=_failed(exc))
        row.update(_context(cfg.grid()))
        rows.append(row)
    return rows, arrays


def relation_row(u: GridFunction, alpha: float, a_value: float) -> Row:
    """Transported value against the scaled Adachi-Tanaka value for one maximizer."""
    v = transport_to_B(u, alpha)
    j_pi = tm_integral(v, math.pi)
    predicted = transport_factor(alpha) * tm_integral(u, alpha)
    return {
        "A_lb": a_value,
        "J_pi_transported": j_pi,
        "identity_residual": abs(j_pi - predicted) / abs(predicted),
        "B_pi_lb": relation_bound(alpha, a_value),
        "h12_transported": h12_norm_sq(v),
    }


def cmd_relation(cfg: ExperimentConfig) -> list[Row]:
    rows = []
    nan = float("nan")
    for a in cfg.alpha:
        row: Row = {"alpha": a}
        try:
            rep = _maximizer(cfg, a)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row.update(relation_row(rep.best_function, a, rep.best_value))
            row["status"] = "ok"
        except FractmError as exc:
            row.update(A_lb=nan, J_pi_transported=nan, identity_residual=nan, B_pi_lb=nan,
                       h12_transported=nan, status=_failed(exc))
        row.update(_context(cfg.grid()))
        rows.append(row)
    return rows


def cmd_orbit(cfg: ExperimentConfig) -> list[Row]:
    grid = cfg.grid()
    rows = []
    nan = float("nan")
    for name in cfg.fixtures:
        try:
            v = normalize_to_M(rearrange(make_fixture(name, grid, cfg.max_iters, cfg.tol)).function)
        except FractmError as exc:
            v, err = None, exc
        for a in cfg.alpha:
            row: Row = {"fixture": name, "alpha": a}
            try:
                if v is None:
                    raise err
                s = orbit_derivative_series(v, a, cfg.j_max)
                d = orbit_derivative_fd(v, a, cfg.h_tau)
                row.update(series=s.value, fd=d, gap=abs(s.value - d) / abs(s.value),
                           tail_bound=s.tail_bound, status="ok")
            except FractmError as exc:
                row.update(series=nan, fd=nan, gap=nan, tail_bound=nan, status=_failed(exc))
            row.update(_context(grid))
            rows.append(row)
    return rows


def cmd_gn(cfg: ExperimentConfig) -> list[Row]:
    grid = cfg.grid()
    rows = []
    for name in cfg.fixtures:
        try:
            f, err = make_fixture(name, grid, cfg.max_iters, cfg.tol), None
        except FractmError as exc:
            f, err = None, exc
        for q in cfg.q:
            row: Row = {"fixture": name, "q": q}
            try:
                if err is not None:
                    raise err
                row.update(ratio=gn_ratio(f, q), beta0=BETA0, status="ok")
            except FractmError as exc:
                row.update(ratio=float("nan"), beta0=BETA0, status=_failed(exc))
            row.update(_context(grid))
            rows.append(row)
    return rows


#: row statuses that record a successful computation
GOOD_STATUSES = ("ok", "converged", "iter_cap")


def is_flagged(row: Row) -> bool:
    return row.get("status") not in GOOD_STATUSES


def summarize(command: str, rows: list[Row]) -> dict[str, Any]:
    out: dict[str, Any] = {"rows": len(rows), "flagged": sum(is_flagged(r) for r in rows)}
    if command == "blowup":
        from .moser import MoserRow  # local: rebuild rows for the slope helpers

        table = [MoserRow(**{k: r[k] for k in _MOSER_COLUMNS}) for r in rows]
        out["slope_vs_T"] = blowup_slope(table)
        out["seminorm_excess_constant"] = seminorm_excess_constant(table)
    return out


RUNNERS: dict[str, Callable[[ExperimentConfig], Any]] = {
    "norms": cmd_norms,
    "moser-scan": cmd_moser_scan,
    "blowup": cmd_blowup,
    "maximize": cmd_maximize,
    "relation": cmd_relation,
    "orbit": cmd_orbit,
    "gn": cmd_gn,
}


# -- serialization ----------------------------------------------------------


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "inf" / "nan": keep the file strict JSON
    if isinstance(v, np.generic):
        return v.item()
    return v


def render(cfg: ExperimentConfig, rows: list[Row], summary: dict[str, Any]) -> str:
    echo = cfg.echo()
    if cfg.format == "json":
        doc = {
            "tool": "fractm",
            "version": __version__,
            "config": echo,
            "summary": {k: _json_value(v) for k, v in summary.items()},
            "rows": [{k: _json_value(v) for k, v in r.items()} for r in rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# fractm {__version__} config={json.dumps(echo, sort_keys=True)}\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0].keys())
        writer.writerow(header)
        for r in rows:
            writer.writerow([_cell(r.get(k, "")) for k in header])
    return buf.getvalue()


def run(cfg: ExperimentConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    t0 = time.perf_counter()
    result = RUNNERS[cfg.command](cfg)
    arrays = None
    if cfg.command == "maximize":
        result, arrays = result
    rows = result
    summary = summarize(cfg.command, rows)
    text = render(cfg, rows, summary)
    wall = time.perf_counter() - t0
    if cfg.out is None:
        stdout.write(text)
    else:
        out = Path(cfg.out)
        out.write_text(text)
        manifest = {
            "tool": "fractm",
            "version": __version__,
            "command": cfg.command,
            "config_hash": cfg.digest(),
            "wall_time_s": wall,
            "summary": {k: _json_value(v) for k, v in summary.items()},
        }
        Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        if arrays:
            np.savez(str(out) + ".maximizers.npz", L=cfg.grid().L, n=cfg.grid().n,
                     alpha=np.array(cfg.alpha), **arrays)
    return EXIT_RUNTIME if summary["flagged"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values; flags override it")
    common.add_argument("--grid-L", dest="grid_L", help="half width L of the window [-L, L)")
    common.add_argument("--grid-n", dest="grid_n", type=int, help="number of nodes (even, >= 16)")
    common.add_argument("--alpha", help="comma list of exponents, e.g. 0.3pi,0.5pi,1.0")
    common.add_argument("--eps", help="comma list of Moser parameters in (0, 1)")
    common.add_argument("--q", help="comma list of Lebesgue exponents >= 2")
    common.add_argument("--fixtures", help="comma list, e.g. gaussian:1,bump:2,two_bump:3,moser:0.01")
    common.add_argument("--kind", choices=("A_tilde", "E"), help="functional for maximize")
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--tol", help="relative objective change for stopping")
    common.add_argument("--j-max", dest="j_max", type=int, help="orbit series length")
    common.add_argument("--h-tau", dest="h_tau", help="orbit finite-difference step")
    common.add_argument("--asymptotic", action="store_true", default=None,
                        help="moser-scan: sweep alpha with the asymptotic lower bound")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="fractm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fractm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "norms": "L2, spectral and Gagliardo seminorms of fixtures",
        "moser-scan": "Moser sequence norms and tested ratios",
        "blowup": "Moser ratios at the critical exponent pi",
        "maximize": "multi-start ascent for the normalized functionals",
        "relation": "transport maximizers to the full-norm problem at pi",
        "orbit": "orbit derivative: series vs finite difference",
        "gn": "Gagliardo-Nirenberg ratios",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, flags)
    except ConfigError as exc:
        print(f"fractm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
