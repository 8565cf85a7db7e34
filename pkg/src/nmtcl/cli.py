"""Command-line runs of the figure and study experiments.

Every run writes a CSV (normative output, 17 significant digits) and, for
the figure and error-order runs, an SVG rendering of the same series.
Time on the command line and in the CSVs is ``tau = lam * t``.

Exit codes: 0 success, 2 invalid configuration, 3 acceptance bound
missed, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import analysis, exact
from ._svg import line_plot
from .errors import EmptyTargetClass, PositivityBreach, StepProbabilityOverflow
from .generators import GeneratorKind
from .model import InitialState, make_params, TimeGrid
from .nmqj import nmqj_run
from .tcl_solver import solve_tcl

EXIT_OK, EXIT_INVALID, EXIT_ACCEPTANCE, EXIT_NUMERICAL = 0, 2, 3, 4

EXPERIMENTS = ("figure1", "figure2", "singular_times", "error_order", "residuals", "custom")

FIG1_BOUND = 1e-4
FIG2_MS2_BOUND = 0.05
NMQJ_SIGMAS = 4.0
NMQJ_COVERAGE = 0.99


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "figure1"
    gamma0: float = 10.0
    lam: float = 1.0
    initial: object = "e"
    t_end: float = 10.0
    n_points: int = 1001
    solver: str = "det"
    n_traj: int = 100_000
    seed: int = 20240101
    kind: str = "exact"
    count: int = 6
    eps_grid: tuple | None = None
    t_probe: float = 1.0
    out_dir: str = "."
    svg: bool = True


# JSON keys that differ from the attribute names
_JSON_ALIASES = {"lambda": "lam", "ntraj": "n_traj", "points": "n_points"}
_SOLVER_NAMES = {"det": "det", "deterministic": "det", "nmqj": "nmqj"}


def _flatten(raw: dict) -> dict:
    """Accept nested ``params``/``grid``/``solver``/``output`` groups as well as flat keys."""
    flat = {}
    for key, val in raw.items():
        if key in ("params", "grid", "output") and isinstance(val, dict):
            flat.update(val)
        elif key == "solver" and isinstance(val, dict):
            sub = dict(val)
            name = sub.pop("name", sub.pop("kind", None))
            if name is not None:
                flat["solver"] = name
            flat.update(sub)
        else:
            flat[key] = val
    return flat


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, val in _flatten(raw).items():
        key = _JSON_ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = val
    return out


def parse_initial(spec) -> InitialState:
    if isinstance(spec, InitialState):
        return spec
    if isinstance(spec, (list, tuple)):
        parts = list(spec)
    else:
        text = str(spec).strip().lower()
        if text == "e":
            return InitialState.excited()
        if text in ("sup", "superposition"):
            return InitialState.superposition()
        parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"initial state must be 'e', 'sup' or 'ce0,cg0', got {spec!r}")
    try:
        ce, cg = (complex(str(p).strip().replace(" ", "")) for p in parts)
    except ValueError:
        raise ConfigError(f"cannot parse amplitudes {spec!r}") from None
    return InitialState(ce, cg)


def validate(cfg: RunConfig) -> RunConfig:
    """Check types and module preconditions before anything is computed."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    solver = _SOLVER_NAMES.get(str(cfg.solver).lower())
    if solver is None:
        raise ConfigError(f"solver must be 'det' or 'nmqj', got {cfg.solver!r}")
    try:
        cfg = replace(
            cfg,
            gamma0=float(cfg.gamma0),
            lam=float(cfg.lam),
            t_end=float(cfg.t_end),
            n_points=int(cfg.n_points),
            n_traj=int(cfg.n_traj),
            seed=int(cfg.seed),
            count=int(cfg.count),
            t_probe=float(cfg.t_probe),
            solver=solver,
            svg=bool(cfg.svg),
            kind=GeneratorKind(cfg.kind).value,
            eps_grid=None if cfg.eps_grid is None else tuple(float(e) for e in cfg.eps_grid),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    make_params(cfg.gamma0, cfg.lam)
    parse_initial(cfg.initial)
    if cfg.experiment in ("figure1", "figure2", "custom"):
        if not cfg.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {cfg.t_end}: the grid would be empty")
        if cfg.n_points < 2:
            raise ConfigError("n_points must be at least 2")
    if cfg.solver == "nmqj" and cfg.n_traj < 100:
        raise ConfigError("n_traj must be at least 100")
    if cfg.count < 1:
        raise ConfigError("count must be at least 1")
    if cfg.eps_grid is not None:
        analysis._check_eps_grid(cfg.eps_grid)
    return cfg


def _grid(cfg: RunConfig) -> TimeGrid:
    return TimeGrid.uniform(0.0, cfg.t_end / cfg.lam, cfg.n_points)


def write_csv(path: Path, header, columns) -> None:
    """Fixed-format CSV: ``%.17g`` floats, ``\\n`` line endings."""
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        cells = []
        for v in row:
            if isinstance(v, (np.integer, int)):
                cells.append(str(int(v)))
            else:
                cells.append(f"{float(v):.17g}")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class Result:
    name: str
    header: list
    columns: list
    svg: str | None = None
    summary: list = None
    failures: list = None


def _solve(cfg: RunConfig, kind, params, initial, grid, offset: int = 0):
    """Population (and its standard error for NMQJ) from the chosen TCL solver."""
    if cfg.solver == "nmqj":
        run = nmqj_run(kind, params, initial, grid, cfg.n_traj, cfg.seed + offset)
        return run.trajectory
    return solve_tcl(kind, params, initial, grid)


def _nmqj_coverage(ref, traj) -> float:
    z = np.abs(traj.rho_ee - ref) <= NMQJ_SIGMAS * traj.rho_ee_se + 1e-12
    return float(z.mean())


def cmd_figure1(cfg: RunConfig) -> Result:
    params = make_params(cfg.gamma0, cfg.lam)
    grid = _grid(cfg)
    tau = params.lam * grid.points
    header = ["tau", "rho_ee_exact_e", "rho_ee_tcl_e", "rho_ee_exact_sup", "rho_ee_tcl_sup"]
    cols = [tau]
    series, failures, summary, ses = [], [], [], []
    for offset, (label, state) in enumerate((("e", InitialState.excited()), ("sup", InitialState.superposition()))):
        ref = exact.exact_density(params, state, grid.points)[0]
        traj = _solve(cfg, GeneratorKind.EXACT, params, state, grid, offset)
        cols += [ref, traj.rho_ee]
        series += [(f"exact {label}", tau, ref, "line"), (f"TCL {label}", tau, traj.rho_ee, "marker")]
        err = float(np.max(np.abs(traj.rho_ee - ref)))
        if cfg.solver == "nmqj":
            ses.append(traj.rho_ee_se)
            cover = _nmqj_coverage(ref, traj)
            summary.append(f"{label}: sup|NMQJ - exact| = {err:.3e}, within 4 SE at {cover:.2%} of points")
            if cover < NMQJ_COVERAGE:
                failures.append(f"{label}: only {cover:.2%} of points within 4 SE (need {NMQJ_COVERAGE:.0%})")
        else:
            summary.append(f"{label}: sup|TCL - exact| = {err:.3e}, poles crossed = {len(traj.crossings)}")
            if not err <= FIG1_BOUND:
                worst = int(np.argmax(np.abs(traj.rho_ee - ref)))
                failures.append(f"{label}: sup error {err:.3e} > {FIG1_BOUND:g} (worst at tau={tau[worst]:.6g})")
    if ses:
        header += ["rho_ee_tcl_e_se", "rho_ee_tcl_sup_se"]
        cols += ses
    svg = line_plot(series, "tau = lambda t", "rho_ee", f"Excited population, gamma0={cfg.gamma0:g}, lambda={cfg.lam:g}")
    return Result("figure1", header, cols, svg, summary, failures)


_FIG2_CURVES = (
    ("tcl_exact", GeneratorKind.EXACT),
    ("ms1", GeneratorKind.MULTISCALE1),
    ("ms2", GeneratorKind.MULTISCALE2),
    ("ord2", GeneratorKind.ORDINARY2),
    ("ord4", GeneratorKind.ORDINARY4),
)


def cmd_figure2(cfg: RunConfig) -> Result:
    params = make_params(cfg.gamma0, cfg.lam)
    grid = _grid(cfg)
    tau = params.lam * grid.points
    state = InitialState.excited()
    ref = exact.exact_density(params, state, grid.points)[0]
    curves = {"exact": ref}
    for offset, (name, kind) in enumerate(_FIG2_CURVES):
        curves[name] = _solve(cfg, kind, params, state, grid, offset).rho_ee
    header = ["tau", "exact", "tcl_exact", "ms1", "ms2", "ord2", "ord4"]
    err = {k: float(np.max(np.abs(curves[k] - ref))) for k in header[2:]}
    summary = [f"sup|{k} - exact| = {v:.4e}" for k, v in err.items()]
    failures = []
    if cfg.solver == "det":
        if not err["ms2"] <= FIG2_MS2_BOUND:
            failures.append(f"ms2 sup error {err['ms2']:.4e} > {FIG2_MS2_BOUND}")
        if not err["ms1"] > err["ms2"]:
            failures.append(f"ms1 error {err['ms1']:.4e} is not larger than ms2 error {err['ms2']:.4e}")
        for k in ("ord2", "ord4"):
            if analysis.count_local_minima(curves[k]) or not analysis.is_nonincreasing(curves[k], 1e-12):
                failures.append(f"{k} trajectory is not monotone")
    series = [("exact", tau, ref, "line")] + [
        (k, tau, curves[k], "marker" if k == "tcl_exact" else "dash" if k.startswith("ord") else "line")
        for k in header[2:]
    ]
    svg = line_plot(series, "tau = lambda t", "rho_ee", f"Generators compared, eps={params.eps:g}")
    return Result("figure2", header, [tau] + [curves[k] for k in header[1:]], svg, summary, failures)


def cmd_singular_times(cfg: RunConfig) -> Result:
    params = make_params(cfg.gamma0, cfg.lam)
    n = np.arange(cfg.count)
    cols = [n]
    for kind in (GeneratorKind.EXACT, GeneratorKind.MULTISCALE1, GeneratorKind.MULTISCALE2):
        cols.append(np.array([params.lam * analysis.singular_time(kind, params, int(k)) for k in n]))
    header = ["n", "tau_exact", "tau_ms1", "tau_ms2"]
    summary = [f"n={int(k)}: {a:.5f} / {b:.5f} / {c:.5f}" for k, a, b, c in zip(*cols)]
    return Result("singular_times", header, cols, None, summary, [])


def cmd_error_order(cfg: RunConfig) -> Result:
    rep = analysis.error_order_study(cfg.eps_grid or analysis.DEFAULT_EPS_GRID, gamma0=cfg.gamma0)
    header = ["eps", "t0_exact", "t0_ms1", "t0_ms2", "rel_err_ms1", "rel_err_ms2"]
    cols = [rep.eps_grid, rep.t0_exact, rep.t0_ms1, rep.t0_ms2, rep.rel_errors_ms1, rep.rel_errors_ms2]
    summary = [
        f"ms1 slope = {rep.fitted_slope_ms1:.4f} (r^2 = {rep.r_squared_ms1:.5f})",
        f"ms2 slope = {rep.fitted_slope_ms2:.4f} (r^2 = {rep.r_squared_ms2:.5f})",
    ]
    failures = []
    if not abs(rep.fitted_slope_ms1 - 0.5) <= 0.1:
        failures.append(f"ms1 slope {rep.fitted_slope_ms1:.4f} outside 0.5 +- 0.1")
    if not abs(rep.fitted_slope_ms2 - 1.5) <= 0.15:
        failures.append(f"ms2 slope {rep.fitted_slope_ms2:.4f} outside 1.5 +- 0.15")
    if min(rep.r_squared_ms1, rep.r_squared_ms2) < 0.98:
        failures.append("log-log fit r^2 below 0.98")
    fits = []
    for label, err, slope in (
        ("ms1", rep.rel_errors_ms1, rep.fitted_slope_ms1),
        ("ms2", rep.rel_errors_ms2, rep.fitted_slope_ms2),
    ):
        intercept = analysis.loglog_fit(rep.eps_grid, err).intercept
        fits += [(f"{label} data", rep.eps_grid, err, "marker"),
                 (f"{label} fit", rep.eps_grid, np.exp(intercept) * rep.eps_grid**slope, "dash")]
    svg = line_plot(
        fits, "eps", "relative error of t0", "First singular time error", logx=True, logy=True,
        annotations=[f"ms1 slope {rep.fitted_slope_ms1:.3f}", f"ms2 slope {rep.fitted_slope_ms2:.3f}"],
    )
    return Result("error_order", header, cols, svg, summary, failures)


def cmd_residuals(cfg: RunConfig) -> Result:
    eps_grid = cfg.eps_grid or analysis.DEFAULT_RESIDUAL_EPS_GRID
    reports = [analysis.residual_order_check(o, eps_grid, cfg.t_probe) for o in (0, 1, 2, "exact")]
    header = ["eps", "residual_order0", "residual_order1", "residual_order2", "residual_exact"]
    cols = [reports[0].eps_grid] + [r.residuals for r in reports]
    powers = [r.fitted_power for r in reports[:3]]
    summary = [f"order {r.order}: power = {r.fitted_power:.4f}" for r in reports[:3]]
    summary.append(f"exact: max residual = {reports[3].residuals.max():.3e}")
    failures = []
    if not (powers[0] < powers[1] < powers[2]):
        failures.append(f"residual powers {powers} do not grow with the order")
    return Result("residuals", header, cols, None, summary, failures)


def cmd_custom(cfg: RunConfig) -> Result:
    params = make_params(cfg.gamma0, cfg.lam)
    grid = _grid(cfg)
    tau = params.lam * grid.points
    traj = _solve(cfg, cfg.kind, params, parse_initial(cfg.initial), grid)
    header = ["tau", "rho_ee", "rho_eg_re", "rho_eg_im"]
    cols = [tau, traj.rho_ee, traj.rho_eg.real, traj.rho_eg.imag]
    if traj.rho_ee_se is not None:
        header.append("rho_ee_se")
        cols.append(traj.rho_ee_se)
    svg = line_plot(
        [("rho_ee", tau, traj.rho_ee, "line"), ("|rho_eg|", tau, np.abs(traj.rho_eg), "dash")],
        "tau = lambda t", "state", f"{cfg.kind} generator, {cfg.solver}",
    )
    return Result("custom", header, cols, svg, [f"final rho_ee = {traj.rho_ee[-1]:.6e}"], [])


COMMANDS = {
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "singular_times": cmd_singular_times,
    "error_order": cmd_error_order,
    "residuals": cmd_residuals,
    "custom": cmd_custom,
}


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Run a validated config, write its outputs and return the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", PositivityBreach)
            res = COMMANDS[cfg.experiment](cfg)
    except PositivityBreach as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERICAL
    except (StepProbabilityOverflow, EmptyTargetClass, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=err)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=err)
        return EXIT_INVALID
    cols = res.columns
    if any(np.any(~np.isfinite(np.asarray(c, dtype=complex))) for c in cols[1:] if res.name != "residuals"):
        print("numerical failure: non-finite values in the output", file=err)
        return EXIT_NUMERICAL
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{res.name}.csv"
    write_csv(csv_path, res.header, cols)
    print(f"wrote {csv_path}", file=out)
    if cfg.svg and res.svg is not None:
        svg_path = out_dir / f"{res.name}.svg"
        svg_path.write_text(res.svg)
        print(f"wrote {svg_path}", file=out)
    for line in res.summary or ():
        print(line, file=out)
    if res.failures:
        print("acceptance bound missed:", file=err)
        for line in res.failures:
            print(f"  {line}", file=err)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--gamma0", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--initial", help="e | sup | ce0,cg0")
    common.add_argument("--t-end", dest="t_end", type=float, help="end time in tau = lambda t units")
    common.add_argument("--points", dest="n_points", type=int)
    common.add_argument("--solver", choices=["det", "nmqj"])
    common.add_argument("--ntraj", dest="n_traj", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--kind", choices=[k.value for k in GeneratorKind], help="generator for 'custom'")
    common.add_argument("--count", type=int, help="rows of the singular-time table")
    common.add_argument("--eps", dest="eps_grid", type=float, nargs="+", help="decreasing eps values")
    common.add_argument("--t-probe", dest="t_probe", type=float)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--svg", dest="svg", action=argparse.BooleanOptionalAction, default=None)

    parser = argparse.ArgumentParser(prog="nmtcl", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name.replace("_", "-"), parents=[common])
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON file, then explicit flags."""
    experiment = ns.command.replace("-", "_")
    values = {}
    if ns.config:
        values.update(load_config(ns.config))
        if values.get("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {values['experiment']!r}, not {experiment!r}")
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            values[f.name] = v
    values["experiment"] = experiment
    return validate(RunConfig(**values))


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (ValueError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
