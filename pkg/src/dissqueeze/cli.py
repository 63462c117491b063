"""Command-line front end.

Exit codes: 0 success (also for unconverged runs), 2 invalid configuration,
3 odd ensemble without a dark state, 4 integration failure.
"""

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as dio
from .darkstate import (
    DegenerateMomentsError,
    OddEnsembleError,
    dark_state,
    heisenberg_limit,
    moments,
    sql_limit,
)
from .lindblad import (
    ChannelSet,
    IntegrationError,
    evolve,
    polarized_state,
    pure_density,
    random_state,
)
from .meanfield import LinearizationBreakdown
from .optimize import (
    asymptotic_large,
    asymptotic_small,
    darkstate_sweep,
    fig2_ratios,
    fig4_chis,
    optimize_theta,
    sweep,
)
from .params import (
    CavityAtomParams,
    derive_rates,
    rb87_d1_enhancement,
    repump_populations,
)
from .spin import CapacityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ODD = 3
EXIT_INTEGRATION = 4

COMMANDS = ("darkstate", "evolve", "optimize", "sweep", "params")
PRESETS = ("fig2", "fig3a", "fig3b", "fig4")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to repeat a run; echoed into every JSON output."""

    command: str
    n: object = None  # int, or list of ints for sweeps
    ratio: object = None  # float, or list for sweeps
    theta: float = None
    chi: object = None  # float, "inf", or list for sweeps
    gamma_cav: float = None
    gamma_spont: float = None
    t_max: float = None
    sample_dt: float = None
    tol: float = None
    rtol: float = 1e-8
    atol: float = 1e-10
    seed: int = None
    initial: str = "polarized"
    random_kind: str = "haar_pure"
    state_file: str = None
    mode: str = None  # sweep: darkstate | optimum | point
    points: int = 200
    chi_min: float = None
    chi_max: float = None
    chi_points: int = None
    amplitudes: bool = False
    as_printed: bool = False
    output_format: str = "json"
    output_path: str = None
    params: dict = field(default_factory=dict)
    raman: dict = None
    repump: dict = None

    def to_dict(self):
        out = asdict(self)
        out.pop("output_path")  # where the output went is not part of the run
        return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in out.items()}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("config lacks a command")
        return cls(**data)


# ---------------------------------------------------------------------------
# parsing helpers


def _int_value(text):
    val = float(text)
    if not val.is_integer() or val < 1:
        raise ConfigError(f"expected a positive integer, got {text!r}")
    return int(val)


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [_int_value(v) for v in text]
    return [_int_value(v) for v in str(text).split(",") if v.strip()]


def _float_value(text):
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {text!r}") from None


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [_float_value(v) for v in text]
    return [_float_value(v) for v in str(text).split(",") if v.strip()]


def _scalar_n(cfg):
    if isinstance(cfg.n, list):
        if len(cfg.n) != 1:
            raise ConfigError(f"{cfg.command} takes a single N")
        return _int_value(cfg.n[0])
    if cfg.n is None:
        raise ConfigError("--n is required")
    return _int_value(cfg.n)


def _theta(cfg):
    if (cfg.ratio is None) == (cfg.theta is None):
        raise ConfigError("give exactly one of --ratio and --theta")
    if cfg.theta is not None:
        theta = _float_value(cfg.theta)
        if not 0 <= theta <= math.pi / 2:
            raise ConfigError(f"theta must lie in [0, pi/2], got {theta}")
        return theta
    ratio = _float_value(cfg.ratio)
    if ratio < 0:
        raise ConfigError(f"ratio must be non-negative, got {ratio}")
    return math.atan(ratio)


def _rates(cfg):
    has_pair = cfg.gamma_cav is not None or cfg.gamma_spont is not None
    if (cfg.chi is None) == (not has_pair):
        raise ConfigError("give exactly one of --chi and the pair --gamma-cav/--gamma-spont")
    if cfg.chi is not None:
        chi = _float_value(cfg.chi)
        if not chi > 0:
            raise ConfigError(f"chi must be positive, got {chi}")
        return 1.0, 0.0 if math.isinf(chi) else 1.0 / chi
    if cfg.gamma_cav is None or cfg.gamma_spont is None:
        raise ConfigError("--gamma-cav and --gamma-spont must be given together")
    gc, gs = _float_value(cfg.gamma_cav), _float_value(cfg.gamma_spont)
    if gc < 0 or gs < 0 or gc + gs == 0:
        raise ConfigError("rates must be non-negative and not both zero")
    return gc, gs


# ---------------------------------------------------------------------------
# commands


def cmd_darkstate(cfg):
    n = _scalar_n(cfg)
    theta = _theta(cfg)
    r = math.tan(theta) if theta < math.pi / 2 else math.inf
    state = dark_state(n, r)
    mom = moments(state)
    if abs(mom.sz) <= 1e-12 * n:
        raise DegenerateMomentsError("<S_z> vanishes; phase sensitivity undefined")
    result = {
        "N": n,
        "ratio": r,
        "theta": theta,
        **mom.as_dict(),
        "sql": sql_limit(n),
        "heisenberg": heisenberg_limit(n),
    }
    result.pop("n")
    payload = {"schema": dio.TABLE_SCHEMA, "config": cfg.to_dict(), "result": result}
    if cfg.amplitudes:
        payload["amplitudes"] = state.tolist()
    columns = ["N", "ratio", "theta", "sz", "d_sz", "sx2", "sy2", "sz2", "s_total_sq",
               "dphi", "sql", "heisenberg"]
    if cfg.output_format == "csv":
        rows = [result]
        if cfg.amplitudes:
            columns = ["m", "amplitude"]
            rows = [{"m": m, "amplitude": a} for m, a in enumerate(state)]
        return dio.table_csv(columns, rows), None
    return dio.dumps(payload), None


def _initial_state(cfg, n, chi_inf):
    if cfg.initial == "polarized":
        basis = "symmetric" if chi_inf else "full"
        return polarized_state(n, basis), basis
    if cfg.initial == "random":
        if cfg.seed is None:
            raise ConfigError("--initial random needs --seed")
        return random_state(n, int(cfg.seed), cfg.random_kind), "full"
    if cfg.initial == "file":
        if not cfg.state_file:
            raise ConfigError("--initial file needs --state-file")
        data = np.load(cfg.state_file)
        rho = pure_density(data) if data.ndim == 1 else np.asarray(data, dtype=complex)
        dim = rho.shape[0]
        if dim == n + 1 and chi_inf:
            return rho, "symmetric"
        if dim == 2**n:
            return rho, "full"
        raise ConfigError(f"state of dimension {dim} does not fit N={n}")
    raise ConfigError(f"unknown initial state {cfg.initial!r}")


def cmd_evolve(cfg):
    n = _scalar_n(cfg)
    theta = _theta(cfg)
    gc, gs = _rates(cfg)
    rho0, basis = _initial_state(cfg, n, gs == 0)
    channels = ChannelSet(n, theta, gc, gs, basis=basis)
    kwargs = {"rtol": cfg.rtol, "atol": cfg.atol}
    for name in ("t_max", "sample_dt", "tol"):
        if getattr(cfg, name) is not None:
            kwargs[name] = _float_value(getattr(cfg, name))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = evolve(rho0, channels, **kwargs)
    summary = dio.trajectory_summary(traj)
    note = (
        f"converged={str(traj.converged).lower()} t_final={summary['t_final']:.6g} "
        f"dphi={traj.steady.dphi:.10g} basis={basis}"
    )
    if cfg.output_format == "csv":
        return dio.trajectory_csv(traj), note
    return dio.dumps(dio.trajectory_payload(traj, cfg.to_dict(), cfg.seed)), note


def cmd_optimize(cfg):
    n = _scalar_n(cfg)
    chi = _float_value(cfg.chi) if cfg.chi is not None else None
    if chi is None or not chi > 0 or math.isinf(chi):
        raise ConfigError("optimize needs a finite positive --chi")
    tol = 1e-10 if cfg.tol is None else _float_value(cfg.tol)
    res = optimize_theta(n, chi, tol, as_printed=cfg.as_printed)
    row = res.as_dict()
    row["asym_small"] = asymptotic_small(n, chi)
    row["asym_large"] = asymptotic_large(n, chi)
    if cfg.output_format == "csv":
        columns = ["n", "chi", "theta_opt", "dphi_opt", "dphi_over_sql", "regime",
                   "iterations", "at_boundary", "asym_small", "asym_large"]
        return dio.table_csv(columns, [row]), None
    return dio.dumps({"schema": dio.TABLE_SCHEMA, "config": cfg.to_dict(), "result": row}), None


def cmd_sweep(cfg):
    mode = cfg.mode or ("point" if cfg.ratio is not None or cfg.theta is not None else "optimum")
    ns = _int_list(cfg.n if cfg.n is not None else [])
    if not ns:
        raise ConfigError("--n is required")
    if mode == "darkstate":
        ratios = _float_list(cfg.ratio) if cfg.ratio is not None else fig2_ratios(int(cfg.points))
        result = darkstate_sweep(ns, ratios)
    elif mode == "optimum":
        if cfg.chi is not None:
            chis = _float_list(cfg.chi)
        elif cfg.chi_min is not None:
            chis = fig4_chis(_float_value(cfg.chi_min), _float_value(cfg.chi_max),
                             int(cfg.chi_points or 101))
        else:
            raise ConfigError("give --chi or a chi range")
        tol = 1e-10 if cfg.tol is None else _float_value(cfg.tol)
        result = sweep(ns, chis, tol=tol)
    elif mode == "point":
        if cfg.chi is None:
            raise ConfigError("--chi is required")
        if cfg.theta is not None:
            thetas = _float_list(cfg.theta)
        elif cfg.ratio is not None:
            thetas = [math.atan(r) for r in _float_list(cfg.ratio)]
        else:
            raise ConfigError("give --ratio or --theta")
        result = sweep(ns, _float_list(cfg.chi), thetas=thetas)
    else:
        raise ConfigError(f"unknown sweep mode {mode!r}")
    failed = sum(1 for row in result.rows if row.get("error"))
    note = f"rows={len(result.rows)} failed={failed} mode={mode}"
    if cfg.output_format == "csv":
        return dio.table_csv(result.columns, result.rows), note
    payload = {
        "schema": dio.TABLE_SCHEMA,
        "config": cfg.to_dict(),
        "kind": result.kind,
        "columns": result.columns,
        "rows": result.rows,
    }
    return dio.dumps(payload), note


def cmd_params(cfg):
    if not cfg.params:
        raise ConfigError("params needs a 'params' block in the config file")
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        rates = derive_rates(CavityAtomParams.from_dict(cfg.params))
    result = {"rates": rates.as_dict()}
    if cfg.raman:
        result["rb87_d1_enhancement"] = rb87_d1_enhancement(
            _float_value(cfg.raman["delta"]), _float_value(cfg.raman["delta_hfs"])
        )
    if cfg.repump:
        result["repump"] = repump_populations(**cfg.repump).as_dict()
    note = "flags=" + (",".join(rates.flags) or "none")
    if cfg.output_format == "csv":
        row = {k: v for k, v in rates.as_dict().items() if k not in ("flags", "metadata")}
        row["flags"] = ";".join(rates.flags)
        return dio.table_csv(list(row), [row]), note
    payload = {"schema": dio.TABLE_SCHEMA, "config": cfg.to_dict(),
               "params": cfg.params, "result": result}
    return dio.dumps(payload), note


HANDLERS = {
    "darkstate": cmd_darkstate,
    "evolve": cmd_evolve,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "params": cmd_params,
}


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p):
    p.add_argument("--config", help="JSON config, a preset name, or a previous JSON output")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p.add_argument("--output", dest="output_path", help="write here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dissqueeze",
        description="Dark states, master-equation runs and optimal squeezing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("darkstate", help="exact dark state and its moments")
    _add_common(p)
    p.add_argument("--n")
    p.add_argument("--ratio")
    p.add_argument("--theta")
    p.add_argument("--amplitudes", action="store_true", default=None)

    p = sub.add_parser("evolve", help="integrate the master equation")
    _add_common(p)
    for name in ("--n", "--ratio", "--theta", "--chi", "--gamma-cav", "--gamma-spont",
                 "--t-max", "--sample-dt", "--tol", "--rtol", "--atol", "--state-file"):
        p.add_argument(name)
    p.add_argument("--seed", type=int)
    p.add_argument("--initial", choices=("polarized", "random", "file"))
    p.add_argument("--random-kind", choices=("haar_pure", "product_random"))
    p.add_argument("--fig3a", dest="preset", action="store_const", const="fig3a")
    p.add_argument("--fig3b", dest="preset", action="store_const", const="fig3b")

    p = sub.add_parser("optimize", help="optimal mixing angle at fixed N and chi")
    _add_common(p)
    p.add_argument("--n")
    p.add_argument("--chi")
    p.add_argument("--tol")
    p.add_argument("--as-printed", action="store_true", default=None)

    p = sub.add_parser("sweep", help="parameter grids and figure data")
    _add_common(p)
    p.add_argument("--n", help="comma-separated list")
    p.add_argument("--chi", help="comma-separated list")
    p.add_argument("--ratio", help="comma-separated list")
    p.add_argument("--theta", help="comma-separated list")
    p.add_argument("--mode", choices=("darkstate", "optimum", "point"))
    p.add_argument("--points", type=int)
    p.add_argument("--chi-min")
    p.add_argument("--chi-max")
    p.add_argument("--chi-points", type=int)
    p.add_argument("--tol")
    p.add_argument("--fig2", dest="preset", action="store_const", const="fig2")
    p.add_argument("--fig4", dest="preset", action="store_const", const="fig4")

    p = sub.add_parser("params", help="model rates from laboratory parameters")
    _add_common(p)
    return parser


def load_config_file(ref):
    """Read a config from a path or a shipped preset name."""
    path = Path(ref)
    if not path.exists():
        name = path.name if path.suffix == ".json" else f"{path.name}.json"
        preset = resources.files("dissqueeze") / "presets" / name
        if not preset.is_file():
            raise ConfigError(f"no config file or preset named {ref!r}")
        text = preset.read_text()
    else:
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {ref!r} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]  # a previous output
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


# argparse names that are not RunConfig fields
_NOT_CONFIG = {"config", "preset", "command"}
_LIST_FIELDS = {"sweep": ("n", "chi", "ratio", "theta")}


def config_from_args(args):
    data = {"command": args.command}
    preset = getattr(args, "preset", None)
    if preset:
        data.update(load_config_file(preset))
    if args.config:
        data.update(load_config_file(args.config))
    if data["command"] != args.command:
        raise ConfigError(f"config is for {data['command']!r}, not {args.command!r}")
    for key, val in vars(args).items():
        if key in _NOT_CONFIG or val is None:
            continue
        data[key] = val
    cfg = RunConfig.from_dict(data)
    _normalize(cfg)
    if cfg.output_format not in ("csv", "json"):
        raise ConfigError(f"unknown output format {cfg.output_format!r}")
    return cfg


_FLOAT_FIELDS = ("ratio", "theta", "chi", "gamma_cav", "gamma_spont", "t_max", "sample_dt",
                 "tol", "rtol", "atol", "chi_min", "chi_max")


def _as_echo(v):
    return "inf" if math.isinf(v) else v


def _normalize(cfg):
    # typed values in the echoed config, so a re-run parses identically
    lists = _LIST_FIELDS.get(cfg.command, ())
    for key in _FLOAT_FIELDS:
        val = getattr(cfg, key)
        if val is None:
            continue
        if key in lists:
            setattr(cfg, key, [_as_echo(v) for v in _float_list(val)])
        else:
            setattr(cfg, key, _as_echo(_float_value(val)))
    if cfg.n is not None:
        cfg.n = _int_list(cfg.n) if "n" in lists else _scalar_n(cfg)


def run(cfg):
    """Execute a config; returns (text, note). Raises on failure."""
    return HANDLERS[cfg.command](cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        text, note = run(cfg)
    except OddEnsembleError as exc:
        print(f"error: OddEnsemble: {exc}", file=sys.stderr)
        return EXIT_ODD
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (ConfigError, CapacityError, DegenerateMomentsError, LinearizationBreakdown,
            ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    if note:
        print(note, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
