"""Mixing-angle optimization of the linearized steady-state sensitivity."""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .darkstate import DegenerateMomentsError, OddEnsembleError, dark_state_dphi, sql_limit
from .meanfield import LinearizationBreakdown, mf_dphi, mf_sensitivity_cavity_only
from .spin import check_ensemble

THETA_GUARD = 1e-12
GRID_POINTS = 64
SMALL_REGIME = 0.3
LARGE_REGIME = 30.0
THREADS_ENV = "DISSQUEEZE_THREADS"

INVPHI = (math.sqrt(5) - 1) / 2  # 1/golden ratio


@dataclass(frozen=True)
class OptimizationResult:
    n: int
    chi: float
    theta_opt: float
    dphi_opt: float
    dphi_over_sql: float
    regime: str
    iterations: int
    bracket: tuple
    at_boundary: bool

    def as_dict(self):
        out = asdict(self)
        out["bracket"] = list(self.bracket)
        return out


def regime_label(n, chi):
    """small_chiN below N chi = 0.3, large_chiN above 30, crossover otherwise."""
    x = n * chi
    if x < SMALL_REGIME:
        return "small_chiN"
    if x > LARGE_REGIME:
        return "large_chiN"
    return "crossover"


def asymptotic_small(n, chi):
    """(1/sqrt(N)) (1 - chi^2 N^2 / 32), valid for N chi of order one or less."""
    return (1.0 - (chi * n) ** 2 / 32) / math.sqrt(n)


def asymptotic_large(n, chi):
    """(2 / (chi N^3))^(1/4), valid for N chi >> 1."""
    return (2.0 / (chi * float(n) ** 3)) ** 0.25


def theta_grid(n_linear=GRID_POINTS, guard=THETA_GUARD):
    """Coarse grid: linear in theta plus geometric in pi/4 - theta down to the guard."""
    hi = math.pi / 4 - guard
    lin = np.linspace(0.0, hi, n_linear)
    eps = np.geomspace(guard, math.pi / 4, n_linear)
    return np.unique(np.concatenate([lin, math.pi / 4 - eps]).clip(0.0, hi))


def golden_section(f, lo, hi, tol, max_iter=500):
    """Minimize a unimodal f on [lo, hi] to a bracket width <= tol.

    Returns (x, f(x), iterations, (lo, hi)).
    """
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        it += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, it, (a, b)


def optimize_theta(n, chi, tol=1e-10, as_printed=False, guard=THETA_GUARD):
    """Mixing angle minimizing the linearized steady-state dphi at fixed (N, chi).

    A coarse grid picks the best cell; golden-section search refines it. The
    grid protects against a non-unimodal objective.
    """
    n = check_ensemble(n)
    if n < 2:
        raise ValueError("optimization needs N >= 2")
    chi = float(chi)
    if not chi > 0 or not tol > 0:
        raise ValueError("chi and tol must be positive")

    def f(theta):
        return mf_dphi(theta, chi, n, as_printed)

    grid = theta_grid(guard=guard)
    values = np.array([f(t) for t in grid])
    k = int(np.argmin(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    theta, dphi, iters, bracket = golden_section(f, lo, hi, tol)
    if values[k] < dphi:
        theta, dphi = float(grid[k]), float(values[k])
    edge = math.pi / 4 - guard
    at_boundary = theta >= edge - tol or theta <= tol
    return OptimizationResult(
        n=n,
        chi=chi,
        theta_opt=float(theta),
        dphi_opt=float(dphi),
        dphi_over_sql=float(dphi / sql_limit(n)),
        regime=regime_label(n, chi),
        iterations=iters,
        bracket=(float(bracket[0]), float(bracket[1])),
        at_boundary=bool(at_boundary),
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    kind: str
    columns: list
    rows: list

    def column(self, name):
        return [row[name] for row in self.rows]


def default_jobs():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _run_rows(func, points, jobs):
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs <= 1 or len(points) <= 1:
        return [func(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, points))  # map keeps input order


def _guarded(compute, row):
    try:
        row.update(compute())
        row["error"] = ""
    except (ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


OPTIMUM_COLUMNS = [
    "N", "chi", "Nchi", "theta_opt", "dphi_opt", "dphi_over_sql", "regime",
    "iterations", "at_boundary", "asym_small", "asym_large", "error",
]


def _optimum_row(point):
    n, chi, tol = point
    row = {"N": n, "chi": chi, "Nchi": n * chi}
    for key in OPTIMUM_COLUMNS[3:-1]:
        row[key] = math.nan

    def compute():
        res = optimize_theta(n, chi, tol)
        return {
            "theta_opt": res.theta_opt,
            "dphi_opt": res.dphi_opt,
            "dphi_over_sql": res.dphi_over_sql,
            "regime": res.regime,
            "iterations": res.iterations,
            "at_boundary": res.at_boundary,
            "asym_small": asymptotic_small(n, chi),
            "asym_large": asymptotic_large(n, chi),
        }

    return _guarded(compute, row)


POINT_COLUMNS = ["N", "chi", "theta", "ratio", "dphi_mf", "dphi_over_sql", "error"]


def _point_row(point):
    n, chi, theta = point
    row = {"N": n, "chi": chi, "theta": theta, "ratio": math.tan(theta),
           "dphi_mf": math.nan, "dphi_over_sql": math.nan}

    def compute():
        d = mf_dphi(theta, chi, n)
        return {"dphi_mf": d, "dphi_over_sql": d * math.sqrt(n)}

    return _guarded(compute, row)


def sweep(ns, chis, thetas=None, tol=1e-10, jobs=None):
    """Grid over N x chi (x theta). Without thetas each point is optimized.

    Rows come out in nested-loop order (N outermost) whatever ``jobs`` is.
    Failures are recorded in the row's ``error`` field.
    """
    ns = [check_ensemble(n) for n in ns]
    chis = [float(c) for c in chis]
    if not ns or not chis or (thetas is not None and len(thetas) == 0):
        raise ValueError("sweep grids must be non-empty")
    if thetas is None:
        points = [(n, c, tol) for n in ns for c in chis]
        return SweepResult("optimum", OPTIMUM_COLUMNS, _run_rows(_optimum_row, points, jobs))
    points = [(n, c, float(t)) for n in ns for c in chis for t in thetas]
    return SweepResult("point", POINT_COLUMNS, _run_rows(_point_row, points, jobs))


DARKSTATE_COLUMNS = ["N", "ratio", "theta", "dphi_exact", "dphi_mf", "sql", "heisenberg", "error"]


def _darkstate_row(point):
    n, r = point
    row = {"N": n, "ratio": r, "theta": math.atan(r), "dphi_exact": math.nan,
           "dphi_mf": math.nan, "sql": 1 / math.sqrt(n),
           "heisenberg": 1 / math.sqrt(n * (n / 2 + 1))}
    errors = []
    try:
        row["dphi_exact"] = dark_state_dphi(n, r)
    except (OddEnsembleError, DegenerateMomentsError) as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    try:
        row["dphi_mf"] = mf_sensitivity_cavity_only(math.atan(r), n)
    except LinearizationBreakdown as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    row["error"] = "; ".join(errors)
    return row


def darkstate_sweep(ns, ratios, jobs=None):
    """Exact dark-state and cavity-only mean-field dphi versus drive ratio."""
    ns = [check_ensemble(n) for n in ns]
    ratios = [float(r) for r in ratios]
    if not ns or not ratios:
        raise ValueError("sweep grids must be non-empty")
    points = [(n, r) for n in ns for r in ratios]
    return SweepResult("darkstate", DARKSTATE_COLUMNS, _run_rows(_darkstate_row, points, jobs))


def fig2_ratios(points=200):
    """Drive ratios on [0, 1), right edge excluded."""
    return np.linspace(0.0, 1.0, points, endpoint=False).tolist()


def fig4_chis(lo=1e-7, hi=1e3, points=101):
    return np.geomspace(lo, hi, points).tolist()


def fitted_exponent(ns, chi, tol=1e-12):
    """Least-squares slope of log dphi_opt versus log N."""
    ns = np.asarray(ns, dtype=float)
    d = np.array([optimize_theta(int(n), chi, tol).dphi_opt for n in ns])
    slope, _ = np.polyfit(np.log(ns), np.log(d), 1)
    return float(slope)
