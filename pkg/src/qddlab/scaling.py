"""Sweeps over (orders, interval, realization) and suppression-order fits.

A sweep cell is one sequence at one bath realization evolved across a grid
of dimensionless minimum intervals J*tau. Errors behave like
chi * (J*tau)**n at small J*tau, so the suppression order n is the slope of
log10(mean error) against log10(J*tau); slopes are fitted by ordinary least
squares on a left-anchored window and rounded to the nearest integer.

The closed-form predictions implemented by :func:`predicted_exponents`:

    n_x = N1 + 1
    n_z = N2 + 1, except 2*N1 + 2 when N1 is odd and N2 >= 2*N1 + 2
    n_y = max(N1, N2) + 1      (N1 even, N2 even)
          max(N1 + 1, N2) + 1  (N1 even, N2 odd)
          N1 + 1               (N1 odd,  N2 even)
          N1 + 2               (N1 odd,  N2 odd)
    n_D = min(n_x, n_y, n_z)

Working precision is chosen automatically from these predictions: the
smallest error block scales like (J*tau)**n_max and must stay far above
roundoff next to O(1) entries, and the distance D enters through D**2, so
its exponent counts twice. Hence

    digits = 20 + ceil(max(n_x, n_y, n_z, 2*n_D) * |min log10(J*tau)|).

Reproducibility: the per-realization seed is the low 64 bits of
SHA-256("qddlab:<master_seed>:<realization>"), so parallel and serial runs
produce identical samples, and any realization can be replayed in isolation.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import DegenerateFit, IncompleteSweep, TooFewPoints
from .evolve import run
from .metrics import AXES, distance_to_identity, intermediate_errors, single_axis_error
from .model import assemble, sample_bath
from .precision import PrecisionContext
from .sequence import compile_spec, free_schedule, qdd, udd

DEFAULT_GRID = tuple(float(x) for x in range(-9, 3))


class Exponents(NamedTuple):
    n_x: int
    n_y: int
    n_z: int
    n_d: int


def predicted_exponents(n1: int, n2: int) -> Exponents:
    """Closed-form suppression orders for inner order n1, outer order n2."""
    if n1 < 1 or n2 < 1:
        raise ValueError("sequence orders must be >= 1")
    n_x = n1 + 1
    if n1 % 2 == 0 or n2 < 2 * n1 + 2:
        n_z = n2 + 1
    else:
        n_z = 2 * n1 + 2
    if n1 % 2 == 0:
        n_y = (max(n1, n2) if n2 % 2 == 0 else max(n1 + 1, n2)) + 1
    else:
        n_y = n1 + 1 if n2 % 2 == 0 else n1 + 2
    return Exponents(n_x, n_y, n_z, min(n_x, n_y, n_z))


# --- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """Everything needed to reproduce a sweep bit for bit."""

    kind: str = "qdd"                    # "qdd" | "udd" | "free"
    n1_list: tuple = (1,)
    n2_list: tuple = (1,)
    axis: str = "Z"                      # single-sequence axis (kind "udd")
    log_jtau_grid: tuple = DEFAULT_GRID
    realizations: int = 50
    seed: int = 0
    j_coupling: float = 1e-4
    beta: float = 1e-6
    digits: object = "auto"              # "auto" or an integer
    norm_kinds: tuple = ("nuclear",)
    n_bath_qubits: int = 4

    def __post_init__(self):
        if self.kind not in ("qdd", "udd", "free"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if list(self.log_jtau_grid) != sorted(set(self.log_jtau_grid)):
            raise ValueError("log_jtau_grid must be strictly increasing")
        if not self.j_coupling > 0:
            raise ValueError("j_coupling must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    def cells(self):
        if self.kind == "qdd":
            return [(a, b) for a in self.n1_list for b in self.n2_list]
        if self.kind == "udd":
            return [(n, 0) for n in self.n1_list]
        return [(0, 0)]

    def resolved_digits(self) -> int:
        if self.digits == "auto":
            return auto_digits(self)
        return int(self.digits)


def auto_digits(config: SweepConfig) -> int:
    """Digit budget from the predicted exponents over the requested grid."""
    if config.kind == "qdd":
        n_max = 1
        for (a, b) in config.cells():
            e = predicted_exponents(a, b)
            n_max = max(n_max, e.n_x, e.n_y, e.n_z, 2 * e.n_d)
    elif config.kind == "udd":
        n_max = max(max(n for n, _ in config.cells()) + 1, 2)
    else:
        n_max = 2
    span = max(0.0, -min(config.log_jtau_grid))
    return 20 + math.ceil(n_max * span)


def realization_seed(master_seed: int, realization: int) -> int:
    """Low 64 bits of SHA-256('qddlab:<seed>:<realization>')."""
    digest = hashlib.sha256(f"qddlab:{master_seed}:{realization}".encode()).digest()
    return int.from_bytes(digest[-8:], "big")


# --- samples ----------------------------------------------------------------


@dataclass(frozen=True)
class ErrorSample:
    """One evolved cell at one interval; error values are 25-digit strings."""

    n1: int
    n2: int
    log10_jtau: float
    realization: int
    e_x: str
    e_y: str
    e_z: str
    d: str
    norm_kind: str
    digits: int

    def sort_key(self):
        return (self.n1, self.n2, self.log10_jtau, self.realization, self.norm_kind)

    def value(self, mu: str) -> float:
        return float({"x": self.e_x, "y": self.e_y, "z": self.e_z,
                      "D": self.d}[mu])


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    digits: int
    samples: tuple

    def aggregates(self):
        """Mean and standard error per (n1, n2, log10_jtau, norm_kind, mu)."""
        groups = {}
        for s in self.samples:
            key = (s.n1, s.n2, s.log10_jtau, s.norm_kind)
            groups.setdefault(key, []).append(s)
        out = {}
        for key, group in sorted(groups.items()):
            entry = {}
            for mu in ("x", "y", "z", "D"):
                vals = [s.value(mu) for s in group]
                mean = sum(vals) / len(vals)
                if len(vals) > 1:
                    var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
                    stderr = math.sqrt(var / len(vals))
                else:
                    stderr = 0.0
                entry[mu] = (mean, stderr)
            out[key] = entry
        return out


def _schedule_for(config: SweepConfig, cell):
    if config.kind == "qdd":
        return compile_spec(qdd(cell[0], cell[1]))
    if config.kind == "udd":
        return compile_spec(udd(config.axis, cell[0]))
    return free_schedule()


# worker-side model memo; lives per process, bounded
_MODEL_MEMO: dict = {}
_MODEL_MEMO_CAP = 16


def _model_for(rseed, n_bath, j_coupling, beta, digits):
    key = (rseed, n_bath, j_coupling, beta, digits)
    model = _MODEL_MEMO.get(key)
    if model is None:
        ctx = PrecisionContext(digits)
        model = assemble(sample_bath(rseed, n_bath), j_coupling, beta, ctx)
        if len(_MODEL_MEMO) >= _MODEL_MEMO_CAP:
            _MODEL_MEMO.clear()
        _MODEL_MEMO[key] = model
    return model


def _sweep_task(args):
    """Evolve one (cell, realization) across the interval grid."""
    config, cell, realization, digits = args
    rseed = realization_seed(config.seed, realization)
    model = _model_for(rseed, config.n_bath_qubits, config.j_coupling,
                       config.beta, digits)
    schedule = _schedule_for(config, cell)
    ctx = model.ctx
    fmt = ctx.fmt
    rows = []
    for ljt in config.log_jtau_grid:
        tau = ctx.real(10) ** ctx.real(ljt) / ctx.real(config.j_coupling)
        result = run(model, schedule, tau, with_checkpoints=False)
        dist = fmt(distance_to_identity(result.u_final))
        for norm_kind in config.norm_kinds:
            errs = {mu: single_axis_error(result.u_final, mu, norm_kind)
                    for mu in AXES}
            rows.append(ErrorSample(
                n1=cell[0], n2=cell[1], log10_jtau=float(ljt),
                realization=realization,
                e_x=fmt(errs["x"]), e_y=fmt(errs["y"]), e_z=fmt(errs["z"]),
                d=dist, norm_kind=norm_kind, digits=digits))
    return rows


def run_sweep(config: SweepConfig, threads: int = 1,
              on_progress=None) -> SweepResult:
    """Run every (cell, realization) task and collect order-canonical samples.

    Results are independent of ``threads``: tasks are pure functions of the
    config and the collected samples are sorted before packaging.
    """
    digits = config.resolved_digits()
    cells = config.cells()
    # realization-major order: a contiguous chunk shares one bath model,
    # so the per-process memo pays for each eigendecomposition once
    tasks = [(config, cell, r, digits)
             for r in range(config.realizations)
             for cell in cells]
    samples = []
    if threads > 1 and len(tasks) > 1:
        chunk = max(1, min(len(cells), math.ceil(len(tasks) / (4 * threads))))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, rows in enumerate(pool.map(_sweep_task, tasks, chunksize=chunk)):
                samples.extend(rows)
                if on_progress:
                    on_progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            samples.extend(_sweep_task(task))
            if on_progress:
                on_progress(i + 1, len(tasks))
    samples.sort(key=ErrorSample.sort_key)
    return SweepResult(config=config, digits=digits, samples=tuple(samples))


# --- intermediate (checkpoint) errors ------------------------------------------


def _intermediate_task(args):
    config, cell, realization, digits = args
    rseed = realization_seed(config.seed, realization)
    model = _model_for(rseed, config.n_bath_qubits, config.j_coupling,
                       config.beta, digits)
    schedule = compile_spec(qdd(cell[0], cell[1]))
    ctx = model.ctx
    rows = []
    for ljt in config.log_jtau_grid:
        tau = ctx.real(10) ** ctx.real(ljt) / ctx.real(config.j_coupling)
        result = run(model, schedule, tau, with_checkpoints=True)
        for norm_kind in config.norm_kinds:
            errs = intermediate_errors(result, norm_kind)
            for (j, mu), val in errs.items():
                rows.append((cell[0], cell[1], float(ljt), realization, j, mu,
                             norm_kind, ctx.fmt(val)))
    return rows


def run_intermediate(config: SweepConfig, threads: int = 1):
    """Checkpoint errors for a single-cell QDD config.

    Returns rows (n1, n2, log10_jtau, realization, j, mu, norm_kind, value),
    order-canonical and deterministic.
    """
    if config.kind != "qdd" or len(config.cells()) != 1:
        raise ValueError("intermediate errors need a single QDD cell")
    digits = config.resolved_digits()
    cell = config.cells()[0]
    tasks = [(config, cell, r, digits) for r in range(config.realizations)]
    rows = []
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(_intermediate_task, tasks):
                rows.extend(chunk)
    else:
        for task in tasks:
            rows.extend(_intermediate_task(task))
    rows.sort(key=lambda r: (r[2], r[3], r[4], r[5], r[6]))
    return rows, digits


def aggregate_intermediate(rows):
    """Mean/stderr over realizations: map (log10_jtau, j, mu, norm) -> pair."""
    groups = {}
    for (_n1, _n2, ljt, _r, j, mu, norm_kind, value) in rows:
        groups.setdefault((ljt, j, mu, norm_kind), []).append(float(value))
    out = {}
    for key, vals in sorted(groups.items()):
        mean = sum(vals) / len(vals)
        if len(vals) > 1:
            var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
            stderr = math.sqrt(var / len(vals))
        else:
            stderr = 0.0
        out[key] = (mean, stderr)
    return out


# --- slope fitting ---------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    slope_raw: float
    n_hat: int
    intercept: float
    window: tuple            # (log_jtau_lo, log_jtau_hi)
    r2: float
    stderr: float
    n_points: int

    @property
    def flagged(self) -> bool:
        """True when the raw slope strays far from its rounded integer."""
        return abs(self.slope_raw - self.n_hat) > 0.15


def _ols(points):
    n = len(points)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - ybar) ** 2 for y in ys)
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    if n > 2 and sxx > 0:
        stderr = math.sqrt(max(ss_res, 0.0) / (n - 2) / sxx)
    else:
        stderr = 0.0
    return slope, intercept, r2, stderr, ss_tot


def fit_exponent(points, window: Optional[tuple] = None,
                 log_floor: Optional[float] = None) -> ScalingFit:
    """Left-anchored power-law fit on (log10 J*tau, log10 mean error) points.

    Without an explicit ``window`` the fit starts from the four leftmost
    points and extends one point to the right as long as the refit slope
    moves by less than 0.05 and R^2 stays at 0.999 or above (a flat series
    never extends, which is the correct behaviour: its slope is already
    stable at zero). ``window=(lo, hi)`` fixes the range instead.

    ``log_floor`` marks the roundoff floor of the data, in log10; if every
    candidate point sits at or below it the series is unresolved noise and
    DegenerateFit is raised rather than reporting a meaningless slope 0.
    """
    pts = sorted((float(x), float(y)) for x, y in points)
    if window is not None:
        lo, hi = window
        pts = [p for p in pts if lo <= p[0] <= hi]
    if len(pts) < 4:
        raise TooFewPoints(f"need at least 4 points, got {len(pts)}")
    if log_floor is not None and all(not math.isfinite(y) or y <= log_floor
                                     for _, y in pts):
        raise DegenerateFit("all points at or below the roundoff floor")
    if any(not math.isfinite(y) for _, y in pts[:4]):
        raise DegenerateFit("non-finite error values inside the fit window")

    if window is not None:
        slope, intercept, r2, stderr, _ = _ols(pts)
        return ScalingFit(slope_raw=slope, n_hat=round(slope),
                          intercept=intercept, window=(pts[0][0], pts[-1][0]),
                          r2=r2, stderr=stderr, n_points=len(pts))

    k = 4
    slope, intercept, r2, stderr, _ = _ols(pts[:k])
    while k < len(pts):
        if not math.isfinite(pts[k][1]):
            break
        cand = _ols(pts[:k + 1])
        if abs(cand[0] - slope) < 0.05 and cand[2] >= 0.999:
            slope, intercept, r2, stderr, _ = cand
            k += 1
        else:
            break
    return ScalingFit(slope_raw=slope, n_hat=round(slope), intercept=intercept,
                      window=(pts[0][0], pts[k - 1][0]), r2=r2, stderr=stderr,
                      n_points=k)


def fit_sweep(sweep: SweepResult, window: Optional[tuple] = None):
    """Fit every (cell, norm_kind, mu) series of a sweep.

    Returns a map (n1, n2, norm_kind, mu) -> ScalingFit with mu in
    {x, y, z, D}.
    """
    aggregates = sweep.aggregates()
    ctx_floor = math.log10(10.0) + (1 - sweep.digits)   # log10(10 * eps)
    series = {}
    for (n1, n2, ljt, norm_kind), entry in aggregates.items():
        for mu in ("x", "y", "z", "D"):
            mean = entry[mu][0]
            y = math.log10(mean) if mean > 0 else -math.inf
            series.setdefault((n1, n2, norm_kind, mu), []).append((ljt, y))
    return {key: fit_exponent(pts, window=window, log_floor=ctx_floor)
            for key, pts in sorted(series.items())}


# --- comparison against the closed-form table -------------------------------------


@dataclass(frozen=True)
class CompareRow:
    n1: int
    n2: int
    mu: str
    predicted: int
    fitted: int
    slope_raw: float
    match: bool


@dataclass(frozen=True)
class CompareReport:
    rows: tuple
    norm_kind: str

    @property
    def mismatches(self):
        return [r for r in self.rows if not r.match]

    def render(self) -> str:
        lines = [f"norm_kind: {self.norm_kind}",
                 "n1 n2 mu predicted fitted slope_raw match"]
        for r in self.rows:
            lines.append(f"{r.n1:2d} {r.n2:2d} {r.mu:>2s} {r.predicted:9d} "
                         f"{r.fitted:6d} {r.slope_raw:9.4f} "
                         f"{'ok' if r.match else 'MISMATCH'}")
        lines.append(f"mismatches: {len(self.mismatches)}")
        return "\n".join(lines)


def compare_tables(sweep: SweepResult, window: Optional[tuple] = None,
                   norm_kind: Optional[str] = None) -> CompareReport:
    """Fitted vs predicted integer exponents for every QDD cell of a sweep."""
    if sweep.config.kind != "qdd":
        raise IncompleteSweep("exponent tables are defined for QDD sweeps")
    norm_kind = norm_kind or sweep.config.norm_kinds[0]
    fits = fit_sweep(sweep, window=window)
    rows = []
    for (n1, n2) in sweep.config.cells():
        pred = predicted_exponents(n1, n2)
        for mu, expected in (("x", pred.n_x), ("y", pred.n_y),
                             ("z", pred.n_z), ("D", pred.n_d)):
            key = (n1, n2, norm_kind, mu)
            if key not in fits:
                raise IncompleteSweep(f"sweep does not cover cell {key}")
            fit = fits[key]
            rows.append(CompareRow(n1=n1, n2=n2, mu=mu, predicted=expected,
                                   fitted=fit.n_hat, slope_raw=fit.slope_raw,
                                   match=fit.n_hat == expected))
    return CompareReport(rows=tuple(rows), norm_kind=norm_kind)
