"""Monte Carlo harness: per-realization solves, parameter sweeps, mode comparison.

Realization ``k`` of a sweep always uses the channel stream
``realization_rng(seed, k)``, whatever the sweep point or mode. Modes and
sweep points are therefore compared on identical fading and placements
(common random numbers), and results do not depend on execution order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, generate_batch
from .config import NetworkConfig
from .rates import end_to_end_rates, energy_efficiency, icsi_interference, total_power
from .solver import MODES, SolveOutcome, SolverSettings, Status, solve_algorithm1

SWEEP_PARAMS = {
    "sigma_eps": "sigma_eps",
    "p_max": "p_max",
    "rsu_radius": "rsu_radius_m",
    "circuit_power": "circuit_power_dbm",
}

# Fields that change the drawn channels (everything else only changes the solve).
_GEOMETRY_FIELDS = ("seed", "bs_radius_m", "rsu_radius_m", "pathloss_exp", "sigma_eps",
                    "noise_density_dbm", "bandwidth_hz")


@dataclass(frozen=True)
class Metrics:
    """Per-realization figures of merit; arrays for a batch."""

    feasible: np.ndarray
    ee_mbpj: np.ndarray  # nan where infeasible
    icsi_w: np.ndarray
    sum_rate: np.ndarray
    power_w: np.ndarray
    iterations: np.ndarray
    worst_slack: np.ndarray  # smallest signed constraint slack


def compute_metrics(outcome: SolveOutcome, ch: ChannelRealization, config: NetworkConfig) -> Metrics:
    sol = outcome.solution
    report = end_to_end_rates(ch, sol)
    feasible = np.asarray(outcome.status == Status.CONVERGED.value)
    ee = np.where(feasible, energy_efficiency(report, sol, config), np.nan)
    return Metrics(feasible=feasible, ee_mbpj=ee, icsi_w=icsi_interference(ch, sol),
                   sum_rate=np.asarray(report.sum_rate), power_w=total_power(sol),
                   iterations=np.asarray(outcome.iterations_used),
                   worst_slack=np.asarray(outcome.worst_slack))


def _check_mode(mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def run_realization(config: NetworkConfig, index: int, mode: str = "ambc",
                    settings: SolverSettings | None = None) -> tuple[SolveOutcome, Metrics]:
    """Draw realization ``index`` of ``config.seed``, solve it and score it.

    Infeasible outcomes are returned with ``feasible`` False, never raised.
    """
    _check_mode(mode)
    ch = generate_batch(config, 1, start=index)
    outcome = solve_algorithm1(ch, config, settings, mode=mode)
    metrics = compute_metrics(outcome, ch, config)
    return outcome[0], Metrics(*(np.asarray(v)[0] for v in vars(metrics).values()))


@dataclass(frozen=True)
class SweepPlan:
    param: str
    values: tuple[float, ...]
    base: NetworkConfig = field(default_factory=NetworkConfig)
    modes: tuple[str, ...] = MODES
    n_realizations: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"param must be one of {sorted(SWEEP_PARAMS)}, got {self.param!r}")
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("values must be nonempty")
        steps = np.diff(values)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("values must be strictly increasing or strictly decreasing")
        if not self.modes:
            raise ValueError("modes must be nonempty")
        for mode in self.modes:
            _check_mode(mode)
        if self.n_realizations is not None and self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def realizations(self) -> int:
        return self.base.n_realizations if self.n_realizations is None else self.n_realizations

    def config_at(self, value: float) -> NetworkConfig:
        return self.base.replace(**{SWEEP_PARAMS[self.param]: value})


@dataclass(frozen=True)
class PointStats:
    value: float
    mode: str
    mean_ee_mbpj: float
    stderr_ee: float
    mean_icsi_w: float
    feasibility_rate: float
    mean_iters: float
    n: int
    n_feasible: int


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    points: tuple[PointStats, ...]
    # Per-realization metrics keyed by (value index, mode).
    runs: dict[tuple[int, str], Metrics] = field(repr=False, compare=False)

    def point(self, value_index: int, mode: str) -> PointStats:
        value = self.plan.values[value_index]
        for p in self.points:
            if p.value == value and p.mode == mode:
                return p
        raise KeyError((value_index, mode))

    def series(self, mode: str, attr: str = "mean_ee_mbpj") -> np.ndarray:
        return np.array([getattr(self.point(k, mode), attr) for k in range(len(self.plan.values))])


def _stats(value: float, mode: str, metrics: Metrics) -> PointStats:
    ok = metrics.feasible
    n, nf = int(ok.size), int(ok.sum())

    def mean(x):
        return float(np.mean(x[ok])) if nf else float("nan")

    stderr = float(np.std(metrics.ee_mbpj[ok], ddof=1) / np.sqrt(nf)) if nf > 1 else float("nan")
    return PointStats(value=value, mode=mode, mean_ee_mbpj=mean(metrics.ee_mbpj), stderr_ee=stderr,
                      mean_icsi_w=mean(metrics.icsi_w), feasibility_rate=nf / n,
                      mean_iters=mean(metrics.iterations.astype(float)), n=n, n_feasible=nf)


def _solve_chunk(args):
    config, start, n, mode = args
    ch = generate_batch(config, n, start=start)
    return ch, solve_algorithm1(ch, config, mode=mode)


def _solve_point(config: NetworkConfig, n: int, mode: str, workers: int):
    if workers <= 1:
        return _solve_chunk((config, 0, n, mode))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    jobs = [(config, int(a), int(b - a), mode) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_solve_chunk, jobs))
    return _concat(parts)


def _concat(parts):
    from .channel import stack_realizations

    chans = stack_realizations([c[k] for c, _ in parts for k in range(len(c))])
    outs = [o for _, o in parts]
    sol0 = outs[0].solution
    cat = np.concatenate
    solution = type(sol0)(*(cat([getattr(o.solution, f) for o in outs])
                            for f in ("alpha", "beta", "xi", "p_bs_w", "q_rsu_w")))
    outcome = SolveOutcome(
        solution=solution,
        converged=cat([o.converged for o in outs]),
        iterations_used=cat([o.iterations_used for o in outs]),
        constraint_slacks={k: cat([o.constraint_slacks[k] for o in outs]) for k in outs[0].constraint_slacks},
        status=cat([o.status for o in outs]),
        stage_status=tuple(cat([o.stage_status[s] for o in outs]) for s in range(len(outs[0].stage_status))),
    )
    return chans, outcome


def run_sweep(plan: SweepPlan, progress=None) -> SweepResult:
    """Solve every (value, mode) point and aggregate over feasible runs.

    The solve does not depend on circuit power, so points that differ only
    in that parameter reuse one solve.
    """
    n = plan.realizations
    cache: dict[tuple[NetworkConfig, str], tuple] = {}
    points, runs = [], {}
    for k, value in enumerate(plan.values):
        config = plan.config_at(value)
        for mode in plan.modes:
            key = (config.replace(circuit_power_dbm=0.0), mode)
            if key not in cache:
                cache[key] = _solve_point(config, n, mode, plan.workers)
            ch, outcome = cache[key]
            metrics = compute_metrics(outcome, ch, config)
            runs[(k, mode)] = metrics
            points.append(_stats(value, mode, metrics))
            if progress is not None:
                progress(points[-1])
    return SweepResult(plan=plan, points=tuple(points), runs=runs)


@dataclass(frozen=True)
class ModeComparison:
    value: float
    mean_diff: float  # AmBC minus pure NOMA, paired over runs feasible in both modes
    stderr: float
    n_pairs: int
    ratio: float  # mean EE ratio over the same pairs
    violation: bool  # AmBC below pure NOMA by more than one standard error


def compare_modes(result: SweepResult) -> list[ModeComparison]:
    if not {"ambc", "pure_noma"} <= set(result.plan.modes):
        raise ValueError("result must contain both ambc and pure_noma runs")
    out = []
    for k, value in enumerate(result.plan.values):
        a, b = result.runs[(k, "ambc")], result.runs[(k, "pure_noma")]
        both = a.feasible & b.feasible
        npairs = int(both.sum())
        if npairs == 0:
            out.append(ModeComparison(value, float("nan"), float("nan"), 0, float("nan"), False))
            continue
        diff = a.ee_mbpj[both] - b.ee_mbpj[both]
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / np.sqrt(npairs)) if npairs > 1 else 0.0
        ratio = float(a.ee_mbpj[both].mean() / b.ee_mbpj[both].mean())
        out.append(ModeComparison(value, mean, se, npairs, ratio, mean < -se))
    return out
