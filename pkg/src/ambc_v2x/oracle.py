"""Exhaustive grid-search references for both stages and a slack report.

Feasibility is judged with the same slack functions the solver reports, so a
point returned by an oracle has every slack >= 0 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .config import NetworkConfig
from .constraints import stage1_slacks, stage2_rsu_slacks, stage2_slacks
from .rates import PowerSolution, second_hop_terms


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over ``bounds`` on every power-splitting axis.

    ``resolution`` is the step as a fraction of the axis width (the width is 1
    for the default bounds). ``xi_bounds`` is the reflection axis of the
    stage-2 search; it uses the same relative step.

    With ``refine > 0`` the search is repeated ``refine`` times on the box
    [0, s]^2, where s is the coefficient sum of the best point so far. Any
    cheaper point has a coefficient sum below s, so each level is still an
    exhaustive search, only with a finer absolute step.
    """

    resolution: float = 1e-3
    bounds: tuple[float, float] = (0.0, 1.0)
    xi_bounds: tuple[float, float] = (0.0, 1.0)
    refine: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        for lo, hi in (self.bounds, self.xi_bounds):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("bounds must satisfy 0 <= lo < hi <= 1")
        if self.refine < 0:
            raise ValueError("refine must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(np.floor(1.0 / self.resolution + 1e-9))

    def step(self, bounds=None) -> float:
        lo, hi = self.bounds if bounds is None else bounds
        return (hi - lo) * self.resolution

    def axis(self, bounds=None) -> np.ndarray:
        """Grid values lo + k * step, k = 0 .. n_steps."""
        lo, hi = self.bounds if bounds is None else bounds
        return np.minimum(lo + self.step((lo, hi)) * np.arange(self.n_steps + 1), hi)


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    coef: np.ndarray | None  # (2,) alpha, or (beta_1, beta_2, xi)
    power_w: float  # inf when infeasible
    step: float = float("nan")  # absolute coefficient step of the final search level

    def __bool__(self) -> bool:
        return self.feasible


INFEASIBLE = OracleResult(False, None, float("inf"))


def _simplex_pairs(axis: np.ndarray):
    """Index pairs (k1, k2) with axis[k1] + axis[k2] <= 1."""
    k1, k2 = np.meshgrid(np.arange(axis.size), np.arange(axis.size), indexing="ij")
    keep = axis[k1] + axis[k2] <= 1.0 + 1e-12
    return k1[keep], k2[keep]


def _all_nonneg(slacks: dict[str, np.ndarray]) -> np.ndarray:
    ok = None
    for value in slacks.values():
        ok = value >= 0 if ok is None else ok & (value >= 0)
    return ok


def _levels(spec: GridSpec, search):
    """Run ``search(bounds)`` on the initial box and on each refinement."""
    bounds = spec.bounds
    best = search(bounds)
    for _ in range(spec.refine):
        if not best.feasible:
            break
        s = float(best.coef[0] + best.coef[1])
        if s <= 0.0 or s >= bounds[1]:
            break
        bounds = (0.0, s)
        finer = search(bounds)
        # The previous best lies on no finer grid in general; keep the cheaper one.
        if finer.feasible and finer.power_w <= best.power_w:
            best = finer
        else:
            best = OracleResult(True, best.coef, best.power_w, spec.step(bounds))
    return best


def grid_search_p1(ch: ChannelRealization, config: NetworkConfig, spec: GridSpec | None = None) -> OracleResult:
    """Feasible grid point minimizing P(alpha_1 + alpha_2).

    Ties go to the smaller alpha_1.
    """
    spec = spec or GridSpec(1e-3)
    if ch.batch_shape:
        raise ValueError("grid_search_p1 takes a single realization")

    def search(bounds):
        axis = spec.axis(bounds)
        k1, k2 = _simplex_pairs(axis)
        alpha = np.stack([axis[k1], axis[k2]], axis=-1)
        n = alpha.shape[0]
        sol = PowerSolution(alpha=alpha, beta=np.zeros((n, 2, 2)), xi=np.zeros((n, 2)),
                            p_bs_w=config.p_max_w, q_rsu_w=np.zeros((n, 2)))
        ok = _all_nonneg(stage1_slacks(ch, sol, config))
        if not ok.any():
            return INFEASIBLE
        cand = np.flatnonzero(ok)
        # Integer keys: the index sum orders power exactly, then alpha_1.
        order = np.lexsort((k1[cand], k1[cand] + k2[cand]))
        best = alpha[cand[order[0]]]
        return OracleResult(True, best, float(config.p_max_w * best.sum()), spec.step(bounds))

    return _levels(spec, search)


def grid_search_p2(ch: ChannelRealization, config: NetworkConfig, spec: GridSpec | None = None,
                   q_rsu_w=None, interference=None, optimize_xi: bool = True) -> list[OracleResult]:
    """Per-RSU feasible grid point minimizing Q_m(beta_1 + beta_2).

    ``interference`` (2, 2) freezes the inter-RSU terms at the two vehicles of
    each RSU (zero by default). With ``optimize_xi=False`` the search is 2-D at
    xi = 0. Ties go to the lexicographically smallest (beta_1, beta_2, xi).
    """
    spec = spec or GridSpec(2e-2)
    if ch.batch_shape:
        raise ValueError("grid_search_p2 takes a single realization")
    q = np.full(2, config.q_max_w) if q_rsu_w is None else np.asarray(q_rsu_w, dtype=float)
    interf = np.zeros((2, 2)) if interference is None else np.asarray(interference, dtype=float)
    xi_axis = spec.axis(spec.xi_bounds) if optimize_xi else np.array([0.0])
    gb = ch.g_backscatter if optimize_xi else np.zeros((2, 2))

    def search_m(m):
        def search(bounds):
            axis = spec.axis(bounds)
            k1, k2 = _simplex_pairs(axis)
            # Cartesian product of simplex pairs and xi values.
            j = np.repeat(np.arange(k1.size), xi_axis.size)
            kxi = np.tile(np.arange(xi_axis.size), k1.size)
            beta = np.stack([axis[k1[j]], axis[k2[j]]], axis=-1)
            xi = xi_axis[kxi]
            signal, disturbance = second_hop_terms(ch.g_rsu_veh[m], gb[m], q[m], beta, xi,
                                                   ch.sigma_eps_sq, interf[m], ch.noise_w)
            ok = _all_nonneg(stage2_rsu_slacks(signal, disturbance, q[m], beta, xi, config, ""))
            if not ok.any():
                return INFEASIBLE
            cand = np.flatnonzero(ok)
            kb1, kb2, kxx = k1[j[cand]], k2[j[cand]], kxi[cand]
            order = np.lexsort((kxx, kb2, kb1, kb1 + kb2))
            c = cand[order[0]]
            coef = np.array([beta[c, 0], beta[c, 1], xi[c]])
            return OracleResult(True, coef, float(q[m] * (coef[0] + coef[1])), spec.step(bounds))
        return _levels(spec, search)

    return [search_m(m) for m in range(2)]


@dataclass(frozen=True)
class SlackReport:
    slacks: dict[str, np.ndarray]
    tol: float
    ok: np.ndarray | bool = field(init=False)
    worst_name: str | np.ndarray = field(init=False)
    worst_value: float | np.ndarray = field(init=False)

    def __post_init__(self):
        names = list(self.slacks)
        values = np.stack([np.asarray(self.slacks[k], dtype=float) for k in names])
        arg = np.argmin(values, axis=0)
        worst = np.min(values, axis=0)
        object.__setattr__(self, "worst_value", worst if worst.ndim else float(worst))
        object.__setattr__(self, "worst_name", np.asarray(names)[arg] if np.ndim(arg) else names[int(arg)])
        object.__setattr__(self, "ok", worst >= -self.tol if worst.ndim else bool(worst >= -self.tol))


def feasibility_check(sol: PowerSolution, ch: ChannelRealization, config: NetworkConfig,
                      tol: float | None = None, stages=(1, 2)) -> SlackReport:
    """Signed slacks of every first- and second-hop constraint.

    Inter-RSU interference follows from the solution's own radiated powers.
    """
    tol = config.convergence_tol if tol is None else tol
    slacks: dict[str, np.ndarray] = {}
    if 1 in stages:
        slacks.update(stage1_slacks(ch, sol, config))
    if 2 in stages:
        slacks.update(stage2_slacks(ch, sol, config))
    return SlackReport(slacks, tol)


@dataclass(frozen=True)
class VerifyRow:
    """One solver-vs-oracle comparison; ``m`` is None for the BS stage."""

    index: int
    stage: int
    m: int | None
    solver_status: str
    solver_power_w: float
    oracle_feasible: bool
    oracle_power_w: float
    allowance_w: float
    ok: bool


def verify_suite(config: NetworkConfig, indices, p1_spec: GridSpec | None = None,
                 p2_spec: GridSpec | None = None, mode: str = "ambc", stages=(1, 2)) -> list[VerifyRow]:
    """Compare the two-stage solver with both grid oracles on realizations ``indices``.

    A converged stage must be matched by a feasible oracle point whose power is
    within max(rel * oracle, 2 * resolution * budget), with rel = 2% for the
    BS stage and 3% per RSU. An infeasible stage must be matched by an
    infeasible oracle (for stage 2: at least one RSU). Any other solver status
    fails the row. Stage-2 oracles freeze the inter-RSU interference at the
    solver's final powers. ``stages`` selects which oracles run.
    """
    from .channel import generate_batch
    from .rates import inter_rsu_interference
    from .solver import Status, solve_algorithm1

    p1_spec = p1_spec or GridSpec(1e-3)
    p2_spec = p2_spec or GridSpec(2e-2)
    rows = []
    for index in indices:
        ch = generate_batch(config, 1, start=int(index))
        out = solve_algorithm1(ch, config, mode=mode)
        sol = out.solution[0]
        s1, s2 = Status(out.stage_status[0][0]), Status(out.stage_status[1][0])
        ch = ch[0]

        if 1 in stages:
            ref = grid_search_p1(ch, config, p1_spec)
            power = float(sol.bs_power_w)
            allowance = max(0.02 * ref.power_w, 2 * ref.step * config.p_max_w) if ref else 0.0
            if s1 is Status.CONVERGED:
                ok = ref.feasible and abs(power - ref.power_w) <= allowance
            else:
                ok = s1 is Status.INFEASIBLE and not ref.feasible
            rows.append(VerifyRow(int(index), 1, None, s1.value, power, ref.feasible, ref.power_w,
                                  float(allowance), bool(ok)))
        if s1 is Status.INFEASIBLE or 2 not in stages:
            continue

        interf = np.stack([inter_rsu_interference(ch, sol, m) for m in range(2)])
        refs = grid_search_p2(ch, config, p2_spec, sol.q_rsu_w, interf, optimize_xi=(mode == "ambc"))
        any_infeasible = not all(r.feasible for r in refs)
        for m, r in enumerate(refs):
            power = float(sol.rsu_power_w[m])
            q_m = float(sol.q_rsu_w[m])
            allowance = max(0.03 * r.power_w, 2 * r.step * q_m) if r else 0.0
            if s2 is Status.CONVERGED:
                ok = r.feasible and abs(power - r.power_w) <= allowance
            else:
                ok = s2 is Status.INFEASIBLE and any_infeasible
            rows.append(VerifyRow(int(index), 2, m, s2.value, power, r.feasible, r.power_w, float(allowance),
                                  bool(ok)))
    return rows
