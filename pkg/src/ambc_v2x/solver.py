"""Two-stage Lagrangian sub-gradient power allocation.

Stage 1 picks the BS split ``alpha`` minimizing P(alpha_1 + alpha_2) under the
first-hop rate constraints; stage 2 picks each RSU's split ``beta`` and tag
reflection ``xi`` minimizing Q_m(beta_1 + beta_2) under the second-hop ones.

Both stages are instances of one "pair" problem: a two-user NOMA
transmitter with power ``Pw`` splitting coefficients ``c = (c_1, c_2)`` and an
optional reflection coefficient ``xi``. With

    S_1 = Pw c_1 (g_1 + xi G_1)
    S_2 = Pw c_2 (g_2 + xi G_2)
    D_1 = e (Pw (c_1 + c_2) + xi) + I_1 + sigma^2
    D_2 = Pw c_1 (g_2 + xi G_2) + e (Pw (c_1 + c_2) + xi) + I_2 + sigma^2

the Lagrangian is

    L = Pw (c_1 + c_2) + sum_i psi_i (th D_i - S_i)
        + lam_pow (Pw (c_1 + c_2) - cap) + lam_sum (c_1 + c_2 - 1) + ups (xi - 1)

Stage 1 is the case G = 0, I = 0, xi = 0 with ``(psi, lam_pow, lam_sum)`` =
``(psi, lambda1, lambda2)``; stage 2 uses ``(eta, mu, zeta_mul, upsilon)``.

The iteration is a projected primal-dual sub-gradient method. Primal and dual
steps are diagonally scaled so that one step size works for channel gains
spanning many decades, and the dual ascent uses an extrapolated primal point.
Every batch function accepts a leading batch axis; finished rows drop out of
the active set so that a batch costs about as much as its slowest member.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .config import NetworkConfig
from .constraints import stage1_slacks, stage2_slacks
from .rates import PowerSolution, second_hop_terms

SATURATION_TOL = 1e-9

# Row status codes of the batched driver.
_RUNNING, _CONVERGED, _MAX_ITER, _INFEASIBLE = 0, 1, 2, 3


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


_CODE_TO_STATUS = {_CONVERGED: Status.CONVERGED, _MAX_ITER: Status.MAX_ITERATIONS,
                   _INFEASIBLE: Status.INFEASIBLE}


@dataclass(frozen=True)
class SolverSettings:
    """Step schedule delta(t) = step_initial / sqrt(1 + t / step_decay_iters).

    The schedule is positive, tends to zero and has a divergent sum.
    """

    step_initial: float = 0.5
    step_decay_iters: float = 1000.0
    max_iterations: int = 10000
    convergence_tol: float = 1e-5
    infeasible_window: int = 500

    def __post_init__(self):
        if not (self.step_initial >= 0 and self.step_decay_iters > 0):
            raise ValueError("step_initial must be >= 0 and step_decay_iters > 0")
        if self.max_iterations < 1 or self.infeasible_window < 1 or not self.convergence_tol > 0:
            raise ValueError("max_iterations, infeasible_window and convergence_tol must be positive")

    def step_size(self, t: int) -> float:
        return self.step_initial / math.sqrt(1.0 + t / self.step_decay_iters)

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "SolverSettings":
        return cls(step_initial=config.step_size_initial, step_decay_iters=config.step_decay_iters,
                   max_iterations=config.max_iterations, convergence_tol=config.convergence_tol,
                   infeasible_window=config.infeasible_window)


@dataclass(frozen=True)
class DualStateP1:
    psi1: np.ndarray | float = 0.0
    psi2: np.ndarray | float = 0.0
    lambda1: np.ndarray | float = 0.0
    lambda2: np.ndarray | float = 0.0
    iteration: int = 0

    def as_array(self) -> np.ndarray:
        parts = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in
                                      (self.psi1, self.psi2, self.lambda1, self.lambda2, 0.0)))
        return np.stack(parts, axis=-1)

    @classmethod
    def from_array(cls, arr: np.ndarray, iteration: int) -> "DualStateP1":
        return cls(arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3], iteration)


@dataclass(frozen=True)
class DualStateP2:
    """Multipliers of both RSUs; every field has a trailing axis of length 2 over m."""

    eta1: np.ndarray = field(default_factory=lambda: np.zeros(2))
    eta2: np.ndarray = field(default_factory=lambda: np.zeros(2))
    mu: np.ndarray = field(default_factory=lambda: np.zeros(2))
    zeta_mul: np.ndarray = field(default_factory=lambda: np.zeros(2))
    upsilon: np.ndarray = field(default_factory=lambda: np.zeros(2))
    iteration: int = 0

    def as_array(self, m: int) -> np.ndarray:
        parts = np.broadcast_arrays(*(np.asarray(v, dtype=float)[..., m] for v in
                                      (self.eta1, self.eta2, self.mu, self.zeta_mul, self.upsilon)))
        return np.stack(parts, axis=-1)

    @classmethod
    def from_arrays(cls, per_m: list[np.ndarray], iteration: int) -> "DualStateP2":
        stacked = np.stack(per_m, axis=-2)  # (..., m, 5)
        return cls(*(stacked[..., k] for k in range(5)), iteration=iteration)


@dataclass(frozen=True)
class SolveOutcome:
    """Result of a solve. Fields are arrays for a batch, scalars for one realization."""

    solution: PowerSolution
    converged: np.ndarray | bool
    iterations_used: np.ndarray | int
    constraint_slacks: dict[str, np.ndarray]
    status: np.ndarray | Status
    stage_status: tuple = ()

    def __getitem__(self, index) -> "SolveOutcome":
        status = self.status[index]
        return SolveOutcome(
            solution=self.solution[index],
            converged=_scalar(self.converged[index]),
            iterations_used=_scalar(self.iterations_used[index]),
            constraint_slacks={k: v[index] for k, v in self.constraint_slacks.items()},
            status=Status(status) if np.ndim(status) == 0 else status,
            stage_status=tuple(Status(s[index]) if np.ndim(s[index]) == 0 else s[index]
                               for s in self.stage_status),
        )

    def __len__(self) -> int:
        return len(self.status)

    @property
    def worst_slack(self):
        return np.min(np.stack([np.asarray(v, dtype=float) for v in self.constraint_slacks.values()]), axis=0)


def _scalar(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


# ---------------------------------------------------------------------------
# Pair kernel


@dataclass(frozen=True)
class _Pair:
    power: np.ndarray  # (...,)
    cap: float
    g: np.ndarray  # (..., 2)
    gb: np.ndarray  # (..., 2)
    e: float
    noise: float
    th: float
    optimize_xi: bool

    def take(self, idx) -> "_Pair":
        return _Pair(self.power[idx], self.cap, self.g[idx], self.gb[idx], self.e, self.noise,
                     self.th, self.optimize_xi)


def _terms(pair: _Pair, coef, xi, interference):
    return second_hop_terms(pair.g, pair.gb, pair.power, coef, xi, pair.e, interference, pair.noise)


def _lagrangian(pair: _Pair, coef, xi, duals, interference):
    signal, disturbance = _terms(pair, coef, xi, interference)
    residual = pair.th * disturbance - signal
    used = coef.sum(axis=-1)
    return (pair.power * used + (duals[..., :2] * residual).sum(axis=-1)
            + duals[..., 2] * (pair.power * used - pair.cap)
            + duals[..., 3] * (used - 1.0) + duals[..., 4] * (xi - 1.0))


def _gradient(pair: _Pair, coef, xi, duals):
    """(dL/dc of shape (..., 2), dL/dxi, sum of |terms| of dL/dxi)."""
    pw, th, e = pair.power, pair.th, pair.e
    psi1, psi2, lam_pow, lam_sum, ups = (duals[..., k] for k in range(5))
    eff1 = pair.g[..., 0] + xi * pair.gb[..., 0]
    eff2 = pair.g[..., 1] + xi * pair.gb[..., 1]
    common = pw + lam_pow * pw + lam_sum
    d1 = common + psi1 * (th * e * pw - pw * eff1) + psi2 * th * (pw * eff2 + e * pw)
    d2 = common + psi1 * th * e * pw + psi2 * (th * e * pw - pw * eff2)
    c1, c2 = coef[..., 0], coef[..., 1]
    t1 = psi1 * th * e
    t2 = psi1 * pw * c1 * pair.gb[..., 0]
    t3 = psi2 * th * (pw * c1 * pair.gb[..., 1] + e)
    t4 = psi2 * pw * c2 * pair.gb[..., 1]
    dxi = t1 - t2 + t3 - t4 + ups
    scale = np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4) + np.abs(ups)
    return np.stack([d1, d2], axis=-1), dxi, scale


def _floors(pair: _Pair, interference):
    """Smallest coefficient meeting each rate constraint with no other disturbance."""
    return pair.th * (pair.noise + interference) / (pair.power[..., None] * pair.g)


def _step(pair: _Pair, coef, xi, duals, interference, delta):
    """One primal-dual update; returns (coef, xi, duals, change)."""
    metric = np.maximum(coef, _floors(pair, interference))
    grad_c, grad_xi, scale_xi = _gradient(pair, coef, xi, duals)
    pw = pair.power
    new_c = np.maximum(coef - delta * metric * grad_c / pw[..., None], 0.0)
    used = new_c.sum(axis=-1)
    over = used > 1.0
    new_c = np.where(over[..., None], new_c / np.where(over, used, 1.0)[..., None], new_c)
    if pair.optimize_xi:
        new_xi = np.clip(xi - delta * grad_xi / np.where(scale_xi > 0, scale_xi, 1.0), 0.0, 1.0)
    else:
        new_xi = xi

    bar_c = 2.0 * new_c - coef
    bar_xi = 2.0 * new_xi - xi
    signal, disturbance = _terms(pair, bar_c, bar_xi, interference)
    residual = pair.th * disturbance - signal
    g1, g2 = pair.g[..., 0], pair.g[..., 1]
    weight = g1 * metric[..., 0] + g2 * metric[..., 1]
    bar_used = bar_c.sum(axis=-1)
    new_duals = np.empty_like(duals)
    new_duals[..., :2] = np.maximum(
        duals[..., :2] + delta * residual / (pw[..., None] * pair.g ** 2 * metric), 0.0)
    new_duals[..., 2] = np.maximum(duals[..., 2] + delta * g2 * (pw * bar_used - pair.cap) / (pw * weight), 0.0)
    new_duals[..., 3] = np.maximum(duals[..., 3] + delta * pw * g2 * (bar_used - 1.0) / weight, 0.0)
    # xi is already projected into [0, 1], so this multiplier only decays.
    new_duals[..., 4] = np.maximum(duals[..., 4] + delta * (pair.noise / g2) * (new_xi - 1.0), 0.0)

    change = np.max(np.abs(new_c - coef) / metric, axis=-1)
    change = np.maximum(change, np.max(pair.g * np.abs(new_duals[..., :2] - duals[..., :2]), axis=-1))
    change = np.maximum(change, np.abs(new_xi - xi))
    return new_c, new_xi, new_duals, change


def _violation(pair: _Pair, coef, xi, interference, c_min):
    """Largest rate shortfall in bps/Hz and relative budget excess; 0 when feasible."""
    signal, disturbance = _terms(pair, coef, xi, interference)
    shortfall = np.max(c_min - np.log2(1.0 + signal / disturbance), axis=-1)
    excess = (pair.power * coef.sum(axis=-1) - pair.cap) / pair.cap
    return np.maximum(np.maximum(shortfall, excess), 0.0)


def _certified_infeasible(pair: _Pair, xi, duals):
    """True where the rate multipliers prove that no feasible point exists.

    If psi . R(c, xi) > 0 on every vertex of {c >= 0, c_1 + c_2 <= s} (and of
    xi in [0, 1] when xi is free), no point can make both residuals R_i <= 0.
    R grows with the interference, so evaluating it at zero interference makes
    the certificate valid for any other transmitter's power.
    """
    psi = duals[..., :2]
    total = psi.sum(axis=-1)
    s = np.minimum(1.0, pair.cap / pair.power)
    zero = np.zeros_like(pair.g)
    vertices = [np.zeros_like(pair.g), np.stack([s, 0.0 * s], axis=-1), np.stack([0.0 * s, s], axis=-1)]
    xis = (np.zeros_like(s), np.ones_like(s)) if pair.optimize_xi else (xi,)
    lowest = np.full(s.shape, np.inf)
    for x in xis:
        for c in vertices:
            signal, disturbance = _terms(pair, c, x, zero)
            lowest = np.minimum(lowest, (psi * (pair.th * disturbance - signal)).sum(axis=-1))
    margin = 1e-9 * pair.th * pair.noise * total
    return (total > 0) & (lowest > margin)


def _saturated(pair: _Pair, coef):
    used = coef.sum(axis=-1)
    return (used >= 1.0 - SATURATION_TOL) | (pair.power * used >= pair.cap * (1.0 - SATURATION_TOL))


def _iterate(pairs: list[_Pair], cross, radiated0, coef, xi, duals, settings: SolverSettings, c_min: float):
    """Run the batched driver over ``len(pairs)`` coupled pair problems.

    ``coef`` (B, M, 2), ``xi`` (B, M), ``duals`` (B, M, 5) are initial values.
    ``cross`` (B, M, 2) are gains from the other transmitter, whose radiated
    power starts at ``radiated0`` (B, M); ``None`` disables coupling.
    Returns final (coef, xi, duals, status, iterations).
    """
    n_pairs = len(pairs)
    batch = coef.shape[0]
    coef, xi, duals = coef.copy(), xi.copy(), duals.copy()
    status = np.zeros(batch, dtype=np.int8)
    iters = np.zeros(batch, dtype=np.int64)

    # Rows with no transmit power cannot meet a positive rate target.
    dead = np.zeros(batch, dtype=bool)
    for p in pairs:
        dead |= ~(p.power > 0)
    status[dead] = _INFEASIBLE

    idx = np.flatnonzero(~dead)
    a_pairs = [p.take(idx) for p in pairs]
    a_coef, a_xi, a_duals = coef[idx], xi[idx], duals[idx]
    a_cross = None if cross is None else cross[idx]
    a_rad = None if cross is None else radiated0[idx].copy()
    counter = np.zeros(len(idx), dtype=np.int64)
    tol = settings.convergence_tol

    def interference(m, rad):
        if a_cross is None:
            return np.zeros_like(a_coef[:, m])
        return a_cross[:, m] * rad[:, 1 - m, None]

    for t in range(1, settings.max_iterations + 1):
        if idx.size == 0:
            break
        delta = settings.step_size(t)
        change = np.zeros(idx.size)
        for m in range(n_pairs):
            c, x, d, ch = _step(a_pairs[m], a_coef[:, m], a_xi[:, m], a_duals[:, m],
                                interference(m, a_rad), delta)
            a_coef[:, m], a_xi[:, m], a_duals[:, m] = c, x, d
            if a_rad is not None:
                a_rad[:, m] = a_pairs[m].power * c.sum(axis=-1)
            change = np.maximum(change, ch)

        violation = np.zeros(idx.size)
        stuck = np.zeros(idx.size, dtype=bool)
        certified = np.zeros(idx.size, dtype=bool)
        for m in range(n_pairs):
            v = _violation(a_pairs[m], a_coef[:, m], a_xi[:, m], interference(m, a_rad), c_min)
            stuck |= (v > tol) & _saturated(a_pairs[m], a_coef[:, m])
            certified |= _certified_infeasible(a_pairs[m], a_xi[:, m], a_duals[:, m])
            violation = np.maximum(violation, v)
        counter = np.where(stuck, counter + 1, 0)

        code = np.zeros(idx.size, dtype=np.int8)
        code[np.maximum(change, violation) < tol] = _CONVERGED
        code[(code == _RUNNING) & (certified | (counter >= settings.infeasible_window))] = _INFEASIBLE
        if t == settings.max_iterations:
            code[code == _RUNNING] = _MAX_ITER
        done = code != _RUNNING
        if done.any():
            rows = idx[done]
            coef[rows], xi[rows], duals[rows] = a_coef[done], a_xi[done], a_duals[done]
            status[rows], iters[rows] = code[done], t
            keep = ~done
            idx = idx[keep]
            a_pairs = [p.take(keep) for p in a_pairs]
            a_coef, a_xi, a_duals, counter = a_coef[keep], a_xi[keep], a_duals[keep], counter[keep]
            if a_cross is not None:
                a_cross, a_rad = a_cross[keep], a_rad[keep]
    return coef, xi, duals, status, iters


# ---------------------------------------------------------------------------
# Problem construction


def _as_batch(ch: ChannelRealization) -> tuple[ChannelRealization, bool]:
    if ch.batch_shape:
        if len(ch.batch_shape) != 1:
            raise ValueError("solver expects a single realization or a 1-D batch")
        return ch, False
    return ChannelRealization(ch.g_bs_rsu[None], ch.g_rsu_veh[None], ch.g_tag_veh[None],
                              ch.g_rsu_tag[None], ch.g_cross[None], ch.sigma_eps_sq, ch.noise_w), True


def _p1_pair(ch: ChannelRealization, config: NetworkConfig) -> _Pair:
    g = np.asarray(ch.g_bs_rsu, dtype=float)
    return _Pair(power=np.broadcast_to(config.p_max_w, g.shape[:-1]).astype(float), cap=config.p_max_w,
                 g=g, gb=np.zeros_like(g), e=ch.sigma_eps_sq, noise=ch.noise_w,
                 th=config.rate_threshold, optimize_xi=False)


def _p2_pair(ch: ChannelRealization, config: NetworkConfig, m: int, q_m, optimize_xi: bool = True) -> _Pair:
    g = np.asarray(ch.g_rsu_veh[..., m, :], dtype=float)
    gb = np.asarray(ch.g_backscatter[..., m, :], dtype=float) if optimize_xi else np.zeros_like(g)
    return _Pair(power=np.broadcast_to(np.asarray(q_m, dtype=float), g.shape[:-1]).astype(float),
                 cap=config.q_max_w, g=g, gb=gb, e=ch.sigma_eps_sq, noise=ch.noise_w,
                 th=config.rate_threshold, optimize_xi=optimize_xi)


def _zero_interference(ch, m):
    return np.zeros_like(np.asarray(ch.g_rsu_veh[..., m, :], dtype=float))


# ---------------------------------------------------------------------------
# Stage 1


def lagrangian_p1(alpha, duals: DualStateP1, ch: ChannelRealization, config: NetworkConfig):
    pair = _p1_pair(ch, config)
    return _lagrangian(pair, np.asarray(alpha, dtype=float), 0.0, duals.as_array(), 0.0 * pair.g)


def grad_p1(alpha, duals: DualStateP1, ch: ChannelRealization, config: NetworkConfig) -> np.ndarray:
    """(dL1/dalpha_1, dL1/dalpha_2)."""
    grad, _, _ = _gradient(_p1_pair(ch, config), np.asarray(alpha, dtype=float), 0.0, duals.as_array())
    return grad


def step_p1(alpha, duals: DualStateP1, ch: ChannelRealization, config: NetworkConfig,
            settings: SolverSettings | None = None, delta: float | None = None):
    """One update of alpha and the stage-1 multipliers; returns (alpha, duals)."""
    settings = settings or SolverSettings.from_config(config)
    t = duals.iteration + 1
    delta = settings.step_size(t) if delta is None else delta
    pair = _p1_pair(ch, config)
    new_a, _, new_d, _ = _step(pair, np.asarray(alpha, dtype=float), 0.0, duals.as_array(), 0.0 * pair.g, delta)
    return new_a, DualStateP1.from_array(new_d, t)


def _run_p1(ch: ChannelRealization, config: NetworkConfig, settings: SolverSettings):
    pair = _p1_pair(ch, config)
    n = pair.g.shape[0]
    coef, _, duals, status, iters = _iterate(
        [pair], None, None, np.full((n, 1, 2), 0.5), np.zeros((n, 1)), np.zeros((n, 1, 5)),
        settings, config.c_min)
    return coef[:, 0], duals[:, 0], status, iters


def _codes_to_status(codes: np.ndarray) -> np.ndarray:
    return np.array([_CODE_TO_STATUS[int(c)].value for c in codes], dtype=object)


def _finish(outcome: SolveOutcome, single: bool) -> SolveOutcome:
    return outcome[0] if single else outcome


def solve_p1(ch: ChannelRealization, config: NetworkConfig, settings: SolverSettings | None = None) -> SolveOutcome:
    """Minimize the BS power P(alpha_1 + alpha_2) with P fixed at the budget."""
    settings = settings or SolverSettings.from_config(config)
    batch, single = _as_batch(ch)
    alpha, _, codes, iters = _run_p1(batch, config, settings)
    n = alpha.shape[0]
    sol = PowerSolution(alpha=alpha, beta=np.zeros((n, 2, 2)), xi=np.zeros((n, 2)),
                        p_bs_w=np.full(n, config.p_max_w), q_rsu_w=np.zeros((n, 2)))
    status = _codes_to_status(codes)
    out = SolveOutcome(solution=sol, converged=codes == _CONVERGED, iterations_used=iters,
                       constraint_slacks=stage1_slacks(batch, sol, config), status=status,
                       stage_status=(status,))
    return _finish(out, single)


# ---------------------------------------------------------------------------
# Stage 2


def lagrangian_p2(beta_m, xi_m, duals: DualStateP2, ch: ChannelRealization, config: NetworkConfig,
                  m: int, q_rsu_w, interference=None):
    """L2 restricted to RSU ``m`` (the problem separates over m at fixed interference)."""
    q_m = np.asarray(q_rsu_w, dtype=float)[..., m]
    pair = _p2_pair(ch, config, m, q_m)
    interf = _zero_interference(ch, m) if interference is None else np.asarray(interference, dtype=float)
    return _lagrangian(pair, np.asarray(beta_m, dtype=float), np.asarray(xi_m, dtype=float),
                       duals.as_array(m), interf)


def grad_p2(beta_m, xi_m, duals: DualStateP2, ch: ChannelRealization, config: NetworkConfig,
            m: int, q_rsu_w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(dL2/dbeta_{1,m}, dL2/dbeta_{2,m}, dL2/dxi_m)."""
    q_m = np.asarray(q_rsu_w, dtype=float)[..., m]
    grad_c, grad_xi, _ = _gradient(_p2_pair(ch, config, m, q_m), np.asarray(beta_m, dtype=float),
                                   np.asarray(xi_m, dtype=float), duals.as_array(m))
    return grad_c[..., 0], grad_c[..., 1], grad_xi


def step_p2(beta, xi, duals: DualStateP2, ch: ChannelRealization, config: NetworkConfig,
            q_rsu_w, settings: SolverSettings | None = None, optimize_xi: bool = True,
            delta: float | None = None):
    """One Gauss-Seidel pass over both RSUs; returns (beta, xi, duals).

    Inter-RSU interference is recomputed from the current radiated power of the
    other RSU before each RSU's update.
    """
    settings = settings or SolverSettings.from_config(config)
    t = duals.iteration + 1
    delta = settings.step_size(t) if delta is None else delta
    beta = np.array(beta, dtype=float)
    xi = np.array(xi, dtype=float)
    q = np.asarray(q_rsu_w, dtype=float)
    per_m = []
    for m in range(2):
        pair = _p2_pair(ch, config, m, q[..., m], optimize_xi)
        other = 1 - m
        interf = ch.g_cross[..., m, :] * (q[..., other] * beta[..., other, :].sum(axis=-1))[..., None]
        c, x, d, _ = _step(pair, beta[..., m, :], xi[..., m], duals.as_array(m), interf, delta)
        beta[..., m, :], xi[..., m] = c, x
        per_m.append(d)
    return beta, xi, DualStateP2.from_arrays(per_m, t)


def _run_p2(ch: ChannelRealization, config: NetworkConfig, settings: SolverSettings, q, optimize_xi: bool):
    n = q.shape[0]
    pairs = [_p2_pair(ch, config, m, q[:, m], optimize_xi) for m in range(2)]
    xi0 = np.zeros((n, 2))
    radiated0 = np.full((n, 2), config.q_max_w / 2.0)
    return _iterate(pairs, np.asarray(ch.g_cross, dtype=float), radiated0, np.full((n, 2, 2), 0.5), xi0,
                    np.zeros((n, 2, 5)), settings, config.c_min)


def solve_p2(ch: ChannelRealization, config: NetworkConfig, settings: SolverSettings | None = None,
             q_rsu_w=None, optimize_xi: bool = True, alpha=None) -> SolveOutcome:
    """Minimize each RSU's power Q_m(beta_{1,m} + beta_{2,m}) jointly over both RSUs.

    ``q_rsu_w`` defaults to Q_max for both RSUs. ``optimize_xi=False`` pins the
    tag reflection at 0 (pure NOMA). ``alpha`` is only carried into the solution.
    """
    settings = settings or SolverSettings.from_config(config)
    batch, single = _as_batch(ch)
    n = batch.g_bs_rsu.shape[0]
    q = np.full((n, 2), config.q_max_w) if q_rsu_w is None else np.broadcast_to(
        np.asarray(q_rsu_w, dtype=float), (n, 2)).copy()
    beta, xi, _, codes, iters = _run_p2(batch, config, settings, q, optimize_xi)
    alpha = np.zeros((n, 2)) if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=float), (n, 2))
    sol = PowerSolution(alpha=alpha, beta=beta, xi=xi, p_bs_w=np.full(n, config.p_max_w), q_rsu_w=q)
    status = _codes_to_status(codes)
    out = SolveOutcome(solution=sol, converged=codes == _CONVERGED, iterations_used=iters,
                       constraint_slacks=stage2_slacks(batch, sol, config), status=status,
                       stage_status=(status,))
    return _finish(out, single)


# ---------------------------------------------------------------------------
# Both stages

MODES = ("ambc", "pure_noma")


def rsu_powers(alpha, config: NetworkConfig):
    """Q_m = P alpha_m capped at Q_max."""
    return np.minimum(config.p_max_w * np.asarray(alpha, dtype=float), config.q_max_w)


def _merge(code1: np.ndarray, code2: np.ndarray) -> np.ndarray:
    merged = np.full(code1.shape, _CONVERGED, dtype=np.int8)
    for code in (_MAX_ITER, _INFEASIBLE):
        merged[(code1 == code) | (code2 == code)] = code
    return merged


def solve_algorithm1(ch: ChannelRealization, config: NetworkConfig, settings: SolverSettings | None = None,
                     mode: str = "ambc") -> SolveOutcome:
    """Stage 1, then stage 2 with Q_m = min(P alpha_m, Q_max).

    Stage 2 is skipped (beta = xi = 0) where stage 1 is infeasible. The merged
    status is infeasible if either stage is, else max_iterations if either
    stage ran out of iterations, else converged.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    settings = settings or SolverSettings.from_config(config)
    batch, single = _as_batch(ch)
    alpha, _, code1, it1 = _run_p1(batch, config, settings)
    n = alpha.shape[0]
    q = rsu_powers(alpha, config)

    beta, xi = np.zeros((n, 2, 2)), np.zeros((n, 2))
    code2 = np.full(n, _INFEASIBLE, dtype=np.int8)
    it2 = np.zeros(n, dtype=np.int64)
    run = np.flatnonzero(code1 != _INFEASIBLE)
    if run.size:
        b, x, _, c2, i2 = _run_p2(batch[run], config, settings, q[run], mode == "ambc")
        beta[run], xi[run], code2[run], it2[run] = b, x, c2, i2

    sol = PowerSolution(alpha=alpha, beta=beta, xi=xi, p_bs_w=np.full(n, config.p_max_w), q_rsu_w=q)
    codes = _merge(code1, code2)
    slacks = stage1_slacks(batch, sol, config)
    slacks.update(stage2_slacks(batch, sol, config))
    out = SolveOutcome(solution=sol, converged=codes == _CONVERGED, iterations_used=it1 + it2,
                       constraint_slacks=slacks, status=_codes_to_status(codes),
                       stage_status=(_codes_to_status(code1), _codes_to_status(code2)))
    return _finish(out, single)
