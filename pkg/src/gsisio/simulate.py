"""Ground-truth simulation and full observer runs over scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, build_model
from .interval_core import IntervalVector, contains, width_norm
from .mixed_monotone import lipschitz_like_constant
from .observer import ObserverPipeline, SystemModel
from .stability import (
    StabilityReport,
    WidthBounds,
    compute_T_matrices,
    stability_report,
    width_bound_sequences,
)

__all__ = [
    "MonteCarloSummary",
    "RunTrace",
    "TruthTrajectory",
    "error_norm",
    "monte_carlo",
    "run_observer",
    "simulate_ground_truth",
]


@dataclass(frozen=True)
class TruthTrajectory:
    """Sampled system run over steps 0 .. horizon.

    x and y have horizon + 1 rows; d, u and v likewise (the terminal
    measurement needs them); w has horizon rows.
    """

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    seed: int

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1


def simulate_ground_truth(
    cfg: ScenarioConfig, seed: int | None = None, model: SystemModel | None = None
) -> TruthTrajectory:
    """Draw one trajectory: x0 and the noises uniform over their boxes."""
    if model is None:
        model = build_model(cfg)
    horizon = cfg.horizon
    used_seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(used_seed)
    x0 = rng.uniform(model.x0_bounds.lower, model.x0_bounds.upper)
    v = rng.uniform(
        model.v_bounds.lower, model.v_bounds.upper, size=(horizon + 1, cfg.l)
    )
    w = rng.uniform(model.w_bounds.lower, model.w_bounds.upper, size=(horizon, cfg.n))

    u_of = cfg.u_signal()
    d_of = cfg.d_signal()
    u = np.array([u_of(k) for k in range(horizon + 1)])
    d = np.array([d_of(k) for k in range(horizon + 1)])

    x = np.empty((horizon + 1, cfg.n))
    y = np.empty((horizon + 1, cfg.l))
    x[0] = x0
    for k in range(horizon + 1):
        y[k] = model.g(x[k]) + model.D @ u[k] + model.H @ d[k] + v[k]
        if k < horizon:
            x[k + 1] = model.f(x[k]) + model.B @ u[k] + model.G @ d[k] + w[k]
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise FloatingPointError("ground-truth trajectory diverged")
    return TruthTrajectory(x=x, y=y, d=d, u=u, w=w, v=v, seed=used_seed)


def error_norm(box: IntervalVector, point: np.ndarray) -> float:
    """max(||point - lower||, ||upper - point||), the framer error norm."""
    point = np.asarray(point, dtype=float).reshape(-1)
    lo = float(np.linalg.norm(point - box.lower))
    hi = float(np.linalg.norm(box.upper - point))
    return max(lo, hi)


@dataclass(frozen=True)
class RunTrace:
    """One observer run against one truth trajectory.

    Row k of the state arrays refers to time k (0 .. horizon). Row k of
    the input arrays refers to the delayed estimate of d_{k-1}, so row
    0 is NaN. partial_lower/upper hold the estimable current-input
    component bounds (V1^T d_k) for every k.
    """

    truth: TruthTrajectory
    x_lower: np.ndarray
    x_upper: np.ndarray
    d_lower: np.ndarray
    d_upper: np.ndarray
    partial_lower: np.ndarray
    partial_upper: np.ndarray
    v1: np.ndarray
    width_x: np.ndarray
    width_d: np.ndarray
    delta_x: np.ndarray
    delta_d: np.ndarray
    err_x: np.ndarray
    err_d: np.ndarray
    widths: WidthBounds = field(repr=False)
    report: StabilityReport = field(repr=False)

    @property
    def horizon(self) -> int:
        return self.x_lower.shape[0] - 1

    def x_box(self, k: int) -> IntervalVector:
        return IntervalVector(self.x_lower[k], self.x_upper[k])

    def d_box(self, k: int) -> IntervalVector:
        if k < 1:
            raise IndexError("no delayed input estimate at step 0")
        return IntervalVector(self.d_lower[k], self.d_upper[k])

    def partial_box(self, k: int) -> IntervalVector:
        return IntervalVector(self.partial_lower[k], self.partial_upper[k])


def run_observer(
    cfg: ScenarioConfig,
    truth: TruthTrajectory | None = None,
    model: SystemModel | None = None,
) -> RunTrace:
    """Run the interval observer along a truth trajectory.

    Raises ExistenceConditionError before touching any data when the
    gain existence condition fails for the scenario's G and H.
    """
    if model is None:
        model = build_model(cfg)
    pipeline = ObserverPipeline(model, mode=cfg.bounding)
    pipeline.require_existence()
    if truth is None:
        truth = simulate_ground_truth(cfg, model=model)
    horizon = truth.horizon

    n, p = cfg.n, cfg.p
    p_h = pipeline.feedthrough.rank
    x_lower = np.empty((horizon + 1, n))
    x_upper = np.empty((horizon + 1, n))
    d_lower = np.full((horizon + 1, p), np.nan)
    d_upper = np.full((horizon + 1, p), np.nan)
    partial_lower = np.empty((horizon + 1, p_h))
    partial_upper = np.empty((horizon + 1, p_h))
    width_x = np.empty(horizon + 1)
    width_d = np.full(horizon + 1, np.nan)
    err_x = np.empty(horizon + 1)
    err_d = np.full(horizon + 1, np.nan)

    state = pipeline.initial_state()
    x_lower[0] = state.x_box.lower
    x_upper[0] = state.x_box.upper
    width_x[0] = width_norm(state.x_box)
    err_x[0] = error_norm(state.x_box, truth.x[0])
    part0 = pipeline.current_input_component(state.x_box, truth.y[0], truth.u[0])
    partial_lower[0] = part0.lower
    partial_upper[0] = part0.upper

    for k in range(1, horizon + 1):
        state = pipeline.step(state, truth.y[k - 1], truth.u[k - 1])
        box = state.x_box
        x_lower[k] = box.lower
        x_upper[k] = box.upper
        width_x[k] = width_norm(box)
        err_x[k] = error_norm(box, truth.x[k])
        dbox = state.input_box
        d_lower[k] = dbox.lower
        d_upper[k] = dbox.upper
        width_d[k] = width_norm(dbox)
        err_d[k] = error_norm(dbox, truth.d[k - 1])
        part = pipeline.current_input_component(box, truth.y[k], truth.u[k])
        partial_lower[k] = part.lower
        partial_upper[k] = part.upper

    l_fd = lipschitz_like_constant(pipeline.dec_f)
    l_gd = lipschitz_like_constant(pipeline.dec_g)
    t_f, t_g = compute_T_matrices(pipeline.gains)
    widths = width_bound_sequences(
        pipeline.gains,
        t_f,
        t_g,
        l_fd,
        l_gd,
        model.w_bounds,
        model.v_bounds,
        delta0=width_norm(model.x0_bounds),
        steps=horizon,
    )
    report = stability_report(pipeline.gains, l_fd, l_gd)
    return RunTrace(
        truth=truth,
        x_lower=x_lower,
        x_upper=x_upper,
        d_lower=d_lower,
        d_upper=d_upper,
        partial_lower=partial_lower,
        partial_upper=partial_upper,
        v1=pipeline.feedthrough.v1,
        width_x=width_x,
        width_d=width_d,
        delta_x=widths.delta_x_closed.copy(),
        delta_d=widths.delta_d.copy(),
        err_x=err_x,
        err_d=err_d,
        widths=widths,
        report=report,
    )


@dataclass(frozen=True)
class MonteCarloSummary:
    trials: int
    horizon: int
    state_violations: int
    input_violations: int
    partial_violations: int
    domination_violations: int
    max_state_width: float
    max_input_width: float
    final_state_width_mean: float
    cal_l: float

    def lines(self) -> list[str]:
        return [
            f"trials = {self.trials}",
            f"horizon = {self.horizon}",
            f"state containment violations = {self.state_violations}",
            f"input containment violations = {self.input_violations}",
            f"partial input violations = {self.partial_violations}",
            f"width domination violations = {self.domination_violations}",
            f"max state width = {self.max_state_width:.12g}",
            f"max input width = {self.max_input_width:.12g}",
            f"mean final state width = {self.final_state_width_mean:.12g}",
            f"contraction constant = {self.cal_l:.12g}",
        ]


def monte_carlo(
    cfg: ScenarioConfig,
    trials: int,
    base_seed: int | None = None,
    tol: float = 1e-9,
) -> MonteCarloSummary:
    """Run repeated seeded trials and count guarantee violations.

    Trial t uses seed base_seed + t. Containment is checked for the
    true state in every state box, the true delayed input in every
    input box, and the projected true current input in every partial
    box; domination compares error, width and delta at every step.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seed0 = cfg.seed if base_seed is None else base_seed
    model = build_model(cfg)
    state_bad = input_bad = partial_bad = dom_bad = 0
    max_wx = max_wd = 0.0
    finals = []
    cal_l = float("nan")
    for t in range(trials):
        truth = simulate_ground_truth(cfg, seed=seed0 + t, model=model)
        trace = run_observer(cfg, truth=truth, model=model)
        cal_l = trace.widths.cal_l
        horizon = trace.horizon
        for k in range(horizon + 1):
            if not contains(trace.x_box(k), truth.x[k], tol):
                state_bad += 1
            if k >= 1 and not contains(trace.d_box(k), truth.d[k - 1], tol):
                input_bad += 1
            proj = trace.v1.T @ truth.d[k]
            if not contains(trace.partial_box(k), proj, tol):
                partial_bad += 1
            if not (
                trace.err_x[k] <= trace.width_x[k] + tol
                and trace.width_x[k] <= trace.delta_x[k] + tol
            ):
                dom_bad += 1
            if k >= 1 and not (
                trace.err_d[k] <= trace.width_d[k] + tol
                and trace.width_d[k] <= trace.delta_d[k] + tol
            ):
                dom_bad += 1
        max_wx = max(max_wx, float(np.max(trace.width_x)))
        max_wd = max(max_wd, float(np.nanmax(trace.width_d)))
        finals.append(trace.width_x[-1])
    return MonteCarloSummary(
        trials=trials,
        horizon=cfg.horizon,
        state_violations=state_bad,
        input_violations=input_bad,
        partial_violations=partial_bad,
        domination_violations=dom_bad,
        max_state_width=max_wx,
        max_input_width=max_wd,
        final_state_width_mean=float(np.mean(finals)),
        cal_l=cal_l,
    )
