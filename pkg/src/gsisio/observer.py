"""Simultaneous input and state interval observer.

For the discrete-time system

    x_{k+1} = f(x_k) + B u_k + G d_k + w_k
    y_k     = g(x_k) + D u_k + H d_k + v_k

with unknown input d, bounded noises w and v, and Lipschitz
mixed-monotone f and g, the observer propagates a state box and an
unknown-input box from the previous measurement. The gain family is
built from a Moore-Penrose left inverse of the stacked matrix [G; H],
which must have full column rank.

The propagation step is only well posed when the matrix
A_x = [[I - K1, L1], [L1, I - K1]] is invertible, equivalently when
both I - K1 - L1 and I - K1 + L1 have full rank. When H is
rank-deficient and G does not annihilate the null space of H this
fails structurally: for d* in null(H), G J1 (G d*) = G d*, so
K1 - L1 = G J1 has a unit eigenvalue for every left inverse J and
I - K1 + L1 is exactly singular. Such systems are refused with
ExistenceConditionError rather than propagated through a least-squares
solve, which would silently produce inverted (unsound) bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interval_core import IntervalVector, linear_map_bounds
from .matrix_kit import as_matrix, numeric_rank, pinv, sign_split, svd
from .mixed_monotone import (
    DecompositionFunction,
    NonlinearField,
    build_decomposition,
    corollary_bounds,
    embed_bounds,
    eval_decomposition,
)
from .affine_abstraction import interval_abstraction, sigma_for_lipschitz

__all__ = [
    "ExistenceConditionError",
    "FeedthroughSvd",
    "FramerOrderError",
    "FramerState",
    "ObserverGains",
    "ObserverPipeline",
    "SystemModel",
    "check_existence",
    "decompose_feedthrough",
    "estimate_current_input_component",
    "estimate_input",
    "field_bounds",
    "observer_step",
    "propagate_state",
    "synthesize_gains",
]


class ExistenceConditionError(RuntimeError):
    """The observer existence condition (invertibility of A_x) fails."""


class FramerOrderError(RuntimeError):
    """A propagated framer pair came out inverted; bounds are unusable."""


@dataclass(frozen=True)
class SystemModel:
    """System data. Dimensions: x in R^n, u in R^m, d in R^p, y in R^l."""

    f: NonlinearField
    g: NonlinearField
    B: np.ndarray
    D: np.ndarray
    G: np.ndarray
    H: np.ndarray
    w_bounds: IntervalVector
    v_bounds: IntervalVector
    x0_bounds: IntervalVector

    def __post_init__(self):
        n = self.f.dimension_in
        if self.f.dimension_out != n:
            raise ValueError("f must map R^n to R^n")
        if self.g.dimension_in != n:
            raise ValueError("g must take the state as input")
        l = self.g.dimension_out
        B = as_matrix(self.B, "B")
        D = as_matrix(self.D, "D")
        G = as_matrix(self.G, "G")
        H = as_matrix(self.H, "H")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows")
        if G.shape[0] != n:
            raise ValueError(f"G must have {n} rows")
        if H.shape[0] != l:
            raise ValueError(f"H must have {l} rows")
        if D.shape != (l, B.shape[1]):
            raise ValueError(f"D must be {l} x {B.shape[1]}")
        if G.shape[1] != H.shape[1]:
            raise ValueError("G and H must agree on the input dimension p")
        if self.w_bounds.dim != n or self.x0_bounds.dim != n:
            raise ValueError("w_bounds and x0_bounds must have dimension n")
        if self.v_bounds.dim != l:
            raise ValueError("v_bounds must have dimension l")
        stacked = np.vstack([G, H])
        if numeric_rank(stacked) < G.shape[1]:
            raise ValueError(
                "[G; H] is column rank deficient; the unknown input is not "
                "left-invertible and no gain family exists"
            )
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)

    @property
    def n(self) -> int:
        return self.f.dimension_in

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.G.shape[1]

    @property
    def l(self) -> int:
        return self.g.dimension_out

    def stacked_output_matrix(self) -> np.ndarray:
        return np.vstack([self.G, self.H])


@dataclass(frozen=True)
class ObserverGains:
    """Gain matrices and the existence diagnosis for one system."""

    j: np.ndarray          # p x (n + l), left inverse of [G; H]
    k_gain: np.ndarray     # n x (n + l)
    l_gain: np.ndarray     # n x (n + l)
    f_input: np.ndarray    # n x m, feeds the known input into the update
    a_x: np.ndarray        # 2n x 2n propagation matrix
    rank_minus: int        # numeric rank of I - K1 - L1
    rank_plus: int         # numeric rank of I - K1 + L1
    n: int
    l: int

    @property
    def k1(self) -> np.ndarray:
        return self.k_gain[:, : self.n]

    @property
    def k2(self) -> np.ndarray:
        return self.k_gain[:, self.n :]

    @property
    def l1(self) -> np.ndarray:
        return self.l_gain[:, : self.n]

    @property
    def l2(self) -> np.ndarray:
        return self.l_gain[:, self.n :]

    @property
    def existence_ok(self) -> bool:
        return self.rank_minus == self.n and self.rank_plus == self.n

    def block_matrices(self) -> dict[str, np.ndarray]:
        """The stacked update matrices, mainly for algebra checks.

        With E = I + L1 - K1 acting on f terms, the doubled system
        reads A_x [xu; xl] = A_f [fu; fl] + A_g [gu; gl] + A_u u
        + A_y y + A_w [wu; wl] + A_v [vu; vl].
        """
        i_n = np.eye(self.n)
        k1, k2, l1, l2 = self.k1, self.k2, self.l1, self.l2
        a_f = np.block([[i_n + l1, -k1], [-k1, i_n + l1]])
        a_g = np.block([[l2, -k2], [-k2, l2]])
        a_u = np.vstack([self.f_input, self.f_input])
        a_y = np.vstack([k2 - l2, k2 - l2])
        return {
            "a_x": self.a_x,
            "a_f": a_f,
            "a_g": a_g,
            "a_w": a_f,
            "a_v": a_g,
            "a_u": a_u,
            "a_y": a_y,
        }


def synthesize_gains(model: SystemModel) -> ObserverGains:
    """Build the gain family from the left inverse J = pinv([G; H])."""
    n, l = model.n, model.l
    stacked = model.stacked_output_matrix()
    j = pinv(stacked)
    jp, jm = sign_split(j)
    gp, gm = sign_split(model.G)
    k_gain = gm @ jm + gp @ jp
    l_gain = gm @ jp + gp @ jm
    k1, k2 = k_gain[:, :n], k_gain[:, n:]
    l1, l2 = l_gain[:, :n], l_gain[:, n:]
    i_n = np.eye(n)
    f_input = (i_n + l1 - k1) @ model.B + (l2 - k2) @ model.D
    a_x = np.block([[i_n - k1, l1], [l1, i_n - k1]])
    return ObserverGains(
        j=j,
        k_gain=k_gain,
        l_gain=l_gain,
        f_input=f_input,
        a_x=a_x,
        rank_minus=numeric_rank(i_n - k1 - l1),
        rank_plus=numeric_rank(i_n - k1 + l1),
        n=n,
        l=l,
    )


def check_existence(gains: ObserverGains) -> bool:
    """True when both similarity blocks of A_x have full rank n.

    A_x is similar to diag(I - K1 + L1, I - K1 - L1) under the
    orthogonal centro-symmetric change of basis, so this is exactly
    invertibility of the propagation matrix.
    """
    return gains.existence_ok


def field_bounds(
    f: NonlinearField,
    dec: DecompositionFunction,
    box: IntervalVector,
    mode: str = "corollary",
) -> IntervalVector:
    """Sound range bounds of a field over a box.

    mode "embed" uses the decomposition embedding alone; mode
    "corollary" meets it with a slope-zero affine abstraction whose
    vertex slack comes from the per-output Lipschitz rows.
    """
    if mode == "embed":
        return embed_bounds(dec, box)
    if mode == "corollary":
        sigma = sigma_for_lipschitz(f.row_lipschitz(), box)
        planes = interval_abstraction(f, box, sigma)
        return corollary_bounds(dec, planes, box)
    raise ValueError(f"unknown bounding mode {mode!r}")


def _residual_pair(
    model: SystemModel,
    f_box: IntervalVector,
    g_box: IntervalVector,
    y_prev: np.ndarray,
    u_prev: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    bu = model.B @ u_prev
    du = model.D @ u_prev
    r_up = np.concatenate(
        [
            -f_box.lower - bu - model.w_bounds.lower,
            y_prev - g_box.lower - du - model.v_bounds.lower,
        ]
    )
    r_lo = np.concatenate(
        [
            -f_box.upper - bu - model.w_bounds.upper,
            y_prev - g_box.upper - du - model.v_bounds.upper,
        ]
    )
    return r_up, r_lo


def propagate_state(
    model: SystemModel,
    gains: ObserverGains,
    dec_f: DecompositionFunction,
    dec_g: DecompositionFunction,
    prev_box: IntervalVector,
    y_prev: np.ndarray,
    u_prev: np.ndarray,
    mode: str = "corollary",
) -> IntervalVector:
    """One framer propagation step: the box for x_k from data at k-1.

    Solves A_x [x_up; x_lo] = p_k exactly; refuses to run when the
    existence condition fails, since the least-squares surrogate does
    not solve the fixed-point system and returns unsound intervals.
    """
    if not gains.existence_ok:
        raise ExistenceConditionError(
            f"A_x is singular (ranks {gains.rank_minus}, {gains.rank_plus} "
            f"of {gains.n}); state propagation is not defined"
        )
    n = model.n
    f_box = field_bounds(model.f, dec_f, prev_box, mode)
    g_box = field_bounds(model.g, dec_g, prev_box, mode)
    r_up, r_lo = _residual_pair(model, f_box, g_box, y_prev, u_prev)
    bu = model.B @ u_prev
    k, l = gains.k_gain, gains.l_gain
    p_vec = np.concatenate(
        [
            f_box.upper + bu + model.w_bounds.upper + k @ r_up - l @ r_lo,
            f_box.lower + bu + model.w_bounds.lower + k @ r_lo - l @ r_up,
        ]
    )
    sol = np.linalg.solve(gains.a_x, p_vec)
    x_up, x_lo = sol[:n], sol[n:]
    if np.any(x_lo > x_up + 1e-9):
        worst = float(np.max(x_lo - x_up))
        raise FramerOrderError(
            f"propagated framers inverted by {worst:.3e}; gains do not "
            "contract for this system"
        )
    return IntervalVector(np.minimum(x_lo, x_up), np.maximum(x_lo, x_up))


def estimate_input(
    model: SystemModel,
    gains: ObserverGains,
    dec_f: DecompositionFunction,
    dec_g: DecompositionFunction,
    prev_box: IntervalVector,
    new_box: IntervalVector,
    y_prev: np.ndarray,
    u_prev: np.ndarray,
    mode: str = "corollary",
) -> IntervalVector:
    """Box for the delayed unknown input d_{k-1}.

    Stacks h = [x_k - f(x_prev) - B u - w; y_prev - g(x_prev) - D u - v]
    in interval form and pushes it through the split left inverse J.
    """
    f_box = field_bounds(model.f, dec_f, prev_box, mode)
    g_box = field_bounds(model.g, dec_g, prev_box, mode)
    r_up, r_lo = _residual_pair(model, f_box, g_box, y_prev, u_prev)
    pad = np.zeros(model.l)
    h_up = np.concatenate([new_box.upper, pad]) + r_up
    h_lo = np.concatenate([new_box.lower, pad]) + r_lo
    jp, jm = sign_split(gains.j)
    d_up = jp @ h_up - jm @ h_lo
    d_lo = jp @ h_lo - jm @ h_up
    if np.any(d_lo > d_up + 1e-9):
        raise FramerOrderError("input framers inverted")
    return IntervalVector(np.minimum(d_lo, d_up), np.maximum(d_lo, d_up))


@dataclass(frozen=True)
class FramerState:
    """Observer state after step k: the x_k box and the d_{k-1} box."""

    step: int
    x_box: IntervalVector
    input_box: IntervalVector | None = None


def observer_step(
    model: SystemModel,
    gains: ObserverGains,
    dec_f: DecompositionFunction,
    dec_g: DecompositionFunction,
    state: FramerState,
    y_prev: np.ndarray,
    u_prev: np.ndarray,
    mode: str = "corollary",
) -> FramerState:
    """Advance the framer state one step using the measurement at k-1."""
    y_prev = np.asarray(y_prev, dtype=float).reshape(-1)
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    new_box = propagate_state(model, gains, dec_f, dec_g, state.x_box, y_prev, u_prev, mode)
    d_box = estimate_input(
        model, gains, dec_f, dec_g, state.x_box, new_box, y_prev, u_prev, mode
    )
    return FramerState(step=state.step + 1, x_box=new_box, input_box=d_box)


@dataclass(frozen=True)
class FeedthroughSvd:
    """SVD split of the direct feedthrough H = U1 Sigma V1^T + 0.

    rank is the numeric rank p_H; t1 = U1^T maps measurements onto the
    estimable subspace and phi = Sigma^{-1} rescales it. v1 spans the
    estimable input directions.
    """

    rank: int
    t1: np.ndarray
    phi: np.ndarray
    v1: np.ndarray
    u: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)


def decompose_feedthrough(h) -> FeedthroughSvd:
    h = as_matrix(h, "H")
    res = svd(h)
    r = numeric_rank(h)
    u1 = res.u[:, :r]
    s1 = res.singular_values[:r]
    v1 = res.v[:, :r]
    phi = np.diag(1.0 / s1) if r else np.zeros((0, 0))
    return FeedthroughSvd(
        rank=r,
        t1=u1.T,
        phi=phi,
        v1=v1,
        u=res.u,
        singular_values=res.singular_values,
        v=res.v,
    )


def estimate_current_input_component(
    model: SystemModel,
    fsvd: FeedthroughSvd,
    dec_g: DecompositionFunction,
    x_box: IntervalVector,
    y_k: np.ndarray,
    u_k: np.ndarray,
) -> IntervalVector:
    """Box for V1^T d_k from the current measurement y_k.

    Only the feedthrough-visible component of d_k is estimable at time
    k; the orthogonal complement is unobservable until the next state
    update. A zero-rank feedthrough returns a dimension-0 interval.
    """
    if fsvd.rank == 0:
        z = np.zeros(0)
        return IntervalVector(z, z)
    y_k = np.asarray(y_k, dtype=float).reshape(-1)
    u_k = np.asarray(u_k, dtype=float).reshape(-1)
    m = fsvd.phi @ fsvd.t1
    mp, mm = sign_split(m)
    g_up = eval_decomposition(dec_g, x_box.upper, x_box.lower)
    g_lo = eval_decomposition(dec_g, x_box.lower, x_box.upper)
    core = m @ (y_k - model.D @ u_k)
    ell_up = mm @ (g_up + model.v_bounds.upper) - mp @ (g_lo + model.v_bounds.lower)
    ell_lo = mm @ (g_lo + model.v_bounds.lower) - mp @ (g_up + model.v_bounds.upper)
    return IntervalVector(core + ell_lo, core + ell_up)


class ObserverPipeline:
    """Bundles gains, decompositions and the feedthrough split.

    Convenience wrapper used by the simulator; the underlying free
    functions stay available for piecewise testing.
    """

    def __init__(self, model: SystemModel, mode: str = "corollary"):
        if mode not in ("embed", "corollary"):
            raise ValueError(f"unknown bounding mode {mode!r}")
        self.model = model
        self.mode = mode
        self.gains = synthesize_gains(model)
        self.dec_f = build_decomposition(model.f)
        self.dec_g = build_decomposition(model.g)
        self.feedthrough = decompose_feedthrough(model.H)

    def initial_state(self) -> FramerState:
        return FramerState(step=0, x_box=self.model.x0_bounds, input_box=None)

    def require_existence(self) -> None:
        if not self.gains.existence_ok:
            raise ExistenceConditionError(
                "observer existence condition fails: ranks "
                f"({self.gains.rank_minus}, {self.gains.rank_plus}) of "
                f"{self.gains.n} for the two A_x blocks"
            )

    def step(self, state: FramerState, y_prev, u_prev) -> FramerState:
        return observer_step(
            self.model,
            self.gains,
            self.dec_f,
            self.dec_g,
            state,
            y_prev,
            u_prev,
            self.mode,
        )

    def current_input_component(self, x_box: IntervalVector, y_k, u_k) -> IntervalVector:
        return estimate_current_input_component(
            self.model, self.feedthrough, self.dec_g, x_box, y_k, u_k
        )

    def current_input_box(self, x_box: IntervalVector, y_k, u_k) -> IntervalVector | None:
        """Full d_k box when the feedthrough has full column rank.

        Returns None when some input direction is invisible at time k
        (rank-deficient H), since no sound full box exists then.
        """
        if self.feedthrough.rank < self.model.p:
            return None
        comp = self.current_input_component(x_box, y_k, u_k)
        return linear_map_bounds(self.feedthrough.v1, comp)
