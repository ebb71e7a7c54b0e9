"""Width dynamics of the framers: contraction tests and delta bounds.

The interval widths obey a norm recursion driven by two transfer
matrices T_f and T_g derived from the gains. Three sufficient
conditions of increasing algebraic strictness are implemented, plus
the scalar delta sequences that upper bound the framer widths and
their limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interval_core import IntervalVector
from .matrix_kit import (
    abs_matrix,
    is_negative_semidefinite,
    pinv,
    spectral_norm,
    sym_eig_extrema,
)
from .observer import ObserverGains

__all__ = [
    "StabilityReport",
    "WidthBounds",
    "compute_T_matrices",
    "condition_i",
    "condition_ii",
    "condition_ii_matrix",
    "condition_iii",
    "condition_iii_matrix",
    "stability_report",
    "steady_state_bounds",
    "width_bound_sequences",
]


def compute_T_matrices(gains: ObserverGains) -> tuple[np.ndarray, np.ndarray]:
    """T_f = pinv(I - K1 - L1)(I - K1 + L1), T_g = pinv(I - K1 - L1)(K2 + L2).

    The pseudoinverse keeps the formulas defined for rank-deficient
    gains; the verdicts downstream then report the lack of contraction
    rather than raising.
    """
    i_n = np.eye(gains.n)
    core = pinv(i_n - gains.k1 - gains.l1)
    t_f = core @ (i_n - gains.k1 + gains.l1)
    t_g = core @ (gains.k2 + gains.l2)
    return t_f, t_g


def condition_i(t_f, t_g, l_fd: float, l_gd: float) -> tuple[bool, float]:
    """Norm gain of the width recursion: calL = L_fd ||T_f|| + L_gd ||T_g||.

    Returns (calL <= 1, calL). Strict inequality gives geometric decay;
    equality only boundedness of the accumulated noise term.
    """
    cal_l = l_fd * spectral_norm(t_f) + l_gd * spectral_norm(t_g)
    return cal_l <= 1.0, cal_l


def condition_ii_matrix(t_f, t_g, l_fd: float, l_gd: float) -> np.ndarray:
    """Assemble the quadratic-form test matrix for the second condition.

    Block sizes (n, l, n, n, l) for the stacked deviation vector
    (state, measurement noise, process noise, f image, g image). The
    matrix must be negative semidefinite for the condition to hold.
    """
    t_f = np.asarray(t_f, dtype=float)
    t_g = np.asarray(t_g, dtype=float)
    n = t_f.shape[0]
    l = t_g.shape[1]
    tff = t_f.T @ t_f
    tgg = t_g.T @ t_g
    tgf = t_g.T @ t_f
    tfg = t_f.T @ t_g
    q = (
        sym_eig_extrema(tff)[1] * l_fd**2
        + sym_eig_extrema(tgg)[1] * l_gd**2
        - 1.0
    )
    zn = np.zeros((n, n))
    znl = np.zeros((n, l))
    zl = np.zeros((l, l))
    return np.block(
        [
            [q * np.eye(n), znl, zn, zn, znl],
            [znl.T, tgg, tgf, tgf, tgg],
            [zn, tgf.T, tff, tff, tfg],
            [zn, tgf.T, tff, zn, tfg],
            [znl.T, tgg.T, tfg.T, tfg.T, zl],
        ]
    )


def condition_ii(t_f, t_g, l_fd: float, l_gd: float, tol: float = 1e-9) -> bool:
    return is_negative_semidefinite(condition_ii_matrix(t_f, t_g, l_fd, l_gd), tol)


def condition_iii_matrix(cal_l: float, p_matrix, gamma_matrix) -> np.ndarray:
    """Assemble the Lyapunov-style test matrix for given P and Gamma."""
    p = np.asarray(p_matrix, dtype=float)
    gam = np.asarray(gamma_matrix, dtype=float)
    n = p.shape[0]
    i_n = np.eye(n)
    zn = np.zeros((n, n))
    return np.block(
        [
            [p + gam - i_n, zn, p],
            [zn, cal_l**2 * i_n - p, zn],
            [p, zn, p],
        ]
    )


def _is_sym_psd(m: np.ndarray, strict: bool, tol: float = 1e-10) -> bool:
    if m.shape[0] != m.shape[1]:
        return False
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        return False
    lo, _ = sym_eig_extrema(m)
    return lo > tol if strict else lo >= -tol


def condition_iii(
    cal_l: float,
    n: int,
    p_matrix=None,
    gamma_matrix=None,
    tol: float = 1e-9,
) -> tuple[bool, np.ndarray | None, np.ndarray | None]:
    """Search for P > 0, Gamma >= 0 certifying the third condition.

    With explicit matrices, validates them (symmetric, P positive
    definite, Gamma positive semidefinite) and tests that single pair.
    Otherwise scans the scaled-identity family: P = p I with p
    log-spaced over [1e-3, 1e3] (50 points) and Gamma = g I with g
    linear over [0, 1] (50 points), returning the first feasible pair
    in grid order. Returns (feasible, P, Gamma).
    """
    if p_matrix is not None or gamma_matrix is not None:
        if p_matrix is None or gamma_matrix is None:
            raise ValueError("provide both P and Gamma or neither")
        p = np.asarray(p_matrix, dtype=float)
        gam = np.asarray(gamma_matrix, dtype=float)
        if not _is_sym_psd(p, strict=True):
            raise ValueError("P must be symmetric positive definite")
        if not _is_sym_psd(gam, strict=False):
            raise ValueError("Gamma must be symmetric positive semidefinite")
        ok = is_negative_semidefinite(condition_iii_matrix(cal_l, p, gam), tol)
        return (ok, p, gam) if ok else (False, None, None)

    i_n = np.eye(n)
    for p_val in np.logspace(-3.0, 3.0, 50):
        for g_val in np.linspace(0.0, 1.0, 50):
            p = p_val * i_n
            gam = g_val * i_n
            if is_negative_semidefinite(condition_iii_matrix(cal_l, p, gam), tol):
                return True, p, gam
    return False, None, None


@dataclass(frozen=True)
class StabilityReport:
    """Everything the gains command prints about width dynamics."""

    t_f: np.ndarray
    t_g: np.ndarray
    t_f_norm: float
    t_g_norm: float
    l_fd: float
    l_gd: float
    cal_l: float
    condition_i_ok: bool
    condition_ii_ok: bool
    condition_iii_ok: bool


def stability_report(gains: ObserverGains, l_fd: float, l_gd: float) -> StabilityReport:
    t_f, t_g = compute_T_matrices(gains)
    ok_i, cal_l = condition_i(t_f, t_g, l_fd, l_gd)
    ok_ii = condition_ii(t_f, t_g, l_fd, l_gd)
    ok_iii, _, _ = condition_iii(cal_l, gains.n)
    return StabilityReport(
        t_f=t_f,
        t_g=t_g,
        t_f_norm=spectral_norm(t_f),
        t_g_norm=spectral_norm(t_g),
        l_fd=l_fd,
        l_gd=l_gd,
        cal_l=cal_l,
        condition_i_ok=ok_i,
        condition_ii_ok=ok_ii,
        condition_iii_ok=ok_iii,
    )


@dataclass(frozen=True)
class WidthBounds:
    """Scalar width bound sequences for a horizon of steps.

    delta_x_closed[k] bounds the state framer width norm at step k
    (k = 0 .. steps); delta_x_recursive is the same sequence computed
    by iterating the recursion, kept separate so tests can confirm the
    two agree. delta_d[k] bounds the width of the delayed input
    estimate produced at step k (k = 1 .. steps, index 0 unused NaN).
    """

    cal_l: float
    dz_norm: float
    g_slope: float
    g_offset: float
    delta_x_closed: np.ndarray
    delta_x_recursive: np.ndarray
    delta_d: np.ndarray
    steady_state_limit: float
    steady_state_scaled: float
    steady_state_input: float


def _closed_form(delta0: float, cal_l: float, dz: float, k: np.ndarray) -> np.ndarray:
    if abs(cal_l - 1.0) < 1e-12:
        return delta0 + k * dz
    pw = cal_l**k
    return pw * delta0 + dz * (1.0 - pw) / (1.0 - cal_l)


def steady_state_bounds(
    cal_l: float, dz_norm: float, g_slope: float, g_offset: float
) -> tuple[float, float, float]:
    """(limit, scaled, input_limit) steady-state width bounds.

    limit is the fixed point of the recursion, dz / (1 - calL); scaled
    is the calL-weighted variant calL * limit, reported alongside for
    reference. input_limit pushes the state limit through the affine
    input-width map. All three are infinite when calL >= 1.
    """
    if cal_l >= 1.0:
        return float("inf"), float("inf"), float("inf")
    limit = dz_norm / (1.0 - cal_l)
    return limit, cal_l * limit, g_slope * limit + g_offset


def width_bound_sequences(
    gains: ObserverGains,
    t_f: np.ndarray,
    t_g: np.ndarray,
    l_fd: float,
    l_gd: float,
    w_bounds: IntervalVector,
    v_bounds: IntervalVector,
    delta0: float,
    steps: int,
) -> WidthBounds:
    """Delta sequences bounding framer width norms over a horizon.

    delta_x follows the scalar recursion delta_{k+1} = calL delta_k
    + ||Dz|| with Dz = T_f Dw + T_g Dv the width of the accumulated
    noise image. The input sequence applies the affine map
    g_slope x + g_offset built from the split left inverse to the
    state sequence at the same step index.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    _, cal_l = condition_i(t_f, t_g, l_fd, l_gd)
    dw = w_bounds.width
    dv = v_bounds.width
    dz = t_f @ dw + t_g @ dv
    dz_norm = float(np.linalg.norm(dz))
    j_abs = abs_matrix(gains.j)
    j1 = j_abs[:, : gains.n]
    j2 = j_abs[:, gains.n :]
    g_slope = (1.0 + l_fd) * spectral_norm(j1) + l_gd * spectral_norm(j2)
    g_offset = float(np.linalg.norm(j1 @ dw + j2 @ dv))

    ks = np.arange(steps + 1, dtype=float)
    closed = _closed_form(delta0, cal_l, dz_norm, ks)
    rec = np.empty(steps + 1)
    rec[0] = delta0
    for k in range(steps):
        rec[k + 1] = cal_l * rec[k] + dz_norm
    delta_d = np.full(steps + 1, np.nan)
    if steps >= 1:
        delta_d[1:] = g_slope * closed[1:] + g_offset
    limit, scaled, input_limit = steady_state_bounds(cal_l, dz_norm, g_slope, g_offset)
    return WidthBounds(
        cal_l=cal_l,
        dz_norm=dz_norm,
        g_slope=g_slope,
        g_offset=g_offset,
        delta_x_closed=closed,
        delta_x_recursive=rec,
        delta_d=delta_d,
        steady_state_limit=limit,
        steady_state_scaled=scaled,
        steady_state_input=input_limit,
    )
