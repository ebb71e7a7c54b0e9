"""Affine abstractions of nonlinear fields over boxes.

Given a vector field q and a box B, produce plane pairs
(A_lower, e_lower) and (A_upper, e_upper) with

    A_lower x + e_lower <= q(x) <= A_upper x + e_upper   for all x in B,

certified through vertex constraints plus a Lipschitz slack sigma that
absorbs the deviation of q from multilinearity in the interior. The
tightest tilted planes come from a small linear program solved by the
embedded simplex routine; a closed-form slope-zero variant is also
provided for hot loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interval_core import IntervalVector
from .matrix_kit import as_matrix, sign_split

__all__ = [
    "AffineBounds",
    "LinearProgram",
    "SimplexInfeasibleError",
    "SimplexUnboundedError",
    "abstract_over_box",
    "estimate_jacobian_bounds",
    "interval_abstraction",
    "sigma_for_lipschitz",
    "simplex_solve",
]


class SimplexInfeasibleError(RuntimeError):
    """The constraint set A x <= b admits no point."""


class SimplexUnboundedError(RuntimeError):
    """The objective decreases without bound over the feasible set."""


@dataclass(frozen=True)
class LinearProgram:
    """minimize c . x  subject to  a_ub x <= b_ub, x free."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        a = as_matrix(self.a_ub, "a_ub")
        b = np.asarray(self.b_ub, dtype=float).reshape(-1)
        if a.shape != (b.size, c.size):
            raise ValueError(
                f"inconsistent LP shapes: c{c.shape}, a_ub{a.shape}, b_ub{b.shape}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))):
            raise ValueError("LP data contains NaN or infinite entries")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a_ub", a)
        object.__setattr__(self, "b_ub", b)


_PIVOT_EPS = 1e-10
_FEAS_EPS = 1e-8
_MAX_PIVOTS = 200000


def _bland_pivot(tab: np.ndarray, basis: np.ndarray, ncols: int) -> bool:
    """One simplex pivot with Bland's anti-cycling rule.

    Returns False at optimality. Raises SimplexUnboundedError when the
    entering column has no positive entry.
    """
    cost = tab[-1, :ncols]
    enter = -1
    for j in range(ncols):
        if cost[j] < -_PIVOT_EPS:
            enter = j
            break
    if enter < 0:
        return False
    col = tab[:-1, enter]
    rhs = tab[:-1, -1]
    best = None
    leave = -1
    for i in range(col.size):
        if col[i] > _PIVOT_EPS:
            ratio = rhs[i] / col[i]
            if best is None or ratio < best - _PIVOT_EPS or (
                abs(ratio - best) <= _PIVOT_EPS and basis[i] < basis[leave]
            ):
                best = ratio
                leave = i
    if leave < 0:
        raise SimplexUnboundedError("objective unbounded below")
    piv = tab[leave, enter]
    tab[leave] /= piv
    for i in range(tab.shape[0]):
        if i != leave and abs(tab[i, enter]) > 0.0:
            tab[i] -= tab[i, enter] * tab[leave]
    basis[leave] = enter
    return True


def simplex_solve(lp: LinearProgram) -> tuple[np.ndarray, float]:
    """Solve an inequality-form LP with a two-phase dense tableau.

    Free variables are split as x = xp - xm. Returns (x, objective).
    Raises SimplexInfeasibleError or SimplexUnboundedError for the two
    abnormal outcomes.
    """
    n = lp.c.size
    m = lp.b_ub.size
    # columns: xp(n) | xm(n) | slack(m) | artificial(k)
    a = np.hstack([lp.a_ub, -lp.a_ub, np.eye(m)])
    b = lp.b_ub.copy()
    neg = b < 0.0
    a[neg] *= -1.0
    b[neg] *= -1.0
    art_rows = np.flatnonzero(neg)
    k = art_rows.size
    ncols = 2 * n + m + k
    full = np.zeros((m, ncols))
    full[:, : 2 * n + m] = a
    for idx, r in enumerate(art_rows):
        full[r, 2 * n + m + idx] = 1.0

    basis = np.empty(m, dtype=int)
    for i in range(m):
        basis[i] = 2 * n + i  # slack
    for idx, r in enumerate(art_rows):
        basis[r] = 2 * n + m + idx  # artificial replaces flipped slack

    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :ncols] = full
    tab[:m, -1] = b

    if k:
        # phase 1: minimize the artificial sum
        tab[-1, 2 * n + m :ncols] = 1.0
        for i in range(m):
            if basis[i] >= 2 * n + m:
                tab[-1] -= tab[i]
        it = 0
        while _bland_pivot(tab, basis, ncols):
            it += 1
            if it > _MAX_PIVOTS:
                raise RuntimeError("simplex iteration cap exceeded in phase 1")
        if tab[-1, -1] < -_FEAS_EPS:
            raise SimplexInfeasibleError(
                f"phase-1 optimum {-tab[-1, -1]:.3e} > 0"
            )
        # pivot any artificial still basic (at zero level) out of the basis
        for i in range(m):
            if basis[i] >= 2 * n + m:
                row = tab[i, : 2 * n + m]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > _PIVOT_EPS:
                    piv = tab[i, j]
                    tab[i] /= piv
                    for r in range(tab.shape[0]):
                        if r != i and abs(tab[r, j]) > 0.0:
                            tab[r] -= tab[r, j] * tab[i]
                    basis[i] = j
                # else: redundant row, harmless to leave in place
        tab[:, 2 * n + m :ncols] = 0.0

    # phase 2 objective over xp, xm
    tab[-1, :] = 0.0
    tab[-1, :n] = lp.c
    tab[-1, n : 2 * n] = -lp.c
    for i in range(m):
        j = basis[i]
        if j < 2 * n + m and abs(tab[-1, j]) > 0.0:
            tab[-1] -= tab[-1, j] * tab[i]
    it = 0
    while _bland_pivot(tab, basis, 2 * n + m):
        it += 1
        if it > _MAX_PIVOTS:
            raise RuntimeError("simplex iteration cap exceeded in phase 2")

    z = np.zeros(2 * n + m)
    for i in range(m):
        if basis[i] < z.size:
            z[basis[i]] = tab[i, -1]
    x = z[:n] - z[n : 2 * n]
    return x, float(lp.c @ x)


@dataclass(frozen=True)
class AffineBounds:
    """Certified plane sandwich for a field over one box.

    a_lower x + e_lower <= q(x) <= a_upper x + e_upper holds on the box
    the abstraction was built for; sigma records the Lipschitz slack
    used at the vertices.
    """

    a_upper: np.ndarray
    e_upper: np.ndarray
    a_lower: np.ndarray
    e_lower: np.ndarray
    sigma: np.ndarray
    box: IntervalVector = field(repr=False)

    def plane_bounds_over(self, box: IntervalVector | None = None) -> IntervalVector:
        """Range of the two planes over a box (defaults to the build box).

        upper_i = sup_x (a_upper x + e_upper)_i, taken coordinatewise
        with the sign split; lower_i symmetrically with the lower plane.
        """
        b = self.box if box is None else box
        up_p, up_m = sign_split(self.a_upper)
        lo_p, lo_m = sign_split(self.a_lower)
        hi = up_p @ b.upper - up_m @ b.lower + self.e_upper
        lo = lo_p @ b.lower - lo_m @ b.upper + self.e_lower
        return IntervalVector(np.minimum(lo, hi), np.maximum(lo, hi))


def _eval_rows(func, points: np.ndarray) -> np.ndarray:
    out = [np.asarray(func(points[i]), dtype=float).reshape(-1) for i in range(points.shape[0])]
    return np.array(out)


def _sigma_vector(sigma, m: int) -> np.ndarray:
    s = np.asarray(sigma, dtype=float).reshape(-1)
    if s.size == 1:
        s = np.full(m, float(s[0]))
    if s.size != m:
        raise ValueError(f"sigma has {s.size} entries, field has {m} outputs")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("sigma must be finite and nonnegative")
    return s


def sigma_for_lipschitz(lipschitz, box: IntervalVector) -> np.ndarray:
    """Vertex slack sigma_i = L_i * (half box diagonal).

    Valid because |q_i(x) - q_i(x_s)| <= L_i ||x - x_s|| <= L_i * diam/2
    for the vertex x_s nearest to x.
    """
    L = np.asarray(lipschitz, dtype=float).reshape(-1)
    if np.any(L < 0):
        raise ValueError("Lipschitz constants must be nonnegative")
    half_diag = 0.5 * float(np.linalg.norm(box.width))
    return L * half_diag


def abstract_over_box(func, box: IntervalVector, sigma) -> AffineBounds:
    """Tightest-gap tilted plane sandwich via one linear program.

    Decision variables are the plane pairs for every output plus one
    shared gap variable theta; constraints enforce the sandwich with
    slack sigma at every box vertex and theta above every per-vertex
    gap. Dimension is capped at 16 (vertex enumeration).
    """
    n = box.dim
    if n > 16:
        raise ValueError(f"abstract_over_box refused for dim {n} > 16")
    verts = box.vertices()
    fv = _eval_rows(func, verts)
    m = fv.shape[1]
    sig = _sigma_vector(sigma, m)

    per = 2 * n + 2  # Abar_i, ebar_i, Alow_i, elow_i
    nvar = m * per + 1
    theta = nvar - 1
    rows = []
    rhs = []
    for s in range(verts.shape[0]):
        xs = verts[s]
        for i in range(m):
            base = i * per
            # -Abar_i.xs - ebar_i <= -f_i(xs) - sigma_i
            r = np.zeros(nvar)
            r[base : base + n] = -xs
            r[base + n] = -1.0
            rows.append(r)
            rhs.append(-fv[s, i] - sig[i])
            # Alow_i.xs + elow_i <= f_i(xs) - sigma_i
            r = np.zeros(nvar)
            r[base + n + 1 : base + 2 * n + 1] = xs
            r[base + 2 * n + 1] = 1.0
            rows.append(r)
            rhs.append(fv[s, i] - sig[i])
            # (Abar_i - Alow_i).xs + ebar_i - elow_i - theta <= 2 sigma_i
            r = np.zeros(nvar)
            r[base : base + n] = xs
            r[base + n] = 1.0
            r[base + n + 1 : base + 2 * n + 1] = -xs
            r[base + 2 * n + 1] = -1.0
            r[theta] = -1.0
            rows.append(r)
            rhs.append(2.0 * sig[i])
    c = np.zeros(nvar)
    c[theta] = 1.0
    x, _ = simplex_solve(LinearProgram(c, np.array(rows), np.array(rhs)))

    a_up = np.empty((m, n))
    e_up = np.empty(m)
    a_lo = np.empty((m, n))
    e_lo = np.empty(m)
    for i in range(m):
        base = i * per
        a_up[i] = x[base : base + n]
        e_up[i] = x[base + n]
        a_lo[i] = x[base + n + 1 : base + 2 * n + 1]
        e_lo[i] = x[base + 2 * n + 1]
    return AffineBounds(a_up, e_up, a_lo, e_lo, sig, box)


def interval_abstraction(func, box: IntervalVector, sigma) -> AffineBounds:
    """Slope-zero abstraction in closed form.

    With all slopes fixed at zero the tightest offsets are
    e_upper_i = max_s q_i(x_s) + sigma_i and
    e_lower_i = min_s q_i(x_s) - sigma_i over the vertices x_s.
    """
    n = box.dim
    if n > 16:
        raise ValueError(f"interval_abstraction refused for dim {n} > 16")
    fv = _eval_rows(func, box.vertices())
    m = fv.shape[1]
    sig = _sigma_vector(sigma, m)
    e_up = fv.max(axis=0) + sig
    e_lo = fv.min(axis=0) - sig
    zero = np.zeros((m, n))
    return AffineBounds(zero, e_up, zero.copy(), e_lo, sig, box)


def estimate_jacobian_bounds(
    func,
    box: IntervalVector,
    grid_density: int = 5,
    margin: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Sampled elementwise Jacobian rectangle [a, b] over a box.

    Central differences with step 1e-5 times the box width per axis
    (absolute floor 1e-8 on degenerate axes), evaluated on a regular
    grid of grid_density points per axis. Each entry is then inflated
    both ways by margin * max(|a_raw|, |b_raw|); pass margin=0 for
    fields known to be affine, where the finite differences are already
    exact.

    The result is an estimate, not a certificate: a coarse grid can
    miss interior extrema of the derivative.
    """
    n = box.dim
    if grid_density < 2 and np.any(box.width > 0):
        raise ValueError("grid_density must be at least 2")
    axes = [
        np.linspace(box.lower[j], box.upper[j], grid_density)
        if box.width[j] > 0
        else np.array([box.lower[j]])
        for j in range(n)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    h = np.where(box.width > 0, 1e-5 * box.width, 1e-8)

    a_raw = None
    b_raw = None
    for j in range(n):
        step = np.zeros(n)
        step[j] = h[j]
        fp = _eval_rows(func, pts + step)
        fm = _eval_rows(func, pts - step)
        col = (fp - fm) / (2.0 * h[j])  # (npts, m)
        cmin = col.min(axis=0)
        cmax = col.max(axis=0)
        if a_raw is None:
            m = col.shape[1]
            a_raw = np.empty((m, n))
            b_raw = np.empty((m, n))
        a_raw[:, j] = cmin
        b_raw[:, j] = cmax
    pad = margin * np.maximum(np.abs(a_raw), np.abs(b_raw))
    return a_raw - pad, b_raw + pad
