"""Decomposition functions for mixed-monotone embeddings.

A decomposition of q is a two-argument map q_d(x, y) with
q_d(x, x) = q(x), q_d nondecreasing in x and nonincreasing in y.
Evaluating it on an ordered pair of box corners gives sound bounds on
the range of q over the box, which can then be tightened by meeting
them with an affine abstraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine_abstraction import AffineBounds
from .interval_core import IntervalVector, elementwise_meet
from .matrix_kit import as_matrix, spectral_norm

__all__ = [
    "DecompositionFunction",
    "NonlinearField",
    "build_decomposition",
    "corollary_bounds",
    "embed_bounds",
    "estimate_lipschitz_constant",
    "eval_decomposition",
    "lipschitz_like_constant",
]


@dataclass(frozen=True)
class NonlinearField:
    """A Lipschitz vector field with elementwise Jacobian bounds.

    evaluator maps an (n,) point to an (m,) value and must also accept
    a (N, n) batch, returning (N, m); the expression-built fields and
    all bundled fixtures satisfy this. jacobian_lower/upper are (m, n)
    rectangles with dq_i/dx_j confined to [lower_ij, upper_ij] over the
    working domain.
    """

    dimension_in: int
    dimension_out: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    lipschitz_constant: float
    jacobian_lower: np.ndarray
    jacobian_upper: np.ndarray

    def __post_init__(self):
        lo = as_matrix(self.jacobian_lower, "jacobian_lower")
        hi = as_matrix(self.jacobian_upper, "jacobian_upper")
        shape = (self.dimension_out, self.dimension_in)
        if lo.shape != shape or hi.shape != shape:
            raise ValueError(
                f"jacobian bounds must be {shape}, got {lo.shape} and {hi.shape}"
            )
        if np.any(lo > hi):
            raise ValueError("jacobian_lower exceeds jacobian_upper somewhere")
        if not np.isfinite(self.lipschitz_constant) or self.lipschitz_constant < 0:
            raise ValueError("lipschitz_constant must be finite and nonnegative")
        object.__setattr__(self, "jacobian_lower", lo)
        object.__setattr__(self, "jacobian_upper", hi)
        object.__setattr__(self, "_batch_ok", self._probe_batch_support())

    def _probe_batch_support(self) -> bool:
        """Check once whether the evaluator honors the batch contract.

        Some callables accept a (N, n) array but interpret it as a
        single matrix argument (A @ x style), which would corrupt the
        batched decomposition path silently. A two-point probe with
        distinct rows detects that and falls back to per-row calls.
        """
        rng = np.random.default_rng(12345)
        probe = 0.125 * rng.standard_normal((2, self.dimension_in))
        try:
            one = np.asarray(self.evaluator(probe[0]), dtype=float).reshape(-1)
        except Exception as exc:
            raise ValueError(f"evaluator failed on a single point: {exc}") from exc
        if one.size != self.dimension_out:
            raise ValueError(
                f"evaluator returned {one.size} outputs, expected {self.dimension_out}"
            )
        try:
            two = np.asarray(self.evaluator(probe), dtype=float)
        except Exception:
            return False
        if two.shape != (2, self.dimension_out):
            return False
        return bool(np.allclose(two[0], one, rtol=1e-10, atol=1e-12))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def row_lipschitz(self) -> np.ndarray:
        """Per-output Lipschitz bounds: 2-norm of each row of max(|a|,|b|)."""
        dom = np.maximum(np.abs(self.jacobian_lower), np.abs(self.jacobian_upper))
        return np.linalg.norm(dom, axis=1)


@dataclass(frozen=True)
class DecompositionFunction:
    """q_d(x, y) = q(z(x, y)) + C (x - y), rowwise.

    For output row i, coordinate j, the argument passed to q is the
    convex blend z_j = weight_ij * x_j + (1 - weight_ij) * y_j. weight
    is 1 where the partial derivative is known nonnegative (take x), 0
    where nonpositive (take y), and strictly between for sign-straddling
    entries, where the correction C_ij > 0 restores monotonicity.
    """

    base: NonlinearField
    slope_correction: np.ndarray
    argument_weight: np.ndarray

    def __post_init__(self):
        c = as_matrix(self.slope_correction, "slope_correction")
        w = as_matrix(self.argument_weight, "argument_weight")
        shape = (self.base.dimension_out, self.base.dimension_in)
        if c.shape != shape or w.shape != shape:
            raise ValueError(f"decomposition matrices must have shape {shape}")
        if np.any(c < 0):
            raise ValueError("slope_correction must be nonnegative")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("argument_weight entries must lie in [0, 1]")
        object.__setattr__(self, "slope_correction", c)
        object.__setattr__(self, "argument_weight", w)


def build_decomposition(field: NonlinearField) -> DecompositionFunction:
    """Construct a decomposition from the field's Jacobian rectangle.

    Entries with a_ij >= 0 select x_j, entries with b_ij <= 0 select
    y_j, both with no correction. A sign-straddling entry a_ij < 0 <
    b_ij blends with weight b/(b - a) and correction -a b/(b - a),
    which is the smallest correction that makes both partial
    derivatives of q_d one-signed for that entry.
    """
    a = field.jacobian_lower
    b = field.jacobian_upper
    weight = np.ones_like(a)
    corr = np.zeros_like(a)
    straddle = (a < 0) & (b > 0)
    denom = b[straddle] - a[straddle]
    weight[straddle] = b[straddle] / denom
    corr[straddle] = -a[straddle] * b[straddle] / denom
    weight[b <= 0] = 0.0
    return DecompositionFunction(field, corr, weight)


def eval_decomposition(
    dec: DecompositionFunction, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """Evaluate q_d(x, y).

    One batched call to the base evaluator: row i of the blend matrix Z
    is the argument for output i, and the diagonal of q(Z) collects the
    per-row values.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = dec.base.dimension_in
    if x.size != n or y.size != n:
        raise ValueError(f"arguments must have dimension {n}")
    w = dec.argument_weight
    z = w * x + (1.0 - w) * y  # (m, n), row i feeds output i
    m = dec.base.dimension_out
    if getattr(dec.base, "_batch_ok", False):
        fz = np.asarray(dec.base.evaluator(z), dtype=float)
        vals = np.diagonal(fz.reshape(m, m)).copy()
    else:
        vals = np.empty(m)
        for i in range(m):
            vals[i] = np.asarray(dec.base.evaluator(z[i]), dtype=float).reshape(-1)[i]
    return vals + dec.slope_correction @ (x - y)


def embed_bounds(dec: DecompositionFunction, box: IntervalVector) -> IntervalVector:
    """Range bounds of the base field over a box via the embedding.

    upper = q_d(box.upper, box.lower), lower = q_d(box.lower, box.upper).
    """
    hi = eval_decomposition(dec, box.upper, box.lower)
    lo = eval_decomposition(dec, box.lower, box.upper)
    if np.any(lo > hi):
        # cannot happen for a monotone decomposition; guard anyway
        raise ValueError("decomposition produced inverted bounds")
    return IntervalVector(lo, hi)


def corollary_bounds(
    dec: DecompositionFunction,
    affine: AffineBounds,
    box: IntervalVector,
) -> IntervalVector:
    """Meet of the embedding bounds with an affine abstraction's range.

    Both operands are sound bounds on the field over the box, so their
    intersection is sound and at least as tight as either.
    """
    emb = embed_bounds(dec, box)
    planes = affine.plane_bounds_over(box)
    return elementwise_meet(emb, planes)


def lipschitz_like_constant(dec: DecompositionFunction) -> float:
    """Lipschitz-type constant of the decomposition: L_q + 2 ||C||."""
    return dec.base.lipschitz_constant + 2.0 * spectral_norm(dec.slope_correction)


def estimate_lipschitz_constant(
    func,
    box: IntervalVector,
    samples: int = 2000,
    seed: int = 0,
) -> float:
    """Sampled lower estimate of a Lipschitz constant over a box.

    Draws random point pairs and returns the largest observed ratio
    ||q(x) - q(y)|| / ||x - y||. Not certified: the true constant can
    exceed this value, so treat the result as a sanity check and prefer
    a derived bound for anything that feeds a guarantee.
    """
    rng = np.random.default_rng(seed)
    xs = rng.uniform(box.lower, box.upper, size=(samples, box.dim))
    ys = rng.uniform(box.lower, box.upper, size=(samples, box.dim))
    best = 0.0
    for x, y in zip(xs, ys):
        gap = float(np.linalg.norm(x - y))
        if gap < 1e-12:
            continue
        fx = np.asarray(func(x), dtype=float).reshape(-1)
        fy = np.asarray(func(y), dtype=float).reshape(-1)
        best = max(best, float(np.linalg.norm(fx - fy)) / gap)
    return best
