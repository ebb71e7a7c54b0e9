"""Decomposition functions: identity, monotonicity, and embedding soundness."""

from __future__ import annotations

import numpy as np
import pytest

from gsisio.affine_abstraction import interval_abstraction, sigma_for_lipschitz
from gsisio.interval_core import IntervalVector, contains
from gsisio.mixed_monotone import (
    DecompositionFunction,
    NonlinearField,
    build_decomposition,
    corollary_bounds,
    embed_bounds,
    estimate_lipschitz_constant,
    eval_decomposition,
    lipschitz_like_constant,
)


def batched(single):
    """Lift a single-point evaluator to the batch contract."""

    def wrapped(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return single(x)
        return np.stack([single(row) for row in x], axis=0)

    return wrapped


def wave_field() -> NonlinearField:
    def f(x):
        return np.array(
            [
                0.6 * x[0] - 0.12 * x[1] + 1.1 * np.sin(0.3 * x[1] - 0.2 * x[0]),
                -0.2 * x[0] - 0.14 * x[1],
            ]
        )

    # d f1/dx1 = 0.6 - 0.22 cos(.), d f1/dx2 = -0.12 + 0.33 cos(.)
    return NonlinearField(
        dimension_in=2,
        dimension_out=2,
        evaluator=batched(f),
        lipschitz_constant=1.0,
        jacobian_lower=[[0.38, -0.45], [-0.2, -0.14]],
        jacobian_upper=[[0.82, 0.21], [-0.2, -0.14]],
    )


class TestNonlinearField:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            NonlinearField(2, 2, batched(lambda x: x), 1.0, [[1.0]], [[1.0]])

    def test_inverted_jacobian_rectangle(self):
        with pytest.raises(ValueError):
            NonlinearField(
                1, 1, batched(lambda x: x), 1.0,
                jacobian_lower=[[1.0]], jacobian_upper=[[0.0]],
            )

    def test_negative_lipschitz(self):
        with pytest.raises(ValueError):
            NonlinearField(
                1, 1, batched(lambda x: x), -1.0,
                jacobian_lower=[[0.0]], jacobian_upper=[[1.0]],
            )

    def test_row_lipschitz(self):
        field = NonlinearField(
            2, 2, batched(lambda x: x), 1.0,
            jacobian_lower=[[-3.0, 0.0], [0.0, 1.0]],
            jacobian_upper=[[1.0, 4.0], [0.0, 2.0]],
        )
        np.testing.assert_allclose(field.row_lipschitz(), [5.0, 2.0])

    def test_wrong_output_size_rejected(self):
        with pytest.raises(ValueError):
            NonlinearField(
                2, 2, batched(lambda x: np.array([x[0]])), 1.0,
                jacobian_lower=np.zeros((2, 2)), jacobian_upper=np.zeros((2, 2)),
            )


class TestBuildDecomposition:
    def test_blend_weights_and_corrections(self):
        field = NonlinearField(
            2, 1, batched(lambda x: np.array([x[0] + x[1]])), 2.0,
            jacobian_lower=[[0.5, -1.0]], jacobian_upper=[[2.0, 3.0]],
        )
        dec = build_decomposition(field)
        # nonnegative entry: weight 1, no correction
        assert dec.argument_weight[0, 0] == 1.0
        assert dec.slope_correction[0, 0] == 0.0
        # straddling entry [-1, 3]: weight b/(b-a) = 3/4, correction -ab/(b-a) = 3/4
        assert dec.argument_weight[0, 1] == pytest.approx(0.75)
        assert dec.slope_correction[0, 1] == pytest.approx(0.75)

    def test_nonpositive_entry_selects_second_argument(self):
        field = NonlinearField(
            1, 1, batched(lambda x: -x), 1.0,
            jacobian_lower=[[-1.0]], jacobian_upper=[[-0.5]],
        )
        dec = build_decomposition(field)
        assert dec.argument_weight[0, 0] == 0.0
        assert dec.slope_correction[0, 0] == 0.0

    def test_validation_rejects_negative_correction(self):
        field = wave_field()
        with pytest.raises(ValueError):
            DecompositionFunction(field, -np.ones((2, 2)), np.full((2, 2), 0.5))

    def test_validation_rejects_weight_outside_unit_interval(self):
        field = wave_field()
        with pytest.raises(ValueError):
            DecompositionFunction(field, np.zeros((2, 2)), np.full((2, 2), 1.5))


class TestDecompositionProperties:
    BOX = IntervalVector([-1.5, -1.0], [1.0, 2.0])

    def test_diagonal_identity(self, rng):
        field = wave_field()
        dec = build_decomposition(field)
        for _ in range(200):
            x = rng.uniform(self.BOX.lower, self.BOX.upper)
            np.testing.assert_allclose(
                eval_decomposition(dec, x, x), field(x), atol=1e-12
            )

    def test_monotone_in_first_argument(self, rng):
        dec = build_decomposition(wave_field())
        for _ in range(500):
            x = rng.uniform(self.BOX.lower, self.BOX.upper)
            y = rng.uniform(self.BOX.lower, self.BOX.upper)
            x_hi = x + rng.uniform(0.0, 0.5, size=2)
            lo = eval_decomposition(dec, x, y)
            hi = eval_decomposition(dec, x_hi, y)
            assert np.all(hi >= lo - 1e-12)

    def test_antitone_in_second_argument(self, rng):
        dec = build_decomposition(wave_field())
        for _ in range(500):
            x = rng.uniform(self.BOX.lower, self.BOX.upper)
            y = rng.uniform(self.BOX.lower, self.BOX.upper)
            y_hi = y + rng.uniform(0.0, 0.5, size=2)
            assert np.all(
                eval_decomposition(dec, x, y_hi)
                <= eval_decomposition(dec, x, y) + 1e-12
            )

    def test_embedding_contains_field_values(self, rng):
        field = wave_field()
        dec = build_decomposition(field)
        box = self.BOX
        bounds = embed_bounds(dec, box)
        for _ in range(400):
            x = rng.uniform(box.lower, box.upper)
            assert contains(bounds, field(x), tol=1e-10)

    def test_two_argument_lipschitz_constant(self, rng):
        field = wave_field()
        dec = build_decomposition(field)
        bound = lipschitz_like_constant(dec)
        assert bound == pytest.approx(
            field.lipschitz_constant + 2.0 * np.linalg.norm(dec.slope_correction, 2)
        )
        for _ in range(300):
            a = rng.uniform(-1.5, 1.5, size=4)
            b = rng.uniform(-1.5, 1.5, size=4)
            va = eval_decomposition(dec, a[:2], a[2:])
            vb = eval_decomposition(dec, b[:2], b[2:])
            gap = np.linalg.norm(a - b)
            if gap > 1e-9:
                assert np.linalg.norm(va - vb) <= bound * gap + 1e-9


class TestCorollaryBounds:
    def test_tightens_and_stays_sound(self, rng):
        field = wave_field()
        dec = build_decomposition(field)
        box = IntervalVector([-0.5, -0.5], [0.5, 0.5])
        sigma = sigma_for_lipschitz(field.row_lipschitz(), box)
        planes = interval_abstraction(field, box, sigma)
        emb = embed_bounds(dec, box)
        cor = corollary_bounds(dec, planes, box)
        assert np.all(cor.lower >= emb.lower - 1e-12)
        assert np.all(cor.upper <= emb.upper + 1e-12)
        for _ in range(300):
            x = rng.uniform(box.lower, box.upper)
            assert contains(cor, field(x), tol=1e-10)


class TestAffineFieldSpecialCase:
    def test_embedding_matches_sign_split_bound(self, rng):
        a = rng.standard_normal((3, 3))

        def lin(x):
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                return a @ x
            return x @ a.T

        field = NonlinearField(
            3, 3, lin, float(np.linalg.norm(a, 2)),
            jacobian_lower=a, jacobian_upper=a,
        )
        dec = build_decomposition(field)
        box = IntervalVector([-1.0, 0.0, -2.0], [2.0, 1.0, 0.0])
        emb = embed_bounds(dec, box)
        from gsisio.interval_core import linear_map_bounds

        ref = linear_map_bounds(a, box)
        np.testing.assert_allclose(emb.lower, ref.lower, atol=1e-12)
        np.testing.assert_allclose(emb.upper, ref.upper, atol=1e-12)


class TestBatchProbe:
    def test_square_matrix_evaluator_detected(self):
        """lambda x: A @ x misreads a batch as one matrix; the probe must catch it."""
        a = np.array([[0.5, 0.2], [-0.1, 0.3]])
        field = NonlinearField(
            2, 2, lambda x: a @ np.asarray(x, dtype=float), float(np.linalg.norm(a, 2)),
            jacobian_lower=a, jacobian_upper=a,
        )
        assert not field._batch_ok
        dec = build_decomposition(field)
        box = IntervalVector([-1.0, -1.0], [1.0, 1.0])
        from gsisio.interval_core import linear_map_bounds

        ref = linear_map_bounds(a, box)
        emb = embed_bounds(dec, box)
        np.testing.assert_allclose(emb.lower, ref.lower, atol=1e-12)
        np.testing.assert_allclose(emb.upper, ref.upper, atol=1e-12)

    def test_single_point_only_evaluator_falls_back(self):
        def strict(x):
            x = np.asarray(x, dtype=float)
            if x.ndim != 1:
                raise TypeError("points only")
            return np.array([np.sin(x[0]), x[1]])

        field = NonlinearField(
            2, 2, strict, 1.0,
            jacobian_lower=[[-1.0, 0.0], [0.0, 1.0]],
            jacobian_upper=[[1.0, 0.0], [0.0, 1.0]],
        )
        assert not field._batch_ok
        dec = build_decomposition(field)
        x = np.array([0.3, -0.2])
        np.testing.assert_allclose(eval_decomposition(dec, x, x), field(x), atol=1e-12)

    def test_batch_evaluator_accepted(self):
        field = wave_field()
        assert field._batch_ok


class TestLipschitzEstimate:
    def test_linear_map_ratio_is_bracketed(self):
        a = np.diag([2.0, 0.1])

        def lin(x):
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                return a @ x
            return x @ a.T

        box = IntervalVector([-1.0, -1.0], [1.0, 1.0])
        est = estimate_lipschitz_constant(lin, box, samples=2000, seed=3)
        assert est <= 2.0 + 1e-9
        assert est > 1.5
