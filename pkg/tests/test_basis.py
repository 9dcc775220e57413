"""Series bases: hand examples, loop oracles, and structural invariants."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from serieslm.basis import (
    BasisMatrix,
    BasisSpec,
    power_basis,
    quantile_knots,
    restricted_interaction_order,
    spline_basis,
    tensor_interactions,
    tensor_interaction_labels,
)
from serieslm.errors import DesignError


class TestPowerBasis:
    def test_tiny(self):
        np.testing.assert_array_equal(power_basis([2.0], 3).values, [[1, 2, 4]])

    def test_constant_only(self):
        np.testing.assert_array_equal(power_basis([0.0, 1.0], 1).values,
                                      [[1.0], [1.0]])

    def test_against_repeated_multiplication(self):
        rng = np.random.default_rng(42)
        v = rng.uniform(-2.0, 2.0, 100)
        b = power_basis(v, 5).values
        acc = np.ones_like(v)
        for j in range(5):
            np.testing.assert_allclose(b[:, j], acc, rtol=1e-15)
            acc = acc * v

    def test_validation(self):
        with pytest.raises(ValueError):
            power_basis([1.0, np.nan], 3)
        with pytest.raises(ValueError):
            power_basis([1.0], 0)

    def test_labels(self):
        assert power_basis([1.0, 2.0], 4, name="x2").column_labels == (
            "const", "x2", "x2^2", "x2^3")


class TestQuantileKnots:
    def test_median(self):
        np.testing.assert_allclose(quantile_knots([1, 2, 3, 4, 5], 1), [3.0])

    def test_empty(self):
        assert quantile_knots([1, 2, 3, 4], 0).size == 0

    def test_uniform_sample(self):
        rng = np.random.default_rng(3)
        v = rng.random(1000)
        knots = quantile_knots(v, 3)
        # sort-based oracle with linear interpolation at levels k/4
        srt = np.sort(v)
        pos = (len(v) - 1) * np.array([0.25, 0.5, 0.75])
        lo = np.floor(pos).astype(int)
        oracle = srt[lo] + (pos - lo) * (srt[lo + 1] - srt[lo])
        np.testing.assert_allclose(knots, oracle, rtol=1e-12)
        np.testing.assert_allclose(knots, [0.25, 0.5, 0.75], atol=0.05)

    def test_monotone_inside_range(self):
        rng = np.random.default_rng(4)
        v = rng.normal(size=500)
        knots = quantile_knots(v, 7)
        assert np.all(np.diff(knots) >= 0)
        assert knots.min() >= v.min() and knots.max() <= v.max()

    def test_errors(self):
        with pytest.raises(ValueError):
            quantile_knots([1.0, 2.0], -1)
        with pytest.raises(ValueError):
            quantile_knots(np.ones(10), 2)
        with pytest.raises(ValueError):
            quantile_knots([1.0, 2.0], 2)


class TestSplineBasis:
    def test_no_knots_equals_power(self):
        v = np.array([-2.0, -1.0, 0.0, 1.0, 3.0])
        np.testing.assert_array_equal(spline_basis(v, 4, 3, []).values,
                                      power_basis(v, 4).values)

    def test_truncated_term_by_hand(self):
        b = spline_basis([0.0, 2.0], a=5, s=3, knots=[1.0])
        np.testing.assert_allclose(b.values[0], [1, 0, 0, 0, 0])
        np.testing.assert_allclose(b.values[1], [1, 2, 4, 8, 1])

    def test_pointwise_oracle(self):
        rng = np.random.default_rng(11)
        v = rng.uniform(-2.0, 2.0, 200)
        knots = quantile_knots(v, 2)
        b = spline_basis(v, 6, 3, knots).values
        for i, x in enumerate(v):
            row = [1.0, x, x ** 2, x ** 3]
            for t in knots:
                row.append((x - t) ** 3 if x > t else 0.0)
            np.testing.assert_allclose(b[i], row, rtol=1e-14)

    def test_knot_count_mismatch(self):
        with pytest.raises(ValueError):
            spline_basis([0.0, 1.0, 2.0], a=6, s=3, knots=[0.5])

    def test_decreasing_knots_rejected(self):
        with pytest.raises(ValueError):
            spline_basis(np.linspace(0, 1, 9), a=6, s=3, knots=[0.7, 0.3])


class TestBasisSpec:
    def test_spline_needs_room_for_order(self):
        with pytest.raises(ValueError):
            BasisSpec("spline", 3, spline_order=3)
        assert BasisSpec("spline", 4).n_knots == 0
        assert BasisSpec("spline", 9).n_knots == 5

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            BasisSpec("fourier", 4)


class TestRestrictedInteractionOrder:
    @pytest.mark.parametrize("a,expected", [(4, 4), (6, 5), (9, 7)])
    def test_reference_values(self, a, expected):
        assert restricted_interaction_order(a) == expected

    @given(st.integers(min_value=1, max_value=80))
    def test_never_exceeds_input(self, a):
        assert 1 <= restricted_interaction_order(a) <= a

    def test_nondecreasing(self):
        vals = [restricted_interaction_order(a) for a in range(1, 80)]
        assert all(x <= y for x, y in zip(vals, vals[1:]))


class TestTensorInteractions:
    def test_single_product(self):
        x = np.array([1.0, 2.0, 3.0])
        y = np.array([4.0, 5.0, 6.0])
        b1 = power_basis(x, 2, name="x")
        b2 = power_basis(y, 2, name="y")
        out = tensor_interactions(b1, b2)
        np.testing.assert_allclose(out, (x * y)[:, None])
        assert tensor_interaction_labels(b1, b2) == ("x*y",)

    def test_restricted_count_for_table_row(self):
        # two 5-term bases give the 16 interaction columns implied by the
        # k_n = 2 a - 1 + (a_bar - 1)^2 progression at a = 6
        rng = np.random.default_rng(0)
        b1 = power_basis(rng.random(30), 5)
        b2 = power_basis(rng.random(30), 5)
        assert tensor_interactions(b1, b2).shape == (30, 16)

    def test_nested_loop_oracle(self):
        rng = np.random.default_rng(5)
        b1 = power_basis(rng.random(20), 3, name="u")
        b2 = power_basis(rng.random(20), 4, name="w")
        out = tensor_interactions(b1, b2)
        assert out.shape == (20, 6)
        k = 0
        for i in range(1, 3):
            for j in range(1, 4):
                np.testing.assert_allclose(out[:, k],
                                           b1.values[:, i] * b2.values[:, j])
                k += 1

    def test_row_mismatch(self):
        with pytest.raises(DesignError):
            tensor_interactions(power_basis([1.0, 2.0], 2),
                                power_basis([1.0, 2.0, 3.0], 2))


class TestBasisMatrix:
    def test_requires_constant_first(self):
        with pytest.raises(ValueError):
            BasisMatrix(np.array([[2.0, 1.0]]), ("a", "b"))

    def test_requires_finite(self):
        with pytest.raises(ValueError):
            BasisMatrix(np.array([[1.0, np.inf]]), ("a", "b"))
