"""Unit tests for the ILP modeling layer."""

import numpy as np
import pytest

from pymmwave.enums import Sense
from pymmwave.exceptions import IlpInputError
from pymmwave.modeling import Constraint, IlpBuilder, IlpInstance, default_strict_epsilon, to_lp_text


@pytest.fixture
def knapsack():
    """Three variables, one cover row and one strict budget row."""
    builder = IlpBuilder()
    builder.add_vars(["a", "b", "c"], [3.0, 2.0, 4.0])
    builder.subject_to({0: 1, 1: 1, 2: 1}, ">=", 2, name="cover")
    builder.subject_to({0: 2, 1: 3, 2: 1}, "<", 5, name="budget")
    return builder.build()


class TestConstraint:
    """Tests for the Constraint class."""

    def test_zero_coefficients_dropped(self):
        """Test that zero entries are removed from the row."""
        row = Constraint({0: 1.0, 1: 0.0}, Sense.LE, 1.0)
        assert row.coeffs == {0: 1.0}

    def test_sense_from_string(self):
        """Test that string senses are normalized."""
        assert Constraint({0: 1}, ">=", 1).sense == Sense.GE

    def test_unknown_sense(self):
        """Test that unknown senses raise IlpInputError."""
        with pytest.raises(IlpInputError, match="sense"):
            Constraint({0: 1}, "==", 1)

    def test_non_finite_values(self):
        """Test that infinite coefficients and right-hand sides are rejected."""
        with pytest.raises(IlpInputError):
            Constraint({0: float("inf")}, Sense.LE, 1)
        with pytest.raises(IlpInputError):
            Constraint({0: 1}, Sense.LE, float("nan"))

    def test_strict_default_epsilon(self):
        """Test the default slack of strict rows."""
        assert Constraint({0: 1}, Sense.LT, 0.5).epsilon == pytest.approx(1e-6)
        assert Constraint({0: 1}, Sense.LT, 200.0).epsilon == pytest.approx(2e-4)
        assert default_strict_epsilon(-3.0) == pytest.approx(3e-6)

    def test_strict_explicit_epsilon(self):
        """Test that an explicit slack must be positive."""
        assert Constraint({0: 1}, Sense.LT, 1, epsilon=0.25).epsilon == 0.25
        with pytest.raises(IlpInputError, match="epsilon"):
            Constraint({0: 1}, Sense.LT, 1, epsilon=0.0)

    def test_as_le(self):
        """Test the rewrite of each sense as a <= row."""
        assert Constraint({0: 2}, Sense.GE, 1).as_le() == ({0: -2.0}, -1.0)
        assert Constraint({0: 2}, Sense.LT, 1, epsilon=0.5).as_le() == ({0: 2.0}, 0.5)

    def test_strict_satisfaction(self):
        """Test that equality fails a strict row."""
        row = Constraint({0: 1, 1: 1}, Sense.LT, 1)
        assert row.satisfied([0, 0])
        assert not row.satisfied([1, 0])


class TestIlpInstance:
    """Tests for IlpInstance validation and queries."""

    def test_feasibility(self, knapsack):
        """Test is_feasible on feasible and infeasible assignments."""
        assert knapsack.is_feasible([0, 1, 1])
        assert not knapsack.is_feasible([1, 1, 0])
        assert not knapsack.is_feasible([0.5, 1, 1])

    def test_violations_named(self, knapsack):
        """Test that violated rows are reported by name."""
        assert knapsack.violations([0, 0, 0]) == ["cover"]
        assert knapsack.violations([1, 1, 1]) == ["budget"]

    def test_violations_of_fixed(self):
        """Test that broken fixings are reported."""
        instance = IlpInstance(2, [1, 1], (), fixed={0: 1}, var_names=("p", "q"))
        assert instance.violations([0, 0]) == ["fixed p=1"]

    def test_objective_value(self, knapsack):
        """Test the objective of an assignment."""
        assert knapsack.objective_value([0, 1, 1]) == 6.0

    def test_sparse_le(self, knapsack):
        """Test the triplet rewrite of all rows as a <= system."""
        rows, cols, values, b = knapsack.sparse_le()
        a = np.zeros((2, 3))
        a[rows, cols] = values
        np.testing.assert_allclose(a, [[-1, -1, -1], [2, 3, 1]])
        np.testing.assert_allclose(b, [-2, 5 - 5e-6])
        assert rows.tolist() == sorted(rows.tolist())

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"n_vars": 2, "objective": [1.0]}, "objective"),
            ({"n_vars": 1, "objective": [1.0], "constraints": (Constraint({3: 1}, Sense.LE, 1),)}, "unknown variable"),
            ({"n_vars": 1, "objective": [1.0], "fixed": {0: 2}}, "non-binary"),
            ({"n_vars": 1, "objective": [1.0], "fixed": {5: 1}}, "unknown variable"),
            ({"n_vars": 2, "objective": [1.0, 1.0], "var_names": ("a",)}, "names"),
        ],
    )
    def test_invalid_instances(self, kwargs, message):
        """Test that malformed instances raise IlpInputError."""
        kwargs.setdefault("constraints", ())
        with pytest.raises(IlpInputError, match=message):
            IlpInstance(**kwargs)

    def test_default_names(self):
        """Test generated variable names."""
        assert IlpInstance(2, [0, 0], ()).name_of(1) == "v1"


class TestIlpBuilder:
    """Tests for IlpBuilder."""

    def test_minimize_by_mapping(self):
        """Test partial objective updates."""
        builder = IlpBuilder()
        builder.add_vars(["a", "b"])
        instance = builder.minimize({1: 2.5}).build()
        assert instance.objective.tolist() == [0.0, 2.5]

    def test_minimize_unknown_variable(self):
        """Test that objective entries must name declared variables."""
        builder = IlpBuilder()
        builder.add_var("a")
        with pytest.raises(IlpInputError):
            builder.minimize({3: 1.0})

    def test_cost_count_mismatch(self):
        """Test that add_vars needs one cost per name."""
        with pytest.raises(IlpInputError):
            IlpBuilder().add_vars(["a", "b"], [1.0])

    def test_fix(self):
        """Test that fixings reach the instance."""
        builder = IlpBuilder()
        builder.add_var("a")
        assert builder.fix(0, 1).build().fixed == {0: 1}


class TestLpText:
    """Tests for the LP text rendering."""

    def test_render(self, knapsack):
        """Test the rendered sections and strict-row slack."""
        text = to_lp_text(knapsack)
        assert text.startswith("minimize\n obj: 3 a + 2 b + 4 c\n")
        assert " cover: 1 a + 1 b + 1 c >= 2" in text
        assert " budget: 2 a + 3 b + 1 c <= 4.999995" in text
        assert " 0 <= a <= 1" in text
        assert text.endswith("end\n")

    def test_negative_terms_and_fixings(self):
        """Test signs and fixed bounds."""
        builder = IlpBuilder()
        builder.add_vars(["a", "b"], [1.0, -2.0])
        builder.subject_to({0: 1, 1: -1}, "<=", 0)
        text = to_lp_text(builder.fix(1, 0).build())
        assert " obj: 1 a - 2 b" in text
        assert " c1: 1 a - 1 b <= 0" in text
        assert " b = 0" in text
