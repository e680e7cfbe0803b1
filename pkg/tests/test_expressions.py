import numpy as np
import pytest

from quasieq.errors import ParseError
from quasieq.expressions import parse_expression


class TestParseAndEvaluate:
    def test_abs_objective(self):
        e = parse_expression("abs(x_1 - 0.5)")
        assert e({"x_1": 0.0}) == 0.5
        assert e({"x_1": 0.5}) == 0.0

    def test_piecewise_bound(self):
        e = parse_expression("piecewise(x_1 <= 1, -1.5*x_1 + 1.5, 0)")
        assert e({"x_1": 0.0}) == 1.5
        assert e({"x_1": 1.0}) == 0.0
        assert e({"x_1": 2.0}) == 0.0

    def test_trailing_operator_position(self):
        with pytest.raises(ParseError) as err:
            parse_expression("x_1 + ")
        assert err.value.position == 6  # 0-based; the token after the 6 input chars

    def test_power(self):
        e = parse_expression("power(x_1 - 1, 2)")
        assert e({"x_1": 3.0}) == 4.0

    def test_min_max_nary(self):
        e = parse_expression("max(x_1, 2*x_1 - 1, 0.25)")
        assert e({"x_1": 0.1}) == 0.25
        assert e({"x_1": 0.9}) == 0.9

    def test_unary_minus_and_parens(self):
        e = parse_expression("-(x_1 - 1) * 2")
        assert e({"x_1": 0.0}) == 2.0

    def test_division_constant_divisor(self):
        e = parse_expression("x_1 / 4")
        assert e({"x_1": 1.0}) == 0.25

    def test_division_nonconstant_divisor_rejected(self):
        with pytest.raises(ParseError):
            parse_expression("1 / x_1")

    def test_division_by_zero_rejected(self):
        with pytest.raises(ParseError):
            parse_expression("x_1 / (2 - 2)")

    def test_unknown_identifier(self):
        with pytest.raises(ParseError):
            parse_expression("foo(x_1)")
        with pytest.raises(ParseError):
            parse_expression("x_9 + 1")

    def test_power_exponent_must_be_integer_literal(self):
        with pytest.raises(ParseError):
            parse_expression("power(x_1, 0.5)")
        with pytest.raises(ParseError):
            parse_expression("power(x_1, x_1)")

    def test_comparison_only_in_piecewise(self):
        with pytest.raises(ParseError):
            parse_expression("x_1 <= 1")

    def test_variables_collected(self):
        e = parse_expression("x_1 + y_2 * 2")
        assert e.variables == {"x_1", "y_2"}


class TestBatchEvaluation:
    def test_batch_matches_scalar(self):
        texts = [
            "abs(x_1 - 0.5)",
            "piecewise(x_1 <= 1, -1.5*x_1 + 1.5, 0)",
            "max(x_1, 1 - x_1, power(x_1, 2))",
            "min(x_1, 0.7) - x_1 / 2",
        ]
        xs = np.linspace(0.0, 2.0, 41)
        for text in texts:
            e = parse_expression(text)
            batch = e.eval_batch({"x_1": xs})
            scalars = [e({"x_1": float(v)}) for v in xs]
            assert np.array_equal(np.asarray(batch, dtype=float), np.asarray(scalars))

    def test_mixed_scalar_array_env(self):
        e = parse_expression("y_1 - x_1")
        ys = np.array([0.0, 0.5, 1.0])
        out = e.eval_batch({"x_1": 0.25, "y_1": ys})
        assert np.array_equal(out, ys - 0.25)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "text",
        [
            "abs(x_1 - 0.5)",
            "piecewise(x_1 <= 1, -1.5*x_1 + 1.5, 0)",
            "max(0.3*x_1 + 0.1, -1.2*x_1 + 0.4, x_2)",
            "-(x_1 + 2) * (x_1 - 3) + x_1 / 8",
            "power(x_1 - 1, 3)",
        ],
    )
    def test_to_text_reparses_equal(self, text):
        e = parse_expression(text)
        again = parse_expression(e.to_text())
        assert again.ast == e.ast
        assert again.to_text() == e.to_text()
