import math

import numpy as np
import pytest

from hdw.expr import (Add, Const, DomainError, Mul, Neg, ParseError, Pow,
                      UnboundVariableError, Var, parse, simplify)


class TestParse:
    def test_power_over_division(self):
        e = parse("p1_1^2/2")
        assert e.eval({"p1_1": 4.0}) == 8.0

    def test_function_product(self):
        e = parse("sin(x1)*u1")
        assert isinstance(e, Mul)
        assert e.eval({"x1": math.pi / 2, "u1": 3.0}) == pytest.approx(3.0)

    def test_left_association(self):
        assert parse("8/4/2").eval({}) == 1.0
        assert parse("8-4-2").eval({}) == 2.0

    def test_precedence(self):
        assert parse("1 + 2*3").eval({}) == 7.0
        assert parse("2*3^2").eval({}) == 18.0
        assert parse("-2^2").eval({}) == -4.0

    def test_unary_minus(self):
        assert parse("--u1").eval({"u1": 5.0}) == 5.0
        assert parse("2*-u1").eval({"u1": 3.0}) == -6.0

    def test_whitespace_insignificant(self):
        a = parse("u1+p1_1 * 2")
        b = parse("u1 + p1_1*2")
        binding = {"u1": 0.5, "p1_1": -1.5}
        assert a.eval(binding) == b.eval(binding)

    def test_scientific_notation(self):
        assert parse("1.5e2").eval({}) == 150.0

    def test_negative_exponent(self):
        assert parse("u1^-2").eval({"u1": 2.0}) == 0.25

    def test_error_offset(self):
        with pytest.raises(ParseError) as info:
            parse("u1 + * 2")
        assert info.value.offset == 5
        assert info.value.expected  # non-empty expected-token set

    def test_error_on_fractional_exponent(self):
        with pytest.raises(ParseError) as info:
            parse("u1^2.5")
        assert "integer literal" in info.value.expected

    def test_error_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse("u1 2")

    def test_error_unknown_character(self):
        with pytest.raises(ParseError) as info:
            parse("u1 @ 2")
        assert info.value.offset == 3

    def test_error_unclosed_paren(self):
        with pytest.raises(ParseError):
            parse("sin(u1")


class TestEval:
    def test_square(self):
        assert parse("x1^2").eval({"x1": 3.0}) == 9.0

    def test_sin_zero(self):
        assert parse("sin(x1)").eval({"x1": 0.0}) == 0.0

    def test_product(self):
        assert parse("u1*p1_1").eval({"u1": 2.0, "p1_1": 5.0}) == 10.0

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariableError):
            parse("u1 + u2").eval({"u1": 1.0})

    @pytest.mark.parametrize("text,binding", [
        ("ln(x1)", {"x1": 0.0}),
        ("ln(x1)", {"x1": -1.0}),
        ("sqrt(x1)", {"x1": -4.0}),
        ("1/x1", {"x1": 0.0}),
        ("x1^0", {"x1": 0.0}),
    ])
    def test_domain_errors(self, text, binding):
        with pytest.raises(DomainError):
            parse(text).eval(binding)

    def test_eval_many_matches_scalar(self):
        e = parse("sin(x1)*u1 + exp(u1/4) - x1^3")
        rng = np.random.default_rng(7)
        xs = rng.uniform(-2.0, 2.0, 50)
        us = rng.uniform(-2.0, 2.0, 50)
        vec = e.eval_many({"x1": xs, "u1": us})
        for k in range(50):
            assert vec[k] == pytest.approx(e.eval({"x1": xs[k], "u1": us[k]}), abs=1e-14)


class TestDiff:
    def test_power_rule(self):
        assert str(parse("u1^2").diff("u1")) == "2*u1"

    def test_independent_variable(self):
        assert parse("u1").diff("x1") == Const(0.0)

    def test_product_with_function(self):
        assert str(parse("sin(u1)*p1_1").diff("p1_1")) == "sin(u1)"

    @pytest.mark.parametrize("text", [
        "u1^3 - 2*u1*p1_1 + x1",
        "sin(u1*x1) + cos(p1_1)",
        "exp(u1/2)*p1_1^2",
        "ln(2 + u1^2)",
        "sqrt(4 + p1_1^2)",
        "u1/(1 + p1_1^2)",
    ])
    def test_against_central_differences(self, text):
        e = parse(text)
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(10):
            binding = {name: float(rng.uniform(-2.0, 2.0)) for name in e.variables()}
            for var in e.variables():
                up = dict(binding, **{var: binding[var] + h})
                dn = dict(binding, **{var: binding[var] - h})
                fd = (e.eval(up) - e.eval(dn)) / (2 * h)
                exact = e.diff(var).eval(binding)
                assert abs(exact - fd) <= 1e-5 * (1 + abs(exact))


class TestSimplify:
    def test_annihilator(self):
        assert str(simplify(parse("u1*0 + x1"))) == "x1"

    def test_constant_fold(self):
        assert simplify(parse("2*3")) == Const(6.0)

    def test_identity_elimination(self):
        assert str(simplify(parse("(u1+0)^1"))) == "u1"

    def test_self_difference(self):
        assert simplify(parse("u1*p1_1 - u1*p1_1")) == Const(0.0)

    def test_commuted_product_cancels(self):
        u, p = Var("u1"), Var("p1_1")
        assert simplify(Add(Mul(u, p), Neg(Mul(p, u)))) == Const(0.0)

    def test_double_negation(self):
        assert simplify(Neg(Neg(Var("u1")))) == Var("u1")

    def test_constant_zero_denominator(self):
        with pytest.raises(DomainError):
            simplify(parse("u1/(2-2)"))

    def test_preserves_values(self):
        rng = np.random.default_rng(3)
        e = parse("(u1 + 0)*1 + 0*p1_1 + x1^1 + sin(0) + 2*3 - u1*p1_1^0")
        s = simplify(e)
        for _ in range(100):
            binding = {n: float(rng.uniform(-2.0, 2.0)) for n in ("u1", "p1_1", "x1")}
            assert s.eval(binding) == pytest.approx(e.eval(binding), rel=1e-12)


class TestPrintParseRoundTrip:
    @pytest.mark.parametrize("text", [
        "u1^2/2 + p1_1^2/2",
        "-(u1 + p1_1)*x1",
        "sin(x1)*cos(u1) - exp(p1_1)",
        "1/(1 + u1^2)",
        "u1 - (p1_1 - x1)",
        "2*(u1 + 1)^3",
        "sqrt(1 + ln(2 + u1^2))",
    ])
    def test_round_trip(self, text):
        e = parse(text)
        back = parse(str(e))
        rng = np.random.default_rng(5)
        for _ in range(100):
            binding = {n: float(rng.uniform(-2.0, 2.0)) for n in ("u1", "p1_1", "x1")}
            assert back.eval(binding) == pytest.approx(e.eval(binding), rel=1e-12)

    def test_round_trip_after_diff(self):
        e = parse("sin(u1*p1_1)/(1 + u1^2)").diff("u1")
        back = parse(str(e))
        binding = {"u1": 0.7, "p1_1": -1.3}
        assert back.eval(binding) == pytest.approx(e.eval(binding), rel=1e-12)


def test_operator_sugar():
    u = Var("u1")
    e = (u + 1) * 2 - u / 4
    assert e.eval({"u1": 4.0}) == 9.0
    assert (u ** 2).eval({"u1": 3.0}) == 9.0
    with pytest.raises(TypeError):
        u ** 0.5


def test_expressions_hashable_and_immutable():
    assert parse("u1 + 1") == parse("u1 + 1")
    assert hash(Pow(Var("u1"), 2)) == hash(Pow(Var("u1"), 2))
    with pytest.raises(AttributeError):
        Var("u1").name = "u2"
