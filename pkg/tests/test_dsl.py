from __future__ import annotations

import pytest

from spraylab import dsl, jets
from spraylab.errors import (
    ArityError,
    DimensionError,
    DomainError,
    ParamError,
    SpraySyntaxError,
)

EX_SPRAY = """\
# rotational family on the punctured plane
dim 2
const r = 1
spray G1 = (1/(2*r)) * y2 * sqrt(y1^2 + y2^2)
spray G2 = -(1/(2*r)) * y1 * sqrt(y1^2 + y2^2)
guard = y1^2 + y2^2 - 0.25
"""


def test_parse_spray_file_shape() -> None:
    pd = dsl.parse(EX_SPRAY, name="rot")
    assert pd.dim == 2
    assert pd.kind == "spray"
    assert len(pd.exprs) == 2
    assert len(pd.guards) == 1
    assert pd.name == "rot"
    assert pd.consts == {"r": 1.0}


def test_evaluate_known_value() -> None:
    pd = dsl.parse(EX_SPRAY)
    # G1 at y=(3,4): (1/2)*4*5 = 10
    assert dsl.evaluate(pd.exprs[0], [0.0, 0.0, 3.0, 4.0]) == pytest.approx(10.0)
    assert dsl.evaluate(pd.exprs[1], [0.0, 0.0, 3.0, 4.0]) == pytest.approx(-7.5)


def test_const_override_rescales() -> None:
    pd = dsl.parse(EX_SPRAY, consts={"r": 2.0})
    assert dsl.evaluate(pd.exprs[0], [0.0, 0.0, 3.0, 4.0]) == pytest.approx(5.0)
    with pytest.raises(ParamError):
        dsl.parse(EX_SPRAY, consts={"nope": 1.0})


def test_evaluate_over_jets_matches_floats() -> None:
    pd = dsl.parse(EX_SPRAY)
    p = (0.1, -0.2, 0.8, 0.6)
    direct = dsl.evaluate(pd.exprs[0], list(p))
    jet = jets.lift(lambda env: dsl.evaluate(pd.exprs[0], env), p, 3)
    assert jet.value == pytest.approx(direct, rel=1e-14)
    # degree-2 homogeneity visible through the jet
    ydir = p[2] * jet.partial((0, 0, 1, 0)) + p[3] * jet.partial((0, 0, 0, 1))
    assert ydir == pytest.approx(2 * direct, rel=1e-12)


def test_precedence_and_associativity() -> None:
    pd = dsl.parse("dim 1\nspray G1 = -y1^2\n")
    assert dsl.evaluate(pd.exprs[0], [0.0, 3.0]) == pytest.approx(-9.0)
    pd = dsl.parse("dim 1\nspray G1 = y1 + 2^3^2 * 0 + (1 - 2 - 3) + 6/2/3*y1\n")
    # 2^3^2 parses right-assoc (=512) but is multiplied by 0; 6/2/3 = 1
    assert dsl.evaluate(pd.exprs[0], [0.0, 5.0]) == pytest.approx(5.0 - 4.0 + 5.0)
    pd = dsl.parse("dim 1\nspray G1 = 2^3^2 + 0*y1^2\n")
    assert dsl.evaluate(pd.exprs[0], [0.0, 1.0]) == pytest.approx(512.0)


def test_integer_power_at_zero_and_real_power_domain() -> None:
    pd = dsl.parse("dim 1\nspray G1 = y1^2\n")
    jet = jets.lift(lambda env: dsl.evaluate(pd.exprs[0], env), (0.3, 0.0), 2)
    assert jet.partial((0, 2)) == pytest.approx(2.0)
    pd = dsl.parse("dim 1\nspray G1 = y1^0.5 * y1^1.5\n")
    with pytest.raises(DomainError):
        jets.lift(lambda env: dsl.evaluate(pd.exprs[0], env), (0.0, -1.0), 1)


def test_syntax_error_reports_position() -> None:
    with pytest.raises(SpraySyntaxError) as err:
        dsl.parse("dim 2\nspray G1 = y1 + * y2\n")
    assert err.value.line == 2
    assert err.value.col > 0


def test_header_and_statement_validation() -> None:
    with pytest.raises(SpraySyntaxError):
        dsl.parse("spray G1 = y1\n")  # missing header
    with pytest.raises(SpraySyntaxError):
        dsl.parse("dim 2\nspray G1 = y1^2\n")  # G2 missing
    with pytest.raises(SpraySyntaxError):
        dsl.parse("dim 1\nspray G1 = y1^2\nspray G1 = y1^2\n")  # duplicate
    with pytest.raises(SpraySyntaxError):
        dsl.parse("dim 1\nspray G1 = y1^2\nmetric L = y1^2\n")  # mixed kinds


def test_dimension_error_for_out_of_range_variable() -> None:
    with pytest.raises(DimensionError):
        dsl.parse("dim 2\nspray G1 = y3^2\nspray G2 = 0\n")


def test_arity_error() -> None:
    with pytest.raises(ArityError):
        dsl.parse("dim 1\nspray G1 = sqrt(y1, y1)\n")


def test_unknown_identifier_is_a_syntax_error() -> None:
    with pytest.raises(SpraySyntaxError):
        dsl.parse("dim 1\nspray G1 = bogus * y1^2\n")


def test_pretty_round_trip() -> None:
    pd = dsl.parse(EX_SPRAY)
    text = dsl.pretty_problem(pd)
    again = dsl.parse(text)
    assert again.exprs == pd.exprs
    assert again.guards == pd.guards
    assert again.dim == pd.dim


def test_metric_kind() -> None:
    src = "dim 2\nmetric L = ((1 + x1^2 + x2^2)*(y1^2 + y2^2) - (x1*y1 + x2*y2)^2) / (1 + x1^2 + x2^2)^2\n"
    pd = dsl.parse(src)
    assert pd.kind == "metric"
    assert len(pd.exprs) == 1
    # at x=0 this is |y|^2
    assert dsl.evaluate(pd.exprs[0], [0.0, 0.0, 0.6, 0.8]) == pytest.approx(1.0)


def test_scientific_notation_and_comments() -> None:
    pd = dsl.parse("dim 1  # header comment\n# full line\nspray G1 = 2.5e-1 * y1^2\n")
    assert dsl.evaluate(pd.exprs[0], [0.0, 2.0]) == pytest.approx(1.0)
