"""Truncated Taylor arithmetic against an independent symbolic oracle.

The frozen numbers below were produced once with sympy (exact differentiation,
then float evaluation) for

    f = exp(x1*y2)*sin(y1) + sqrt(3 + x2^2*y1) - atan(y2/x2)
        + ln(2 + x1^2) / (1 + y1^2*y2)

at (x1, x2, y1, y2) = (0.3, -0.7, 0.4, 1.1). They are deliberately pasted as
literals so the test never depends on the code under test.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from spraylab import jets
from spraylab.errors import DomainError, OrderError

P = (0.3, -0.7, 0.4, 1.1)

FROZEN = {
    (0, 0, 0, 0): 3.9603118026259194,
    (1, 0, 0, 0): 0.8399521385397535,
    (0, 0, 1, 0): 0.9491472410922632,
    (0, 1, 0, 1): -0.2491349480968862,
    (0, 0, 2, 0): -1.0228336761061727,
    (1, 0, 1, 1): 1.5875923694701903,
    (0, 0, 0, 4): -1.5835419772107686,
}


def fancy(v):
    x1, x2, y1, y2 = v
    num = jets.ln(2.0 + x1 * x1)
    den = 1.0 + y1 * y1 * y2
    return (
        jets.exp(x1 * y2) * jets.sin(y1)
        + jets.sqrt(3.0 + x2 * x2 * y1)
        - jets.atan(y2 / x2)
        + num / den
    )


def test_partials_match_frozen_symbolic_values() -> None:
    for alpha, want in FROZEN.items():
        got = jets.partial(fancy, P, alpha)
        assert got == pytest.approx(want, rel=1e-11, abs=1e-11), alpha


def test_lift_carries_all_orders_at_once() -> None:
    jet = jets.lift(fancy, P, order=4)
    for alpha, want in FROZEN.items():
        assert jet.partial(alpha) == pytest.approx(want, rel=1e-11, abs=1e-11)


def test_polynomial_lift_is_exact() -> None:
    def poly(v):
        x1, x2, y1, y2 = v
        return 2.0 * x1 * x1 * y2 - 3.0 * x2 * y1 * y1 * y1 + 0.5

    jet = jets.lift(poly, (0.1, 0.2, -0.3, 0.4), order=4)
    # d^2/dx1^2 d/dy2 -> 4, exact
    assert jet.partial((2, 0, 0, 1)) == pytest.approx(4.0, abs=1e-13)
    assert jet.partial((0, 1, 3, 0)) == pytest.approx(-18.0, abs=1e-13)
    assert jet.partial((0, 0, 4, 0)) == 0.0


def test_fd_partial_agrees_with_jets_on_smooth_field() -> None:
    rng = np.random.default_rng(7)
    for _ in range(32):
        p = tuple(rng.uniform(0.2, 0.8, size=4) * np.array([1, -1, 1, 1]))
        for alpha in [(1, 0, 0, 0), (0, 0, 2, 0), (1, 0, 1, 0), (0, 1, 1, 1)]:
            exact = jets.partial(fancy, p, alpha)
            fd = jets.fd_partial(fancy, p, alpha)
            assert abs(fd - exact) <= max(1e-5, 1e-4 * abs(exact))


def test_fd_partial_zero_order_is_plain_evaluation() -> None:
    assert jets.fd_partial(fancy, P, (0, 0, 0, 0)) == pytest.approx(
        FROZEN[(0, 0, 0, 0)], rel=1e-12
    )


def test_euler_check_homogeneous_degree_two() -> None:
    # G = y2*sqrt(y1^2+y2^2)/2 is positively 2-homogeneous in y.
    def g(v):
        _, _, y1, y2 = v
        return 0.5 * y2 * jets.sqrt(y1 * y1 + y2 * y2)

    assert jets.euler_check(g, (0.0, 0.0, 3.0, 4.0), degree=2, group="y") < 1e-12
    # and the value itself: 0.5*4*5 = 10
    assert jets.lift(g, (0.0, 0.0, 3.0, 4.0), 0).value == pytest.approx(10.0)
    # wrong degree leaves |2g - 3g| = |g| = 10
    assert jets.euler_check(g, (0.0, 0.0, 3.0, 4.0), degree=3, group="y") == pytest.approx(10.0)


def test_product_and_quotient_rules_random_sweep() -> None:
    rng = np.random.default_rng(11)

    def u(v):
        return v[0] * v[2] + 2.0 * v[3] + 0.7

    def w(v):
        return v[1] * v[1] + v[2] * v[3] + 1.3

    for _ in range(16):
        p = tuple(rng.uniform(-0.8, 0.8, size=4))
        ju = jets.lift(u, p, 3)
        jw = jets.lift(w, p, 3)
        prod = ju * jw
        quot = ju / jw
        for i in range(4):
            a = tuple(1 if k == i else 0 for k in range(4))
            du, dw = ju.partial(a), jw.partial(a)
            assert prod.partial(a) == pytest.approx(du * jw.value + ju.value * dw, rel=1e-12, abs=1e-12)
            assert quot.partial(a) == pytest.approx(
                (du * jw.value - ju.value * dw) / jw.value**2, rel=1e-11, abs=1e-11
            )


def test_mixed_order_arithmetic_truncates() -> None:
    sp4 = jets.space(4, 4)
    sp2 = jets.space(4, 2)
    a = sp4.variable(0, P)
    b = sp2.variable(2, P)
    out = a * b
    assert out.order == 2


def test_graded_lex_prefix_property() -> None:
    lo = jets.space(4, 3)
    hi = jets.space(4, 5)
    assert hi.alphas[: lo.T] == lo.alphas


def test_diff_consumes_order_and_raises_at_zero() -> None:
    jet = jets.lift(fancy, P, 2)
    d1 = jet.diff(0)
    assert d1.order == 1
    assert d1.value == pytest.approx(FROZEN[(1, 0, 0, 0)], rel=1e-11)
    d2 = d1.diff(2)
    assert d2.order == 0
    with pytest.raises(OrderError):
        d2.diff(0)


def test_domain_errors() -> None:
    sp = jets.space(2, 3)
    c = (0.0, 0.0)
    x = sp.variable(0, c)
    with pytest.raises(DomainError):
        jets.sqrt(x)  # value part 0
    with pytest.raises(DomainError):
        jets.ln(x - 1.0)  # value part -1
    with pytest.raises(DomainError):
        (x + 1.0) / x  # divide by value part 0
    with pytest.raises(DomainError):
        jets.absval(x)  # |.| straddling zero


def test_abs_takes_the_sign_of_the_value_part() -> None:
    def f(v):
        return jets.absval(v[0] - v[1])

    jet = jets.lift(f, (0.3, 0.5), 1)
    assert jet.value == pytest.approx(0.2)
    assert jet.partial((1, 0)) == pytest.approx(-1.0)


def test_integer_powers_work_at_zero_value_part() -> None:
    def f(v):
        return jets.powi(v[1], 2)

    jet = jets.lift(f, (0.5, 0.0), 2)
    assert jet.value == 0.0
    assert jet.partial((0, 2)) == pytest.approx(2.0)


def test_real_power_matches_exp_ln_route() -> None:
    def direct(v):
        return jets.pow_real(v[0], 1.7)

    def routed(v):
        return jets.exp(1.7 * jets.ln(v[0]))

    a = jets.lift(direct, (1.9, 0.2), 4)
    b = jets.lift(routed, (1.9, 0.2), 4)
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-13)


def test_jet_matrix_inverse_roundtrip() -> None:
    rng = np.random.default_rng(3)
    sp = jets.space(4, 4)
    for _ in range(5):
        center = tuple(rng.uniform(-0.5, 0.5, size=4))
        vs = [sp.variable(i, center) for i in range(4)]
        m = np.empty((2, 2), dtype=object)
        m[0, 0] = 2.0 + vs[0] * vs[2]
        m[0, 1] = 0.3 * vs[3] + vs[1]
        m[1, 0] = vs[0] - 0.5 * vs[2] * vs[3]
        m[1, 1] = 1.5 + jets.sin(vs[1])
        w = jets.jet_matrix_inverse(m)
        eye = m @ w  # object-dtype matmul multiplies and adds jets
        for i in range(2):
            for j in range(2):
                want = 1.0 if i == j else 0.0
                got = eye[i, j]
                assert abs(got.value - want) < 1e-12
                # every derivative coefficient of M @ M^{-1} must vanish
                assert np.max(np.abs(got.coeffs[1:])) < 1e-11


def test_from_partials_reconstructs_jet() -> None:
    sp = jets.space(2, 2)
    partials = {(0, 0): 2.0, (1, 0): 3.0, (0, 1): -1.0, (2, 0): 4.0, (1, 1): 0.5, (0, 2): 0.0}
    jet = sp.from_partials((0.1, 0.2), partials)
    for a, v in partials.items():
        assert jet.partial(a) == pytest.approx(v)
