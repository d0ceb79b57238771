import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qrea.scalars import ONE, Q, QDIFF, QINV, ZERO, ExactQ, I_UNIT, as_exact, exact_sum, q_pow


def test_inverse_monomials_cancel():
    assert Q * QINV == ONE


def test_difference_times_q():
    assert (QINV - Q) * Q == ONE - Q * Q
    assert QDIFF * Q == ONE - q_pow(2)


def test_star_conjugates_gaussian_coefficients():
    x = I_UNIT * Q
    assert x.star() == -(I_UNIT * Q)
    assert (Q + 3).star() == Q + 3


def test_eval_examples():
    assert q_pow(2).eval(0.5) == pytest.approx(0.25)
    assert (QINV - Q).eval(0.5) == pytest.approx(1.5)


def test_eval_rejects_q_outside_unit_interval():
    with pytest.raises(ValueError):
        Q.eval(1.0)


def test_floats_are_refused():
    with pytest.raises(TypeError):
        ExactQ.const(0.5)
    assert as_exact(0.5) is NotImplemented


def test_negative_powers_only_for_unit_monomials():
    assert q_pow(3, -1) ** -2 == q_pow(-6)
    with pytest.raises(ValueError):
        (ONE + Q) ** -1


def test_zero_is_falsy_and_normalized():
    assert not (Q - Q)
    assert (Q - Q) == ZERO
    assert ExactQ({0: 0, 1: Fraction(0)}) == ZERO
    assert exact_sum([Q, -Q, ONE]) == ONE


def _random_exact(rng: random.Random) -> ExactQ:
    re_t = {rng.randint(-4, 4): Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(rng.randint(0, 4))}
    im_t = {rng.randint(-4, 4): Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(rng.randint(0, 2))}
    return ExactQ(re_t, im_t)


@pytest.mark.parametrize("q0", [0.3, 0.5, 0.9])
def test_eval_is_a_ring_homomorphism(q0):
    rng = random.Random(7)
    for _ in range(1000):
        a, b = _random_exact(rng), _random_exact(rng)
        for exact, numeric in ((a + b, a.eval(q0) + b.eval(q0)), (a * b, a.eval(q0) * b.eval(q0))):
            got = exact.eval(q0)
            assert abs(got - numeric) <= 1e-14 * max(1.0, abs(numeric), abs(a.eval(q0)) * abs(b.eval(q0)))


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(-6, 6), st.fractions(max_denominator=50), max_size=5),
       st.dictionaries(st.integers(-6, 6), st.fractions(max_denominator=50), max_size=3))
def test_text_round_trip(re_t, im_t):
    x = ExactQ(re_t, im_t)
    assert ExactQ.parse(x.to_str()) == x


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(-5, 5), st.integers(-20, 20), max_size=4),
       st.dictionaries(st.integers(-5, 5), st.integers(-20, 20), max_size=4),
       st.dictionaries(st.integers(-5, 5), st.integers(-20, 20), max_size=4))
def test_ring_axioms(a, b, c):
    a, b, c = ExactQ(a), ExactQ(b), ExactQ(c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert (a * b).star() == a.star() * b.star()
