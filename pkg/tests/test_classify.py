import itertools
import math

import numpy as np
import pytest

from qrea.classify import (ClassificationError, CentralCharacter, central_from_weight, character_hw,
                           enumerate_labels, hc_arguments, shape_family, shifted_permutation, validate_label,
                           weight_from_central, zsk_weight_formula)
from qrea.reps import central_values, character_rep
from qrea.shapes import (Shape, character_shape, eps_signature, identity_shape, reduce_to_big_cell, signature,
                         zsk_exponent)
from qrea.triangular import build_verma, is_epsilon_adapted


def standard_eps(m_max):
    for n in range(1, m_max + 1):
        for m in range(1, n + 1):
            for signs in itertools.product((1, -1), repeat=m):
                yield signs + (0,) * (n - m)


def adapted_grid(eps, bases=(0.0, 0.3), span=2):
    m = sum(1 for e in eps if e)
    for base in bases:
        for offs in itertools.product(range(span + 1), repeat=m):
            r = tuple(base + d for d in offs)
            if is_epsilon_adapted(eps, r):
                yield r


def brute_central(eps, r, q):
    sign, xs = 1, []
    for i, e in enumerate(eps):
        if e == 0:
            break
        sign *= e
        xs.append(sign * q ** (2 * r[i] + 2 * i))
    xs += [0.0] * (len(eps) - len(xs))
    return [sum(math.prod(c) for c in itertools.combinations(xs, k)) for k in range(1, len(eps) + 1)]


def test_hc_arguments_examples():
    assert np.allclose(hc_arguments((1, 1), (0.0, 0.0), 0.5), [1.0, 0.25])
    assert np.allclose(hc_arguments((1, -1, 0), (0.5, 0.0), 0.5), [0.5, -0.25, 0.0])
    assert central_from_weight((1, 1), (0.0, 0.0), 0.5).values == pytest.approx((1.25, 0.25))


@pytest.mark.parametrize("q", [0.3, 0.5])
def test_central_matches_elementary_symmetric(q):
    for eps in standard_eps(3):
        for r in adapted_grid(eps):
            assert np.allclose(central_from_weight(eps, r, q).values, brute_central(eps, r, q), atol=1e-14)


@pytest.mark.parametrize("q", [0.3, 0.5])
def test_round_trip_on_grid(q):
    count = 0
    for eps in standard_eps(3):
        sig = eps_signature(eps)
        for r in adapted_grid(eps):
            s = central_from_weight(eps, r, q)
            back = weight_from_central(s, sig, q)
            assert back.admissible
            assert np.allclose(central_from_weight(back.eps, back.r, q).values, s.values, atol=1e-10)
            fixed = weight_from_central(s, sig, q, eps=eps)
            assert fixed.eps == eps
            assert np.allclose(central_from_weight(eps, fixed.r, q).values, s.values, atol=1e-10)
            count += 1
    assert count >= 100


def test_round_trip_recovers_weight_when_unique():
    eps, r = (1, 1), (0.0, 0.0)
    back = weight_from_central(central_from_weight(eps, r, 0.5), (2, 0, 0), 0.5)
    assert back.eps == eps and back.r == pytest.approx(r)
    eps, r = (1, -1, 1), (0.3, 0.0, 1.0)
    back = weight_from_central(central_from_weight(eps, r, 0.5), eps_signature(eps), 0.5, eps=eps)
    assert back.r == pytest.approx(r)


def test_weight_from_central_errors():
    with pytest.raises(ClassificationError):
        weight_from_central((1.25, 0.25), (1, 1, 0), 0.5)
    with pytest.raises(ClassificationError):
        weight_from_central((0.0, 1.0), (2, 0, 0), 0.5)  # complex roots
    with pytest.raises(ClassificationError):
        weight_from_central((1.25, 0.25), (1, 1), 0.5)
    with pytest.raises(ClassificationError):
        CentralCharacter((float("nan"),))


def test_non_adapted_root_order_rejected():
    # roots 1 and 0.5 in either order: (0,-0.5) is not adapted and (0.5,...) needs the right shift
    s = central_from_weight((1, 1), (0.0, 0.0), 0.5)
    w = weight_from_central(s, (2, 0, 0), 0.5)
    assert w.r == pytest.approx((0.0, 0.0))
    with pytest.raises(ClassificationError):
        weight_from_central(central_from_weight((1, 1), (0.0, -0.5), 0.5), (2, 0, 0), 0.5, eps=(1, 1))


@pytest.mark.parametrize("q", [0.3, 0.5])
def test_shifted_permutations_preserve_central_values(q):
    for eps in standard_eps(3):
        m = sum(1 for e in eps if e)
        for r in adapted_grid(eps, bases=(0.0, 0.3, 0.45), span=1):
            base = central_from_weight(eps, r, q).values
            for i, j in itertools.combinations(range(1, m + 1), 2):
                w = shifted_permutation(eps, r, i, j)
                assert np.allclose(central_from_weight(w.eps, w.r, q).values, base, atol=1e-10)


def test_harish_chandra_against_verma_modules():
    for eps, r in [((1, 1), (0.0, 1.0)), ((1, -1), (0.2, 0.5)), ((-1, 1, 1), (0.0, 0.0, 1.0))]:
        from qrea.reps import verma_big_cell
        vm = verma_big_cell(eps, r, 6)
        assert np.allclose(central_values(vm), central_from_weight(eps, r, 0.5).values, atol=1e-9)


def test_zsk_weight_formula_matches_exponent():
    s = identity_shape(3)
    r = (0.0, 1.0, 2.0)
    for k in (1, 2, 3):
        assert zsk_weight_formula(s, r, k) == pytest.approx(zsk_exponent(s, r, k))
    assert zsk_weight_formula(s, r, 1) == pytest.approx(0.0)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("a,c", [(1.3, 1.0), (0.7, -2.0), (2.0, 0.5)])
def test_character_highest_weight(n, a, c):
    h = character_hw(n, 2, a, c, 0.5)
    rep = character_rep(n, 0, 1, a, c, [0.4])
    z = rep.dense
    assert h.z_kk == pytest.approx(z(2, 2)[0, 0].real)
    assert h.z_nn == pytest.approx(z(n, n)[0, 0].real)
    assert h.z_n1_abs == pytest.approx(abs(z(n, 1)[0, 0]))
    assert h.weight.admissible
    assert np.allclose(central_values(rep), central_from_weight(h.weight.eps, h.weight.r, 0.5).values,
                       atol=1e-12)


def test_character_hw_rejects_edge_k():
    with pytest.raises(ClassificationError):
        character_hw(3, 1, 1.0, 1.0, 0.5)
    with pytest.raises(ClassificationError):
        character_hw(3, 3, 1.0, 1.0, 0.5)


def test_validate_examples():
    s2 = identity_shape(2)
    ok = validate_label(s2, central_from_weight((1, 1), (0.0, 0.0), 0.5), 0.5)
    assert ok["valid"] and ok["signature"] == [2, 0, 0]
    bad = validate_label(s2, (0.0, 1.0), 0.5)
    assert not bad["valid"]
    zero = validate_label(character_shape(2, 2, 0), (0.0, 0.0), 0.5)
    assert zero["valid"] and zero["signature"] == [0, 0, 2]
    wrong_n = validate_label(s2, (1.0,), 0.5)
    assert not wrong_n["valid"]
    skew = Shape(2, (2, 1), (1j, -1j))
    assert not validate_label(skew, (0.0, 1.0), 0.5)["valid"]


def test_validate_antidiagonal():
    anti = character_shape(2, 0, 1)
    sig = signature(anti)
    assert sig == (1, 1, 0)
    eps = reduce_to_big_cell(anti).eps
    for r in adapted_grid(eps):
        assert validate_label(anti, central_from_weight(eps, r, 0.5), 0.5)["valid"]
    assert not validate_label(anti, central_from_weight((1, 1), (0.0, 0.0), 0.5), 0.5)["valid"]


def test_enumerate_small():
    one = list(enumerate_labels(1, 1, 0.5, limit=2))
    assert {l.shape.u for l in one} == {(1,), (-1,)}
    assert len(one) == 4
    zero = list(enumerate_labels(2, 0, 0.5, limit=3))
    assert len(zero) == 1 and zero[0].char.values == (0.0, 0.0)
    fam2 = {shape_family(l.shape) for r in (1, 2) for l in enumerate_labels(2, r, 0.5, limit=1, finite=True)}
    assert fam2 == {((1, 2), (0, 1)), ((1, 2), (1, 1)), ((2, 1), (1, 1))}


def test_enumerate_rank4_finite_families():
    labels = list(enumerate_labels(4, 4, 0.5, limit=1, finite=True))
    fams = {shape_family(l.shape) for l in labels}
    assert fams == {((1, 2, 3, 4), (1, 1, 1, 1)), ((4, 2, 3, 1), (1, 1, 1, 1)), ((4, 3, 2, 1), (1, 1, 1, 1))}


@pytest.mark.parametrize("n", [2, 3])
def test_every_enumerated_label_validates(n):
    for rank in range(n + 1):
        for lab in enumerate_labels(n, rank, 0.5, limit=2):
            verdict = validate_label(lab.shape, lab.char, 0.5)
            assert verdict["valid"], verdict
            assert tuple(verdict["signature"]) == signature(lab.shape)
            assert eps_signature(lab.weight.eps) == signature(lab.shape)


ADAPTED = [(eps, r) for eps in [(1, 1), (1, -1), (-1, 1), (-1, -1), (1, 1, 1), (1, -1, 1), (-1, -1, 1), (1, 1, -1)]
           for r in adapted_grid(eps, bases=(0.0, 0.3), span=1)]


@pytest.mark.parametrize("eps,r", ADAPTED)
def test_adapted_weights_give_positive_gram(eps, r):
    mod = build_verma(eps, r, 6, 0.5)
    assert mod.min_block_ratio() >= -1e-9


@pytest.mark.parametrize("eps,r", [((1, 1), (0.0, 0.1)), ((1, 1), (0.05, 0.0)), ((-1, 1), (0.0, 0.95)),
                                   ((1, 1, 1), (0.0, 1.0, 1.05)), ((1, -1, 1), (0.0, 0.0, -0.05)),
                                   ((1, 1, -1), (0.0, 0.95, 0.0))])
def test_non_adapted_weights_have_negative_gram(eps, r):
    assert not is_epsilon_adapted(eps, r)
    mod = build_verma(eps, r, 6, 0.5, require_positive=False)
    assert mod.min_block_ratio() < -1e-9
