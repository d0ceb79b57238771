from itertools import product

import pytest

from qrea.braid import (BRAID_IDS, StandardFormError, build_rhat, build_rhat_eps, check_standard_form, minor_coeffs,
                        table_violations, verify_braid)
from qrea.combinatorics import preceq, subsets
from qrea.scalars import ONE, QDIFF, QINV, ZERO, q_pow


def _idx(n, a, b):
    return (a - 1) * n + (b - 1)


def _image(op, n, i, j):
    """Column of e_i (x) e_j as {(a, b): coefficient}."""
    col = _idx(n, i, j)
    out = {}
    for (r, c), v in op.entries.items():
        if c == col:
            out[(r // n + 1, r % n + 1)] = v
    return out


def test_rhat_n2_action():
    r = build_rhat(2)
    assert _image(r, 2, 1, 1) == {(1, 1): QINV}
    assert _image(r, 2, 1, 2) == {(2, 1): ONE}
    assert _image(r, 2, 2, 1) == {(1, 2): ONE, (2, 1): QDIFF}
    assert _image(r, 2, 2, 2) == {(2, 2): QINV}


def test_rhat_n1():
    assert build_rhat(1).entries == {(0, 0): QINV}


def test_eps_variants():
    assert build_rhat_eps(3, (1, 1, 1)).entries == build_rhat(3).entries
    flipped = build_rhat_eps(2, (1, -1))
    assert _image(flipped, 2, 2, 1) == {(1, 2): ONE, (2, 1): -QDIFF}
    assert _image(flipped, 2, 1, 1) == {(1, 1): QINV}
    cut = build_rhat_eps(2, (1, 0))
    assert _image(cut, 2, 2, 1) == {(1, 2): ONE}


def test_standard_form():
    assert check_standard_form((1, -1, 0)) == 2
    with pytest.raises(StandardFormError):
        check_standard_form((0, 1))
    with pytest.raises(StandardFormError):
        check_standard_form((2, 1))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("identity", ["braid", "hecke", "selfadjoint"])
def test_braid_identities_exact(identity, n):
    rep = verify_braid(identity, n)
    assert rep["passed"], rep["witness"]


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("identity", ["coeff-support", "coeff-diagonal", "coeff-inverse"])
def test_coefficient_identities(identity, n):
    assert verify_braid(identity, n)["passed"]


def test_verify_braid_bounds():
    with pytest.raises(ValueError):
        verify_braid("braid", 9)
    with pytest.raises(ValueError):
        verify_braid("nonsense", 2)
    assert set(BRAID_IDS) >= {"braid", "hecke", "selfadjoint"}


def test_rank_one_table_is_rhat():
    n = 3
    r = build_rhat(n)
    t = minor_coeffs(n, 1, 1)
    for i, j, ip, jp in product(range(1, n + 1), repeat=4):
        want = r.entries.get((_idx(n, ip, j), _idx(n, i, jp)), ZERO)
        assert t.get((i,), (j,), (ip,), (jp,)) == want


def test_n3_diagonal_value():
    t = minor_coeffs(3, 2, 2)
    assert t.get((1, 2), (1, 2), (2, 3), (2, 3)) == q_pow(-1)
    assert t.get_inv((1, 2), (1, 2), (2, 3), (2, 3)) == q_pow(1)


def test_support_condition_n3():
    n = 3
    for k, l in product(range(1, n + 1), repeat=2):
        t = minor_coeffs(n, k, l)
        assert table_violations(t) == []
        for (i, j, ip, jp), v in t.coeffs.items():
            if v:
                assert preceq(j, i) and preceq(jp, ip)


def test_dump_is_sorted_and_stable():
    a = minor_coeffs(2, 1, 1).dump()
    assert a == minor_coeffs(2, 1, 1).dump()
    lines = a.splitlines()[1:]
    assert lines and all(line.split()[0] in ("R", "Rinv") for line in lines)


def test_table_argument_range():
    with pytest.raises(ValueError):
        minor_coeffs(2, 3, 1)
    assert len(subsets(4, 2)) == 6
