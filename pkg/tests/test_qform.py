"""Exact quadratic-space arithmetic: golden values and algebraic laws."""

import numpy as np
import pytest

from genimm import qform
from genimm.qform import (CyclotomicEight, QuadraticSpace, SQRT2, WittClass,
                          brown, direct_sum, direct_sum_many, extend_q,
                          gauss_sum, is_split, p_minus, p_plus, q_table,
                          t_four, t_zero)

RNG = np.random.default_rng(20240811)


def random_space(dim, rng=RNG):
    """Random nonsingular pairing with a parity-consistent refinement."""
    while True:
        mat = rng.integers(0, 2, size=(dim, dim))
        mat = (mat + mat.T) % 2
        diag = rng.integers(0, 2, size=dim)
        mat[np.arange(dim), np.arange(dim)] = diag
        if qform._det_mod2(mat) == 1:
            break
    q = [int(mat[i, i] + 2 * rng.integers(0, 2)) % 4 for i in range(dim)]
    return QuadraticSpace(mat, q)


# ---------------------------------------------------------------------------
# cyclotomic ring


def test_zeta_powers_reduce():
    z = CyclotomicEight.zeta_power
    assert z(4) == -CyclotomicEight.one()
    assert z(8) == CyclotomicEight.one()
    assert z(7) == -z(3)


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == CyclotomicEight.from_int(2)


def test_ring_matches_complex_floats():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = CyclotomicEight(tuple(rng.integers(-5, 6, size=4)))
        b = CyclotomicEight(tuple(rng.integers(-5, 6, size=4)))
        assert np.isclose((a * b).complex(), a.complex() * b.complex())
        assert np.isclose((a + b).complex(), a.complex() + b.complex())
        assert np.isclose(a.conjugate().complex(), np.conj(a.complex()))


# ---------------------------------------------------------------------------
# construction validation


def test_rejects_singular_pairing():
    with pytest.raises(ValueError):
        QuadraticSpace([[0]], [0])
    with pytest.raises(ValueError):
        QuadraticSpace([[1, 1], [1, 1]], [1, 1])


def test_rejects_parity_violation():
    # q(e) must equal e.e mod 2
    with pytest.raises(ValueError):
        QuadraticSpace([[1]], [0])
    with pytest.raises(ValueError):
        QuadraticSpace([[0, 1], [1, 0]], [1, 0])


def test_rejects_asymmetric_pairing():
    with pytest.raises(ValueError):
        QuadraticSpace([[1, 1], [0, 1]], [1, 1])


# ---------------------------------------------------------------------------
# the quadratic extension


def test_extend_q_on_basis_vectors():
    s = random_space(5)
    for i in range(5):
        e = [0] * 5
        e[i] = 1
        assert extend_q(s, e) == s.basis_q[i]


def test_extend_q_order_independent_and_closed_form():
    # independent oracle: the closed form over the support
    rng = np.random.default_rng(11)
    for _ in range(30):
        dim = int(rng.integers(1, 7))
        s = random_space(dim, rng)
        mat = s.matrix()
        vec = rng.integers(0, 2, size=dim)
        support = np.nonzero(vec)[0]
        linear = sum(s.basis_q[i] for i in support)
        cross = sum(int(mat[i, j]) for k, i in enumerate(support)
                    for j in support[k + 1:])
        assert extend_q(s, vec) == (linear + 2 * cross) % 4


def test_quadratic_law_holds_on_all_pairs():
    s = random_space(4)
    mat = s.matrix()
    for x_bits in range(16):
        for y_bits in range(16):
            x = [(x_bits >> i) & 1 for i in range(4)]
            y = [(y_bits >> i) & 1 for i in range(4)]
            xy = [(a + b) % 2 for a, b in zip(x, y)]
            dot = int(np.array(x) @ mat @ np.array(y)) % 2
            assert extend_q(s, xy) == (extend_q(s, x) + extend_q(s, y)
                                       + 2 * dot) % 4


def test_q_table_matches_extend_q():
    s = random_space(6)
    table = q_table(s)
    for bits in range(64):
        vec = [(bits >> i) & 1 for i in range(6)]
        assert table[bits] == extend_q(s, vec)


# ---------------------------------------------------------------------------
# Gauss sums and the Brown invariant: golden table


def test_gauss_sum_p_plus_is_one_plus_i():
    assert gauss_sum(p_plus()) == CyclotomicEight((1, 0, 1, 0))


def test_brown_golden_table():
    assert brown(p_plus()) == 1
    assert brown(p_minus()) == 7
    assert brown(t_zero()) == 0
    assert brown(t_four()) == 4


def test_t4_offdiagonal_value():
    # q(b + c) = 2 + 2 + 2*1 = 6 = 2 mod 4
    assert extend_q(t_four(), [1, 1]) == 2


def test_gauss_sum_magnitude_exact():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = random_space(int(rng.integers(1, 8)), rng)
        g = gauss_sum(s)
        assert g.norm_squared() == CyclotomicEight.from_int(2 ** s.dim)


def test_brown_additive_under_direct_sum():
    rng = np.random.default_rng(9)
    for _ in range(25):
        a = random_space(int(rng.integers(1, 5)), rng)
        b = random_space(int(rng.integers(1, 5)), rng)
        assert brown(direct_sum(a, b)) == (brown(a) + brown(b)) % 8


def test_brown_parity_is_dimension_parity():
    rng = np.random.default_rng(13)
    for _ in range(25):
        s = random_space(int(rng.integers(1, 8)), rng)
        assert brown(s) % 2 == s.dim % 2


def test_eight_copies_of_p_plus_vanish():
    s = direct_sum_many([p_plus()] * 8)
    assert brown(s) == 0


def test_witt_relations():
    # 4 [P+] = [T4], [P+] + [P-] = 0, 8 [P+] = 0
    four = direct_sum_many([p_plus()] * 4)
    assert brown(four) == brown(t_four())
    assert brown(direct_sum(p_plus(), p_minus())) == 0
    w = WittClass.of(p_plus())
    assert (w + w + w + w) == WittClass.of(t_four())
    assert sum([w] * 8, WittClass(0)) == WittClass(0)
    assert -WittClass.of(p_plus()) == WittClass.of(p_minus())


def test_witt_group_is_cyclic_of_order_eight():
    w = WittClass.of(p_plus())
    seen = set()
    acc = WittClass(0)
    for _ in range(8):
        seen.add(acc.value)
        acc = acc + w
    assert acc == WittClass(0)
    assert len(seen) == 8


# ---------------------------------------------------------------------------
# splitness


def test_t_zero_splits_t_four_does_not():
    assert is_split(t_zero())
    assert not is_split(t_four())
    assert not is_split(p_plus())  # odd dimension


def test_split_implies_brown_zero():
    rng = np.random.default_rng(17)
    found_split = 0
    for _ in range(60):
        s = random_space(int(rng.integers(1, 4)) * 2, rng)
        if is_split(s):
            found_split += 1
            assert brown(s) == 0
    assert found_split > 0


def test_t4_plus_t4_splits():
    # brown = 0 and a null half-dimensional subspace exists: (b1+b2, c1+c2)
    s = direct_sum(t_four(), t_four())
    assert brown(s) == 0
    assert is_split(s)


# ---------------------------------------------------------------------------
# JSON round trip


def test_json_round_trip():
    s = direct_sum(t_four(), p_plus())
    t = QuadraticSpace.from_json(s.to_json())
    assert t == s


def test_json_rejects_garbage():
    with pytest.raises(ValueError):
        QuadraticSpace.from_json("{not json")
    with pytest.raises(ValueError):
        QuadraticSpace.from_json('{"dim": 1, "pairing": [[1]]}')
    with pytest.raises(ValueError):
        QuadraticSpace.from_json(
            '{"dim": 2, "pairing": [[1]], "q": [1]}')
