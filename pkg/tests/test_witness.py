import math
from fractions import Fraction

import pytest

from hexperc.cube import (
    BitConfig,
    CubeFunction,
    expectation,
    random_event,
    random_monotone,
)
from hexperc.noisepoly import PreconditionError
from hexperc.witness import (
    box_event,
    check_dual_reimer,
    check_eq13_pointwise,
    check_lemma2,
    check_prop2,
    check_reimer,
    check_strong_bk,
    disjoint_indicator,
    disjoint_occurrence_table,
    is_witness,
    occurs_disjointly,
    witness_table,
)


def nonempty_monotone(n, seed):
    for s in range(seed, seed + 500):
        f = random_monotone(n, s)
        if 0 < expectation(f) < 1:
            return f
    raise AssertionError("no nondegenerate draw")


def test_witness_table_matches_naive():
    A = random_event(3, 11)
    W = witness_table(A)
    for I_mask in range(8):
        I = [i + 1 for i in range(3) if I_mask >> i & 1]
        for xm in range(8):
            assert W[I_mask, xm] == is_witness(BitConfig(3, xm), I, A)


def test_full_support_witness_is_membership():
    A = random_event(4, 2)
    W = witness_table(A)
    assert all(bool(W[15, xm]) == bool(A.values[xm]) for xm in range(16))


def test_empty_support_witness_means_sure_event():
    A = CubeFunction.constant(3, 1)
    assert is_witness(BitConfig(3, 0), [], A)
    B = random_event(3, 3)
    if any(v == 0 for v in B.values):
        assert not is_witness(BitConfig(3, 0), [], B)


def test_occurs_disjointly_diagonal_examples():
    # A depends on bit 1, B on bit 2: disjoint supports always available
    A = CubeFunction.from_callable(2, lambda x: x.get(1))
    B = CubeFunction.from_callable(2, lambda x: x.get(2))
    assert occurs_disjointly(A, B, BitConfig(2, 0b11), BitConfig(2, 0b11))
    assert not occurs_disjointly(A, B, BitConfig(2, 0b01), BitConfig(2, 0b01))


def test_box_event_within_intersection():
    A = nonempty_monotone(4, 5)
    B = nonempty_monotone(4, 25)
    box = box_event(A, B)
    for xm in range(16):
        if box.values[xm]:
            assert A.values[xm] and B.values[xm]


def test_disjoint_table_symmetry():
    A = random_event(3, 7)
    B = random_event(3, 8)
    tab = disjoint_occurrence_table(A, B)
    tab_swapped = disjoint_occurrence_table(B, A)
    assert (tab == tab_swapped.T).all()


def test_lemma2_on_monotone_pairs():
    for seed in range(10):
        A = nonempty_monotone(3, seed)
        B = nonempty_monotone(3, seed + 40)
        assert check_lemma2(A, B)


def test_lemma2_requires_monotone():
    A = CubeFunction(2, [1, 0, 0, 1])
    with pytest.raises(PreconditionError):
        check_lemma2(A, A)


def test_reimer_general_events():
    for seed in range(15):
        A = random_event(4, seed)
        B = random_event(4, seed + 60)
        assert check_reimer(A, B)


def test_strong_bk_and_dual():
    for seed in range(10):
        A = nonempty_monotone(3, seed + 3)
        B = nonempty_monotone(3, seed + 77)
        assert check_strong_bk(A, B)
        assert check_dual_reimer(A, B)
    for seed in range(10):
        A = random_event(3, seed)
        B = random_event(3, seed + 9)
        assert check_dual_reimer(A, B)


def test_eq13_pointwise():
    for seed in range(6):
        A = nonempty_monotone(3, seed + 1)
        B = nonempty_monotone(3, seed + 31)
        assert check_eq13_pointwise(A, B)


def test_prop2_report_gapped_pair():
    # scan for a pair with a strict gap so the interpolation is nontrivial
    for seed in range(200):
        A = nonempty_monotone(3, seed)
        B = nonempty_monotone(3, seed + 200)
        p_box = expectation(box_event(A, B))
        if p_box <= 0:
            continue
        if expectation(A * B.complement_event()) > p_box:
            break
    rep = check_prop2(A, B)
    assert rep.exact_ok
    assert rep.j_value >= 0
    assert rep.j_error <= 1e-9
    assert math.isclose(rep.j_value, rep.j_expected, abs_tol=1e-8)


def test_prop2_rejects_empty_box():
    A = CubeFunction.from_callable(1, lambda x: x.get(1))
    B = A  # A∘A on one bit is impossible
    with pytest.raises(PreconditionError):
        check_prop2(A, B)


def test_disjoint_indicator_diagonal_is_box():
    A = nonempty_monotone(3, 12)
    B = nonempty_monotone(3, 52)
    F = disjoint_indicator(A, B)
    box = box_event(A, B)
    for xm in range(8):
        assert F.at(xm, xm) == box.values[xm]
