import math
from fractions import Fraction

import pytest

from hexperc.cube import (
    BiFunction,
    CubeFunction,
    random_cube_function,
    random_event,
    random_monotone,
    expectation,
)
from hexperc.noisepoly import (
    PreconditionError,
    RationalPoly,
    check_holley_noised,
    check_interpolation_identity,
    check_lemma1,
    check_remark4,
    default_grid,
    interpolation_rhs,
    joint_poly,
    joint_poly_product,
    simpson,
    verify_prop1,
)


def brute_joint_expectation(F: BiFunction, t: Fraction) -> Fraction:
    """Independent oracle: direct sum over all (x, y) weighted by the flip
    count, E[F(ω, ω_t)] = 2^-n Σ_x Σ_y t^d (1-t)^(n-d) F(x, y)."""
    n = F.n
    size = 1 << n
    total = Fraction(0)
    for xm in range(size):
        for ym in range(size):
            d = bin(xm ^ ym).count("1")
            total += t**d * (1 - t) ** (n - d) * F.at(xm, ym)
    return total / size


def test_rational_poly_basics():
    p = RationalPoly([Fraction(1), Fraction(0), Fraction(3)])  # 1 + 3t^2
    q = p.derivative()
    assert q(Fraction(2)) == 12
    assert (p + q)(Fraction(1)) == 4 + 6
    assert p.scale(Fraction(1, 3))(Fraction(1)) == Fraction(4, 3)


@pytest.mark.parametrize("seed", range(8))
def test_joint_poly_matches_brute_force(seed):
    n = 2 + seed % 3
    f = random_cube_function(n, seed)
    g = random_cube_function(n, seed + 100)
    F = BiFunction.from_product(f, g)
    phi = joint_poly(F)
    for t in (Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1)):
        assert phi(t) == brute_joint_expectation(F, t)


def test_joint_poly_product_agrees_with_general_path():
    f = random_cube_function(4, 9)
    g = random_cube_function(4, 10)
    assert joint_poly_product(f, g) == joint_poly(BiFunction.from_product(f, g))


def test_joint_poly_general_bifunction():
    import random

    rng = random.Random("general-bifun")
    n = 3
    F = BiFunction(n, [Fraction(rng.randrange(0, 5)) for _ in range(1 << (2 * n))])
    phi = joint_poly(F)
    for t in (Fraction(1, 4), Fraction(2, 3)):
        assert phi(t) == brute_joint_expectation(F, t)


def test_interpolation_identity_random():
    import random

    rng = random.Random("interp")
    for trial in range(10):
        n = 2 + trial % 3
        F = BiFunction(n, [Fraction(rng.randrange(0, 4), 2) for _ in range(1 << (2 * n))])
        assert check_interpolation_identity(F)


def test_lemma1_small_dims():
    for n in (1, 2, 3, 4):
        assert check_lemma1(n)


def test_verify_prop1_exact_flags():
    f = random_cube_function(4, 2, lo=1)
    g = random_cube_function(4, 3, lo=1)
    rep = verify_prop1(f, g)
    assert rep.endpoint_start_exact and rep.endpoint_end_exact and rep.ode_exact
    assert rep.quad_checked and rep.quad_error < 1e-9
    # the quadrature reproduces log(E[fg]/(E[f]E[g]))
    lhs = float(expectation(f * g) / (expectation(f) * expectation(g)))
    assert math.isclose(math.exp(rep.quad_value), lhs, rel_tol=1e-8)


def test_verify_prop1_rejects_negative():
    f = CubeFunction(2, [Fraction(-1), 1, 1, 1])
    with pytest.raises(PreconditionError):
        verify_prop1(f, f)


def test_remark4_monotone_autocorrelation():
    for seed in range(6):
        f = random_cube_function(3, seed)
        assert check_remark4(f)


def test_remark4_grid_validation():
    f = random_cube_function(2, 0)
    with pytest.raises(PreconditionError):
        check_remark4(f, grid=[Fraction(3, 4)])


def test_holley_noised_monotone_pairs():
    for seed in range(5):
        A = random_monotone(3, seed)
        B = random_monotone(3, seed + 20)
        F = BiFunction.from_product(A, A)
        G = BiFunction.from_product(B, B)
        assert check_holley_noised(F, G)


def test_holley_rejects_mixed_monotonicity():
    inc = random_monotone(3, 1)
    dec = inc.complement_event()  # decreasing when inc is increasing
    dec = CubeFunction(3, [1 - v for v in inc.values])
    F = BiFunction.from_product(inc, inc)
    G = BiFunction.from_product(dec, dec)
    with pytest.raises(PreconditionError):
        check_holley_noised(F, G)


def test_interpolation_rhs_is_derivative():
    f = random_event(3, 4)
    g = random_event(3, 5)
    F = BiFunction.from_product(f, g)
    assert joint_poly(F).derivative() == interpolation_rhs(F)


def test_simpson_exact_on_cubics():
    # Simpson integrates cubics exactly
    xs = [i / 8 for i in range(9)]
    vals = [x**3 - 2 * x for x in xs]
    assert math.isclose(simpson(vals, 0.0, 1.0), 1 / 4 - 1, abs_tol=1e-12)


def test_default_grid_range():
    grid = default_grid()
    assert grid[0] == 0 and grid[-1] == Fraction(1, 2)
    assert all(0 <= t <= Fraction(1, 2) for t in grid)
