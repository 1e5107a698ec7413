"""Exact law of the noise coupling (ω, ω_t).

The joint expectation E[F(ω, ω_t)] is carried as an exact polynomial in t,
obtained from the Hamming-distance closed form

    E[F(ω, ω_t)] = 2^{-n} Σ_{x,y} F(x,y) t^{d(x,y)} (1-t)^{n-d(x,y)},

so that the differential identities of the interpolation method become
coefficient identities between polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cube import (
    BiFunction,
    CubeFunction,
    DimensionError,
    expectation,
    grad2_table,
    is_decreasing,
    is_increasing,
)


class PreconditionError(ValueError):
    """A documented precondition of a check was violated."""


class SingularIntegrandError(ArithmeticError):
    """The log/quadrature side of an identity is undefined (zero denominator)."""


class RationalPoly:
    """Polynomial in t with exact rational coefficients (index = power)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[Fraction | int]):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else -1

    def __call__(self, t: Fraction | int | float) -> Fraction | float:
        acc: Fraction | float = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def derivative(self) -> "RationalPoly":
        return RationalPoly([k * c for k, c in enumerate(self.coeffs)][1:])

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        m = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + [Fraction(0)] * (m - len(self.coeffs))
        b = other.coeffs + [Fraction(0)] * (m - len(other.coeffs))
        return RationalPoly([x + y for x, y in zip(a, b)])

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        return self + other.scale(-1)

    def scale(self, c: Fraction | int) -> "RationalPoly":
        c = Fraction(c)
        return RationalPoly([c * v for v in self.coeffs])

    def __mul__(self, other: "RationalPoly") -> "RationalPoly":
        if not self.coeffs or not other.coeffs:
            return RationalPoly([])
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RationalPoly(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RationalPoly) and self.coeffs == other.coeffs

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RationalPoly({self.coeffs})"

    def compose_one_minus_t(self) -> "RationalPoly":
        """The polynomial t -> p(1 - t)."""
        out = [Fraction(0)] * max(1, len(self.coeffs))
        for d, c in enumerate(self.coeffs):
            # (1-t)^d
            for j in range(d + 1):
                out[j] += c * math.comb(d, j) * (-1) ** j
        return RationalPoly(out)


@dataclass(frozen=True)
class NoiseCoupling:
    """One realisation of the coupling: ω, the flip mask η, and t."""

    t: Fraction
    base: int
    mask: int

    def flipped(self) -> int:
        return self.base ^ self.mask


def _distance_counts(F: BiFunction) -> list[Fraction]:
    """c_d = Σ_{x,y : |x⊕y|=d} F(x,y), exact."""
    n = F.n
    size = 1 << n
    counts = [Fraction(0)] * (n + 1)
    if F.product is not None:
        f, g = F.product
        fd = math.lcm(*[v.denominator for v in f.values])
        gd = math.lcm(*[v.denominator for v in g.values])
        fnum = np.array([int(v * fd) for v in f.values], dtype=np.int64)
        gnum = np.array([int(v * gd) for v in g.values], dtype=np.int64)
        bound = float(np.abs(fnum).sum()) * float(np.abs(gnum).max())
        if bound < 2**62:
            conv = _xor_convolve(fnum, gnum)
            for z in range(size):
                counts[bin(z).count("1")] += Fraction(int(conv[z]), fd * gd)
            return counts
    vals = F.values
    for z in range(size):
        d = bin(z).count("1")
        s = Fraction(0)
        zs = z << n
        for xm in range(size):
            s += vals[xm + ((xm << n) ^ zs)]
        counts[d] += s
    return counts


def _xor_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """conv[z] = Σ_x a[x] b[x^z] via Walsh-Hadamard transform (exact in int64)."""
    fa = _fwht(a.copy())
    fb = _fwht(b.copy())
    prod = fa * fb
    out = _fwht(prod)
    assert np.all(out % len(a) == 0)
    return out // len(a)


def _fwht(a: np.ndarray) -> np.ndarray:
    h = 1
    n = len(a)
    while h < n:
        for i in range(0, n, h * 2):
            x = a[i : i + h].copy()
            y = a[i + h : i + 2 * h].copy()
            a[i : i + h] = x + y
            a[i + h : i + 2 * h] = x - y
        h *= 2
    return a


def joint_poly(F: BiFunction) -> RationalPoly:
    """The exact polynomial t -> E[F(ω, ω_t)]."""
    n = F.n
    counts = _distance_counts(F)
    coeffs = [Fraction(0)] * (n + 1)
    half = Fraction(1, 1 << n)
    for d, c in enumerate(counts):
        if c == 0:
            continue
        # c * t^d (1-t)^(n-d)
        for j in range(n - d + 1):
            coeffs[d + j] += half * c * math.comb(n - d, j) * (-1) ** j
    return RationalPoly(coeffs)


def joint_poly_product(f: CubeFunction, g: CubeFunction) -> RationalPoly:
    """joint_poly of F(x,y) = f(x) g(y) without building the pair table."""
    return joint_poly(BiFunction.from_product(f, g))


def _grad_function(f: CubeFunction, i: int) -> CubeFunction:
    m = 1 << (i - 1)
    return CubeFunction(
        f.n,
        [f.values[xm | m] - f.values[xm & ~m] for xm in range(1 << f.n)],
    )


def interpolation_rhs(F: BiFunction) -> RationalPoly:
    """-1/2 Σ_i joint_poly of the mixed second derivative of F in direction i."""
    acc = RationalPoly([])
    if F.product is not None:
        f, g = F.product
        for i in range(1, F.n + 1):
            acc = acc + joint_poly_product(_grad_function(f, i), _grad_function(g, i))
    else:
        for i in range(1, F.n + 1):
            acc = acc + joint_poly(grad2_table(F, i))
    return acc.scale(Fraction(-1, 2))


def check_interpolation_identity(F: BiFunction) -> bool:
    """d/dt E[F(ω,ω_t)] = -1/2 Σ_i E[∇_ii F(ω,ω_t)], as exact polynomials."""
    return joint_poly(F).derivative() == interpolation_rhs(F)


def check_lemma1(n: int, grid: Sequence[Fraction] | None = None) -> bool:
    """Marginal of ω_t is uniform for each grid t; the t=1/2 joint law is 4^{-n}."""
    if grid is None:
        grid = [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
    size = 1 << n
    uniform = Fraction(1, size)
    for t in grid:
        for ym in range(size):
            p = Fraction(0)
            for xm in range(size):
                d = bin(xm ^ ym).count("1")
                p += Fraction(1, size) * t**d * (1 - t) ** (n - d)
            if p != uniform:
                return False
    t = Fraction(1, 2)
    q = Fraction(1, size * size)
    for ym in range(size):
        for xm in range(size):
            d = bin(xm ^ ym).count("1")
            if Fraction(1, size) * t**d * (1 - t) ** (n - d) != q:
                return False
    return True


def simpson(values: Sequence[float], a: float, b: float) -> float:
    """Composite Simpson rule over equispaced samples (odd count)."""
    m = len(values)
    if m < 3 or m % 2 == 0:
        raise ValueError("need an odd number of sample points >= 3")
    h = (b - a) / (m - 1)
    s = values[0] + values[-1]
    s += 4.0 * sum(values[1:-1:2])
    s += 2.0 * sum(values[2:-1:2])
    return s * h / 3.0


@dataclass
class InterpolationReport:
    """Outcome of an endpoint + ODE + quadrature verification."""

    endpoint_start_exact: bool
    endpoint_end_exact: bool
    ode_exact: bool
    quad_checked: bool
    quad_value: float | None
    quad_expected: float | None
    quad_error: float | None
    tol: float

    @property
    def exact_ok(self) -> bool:
        return self.endpoint_start_exact and self.endpoint_end_exact and self.ode_exact

    @property
    def passed(self) -> bool:
        if not self.exact_ok:
            return False
        if self.quad_checked:
            assert self.quad_error is not None
            return self.quad_error <= self.tol
        return True


def verify_prop1(
    f: CubeFunction,
    g: CubeFunction,
    quad_points: int = 513,
    tol: float = 1e-9,
) -> InterpolationReport:
    """Exact endpoint + ODE checks and numerical quadrature for the identity
    E[fg] = E[f] E[g] e^I on nonnegative f, g with positive means."""
    if f.n != g.n:
        raise DimensionError("dimension mismatch")
    if any(v < 0 for v in f.values) or any(v < 0 for v in g.values):
        raise PreconditionError("f and g must be non-negative")
    ef, eg = expectation(f), expectation(g)
    if ef <= 0 or eg <= 0:
        raise PreconditionError("E[f] and E[g] must be positive")

    phi = joint_poly_product(f, g)
    efg = expectation(f * g)
    endpoint0 = phi(Fraction(0)) == efg
    endpoint_half = phi(Fraction(1, 2)) == ef * eg

    rhs = interpolation_rhs(BiFunction.from_product(f, g))
    ode = phi.derivative() == rhs

    quad_checked = False
    quad_value = quad_expected = quad_err = None
    if efg > 0:
        # integrand of I: -phi'(t)/phi(t); phi > 0 on [0, 1/2] since phi(0) > 0
        dphi = phi.derivative()
        ts = [0.5 * k / (quad_points - 1) for k in range(quad_points)]
        vals = []
        for t in ts:
            den = float(phi(t))
            if den <= 0:
                raise SingularIntegrandError("phi vanishes inside [0, 1/2]")
            vals.append(-float(dphi(t)) / den)
        quad_value = simpson(vals, 0.0, 0.5)
        quad_expected = math.log(float(efg) / float(ef * eg))
        quad_err = abs(quad_value - quad_expected)
        quad_checked = True
    return InterpolationReport(
        endpoint0, endpoint_half, ode, quad_checked, quad_value, quad_expected, quad_err, tol
    )


def default_grid(points: int = 33, upper: Fraction = Fraction(1, 2)) -> list[Fraction]:
    """Equispaced rational grid on [0, upper]."""
    return [upper * k / (points - 1) for k in range(points)]


def check_remark4(f: CubeFunction, grid: Sequence[Fraction] | None = None) -> bool:
    """t -> E[f(ω) f(ω_t)] is non-increasing on [0,1/2]: derivative <= 0 on the grid."""
    if grid is None:
        grid = default_grid()
    if any(t < 0 or t > Fraction(1, 2) for t in grid):
        raise PreconditionError("grid must lie in [0, 1/2]")
    dphi = joint_poly_product(f, f).derivative()
    return all(dphi(t) <= 0 for t in grid)


def check_holley_noised(
    F: BiFunction, G: BiFunction, grid: Sequence[Fraction] | None = None
) -> bool:
    """E[FG](t) >= E[F](t) E[G](t) on the grid, for F, G both monotone on the
    doubled cube (both increasing or both decreasing)."""
    if grid is None:
        grid = default_grid()
    Ff, Gf = F.as_flat(), G.as_flat()
    both_inc = is_increasing(Ff) and is_increasing(Gf)
    both_dec = is_decreasing(Ff) and is_decreasing(Gf)
    if not (both_inc or both_dec):
        raise PreconditionError("F and G must be both increasing or both decreasing")
    p_fg = joint_poly(F * G)
    p_f = joint_poly(F)
    p_g = joint_poly(G)
    return all(p_fg(t) >= p_f(t) * p_g(t) for t in grid)


def _insensitive_coord(F: BiFunction, i: int) -> bool:
    """True iff F ignores coordinate i of both arguments."""
    n = F.n
    size = 1 << n
    m = 1 << (i - 1)
    for ym in range(size):
        for xm in range(size):
            if F.at(xm | m, ym) != F.at(xm & ~m, ym):
                return False
            if F.at(xm, ym | m) != F.at(xm, ym & ~m):
                return False
    return True


def _monotone_in_coord(F: BiFunction, i: int, direction: int) -> bool:
    """direction=+1: F(x^i,y) >= F(x_i,y) and F(x,y^i) >= F(x,y_i); -1 reversed."""
    n = F.n
    size = 1 << n
    m = 1 << (i - 1)
    for ym in range(size):
        for xm in range(size):
            dx = F.at(xm | m, ym) - F.at(xm & ~m, ym)
            dy = F.at(xm, ym | m) - F.at(xm, ym & ~m)
            if direction * dx < 0 or direction * dy < 0:
                return False
    return True


def check_prop3(
    partition: tuple[set[int], set[int], set[int], set[int]],
    F: BiFunction,
    G: BiFunction,
    grid: Sequence[Fraction] | None = None,
) -> bool:
    """FKG for the noised pair under split supports: F lives on A∪S∪T, G on
    B∪S∪T, both S-increasing and T-decreasing; then E[FG] >= E[F]E[G] on the grid."""
    if grid is None:
        grid = default_grid()
    A, B, S, T = partition
    sets = [A, B, S, T]
    for p in range(len(sets)):
        for q in range(p + 1, len(sets)):
            if sets[p] & sets[q]:
                raise PreconditionError("partition sets must be pairwise disjoint")
    n = F.n
    for i in range(1, n + 1):
        if i not in A | S | T and not _insensitive_coord(F, i):
            raise PreconditionError(f"F depends on coordinate {i} outside A∪S∪T")
        if i not in B | S | T and not _insensitive_coord(G, i):
            raise PreconditionError(f"G depends on coordinate {i} outside B∪S∪T")
    for i in sorted(S):
        if not _monotone_in_coord(F, i, +1):
            raise PreconditionError(f"F is not increasing in S-coordinate {i}")
        if not _monotone_in_coord(G, i, +1):
            raise PreconditionError(f"G is not increasing in S-coordinate {i}")
    for i in sorted(T):
        if not _monotone_in_coord(F, i, -1):
            raise PreconditionError(f"F is not decreasing in T-coordinate {i}")
        if not _monotone_in_coord(G, i, -1):
            raise PreconditionError(f"G is not decreasing in T-coordinate {i}")
    p_fg = joint_poly(F * G)
    p_f = joint_poly(F)
    p_g = joint_poly(G)
    return all(p_fg(t) >= p_f(t) * p_g(t) for t in grid)
