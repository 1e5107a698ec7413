"""Witnesses, generalized disjoint occurrence and the Reimer-family checks.

A witness (x, I) for an event A certifies that the cylinder fixing x on I is
contained in A.  The pair (A, B) occurs disjointly on (x, y) when witnesses
with disjoint supports exist; by support monotonicity it is enough to search
over supports I paired with the complement [n] \\ I.

The search is exact.  For batch checks a precomputed table
W[I, x] = "(x, I) is a witness" is used; it is a pure memoization of the
naive cylinder enumeration and changes no results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .cube import (
    BiFunction,
    BitConfig,
    CubeFunction,
    DimensionError,
    d_op_table,
    expectation,
    is_increasing,
)
from .noisepoly import (
    PreconditionError,
    RationalPoly,
    SingularIntegrandError,
    interpolation_rhs,
    joint_poly,
    simpson,
)

MAX_WITNESS_DIM = 12


@dataclass(frozen=True)
class Witness:
    """An anchor configuration together with a support index set."""

    anchor: BitConfig
    support: frozenset[int]


def _support_mask(I: Iterable[int], n: int) -> int:
    m = 0
    for i in I:
        if not 1 <= i <= n:
            raise IndexError(f"support index {i} out of range 1..{n}")
        m |= 1 << (i - 1)
    return m


def is_witness(x: BitConfig, I: Iterable[int], A: CubeFunction) -> bool:
    """Naive cylinder enumeration: every y agreeing with x on I lies in A."""
    n = A.n
    mask = _support_mask(I, n)
    free = [i for i in range(n) if not mask >> i & 1]
    base = x.bits & mask
    for k in range(1 << len(free)):
        y = base
        for j, i in enumerate(free):
            if k >> j & 1:
                y |= 1 << i
        if not A.values[y]:
            return False
    return True


def witness_table(A: CubeFunction) -> np.ndarray:
    """Boolean matrix W[I, x]: the cylinder fixing x on support mask I is in A.

    Computed by the recurrence W[I] = W[I∪{i}](bit i -> 0) & W[I∪{i}](bit i -> 1).
    """
    n = A.n
    if n > MAX_WITNESS_DIM:
        raise DimensionError(f"witness search capped at n <= {MAX_WITNESS_DIM}")
    size = 1 << n
    W = np.zeros((size, size), dtype=bool)
    W[size - 1] = np.array([bool(v) for v in A.values])
    idx = np.arange(size)
    for I in range(size - 2, -1, -1):
        low = (~I) & -(~I)  # lowest missing coordinate of the support
        J = I | low
        W[I] = W[J][idx & ~low] & W[J][idx | low]
    return W


def occurs_disjointly(
    A: CubeFunction, B: CubeFunction, x: BitConfig, y: BitConfig
) -> bool:
    """True iff some I makes (x, I) a witness for A and (y, [n]\\I) one for B."""
    n = A.n
    if B.n != n or x.n != n or y.n != n:
        raise DimensionError("dimension mismatch")
    WA = witness_table(A)
    WB = witness_table(B)
    full = (1 << n) - 1
    for I in range(1 << n):
        if WA[I, x.bits] and WB[full ^ I, y.bits]:
            return True
    return False


def disjoint_occurrence_table(A: CubeFunction, B: CubeFunction) -> np.ndarray:
    """Boolean matrix F[x, y] = "(A, B) occurs disjointly on (x, y)"."""
    n = A.n
    if B.n != n:
        raise DimensionError("dimension mismatch")
    WA = witness_table(A)
    WB = witness_table(B)
    size = 1 << n
    out = np.zeros((size, size), dtype=bool)
    for I in range(size):
        wa = WA[I]
        if not wa.any():
            continue
        wb = WB[(size - 1) ^ I]
        if not wb.any():
            continue
        out |= np.outer(wa, wb)
    return out


def disjoint_indicator(A: CubeFunction, B: CubeFunction) -> BiFunction:
    """The pair function F(x, y) = 1{(A,B) occurs disjointly on (x, y)}."""
    table = disjoint_occurrence_table(A, B)
    n = A.n
    # BiFunction stores x as the low index
    return BiFunction(n, [int(v) for v in table.T.reshape(-1)])


def box_event(A: CubeFunction, B: CubeFunction) -> CubeFunction:
    """A∘B: the diagonal of the generalized disjoint occurrence."""
    table = disjoint_occurrence_table(A, B)
    return CubeFunction(A.n, [int(v) for v in np.diagonal(table)])


def check_lemma2(A: CubeFunction, B: CubeFunction) -> bool:
    """(A,B) occurs disjointly on (x, x̄) iff x ∈ A ∩ B̄, for increasing A, B."""
    if not is_increasing(A) or not is_increasing(B):
        raise PreconditionError("lemma 2 requires increasing events")
    table = disjoint_occurrence_table(A, B)
    n = A.n
    full = (1 << n) - 1
    for xm in range(1 << n):
        lhs = bool(table[xm, xm ^ full])
        rhs = bool(A.values[xm]) and bool(B.values[xm ^ full])
        if lhs != rhs:
            return False
    return True


def check_reimer(A: CubeFunction, B: CubeFunction) -> bool:
    """P[A∘B] <= P[A ∩ B̄] for arbitrary events, exactly."""
    lhs = expectation(box_event(A, B))
    rhs = expectation(A * B.complement_event())
    return lhs <= rhs


def check_strong_bk(A: CubeFunction, B: CubeFunction) -> bool:
    """P[A∘B] <= E[F(ω, ω_{1/2})] <= P[A] P[B] for increasing A, B."""
    if not is_increasing(A) or not is_increasing(B):
        raise PreconditionError("strong BK requires increasing events")
    psi = joint_poly(disjoint_indicator(A, B))
    half = Fraction(1, 2)
    return (
        expectation(box_event(A, B)) <= psi(half) <= expectation(A) * expectation(B)
    )


def check_dual_reimer(A: CubeFunction, B: CubeFunction) -> bool:
    """E[F(ω, ω_{1/2})] <= P[A ∩ B̄] for arbitrary events."""
    psi = joint_poly(disjoint_indicator(A, B))
    return psi(Fraction(1, 2)) <= expectation(A * B.complement_event())


def check_eq13_pointwise(A: CubeFunction, B: CubeFunction) -> bool:
    """-∇_ii F = D_i F at every (i, x, y), F the disjoint-occurrence indicator."""
    F = disjoint_indicator(A, B)
    n = F.n
    size = 1 << n
    vals = F.values
    for i in range(n):
        m = 1 << i
        DT = d_op_table(F, i + 1)
        for ym in range(size):
            yu, yd = (ym | m) << n, (ym & ~m) << n
            for xm in range(size):
                xu, xd = xm | m, xm & ~m
                g2 = vals[xu + yu] + vals[xd + yd] - vals[xu + yd] - vals[xd + yu]
                if -g2 != DT.at(xm, ym):
                    return False
    return True


@dataclass
class Prop2Report:
    """Outcome of the quantitative-Reimer verification for one event pair."""

    eq13_exact: bool
    endpoint_start_exact: bool
    endpoint_end_exact: bool
    ode_exact: bool
    j_nonnegative: bool
    j_value: float
    j_expected: float
    j_error: float
    tol: float

    @property
    def exact_ok(self) -> bool:
        return (
            self.eq13_exact
            and self.endpoint_start_exact
            and self.endpoint_end_exact
            and self.ode_exact
            and self.j_nonnegative
        )

    @property
    def passed(self) -> bool:
        return self.exact_ok and self.j_error <= self.tol


def check_prop2(
    A: CubeFunction,
    B: CubeFunction,
    quad_points: int = 513,
    tol: float = 1e-9,
) -> Prop2Report:
    """Quantitative Reimer: P[A∘B] = P[A ∩ B̄] e^{-J} with J >= 0.

    Exact parts: the pointwise identity -∇_ii F = D_i F, both endpoints of
    ψ(t) = E[F(ω, ω_t)], and the ODE ψ' = 1/2 Σ_i E[D_i F] (which equals the
    general interpolation formula via the pointwise identity).  The quadrature
    of J = ∫ ψ'/ψ is compared against log(ψ(1)/ψ(0)).
    """
    if not is_increasing(A) or not is_increasing(B):
        raise PreconditionError("the quantitative disjointness check requires increasing events")
    box = box_event(A, B)
    p_box = expectation(box)
    if p_box <= 0:
        raise PreconditionError("P[A∘B] must be positive")
    F = disjoint_indicator(A, B)
    psi = joint_poly(F)

    eq13 = check_eq13_pointwise(A, B)
    endpoint0 = psi(Fraction(0)) == p_box
    p_and = expectation(A * B.complement_event())
    endpoint1 = psi(Fraction(1)) == p_and

    half_sum_d = RationalPoly([])
    for i in range(1, F.n + 1):
        half_sum_d = half_sum_d + joint_poly(d_op_table(F, i))
    half_sum_d = half_sum_d.scale(Fraction(1, 2))
    dpsi = psi.derivative()
    ode = dpsi == half_sum_d and dpsi == interpolation_rhs(F)

    ts = [k / (quad_points - 1) for k in range(quad_points)]
    vals = []
    for t in ts:
        den = float(psi(t))
        if den <= 0:
            raise SingularIntegrandError("psi vanishes inside [0, 1]")
        vals.append(float(dpsi(t)) / den)
    j_value = simpson(vals, 0.0, 1.0)
    j_expected = math.log(float(p_and) / float(p_box)) if p_and > 0 else math.inf
    err = abs(j_value - j_expected) if math.isfinite(j_expected) else math.inf
    return Prop2Report(
        eq13_exact=eq13,
        endpoint_start_exact=endpoint0,
        endpoint_end_exact=endpoint1,
        ode_exact=ode,
        j_nonnegative=j_value >= -tol,
        j_value=j_value,
        j_expected=j_expected,
        j_error=err,
        tol=tol,
    )
