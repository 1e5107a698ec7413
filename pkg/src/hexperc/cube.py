"""Exact configurations, functions and discrete derivative operators on {0,1}^n.

Everything here is exact: cube values are `fractions.Fraction`, configurations
are bit masks.  Bit 1 of a configuration is the least significant bit of the
mask, so the table index of a configuration equals its mask.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

MAX_CUBE_DIM = 14
MAX_PAIR_DIM = 10


class DimensionError(ValueError):
    """Cube dimension exceeds the configured cap."""


class IndexRangeError(IndexError):
    """Coordinate index outside 1..n."""


def _check_index(i: int, n: int) -> None:
    if not 1 <= i <= n:
        raise IndexRangeError(f"coordinate index {i} out of range 1..{n}")


@dataclass(frozen=True)
class BitConfig:
    """A point of {0,1}^n stored as an n-bit mask (coordinate i = bit i-1)."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError("dimension must be positive")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError("bits outside {0,1}^n")

    def get(self, i: int) -> int:
        _check_index(i, self.n)
        return (self.bits >> (i - 1)) & 1

    def set_bit(self, i: int, value: int) -> "BitConfig":
        _check_index(i, self.n)
        m = 1 << (i - 1)
        bits = self.bits | m if value else self.bits & ~m
        return BitConfig(self.n, bits)

    def complement(self) -> "BitConfig":
        return BitConfig(self.n, self.bits ^ ((1 << self.n) - 1))

    def as_tuple(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.n))

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return "".join(str((self.bits >> i) & 1) for i in range(self.n))


def bit_flips(x: BitConfig, i: int) -> tuple[BitConfig, BitConfig, BitConfig]:
    """Return (x with bit i set, x with bit i cleared, bitwise complement of x)."""
    _check_index(i, x.n)
    return x.set_bit(i, 1), x.set_bit(i, 0), x.complement()


class CubeFunction:
    """Total map {0,1}^n -> Q as a table of 2^n exact rationals."""

    __slots__ = ("n", "values")

    def __init__(self, n: int, values: Sequence[Fraction | int]):
        if n < 1 or n > MAX_CUBE_DIM:
            raise DimensionError(f"cube dimension must be in 1..{MAX_CUBE_DIM}")
        vals = [Fraction(v) for v in values]
        if len(vals) != 1 << n:
            raise ValueError(f"table must have exactly 2^{n} entries")
        self.n = n
        self.values = vals

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[BitConfig], Fraction | int]) -> "CubeFunction":
        return cls(n, [fn(BitConfig(n, m)) for m in range(1 << n)])

    @classmethod
    def indicator(cls, n: int, members: Iterable[int]) -> "CubeFunction":
        """Event from an iterable of member bit masks."""
        table = [0] * (1 << n)
        for m in members:
            table[m] = 1
        return cls(n, table)

    @classmethod
    def constant(cls, n: int, c: Fraction | int) -> "CubeFunction":
        return cls(n, [Fraction(c)] * (1 << n))

    def __call__(self, x: BitConfig) -> Fraction:
        if x.n != self.n:
            raise DimensionError("dimension mismatch")
        return self.values[x.bits]

    def at(self, mask: int) -> Fraction:
        return self.values[mask]

    def is_event(self) -> bool:
        return all(v in (0, 1) for v in self.values)

    def members(self) -> list[int]:
        return [m for m, v in enumerate(self.values) if v]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CubeFunction)
            and self.n == other.n
            and self.values == other.values
        )

    def __mul__(self, other: "CubeFunction") -> "CubeFunction":
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        return CubeFunction(self.n, [a * b for a, b in zip(self.values, other.values)])

    def __add__(self, other: "CubeFunction") -> "CubeFunction":
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        return CubeFunction(self.n, [a + b for a, b in zip(self.values, other.values)])

    def scale(self, c: Fraction | int) -> "CubeFunction":
        c = Fraction(c)
        return CubeFunction(self.n, [c * v for v in self.values])

    def complement_event(self) -> "CubeFunction":
        """The event {x̄ : x in A} (table permuted by bit complement)."""
        full = (1 << self.n) - 1
        return CubeFunction(self.n, [self.values[m ^ full] for m in range(1 << self.n)])


class BiFunction:
    """Total map {0,1}^n x {0,1}^n -> Q; entry (x, y) lives at index x + 2^n y.

    A product structure F(x,y) = f(x) g(y) can be recorded so that joint
    expectations are computed without materialising all 4^n products.
    """

    __slots__ = ("n", "_values", "product")

    def __init__(
        self,
        n: int,
        values: Sequence[Fraction | int] | None,
        product: tuple[CubeFunction, CubeFunction] | None = None,
    ):
        if n < 1 or n > MAX_PAIR_DIM:
            raise DimensionError(f"pair dimension must be in 1..{MAX_PAIR_DIM}")
        if values is None:
            if product is None:
                raise ValueError("need a value table or a product structure")
            vals = None
        else:
            vals = [Fraction(v) for v in values]
            if len(vals) != 1 << (2 * n):
                raise ValueError(f"table must have exactly 4^{n} entries")
        self.n = n
        self._values = vals
        self.product = product

    @property
    def values(self) -> list[Fraction]:
        if self._values is None:
            f, g = self.product  # type: ignore[misc]
            size = 1 << self.n
            self._values = [
                f.values[xm] * g.values[ym] for ym in range(size) for xm in range(size)
            ]
        return self._values

    @classmethod
    def from_callable(
        cls, n: int, fn: Callable[[BitConfig, BitConfig], Fraction | int]
    ) -> "BiFunction":
        size = 1 << n
        table = [
            fn(BitConfig(n, xm), BitConfig(n, ym))
            for ym in range(size)
            for xm in range(size)
        ]
        return cls(n, table)

    @classmethod
    def from_product(cls, f: CubeFunction, g: CubeFunction) -> "BiFunction":
        if f.n != g.n:
            raise DimensionError("dimension mismatch")
        n = f.n
        if n > MAX_PAIR_DIM:
            raise DimensionError("pair dimension cap exceeded")
        return cls(n, None, product=(f, g))

    def at(self, xm: int, ym: int) -> Fraction:
        if self._values is None:
            f, g = self.product  # type: ignore[misc]
            return f.values[xm] * g.values[ym]
        return self._values[xm + (ym << self.n)]

    def __call__(self, x: BitConfig, y: BitConfig) -> Fraction:
        if x.n != self.n or y.n != self.n:
            raise DimensionError("dimension mismatch")
        return self.at(x.bits, y.bits)

    def swap(self) -> "BiFunction":
        """The function (x, y) -> F(y, x)."""
        size = 1 << self.n
        table = [self.at(ym, xm) for ym in range(size) for xm in range(size)]
        prod = None
        if self.product is not None:
            prod = (self.product[1], self.product[0])
        return BiFunction(self.n, table, product=prod)

    def complement_second(self) -> "BiFunction":
        """The function (x, y) -> F(x, ȳ)."""
        size = 1 << self.n
        full = size - 1
        table = [self.at(xm, ym ^ full) for ym in range(size) for xm in range(size)]
        return BiFunction(self.n, table)

    def as_flat(self) -> CubeFunction:
        """View as a function on {0,1}^{2n}: first-argument bits are low bits."""
        if 2 * self.n > MAX_CUBE_DIM:
            raise DimensionError("flattened dimension exceeds cube cap")
        return CubeFunction(2 * self.n, list(self.values))

    def __mul__(self, other: "BiFunction") -> "BiFunction":
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        return BiFunction(self.n, [a * b for a, b in zip(self.values, other.values)])


def grad(f: CubeFunction, i: int, x: BitConfig) -> Fraction:
    """f(x with bit i set) - f(x with bit i cleared)."""
    _check_index(i, f.n)
    m = 1 << (i - 1)
    return f.values[x.bits | m] - f.values[x.bits & ~m]


def grad2(F: BiFunction, i: int, x: BitConfig, y: BitConfig) -> Fraction:
    """Second-order mixed discrete derivative of F at (x, y) in direction i."""
    _check_index(i, F.n)
    m = 1 << (i - 1)
    xu, xd = x.bits | m, x.bits & ~m
    yu, yd = y.bits | m, y.bits & ~m
    return F.at(xu, yu) + F.at(xd, yd) - F.at(xu, yd) - F.at(xd, yu)


def d_op(F: BiFunction, i: int, x: BitConfig, y: BitConfig) -> Fraction:
    """[F(x^i, y_i) - F(x_i, y_i)] * [F(x_i, y^i) - F(x_i, y_i)]."""
    _check_index(i, F.n)
    m = 1 << (i - 1)
    xu, xd = x.bits | m, x.bits & ~m
    yu, yd = y.bits | m, y.bits & ~m
    base = F.at(xd, yd)
    return _D_SIGN * (F.at(xu, yd) - base) * (F.at(xd, yu) - base)


# Test-only mutation hook used by the CLI verify command to prove the suites
# can fail; never set outside tests.
_D_SIGN = 1


def grad2_table(F: BiFunction, i: int) -> BiFunction:
    """The BiFunction (x, y) -> grad2(F, i, x, y)."""
    _check_index(i, F.n)
    n = F.n
    size = 1 << n
    m = 1 << (i - 1)
    vals = F.values
    table = []
    for ym in range(size):
        yu, yd = (ym | m) << n, (ym & ~m) << n
        for xm in range(size):
            xu, xd = xm | m, xm & ~m
            table.append(vals[xu + yu] + vals[xd + yd] - vals[xu + yd] - vals[xd + yu])
    return BiFunction(n, table)


def d_op_table(F: BiFunction, i: int) -> BiFunction:
    """The BiFunction (x, y) -> d_op(F, i, x, y)."""
    _check_index(i, F.n)
    n = F.n
    size = 1 << n
    m = 1 << (i - 1)
    vals = F.values
    table = []
    for ym in range(size):
        yu, yd = (ym | m) << n, (ym & ~m) << n
        for xm in range(size):
            xu, xd = xm | m, xm & ~m
            base = vals[xd + yd]
            table.append(_D_SIGN * (vals[xu + yd] - base) * (vals[xd + yu] - base))
    return BiFunction(n, table)


def is_increasing(f: CubeFunction) -> bool:
    """Edge criterion: f(x_i) <= f(x^i) for every x and i."""
    size = 1 << f.n
    vals = f.values
    for i in range(f.n):
        m = 1 << i
        for xm in range(size):
            if not xm & m and vals[xm] > vals[xm | m]:
                return False
    return True


def is_decreasing(f: CubeFunction) -> bool:
    size = 1 << f.n
    vals = f.values
    for i in range(f.n):
        m = 1 << i
        for xm in range(size):
            if not xm & m and vals[xm] < vals[xm | m]:
                return False
    return True


def expectation(f: CubeFunction) -> Fraction:
    """Mean under the uniform measure on the cube."""
    return sum(f.values, Fraction(0)) / (1 << f.n)


def random_monotone(n: int, seed: int, max_dim: int = MAX_CUBE_DIM) -> CubeFunction:
    """Random increasing 0/1 function: up-set closure of a random antichain.

    Deterministic in (n, seed).  May produce the empty or full event.
    """
    if n < 1 or n > max_dim:
        raise DimensionError(f"dimension must be in 1..{max_dim}")
    rng = random.Random(repr((n, seed)))
    size = 1 << n
    n_seeds = rng.randint(0, max(1, n))
    table = [0] * size
    for _ in range(n_seeds):
        table[rng.randrange(size)] = 1
    # subset-OR closure: x is in the event iff some generator y <= x
    for i in range(n):
        m = 1 << i
        for xm in range(size):
            if xm & m and table[xm ^ m]:
                table[xm] = 1
    return CubeFunction(n, table)


def random_cube_function(
    n: int, seed: int, lo: int = 0, hi: int = 8, denom: int = 4
) -> CubeFunction:
    """Random rational-valued function with small numerators (test input)."""
    rng = random.Random(repr((n, seed, lo, hi, denom)))
    return CubeFunction(
        n, [Fraction(rng.randint(lo, hi), rng.randint(1, denom)) for _ in range(1 << n)]
    )


def random_event(n: int, seed: int, p: float = 0.5) -> CubeFunction:
    """Random (not necessarily monotone) event, density p."""
    rng = random.Random(repr((n, seed, p)))
    return CubeFunction(n, [1 if rng.random() < p else 0 for _ in range(1 << n)])
