"""Hexagonal face lattice: indexing, adjacency, regions and H(S).

Hexagon centers sit on the triangular lattice pitch*(a + b/2, b*sqrt(3)/2);
each face is the closed Voronoi hexagon of its center.  Region membership
H(S) = {hexagons whose closed face meets the closed region S} is decided
exactly: coordinates live in the field Q[sqrt(3)], and a float separating-axis
test falls back to exact rational arithmetic whenever a margin is tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union as TUnion

import numpy as np

SQRT3 = math.sqrt(3.0)

# axial displacement of the six face-adjacent hexagons
AXIAL_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

RegionScalar = TUnion[int, Fraction]


class ExtentError(ValueError):
    """Region does not fit inside the lattice extent."""


def frac(v: RegionScalar) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _q3_sign(p: Fraction, q: Fraction) -> int:
    """Sign of p + q*sqrt(3), exactly."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return (q > 0) - (q < 0)
    if p > 0 and q > 0:
        return 1
    if p < 0 and q < 0:
        return -1
    s = p * p - 3 * q * q
    sign_sq = (s > 0) - (s < 0)
    return sign_sq if p > 0 else -sign_sq


def _q3_lt(u: tuple[Fraction, Fraction], v: tuple[Fraction, Fraction]) -> bool:
    return _q3_sign(u[0] - v[0], u[1] - v[1]) < 0


# A projection interval is a pair of Q[sqrt(3)] numbers, each (p, q).
_EPS = 1e-7


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle; degenerate (zero width/height) allowed."""

    x0: Fraction
    x1: Fraction
    y0: Fraction
    y1: Fraction

    def __post_init__(self) -> None:
        for f in ("x0", "x1", "y0", "y1"):
            object.__setattr__(self, f, frac(getattr(self, f)))
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError("rectangle with negative extent")

    def bbox(self) -> tuple[float, float, float, float]:
        return (float(self.x0), float(self.x1), float(self.y0), float(self.y1))

    def translated(self, dx: RegionScalar, dy: RegionScalar) -> "Rect":
        dx, dy = frac(dx), frac(dy)
        return Rect(self.x0 + dx, self.x1 + dx, self.y0 + dy, self.y1 + dy)

    def negated(self) -> "Rect":
        return Rect(-self.x1, -self.x0, -self.y1, -self.y0)

    def meets_hex(self, lat: "Lattice", a: int, b: int) -> bool:
        # float separating-axis test on axes x, y, (1,sqrt3), (-1,sqrt3)
        cx, cy = lat.center_float(a, b)
        t = lat.pitch_f
        hx = (cx - 0.5 * t, cx + 0.5 * t)
        hy = (cy - t / SQRT3, cy + t / SQRT3)
        x0, x1, y0, y1 = self.bbox()
        tight = False
        for hlo, hhi, rlo, rhi in (
            (hx[0], hx[1], x0, x1),
            (hy[0], hy[1], y0, y1),
            # u = x + sqrt3*y: hex extremes at vertices (+-t/2, +-t*sqrt3/6)
            (cx + SQRT3 * cy - t, cx + SQRT3 * cy + t, x0 + SQRT3 * y0, x1 + SQRT3 * y1),
            (-cx + SQRT3 * cy - t, -cx + SQRT3 * cy + t, -x1 + SQRT3 * y0, -x0 + SQRT3 * y1),
        ):
            lo_slack = rhi - hlo
            hi_slack = hhi - rlo
            if lo_slack < -_EPS or hi_slack < -_EPS:
                return False
            if lo_slack < _EPS or hi_slack < _EPS:
                tight = True
        if not tight:
            return True
        return self._meets_hex_exact(lat, a, b)

    def _meets_hex_exact(self, lat: "Lattice", a: int, b: int) -> bool:
        t = lat.pitch
        cx = t * (2 * a + b) / 2  # rational
        cyq = t * Fraction(b, 2)  # y = cyq * sqrt(3)
        half = t / 2
        sixth = t / 6
        third = t / 3
        # hex projections: [lo, hi] as (p, q) pairs
        hex_ints = (
            ((cx - half, Fraction(0)), (cx + half, Fraction(0))),  # x
            ((Fraction(0), cyq - third), (Fraction(0), cyq + third)),  # y
            # u = x + sqrt3*y is rational on hex vertices: px + 3*qy
            ((cx + 3 * cyq - t, Fraction(0)), (cx + 3 * cyq + t, Fraction(0))),
            ((-cx + 3 * cyq - t, Fraction(0)), (-cx + 3 * cyq + t, Fraction(0))),
        )
        rect_ints = (
            ((self.x0, Fraction(0)), (self.x1, Fraction(0))),
            ((self.y0, Fraction(0)), (self.y1, Fraction(0))),
            ((self.x0, self.y0), (self.x1, self.y1)),
            ((-self.x1, self.y0), (-self.x0, self.y1)),
        )
        for (hlo, hhi), (rlo, rhi) in zip(hex_ints, rect_ints):
            if _q3_lt(hhi, rlo) or _q3_lt(rhi, hlo):
                return False
        return True

    def contains_hex(self, lat: "Lattice", a: int, b: int, strict: bool = False) -> bool:
        cx, cy = lat.center_float(a, b)
        t = lat.pitch_f
        x0, x1, y0, y1 = self.bbox()
        margins = (
            cx - 0.5 * t - x0,
            x1 - cx - 0.5 * t,
            cy - t / SQRT3 - y0,
            y1 - cy - t / SQRT3,
        )
        if all(m > _EPS for m in margins):
            return True
        if any(m < -_EPS for m in margins):
            return False
        t = lat.pitch
        cx = t * (2 * a + b) / 2
        cyq = t * Fraction(b, 2)
        third = t / 3
        signs = (
            _q3_sign(cx - t / 2 - self.x0, Fraction(0)),
            _q3_sign(self.x1 - cx - t / 2, Fraction(0)),
            _q3_sign(-self.y0, cyq - third),
            _q3_sign(self.y1, -(cyq + third)),
        )
        if strict:
            return all(s > 0 for s in signs)
        return all(s >= 0 for s in signs)


@dataclass(frozen=True)
class Annulus:
    """(cx, cy) + (closed box of half-width outer minus closed box inner).

    The membership test (meets outer box, not contained in inner box) is exact
    only when the gap outer - inner exceeds a hexagon diameter; enforced.
    """

    cx: Fraction
    cy: Fraction
    inner: Fraction
    outer: Fraction

    def __post_init__(self) -> None:
        for f in ("cx", "cy", "inner", "outer"):
            object.__setattr__(self, f, frac(getattr(self, f)))
        if not 0 <= self.inner < self.outer:
            raise ValueError("annulus requires 0 <= inner < outer")

    def outer_rect(self) -> Rect:
        return Rect(self.cx - self.outer, self.cx + self.outer,
                    self.cy - self.outer, self.cy + self.outer)

    def inner_rect(self) -> Rect:
        return Rect(self.cx - self.inner, self.cx + self.inner,
                    self.cy - self.inner, self.cy + self.inner)

    def bbox(self) -> tuple[float, float, float, float]:
        return self.outer_rect().bbox()

    def translated(self, dx: RegionScalar, dy: RegionScalar) -> "Annulus":
        return Annulus(self.cx + frac(dx), self.cy + frac(dy), self.inner, self.outer)

    def negated(self) -> "Annulus":
        return Annulus(-self.cx, -self.cy, self.inner, self.outer)

    def meets_hex(self, lat: "Lattice", a: int, b: int) -> bool:
        if self.outer - self.inner < 2 * lat.pitch:
            raise ValueError("annulus gap must be at least two pitches")
        if not self.outer_rect().meets_hex(lat, a, b):
            return False
        return not self.inner_rect().contains_hex(lat, a, b)


@dataclass(frozen=True)
class BoxBoundary:
    """The boundary curve of (cx, cy) + Λ_m; H of it = hexagons touching it."""

    m: Fraction
    cx: Fraction = Fraction(0)
    cy: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for f in ("m", "cx", "cy"):
            object.__setattr__(self, f, frac(getattr(self, f)))
        if self.m <= 0:
            raise ValueError("boundary scale must be positive")

    def rect(self) -> Rect:
        return Rect(self.cx - self.m, self.cx + self.m, self.cy - self.m, self.cy + self.m)

    def bbox(self) -> tuple[float, float, float, float]:
        return self.rect().bbox()

    def meets_hex(self, lat: "Lattice", a: int, b: int) -> bool:
        r = self.rect()
        return r.meets_hex(lat, a, b) and not r.contains_hex(lat, a, b, strict=True)


@dataclass(frozen=True)
class RegionUnion:
    parts: tuple["Region", ...]

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = [p.bbox() for p in self.parts]
        return (
            min(c[0] for c in boxes),
            max(c[1] for c in boxes),
            min(c[2] for c in boxes),
            max(c[3] for c in boxes),
        )

    def meets_hex(self, lat: "Lattice", a: int, b: int) -> bool:
        return any(p.meets_hex(lat, a, b) for p in self.parts)


Region = TUnion[Rect, Annulus, BoxBoundary, RegionUnion]


def box(n: RegionScalar) -> Rect:
    n = frac(n)
    return Rect(-n, n, -n, n)


def annulus(k: RegionScalar, n: RegionScalar) -> Annulus:
    return Annulus(Fraction(0), Fraction(0), frac(k), frac(n))


def standard_regions(k: RegionScalar, n: RegionScalar) -> dict[str, Region]:
    """The named regions of the interlaced-circuit and separated-arm events.

    Requires 10k <= n.  A+ and A- are the two shifted annuli overlapping on
    the boxes B and B'; R is the lower corridor and S the outer shell with
    its chimney.
    """
    k, n = frac(k), frac(n)
    if not (k > 0 and 10 * k <= n):
        raise ValueError("scales must satisfy 0 < 10k <= n")
    S = RegionUnion((annulus(7 * k, n), Rect(-k, k, 5 * k, 7 * k)))
    return {
        "A+": Annulus(-2 * k, -2 * k, 3 * k, 5 * k),
        "A-": Annulus(2 * k, 2 * k, 3 * k, 5 * k),
        "B": Rect(-3 * k, -k, k, 3 * k),
        "B'": Rect(k, 3 * k, -3 * k, -k),
        "R": Rect(-k, k, -3 * k, k),
        "-R": Rect(-k, k, -k, 3 * k),
        "S": S,
        "-S": RegionUnion((annulus(7 * k, n), Rect(-k, k, -7 * k, -5 * k))),
    }


@dataclass(frozen=True)
class HexId:
    a: int
    b: int

    def neighbors(self) -> list["HexId"]:
        return [HexId(self.a + da, self.b + db) for da, db in AXIAL_NEIGHBORS]


class Lattice:
    """All hexagons whose closed face meets Λ_{n_max}, densely indexed."""

    def __init__(self, n_max: RegionScalar, pitch: RegionScalar = 1):
        self.n_max = frac(n_max)
        self.pitch = frac(pitch)
        if self.n_max <= 0 or self.pitch <= 0:
            raise ValueError("extent and pitch must be positive")
        self.pitch_f = float(self.pitch)
        self.n_max_f = float(self.n_max)

        extent = box(self.n_max)
        t = self.pitch_f
        b_lim = int(math.ceil((self.n_max_f / t + 1.0) * 2 / SQRT3)) + 1
        hexes: list[tuple[int, int]] = []
        for b in range(-b_lim, b_lim + 1):
            a_lo = int(math.floor(-self.n_max_f / t - b / 2 - 1)) - 1
            a_hi = int(math.ceil(self.n_max_f / t - b / 2 + 1)) + 1
            for a in range(a_lo, a_hi + 1):
                if extent.meets_hex(self, a, b):
                    hexes.append((a, b))
        self.hexes = hexes
        self.size = len(hexes)
        self.id_of = {h: i for i, h in enumerate(hexes)}
        self.origin = self.id_of[(0, 0)]

        self.centers = np.empty((self.size, 2), dtype=np.float64)
        for i, (a, b) in enumerate(hexes):
            self.centers[i] = self.center_float(a, b)

        self.neighbor_table = np.full((self.size, 6), -1, dtype=np.int32)
        for i, (a, b) in enumerate(hexes):
            for j, (da, db) in enumerate(AXIAL_NEIGHBORS):
                g = self.id_of.get((a + da, b + db))
                if g is not None:
                    self.neighbor_table[i, j] = g

        self._mask_cache: dict[Region, np.ndarray] = {}

    def center_float(self, a: int, b: int) -> tuple[float, float]:
        t = self.pitch_f
        return (t * (a + 0.5 * b), t * b * (SQRT3 / 2))

    def neighbors(self, h: HexId) -> list[HexId]:
        return [g for g in h.neighbors() if (g.a, g.b) in self.id_of]

    def _check_extent(self, region: Region) -> None:
        x0, x1, y0, y1 = region.bbox()
        lim = self.n_max_f + 1e-9
        if x0 < -lim or x1 > lim or y0 < -lim or y1 > lim:
            raise ExtentError("region exceeds the lattice extent")

    def hexes_meeting(self, region: Region) -> np.ndarray:
        """Dense ids of H(region), sorted ascending."""
        return np.flatnonzero(self.mask(region))

    def mask(self, region: Region) -> np.ndarray:
        """Boolean membership mask over dense ids (cached; do not mutate)."""
        cached = self._mask_cache.get(region)
        if cached is not None:
            return cached
        self._check_extent(region)
        x0, x1, y0, y1 = region.bbox()
        pad = 1.2 * self.pitch_f
        cand = np.flatnonzero(
            (self.centers[:, 0] >= x0 - pad)
            & (self.centers[:, 0] <= x1 + pad)
            & (self.centers[:, 1] >= y0 - pad)
            & (self.centers[:, 1] <= y1 + pad)
        )
        out = np.zeros(self.size, dtype=bool)
        for i in cand:
            a, b = self.hexes[i]
            if region.meets_hex(self, a, b):
                out[i] = True
        out.setflags(write=False)
        self._mask_cache[region] = out
        return out

    def origin_start_mask(self) -> np.ndarray:
        """Hexagons whose closed face meets the closed origin hexagon:
        the origin and its six neighbours (tiling property)."""
        out = np.zeros(self.size, dtype=bool)
        out[self.origin] = True
        for g in self.neighbor_table[self.origin]:
            if g >= 0:
                out[g] = True
        out.setflags(write=False)
        return out


@lru_cache(maxsize=32)
def get_lattice(n_max: RegionScalar, pitch: RegionScalar = 1) -> Lattice:
    """Shared lattice instances; construction is the expensive part."""
    return Lattice(n_max, pitch)
