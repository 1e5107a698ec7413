"""Slow, independent ground-truth checks for the arm-event detectors.

Everything here is deliberately written with different algorithms than the
engine kernels: recursive path enumeration, a winding-number cover for
circuits, and exhaustive enumeration of colourings for exact probabilities.
Only meant for small lattices.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from .lattice import Lattice

MAX_ORACLE_HEXES = 22


class OracleSizeError(ValueError):
    """Lattice too large for exhaustive enumeration."""


def _neighbors_of(lat: Lattice) -> list[list[int]]:
    return [[int(g) for g in row if g >= 0] for row in lat.neighbor_table]


def reach_oracle(lat: Lattice, allowed, start, target) -> bool:
    """Connectivity by recursive DFS over python sets."""
    nbrs = _neighbors_of(lat)
    allowed_set = {int(v) for v in np.flatnonzero(np.asarray(allowed))}
    target_set = {int(v) for v in np.flatnonzero(np.asarray(target))} & allowed_set
    frontier = [int(v) for v in np.flatnonzero(np.asarray(start)) if v in allowed_set]
    seen = set(frontier)
    while frontier:
        v = frontier.pop()
        if v in target_set:
            return True
        for g in nbrs[v]:
            if g in allowed_set and g not in seen:
                seen.add(g)
                frontier.append(g)
    return bool(seen & target_set)


def induced_paths(
    lat: Lattice, allowed, start, target, limit: int = 2_000_000
) -> list[tuple[int, ...]]:
    """All induced (chordless) paths from a start to a target vertex inside
    the allowed set.  Any path admits an induced sub-path with the same
    endpoints (a shortest path within its own vertex set), so searching these
    is exhaustive for existence questions."""
    nbrs = _neighbors_of(lat)
    allowed_set = {int(v) for v in np.flatnonzero(np.asarray(allowed))}
    start_ids = [int(v) for v in np.flatnonzero(np.asarray(start)) if v in allowed_set]
    target_set = {int(v) for v in np.flatnonzero(np.asarray(target))}
    out: list[tuple[int, ...]] = []
    steps = 0

    def extend(path: list[int], members: set[int]) -> None:
        nonlocal steps
        steps += 1
        if steps > limit:
            raise OracleSizeError("induced-path enumeration budget exceeded")
        v = path[-1]
        if v in target_set:
            out.append(tuple(path))
            return
        for g in nbrs[v]:
            if g not in allowed_set or g in members:
                continue
            if sum(1 for h in nbrs[g] if h in members) > 1:
                continue  # chord back into the path
            path.append(g)
            members.add(g)
            extend(path, members)
            path.pop()
            members.remove(g)

    for s in start_ids:
        extend([s], {s})
    return out


def one_arm_oracle(lat: Lattice, bits, sigma: int, start, target, region) -> bool:
    allowed = (np.asarray(bits) == sigma) & np.asarray(region)
    return reach_oracle(lat, allowed, start, target)


def circuit_oracle(lat: Lattice, bits, sigma: int, region, cx: float, cy: float) -> bool:
    """σ-circuit surrounding (cx, cy): winding-number construction.

    Lift the σ-subgraph to the cover indexed by crossings of the ray
    {angle = π from (cx,cy)}; a surrounding circuit exists iff some vertex is
    connected to its own shifted copy.
    """
    nbrs = _neighbors_of(lat)
    allowed = [
        int(v)
        for v in np.flatnonzero((np.asarray(bits) == sigma) & np.asarray(region))
    ]
    allowed_set = set(allowed)
    ang = {
        v: math.atan2(lat.centers[v, 1] - cy, lat.centers[v, 0] - cx) for v in allowed
    }

    def shift(u: int, v: int) -> int:
        # winding increment when stepping u -> v (crossing the cut at angle π)
        d = ang[v] - ang[u]
        if d > math.pi:
            return -1
        if d < -math.pi:
            return 1
        return 0

    for root in allowed:
        seen = {(root, 0)}
        frontier = [(root, 0)]
        while frontier:
            u, w = frontier.pop()
            for g in nbrs[u]:
                if g not in allowed_set:
                    continue
                nw = w + shift(u, g)
                if abs(nw) > 2:
                    continue
                if g == root and nw != 0:
                    return True
                if (g, nw) not in seen:
                    seen.add((g, nw))
                    frontier.append((g, nw))
    return False


def four_arm_oracle(
    lat: Lattice, bits, region, inner, outer, path_limit: int = 2_000_000
) -> bool:
    """Four pairwise-disjoint alternating-colour annulus crossings, by
    exhaustive search over quadruples of induced crossing paths."""
    bits = np.asarray(bits)
    paths: dict[int, list[tuple[frozenset, float]]] = {0: [], 1: []}
    for colour in (0, 1):
        allowed = (bits == colour) & np.asarray(region)
        for p in induced_paths(lat, allowed, inner, outer, path_limit):
            a = math.atan2(lat.centers[p[0], 1], lat.centers[p[0], 0])
            paths[colour].append((frozenset(p), a))
    if len(paths[1]) < 2 or len(paths[0]) < 2:
        return False
    for (b1, ab1), (b2, ab2) in combinations(paths[1], 2):
        if b1 & b2:
            continue
        for (w1, aw1), (w2, aw2) in combinations(paths[0], 2):
            if w1 & w2 or (w1 | w2) & (b1 | b2):
                continue
            # alternation: the two white endpoints must fall in different arcs
            # cut by the two black endpoints
            lo, hi = min(ab1, ab2), max(ab1, ab2)
            in1 = lo < aw1 < hi
            in2 = lo < aw2 < hi
            if in1 != in2:
                return True
    return False


def disjoint_pair_oracle(
    lat: Lattice, bits0, bits1, start, target, region, path_limit: int = 2_000_000
) -> bool:
    """Exhaustive: a black arm in bits0 and one in bits1, hexagon-disjoint."""
    a0 = (np.asarray(bits0) == 1) & np.asarray(region)
    a1 = (np.asarray(bits1) == 1) & np.asarray(region)
    p0s = induced_paths(lat, a0, start, target, path_limit)
    if not p0s:
        return False
    p1s = induced_paths(lat, a1, start, target, path_limit)
    for p0 in p0s:
        s0 = set(p0)
        for p1 in p1s:
            if not s0 & set(p1):
                return True
    return False


def exact_probability(lat: Lattice, event: Callable[[np.ndarray], bool]) -> Fraction:
    """Full enumeration over all colourings of the lattice."""
    n = lat.size
    if n > MAX_ORACLE_HEXES:
        raise OracleSizeError(f"exact enumeration capped at {MAX_ORACLE_HEXES} hexagons")
    hits = 0
    bits = np.empty(n, dtype=np.uint8)
    for m in range(1 << n):
        for i in range(n):
            bits[i] = (m >> i) & 1
        if event(bits):
            hits += 1
    return Fraction(hits, 1 << n)


def exact_probability_masked(lat: Lattice, relevant, event: Callable[[np.ndarray], bool]) -> Fraction:
    """Enumeration over the relevant hexagons only; the event must not
    depend on the rest (left white)."""
    idx = np.flatnonzero(np.asarray(relevant))
    m = len(idx)
    if m > MAX_ORACLE_HEXES:
        raise OracleSizeError(f"masked enumeration capped at {MAX_ORACLE_HEXES} hexagons")
    hits = 0
    bits = np.zeros(lat.size, dtype=np.uint8)
    for w in range(1 << m):
        for j in range(m):
            bits[idx[j]] = (w >> j) & 1
        if event(bits):
            hits += 1
    return Fraction(hits, 1 << m)


def exact_pair_probability(
    lat: Lattice, t: Fraction, event: Callable[[np.ndarray, np.ndarray], bool]
) -> Fraction:
    """Exact law of (ω, ω_t) on a tiny lattice: sum over (ω, flip mask)."""
    n = lat.size
    if 2 * n > MAX_ORACLE_HEXES:
        raise OracleSizeError("pair enumeration capped at 2n <= 22")
    t = Fraction(t)
    total = Fraction(0)
    b0 = np.empty(n, dtype=np.uint8)
    b1 = np.empty(n, dtype=np.uint8)
    for m in range(1 << n):
        for i in range(n):
            b0[i] = (m >> i) & 1
        for e in range(1 << n):
            d = bin(e).count("1")
            for i in range(n):
                b1[i] = b0[i] ^ ((e >> i) & 1)
            if event(b0, b1):
                total += Fraction(1, 1 << n) * t**d * (1 - t) ** (n - d)
    return total
