"""Sampling of (ω, ω_t) on the hexagonal lattice and arm-event detectors.

Colour bit 1 = black.  Detectors are pure functions of a colour array over the
dense hexagon ids of a Lattice; the heavy loops are numba kernels.  The
Detectors class caches region masks per lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .lattice import (
    Annulus,
    BoxBoundary,
    Lattice,
    Rect,
    RegionUnion,
    annulus,
    box,
    frac,
)

BLACK = 1
WHITE = 0

YES = 1
NO = 0
UNKNOWN = -1


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: identical (seed, stream) gives identical bits."""

    seed: int
    stream: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass
class PercoConfig:
    lattice: Lattice
    bits: np.ndarray  # uint8, 1 = black


def sample(lat: Lattice, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, lat.size, dtype=np.uint8)


def apply_noise(bits: np.ndarray, t: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= t <= 1:
        raise ValueError("noise level must lie in [0, 1]")
    flips = (rng.random(bits.size) < t).astype(np.uint8)
    return bits ^ flips


# ---------------------------------------------------------------- kernels


@njit(cache=True)
def _reach(neighbors, allowed, start, target):
    """True iff some allowed start vertex reaches an allowed target vertex."""
    n = allowed.shape[0]
    visited = np.zeros(n, np.uint8)
    stack = np.empty(n, np.int32)
    top = 0
    for i in range(n):
        if start[i] and allowed[i]:
            if target[i]:
                return True
            visited[i] = 1
            stack[top] = i
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for j in range(6):
            g = neighbors[v, j]
            if g >= 0 and allowed[g] and visited[g] == 0:
                if target[g]:
                    return True
                visited[g] = 1
                stack[top] = g
                top += 1
    return False


@njit(cache=True)
def _reach_path(neighbors, allowed, start, target, out_path):
    """Like _reach but writes one witnessing path into out_path; returns its
    length (0 when no connection)."""
    n = allowed.shape[0]
    parent = np.full(n, -2, np.int32)
    stack = np.empty(n, np.int32)
    top = 0
    hit = -1
    for i in range(n):
        if start[i] and allowed[i]:
            parent[i] = -1
            if target[i]:
                hit = i
                break
            stack[top] = i
            top += 1
    while hit < 0 and top > 0:
        top -= 1
        v = stack[top]
        for j in range(6):
            g = neighbors[v, j]
            if g >= 0 and allowed[g] and parent[g] == -2:
                parent[g] = v
                if target[g]:
                    hit = g
                    break
                stack[top] = g
                top += 1
        else:
            continue
        break
    if hit < 0:
        return 0
    ln = 0
    v = hit
    while v >= 0:
        out_path[ln] = v
        ln += 1
        v = parent[v]
    return ln


@njit(cache=True)
def _four_arm_runs(neighbors, region, colors, ring_order, inner_mask, outer_mask):
    """Number of cyclic colour runs among annulus-crossing cluster visits on
    the inner ring walk.  Four alternating arms exist iff the count is >= 4."""
    n = region.shape[0]
    labels = np.full(n, -1, np.int32)
    stack = np.empty(n, np.int32)
    nlab = 0
    for s in range(n):
        if region[s] and labels[s] < 0:
            lab = nlab
            nlab += 1
            labels[s] = lab
            col = colors[s]
            top = 0
            stack[top] = s
            top += 1
            while top > 0:
                top -= 1
                v = stack[top]
                for j in range(6):
                    g = neighbors[v, j]
                    if g >= 0 and region[g] and labels[g] < 0 and colors[g] == col:
                        labels[g] = lab
                        stack[top] = g
                        top += 1
    touch_in = np.zeros(nlab, np.uint8)
    touch_out = np.zeros(nlab, np.uint8)
    for v in range(n):
        if region[v]:
            if inner_mask[v]:
                touch_in[labels[v]] = 1
            if outer_mask[v]:
                touch_out[labels[v]] = 1
    runs = 0
    first_col = -1
    last_col = -1
    for idx in range(ring_order.shape[0]):
        v = ring_order[idx]
        lab = labels[v]
        if lab < 0:
            continue
        if touch_in[lab] == 0 or touch_out[lab] == 0:
            continue
        c = colors[v]
        if first_col < 0:
            first_col = c
            last_col = c
            runs = 1
        elif c != last_col:
            runs += 1
            last_col = c
    if runs > 1 and last_col == first_col:
        runs -= 1
    return runs


@njit(cache=True)
def _augment(neighbors, allowed, start, target, node_flow, edge_flow, src_flow, snk_flow):
    """One BFS augmentation on the vertex-split unit-capacity flow network.
    States: v_in = v, v_out = v + n, source = 2n, sink = 2n + 1."""
    n = allowed.shape[0]
    parent = np.full(2 * n + 2, -2, np.int32)
    queue = np.empty(2 * n + 2, np.int32)
    head = 0
    tail = 0
    src = 2 * n
    snk = 2 * n + 1
    parent[src] = -1
    for v in range(n):
        if start[v] and allowed[v] and src_flow[v] == 0:
            parent[v] = src
            queue[tail] = v
            tail += 1
    found = False
    while head < tail and not found:
        s = queue[head]
        head += 1
        if s < n:
            v = s
            # forward through the vertex
            if node_flow[v] == 0 and parent[v + n] == -2:
                parent[v + n] = s
                queue[tail] = v + n
                tail += 1
            # cancel flow on an edge g_out -> v_in
            for j in range(6):
                g = neighbors[v, j]
                if g >= 0 and allowed[g] and edge_flow[g, j ^ 1] == 1:
                    if parent[g + n] == -2:
                        parent[g + n] = s
                        queue[tail] = g + n
                        tail += 1
        else:
            v = s - n
            if target[v] and snk_flow[v] == 0:
                parent[snk] = s
                found = True
                break
            for j in range(6):
                g = neighbors[v, j]
                if g >= 0 and allowed[g] and edge_flow[v, j] == 0 and parent[g] == -2:
                    parent[g] = s
                    queue[tail] = g
                    tail += 1
            # cancel the vertex passage
            if node_flow[v] == 1 and parent[v] == -2:
                parent[v] = s
                queue[tail] = v
                tail += 1
    if not found:
        return False
    cur = snk
    prev = parent[cur]
    while prev >= 0:
        if cur == snk:
            snk_flow[prev - n] = 1
        elif prev == src:
            src_flow[cur] = 1
        elif prev < n and cur == prev + n:
            node_flow[prev] = 1
        elif prev >= n and cur == prev - n:
            node_flow[cur] = 0
        elif prev >= n and cur < n:
            v = prev - n
            for j in range(6):
                if neighbors[v, j] == cur:
                    edge_flow[v, j] = 1
                    break
        else:
            # prev = v_in, cur = g_out: cancelled edge g_out -> v_in
            g = cur - n
            for j in range(6):
                if neighbors[g, j] == prev:
                    edge_flow[g, j] = 0
                    break
        cur = prev
        prev = parent[cur]
    return True


@njit(cache=True)
def _two_disjoint_flow(neighbors, allowed, start, target):
    """True iff two vertex-disjoint allowed paths from starts to targets exist."""
    n = allowed.shape[0]
    node_flow = np.zeros(n, np.uint8)
    edge_flow = np.zeros((n, 6), np.uint8)
    src_flow = np.zeros(n, np.uint8)
    snk_flow = np.zeros(n, np.uint8)
    if not _augment(neighbors, allowed, start, target, node_flow, edge_flow, src_flow, snk_flow):
        return False
    return _augment(neighbors, allowed, start, target, node_flow, edge_flow, src_flow, snk_flow)


@njit(cache=True)
def _join_pivotal(neighbors, region, occupied, start, target, out):
    """Pivotal sites when the arm is absent: vacant sites whose occupation
    would join a start-connected occupied cluster to a target-connected one.

    Labels occupied clusters inside the region, flags which reach starts and
    which reach targets, then marks vacant sites bridging both sides.
    """
    n = region.shape[0]
    labels = np.full(n, -1, np.int32)
    stack = np.empty(n, np.int32)
    nlab = 0
    for s in range(n):
        if region[s] and occupied[s] and labels[s] < 0:
            lab = nlab
            nlab += 1
            labels[s] = lab
            top = 0
            stack[top] = s
            top += 1
            while top > 0:
                top -= 1
                v = stack[top]
                for j in range(6):
                    g = neighbors[v, j]
                    if g >= 0 and region[g] and occupied[g] and labels[g] < 0:
                        labels[g] = lab
                        stack[top] = g
                        top += 1
    reach_s = np.zeros(nlab + 1, np.uint8)
    reach_t = np.zeros(nlab + 1, np.uint8)
    for v in range(n):
        if labels[v] >= 0:
            if start[v]:
                reach_s[labels[v]] = 1
            if target[v]:
                reach_t[labels[v]] = 1
    for v in range(n):
        out[v] = 0
        if not region[v] or occupied[v]:
            continue
        side_s = start[v]
        side_t = target[v]
        for j in range(6):
            g = neighbors[v, j]
            if g >= 0 and labels[g] >= 0:
                if reach_s[labels[g]]:
                    side_s = True
                if reach_t[labels[g]]:
                    side_t = True
        if side_s and side_t:
            out[v] = 1


@njit(cache=True)
def _cut_pivotal(neighbors, region, occupied, starts, targets, is_start, is_target, out):
    """Pivotal sites when the arm is present: occupied sites lying on every
    start-to-target path.

    Works on the occupied subgraph augmented with a virtual source s (adjacent
    to every start site) and virtual sink t (adjacent to every target site).
    One full iterative DFS from s computes discovery times and low-links; a
    vertex p on the s-to-t tree path separates s from t iff the tree child of
    p towards t has no back edge above p (low >= disc[p])."""
    n = region.shape[0]
    for v in range(n):
        out[v] = 0
    s_node = n
    t_node = n + 1
    disc = np.full(n + 2, -1, np.int32)
    low = np.empty(n + 2, np.int32)
    parent = np.full(n + 2, -2, np.int32)
    stack_v = np.empty(n + 2, np.int32)
    stack_j = np.empty(n + 2, np.int32)

    disc[s_node] = 0
    low[s_node] = 0
    parent[s_node] = -1
    timer = 1
    top = 0
    stack_v[top] = s_node
    stack_j[top] = 0
    top += 1
    while top > 0:
        v = stack_v[top - 1]
        j = stack_j[top - 1]
        # enumerate neighbour slot j of v
        g = -1
        done = False
        if v == s_node:
            if j < starts.shape[0]:
                g = starts[j]
            else:
                done = True
        elif v == t_node:
            if j < targets.shape[0]:
                g = targets[j]
            else:
                done = True
        else:
            if j < 6:
                g = neighbors[v, j]
                if g >= 0 and not (region[g] and occupied[g]):
                    g = -1
            elif j == 6:
                if is_start[v]:
                    g = s_node
            elif j == 7:
                if is_target[v]:
                    g = t_node
            else:
                done = True
        if done:
            top -= 1
            p = parent[v]
            if p >= 0 and low[v] < low[p]:
                low[p] = low[v]
            continue
        stack_j[top - 1] = j + 1
        if g < 0:
            continue
        if disc[g] < 0:
            parent[g] = v
            disc[g] = timer
            low[g] = timer
            timer += 1
            stack_v[top] = g
            stack_j[top] = 0
            top += 1
        elif g != parent[v]:
            if disc[g] < low[v]:
                low[v] = disc[g]
    if disc[t_node] < 0:
        return
    c = t_node
    p = parent[c]
    while p >= 0:
        if p < n and low[c] >= disc[p]:
            out[p] = 1
        c = p
        p = parent[c]


# ------------------------------------------------------------- detectors


def _as_bits(c) -> np.ndarray:
    return c.bits if isinstance(c, PercoConfig) else c


class Detectors:
    """Arm-event detectors bound to one lattice; masks are cached."""

    def __init__(self, lat: Lattice):
        self.lat = lat
        self.nbr = lat.neighbor_table
        self._start7 = lat.origin_start_mask()

    # -- mask helpers

    def box_mask(self, n) -> np.ndarray:
        return self.lat.mask(box(n))

    def boundary_mask(self, n) -> np.ndarray:
        return self.lat.mask(BoxBoundary(frac(n)))

    def side_mask(self, rect: Rect, side: str) -> np.ndarray:
        if side == "left":
            seg = Rect(rect.x0, rect.x0, rect.y0, rect.y1)
        elif side == "right":
            seg = Rect(rect.x1, rect.x1, rect.y0, rect.y1)
        elif side == "bottom":
            seg = Rect(rect.x0, rect.x1, rect.y0, rect.y0)
        elif side == "top":
            seg = Rect(rect.x0, rect.x1, rect.y1, rect.y1)
        else:
            raise ValueError(f"unknown side {side!r}")
        return self.lat.mask(seg)

    def ring_order(self, inner_mask: np.ndarray, cx: float = 0.0, cy: float = 0.0) -> np.ndarray:
        ids = np.flatnonzero(inner_mask)
        ang = np.arctan2(self.lat.centers[ids, 1] - cy, self.lat.centers[ids, 0] - cx)
        return ids[np.argsort(ang)].astype(np.int32)

    def adjacent_mask(self, mask: np.ndarray, include_off_lattice: bool = False) -> np.ndarray:
        """Sites with a neighbour inside `mask` (optionally counting missing
        neighbours at the lattice edge as inside)."""
        out = np.zeros(self.lat.size, dtype=bool)
        for j in range(6):
            col = self.nbr[:, j]
            ok = col >= 0
            out[ok] |= mask[col[ok]]
            if include_off_lattice:
                out[~ok] = True
        return out

    def annulus_contacts(self, ann: Annulus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(region, inner contact, outer contact) for an annulus, with contact
        defined by adjacency: inner contact sites touch the hole core (faces
        contained in the inner box), outer contact sites touch a hexagon
        beyond the outer box or the lattice edge."""
        region = self.lat.mask(ann)
        outer_box = Rect(ann.cx - ann.outer, ann.cx + ann.outer,
                         ann.cy - ann.outer, ann.cy + ann.outer)
        inner_box = Rect(ann.cx - ann.inner, ann.cx + ann.inner,
                         ann.cy - ann.inner, ann.cy + ann.inner)
        core = self.lat.mask(inner_box) & ~region
        beyond = ~self.lat.mask(outer_box)
        inner = self.adjacent_mask(core) & region
        outer = self.adjacent_mask(beyond, include_off_lattice=True) & region
        return region, inner, outer

    # -- detectors

    def has_one_arm(self, c, sigma: int, n) -> bool:
        bits = _as_bits(c)
        allowed = (bits == sigma) & self.box_mask(n)
        return _reach(self.nbr, allowed, self._start7, self.boundary_mask(n))

    def has_crossing(self, c, sigma: int, rect: Rect, direction: str = "lr") -> bool:
        bits = _as_bits(c)
        allowed = (bits == sigma) & self.lat.mask(rect)
        if direction == "lr":
            s, t = self.side_mask(rect, "left"), self.side_mask(rect, "right")
        elif direction == "tb":
            s, t = self.side_mask(rect, "top"), self.side_mask(rect, "bottom")
        else:
            raise ValueError(f"unknown direction {direction!r}")
        return _reach(self.nbr, allowed, s, t)

    def has_inner_outer_chain(self, c, sigma: int, ann: Annulus) -> bool:
        bits = _as_bits(c)
        region, inner, outer = self.annulus_contacts(ann)
        allowed = (bits == sigma) & region
        return _reach(self.nbr, allowed, inner, outer)

    def has_circuit(self, c, sigma: int, ann: Annulus) -> bool:
        """σ-circuit in the annulus surrounding the hole, by duality: no
        opposite-colour chain from the inner to the outer boundary."""
        return not self.has_inner_outer_chain(c, 1 - sigma, ann)

    def has_four_arm(self, c, k, n) -> bool:
        """Four alternating-colour arms crossing Λ_{k,n}; k=0 means arms from
        the origin hexagon's neighbours to ∂Λ_n."""
        bits = _as_bits(c)
        if frac(k) == 0:
            region = self.box_mask(n).copy()
            region[self.lat.origin] = False
            inner = self._start7.copy()
            inner[self.lat.origin] = False
            beyond = ~self.box_mask(n)
            outer = self.adjacent_mask(beyond, include_off_lattice=True) & region
        else:
            region, inner, outer = self.annulus_contacts(annulus(k, n))
        ring = self.ring_order(inner)
        runs = _four_arm_runs(self.nbr, region, bits, ring, inner, outer)
        return runs >= 4

    def has_disjoint_two_black_static(self, c, n) -> bool:
        bits = _as_bits(c)
        allowed = (bits == BLACK) & self.box_mask(n)
        return _two_disjoint_flow(self.nbr, allowed, self._start7, self.boundary_mask(n))

    def has_disjoint_two_arms_dynamic(self, c0, c1, n, budget: int = 50000) -> int:
        """YES / NO / UNKNOWN: a black arm in c0 and a black arm in c1 with
        disjoint hexagon sets.  Greedy two-pass, then exhaustive search over
        induced arm paths of c0 with reachability pruning in c1."""
        b0, b1 = _as_bits(c0), _as_bits(c1)
        if b0.shape != b1.shape:
            raise ValueError("configurations live on different lattices")
        region = self.box_mask(n)
        target = self.boundary_mask(n)
        a0 = (b0 == BLACK) & region
        a1 = (b1 == BLACK) & region
        if not _reach(self.nbr, a0, self._start7, target):
            return NO
        if not _reach(self.nbr, a1, self._start7, target):
            return NO
        path = np.empty(self.lat.size, np.int32)
        for first, second in ((a0, a1), (a1, a0)):
            ln = _reach_path(self.nbr, first, self._start7, target, path)
            if ln > 0:
                blocked = second.copy()
                blocked[path[:ln]] = False
                if _reach(self.nbr, blocked, self._start7, target):
                    return YES
        return self._exhaustive_disjoint(a0, a1, target, budget)

    def _exhaustive_disjoint(self, a0, a1, target, budget) -> int:
        nbr = self.nbr
        neighbors_of = [
            [g for g in nbr[v] if g >= 0] for v in range(self.lat.size)
        ]
        starts = [v for v in np.flatnonzero(self._start7) if a0[v]]
        expansions = 0

        def other_reaches(blocked_set) -> bool:
            allowed = a1.copy()
            for v in blocked_set:
                allowed[v] = False
            return bool(_reach(nbr, allowed, self._start7, target))

        # DFS over induced black paths of c0
        def dfs(path: list, in_path: set) -> int:
            nonlocal expansions
            v = path[-1]
            if target[v]:
                return YES if other_reaches(in_path) else NO
            if not other_reaches(in_path):
                return NO
            saw_unknown = False
            for g in neighbors_of[v]:
                if not a0[g] or g in in_path:
                    continue
                # induced-path condition: g only adjacent to the path tip
                touches = sum(1 for h in neighbors_of[g] if h in in_path)
                if touches > 1:
                    continue
                if expansions >= budget:
                    return UNKNOWN
                expansions += 1
                path.append(g)
                in_path.add(g)
                r = dfs(path, in_path)
                path.pop()
                in_path.remove(g)
                if r == YES:
                    return YES
                if r == UNKNOWN:
                    saw_unknown = True
            return UNKNOWN if saw_unknown else NO

        saw_unknown = False
        for s in starts:
            # other starts may not be adjacent prefix members; each start is
            # a fresh path root
            r = dfs([s], {s})
            if r == YES:
                return YES
            if r == UNKNOWN:
                saw_unknown = True
        return UNKNOWN if saw_unknown else NO

    def has_separated_arm(self, c, sigma: int, k, n=None, variant: str = "short") -> bool:
        bits = _as_bits(c)
        k = frac(k)
        if sigma == BLACK:
            R = Rect(-k, k, -3 * k, k)
            end = self.side_mask(R, "bottom")
        else:
            R = Rect(-k, k, -k, 3 * k)
            end = self.side_mask(R, "top")
        allowed = (bits == sigma) & self.lat.mask(R)
        first = _reach(self.nbr, allowed, self._start7, end)
        if variant == "short":
            return first
        if variant != "long":
            raise ValueError(f"unknown variant {variant!r}")
        if n is None or not 10 * k <= frac(n):
            raise ValueError("long variant requires 10k <= n")
        if not first:
            return False
        n = frac(n)
        chimney_y = (5 * k, 7 * k) if sigma == BLACK else (-7 * k, -5 * k)
        S = RegionUnion((annulus(7 * k, n), Rect(-k, k, chimney_y[0], chimney_y[1])))
        sm = self.lat.mask(S)
        allowed_s = (bits == sigma) & sm
        start_s = self.lat.mask(BoxBoundary(6 * k)) & sm
        return _reach(self.nbr, allowed_s, start_s, self.boundary_mask(n))

    # -- interlaced circuits

    def _interlaced_annuli(self, k) -> tuple[Annulus, Annulus]:
        k = frac(k)
        return (
            Annulus(-2 * k, -2 * k, 3 * k, 5 * k),
            Annulus(2 * k, 2 * k, 3 * k, 5 * k),
        )

    def interlaced_event(self, c, x: int, y: int, k) -> bool:
        """Black circuit in A+ with x, y forced black, and white circuit in A-
        with x, y forced white."""
        bits = _as_bits(c)
        a_plus, a_minus = self._interlaced_annuli(k)
        up = bits.copy()
        up[x] = BLACK
        up[y] = BLACK
        if not self.has_circuit(up, BLACK, a_plus):
            return False
        dn = bits.copy()
        dn[x] = WHITE
        dn[y] = WHITE
        return self.has_circuit(dn, WHITE, a_minus)

    def interlaced_decorated(self, c, x: int, y: int, k, sigma: int) -> bool:
        bits = _as_bits(c)
        return bits[y] == sigma and self.interlaced_event(c, x, y, k)

    def interlaced_dynamic(self, c0, c1, x: int, k, candidates_y) -> bool:
        """Union over y of {c0 in the white-decorated event, c1 in the
        black-decorated event} at (x, y)."""
        for y in candidates_y:
            if self.interlaced_decorated(c0, x, int(y), k, WHITE) and self.interlaced_decorated(
                c1, x, int(y), k, BLACK
            ):
                return True
        return False

    # -- pivotality

    def pivotal_grad(self, detector, c, x: int) -> int:
        """1_{event}(c with x black) - 1_{event}(c with x white)."""
        bits = _as_bits(c).copy()
        bits[x] = BLACK
        up = detector(bits)
        bits[x] = WHITE
        dn = detector(bits)
        return int(up) - int(dn)

    def one_arm_pivotal_mask(self, c, sigma: int, n) -> np.ndarray:
        """Boolean mask of sites x with 1_{A_n(σ)}(c^x or c_x) flipping, i.e.
        |∇_x 1_{A_n(σ)}(c)| = 1, computed in one pass."""
        bits = _as_bits(c)
        region = self.box_mask(n)
        occupied = bits == sigma
        target = self.boundary_mask(n)
        out = np.zeros(self.lat.size, np.uint8)
        # the origin hexagon's own colour is irrelevant except as a path site;
        # starts are the seven hexagons meeting the origin face
        if _reach(self.nbr, occupied & region, self._start7, target):
            ok = region & occupied
            starts = np.flatnonzero(self._start7 & ok).astype(np.int32)
            targets = np.flatnonzero(target & ok).astype(np.int32)
            _cut_pivotal(
                self.nbr, region, occupied, starts, targets, self._start7, target, out
            )
        else:
            _join_pivotal(self.nbr, region, occupied, self._start7, target, out)
        return out.astype(bool)
