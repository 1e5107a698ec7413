import numpy as np
import pytest

from hexperc.engine import (
    BLACK,
    NO,
    UNKNOWN,
    WHITE,
    YES,
    Detectors,
    RngStream,
    apply_noise,
    sample,
)
from hexperc.lattice import Rect, annulus, frac, get_lattice
from hexperc.oracles import (
    circuit_oracle,
    disjoint_pair_oracle,
    four_arm_oracle,
    one_arm_oracle,
)


def rng_for(seed, stream=0):
    return RngStream(seed, stream).generator()


def test_rng_stream_determinism():
    a = rng_for(7, 3).random(100)
    b = rng_for(7, 3).random(100)
    c = rng_for(7, 4).random(100)
    assert (a == b).all()
    assert not (a == c).all()


def test_sample_shape_and_density():
    lat = get_lattice(20)
    bits = sample(lat, rng_for(1))
    assert bits.shape == (lat.size,) and bits.dtype == np.uint8
    assert set(np.unique(bits)) <= {0, 1}
    assert abs(bits.mean() - 0.5) < 0.05


def test_apply_noise_endpoints():
    lat = get_lattice(10)
    bits = sample(lat, rng_for(2))
    assert (apply_noise(bits, 0.0, rng_for(3)) == bits).all()
    assert (apply_noise(bits, 1.0, rng_for(3)) == 1 - bits).all()
    with pytest.raises(ValueError):
        apply_noise(bits, 1.5, rng_for(3))


def test_apply_noise_flip_rate():
    lat = get_lattice(40)
    bits = sample(lat, rng_for(4))
    flipped = apply_noise(bits, 0.25, rng_for(5)) ^ bits
    assert abs(flipped.mean() - 0.25) < 0.02


def test_one_arm_color_symmetry():
    lat = get_lattice(6)
    det = Detectors(lat)
    rng = rng_for(6)
    for _ in range(50):
        bits = sample(lat, rng)
        assert det.has_one_arm(bits, BLACK, 5) == det.has_one_arm(1 - bits, WHITE, 5)


def test_one_arm_monotone_in_black():
    lat = get_lattice(6)
    det = Detectors(lat)
    rng = rng_for(7)
    for _ in range(30):
        bits = sample(lat, rng)
        if not det.has_one_arm(bits, BLACK, 5):
            continue
        more = bits.copy()
        more[rng.integers(0, lat.size, 5)] = BLACK
        assert det.has_one_arm(more, BLACK, 5)


def test_one_arm_matches_oracle():
    lat = get_lattice(2)
    det = Detectors(lat)
    rng = rng_for(8)
    region = det.box_mask(2)
    target = det.boundary_mask(2)
    for _ in range(400):
        bits = sample(lat, rng)
        got = det.has_one_arm(bits, BLACK, 2)
        want = one_arm_oracle(lat, bits, BLACK, det._start7, target, region)
        assert got == want


def test_circuit_matches_oracle():
    lat = get_lattice(4)
    det = Detectors(lat)
    ann = annulus(1, 3)
    rng = rng_for(9)
    for _ in range(300):
        bits = sample(lat, rng)
        assert det.has_circuit(bits, BLACK, ann) == circuit_oracle(
            lat, bits, BLACK, lat.mask(ann), 0.0, 0.0
        )


def test_four_arm_matches_oracle():
    lat = get_lattice(4)
    det = Detectors(lat)
    rng = rng_for(10)
    region, inner, outer = det.annulus_contacts(annulus(1, 3))
    for _ in range(300):
        bits = sample(lat, rng)
        got = det.has_four_arm(bits, 1, 3)
        want = four_arm_oracle(lat, bits, region, inner, outer)
        assert got == want


def test_four_arm_needs_both_colors():
    lat = get_lattice(4)
    det = Detectors(lat)
    allb = np.ones(lat.size, np.uint8)
    assert not det.has_four_arm(allb, 1, 3)
    assert not det.has_four_arm(1 - allb, 1, 3)


def test_crossing_trivial_configs():
    lat = get_lattice(4)
    det = Detectors(lat)
    rect = Rect(frac(0), frac(3), frac(0), frac(3))
    allb = np.ones(lat.size, np.uint8)
    assert det.has_crossing(allb, BLACK, rect, "lr")
    assert det.has_crossing(allb, BLACK, rect, "tb")
    assert not det.has_crossing(1 - allb, BLACK, rect, "lr")
    with pytest.raises(ValueError):
        det.has_crossing(allb, BLACK, rect, "diag")


def test_crossing_monotone_in_black():
    lat = get_lattice(5)
    det = Detectors(lat)
    rect = Rect(frac(0), frac(4), frac(0), frac(4))
    rng = rng_for(11)
    for _ in range(100):
        bits = sample(lat, rng)
        if not det.has_crossing(bits, BLACK, rect, "lr"):
            continue
        more = bits.copy()
        more[rng.integers(0, lat.size, 8)] = BLACK
        assert det.has_crossing(more, BLACK, rect, "lr")


def test_dynamic_disjoint_diagonal_is_static():
    lat = get_lattice(4)
    det = Detectors(lat)
    rng = rng_for(12)
    for _ in range(200):
        bits = sample(lat, rng)
        got = det.has_disjoint_two_arms_dynamic(bits, bits, 3)
        assert got in (YES, NO)
        assert (got == YES) == det.has_disjoint_two_black_static(bits, 3)


def test_dynamic_disjoint_matches_oracle():
    lat = get_lattice(3)
    det = Detectors(lat)
    rng = rng_for(13)
    region = det.box_mask(2)
    target = det.boundary_mask(2)
    for _ in range(200):
        b0, b1 = sample(lat, rng), sample(lat, rng)
        got = det.has_disjoint_two_arms_dynamic(b0, b1, 2)
        if got == UNKNOWN:
            continue
        want = disjoint_pair_oracle(lat, b0, b1, det._start7, target, region)
        assert (got == YES) == want


def test_pivotal_mask_matches_brute_force():
    lat = get_lattice(3)
    det = Detectors(lat)
    rng = rng_for(14)
    event = lambda bits: det.has_one_arm(bits, BLACK, 2)
    for _ in range(60):
        bits = sample(lat, rng)
        mask = det.one_arm_pivotal_mask(bits, BLACK, 2)
        for x in range(lat.size):
            assert mask[x] == (det.pivotal_grad(event, bits, x) != 0)


def test_separated_arm_implies_arm():
    lat = get_lattice(9)
    det = Detectors(lat)
    rng = rng_for(15)
    hits = 0
    for _ in range(300):
        bits = sample(lat, rng)
        if det.has_separated_arm(bits, BLACK, 3):
            hits += 1
            assert det.has_one_arm(bits, BLACK, 3)
    assert hits > 0


def test_separated_arm_long_variant_guard():
    lat = get_lattice(20)
    det = Detectors(lat)
    bits = np.ones(lat.size, np.uint8)
    assert det.has_separated_arm(bits, BLACK, 2, n=20, variant="long")
    with pytest.raises(ValueError):
        det.has_separated_arm(bits, BLACK, 2, n=10, variant="long")
    with pytest.raises(ValueError):
        det.has_separated_arm(bits, BLACK, 2, variant="diag")


def interlaced_fixture(k=2):
    """A configuration in the interlaced event: a black ring carrying the
    circuit around the first annulus, with a few ring hexes near x and y
    whitened so the opposite circuit can thread through the shared boxes."""
    from hexperc.lattice import BoxBoundary

    lat = get_lattice(7 * k)
    det = Detectors(lat)
    ring = lat.mask(BoxBoundary(frac(4 * k), frac(-2 * k), frac(-2 * k)))
    ids = np.flatnonzero(ring)
    c = lat.centers
    x = int(ids[np.argmin(((c[ids] - [-2 * k, 2 * k]) ** 2).sum(1))])
    y = int(ids[np.argmin(((c[ids] - [2 * k, -2 * k]) ** 2).sum(1))])
    nearx = [int(v) for v in ids if v not in (x, y) and np.hypot(*(c[v] - c[x])) < 1.6]
    neary = [int(v) for v in ids if v not in (x, y) and np.hypot(*(c[v] - c[y])) < 1.6]
    base = ring.astype(np.uint8)
    for rx in range(1, 1 << len(nearx)):
        for ry in range(1, 1 << len(neary)):
            bits = base.copy()
            for j, v in enumerate(nearx):
                if rx >> j & 1:
                    bits[v] = WHITE
            for j, v in enumerate(neary):
                if ry >> j & 1:
                    bits[v] = WHITE
            if det.interlaced_event(bits, x, y, k):
                return lat, det, bits, x, y
    raise AssertionError("no satisfying interlaced configuration found")


def test_interlaced_event_constructed():
    lat, det, bits, x, y = interlaced_fixture(2)
    assert det.interlaced_event(bits, x, y, 2)
    # the event ignores the stored colours of x and y
    other = bits.copy()
    other[x] ^= 1
    other[y] ^= 1
    assert det.interlaced_event(other, x, y, 2)
    # monochrome configurations cannot carry both circuits
    allb = np.ones(lat.size, np.uint8)
    assert not det.interlaced_event(allb, x, y, 2)
    assert not det.interlaced_event(1 - allb, x, y, 2)


def test_interlaced_decorated_checks_y_color():
    lat, det, bits, x, y = interlaced_fixture(2)
    for sigma in (BLACK, WHITE):
        forced = bits.copy()
        forced[y] = sigma
        assert det.interlaced_decorated(forced, x, y, 2, sigma)
        assert not det.interlaced_decorated(forced, x, y, 2, 1 - sigma)


def test_interlaced_dynamic_union():
    lat, det, bits, x, y = interlaced_fixture(2)
    b0 = bits.copy()
    b0[y] = WHITE
    b1 = bits.copy()
    b1[y] = BLACK
    assert det.interlaced_dynamic(b0, b1, x, 2, [y])
    assert not det.interlaced_dynamic(b1, b0, x, 2, [y])
