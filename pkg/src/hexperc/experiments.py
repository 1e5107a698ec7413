"""Monte Carlo estimators, exponent fits and the named lattice experiments.

Everything is seeded: samples come from counter-based Philox streams keyed
by (seed, stream id), replicas consume disjoint stream ids, and merged
counts do not depend on how samples were split across replicas.  Records
serialize byte-stably apart from the timestamp field.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .engine import (
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
from .lattice import Rect, annulus, frac, get_lattice

Z95 = 1.959963984540054

STORE_FIELDS = (
    "name",
    "params",
    "successes",
    "samples",
    "p_hat",
    "wilson_lo",
    "wilson_hi",
    "unknown",
    "seed",
    "version",
    "timestamp",
)


class BudgetError(RuntimeError):
    """Projected cost exceeds the configured budget."""


class InvalidEstimateError(RuntimeError):
    """Unknown rate of a budgeted detector too high to interpret."""


def wilson(successes: int, samples: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if samples <= 0:
        return (0.0, 1.0)
    p = successes / samples
    denom = 1.0 + z * z / samples
    center = (p + z * z / (2 * samples)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / samples + z * z / (4 * samples * samples))
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class EstimateRecord:
    name: str
    params: dict
    successes: int
    samples: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    unknown: int
    seed: int
    version: str
    timestamp: str
    wall_time: float = 0.0

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in STORE_FIELDS}

    @property
    def se_log(self) -> float:
        """Delta-method standard error of log p_hat."""
        if self.samples == 0 or self.p_hat <= 0:
            return math.inf
        return math.sqrt((1 - self.p_hat) / (self.samples * self.p_hat))


def make_record(
    name: str, params: dict, successes: int, samples: int, unknown: int, seed: int,
    wall_time: float = 0.0,
) -> EstimateRecord:
    lo, hi = wilson(successes, samples)
    return EstimateRecord(
        name=name,
        params=params,
        successes=int(successes),
        samples=int(samples),
        p_hat=successes / samples if samples else 0.0,
        wilson_lo=lo,
        wilson_hi=hi,
        unknown=int(unknown),
        seed=int(seed),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        wall_time=wall_time,
    )


class ResultsStore:
    """Append-only JSONL store with a CSV export of identical columns."""

    def __init__(self, path):
        self.path = Path(path)

    def append(self, record: EstimateRecord) -> None:
        line = json.dumps(record.to_json_dict(), sort_keys=True, separators=(",", ":"))
        with self.path.open("a") as fh:
            fh.write(line + "\n")

    def plan(self, name: str, params: dict, seed: int) -> None:
        """Crash-safe provenance: record the full parameter set up front."""
        self.append(make_record(name + "/plan", params, 0, 0, 0, seed))

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with self.path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def export_csv(self, dest) -> None:
        rows = self.load()
        with Path(dest).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(STORE_FIELDS)
            for r in rows:
                w.writerow(
                    [json.dumps(r[k], sort_keys=True, separators=(",", ":"))
                     if k == "params" else r[k] for k in STORE_FIELDS]
                )


# --------------------------------------------------------------- sampling core


def split_samples(n_samples: int, replicas: int) -> list[int]:
    base, extra = divmod(n_samples, replicas)
    return [base + (1 if r < extra else 0) for r in range(replicas)]


def run_counts(
    lat,
    eval_fn: Callable,
    n_counters: int,
    n_samples: int,
    seed: int,
    stream_base: int = 0,
    replicas: int = 1,
    t: float | None = None,
    force: str | None = None,
):
    """Draw (ω, ω_t) pairs and accumulate integer counters.

    eval_fn(det, bits0, bits1) returns a tuple of n_counters ints, or None
    for an Unknown outcome (excluded from the sample count, reported).
    The result depends only on (seed, stream_base, the split plan), so
    merging replica counts is associative and order-insensitive.
    """
    det = Detectors(lat)
    counts = np.zeros(n_counters, dtype=np.int64)
    unknown = 0
    used = 0
    for r, chunk in enumerate(split_samples(n_samples, replicas)):
        rng = RngStream(seed, stream_base + r).generator()
        for _ in range(chunk):
            b0 = sample(lat, rng)
            if force == "black":
                b0 = np.ones_like(b0)
            elif force == "white":
                b0 = np.zeros_like(b0)
            b1 = apply_noise(b0, t, rng) if t is not None else b0
            out = eval_fn(det, b0, b1)
            if out is None:
                unknown += 1
                continue
            used += 1
            for i, v in enumerate(out):
                counts[i] += int(v)
    return counts, used, unknown


def arm_event(spec: dict) -> Callable:
    """Compile a static event spec into a detector closure over one config."""
    kind = spec["kind"]
    if kind == "one_arm":
        sigma, n = spec["sigma"], spec["n"]
        return lambda det, b: det.has_one_arm(b, sigma, n)
    if kind == "two_arm_poly":
        n = spec["n"]
        return lambda det, b: det.has_one_arm(b, BLACK, n) and det.has_one_arm(b, WHITE, n)
    if kind == "four_arm":
        k, n = spec.get("k", 0), spec["n"]
        return lambda det, b: det.has_four_arm(b, k, n)
    if kind == "crossing":
        rect = Rect(frac(spec["x0"]), frac(spec["x1"]), frac(spec["y0"]), frac(spec["y1"]))
        sigma = spec.get("sigma", BLACK)
        direction = spec.get("direction", "lr")
        return lambda det, b: det.has_crossing(b, sigma, rect, direction)
    if kind == "circuit":
        ann = annulus(spec["k"], spec["n"])
        sigma = spec.get("sigma", BLACK)
        return lambda det, b: det.has_circuit(b, sigma, ann)
    if kind == "disjoint_two_black":
        n = spec["n"]
        return lambda det, b: det.has_disjoint_two_black_static(b, n)
    if kind == "separated":
        sigma, k = spec["sigma"], spec["k"]
        n = spec.get("n")
        variant = spec.get("variant", "short")
        return lambda det, b: det.has_separated_arm(b, sigma, k, n, variant)
    if kind == "origin_black":
        return lambda det, b: bool(b[det.lat.origin] == BLACK)
    raise ValueError(f"unknown event kind {kind!r}")


def estimate(
    spec: dict,
    lattice_n,
    n_samples: int,
    seed: int,
    replicas: int = 1,
    stream_base: int = 0,
    t: float | None = None,
    spec1: dict | None = None,
    force: str | None = None,
    store: ResultsStore | None = None,
    name: str | None = None,
    pitch=1,
) -> EstimateRecord:
    """Monte Carlo estimate of a static event, or of a dynamical pair
    {ω ∈ spec, ω_t ∈ spec1} when spec1 and t are given."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    ev0 = arm_event(spec)
    name = name or spec["kind"]
    params = dict(spec, lattice_n=str(lattice_n), replicas=replicas)
    if t is not None:
        params["t"] = t
    if spec1 is not None:
        if t is None:
            raise ValueError("a dynamical pair spec needs a noise level t")
        ev1 = arm_event(spec1)
        params["spec1"] = spec1

        def eval_fn(det, b0, b1):
            return (int(ev0(det, b0) and ev1(det, b1)),)
    else:

        def eval_fn(det, b0, b1):
            return (int(ev0(det, b0)),)

    lat = get_lattice(frac(lattice_n), frac(pitch))
    if store is not None:
        store.plan(name, params, seed)
    t0 = time.time()
    counts, used, unknown = run_counts(
        lat, eval_fn, 1, n_samples, seed, stream_base, replicas, t=t, force=force
    )
    rec = make_record(name, params, int(counts[0]), used, unknown, seed, time.time() - t0)
    if store is not None:
        store.append(rec)
    return rec


def inverse_probability_schedule(
    pilot_p: float, base_samples: int, cap: int | None = None
) -> int:
    """More samples where the pilot estimate is small, to keep log-scale
    error bars comparable across grid points.  Capped."""
    cap = cap if cap is not None else 8 * base_samples
    if pilot_p <= 0:
        return cap
    boost = min(8.0, max(1.0, 0.5 / pilot_p))
    return min(cap, max(base_samples, int(base_samples * boost)))


# ------------------------------------------------------------------ fitting


@dataclass
class FitResult:
    slope: float
    intercept: float
    stderr_slope: float
    n_points: int
    stderr_slope_prop: float | None = None

    @property
    def ci95(self) -> tuple[float, float]:
        se = self.stderr_slope_prop if self.stderr_slope_prop else self.stderr_slope
        return (self.slope - Z95 * se, self.slope + Z95 * se)


def fit_exponent(
    ns: Sequence[float], p_hats: Sequence[float], se_logs: Sequence[float] | None = None
) -> FitResult:
    """OLS of log p against log n; slope stderr from residuals, plus an
    error-propagated stderr when per-point log errors are supplied."""
    if len(ns) < 3:
        raise ValueError("need at least 3 grid points")
    if any(p <= 0 for p in p_hats):
        raise ValueError("all estimates must be positive for a log fit")
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(p_hats, dtype=float))
    m = len(x)
    xb = x.mean()
    sxx = float(((x - xb) ** 2).sum())
    w = (x - xb) / sxx
    slope = float((w * y).sum())
    intercept = float(y.mean() - slope * xb)
    resid = y - (intercept + slope * x)
    if m > 2:
        stderr = math.sqrt(float((resid**2).sum()) / (m - 2) / sxx)
    else:
        stderr = math.inf
    prop = None
    if se_logs is not None:
        prop = math.sqrt(float((w**2 * np.asarray(se_logs, dtype=float) ** 2).sum()))
    return FitResult(slope, intercept, stderr, m, prop)


def _var_log_ratio_nested(p_top: float, p_bot: float, n: int) -> float:
    # top ⊆ bot on shared samples: Cov(1_top, 1_bot) = p_top (1 - p_bot)
    return (1 / p_top - 1 / p_bot) / n


# ---------------------------------------------------------------- experiments


def experiment_theorem1(
    ns=(8, 16, 32, 64),
    samples: int | dict = 100_000,
    seed: int = 0,
    replicas: int = 1,
    store: ResultsStore | None = None,
) -> dict:
    """Ratios r_n = P[A_n(b) ∩ A_n(w)] / (P[A_n(b)] P[A_n(w)]) and the
    slope of log r_n against log n."""
    table = []
    for idx, n in enumerate(ns):
        nsamp = samples[n] if isinstance(samples, dict) else samples
        params = {"n": n, "samples": nsamp, "replicas": replicas}
        if store is not None:
            store.plan("theorem1", params, seed)
        lat = get_lattice(n)

        def eval_fn(det, b0, b1, n=n):
            ab = det.has_one_arm(b0, BLACK, n)
            aw = det.has_one_arm(b0, WHITE, n)
            return (int(ab and aw), int(ab), int(aw))

        t0 = time.time()
        counts, used, unk = run_counts(
            lat, eval_fn, 3, nsamp, seed, stream_base=64 * idx, replicas=replicas
        )
        wall = time.time() - t0
        names = ("theorem1/joint", "theorem1/one_arm_b", "theorem1/one_arm_w")
        recs = [make_record(nm, params, c, used, unk, seed, wall) for nm, c in zip(names, counts)]
        if store is not None:
            for r in recs:
                store.append(r)
        pj, pb, pw = (r.p_hat for r in recs)
        r_n = pj / (pb * pw)
        # delta method with the exact covariances of the shared indicators
        var = (
            (1 - pj) / pj - (1 - pb) / pb - (1 - pw) / pw + 2 * pj / (pb * pw) - 2
        ) / used
        se = math.sqrt(max(var, 0.0))
        table.append({"n": n, "p_joint": pj, "p_b": pb, "p_w": pw, "r": r_n, "se_log_r": se})
    fit = fit_exponent(
        [row["n"] for row in table],
        [row["r"] for row in table],
        [row["se_log_r"] for row in table],
    )
    return {"table": table, "fit": fit}


def experiment_theorem2(
    ns=(8, 16, 32, 64),
    samples: int | dict = 100_000,
    seed: int = 0,
    replicas: int = 1,
    store: ResultsStore | None = None,
) -> dict:
    """Ratios s_n = P[A_n(b) ∘ A_n(b)] / P[A_n(b) ∩ A_n(w)] and the slope
    of log s_n.  The third counter tracks the joint event for the ratio CI."""
    table = []
    for idx, n in enumerate(ns):
        nsamp = samples[n] if isinstance(samples, dict) else samples
        params = {"n": n, "samples": nsamp, "replicas": replicas}
        if store is not None:
            store.plan("theorem2", params, seed)
        lat = get_lattice(n)

        def eval_fn(det, b0, b1, n=n):
            d = det.has_disjoint_two_black_static(b0, n)
            tw = det.has_one_arm(b0, BLACK, n) and det.has_one_arm(b0, WHITE, n)
            return (int(d), int(tw), int(d and tw))

        t0 = time.time()
        counts, used, unk = run_counts(
            lat, eval_fn, 3, nsamp, seed, stream_base=64 * idx, replicas=replicas
        )
        wall = time.time() - t0
        names = ("theorem2/disjoint", "theorem2/two_arm_poly", "theorem2/both")
        recs = [make_record(nm, params, c, used, unk, seed, wall) for nm, c in zip(names, counts)]
        if store is not None:
            for r in recs:
                store.append(r)
        pd_, pt, p11 = (r.p_hat for r in recs)
        s_n = pd_ / pt
        var = (
            (1 - pd_) / pd_ + (1 - pt) / pt - 2 * (p11 - pd_ * pt) / (pd_ * pt)
        ) / used
        se = math.sqrt(max(var, 0.0))
        table.append({"n": n, "p_disjoint": pd_, "p_two_arm": pt, "s": s_n, "se_log_s": se})
    fit = fit_exponent(
        [row["n"] for row in table],
        [row["s"] for row in table],
        [row["se_log_s"] for row in table],
    )
    return {"table": table, "fit": fit}


def experiment_rsw(
    lams=(1, 2),
    ns=(8, 16, 32, 64),
    samples: int = 20_000,
    seed: int = 0,
    replicas: int = 1,
    store: ResultsStore | None = None,
) -> dict:
    """Left-right crossing probabilities of [0, λn] x [0, n]."""
    extent = max(int(lam * n) for lam in lams for n in ns)
    lat = get_lattice(extent)
    table = []
    idx = 0
    for lam in lams:
        for n in ns:
            rect = Rect(frac(0), frac(lam) * n, frac(0), frac(n))
            params = {"lam": lam, "n": n, "samples": samples, "replicas": replicas}
            if store is not None:
                store.plan("rsw", params, seed)

            def eval_fn(det, b0, b1, rect=rect):
                return (int(det.has_crossing(b0, BLACK, rect)),)

            t0 = time.time()
            counts, used, unk = run_counts(
                lat, eval_fn, 1, samples, seed, stream_base=64 * idx, replicas=replicas
            )
            rec = make_record("rsw/crossing", params, int(counts[0]), used, unk, seed,
                              time.time() - t0)
            if store is not None:
                store.append(rec)
            table.append({"lam": lam, "n": n, "p": rec.p_hat,
                          "lo": rec.wilson_lo, "hi": rec.wilson_hi})
            idx += 1
    return {"table": table}


def experiment_four_arm(
    scales=(1, 2, 4, 8, 16, 32, 64),
    pairs=((4, 32), (8, 32), (8, 64)),
    samples: int | dict = 100_000,
    seed: int = 0,
    replicas: int = 1,
    eq20_ns=(16, 32, 64),
    store: ResultsStore | None = None,
) -> dict:
    """Four-arm probability tables, quasi-multiplicativity ratios and the
    weighted-sum consistency ratio Σ_{i<=n} i α_i / (n² α_n)."""
    alpha: dict[int, EstimateRecord] = {}
    for idx, n in enumerate(scales):
        nsamp = samples[n] if isinstance(samples, dict) else samples
        rec = estimate(
            {"kind": "four_arm", "k": 0, "n": n}, n, nsamp, seed,
            replicas=replicas, stream_base=64 * idx, store=store, name="four_arm/alpha",
        )
        alpha[n] = rec
    annulus_recs: dict[tuple[int, int], EstimateRecord] = {}
    for jdx, (k, n) in enumerate(pairs):
        nsamp = samples.get((k, n), max(samples.values())) if isinstance(samples, dict) else samples
        rec = estimate(
            {"kind": "four_arm", "k": k, "n": n}, n, nsamp, seed,
            replicas=replicas, stream_base=64 * (len(scales) + jdx),
            store=store, name="four_arm/alpha_annulus",
        )
        annulus_recs[(k, n)] = rec
    ratios = {}
    for (k, n), rec in annulus_recs.items():
        num = alpha[k].p_hat * rec.p_hat
        den = alpha[n].p_hat
        se = math.sqrt(alpha[k].se_log ** 2 + rec.se_log ** 2 + alpha[n].se_log ** 2)
        ratios[(k, n)] = {"ratio": num / den, "se_log": se}
    xs = np.log(np.asarray(sorted(alpha), dtype=float))
    ys = np.log(np.asarray([alpha[n].p_hat for n in sorted(alpha)]))
    def alpha_interp(i: float) -> float:
        # geometric interpolation between measured scales, clamped outside
        return float(np.exp(np.interp(math.log(i), xs, ys)))
    eq20 = {}
    for n in eq20_ns:
        total = sum(i * alpha_interp(i) for i in range(1, n + 1))
        eq20[n] = total / (n * n * alpha[n].p_hat)
    return {"alpha": alpha, "annulus": annulus_recs, "ratios": ratios, "eq20": eq20}


def t_hat(n: int, alpha_n: float) -> float:
    """Characteristic noise scale min(1/(2 n² α_n), 1/4) from a measured α̂_n."""
    if alpha_n <= 0:
        return 0.25
    return min(1.0 / (2 * n * n * alpha_n), 0.25)


def experiment_noise_stability(
    ns=(16, 32, 64),
    samples: int | dict = 50_000,
    seed: int = 0,
    replicas: int = 1,
    alpha: dict[int, EstimateRecord] | None = None,
    t_multipliers=(1.0, 2.0),
    store: ResultsStore | None = None,
) -> dict:
    """P[ω, ω_t ∈ four-arm at scale n] at t = multiples of t̂_n, against α̂_n.

    α̂ is chained from the four-arm experiment when given, else measured here.
    """
    if alpha is None:
        alpha = experiment_four_arm(
            scales=ns, pairs=(), samples=samples, seed=seed,
            replicas=replicas, eq20_ns=(), store=store,
        )["alpha"]
    table = []
    idx = 0
    for n in ns:
        nsamp = samples[n] if isinstance(samples, dict) else samples
        th = t_hat(n, alpha[n].p_hat)
        for mult in t_multipliers:
            t = mult * th
            rec = estimate(
                {"kind": "four_arm", "k": 0, "n": n}, n, nsamp, seed,
                replicas=replicas, stream_base=1024 + 64 * idx, t=t,
                spec1={"kind": "four_arm", "k": 0, "n": n},
                store=store, name="noise/dynamic_four_arm",
            )
            rec.params.update({"t_hat": th, "t_multiplier": mult, "alpha_n": alpha[n].p_hat})
            ratio = rec.p_hat / alpha[n].p_hat
            se = math.sqrt(rec.se_log**2 + alpha[n].se_log**2)
            table.append({"n": n, "t": t, "t_hat": th, "mult": mult,
                          "p": rec.p_hat, "ratio": ratio, "se_log_ratio": se})
            idx += 1
    return {"alpha": alpha, "table": table}


def experiment_separation(
    ks=(8, 16, 32),
    samples: int | dict = 100_000,
    seed: int = 0,
    replicas: int = 1,
    alpha: dict[int, EstimateRecord] | None = None,
    t_multiplier: float = 1.0,
    store: ResultsStore | None = None,
) -> dict:
    """φ̂_k (black arm in ω, white arm in ω_t, to scale k) against its
    separated version with arms confined to the prescribed rectangles."""
    if alpha is None:
        alpha = experiment_four_arm(
            scales=ks, pairs=(), samples=samples, seed=seed,
            replicas=replicas, eq20_ns=(), store=store,
        )["alpha"]
    table = []
    for idx, k in enumerate(ks):
        nsamp = samples[k] if isinstance(samples, dict) else samples
        th = t_multiplier * t_hat(k, alpha[k].p_hat)
        lat = get_lattice(3 * k)
        params = {"k": k, "t": th, "samples": nsamp, "replicas": replicas}
        if store is not None:
            store.plan("separation", params, seed)

        def eval_fn(det, b0, b1, k=k):
            phi = det.has_one_arm(b0, BLACK, k) and det.has_one_arm(b1, WHITE, k)
            sep = det.has_separated_arm(b0, BLACK, k) and det.has_separated_arm(b1, WHITE, k)
            return (int(sep), int(phi), int(sep and phi))

        t0 = time.time()
        counts, used, unk = run_counts(
            lat, eval_fn, 3, nsamp, seed, stream_base=2048 + 64 * idx,
            replicas=replicas, t=th,
        )
        wall = time.time() - t0
        names = ("separation/phi_sep", "separation/phi", "separation/both")
        recs = [make_record(nm, params, c, used, unk, seed, wall) for nm, c in zip(names, counts)]
        if store is not None:
            for r in recs:
                store.append(r)
        ps, pp, p11 = (r.p_hat for r in recs)
        ratio = ps / pp
        var = ((1 - ps) / ps + (1 - pp) / pp - 2 * (p11 - ps * pp) / (ps * pp)) / used
        table.append({"k": k, "t": th, "phi_sep": ps, "phi": pp,
                      "ratio": ratio, "se_log_ratio": math.sqrt(max(var, 0.0))})
    return {"alpha": alpha, "table": table}


def _projected_cost(lat, eval_fn, n_counters, seed, t, pilot: int = 20) -> float:
    """Seconds per sample, measured on a throwaway stream."""
    t0 = time.time()
    run_counts(lat, eval_fn, n_counters, pilot, seed, stream_base=999_983, t=t)
    return (time.time() - t0) / pilot


def experiment_pivotal_sum(
    pairs=((4, 40), (8, 80)),
    samples: int | dict = 20_000,
    seed: int = 0,
    replicas: int = 1,
    alpha: dict[int, EstimateRecord] | None = None,
    t_multiplier: float = 1.0,
    budget_seconds: float | None = None,
    store: ResultsStore | None = None,
) -> dict:
    """Σ_x over the annulus Λ_{k,3k} of P[x pivotal for the black arm in ω
    and for the white arm in ω_t], against k² α̂_k φ̂_n(t).

    The summand uses that the gradient of an increasing (resp. decreasing)
    arm indicator at x is exactly the pivotality indicator, so one O(V)
    pivotal-mask pass per config replaces per-site forced evaluations.
    """
    if not 1.0 <= t_multiplier <= 2.0:
        raise ValueError("t_multiplier must lie in [1, 2]")
    ks = sorted({k for k, _ in pairs})
    if alpha is None:
        alpha = experiment_four_arm(
            scales=ks, pairs=(), samples=samples if isinstance(samples, int) else 50_000,
            seed=seed, replicas=replicas, eq20_ns=(), store=store,
        )["alpha"]
    table = []
    for idx, (k, n) in enumerate(pairs):
        nsamp = samples[(k, n)] if isinstance(samples, dict) else samples
        th = t_multiplier * t_hat(k, alpha[k].p_hat)
        lat = get_lattice(n)
        det0 = Detectors(lat)
        ann_mask = lat.mask(annulus(k, 3 * k))
        ann_size = int(ann_mask.sum())
        params = {"k": k, "n": n, "t": th, "samples": nsamp,
                  "annulus_size": ann_size, "replicas": replicas}

        def eval_fn(det, b0, b1, k=k, n=n, ann_mask=ann_mask):
            mb = det.one_arm_pivotal_mask(b0, BLACK, n)
            mw = det.one_arm_pivotal_mask(b1, WHITE, n)
            cnt = int(np.count_nonzero(mb & mw & ann_mask))
            phi = det.has_one_arm(b0, BLACK, n) and det.has_one_arm(b1, WHITE, n)
            return (cnt, int(phi))

        if budget_seconds is not None:
            per = _projected_cost(lat, eval_fn, 2, seed, th)
            if per * nsamp > budget_seconds:
                raise BudgetError(
                    f"pivotal sum (k={k}, n={n}): projected {per * nsamp:.0f}s "
                    f"exceeds budget {budget_seconds:.0f}s"
                )
        if store is not None:
            store.plan("pivotal_sum", params, seed)
        t0 = time.time()
        counts, used, unk = run_counts(
            lat, eval_fn, 2, nsamp, seed, stream_base=4096 + 64 * idx,
            replicas=replicas, t=th,
        )
        wall = time.time() - t0
        sum_rec = make_record("pivotal_sum/sum", params, int(counts[0]),
                              used * ann_size, unk, seed, wall)
        phi_rec = make_record("pivotal_sum/phi_n", params, int(counts[1]), used, unk, seed, wall)
        if store is not None:
            store.append(sum_rec)
            store.append(phi_rec)
        sum_estimate = sum_rec.p_hat * ann_size
        denom = k * k * alpha[k].p_hat * phi_rec.p_hat
        ratio = sum_estimate / denom if denom > 0 else math.inf
        se = math.sqrt(sum_rec.se_log**2 + alpha[k].se_log**2 + phi_rec.se_log**2)
        table.append({"k": k, "n": n, "t": th, "sum": sum_estimate,
                      "phi_n": phi_rec.p_hat, "denom": denom,
                      "ratio": ratio, "se_log_ratio": se})
    return {"alpha": alpha, "table": table}


def experiment_interlaced(
    ks=(2, 3),
    samples: int | dict = 20_000,
    seed: int = 0,
    replicas: int = 1,
    alpha: dict[int, EstimateRecord] | None = None,
    t_multiplier: float = 1.0,
    budget_seconds: float | None = None,
    store: ResultsStore | None = None,
) -> dict:
    """Interlaced-circuit events through the boxes B_k, B'_k, against α̂_k²
    (fixed pair) and α̂_k (union over the second box)."""
    if alpha is None:
        alpha = experiment_four_arm(
            scales=tuple(ks), pairs=(), samples=samples if isinstance(samples, int) else 20_000,
            seed=seed, replicas=replicas, eq20_ns=(), store=store,
        )["alpha"]
    table = []
    for idx, k in enumerate(ks):
        nsamp = samples[k] if isinstance(samples, dict) else samples
        th = t_multiplier * t_hat(k, alpha[k].p_hat)
        lat = get_lattice(7 * k)
        kf = frac(k)
        b_ids = np.flatnonzero(lat.mask(Rect(-3 * kf, -kf, kf, 3 * kf)))
        bp_ids = np.flatnonzero(lat.mask(Rect(kf, 3 * kf, -3 * kf, -kf)))
        centers = lat.centers
        x = int(b_ids[np.argmin((centers[b_ids, 0] + 2 * k) ** 2
                                + (centers[b_ids, 1] - 2 * k) ** 2)])
        y = int(bp_ids[np.argmin((centers[bp_ids, 0] - 2 * k) ** 2
                                 + (centers[bp_ids, 1] + 2 * k) ** 2)])
        params = {"k": k, "t": th, "x": x, "y": y, "samples": nsamp, "replicas": replicas}

        def eval_fn(det, b0, b1, k=k, x=x, y=y, bp_ids=bp_ids):
            pair = det.interlaced_event(b0, x, y, k) and det.interlaced_event(b1, x, y, k)
            dyn = det.interlaced_dynamic(b0, b1, x, k, bp_ids)
            return (int(pair), int(dyn))

        if budget_seconds is not None:
            per = _projected_cost(lat, eval_fn, 2, seed, th)
            if per * nsamp > budget_seconds:
                raise BudgetError(
                    f"interlaced (k={k}): projected {per * nsamp:.0f}s "
                    f"exceeds budget {budget_seconds:.0f}s"
                )
        if store is not None:
            store.plan("interlaced", params, seed)
        t0 = time.time()
        counts, used, unk = run_counts(
            lat, eval_fn, 2, nsamp, seed, stream_base=8192 + 64 * idx,
            replicas=replicas, t=th,
        )
        wall = time.time() - t0
        pair_rec = make_record("interlaced/pair", params, int(counts[0]), used, unk, seed, wall)
        dyn_rec = make_record("interlaced/union", params, int(counts[1]), used, unk, seed, wall)
        if store is not None:
            store.append(pair_rec)
            store.append(dyn_rec)
        a = alpha[k].p_hat
        table.append({
            "k": k, "t": th,
            "p_pair": pair_rec.p_hat, "ratio_pair": pair_rec.p_hat / (a * a) if a > 0 else math.inf,
            "p_union": dyn_rec.p_hat, "ratio_union": dyn_rec.p_hat / a if a > 0 else math.inf,
        })
    return {"alpha": alpha, "table": table}


def check_unknown_rate(record: EstimateRecord, threshold: float = 0.01) -> None:
    total = record.samples + record.unknown
    if total and record.unknown / total > threshold:
        raise InvalidEstimateError(
            f"{record.name}: Unknown rate {record.unknown / total:.3f} above {threshold}"
        )


def oracle_exact(spec: dict, lattice_n, pitch=1):
    """Exact rational probability of a static event on a tiny lattice."""
    from . import oracles

    lat = get_lattice(frac(lattice_n), frac(pitch))
    ev = arm_event(spec)
    det = Detectors(lat)
    return oracles.exact_probability(lat, lambda bits: ev(det, bits))
