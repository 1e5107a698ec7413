"""Command line entry point: exact verification suites, lattice experiments,
report aggregation and the tiny-lattice exact oracle.

Exit codes: 0 success, 1 failed check or budget violation, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import cube, experiments, noisepoly, witness
from .cube import (
    BiFunction,
    CubeFunction,
    DimensionError,
    MAX_CUBE_DIM,
    expectation,
    random_event,
    random_monotone,
)
from .experiments import ResultsStore, fit_exponent
from .noisepoly import PreconditionError

EXPERIMENT_NAMES = (
    "theorem1",
    "theorem2",
    "rsw",
    "four_arm",
    "noise_stability",
    "separation",
    "pivotal_sum",
    "interlaced",
)

SLOPE_ANCHORS = {
    "theorem1/one_arm_b": -5.0 / 48.0,
    "theorem1/one_arm_w": -5.0 / 48.0,
    "theorem2/two_arm_poly": -0.25,
}


class ConfigError(ValueError):
    pass


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    # flags override the file
    for key in ("seed", "replicas", "lattice_n", "pitch", "out", "budget_seconds",
                "samples", "n_max", "suite"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _nonempty_monotone(n: int, seed: int) -> CubeFunction:
    for s in range(seed, seed + 1000):
        f = random_monotone(n, s)
        if 0 < expectation(f) < 1:
            return f
    raise RuntimeError("could not draw a non-degenerate monotone event")


def _gapped_pair(n: int, seed: int):
    """Increasing event pair whose disjoint-occurrence probability sits
    strictly below the product-side endpoint, so the interpolation is
    non-constant and sign errors in the derivative cannot hide."""
    for s in range(seed, seed + 2000):
        A = _nonempty_monotone(n, s)
        B = _nonempty_monotone(n, s + 5000)
        box = witness.box_event(A, B)
        p_box = expectation(box)
        if p_box <= 0:
            continue
        if expectation(A * B.complement_event()) > p_box:
            return A, B
    raise RuntimeError("could not draw a gapped event pair")


def _random_bifunction(n: int, seed: int) -> BiFunction:
    import random

    rng = random.Random(repr(("bifun", n, seed)))
    size = 1 << (2 * n)
    return BiFunction(n, [Fraction(rng.randrange(0, 8), 4) for _ in range(size)])


def prop3_instances(seed: int):
    """Split-support FKG fixtures: partition (A, B, S, T) of [4] with
    F = f(x) f(y) on A∪S∪T, G = g(x) g(y) on B∪S∪T, S-increasing, T-decreasing."""
    partition = ({1}, {2}, {3}, {4})

    def f_vals(xm):  # increasing in 1 and 3, decreasing in 4, ignores 2
        return (xm >> 0 & 1) * (xm >> 2 & 1) * (1 - (xm >> 3 & 1))

    def g_vals(xm):
        return (xm >> 1 & 1) * (xm >> 2 & 1) * (1 - (xm >> 3 & 1))

    f = CubeFunction(4, [f_vals(x) for x in range(16)])
    g = CubeFunction(4, [g_vals(x) for x in range(16)])
    yield partition, BiFunction.from_product(f, f), BiFunction.from_product(g, g)
    # a looser pair: f also free to use an OR over its support
    f2 = CubeFunction(4, [max(f_vals(x), (x >> 2 & 1) * (1 - (x >> 3 & 1))) for x in range(16)])
    yield partition, BiFunction.from_product(f2, f2), BiFunction.from_product(g, g)


def _verify_checks(suite: str, n_max: int, seed: int):
    """Yield (name, callable) pairs; callables return bool."""
    quick = 12  # per-family instance count for the CLI pass

    if suite in ("cube", "all"):
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 4)
            F = _random_bifunction(n, seed + i)
            yield (f"interpolation identity (n={n}, #{i})",
                   lambda F=F: noisepoly.check_interpolation_identity(F))
        for n in range(1, min(n_max, 5) + 1):
            yield (f"independence at t=1/2 (n={n})",
                   lambda n=n: noisepoly.check_lemma1(n))
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 5)
            f = cube.random_cube_function(n, seed + i)
            g = cube.random_cube_function(n, seed + 7 * i + 1)
            yield (f"product interpolation report (n={n}, #{i})",
                   lambda f=f, g=g: noisepoly.verify_prop1(f, g).passed)
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 5)
            f = cube.random_cube_function(n, seed + 13 * i)
            yield (f"autocorrelation monotone (n={n}, #{i})",
                   lambda f=f: noisepoly.check_remark4(f))
        for i in range(4):
            n = 2 + i % min(n_max, 3)
            F = BiFunction.from_product(_nonempty_monotone(n, seed + i),
                                        _nonempty_monotone(n, seed + 50 + i))
            G = BiFunction.from_product(_nonempty_monotone(n, seed + 100 + i),
                                        _nonempty_monotone(n, seed + 150 + i))
            yield (f"noised positive association (n={n}, #{i})",
                   lambda F=F, G=G: noisepoly.check_holley_noised(F, G))
        for j, (part, F, G) in enumerate(prop3_instances(seed)):
            yield (f"split-support association (#{j})",
                   lambda part=part, F=F, G=G: noisepoly.check_prop3(part, F, G))

    if suite in ("reimer", "all"):
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 5)
            A = _nonempty_monotone(n, seed + i)
            B = _nonempty_monotone(n, seed + 31 * i + 5)
            yield (f"diagonal disjointness (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_lemma2(A, B))
            yield (f"disjoint occurrence bound (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_reimer(A, B))
            yield (f"sandwich at t=1/2 (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_strong_bk(A, B))
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 5)
            A = random_event(n, seed + i)
            B = random_event(n, seed + 41 * i + 3)
            yield (f"general disjoint bound (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_reimer(A, B))
            yield (f"dual bound at t=1/2 (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_dual_reimer(A, B))
        for i in range(6):
            n = 2 + (seed + i) % min(n_max, 4)
            A, B = _gapped_pair(n, seed + 60 * (i + 1))
            yield (f"disjoint interpolation report (n={n}, #{i})",
                   lambda A=A, B=B: witness.check_prop2(A, B).passed)

    if suite in ("noise", "all"):
        for i in range(quick):
            n = 2 + (seed + i) % min(n_max, 5)
            f = cube.random_cube_function(n, seed + 3 * i, lo=1)
            g = cube.random_cube_function(n, seed + 5 * i + 2, lo=1)
            yield (f"quadrature consistency (n={n}, #{i})",
                   lambda f=f, g=g: (lambda r: r.quad_checked and r.quad_error <= 1e-8)(
                       noisepoly.verify_prop1(f, g)))


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    suite = cfg.get("suite", "all")
    n_max = int(cfg.get("n_max", 5))
    seed = int(cfg.get("seed", 0))
    if suite not in ("cube", "reimer", "noise", "all"):
        print(f"unknown suite {suite!r}; choose from cube, reimer, noise, all",
              file=sys.stderr)
        return 2
    if not 1 <= n_max <= MAX_CUBE_DIM:
        print(f"n_max must lie in 1..{MAX_CUBE_DIM}", file=sys.stderr)
        return 2
    if args.mutate_dsign:
        cube._D_SIGN = -1
    failures = []
    try:
        for name, check in _verify_checks(suite, n_max, seed):
            try:
                ok = check()
            except (PreconditionError, ValueError):
                # degenerate random draw; not a verification failure
                continue
            print(("PASS " if ok else "FAIL ") + name)
            if not ok:
                failures.append(name)
    finally:
        cube._D_SIGN = 1
    if failures:
        print(f"{len(failures)} check(s) failed; first failure: {failures[0]}")
        return 1
    print("all checks passed")
    return 0


def _summary_lines(name: str, result: dict) -> list[str]:
    lines = [f"== {name} =="]
    if name in ("theorem1", "theorem2"):
        key = "r" if name == "theorem1" else "s"
        for row in result["table"]:
            lines.append(f"  n={row['n']:4d}  {key}={row[key]:.5f}"
                         f"  se_log={row['se_log_' + key]:.5f}")
        fit = result["fit"]
        lines.append(f"  slope of log {key}_n: {fit.slope:+.5f}"
                     f"  (95% CI {fit.ci95[0]:+.5f} .. {fit.ci95[1]:+.5f})")
    elif name == "rsw":
        for row in result["table"]:
            lines.append(f"  lam={row['lam']}  n={row['n']:4d}  p={row['p']:.4f}"
                         f"  [{row['lo']:.4f}, {row['hi']:.4f}]")
    elif name == "four_arm":
        for n in sorted(result["alpha"]):
            rec = result["alpha"][n]
            lines.append(f"  alpha({n}) = {rec.p_hat:.5f}")
        for (k, n), v in result["ratios"].items():
            lines.append(f"  alpha({n}) / (alpha({k}) alpha({k},{n})) = {v['ratio']:.4f}")
        for n, v in result["eq20"].items():
            lines.append(f"  weighted-sum ratio (n={n}) = {v:.4f}")
    elif name == "noise_stability":
        for row in result["table"]:
            lines.append(f"  n={row['n']:4d}  t={row['t']:.4f} ({row['mult']}x t_hat)"
                         f"  ratio={row['ratio']:.4f}")
    elif name == "separation":
        for row in result["table"]:
            lines.append(f"  k={row['k']:4d}  t={row['t']:.4f}"
                         f"  phi={row['phi']:.5f}  phi_sep={row['phi_sep']:.5f}"
                         f"  ratio={row['ratio']:.4f}")
    elif name == "pivotal_sum":
        for row in result["table"]:
            lines.append(f"  k={row['k']}  n={row['n']}  sum={row['sum']:.4f}"
                         f"  target={row['denom']:.4f}  ratio={row['ratio']:.4f}")
    elif name == "interlaced":
        for row in result["table"]:
            lines.append(f"  k={row['k']}  p_pair={row['p_pair']:.6f}"
                         f" (/alpha^2 = {row['ratio_pair']:.3f})"
                         f"  p_union={row['p_union']:.6f}"
                         f" (/alpha = {row['ratio_union']:.3f})")
    return lines


def cmd_experiment(args) -> int:
    if args.name not in EXPERIMENT_NAMES:
        print(f"unknown experiment {args.name!r}; valid names: "
              + ", ".join(EXPERIMENT_NAMES), file=sys.stderr)
        return 2
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    replicas = int(cfg.get("replicas", 1))
    out = Path(cfg.get("out", "results.jsonl"))
    store = ResultsStore(out)
    samples = cfg.get("samples")
    budget = cfg.get("budget_seconds")
    kwargs = {"seed": seed, "replicas": replicas, "store": store}
    if samples is not None:
        kwargs["samples"] = int(samples)
    grids = {
        "theorem1": ("ns",),
        "theorem2": ("ns",),
        "rsw": ("ns", "lams"),
        "four_arm": ("scales", "pairs", "eq20_ns"),
        "noise_stability": ("ns", "t_multipliers"),
        "separation": ("ks", "t_multiplier"),
        "pivotal_sum": ("pairs", "t_multiplier"),
        "interlaced": ("ks", "t_multiplier"),
    }
    for key in grids[args.name]:
        if key in cfg:
            val = cfg[key]
            if key in ("pairs",):
                val = tuple(tuple(p) for p in val)
            elif isinstance(val, list):
                val = tuple(val)
            kwargs[key] = val
    if budget is not None and args.name in ("pivotal_sum", "interlaced"):
        kwargs["budget_seconds"] = float(budget)
    fn = {
        "theorem1": experiments.experiment_theorem1,
        "theorem2": experiments.experiment_theorem2,
        "rsw": experiments.experiment_rsw,
        "four_arm": experiments.experiment_four_arm,
        "noise_stability": experiments.experiment_noise_stability,
        "separation": experiments.experiment_separation,
        "pivotal_sum": experiments.experiment_pivotal_sum,
        "interlaced": experiments.experiment_interlaced,
    }[args.name]
    try:
        result = fn(**kwargs)
    except experiments.BudgetError as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return 1
    except (TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    store.export_csv(out.with_suffix(".csv"))
    for line in _summary_lines(args.name, result):
        print(line)
    print(f"records appended to {out}; CSV at {out.with_suffix('.csv')}")
    return 0


def cmd_report(args) -> int:
    cfg = _load_config(args)
    path = Path(args.store or cfg.get("out", "results.jsonl"))
    if not path.exists():
        print(f"store not found: {path}", file=sys.stderr)
        return 2
    try:
        records = ResultsStore(path).load()
    except (OSError, json.JSONDecodeError) as exc:
        print(f"unreadable store: {exc}", file=sys.stderr)
        return 2
    by_group: dict[tuple, dict[int, dict]] = {}
    for rec in records:
        if rec["name"].endswith("/plan") or rec["samples"] == 0:
            continue
        n = rec["params"].get("n")
        if n is None:
            continue
        key = (rec["name"], rec["seed"])
        by_group.setdefault(key, {})[int(n)] = rec
    if not by_group:
        print("empty store: nothing to report")
        return 0
    for (name, seed) in sorted(by_group):
        rows = by_group[(name, seed)]
        print(f"== {name} (seed {seed}) ==")
        for n in sorted(rows):
            r = rows[n]
            print(f"  n={n:4d}  p={r['p_hat']:.6f}"
                  f"  [{r['wilson_lo']:.6f}, {r['wilson_hi']:.6f}]"
                  f"  samples={r['samples']}")
        ns = [n for n in sorted(rows) if rows[n]["p_hat"] > 0]
        if len(ns) >= 3:
            fit = fit_exponent(ns, [rows[n]["p_hat"] for n in ns])
            line = f"  slope = {fit.slope:+.5f} (resid se {fit.stderr_slope:.5f})"
            anchor = SLOPE_ANCHORS.get(name)
            if anchor is not None:
                line += f"  anchor {anchor:+.5f}  gap {fit.slope - anchor:+.5f}"
            print(line)
    # gap ratios recomputed from stored proportions
    for label, num, den in (
        ("theorem1 ratio r_n", "theorem1/joint", ("theorem1/one_arm_b", "theorem1/one_arm_w")),
        ("theorem2 ratio s_n", "theorem2/disjoint", ("theorem2/two_arm_poly",)),
    ):
        seeds = {s for (nm, s) in by_group if nm == num}
        for seed in sorted(seeds):
            tops = by_group.get((num, seed), {})
            ratios = {}
            for n, rec in tops.items():
                bot = 1.0
                ok = True
                for dname in den:
                    drec = by_group.get((dname, seed), {}).get(n)
                    if drec is None or drec["p_hat"] <= 0:
                        ok = False
                        break
                    bot *= drec["p_hat"]
                if ok:
                    ratios[n] = rec["p_hat"] / bot
            if len(ratios) >= 3:
                fit = fit_exponent(sorted(ratios), [ratios[n] for n in sorted(ratios)])
                print(f"== {label} (seed {seed}) ==")
                for n in sorted(ratios):
                    print(f"  n={n:4d}  ratio={ratios[n]:.5f}")
                print(f"  gap slope = {fit.slope:+.5f} (resid se {fit.stderr_slope:.5f})")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    try:
        spec = json.loads(args.spec)
    except json.JSONDecodeError as exc:
        print(f"bad spec JSON: {exc}", file=sys.stderr)
        return 2
    lattice_n = cfg.get("lattice_n", 1)
    pitch = cfg.get("pitch", 1)
    try:
        p = experiments.oracle_exact(spec, lattice_n, pitch)
    except Exception as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 2
    print(f"P = {p} = {float(p):.10f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hexperc")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replicas", type=int, default=None)
        p.add_argument("--lattice-n", dest="lattice_n", type=int, default=None)
        p.add_argument("--pitch", type=str, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--budget-seconds", dest="budget_seconds", type=float, default=None)

    pv = sub.add_parser("verify", help="run the exact identity suites")
    common(pv)
    pv.add_argument("--suite", choices=("cube", "reimer", "noise", "all"), default=None)
    pv.add_argument("--n-max", dest="n_max", type=int, default=None)
    pv.add_argument("--mutate-dsign", action="store_true", help=argparse.SUPPRESS)
    pv.set_defaults(func=cmd_verify)

    pe = sub.add_parser("experiment", help="run a named lattice experiment")
    common(pe)
    pe.add_argument("name")
    pe.add_argument("--samples", type=int, default=None)
    pe.set_defaults(func=cmd_experiment)

    pr = sub.add_parser("report", help="aggregate a results store")
    common(pr)
    pr.add_argument("store", nargs="?", default=None)
    pr.set_defaults(func=cmd_report)

    po = sub.add_parser("oracle", help="exact probability on a tiny lattice")
    common(po)
    po.add_argument("--spec", type=str, default='{"kind": "origin_black"}')
    po.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
