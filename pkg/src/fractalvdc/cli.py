"""Command-line front end: ``fractalvdc <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 budget or depth exceeded.
Options may also come from ``--config FILE`` (``key = value`` lines, keys
spelled like the long options); explicit flags win. Relative output paths
are resolved against ``$FRACTALVDC_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._jit import backend_name, set_threads
from .errors import BudgetError, ValidationError
from .io import write_csv, write_json
from .words import Word

OUTPUT_ENV = "FRACTALVDC_OUTPUT_DIR"


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _words(text):
    try:
        return [Word.from_str(v) for v in str(text).split(",") if v.strip()]
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _common(p, default_output):
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0, help="worker cap (0 = all cores)")
    p.add_argument("-o", "--output", default=default_output)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--record-timing", action="store_true", help="report wall time on stderr; artifacts never carry it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fractalvdc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fractalvdc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decay", help="spectrum of mu and power-law decay fit")
    _common(p, "spectrum.csv")
    p.add_argument("--xi-min", type=float, default=1e2)
    p.add_argument("--xi-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--mode", choices=("envelope", "all-points"), default="envelope")

    p = sub.add_parser("census", help="pair, derivative, Birkhoff or random-walk census")
    _common(p, "census.json")
    p.add_argument("--kind", choices=("pairs", "derivative", "birkhoff", "rademacher"), default="pairs")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--a", type=_words, default=None, help="word a (and d for pairs: a,d)")
    p.add_argument("--sigma", type=_floats, default=None)
    p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("couples", help="regularity and gamma_hat of random couples")
    _common(p, "couples.json")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--epsilon1", type=float, default=0.1)

    p = sub.add_parser("blocks", help="regular-block census")
    _common(p, "blocks.json")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count (omit for exhaustive)")
    p.add_argument("--epsilon1", type=float, default=0.1)

    p = sub.add_parser("sumproduct", help="exponential-sum decay scan for one block")
    _common(p, "scan.csv")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--block", type=_words, default=None, help="k+1 comma-separated words")
    p.add_argument("--eta-min", type=float, default=1e2)
    p.add_argument("--eta-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--method", choices=("direct", "binned"), default="direct")
    p.add_argument("--bins", type=int, default=1 << 20)

    p = sub.add_parser("linearize", help="phase linearisation residuals")
    _common(p, "linearize.json")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--configs", type=int, default=1000, help="0 enumerates every (A, B)")

    p = sub.add_parser("brownian", help="oscillatory integrals of Wiener paths")
    _common(p, "brownian.csv")
    p.add_argument("--N", type=int, default=10_000)
    p.add_argument("--M", type=int, default=1 << 17)
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--xi", type=_floats, default=[1e2, 1e3, 1e4])
    p.add_argument("--method", choices=("linear-phase", "trapezoid"), default="linear-phase")

    p = sub.add_parser("conjugacy", help="grid export of psi")
    _common(p, "psi.csv")
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--points", type=int, default=10_000)

    p = sub.add_parser("measure", help="interval masses and Hoelder exponent fit")
    _common(p, "measure.json")
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--x", type=_floats, default=None, help="centres (default: uniform grid)")
    p.add_argument("--r", type=_floats, default=None, help="radii (default: 1e-7 .. 1e-1)")
    p.add_argument("--grid", type=int, default=2001)
    return ap


def parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sp = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**cfg)
        args = ap.parse_args(argv)
    return args


def _provenance(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("record_timing",)}
    for k, v in list(cfg.items()):
        if isinstance(v, list) and v and isinstance(v[0], Word):
            cfg[k] = [str(w) for w in v]
    return {"tool": "fractalvdc", "version": __version__, "backend": backend_name(), "config": cfg}


def _out(args, path=None) -> Path:
    p = Path(path or args.output)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _report(rep, args, prov):
    path = _out(args)
    if args.format == "csv":
        rep.write_csv(path.with_suffix(".csv"), prov)
        return [path.with_suffix(".csv")]
    rep.write_json(path.with_suffix(".json"), prov)
    return [path.with_suffix(".json")]


def run_decay(args, prov):
    from . import fourier

    grid = fourier.log_grid(args.xi_min, args.xi_max, args.points)
    samples = fourier.spectrum(grid, args.delta, args.depth)
    path = _out(args)
    fourier.export_spectrum_csv(path, samples, prov)
    fit = fourier.fit_samples(samples, args.mode)
    fit_path = _sibling(path, ".fit.json")
    fourier.export_fit_json(fit_path, fit, prov)
    return [path, fit_path]


def run_census(args, prov):
    from . import census

    n = args.n
    rng = _rng(args.seed)
    words = args.a or [Word(int(v), n) for v in rng.integers(0, 1 << n, size=2)]
    if args.kind == "pairs":
        if len(words) < 2:
            raise ValidationError("--a needs two words a,d for the pair census")
        params = census.ReductionParams(n, delta=args.delta)
        sig = args.sigma or census.full_sweep_sigmas(n)
        rep = census.couple_census(words[0], words[1], params, sig)
    elif args.kind == "derivative":
        sig = args.sigma or [0.5, 0.25]
        rep = census.derivative_census(words[0], sig, n, args.delta)
    elif args.kind == "birkhoff":
        sig = args.sigma or [0.25, 0.5, 1.0]
        mode = "monte-carlo" if args.samples else "exhaustive"
        rep = census.birkhoff_proximity_census(
            words[0], sig, n, args.delta, sampler=mode, samples=args.samples, seed=args.seed
        )
    else:
        sig = args.sigma or census.dyadic_sigmas(0, 10)
        frac = census.rademacher_anticoncentration(n, 0.5, 0.0, sig)
        rep = census.CensusReport(
            list(sig), [int(round(f * (1 << n))) for f in frac], 1 << n, "exhaustive"
        )
        rep.extra["bound"] = [census.anticoncentration_bound(n, s) for s in sig]
        rep.extra["oracle"] = list(census.dyadic_subset_sum_fraction(n, sig))
    return _report(rep, args, prov)


def run_couples(args, prov):
    from . import census

    n = args.n
    params = census.ReductionParams(n, delta=args.delta, epsilon1=args.epsilon1)
    pairs = _rng(args.seed).integers(0, 1 << n, size=(args.samples, 2))
    rows = []
    for a, d in pairs:
        wa, wd = Word(int(a), n), Word(int(d), n)
        rows.append((str(wa), str(wd), int(census.regular_couple_test(wa, wd, params)),
                     census.couple_gamma_hat(wa, wd, n, args.delta)))
    path = _out(args)
    if args.format == "csv":
        path = path.with_suffix(".csv")
        write_csv(path, ["a", "d", "regular", "gamma_hat"], rows, prov)
        return [path]
    g = [r[3] for r in rows]
    obj = {
        "n": n,
        "delta": args.delta,
        "sigma": list(params.couple_sigmas()),
        "samples": args.samples,
        "regular_fraction": sum(r[2] for r in rows) / len(rows),
        "gamma_hat": g,
        "gamma_hat_at_least_gamma": sum(1 for v in g if v >= params.gamma),
        "provenance": prov,
    }
    path = path.with_suffix(".json")
    write_json(path, obj)
    return [path]


def run_blocks(args, prov):
    from . import census

    params = census.ReductionParams(args.n, args.k, delta=args.delta, epsilon1=args.epsilon1)
    if args.samples:
        rep = census.regular_block_census(params, "monte-carlo", args.samples, args.seed)
    else:
        rep = census.regular_block_census(params, "exhaustive")
    return _report(rep, args, prov)


def run_sumproduct(args, prov):
    from . import census, sumproduct

    n, k = args.n, args.k
    block = args.block or [Word(int(v), n) for v in _rng(args.seed).integers(0, 1 << n, size=k + 1)]
    if len(block) != k + 1:
        raise ValidationError(f"--block needs k+1 = {k + 1} words")
    params = census.ReductionParams(n, k, delta=args.delta)
    etas = np.logspace(math.log10(args.eta_min), math.log10(args.eta_max), args.points)
    res = sumproduct.decay_scan(block, params, etas, args.method, args.bins)
    prov = dict(prov, block=[str(w) for w in block], epsilon1_hat=res.epsilon1_hat,
                block_regular=res.block_regular, in_window=res.in_window)
    path = _out(args)
    res.write_csv(path, prov)
    return [path]


def run_linearize(args, prov):
    from . import census, sumproduct

    params = census.ReductionParams(args.n, args.k, delta=args.delta)
    scaled, res = sumproduct.linearization_study(params, args.configs or None, args.seed)
    obj = {
        "n": args.n,
        "k": args.k,
        "delta": args.delta,
        "alpha": params.alpha,
        "diagonal_cut": sumproduct.diagonal_cut(params),
        "scale": sumproduct.linearization_scale(params),
        "configurations": int(res.size),
        "max_residual": float(res.max()),
        "max_scaled_residual": scaled,
        "provenance": prov,
    }
    path = _out(args).with_suffix(".json")
    write_json(path, obj)
    return [path]


def run_brownian(args, prov):
    from . import brownian

    study = brownian.brownian_study(args.xi, range(args.seed, args.seed + args.seeds), args.N, args.M, args.method)
    path = _out(args)
    study.write_csv(path, prov)
    summary = _sibling(path, ".summary.json")
    study.write_json(summary, prov)
    return [path, summary]


def run_conjugacy(args, prov):
    from .conjugacy import ConjugacyEvaluator

    ev = ConjugacyEvaluator(args.delta, args.depth)
    x = np.arange(args.points) / args.points
    path = _out(args)
    ev.export_csv(path, x, dict(prov, residual=ev.residual(x), error_bound=ev.error_bound))
    return [path]


def run_measure(args, prov):
    from . import conjugacy

    x = np.asarray(args.x) if args.x else np.arange(args.grid) / args.grid
    r = np.asarray(args.r) if args.r else np.logspace(-7, -1, 13)
    rows = [(float(xi), float(ri), conjugacy.measure_interval(xi, ri, args.depth, args.delta)) for xi in x[:50] for ri in r]
    obj = {"queries": [{"x": a, "r": b, "mass": c} for a, b, c in rows], "provenance": prov}
    try:
        fit = conjugacy.holder_mass_fit(x, r, args.depth, args.delta)
        obj["holder_fit"] = {"C": fit.C, "delta_mu": fit.delta_mu, "r_squared": fit.r_squared,
                             "r": list(fit.r), "sup_mass": list(fit.sup_mass)}
    except ValidationError as exc:
        obj["holder_fit"] = {"refused": str(exc)}
    path = _out(args).with_suffix(".json")
    write_json(path, obj)
    return [path]


RUNNERS = {
    "decay": run_decay,
    "census": run_census,
    "couples": run_couples,
    "blocks": run_blocks,
    "sumproduct": run_sumproduct,
    "linearize": run_linearize,
    "brownian": run_brownian,
    "conjugacy": run_conjugacy,
    "measure": run_measure,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    start = time.perf_counter()
    try:
        args = parse(argv)
        from .dynamics import check_delta

        check_delta(args.delta)
        set_threads(args.threads)
        prov = _provenance(args)
        written = RUNNERS[args.command](args, prov)
        if args.record_timing:
            print(f"wall time {time.perf_counter() - start:.3f} s", file=sys.stderr)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
