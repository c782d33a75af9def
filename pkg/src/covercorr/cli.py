"""Configuration-driven command line front end.

Subcommands: spectrum | expand | correlate | verify | drift | u1.

Exit codes: 0 success, 1 parse/config, 2 model precondition, 3 spectral
precondition, 4 resource guard, 5 internal numerical failure.

Results are cached in a content-addressed directory (override the root
with the COVERCORR_CACHE environment variable, disable per call with
--no-cache): the key hashes the command, its parameters and the *content*
of every input file, so identical invocations are served byte-identical
outputs from disk.  Cache writes are atomic (write-temp-then-rename).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shutil
import sys
import tempfile

import numpy as np

from . import acceptance
from .analysis import amplitude_jet, lambda_jet
from .correlation import decay_report, export_series_csv, floquet_correlation
from .errors import (
    ConfigError,
    CovercorrError,
    ModelError,
    NumericalError,
    ResourceError,
    SpectralError,
)
from .expansion import drift_expansion, expansion_coefficients, export_expansion_json
from .floquet import ThetaGrid
from .models import center_check, load_model, load_observable
from .spectrum import export_surface_csv, resonance_surface, specrad_scan

__all__ = ["main"]

EXIT_CODES = {
    ConfigError: 1,
    ModelError: 2,
    SpectralError: 3,
    ResourceError: 4,
    NumericalError: 5,
}

_GUARD_GRIDS = (64, 81)  # coprime axis counts catch low-order rational characters


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="covercorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, obs=True, grid=True):
        p.add_argument("--model", required=True, help="model config file (JSON)")
        if obs:
            p.add_argument("--obs-f", required=True, help="observable file for f")
            p.add_argument("--obs-g", required=True, help="observable file for g")
        if grid:
            p.add_argument("--grid", type=int, default=64, help="grid points per axis")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--no-cache", action="store_true", help="bypass the result cache")

    p = sub.add_parser("spectrum", help="resonance surface CSV over a torus grid")
    common(p, obs=False)
    p.add_argument("--k", type=int, default=0, help="fiber mode")
    p.add_argument("--gap-floor", type=float, default=1e-8)

    p = sub.add_parser("expand", help="stationary-phase expansion report JSON")
    common(p)
    p.add_argument("--order", type=int, default=3, help="number of coefficients N")
    p.add_argument("--k-band", type=int, default=0, help="fiber modes to gap-check")
    p.add_argument("--t-min", type=int, default=None)
    p.add_argument("--t-max", type=int, default=None)

    p = sub.add_parser("correlate", help="decay table CSV with residuals")
    common(p)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--t-min", type=int, default=50)
    p.add_argument("--t-max", type=int, default=400)
    p.add_argument("--points", type=int, default=7, help="log-spaced time count")

    p = sub.add_parser("drift", help="moving-target comparison CSV")
    common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--t-min", type=int, default=100)
    p.add_argument("--t-max", type=int, default=800)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--direction", default=None, help="integer vector, e.g. '1' or '1,0'")

    p = sub.add_parser("u1", help="fiber-mode surfaces, decay rates and split")
    common(p)
    p.add_argument("--k-band", type=int, default=1)
    p.add_argument("--t-max", type=int, default=200)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criteria", nargs="*", default=None, help="subset by name")
    p.add_argument("--out", default=None, help="optional JSON summary path")
    return parser


# -- cache ------------------------------------------------------------------


def _cache_root():
    return os.environ.get(
        "COVERCORR_CACHE",
        os.path.join(os.path.expanduser("~"), ".cache", "covercorr"),
    )


def _hash_payload(command, params, files):
    blob = {
        "command": command,
        "params": params,
        "files": {
            name: hashlib.sha256(open(path, "rb").read()).hexdigest()
            for name, path in sorted(files.items())
        },
    }
    canon = json.dumps(blob, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _atomic_copy(src, dst):
    os.makedirs(os.path.dirname(os.path.abspath(dst)) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(dst)) or ".")
    os.close(fd)
    shutil.copyfile(src, tmp)
    os.replace(tmp, dst)


def _run_cached(args, command, params, files, outputs, build):
    """Build output files (or restore them from the cache).

    `outputs` maps final paths to their basenames inside the cache entry;
    `build(tmpdir)` must create every basename in `tmpdir`.
    """
    if args.no_cache:
        with tempfile.TemporaryDirectory() as tmp:
            build(tmp)
            for final, base in outputs.items():
                _atomic_copy(os.path.join(tmp, base), final)
        return "computed (cache bypassed)"
    key = _hash_payload(command, params, files)
    entry = os.path.join(_cache_root(), key)
    if all(os.path.exists(os.path.join(entry, base)) for base in outputs.values()):
        for final, base in outputs.items():
            _atomic_copy(os.path.join(entry, base), final)
        return f"served from cache ({key[:12]})"
    with tempfile.TemporaryDirectory() as tmp:
        build(tmp)
        os.makedirs(entry, exist_ok=True)
        for final, base in outputs.items():
            _atomic_copy(os.path.join(tmp, base), os.path.join(entry, base))
            _atomic_copy(os.path.join(tmp, base), final)
    return f"computed and cached ({key[:12]})"


# -- shared preconditions ----------------------------------------------------


def _require_centered(model):
    check = center_check(model)
    if not check.passed:
        raise ModelError(
            f"non-centered model: drift {np.array2string(check.drift, precision=3)}"
        )


def _require_mixing(model, primary_grid):
    """Refuse when any guard-grid node off the origin reaches the unit circle.

    Flagging is grid-limited: a unimodular twisted eigenvalue strictly
    between nodes of both guard grids escapes detection.  Two coprime
    axis counts are used so that low-order rational characters are hit
    exactly.
    """
    grids = {primary_grid} | set(_GUARD_GRIDS)
    for n in sorted(grids):
        grid = ThetaGrid(model.d, n)
        _, gap_ok = specrad_scan(model, grid, k=0)
        if not bool(gap_ok.all()):
            bad = int(np.nonzero(~gap_ok)[0][0])
            theta = grid.nodes[bad]
            raise SpectralError(
                "model not mixing: twisted spectral radius reaches 1 near "
                f"theta={tuple(float(x) for x in theta)} (grid {n})"
            )


def _require_fiber_mixing(model, band, grid_n):
    for k in range(1, band + 1):
        _, gap_ok = specrad_scan(model, ThetaGrid(model.d, grid_n), k=k)
        if not bool(gap_ok.all()):
            raise SpectralError(f"fiber extension not mixing at mode k={k}")


def _time_ladder(t_min, t_max, points):
    if t_min < 1 or t_max < t_min:
        raise ConfigError("need 1 <= t-min <= t-max")
    ts = np.unique(
        np.round(np.geomspace(t_min, t_max, points)).astype(int)
    )
    return [int(t) for t in ts]


# -- commands ----------------------------------------------------------------


def _cmd_spectrum(args):
    model = load_model(args.model)
    surf = resonance_surface(
        model, ThetaGrid(model.d, args.grid), k=args.k, gap_floor=args.gap_floor
    )
    params = {"grid": args.grid, "k": args.k, "gap_floor": args.gap_floor}

    def build(tmp):
        export_surface_csv(surf, os.path.join(tmp, os.path.basename(args.out)))

    note = _run_cached(
        args, "spectrum", params, {"model": args.model},
        {args.out: os.path.basename(args.out)}, build,
    )
    print(f"spectrum: {surf.grid.node_count} nodes, k={args.k}, "
          f"gap_ok everywhere: {bool(surf.gap_ok.all())}; {note}")
    return 0


def _expansion_pipeline(args, want_slopes):
    model = load_model(args.model)
    f = load_observable(args.obs_f, model.d)
    g = load_observable(args.obs_g, model.d)
    _require_centered(model)
    _require_mixing(model, args.grid)
    band = max(getattr(args, "k_band", 0), f.fiber_band, g.fiber_band)
    if band > 0:
        _require_fiber_mixing(model, band, args.grid)
    N = args.order
    lam = lambda_jet(model, order=2 * N + 2)
    amp = amplitude_jet(model, f, g, order=2 * N)
    exp = expansion_coefficients(lam, amp, N)
    slopes = None
    rep = None
    if want_slopes:
        ts = _time_ladder(args.t_min, args.t_max, 7)
        rep = decay_report(model, f, g, ts, exp)
        slopes = [rep.slopes[n] for n in sorted(rep.slopes)]
    return model, f, g, lam, amp, exp, rep, slopes


def _cmd_expand(args):
    want_slopes = args.t_min is not None and args.t_max is not None
    model, f, g, lam, amp, exp, _, slopes = _expansion_pipeline(args, want_slopes)
    params = {
        "order": args.order,
        "grid": args.grid,
        "k_band": args.k_band,
        "t_min": args.t_min,
        "t_max": args.t_max,
    }

    def build(tmp):
        export_expansion_json(
            exp,
            os.path.join(tmp, os.path.basename(args.out)),
            model_name=model.name,
            observables=[os.path.basename(args.obs_f), os.path.basename(args.obs_g)],
            residual_slopes=slopes,
        )

    note = _run_cached(
        args, "expand", params,
        {"model": args.model, "f": args.obs_f, "g": args.obs_g},
        {args.out: os.path.basename(args.out)}, build,
    )
    cs = ", ".join(f"{z.real:.6g}{z.imag:+.2g}i" for z in exp.c)
    print(f"expand: kappa={exp.kappa:.6g}, c=[{cs}]; {note}")
    return 0


def _cmd_correlate(args):
    model, f, g, lam, amp, exp, rep, _ = _expansion_pipeline(args, want_slopes=False)
    ts = _time_ladder(args.t_min, args.t_max, args.points)
    rep = decay_report(model, f, g, ts, exp)
    params = {
        "order": args.order,
        "grid": args.grid,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "points": args.points,
    }

    def build(tmp):
        export_series_csv(rep, os.path.join(tmp, os.path.basename(args.out)))

    note = _run_cached(
        args, "correlate", params,
        {"model": args.model, "f": args.obs_f, "g": args.obs_g},
        {args.out: os.path.basename(args.out)}, build,
    )
    slopes = ", ".join(f"N={n}: {s:.2f}" for n, s in sorted(rep.slopes.items()))
    print(f"correlate: {len(ts)} times, residual slopes {slopes}; {note}")
    return 0


def _cmd_drift(args):
    model, f, g, lam, amp, exp, _, _ = _expansion_pipeline(args, want_slopes=False)
    if args.direction is None:
        direction = tuple([1] + [0] * (model.d - 1))
    else:
        direction = tuple(int(x) for x in args.direction.split(","))
    ts = []
    t = args.t_min
    while t <= args.t_max:
        ts.append(t)
        t *= 2
    rows = []
    for t in ts:
        res = drift_expansion(
            lam, amp, exp.sigma, args.epsilon, t, direction, model=model, f=f, g=g
        )
        rows.append(res)
    params = {
        "epsilon": args.epsilon,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "order": args.order,
        "grid": args.grid,
        "direction": list(direction),
    }

    def build(tmp):
        import csv as _csv

        with open(os.path.join(tmp, os.path.basename(args.out)), "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["t", "k", "predicted", "exact_re", "exact_im", "relerr"])
            for r in rows:
                w.writerow(
                    [
                        r.t,
                        " ".join(str(x) for x in r.k),
                        f"{r.predicted:.17g}",
                        f"{r.exact.real:.17g}",
                        f"{r.exact.imag:.17g}",
                        f"{r.rel_err:.17g}",
                    ]
                )

    note = _run_cached(
        args, "drift", params,
        {"model": args.model, "f": args.obs_f, "g": args.obs_g},
        {args.out: os.path.basename(args.out)}, build,
    )
    print(
        "drift: rel errs "
        + ", ".join(f"t={r.t}: {r.rel_err:.2e}" for r in rows)
        + f"; {note}"
    )
    return 0


def _cmd_u1(args):
    model = load_model(args.model)
    f = load_observable(args.obs_f, model.d)
    g = load_observable(args.obs_g, model.d)
    _require_centered(model)
    band = max(args.k_band, f.fiber_band, g.fiber_band)
    if band < 1:
        raise ConfigError("u1 needs a fiber band >= 1 (flag --k-band)")
    grid = ThetaGrid(model.d, args.grid)
    surfaces = {}
    for k in range(1, band + 1):
        surf = resonance_surface(model, grid, k=k)
        surfaces[k] = surf
        if not bool(surf.gap_ok.all()):
            raise SpectralError(f"fiber extension not mixing at mode k={k}")

    ts = list(range(10, args.t_max + 1, max(1, args.t_max // 20)))
    summary = {"model": model.name, "band": band, "modes": {}}
    series = {}
    from .models import CoverObservable

    for k in range(1, band + 1):
        fk = f.mode_slice(k)
        gk = g.mode_slice(k)
        if fk.is_zero or gk.is_zero:
            continue
        vals = [floquet_correlation(model, fk, gk, t) for t in ts]
        series[k] = vals
        mags = np.array([abs(v) for v in vals])
        good = mags > 1e-14
        rho = float(surfaces[k].specrad.max())
        rate = (
            float(np.polyfit(np.array(ts)[good], np.log(mags[good]), 1)[0])
            if good.sum() >= 2
            else float("nan")
        )
        summary["modes"][str(k)] = {
            "sup_specrad": rho,
            "fitted_log_rate": rate,
            "surface_log_rate": math.log(rho),
        }

    outputs = {}
    outdir = args.out

    def build(tmp):
        for k, surf in surfaces.items():
            base = f"surface_k{k}.csv"
            export_surface_csv(surf, os.path.join(tmp, base))
        import csv as _csv

        with open(os.path.join(tmp, "modes.csv"), "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["t", "k", "re", "im", "abs"])
            for k, vals in sorted(series.items()):
                for t, v in zip(ts, vals):
                    w.writerow(
                        [t, k, f"{v.real:.17g}", f"{v.imag:.17g}", f"{abs(v):.17g}"]
                    )
        with open(os.path.join(tmp, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)

    os.makedirs(outdir, exist_ok=True)
    for k in surfaces:
        outputs[os.path.join(outdir, f"surface_k{k}.csv")] = f"surface_k{k}.csv"
    outputs[os.path.join(outdir, "modes.csv")] = "modes.csv"
    outputs[os.path.join(outdir, "summary.json")] = "summary.json"
    params = {"k_band": args.k_band, "grid": args.grid, "t_max": args.t_max}
    note = _run_cached(
        args, "u1", params,
        {"model": args.model, "f": args.obs_f, "g": args.obs_g},
        outputs, build,
    )
    print(f"u1: band {band}, modes analyzed: {sorted(series)}; {note}")
    return 0


def _cmd_verify(args):
    results = acceptance.run_all(names=args.criteria)
    if args.out:
        doc = [
            {"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds}
            for r in results
        ]
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
    failed = [r for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(f"verify: {len(results) - len(failed)}/{len(results)} criteria passed "
          f"in {total:.0f}s")
    return 0 if not failed else 1


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "expand": _cmd_expand,
    "correlate": _cmd_correlate,
    "drift": _cmd_drift,
    "u1": _cmd_u1,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except CovercorrError as exc:
        code = EXIT_CODES.get(type(exc), 1)
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
