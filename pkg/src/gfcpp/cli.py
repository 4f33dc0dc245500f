"""Command-line front end.

    gfcpp simulate CONFIG [--seed N] [--workers W]
    gfcpp report CONFIG [--kind K ...] [--seed N] [--workers W]
    gfcpp presets [--show NAME | --write DIR]

Exit codes: 0 every selected report passes, 1 a statistical check did not
pass, 2 configuration or I/O error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analytics import (
    MomentUndefinedError,
    compare_moments,
    ks_two_sample,
    lrd_slope_from_values,
    martingale_test,
)
from .config import PRESETS, ConfigError, load_config, preset_text
from .fde import MonteCarlo, SemiAnalytic, dde_residual
from .processes import EventPath, ProcessSpec, sample_values, simulate_cpp, simulate_gfcpp, simulate_representation
from .rng import RngStream
from .specfun import TemperedStable

log = logging.getLogger("gfcpp")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3

# report streams live far above the per-path simulate ids
_REPORT_STREAM_BASE = 2 ** 62
_REPORT_KINDS = ("moments", "lrd", "martingale", "dde", "representation")
_BLOCK = 2_000


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ========
# Workers
# ========

def _simulate_one(args):
    spec, horizon, grid, n_steps, mode, seed, stream = args
    rng = RngStream(seed, stream)
    if spec.time_changed:
        path = simulate_gfcpp(spec, horizon, grid, rng, n_steps)
        return (path.events() if mode == "events" else path).to_csv()
    path = simulate_cpp(spec.rate, spec.jump, horizon, rng)
    if mode == "grid":
        g = np.linspace(0.0, horizon, grid + 1)
        path = EventPath(g, path.value_at(g), horizon, "grid")
    return path.to_csv()


def _values_block(args):
    spec, times, size, n_steps, seed, stream = args
    return sample_values(spec, times, size, RngStream(seed, stream), n_steps)


def _map(fn, jobs, workers):
    total = len(jobs)
    step = max(1, total // 10)
    out = []
    if workers <= 1 or total <= 1:
        it = map(fn, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        it = pool.map(fn, jobs)
    try:
        for i, res in enumerate(it, start=1):
            out.append(res)
            if i % step == 0 or i == total:
                log.info("%d/%d done", i, total)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def blocked_values(spec, times, paths, seed, stream_base, n_steps, workers):
    """``(y, e)`` for `paths` paths built from fixed-size blocks.

    Block ``b`` always uses stream ``stream_base + b``, so the result does
    not depend on the number of workers.
    """
    jobs = []
    for b, start in enumerate(range(0, paths, _BLOCK)):
        jobs.append((spec, list(times), min(_BLOCK, paths - start), n_steps, seed, stream_base + b))
    parts = _map(_values_block, jobs, workers)
    if not parts:
        return np.zeros((0, len(times))), np.zeros((0, len(times)))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# ========
# Commands
# ========

def cmd_simulate(cfg, workers=1):
    spec = cfg.process_spec()
    out_dir = cfg["output.dir"]
    os.makedirs(out_dir, exist_ok=True)
    paths = cfg["simulate.paths"]
    mode = cfg["simulate.mode"] or ("grid" if spec.time_changed else "events")
    jobs = [(spec, cfg["simulate.horizon"], cfg["simulate.grid"], cfg["simulate.n_steps"],
             mode, cfg.seed, i) for i in range(paths)]
    files = []
    for i, text in enumerate(_map(_simulate_one, jobs, workers)):
        name = f"path_{i:05d}.csv"
        _write(os.path.join(out_dir, name), text)
        files.append(name)
    manifest = {
        "command": "simulate",
        "version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "mode": mode,
        "paths": paths,
        "files": files,
        "config": cfg.values,
    }
    _write(os.path.join(out_dir, "manifest.json"), _dumps(manifest))
    return EXIT_PASS


def _report_moments(cfg, spec, stream, workers):
    t, s = cfg["report.t"], cfg["report.s"]
    times = [t] if s is None else sorted({s, t})
    y, _ = blocked_values(spec, times, cfg["report.paths"], cfg.seed, stream + 1,
                          cfg["report.n_steps"], workers)
    rep = compare_moments(spec, t, len(y), RngStream(cfg.seed, stream), s=s,
                          values=(times, y))
    out = rep.to_dict()
    out["status"] = "pass" if rep.passes() else "fail"
    return out


def _report_martingale(cfg, spec, stream, workers):
    pairs = cfg.t_pairs()
    times = sorted({v for p in pairs for v in p})
    y, e = blocked_values(spec, times, cfg["report.paths"], cfg.seed, stream,
                          cfg["report.n_steps"], workers)
    rows = martingale_test(spec, pairs, len(y), None, values=(times, y, e))
    power = martingale_test(spec, pairs, len(y), None, values=(times, y, e),
                            compensator="drop_jump_mean")
    ok = all(abs(r.z) < 3 for r in rows)
    return {
        "status": "pass" if ok else "fail",
        "rows": [r._asdict() for r in rows],
        "power_check": [r._asdict() for r in power],
    }


def _report_lrd(cfg, spec, stream, workers):
    if not isinstance(spec.subordinator, TemperedStable):
        raise ConfigError("lrd report: arrival.kind must be tempered")
    if spec.jump.moments().mean != 0:
        raise ConfigError("lrd report: jump.kind must be centered (zero-mean jumps)")
    s = cfg["report.lrd_s"]
    t_grid = np.geomspace(cfg["report.lrd_t_min"], cfg["report.lrd_t_max"], cfg["report.lrd_points"])
    if t_grid[0] <= s:
        raise ConfigError("lrd report: report.lrd_t_min must exceed report.lrd_s")
    times = [s] + list(t_grid)
    y, _ = blocked_values(spec, times, cfg["report.paths"], cfg.seed, stream,
                          cfg["report.n_steps"], workers)
    fit = lrd_slope_from_values(y[:, 0], y[:, 1:], t_grid)
    return {
        "status": "pass" if -0.6 <= fit.slope <= -0.4 else "fail",
        "slope": fit.slope,
        "intercept": fit.intercept,
        "stderr": fit.stderr,
        "t": fit.t_used.tolist(),
        "corr": fit.corr.tolist(),
    }


def _report_dde(cfg, spec, stream, workers):
    if not getattr(spec.jump, "discrete", False):
        raise ConfigError("dde report: a discrete jump law is required")
    if not spec.time_changed:
        raise ConfigError("dde report: a time-changed arrival clock is required")
    h = cfg["report.dde_h"]
    n = int(round(cfg["report.dde_t_max"] / h))
    n += n % 2
    t_grid = h * np.arange(n + 1)
    if cfg["report.dde_source"] == "semi-analytic":
        source = SemiAnalytic()
    else:
        source = MonteCarlo(cfg["report.paths"], cfg["report.n_steps"])
    rep = dde_residual(spec, cfg["report.dde_n_max"], t_grid, source,
                       RngStream(cfg.seed, stream), t_min=cfg["report.dde_t_min"])
    return rep.to_dict()


def _report_representation(cfg, spec, stream, workers):
    direct_law, outer = cfg.representation()
    t = cfg["report.t"]
    paths = cfg["report.paths"]
    direct = ProcessSpec(spec.lam, direct_law, spec.subordinator, spec.multiplier)
    y_direct, _ = blocked_values(direct, [t], paths, cfg.seed, stream, cfg["report.n_steps"], workers)
    y_comp = simulate_representation(outer, spec, t, RngStream(cfg.seed, stream + 2 ** 20),
                                     size=paths, n_steps=cfg["report.n_steps"])
    d, p = ks_two_sample(y_direct[:, 0], y_comp)
    return {
        "status": "pass" if p >= 0.01 else "fail",
        "identity": cfg["report.representation"],
        "t": t,
        "statistic": d,
        "p_value": p,
        "n": [int(y_direct.shape[0]), int(np.size(y_comp))],
    }


_REPORTERS = {
    "moments": _report_moments,
    "lrd": _report_lrd,
    "martingale": _report_martingale,
    "dde": _report_dde,
    "representation": _report_representation,
}


def cmd_report(cfg, kinds=None, workers=1):
    kinds = list(kinds or cfg["report.kinds"])
    if not kinds:
        raise ConfigError("no reports selected (set report.kinds or pass --kind)")
    spec = cfg.process_spec()
    out_dir = cfg["output.dir"]
    os.makedirs(out_dir, exist_ok=True)
    code = EXIT_PASS
    for kind in kinds:
        stream = _REPORT_STREAM_BASE + _REPORT_KINDS.index(kind) * 2 ** 32
        head = {"kind": kind, "config_sha256": cfg.digest(), "seed": cfg.seed}
        try:
            body = _REPORTERS[kind](cfg, spec, stream, workers)
        except MomentUndefinedError as exc:
            body = {"status": "error", "error": "moment-undefined", "message": str(exc)}
            code = max(code, EXIT_CONFIG)
        else:
            if body["status"] != "pass":
                code = max(code, EXIT_FAIL)
        report = {**head, **body}
        _write(os.path.join(out_dir, f"report_{kind}.json"), _dumps(report))
        print(f"{kind}: {report['status']}")
    return code


def cmd_presets(show=None, write=None):
    if show is not None:
        if show not in PRESETS:
            raise ConfigError(f"unknown preset {show!r}")
        sys.stdout.write(preset_text(*PRESETS[show]))
        return EXIT_PASS
    if write is not None:
        os.makedirs(write, exist_ok=True)
        for name, (row, col) in PRESETS.items():
            _write(os.path.join(write, f"{name}.cfg"), preset_text(row, col))
    for name in PRESETS:
        print(name)
    return EXIT_PASS


# ====
# main
# ====

def _parser():
    p = argparse.ArgumentParser(prog="gfcpp", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "report"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=1)
        if name == "report":
            sp.add_argument("--kind", action="append", choices=_REPORT_KINDS)
    pp = sub.add_parser("presets")
    g = pp.add_mutually_exclusive_group()
    g.add_argument("--show", metavar="NAME")
    g.add_argument("--write", metavar="DIR")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "presets":
            return cmd_presets(args.show, args.write)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.workers)
        return cmd_report(cfg, args.kind, args.workers)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
