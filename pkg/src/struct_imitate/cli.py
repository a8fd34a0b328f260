"""Command-line front end: ingest -> fit -> (adapt) -> predict / eval.

Each subcommand is a thin composition of the library operations. Output CSV
is deterministic for a given configuration and input files: fixed column
order, rows in query order, 17 significant digits. Grid prediction may be
parallelized by setting STRUCT_IMITATE_THREADS; row order is preserved.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import data as tdata
from .errors import SchemaError, StructImitateError
from .euclidean import ImitationMode, predict, superpose_predict
from .kernels import KernelConfig, fit
from .manifolds import manifold_from_dict
from .metrics import evaluate
from .riemannian import RgdConfig, predict_manifold
from .temporal import adapt_temporal, fit_temporal, phase_map, predict_pos_vel

FMT = "%.17g"


@dataclass
class RunConfig:
    """Validated run settings; JSON config files reject unknown keys."""

    kappa: float = 6.0
    lam: float = 1e-5
    divergence: str = "kl"
    cov_variant: str = "exact"
    delta: float | None = None
    rgd_eta: float = 0.01
    rgd_max_iter: int = 1000
    rgd_tol: float = 1e-9
    data: str | None = None
    out: str | None = None
    via: str | None = None
    superpose: str | None = None
    grid_start: float | None = None
    grid_end: float | None = None
    grid_count: int | None = None


_CONFIG_SECTIONS = {
    "kernel": {"kappa": "kappa", "lambda": "lam"},
    "mode": {"divergence": "divergence", "cov_variant": "cov_variant"},
    "rgd": {"eta": "rgd_eta", "max_iter": "rgd_max_iter", "tol": "rgd_tol"},
    "io": {"data": "data", "out": "out", "via": "via", "superpose": "superpose"},
    "grid": {"start": "grid_start", "end": "grid_end", "count": "grid_count"},
}


def load_run_config(path) -> RunConfig:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise SchemaError("config: must be an object")
    cfg = RunConfig()
    unknown_top = set(raw) - set(_CONFIG_SECTIONS) - {"delta"}
    if unknown_top:
        raise SchemaError(f"config: unknown fields {sorted(unknown_top)}")
    if "delta" in raw and raw["delta"] is not None:
        cfg.delta = float(raw["delta"])
    for section, fields in _CONFIG_SECTIONS.items():
        if section not in raw:
            continue
        body = raw[section]
        if not isinstance(body, dict):
            raise SchemaError(f"config.{section}: must be an object")
        unknown = set(body) - set(fields)
        if unknown:
            raise SchemaError(f"config.{section}: unknown fields {sorted(unknown)}")
        for key, attr in fields.items():
            if key in body and body[key] is not None:
                setattr(cfg, attr, body[key])
    return cfg


def _merge_args(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        "kappa": "kappa",
        "lam": "lam",
        "mode": "divergence",
        "cov_variant": "cov_variant",
        "delta": "delta",
        "rgd_eta": "rgd_eta",
        "rgd_max_iter": "rgd_max_iter",
        "rgd_tol": "rgd_tol",
        "data": "data",
        "out": "out",
        "via": "via",
        "superpose": "superpose",
    }
    for arg_name, attr in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def _parse_grid(args, cfg: RunConfig) -> np.ndarray:
    """Uniform grid from start:end:count, or arbitrary points from a JSON list."""
    if getattr(args, "grid_file", None):
        with open(args.grid_file) as f:
            pts = json.load(f)
        if not isinstance(pts, list) or not pts:
            raise SchemaError(f"{args.grid_file}: must be a nonempty JSON list")
        arr = np.asarray(pts, dtype=float)
        return arr if arr.ndim == 2 else arr[:, None]
    spec = getattr(args, "grid", None)
    if spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise SchemaError("grid: expected START:END:COUNT")
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    elif cfg.grid_start is not None and cfg.grid_end is not None and cfg.grid_count:
        start, end, count = cfg.grid_start, cfg.grid_end, int(cfg.grid_count)
    else:
        raise SchemaError("grid: missing (pass --grid or configure grid.*)")
    if count < 1:
        raise SchemaError("grid.count: must be >= 1")
    return np.linspace(start, end, count)[:, None]


def _ordered_map(fn, items):
    workers = int(os.environ.get("STRUCT_IMITATE_THREADS", "1") or "1")
    if workers <= 1 or len(items) <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _num(v: float) -> str:
    return FMT % v


def _prediction_rows(xs, preds):
    in_dim = xs.shape[1]
    out_dim = preds[0].mu.shape[0]
    sig_dim = preds[0].sigma.shape[0]
    header = (
        [f"x{i}" for i in range(in_dim)]
        + [f"mu{i}" for i in range(out_dim)]
        + [f"sigma_{i}_{j}" for i in range(sig_dim) for j in range(sig_dim)]
        + ["flags"]
    )
    rows = []
    for x, p in zip(xs, preds):
        flags = []
        if p.clamped:
            flags.append("clamped")
        if not p.converged:
            flags.append("nonconverged")
        rows.append(
            [_num(v) for v in x]
            + [_num(v) for v in p.mu]
            + [_num(v) for v in p.sigma.ravel()]
            + [";".join(flags)]
        )
    return header, rows


def _load_manifold_arg(text):
    text = text.strip()
    if text.startswith("{"):
        return manifold_from_dict(json.loads(text))
    with open(text) as f:
        return manifold_from_dict(json.load(f))


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    demos = []
    for path in args.demos:
        with open(path) as f:
            raw = json.load(f)
        if not isinstance(raw, dict) or "inputs" not in raw or "outputs" not in raw:
            raise SchemaError(f"{path}: demo files need 'inputs' and 'outputs'")
        demos.append(
            (np.asarray(raw["inputs"], dtype=float), np.asarray(raw["outputs"], dtype=float))
        )
    manifold = _load_manifold_arg(args.manifold) if args.manifold else None
    traj = tdata.ingest_demonstrations(demos, epsilon=args.epsilon, manifold=manifold)
    record = tdata.trajectory_to_dict(traj)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(record, f, allow_nan=False)
            f.write("\n")
    else:
        json.dump(record, sys.stdout, allow_nan=False)
        sys.stdout.write("\n")
    return 0


def cmd_predict(args) -> int:
    cfg = _merge_args(args)
    if not cfg.data or not cfg.out:
        raise SchemaError("io: --data and --out are required")
    traj = tdata.load_trajectory(cfg.data)
    mode = ImitationMode(
        divergence=cfg.divergence,
        kl_cov_variant="approximate" if cfg.cov_variant in ("approx", "approximate") else "exact",
    )
    kconf = KernelConfig(kappa=cfg.kappa, lam=cfg.lam)
    xs = _parse_grid(args, cfg)

    if cfg.superpose:
        sup = tdata.load_superposition(cfg.superpose)
        model = fit(sup.trajectories[0].inputs, config=kconf)
        preds = _ordered_map(lambda x: superpose_predict(model, sup, mode, x), list(xs))
    else:
        weights = None
        if cfg.via:
            via = tdata.load_via_set(cfg.via)
            traj, weights = tdata.merge_via_points(traj, via)
        model = fit(traj.inputs, row_weights=weights, config=kconf)
        preds = _ordered_map(lambda x: predict(model, traj, mode, x), list(xs))

    header, rows = _prediction_rows(xs, preds)
    _write_csv(cfg.out, header, rows)
    return 0


def _load_temporal_data(path):
    with open(path) as f:
        raw = json.load(f)
    for key in ("times", "positions", "velocities"):
        if not isinstance(raw, dict) or key not in raw:
            raise SchemaError(f"{path}: missing field {key}")
    return (
        np.asarray(raw["times"], dtype=float),
        np.asarray(raw["positions"], dtype=float),
        np.asarray(raw["velocities"], dtype=float),
    )


def _load_temporal_via(path):
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict) or "points" not in raw or not isinstance(raw["points"], list):
        raise SchemaError(f"{path}: expected an object with a 'points' list")
    entries = []
    for j, p in enumerate(raw["points"]):
        if not isinstance(p, dict) or "t" not in p or "weight" not in p:
            raise SchemaError(f"points[{j}]: needs 't' and 'weight'")
        extra = set(p) - {"t", "position", "velocity", "weight"}
        if extra:
            raise SchemaError(f"points[{j}]: unknown fields {sorted(extra)}")
        entries.append(
            (
                float(p["t"]),
                None if p.get("position") is None else np.asarray(p["position"], dtype=float),
                None if p.get("velocity") is None else np.asarray(p["velocity"], dtype=float),
                float(p["weight"]),
            )
        )
    return entries


def cmd_predict_temporal(args) -> int:
    cfg = _merge_args(args)
    if not cfg.data or not cfg.out:
        raise SchemaError("io: --data and --out are required")
    times, pos, vel = _load_temporal_data(cfg.data)
    kconf = KernelConfig(kappa=cfg.kappa, lam=cfg.lam)
    model = fit_temporal(times, pos, vel, config=kconf, delta=cfg.delta)
    if cfg.via:
        model = adapt_temporal(model, _load_temporal_via(cfg.via))
    ts = _parse_grid(args, cfg)[:, 0]
    queries = phase_map(ts, args.tau) if args.tau else ts
    results = _ordered_map(lambda z: predict_pos_vel(model, z), list(queries))
    out_dim = model.output_dim
    header = (
        ["t"]
        + [f"pos{i}" for i in range(out_dim)]
        + [f"vel{i}" for i in range(out_dim)]
    )
    rows = [
        [_num(t)] + [_num(v) for v in p] + [_num(v) for v in w]
        for t, (p, w) in zip(ts, results)
    ]
    _write_csv(cfg.out, header, rows)
    return 0


def cmd_predict_manifold(args) -> int:
    cfg = _merge_args(args)
    if not cfg.data or not cfg.out:
        raise SchemaError("io: --data and --out are required")
    traj = tdata.load_trajectory(cfg.data)
    if args.manifold:
        manifold = _load_manifold_arg(args.manifold)
        if traj.manifold is not None and manifold != traj.manifold:
            raise SchemaError("manifold: flag disagrees with the data file")
        traj = tdata.ProbabilisticTrajectory(points=traj.points, manifold=manifold)
    if traj.manifold is None:
        raise SchemaError("manifold: not present in data and not passed via flag")
    kconf = KernelConfig(kappa=cfg.kappa, lam=cfg.lam)
    rgd = RgdConfig(eta=cfg.rgd_eta, max_iter=cfg.rgd_max_iter, tol=cfg.rgd_tol)
    variant = "approx" if cfg.cov_variant in ("approx", "approximate") else "exact"

    weights = None
    if cfg.via:
        via = tdata.load_via_set(cfg.via)
        traj, weights = tdata.merge_via_points(traj, via)
    model = fit(traj.inputs, row_weights=weights, config=kconf)
    xs = _parse_grid(args, cfg)
    preds = _ordered_map(
        lambda x: predict_manifold(model, traj, x, cfg=rgd, variant=variant), list(xs)
    )
    header, rows = _prediction_rows(xs, preds)
    _write_csv(cfg.out, header, rows)
    return 0


def _read_prediction_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        rows = list(reader)
    mu_idx = [i for i, h in enumerate(header) if h.startswith("mu")]
    sig_idx = [i for i, h in enumerate(header) if h.startswith("sigma_")]
    if not mu_idx or not sig_idx:
        raise SchemaError(f"{path}: missing mu/sigma columns")
    o = len(mu_idx)
    d = int(math.isqrt(len(sig_idx)))
    if d * d != len(sig_idx):
        raise SchemaError(f"{path}: sigma columns do not form a square matrix")
    means = np.array([[float(r[i]) for i in mu_idx] for r in rows])
    covs = np.array([[float(r[i]) for i in sig_idx] for r in rows]).reshape(-1, d, d)
    return means, covs


def _read_reference(path):
    if str(path).endswith(".json"):
        traj = tdata.load_trajectory(path)
        return traj.means, traj.covariances
    return _read_prediction_csv(path)


def cmd_eval(args) -> int:
    pred_means, pred_covs = _read_prediction_csv(args.pred)
    ref_means, ref_covs = _read_reference(args.ref)
    start = time.perf_counter()
    report = evaluate(pred_means, pred_covs, ref_means, ref_covs)
    report = replace(report, wall_time=time.perf_counter() - start)
    print(f"{'C_m':>12} {'C_cov':>12} {'Time (s)':>12}")
    print(f"{report.c_m:>12.6g} {report.c_cov:>12.6g} {report.wall_time:>12.3g}")
    payload = json.dumps(report.to_dict(), allow_nan=False)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload + "\n")
    else:
        print(payload)
    return 0


# -- parser -------------------------------------------------------------------


def _add_common(p, temporal=False, manifold=False):
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--data", help="input data file")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--kappa", type=float, help="kernel bandwidth")
    p.add_argument("--lambda", dest="lam", type=float, help="ridge regularization")
    p.add_argument("--grid", help="uniform query grid START:END:COUNT")
    p.add_argument("--grid-file", help="JSON list of query points")
    p.add_argument("--via", help="via-point file")
    if temporal:
        p.add_argument("--delta", type=float, help="central-difference half-step")
        p.add_argument("--tau", type=float, help="phase time-scaling (z = t/tau)")
    if manifold:
        p.add_argument("--manifold", help="manifold JSON (inline or file path)")
        p.add_argument("--rgd-eta", dest="rgd_eta", type=float, help="descent step size")
        p.add_argument(
            "--rgd-max-iter", dest="rgd_max_iter", type=int, help="descent iteration cap"
        )
        p.add_argument("--rgd-tol", dest="rgd_tol", type=float, help="gradient tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="struct-imitate",
        description="Probabilistic trajectory imitation by kernel structured prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="aggregate demonstrations into a trajectory JSON")
    p.add_argument("demos", nargs="+", help="demo JSON files with 'inputs'/'outputs'")
    p.add_argument("--epsilon", type=float, help="covariance jitter")
    p.add_argument("--manifold", help="manifold JSON (inline or file path)")
    p.add_argument("--out", help="output trajectory JSON path (default stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("predict", help="Euclidean KL/RKL prediction over a query grid")
    _add_common(p)
    p.add_argument("--mode", choices=["kl", "rkl"], help="imitation mode")
    p.add_argument(
        "--cov-variant",
        dest="cov_variant",
        choices=["exact", "approx"],
        help="KL covariance variant",
    )
    p.add_argument("--superpose", help="superposition file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "predict-temporal", help="joint position/velocity prediction over a time grid"
    )
    _add_common(p, temporal=True)
    p.set_defaults(func=cmd_predict_temporal)

    p = sub.add_parser(
        "predict-manifold", help="manifold mean/covariance prediction over a query grid"
    )
    _add_common(p, manifold=True)
    p.add_argument(
        "--cov-variant",
        dest="cov_variant",
        choices=["exact", "approx"],
        help="covariance variant",
    )
    p.set_defaults(func=cmd_predict_manifold)

    p = sub.add_parser("eval", help="compare a prediction CSV against a reference")
    p.add_argument("--pred", required=True, help="prediction CSV")
    p.add_argument("--ref", required=True, help="reference CSV or trajectory JSON")
    p.add_argument("--out", help="EvalReport JSON path")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StructImitateError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
