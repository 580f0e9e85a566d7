"""Experiment harness: training runs, accuracy sweeps, the squeezing study.

Subcommands: train, sweep-sigma, sweep-modes, gain-study, baseline, validate.
Each run writes into its own output directory: a config snapshot (config.json),
the result CSVs, and a summary JSON. Exit codes: 0 success, 2 invalid
configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats

from .channel import (ChannelError, SignalParams, load_covariance,
                      make_rank1_covariance, uniform_direction, validate_covariance)
from .circuit import CircuitConfig, orthonormalize
from .measurement import DetectionSpec, MeasurementError, sample_loss, sample_shot_losses, write_shot_log
from .oracles import random_guess_baseline
from .trainer import PsoParams, TrainerError, train

SWEEP_COLUMNS = ("task", "strategy", "modes", "sigma_c", "gain", "seed",
                 "final_acc_best", "final_acc_gbest", "epochs", "random_guess")
GAIN_COLUMNS = ("arm",) + SWEEP_COLUMNS


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def derive_seed(base_seed: int, *parts) -> int:
    """Stable per-point seed from the base seed and the point coordinates."""
    key = "|".join(str(p) for p in (base_seed, *parts))
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def reference_direction(mode_count: int, angle_deg: float) -> np.ndarray:
    """Unit vector at a fixed angle to the uniform signal direction.

    Used as the CCA reference u; angle 0 (mod 180) would make u collinear with
    the signal and is rejected.
    """
    if abs(np.sin(np.radians(angle_deg))) < 1e-9:
        raise ConfigError("u-angle must not be a multiple of 180 degrees")
    v = uniform_direction(mode_count)
    e1 = np.zeros(mode_count)
    e1[0] = 1.0
    q = orthonormalize(e1 - (v @ e1) * v).w
    theta = np.radians(angle_deg)
    return np.cos(theta) * v + np.sin(theta) * q


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_rows(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue())


def _write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_config_file(path) -> dict:
    """Flat key = value config file; keys use the CLI flag names."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


CONFIG_PARSERS = {
    "task": str, "strategy": str, "modes": _ints, "sigma_c": _floats,
    "gain": _floats, "epochs": int, "particles": int, "shots": int,
    "seed": _ints, "out": str, "cov_file": str, "u_angle": float,
    "inertia": float, "r_max": float, "forgetting": float,
    "total_strength": float, "workers": int, "samples": int,
    "ks_samples": int,
}


def _apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    if not getattr(args, "config", None):
        return
    raw = read_config_file(args.config)
    for key, value in raw.items():
        if key not in CONFIG_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        # explicit command-line flags win over config-file values
        if f"--{key.replace('_', '-')}" in argv:
            continue
        setattr(args, key, CONFIG_PARSERS[key](value))


def _point_dict(args, task, strategy, modes, sigma_c, gain, seed) -> dict:
    return {
        "task": task, "strategy": strategy, "modes": modes, "sigma_c": sigma_c,
        "gain": gain, "seed": seed, "epochs": args.epochs,
        "particles": args.particles, "shots": args.shots,
        "inertia": args.inertia, "r_max": args.r_max,
        "forgetting": args.forgetting, "u_angle": args.u_angle,
    }


def run_point(point: dict) -> dict:
    """Train one sweep point and return its record row."""
    signal = SignalParams(point["modes"], point["sigma_c"])
    pso = PsoParams(particle_count=point["particles"], inertia=point["inertia"],
                    r_max=point["r_max"], forgetting=point["forgetting"],
                    epochs=point["epochs"], shots_per_eval=point["shots"],
                    seed=point["seed"])
    u = reference_direction(point["modes"], point["u_angle"]) if point["task"] == "cca" else None
    start = time.perf_counter()
    history = train(point["task"], point["strategy"], signal, pso,
                    u=u, gain=point["gain"])
    elapsed = time.perf_counter() - start
    last = history.records[-1]
    return {
        "task": point["task"], "strategy": point["strategy"],
        "modes": point["modes"], "sigma_c": repr(point["sigma_c"]),
        "gain": repr(point["gain"]), "seed": point["seed"],
        "final_acc_best": repr(last.acc_best),
        "final_acc_gbest": repr(last.acc_gbest),
        "epochs": point["epochs"],
        "random_guess": repr(1.0 / point["modes"]),
        # wall time is reported via the summary sidecar so the CSV stays
        # byte-identical across repeated seeded runs
        "_wall_time": elapsed,
    }


def _run_points(points: list[dict], workers: int) -> list[dict]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_point, points))
    return [run_point(p) for p in points]


def _strategies(arg: str) -> list[str]:
    if arg == "both":
        return ["counting", "homodyne"]
    if arg in ("counting", "homodyne"):
        return [arg]
    raise ConfigError(f"unknown strategy {arg!r}")


def _single(values, name):
    if len(values) != 1:
        raise ConfigError(f"{name} must be a single value here, got {values}")
    return values[0]


def _config_snapshot(args, command: str) -> dict:
    snapshot = {"command": command}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "config"):
            continue
        snapshot[key] = value
    return snapshot


def _median_summary(rows, group_keys) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = tuple(row[k] for k in group_keys)
        groups.setdefault(key, []).append(float(row["final_acc_gbest"]))
    return [
        {**dict(zip(group_keys, key)),
         "median_acc_gbest": float(np.median(vals)),
         "runs": len(vals)}
        for key, vals in sorted(groups.items())
    ]


def cmd_train(args) -> int:
    out = Path(args.out)
    task = args.task
    strategy = _single(_strategies(args.strategy), "strategy") \
        if args.strategy != "both" else None
    if strategy is None:
        raise ConfigError("train runs a single strategy; use sweep commands for 'both'")
    gain = _single(args.gain, "gain")
    seed = _single(args.seed, "seed")

    pso = PsoParams(particle_count=args.particles, inertia=args.inertia,
                    r_max=args.r_max, forgetting=args.forgetting,
                    epochs=args.epochs, shots_per_eval=args.shots, seed=seed)
    if args.cov_file:
        cov = load_covariance(args.cov_file)
        modes = cov.mode_count
        signal = None
    else:
        modes = _single(args.modes, "modes")
        sigma_c = _single(args.sigma_c, "sigma-c")
        signal = SignalParams(modes, sigma_c)
        cov = None
    u = reference_direction(modes, args.u_angle) if task == "cca" else None

    history = train(task, strategy, signal, pso, u=u, gain=gain, cov=cov)

    buf = io.StringIO()
    history.write_csv(buf)
    _atomic_write(out / "history.csv", buf.getvalue())
    _write_json(out / "config.json", _config_snapshot(args, "train"))
    last = history.records[-1]
    _write_json(out / "summary.json", {
        "epochs": len(history.records),
        "final_acc_best": last.acc_best,
        "final_acc_gbest": last.acc_gbest,
        "final_loss_gbest": last.loss_gbest,
        "random_guess": 1.0 / modes,
    })
    if args.dump_shots:
        cov_run = cov if cov is not None else make_rank1_covariance(signal)
        spec = DetectionSpec(strategy, task, args.shots, gain)
        rng = np.random.default_rng(derive_seed(seed, "dump-shots"))
        sample = sample_loss(spec, CircuitConfig(history.final_gbest, u),
                             cov_run, rng, record_outcomes=True)
        write_shot_log(sample, out / "shots.jsonl")
    return 0


def cmd_sweep_sigma(args) -> int:
    out = Path(args.out)
    modes = _single(args.modes, "modes")
    points = []
    for sigma_c in args.sigma_c:
        for strategy in _strategies(args.strategy):
            for rep in args.seed:
                seed = derive_seed(rep, args.task, strategy, modes, sigma_c,
                                   _single(args.gain, "gain"))
                points.append(_point_dict(args, args.task, strategy, modes,
                                          sigma_c, _single(args.gain, "gain"), seed))
    rows = _run_points(points, args.workers)
    _write_rows(out / "sweep.csv", SWEEP_COLUMNS, rows)
    _write_json(out / "config.json", _config_snapshot(args, "sweep-sigma"))
    _write_json(out / "summary.json", {
        "groups": _median_summary(rows, ("task", "strategy", "sigma_c")),
        "wall_time_total": sum(r["_wall_time"] for r in rows),
    })
    return 0


def cmd_sweep_modes(args) -> int:
    out = Path(args.out)
    gain = _single(args.gain, "gain")
    points = []
    for modes in args.modes:
        sigma_c = float(args.total_strength / np.sqrt(modes))
        for strategy in _strategies(args.strategy):
            for rep in args.seed:
                seed = derive_seed(rep, args.task, strategy, modes, sigma_c, gain)
                points.append(_point_dict(args, args.task, strategy, modes,
                                          sigma_c, gain, seed))
    rows = _run_points(points, args.workers)
    _write_rows(out / "sweep.csv", SWEEP_COLUMNS, rows)
    _write_json(out / "config.json", _config_snapshot(args, "sweep-modes"))
    _write_json(out / "summary.json", {
        "groups": _median_summary(rows, ("task", "strategy", "modes")),
        "wall_time_total": sum(r["_wall_time"] for r in rows),
    })
    return 0


def cmd_gain_study(args) -> int:
    out = Path(args.out)
    modes = _single(args.modes, "modes")
    sigma_c = _single(args.sigma_c, "sigma-c")
    strategy = _single(_strategies(args.strategy), "strategy")

    points, arms = [], []
    for gain in args.gain:
        rescaled_sigma = float(np.sqrt(gain) * sigma_c)
        for rep in args.seed:
            seed = derive_seed(rep, args.task, strategy, modes, sigma_c, gain)
            points.append(_point_dict(args, args.task, strategy, modes,
                                      sigma_c, gain, seed))
            arms.append((gain, "gained"))
            points.append(_point_dict(args, args.task, strategy, modes,
                                      rescaled_sigma, 1.0, seed))
            arms.append((gain, "rescaled"))
    rows = _run_points(points, args.workers)
    for row, (_, arm) in zip(rows, arms):
        row["arm"] = arm
    _write_rows(out / "gain_study.csv", GAIN_COLUMNS, rows)

    report = []
    for gain in args.gain:
        ks_stat, ks_p = _gain_ks(args, modes, sigma_c, gain)
        entry = {"gain": gain, "ks_statistic": ks_stat, "ks_pvalue": ks_p}
        for arm in ("gained", "rescaled"):
            accs = [float(r["final_acc_gbest"]) for r, key in zip(rows, arms)
                    if key == (gain, arm)]
            entry[arm] = {
                "median_acc": float(np.median(accs)),
                "q1_acc": float(np.percentile(accs, 25)),
                "q3_acc": float(np.percentile(accs, 75)),
            }
        report.append(entry)
    _write_json(out / "equivalence.json", report)
    _write_json(out / "config.json", _config_snapshot(args, "gain-study"))
    _write_json(out / "summary.json", report)
    return 0


def _gain_ks(args, modes: int, sigma_c: float, gain: float) -> tuple[float, float]:
    """Two-sample KS between per-shot losses of the gained and rescaled arms."""
    u = reference_direction(modes, args.u_angle) if args.task == "cca" else None
    v = uniform_direction(modes)
    w = orthonormalize(v, u).w if u is not None else v
    circuit = CircuitConfig(w, u)
    n = args.ks_samples
    strategy = _single(_strategies(args.strategy), "strategy")

    rng_a = np.random.default_rng(derive_seed(args.seed[0], "ks", gain, "gained"))
    spec_a = DetectionSpec(strategy, args.task, n, gain)
    cov_a = make_rank1_covariance(SignalParams(modes, sigma_c))
    losses_a = sample_shot_losses(spec_a, circuit, cov_a, rng_a)

    rng_b = np.random.default_rng(derive_seed(args.seed[0], "ks", gain, "rescaled"))
    spec_b = DetectionSpec(strategy, args.task, n, 1.0)
    cov_b = make_rank1_covariance(SignalParams(modes, float(np.sqrt(gain) * sigma_c)))
    losses_b = sample_shot_losses(spec_b, circuit, cov_b, rng_b)

    result = stats.ks_2samp(losses_a, losses_b)
    return float(result.statistic), float(result.pvalue)


def cmd_baseline(args) -> int:
    modes = _single(args.modes, "modes")
    rng = np.random.default_rng(_single(args.seed, "seed"))
    estimate = random_guess_baseline(modes, args.samples, rng)
    payload = {"modes": modes, "samples": args.samples,
               "estimate": estimate, "expected": 1.0 / modes}
    print(json.dumps(payload))
    if args.out:
        _write_json(Path(args.out) / "baseline.json", payload)
    return 0


def cmd_validate(args) -> int:
    if not args.cov_file:
        raise ConfigError("validate requires --cov-file")
    matrix = np.loadtxt(args.cov_file, ndmin=2)
    report = validate_covariance(matrix)
    print(json.dumps({
        "ok": report.ok,
        "symmetry_defect": report.symmetry_defect,
        "min_eigenvalue": report.min_eigenvalue,
        "max_eigenvalue": report.max_eigenvalue,
        "reason": report.reason,
    }))
    return 0 if report.ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmsense",
                                     description="Physical-layer learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, strategy_default="counting"):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--task", choices=["pca", "cca"], default="pca")
        p.add_argument("--strategy", choices=["counting", "homodyne", "both"],
                       default=strategy_default)
        p.add_argument("--modes", type=_ints, default=[21])
        p.add_argument("--sigma-c", type=_floats, default=[0.02])
        p.add_argument("--gain", type=_floats, default=[1.0])
        p.add_argument("--epochs", type=int, default=200)
        p.add_argument("--particles", type=int, default=20)
        p.add_argument("--shots", type=int, default=1000)
        p.add_argument("--inertia", type=float, default=0.7)
        p.add_argument("--r-max", type=float, default=0.5)
        p.add_argument("--forgetting", type=float, default=0.1)
        p.add_argument("--seed", type=_ints, default=[0])
        p.add_argument("--u-angle", type=float, default=45.0,
                       help="angle (degrees) between the CCA reference and the signal direction")
        p.add_argument("--cov-file", help="plain-text covariance matrix (general V)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("train", help="single training run, writes history.csv")
    add_common(p)
    p.add_argument("--dump-shots", action="store_true",
                   help="dump per-shot outcomes of the final configuration as JSONL")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep-sigma", help="accuracy vs signal strength")
    add_common(p, strategy_default="both")
    p.set_defaults(func=cmd_sweep_sigma)

    p = sub.add_parser("sweep-modes", help="accuracy vs mode count at fixed total strength")
    add_common(p, strategy_default="both")
    p.add_argument("--total-strength", type=float, default=0.2,
                   help="sqrt(M) * sigma_c held constant across M")
    p.set_defaults(func=cmd_sweep_modes)

    p = sub.add_parser("gain-study", help="squeezing gain vs rescaled-signal equivalence")
    add_common(p)
    p.add_argument("--ks-samples", type=int, default=100000)
    p.set_defaults(func=cmd_gain_study)

    p = sub.add_parser("baseline", help="Monte-Carlo random-guess accuracy estimate")
    add_common(p)
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("validate", help="check a covariance matrix file")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, argv)
        if args.command not in ("baseline", "validate") and not args.out:
            raise ConfigError("--out is required")
        if len(set(args.seed)) != len(args.seed):
            raise ConfigError("seeds must be distinct")
        return args.func(args)
    except (ConfigError, ChannelError, MeasurementError, TrainerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
