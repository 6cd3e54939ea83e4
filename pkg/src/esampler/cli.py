"""Experiment runner CLI.

Subcommands:
  run           execute a configured experiment, writing run artifacts
  list-targets  catalogue of built-in target densities
  metrics       compare sample files / score samples against a target
  export        pull derived files (e.g. final filtered samples) out of a run

Artifact layout of a run directory (schemas are frozen; downstream tools
rely on them):
  positions.csv        columns: iteration, particle_id, x0..x{d-1}
  diagnostics.jsonl    one JSON object per iteration
  metrics.jsonl        one JSON object per recorded snapshot
  resolved_config.json the fully-expanded config that produced the run
  dataset.csv          copy of the target's dataset, when it has one
  manifest.json        sha256 of every artifact plus run status
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, forces, metrics, sampler, targets
from .errors import ConfigError, EsamplerError
from .integrators import PerturbationPolicy, UpdateRule
from .mesh import GeometricSchedule, MagnitudeMode, assign_magnitudes, build_grid

_CONFIG_DIR = Path(__file__).parent / "configs"

FULL_SCALE_KEY = "full_scale_mesh"


# ---------------------------------------------------------------------------
# Config handling


def bundled_configs() -> dict[str, Path]:
    return {p.stem: p for p in sorted(_CONFIG_DIR.glob("*.json"))}


def resolve_config_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_configs()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise ConfigError(f"config {name_or_path!r} is neither a file nor a bundled name "
                      f"(bundled: {sorted(bundled)})")


def load_config(name_or_path: str) -> dict:
    path = resolve_config_path(name_or_path)
    try:
        with open(path) as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"missing required field {where}.{key}" if where else
                          f"missing required field {key}")
    return cfg[key]


def build_experiment(cfg: dict, full_scale: bool = False):
    """Instantiate (target, mesh, SamplerConfig) from a config dict."""
    tcfg = _require(cfg, "target", "")
    target = targets.build_target(_require(tcfg, "id", "target"), tcfg.get("params"))

    mcfg = _require(cfg, "mesh", "")
    counts = _require(mcfg, "counts", "mesh")
    q_max = _require(mcfg, "q_max", "mesh")
    if full_scale:
        if FULL_SCALE_KEY not in cfg:
            raise ConfigError(f"--full-scale requested but config has no {FULL_SCALE_KEY}")
        counts = cfg[FULL_SCALE_KEY]["counts"]
        q_max = cfg[FULL_SCALE_KEY].get("q_max", q_max)
    grid = build_grid(_require(mcfg, "bounds", "mesh"), counts)
    if grid.dim != target.dim:
        raise ConfigError(f"mesh dimension {grid.dim} != target dimension {target.dim}")
    grid = assign_magnitudes(grid, target, MagnitudeMode(mcfg.get("mode", "density")), q_max)

    scfg = dict(cfg.get("sampler", {}))
    rule_cfg = dict(scfg.get("rule", {"variant": "euler"}))
    rule = UpdateRule(
        variant=rule_cfg.get("variant", "euler"),
        tau=_vec_or_scalar(rule_cfg.get("tau", 0.1)),
        dt2=_vec_or_scalar(rule_cfg.get("dt2", 0.01)),
        tau_prime=_vec_or_scalar(rule_cfg.get("tau_prime", 1.0)),
    )
    pcfg = scfg.get("perturbation", {})
    anneal_cfg = scfg.get("annealing")
    annealing = None
    if anneal_cfg:
        annealing = GeometricSchedule(gamma=anneal_cfg.get("gamma", 0.99),
                                      floor=anneal_cfg.get("floor", 0.1))
    init_cfg = scfg.get("init", {"kind": "uniform"})
    run_cfg = sampler.SamplerConfig(
        rule=rule,
        iterations=int(scfg.get("iterations", 100)),
        normalize_forces=bool(scfg.get("normalize_forces", True)),
        perturbation=PerturbationPolicy(sigma=float(pcfg.get("sigma", 0.0)),
                                        period_k=int(pcfg.get("period_k", 1))),
        use_mh_filter=bool(scfg.get("mh_filter", False)),
        annealing=annealing,
        init=sampler.InitSpec(**init_cfg),
        n_particles=int(scfg.get("n_particles", 400)),
        seed=int(cfg.get("seed", 0)),
        snapshot_stride=int(scfg.get("snapshot_stride", 5)),
        sequential_filter=bool(scfg.get("sequential_filter", False)),
        workers=int(scfg.get("workers", 1)),
    )
    return target, grid, run_cfg


def _vec_or_scalar(v):
    if isinstance(v, (list, tuple)):
        return np.asarray(v, dtype=float)
    return float(v)


# ---------------------------------------------------------------------------
# Artifact writing


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_positions_csv(path: Path, snapshots, dim: int) -> None:
    with open(path, "w") as f:
        cols = ",".join(f"x{k}" for k in range(dim))
        f.write(f"iteration,particle_id,{cols}\n")
        for iteration, pos in snapshots:
            for pid, row in enumerate(pos):
                f.write(f"{iteration},{pid}," + ",".join(_fmt(v) for v in row) + "\n")


def read_positions_csv(path) -> dict[int, np.ndarray]:
    """Parse a positions file into {iteration: (n, d) array}."""
    path = Path(path)
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header[:2] != ["iteration", "particle_id"] or not header[2:]:
            raise ConfigError(f"{path} does not follow the positions.csv schema "
                              f"(header {header})")
        data: dict[int, list] = {}
        for line in f:
            parts = line.rstrip("\n").split(",")
            data.setdefault(int(parts[0]), []).append([float(v) for v in parts[2:]])
    return {it: np.array(rows) for it, rows in data.items()}


def final_snapshot(path) -> np.ndarray:
    parsed = read_positions_csv(path)
    return parsed[max(parsed)]


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir: Path, status: str, notes: list[str]) -> None:
    entries = {}
    for p in sorted(out_dir.iterdir()):
        if p.name == "manifest.json" or p.is_dir():
            continue
        entries[p.name] = {"sha256": sha256_file(p), "bytes": p.stat().st_size}
    manifest = {"status": status, "notes": notes, "artifacts": entries,
                "created_unix": time.time(), "force_backend": forces.active_backend()}
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def verify_artifacts(run_dir) -> list[str]:
    """Names of artifacts whose bytes no longer match the manifest."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json") as f:
        manifest = json.load(f)
    bad = []
    for name, entry in manifest["artifacts"].items():
        p = run_dir / name
        if not p.exists() or sha256_file(p) != entry["sha256"]:
            bad.append(name)
    return bad


# ---------------------------------------------------------------------------
# run


def _map_anchor_notes(cfg: dict, target, grid) -> list[str]:
    """Compare the grid argmax against the target's reference MAP, if it has one.

    A deviation is recorded in the manifest (it usually means the shipped
    dataset differs from the one the reference point was derived from).
    """
    keys = [k for k in sorted(target.reference_values) if k.startswith("map_")]
    if len(keys) != grid.dim or grid.magnitudes is None:
        return []
    ref = np.array([target.reference_values[k] for k in keys])
    got = grid.points[int(np.argmax(grid.magnitudes))]
    cell = grid.spacings()
    if (np.abs(got - ref) <= cell + 1e-12).all():
        return [f"grid argmax {got.tolist()} is within one cell of the reference MAP "
                f"{ref.tolist()}"]
    return [f"DATASET DISCREPANCY: grid argmax {got.tolist()} deviates from the "
            f"reference MAP {ref.tolist()} by more than one cell "
            f"(cell sizes {cell.tolist()}); the bundled dataset may differ from the "
            "one behind the reference values"]


def _dataset_source(cfg: dict) -> Path | None:
    tid = cfg["target"]["id"]
    params = cfg["target"].get("params") or {}
    if tid == "blr-iris":
        return Path(params.get("dataset") or targets._DATA_DIR / "iris.csv")
    if tid == "lotka-volterra":
        from . import lv
        return Path(params.get("dataset") or lv._DATA)
    return None


def _snapshot_metrics(record, mesh_bounds, target, reference, want_nll: bool):
    low = np.array([b[0] for b in mesh_bounds])
    high = np.array([b[1] for b in mesh_bounds])
    cumulative = np.cumsum([row["wall_time_s"] for row in record.diagnostics])
    rows = []
    for iteration, pos in record.snapshots:
        inside = ((pos >= low) & (pos <= high)).all(axis=1)
        kept = pos[inside]
        row = {"iteration": iteration,
               "cumulative_runtime_s": float(cumulative[iteration - 1]) if iteration else 0.0,
               "n_used": int(inside.sum()), "n_discarded": int((~inside).sum()),
               "avg_nll": None, "mmd2": None}
        if kept.shape[0]:
            if want_nll:
                try:
                    row["avg_nll"], _ = metrics.avg_nll(kept, target)
                except EsamplerError:
                    pass
            if reference is not None:
                row["mmd2"] = metrics.mmd_squared(kept, reference)
        rows.append(row)
    return rows


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    scfg = cfg.setdefault("sampler", {})
    if args.snapshot_stride is not None:
        scfg["snapshot_stride"] = args.snapshot_stride
    if args.workers is not None:
        scfg["workers"] = args.workers

    target, grid, run_cfg = build_experiment(cfg, full_scale=args.full_scale)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    notes = []
    if args.full_scale:
        notes.append(f"mesh counts overridden to {list(grid.counts)} via --full-scale")
    notes.extend(_map_anchor_notes(cfg, target, grid))

    resolved = dict(cfg)
    resolved["resolved"] = {
        "mesh_counts": list(grid.counts),
        "n_grid_points": grid.n_points,
        "force_backend": forces.active_backend(),
        "dataset": None,
    }
    src = _dataset_source(cfg)
    if src is not None:
        shutil.copy(src, out_dir / "dataset.csv")
        resolved["resolved"]["dataset"] = str(src)
    with open(out_dir / "resolved_config.json", "w") as f:
        json.dump(resolved, f, indent=2, sort_keys=True)

    status = "complete"
    try:
        tic = time.perf_counter()
        ensemble, record = sampler.run(run_cfg, grid, target)
        elapsed = time.perf_counter() - tic
        write_positions_csv(out_dir / "positions.csv", record.snapshots, grid.dim)
        write_jsonl(out_dir / "diagnostics.jsonl", record.diagnostics)

        mreq = cfg.get("metrics", {})
        reference = None
        if mreq.get("mmd2_reference"):
            reference = final_snapshot(mreq["mmd2_reference"])
        write_jsonl(out_dir / "metrics.jsonl",
                    _snapshot_metrics(record, grid.bounds, target, reference,
                                      want_nll=bool(mreq.get("avg_nll", True))))

        for name, bcfg in (cfg.get("baselines") or {}).items():
            _run_baseline(name, bcfg, target, cfg.get("seed", 0), out_dir)

        kept, discarded = sampler.filter_in_region(ensemble, grid)
        print(f"run '{cfg.get('name', args.config)}' complete: "
              f"{run_cfg.iterations} iterations in {elapsed:.1f}s, "
              f"{len(kept)} particles in region ({discarded} discarded), "
              f"backend={forces.active_backend()}")
    except EsamplerError as e:
        status = "failed"
        notes.append(f"run failed: {e}")
        print(f"error: {e}", file=sys.stderr)
    write_manifest(out_dir, status, notes)
    return 0 if status == "complete" else 1


def _run_baseline(name: str, bcfg: dict, target, seed: int, out_dir: Path) -> None:
    kind = bcfg.get("kind", name)
    if kind == "mh":
        cfg = baselines.MHConfig(
            n_samples=int(bcfg.get("n_samples", 10000)),
            proposal_std=_vec_or_scalar(bcfg.get("proposal_std", 1.0)),
            init=None if bcfg.get("init") is None else np.asarray(bcfg["init"], float),
            seed=int(bcfg.get("seed", seed)),
            burn_in_fraction=float(bcfg.get("burn_in_fraction", 0.2)))
        chain = baselines.metropolis_hastings(target, cfg)
        write_positions_csv(out_dir / f"baseline_{name}.csv",
                            [(len(chain), chain)], chain.shape[1])
    elif kind == "lmc":
        cfg = baselines.LMCConfig(
            a=float(bcfg.get("a", 0.01)), b=float(bcfg.get("b", 1.0)),
            c=float(bcfg.get("c", 0.55)),
            n_iterations=int(bcfg.get("n_iterations", 10000)),
            n_particles=int(bcfg.get("n_particles", 400)),
            seed=int(bcfg.get("seed", seed)))
        final, _ = baselines.langevin_evolve(target, cfg)
        write_positions_csv(out_dir / f"baseline_{name}.csv",
                            [(cfg.n_iterations, final)], final.shape[1])
    else:
        raise ConfigError(f"unknown baseline kind {kind!r} (use 'mh' or 'lmc')")


# ---------------------------------------------------------------------------
# list-targets / metrics / export


def cmd_list_targets(args) -> int:
    rows = []
    for name in sorted(targets.REGISTRY):
        entry = targets.REGISTRY[name]
        rows.append({"id": name, "dim": entry["dim"], "params": entry["params"]})
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        for row in rows:
            params = ", ".join(f"{k}={v!r}" for k, v in row["params"].items()) or "-"
            print(f"{row['id']:<18} dim={row['dim']}  params: {params}")
    return 0


def cmd_metrics(args) -> int:
    a = final_snapshot(args.samples)
    report = {"samples": str(args.samples), "n_x": int(a.shape[0]),
              "mmd2": None, "avg_nll": None}
    if args.reference:
        b = final_snapshot(args.reference)
        report["reference"] = str(args.reference)
        report["n_y"] = int(b.shape[0])
        report["mmd2"] = metrics.mmd_squared(a, b)
    if args.target:
        target = targets.build_target(args.target)
        report["target"] = args.target
        report["avg_nll"], report["n_skipped"] = metrics.avg_nll(a, target)
    if not args.reference and not args.target:
        raise ConfigError("metrics needs --reference and/or --target")
    out = Path(args.out) if args.out else Path(args.samples).parent / "metrics_report.jsonl"
    with open(out, "a") as f:
        f.write(json.dumps(report, sort_keys=True) + "\n")
    shown = {k: v for k, v in report.items() if v is not None}
    print(json.dumps(shown, sort_keys=True))
    return 0


def cmd_export(args) -> int:
    run_dir = Path(args.run)
    if args.what == "final-positions":
        pos = final_snapshot(run_dir / "positions.csv")
        if not args.keep_outside:
            with open(run_dir / "resolved_config.json") as f:
                bounds = json.load(f)["mesh"]["bounds"]
            low = np.array([b[0] for b in bounds])
            high = np.array([b[1] for b in bounds])
            pos = pos[((pos >= low) & (pos <= high)).all(axis=1)]
        write_positions_csv(Path(args.out), [(0, pos)], pos.shape[1])
        print(f"wrote {len(pos)} samples to {args.out}")
        return 0
    raise ConfigError(f"unknown export kind {args.what!r}")


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esampler",
                                     description="Electrostatic particle sampler experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True,
                       help="path to a JSON config, or a bundled config name")
    p_run.add_argument("--out", required=True, help="output directory for run artifacts")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--workers", type=int, default=None,
                       help="cap force-assembly parallelism")
    p_run.add_argument("--snapshot-stride", type=int, default=None)
    p_run.add_argument("--full-scale", action="store_true",
                       help="use the config's full-scale mesh counts (long runs)")
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list-targets", help="catalogue of built-in targets")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")
    p_list.set_defaults(func=cmd_list_targets)

    p_met = sub.add_parser("metrics", help="metrics between sample files / targets")
    p_met.add_argument("samples", help="positions.csv-style sample file")
    p_met.add_argument("--reference", help="second sample file for the discrepancy metric")
    p_met.add_argument("--target", help="built-in target id for the average NLL")
    p_met.add_argument("--out", help="JSONL report path (default: next to the samples)")
    p_met.set_defaults(func=cmd_metrics)

    p_exp = sub.add_parser("export", help="derive files from a finished run")
    p_exp.add_argument("--run", required=True, help="run directory")
    p_exp.add_argument("--what", default="final-positions", choices=["final-positions"])
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--keep-outside", action="store_true",
                       help="do not region-filter the exported samples")
    p_exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return 2
    except EsamplerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
