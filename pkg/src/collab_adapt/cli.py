"""Command-line experiment runner.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from .datagen import make_domain_pair, read_csv, write_csv
from .errors import AdaptError, InvalidConfig, InvalidInput
from .evaluation import accuracy
from .models import LinearSoftmaxModel, forward, oracle_predict
from .pseudo import FusionConfig, match_or_conf
from .trainer import Variant, prepare, run_experiment, stream_seed

log = logging.getLogger("collab_adapt")

SWEEP_ALIASES = {"pace": "curriculum.pace"}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _load_config(args) -> dict:
    sets = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        sets.append(f"seed={args.seed}")
    return config_mod.load(args.config, sets)


def _datasets(cfg: dict):
    src, tgt = cfg["data.source_csv"], cfg["data.target_csv"]
    if not src and not tgt:
        return None
    if not (src and tgt):
        raise InvalidConfig("data.source_csv and data.target_csv must be given together")
    k = cfg["data.num_classes"]
    return read_csv(src, k), read_csv(tgt, k)


def _check_writable(paths, force: bool) -> None:
    for p in paths:
        if p.exists() and not force:
            raise FileExistsError(f"{p} exists; pass --force to overwrite")


def _write_jsonl(path, rows) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(_dumps(row) + "\n")


def _read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "source.csv", out / "target.csv"]
    _check_writable(paths, args.force)
    setup = config_mod.experiment_setup(cfg)
    source, target = make_domain_pair(setup.domain, setup.shift, stream_seed(cfg["seed"], "data"))
    write_csv(source, paths[0])
    write_csv(target, paths[1])
    print(_dumps({"source": str(paths[0]), "target": str(paths[1]),
                  "rows": len(source) + len(target)}))
    return 0


def cmd_train_source(args) -> int:
    cfg = _load_config(args)
    setup = config_mod.experiment_setup(cfg)
    source, target, teacher, _, _ = prepare(setup, cfg["seed"], _datasets(cfg))
    with open(args.out, "w") as fh:
        json.dump(teacher.to_json(), fh)
    if args.predictions:
        probs = forward(teacher, target.features)
        _write_jsonl(args.predictions, ({"id": i, "p": p.tolist()} for i, p in enumerate(probs)))
    print(_dumps({
        "source_accuracy": accuracy(lambda x: forward(teacher, x), source),
        "target_accuracy": accuracy(lambda x: forward(teacher, x), target),
    }))
    return 0


def cmd_zero_shot_eval(args) -> int:
    cfg = _load_config(args)
    setup = config_mod.experiment_setup(cfg)
    _, target, _, _, oracle = prepare(setup, cfg["seed"], _datasets(cfg))
    probs = oracle_predict(oracle, target.features)
    if args.out:
        _write_jsonl(args.out, ({"id": i, "p": p.tolist()} for i, p in enumerate(probs)))
    if args.oracle_out:
        with open(args.oracle_out, "w") as fh:
            json.dump(oracle.to_json(), fh)
    print(_dumps({"accuracy": accuracy(lambda x: oracle_predict(oracle, x), target)}))
    return 0


def cmd_fuse(args) -> int:
    cfg = _load_config(args)
    fusion = FusionConfig(
        cfg["fusion.psi_s"] if args.psi_s is None else args.psi_s,
        cfg["fusion.psi_c"] if args.psi_c is None else args.psi_c,
    )
    teacher_rows = {row["id"]: row["p"] for row in _read_jsonl(args.teacher)}
    oracle_rows = {row["id"]: row["p"] for row in _read_jsonl(args.oracle)}
    if teacher_rows.keys() != oracle_rows.keys():
        raise InvalidInput("teacher and oracle files cover different ids")
    out = []
    for sid in teacher_rows:
        d = match_or_conf(teacher_rows[sid], oracle_rows[sid], fusion)
        out.append({"id": sid, "label": d.label, "source": d.source.value,
                    "cs": d.teacher_conf, "cc": d.oracle_conf})
    _write_jsonl(args.out, out)
    return 0


def _summary(result, cfg: dict) -> dict:
    b = result.bounds
    return {"lb": b.lb, "method": b.method, "ub": b.ub, "cg": b.cg,
            "seed": result.seed, "variant": result.variant.value, "config": cfg}


def cmd_adapt(args) -> int:
    cfg = _load_config(args)
    if args.variant is not None:
        cfg["variant"] = config_mod.parse_value("variant", args.variant)
    setup = config_mod.experiment_setup(cfg)
    result = run_experiment(setup, Variant(cfg["variant"]), cfg["seed"], _datasets(cfg))
    if args.metrics and result.traces:
        _write_jsonl(args.metrics, (dataclasses.asdict(t) for t in result.traces))
    summary = _summary(result, cfg)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(_dumps(summary) + "\n")
    print(_dumps(summary))
    return 0


def parse_seeds(text: str) -> list[int]:
    """``0..9`` (inclusive range) or a comma list ``0,3,5``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            seeds = list(range(int(lo), int(hi) + 1))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InvalidConfig(f"bad seed list {text!r}") from None
    if not seeds:
        raise InvalidConfig("empty seed list")
    return seeds


def _sweep_job(job) -> float:
    cfg, seed = job
    setup = config_mod.experiment_setup(cfg)
    return run_experiment(setup, Variant(cfg["variant"]), seed, _datasets(cfg)).bounds.method


def sweep(cfg: dict, param: str, values: list, seeds: list[int], jobs: int = 1) -> list[dict]:
    key = SWEEP_ALIASES.get(param, param)
    if key not in config_mod.SCHEMA:
        raise InvalidConfig(f"unknown sweep parameter {param!r}")
    grid = []
    for raw in values:
        run_cfg = dict(cfg)
        run_cfg[key] = config_mod.parse_value(key, raw)
        config_mod.experiment_setup(run_cfg)  # validate before launching
        for seed in seeds:
            grid.append((dict(run_cfg, seed=seed), seed))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            accs = list(pool.map(_sweep_job, grid))
    else:
        accs = [_sweep_job(job) for job in grid]
    rows = []
    for i, raw in enumerate(values):
        a = np.array(accs[i * len(seeds):(i + 1) * len(seeds)])
        rows.append({
            "param": key,
            "value": grid[i * len(seeds)][0][key],
            "mean_accuracy": float(a.mean()),
            "std": float(a.std(ddof=1)) if len(a) > 1 else 0.0,
            "n_seeds": len(a),
        })
    return rows


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.variant is not None:
        cfg["variant"] = config_mod.parse_value("variant", args.variant)
    rows = sweep(cfg, args.param, args.values.split(","), parse_seeds(args.seeds), args.jobs)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(
            fh, ["param", "value", "mean_accuracy", "std", "n_seeds"], lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collab-adapt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="dotted-key config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        if seed:
            p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("gen-data", help="write source.csv and target.csv"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_gen_data)

    p = common(sub.add_parser("train-source", help="train the source teacher"))
    p.add_argument("--out", required=True, help="model checkpoint JSON")
    p.add_argument("--predictions", help="write teacher target predictions as JSONL")
    p.set_defaults(func=cmd_train_source)

    p = common(sub.add_parser("zero-shot-eval", help="evaluate the template oracle"))
    p.add_argument("--out", help="write oracle target predictions as JSONL")
    p.add_argument("--oracle-out", help="write the oracle checkpoint JSON")
    p.set_defaults(func=cmd_zero_shot_eval)

    p = common(sub.add_parser("fuse", help="MatchOrConf over two prediction files"), seed=False)
    p.add_argument("--teacher", required=True)
    p.add_argument("--oracle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--psi-s", type=float)
    p.add_argument("--psi-c", type=float)
    p.set_defaults(func=cmd_fuse)

    variants = [v.value for v in Variant]
    p = common(sub.add_parser("adapt", help="run one adaptation"))
    p.add_argument("--variant", choices=variants)
    p.add_argument("--metrics", help="per-epoch trace JSONL")
    p.add_argument("--summary", help="summary JSON")
    p.set_defaults(func=cmd_adapt)

    p = common(sub.add_parser("sweep", help="grid over one parameter and several seeds"), seed=False)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", default="0..9")
    p.add_argument("--variant", choices=variants)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AdaptError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
