"""Command-line driver for every pipeline stage.

Exit codes: 0 success, 1 contract errors, 2 usage errors. A human-oracle
run that hits its label timeout exits 0 with a "suspended" notice; rerun
the same command to resume from the last completed round.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from alqa import compare as compare_mod
from alqa import dataset_io
from alqa.catalog import load_catalog
from alqa.classifier import derive_config, evaluate, save_checkpoint, train, write_history_csv
from alqa.errors import ConflictError, ContractError, OracleTimeoutError
from alqa.orchestrator import (
    ExperimentConfig,
    determine_baseline_rounds,
    make_oracle,
    read_curve_rows,
    run_experiment,
    seed_mean_curve,
)
from alqa.preprocess import preprocess
from alqa.renderer import generate_dataset, render
from alqa.splits import split_dataset
from alqa.types import AnnotationLabel, Perspective


def _run_root() -> Path:
    return Path(os.environ.get("ALQA_HOME", ".")) / "runs"


def _load_config(path: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def _prepare_pool(data_dir: str, config: ExperimentConfig):
    records = dataset_io.load_records(data_dir, perspective=config.perspective)
    if not records:
        raise ContractError(f"no {config.perspective.value} records under {data_dir}")
    records = [preprocess(r) for r in records]
    return split_dataset(records, config.train_count, config.val_fraction, config.split_seed)


def _check_manifest(run_dir: Path, run_id: str, config: ExperimentConfig, data_hash: str) -> None:
    """Create the run manifest, or verify it matches on resume."""
    path = run_dir / "manifest.json"
    snapshot = {
        "run_id": run_id,
        "config": config.to_dict(),
        "dataset_hash": data_hash,
        "artifacts": {"curves": "curves.csv"},
    }
    if path.exists():
        existing = json.loads(path.read_text())
        if existing["config"] != snapshot["config"]:
            raise ContractError(f"{path} holds a different config; refusing to resume")
        if existing["dataset_hash"] != data_hash:
            raise ContractError("dataset hash changed since the run was created")
        return
    run_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(snapshot, indent=2))


def _merge_curves(run_dir: Path) -> None:
    rows = []
    for path in sorted(run_dir.glob("curve_seed*.csv")):
        rows.extend(read_curve_rows(path))
    rows.sort(key=lambda r: (r["strategy"], r["seed"], r["round"]))
    with open(run_dir / "curves.csv", "w") as f:
        f.write("strategy,seed,round,labeled_count,f2,precision,recall\n")
        for r in rows:
            prec = "" if r["precision"] is None else f"{r['precision']:.6f}"
            rec = "" if r["recall"] is None else f"{r['recall']:.6f}"
            f.write(
                f"{r['strategy']},{r['seed']},{r['round']},{r['labeled_count']},"
                f"{r['f2']:.6f},{prec},{rec}\n"
            )


# -- subcommands -----------------------------------------------------------


def cmd_generate_data(args) -> int:
    catalog = load_catalog(args.catalog)
    if args.perspectives == "all":
        perspectives = list(Perspective)
    else:
        perspectives = [Perspective(p.strip()) for p in args.perspectives.split(",")]
    configs = generate_dataset(args.n, args.defect_fraction, args.seed, catalog)
    records = []
    for persp in perspectives:
        for cfg in configs:
            records.append(render(cfg, persp, catalog, args.resolution))
    manifest = dataset_io.write_dataset(records, Path(args.out))
    defective = sum(r.ground_truth.value == "defective" for r in records)
    print(
        f"wrote {len(records)} images ({defective} defective) across "
        f"{len(perspectives)} perspective(s) to {args.out}"
    )
    print(f"manifest: {manifest}")
    return 0


def cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seeds:
        config.seeds = [int(s) for s in args.seeds.split(",")]
    run_id = args.run_id or (Path(args.out).name if args.out else "run")
    run_dir = Path(args.out) if args.out else _run_root() / run_id
    run_dir.mkdir(parents=True, exist_ok=True)

    if args.oracle == "simulated":
        config.oracle = {"kind": "simulated"}
    elif args.oracle == "human":
        if not args.service_url:
            raise ContractError("--oracle human requires --service-url")
        config.oracle = {
            "kind": "http",
            "base_url": args.service_url,
            "run_id": run_id,
            "poll_interval_s": args.poll_interval,
            "timeout_s": args.oracle_timeout,
        }

    data_hash = dataset_io.dataset_hash(args.data)
    _check_manifest(run_dir, run_id, config, data_hash)
    pool = _prepare_pool(args.data, config)

    on_checkpoint = None
    if config.oracle.get("kind") == "http":
        from alqa.service.client import ServiceClient

        client = ServiceClient(config.oracle["base_url"])
        try:
            client.create_run(
                run_id=run_id,
                perspective=config.perspective.value,
                config=config.to_dict(),
                train_ids=sorted(pool.train_ids),
                holdout_ids=sorted(pool.validation_ids | pool.test_ids),
                dataset_hash=data_hash,
            )
        except ConflictError:
            pass  # resuming an already-registered run

        def on_checkpoint(seed, result):
            client.post_curve_point(
                run_id,
                {
                    "seed": seed,
                    "round": result.round,
                    "labeled_count": result.labeled_count,
                    "f2": result.f2,
                    "precision": result.precision,
                    "recall": result.recall,
                },
            )

    if args.parallel > 1 and len(config.seeds) > 1:
        procs = []
        env = dict(
            os.environ,
            OPENBLAS_NUM_THREADS="1",
            OMP_NUM_THREADS="1",
            MKL_NUM_THREADS="1",
            NUMBA_NUM_THREADS="1",
        )
        pending = list(config.seeds)
        while pending or procs:
            while pending and len(procs) < args.parallel:
                seed = pending.pop(0)
                cmd = [
                    sys.executable, "-m", "alqa.cli", "run",
                    "--config", args.config, "--data", args.data,
                    "--out", str(run_dir), "--run-id", run_id,
                    "--seeds", str(seed), "--oracle", args.oracle,
                ]
                if args.service_url:
                    cmd += ["--service-url", args.service_url]
                procs.append(subprocess.Popen(cmd, env=env))
            done = [p for p in procs if p.poll() is not None]
            for p in done:
                procs.remove(p)
                if p.returncode != 0:
                    for q in procs:
                        q.wait()
                    raise ContractError(f"seed worker exited with {p.returncode}")
            if procs:
                procs[0].wait()
    else:
        try:
            run_experiment(config, pool, run_dir, on_checkpoint=on_checkpoint)
        except OracleTimeoutError as exc:
            print(f"run suspended: {exc}")
            print(f"state saved under {run_dir}; rerun the same command to resume")
            return 0

    if not args.seeds:
        _merge_curves(run_dir)
        for r, count, mean, std in seed_mean_curve(compare_mod.load_curves(run_dir)):
            print(f"round {r}: labeled={count} f2={mean:.4f} +/- {std:.4f}")
    print(f"curves written under {run_dir}")
    return 0


def cmd_train_full(args) -> int:
    config = _load_config(args.config)
    out_dir = Path(args.out) if args.out else _run_root() / "full"
    out_dir.mkdir(parents=True, exist_ok=True)
    pool = _prepare_pool(args.data, config)
    oracle = make_oracle(config.oracle, pool)
    universe = sorted(pool.train_ids)
    answers = oracle.label(universe)

    per_seed = {}
    for seed in config.seeds:
        labeled = [
            replace(pool.records[i], ground_truth=ann.to_label())
            for i, ann in sorted(answers.items())
            if ann is not AnnotationLabel.AMBIGUOUS
        ]
        model = train(labeled, pool.record_list(pool.validation_ids),
                      derive_config(config.model, seed))
        report = evaluate(model, pool.record_list(pool.test_ids))
        save_checkpoint(model, out_dir / f"full_seed{seed}.npz")
        write_history_csv(model, out_dir / f"full_seed{seed}_log.csv")
        per_seed[str(seed)] = {
            "f2": report.f2,
            "precision": report.precision,
            "recall": report.recall,
            "labeled_count": len(labeled),
            "best_epoch": model.best_epoch,
        }
        print(f"seed {seed}: full-data f2={report.f2:.4f}")

    f2s = [v["f2"] for v in per_seed.values()]
    doc = {
        "perspective": config.perspective.value,
        "per_seed": per_seed,
        "mean_f2": float(np.mean(f2s)),
        "std_f2": float(np.std(f2s)),
    }
    (out_dir / "full_data.json").write_text(json.dumps(doc, indent=2))
    print(json.dumps({"mean_f2": doc["mean_f2"], "std_f2": doc["std_f2"]}))
    return 0


def cmd_baseline_rounds(args) -> int:
    curves = compare_mod.load_curves(Path(args.run))
    result = determine_baseline_rounds(curves, args.full_f2, args.epsilon)
    print(json.dumps({"rounds": result.rounds, "reached": result.reached}))
    return 0


def cmd_compare(args) -> int:
    report = compare_mod.compare_runs(
        Path(args.al),
        Path(args.baseline),
        args.full_f2,
        epsilon=args.epsilon,
        alpha=args.alpha,
        avg_label_seconds=args.label_seconds,
        workday_hours=args.workday_hours,
        n_models=args.n_models,
    )
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"report written to {args.out}")
    else:
        print(text)
    return 0


def cmd_report(args) -> int:
    rows = []
    for run in args.run:
        curves = compare_mod.load_curves(Path(run))
        strategy = curves[0].strategy
        for r, count, mean, std in seed_mean_curve(curves):
            rows.append((run, strategy, r, count, mean, std))
    out = args.out or "-"
    lines = ["run,strategy,round,labeled_count,f2_mean,f2_std"]
    lines += [f"{r[0]},{r[1]},{r[2]},{r[3]},{r[4]:.6f},{r[5]:.6f}" for r in rows]
    text = "\n".join(lines) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        print(f"summary written to {out}")

    if args.svg:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4.5))
        for run in args.run:
            curves = compare_mod.load_curves(Path(run))
            mean = seed_mean_curve(curves)
            xs = [c for _, c, _, _ in mean]
            ys = [m for _, _, m, _ in mean]
            sd = [s for _, _, _, s in mean]
            label = f"{Path(run).name} ({curves[0].strategy})"
            ax.plot(xs, ys, marker="o", label=label)
            ax.fill_between(xs, [y - s for y, s in zip(ys, sd)],
                            [y + s for y, s in zip(ys, sd)], alpha=0.2)
        ax.set_xlabel("labeled training images")
        ax.set_ylabel("test F2")
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(args.svg, format="svg")
        print(f"plot written to {args.svg}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from alqa.service.api import create_app
    from alqa.service.store import Store

    store = Store(Path(args.store))
    token = args.token or os.environ.get("ALQA_TOKEN")
    app = create_app(store, data_dir=Path(args.data) if args.data else None, token=token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="render a synthetic labeled dataset")
    p.add_argument("--n", type=int, required=True, help="number of vehicle configurations")
    p.add_argument("--defect-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--perspectives", default="all",
                   help="comma list of perspectives, or 'all'")
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--catalog", default=None, help="catalog JSON override")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("run", help="run an acquisition experiment")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", default=None, help="run directory (default ALQA_HOME/runs/<id>)")
    p.add_argument("--run-id", default=None)
    p.add_argument("--oracle", choices=["config", "simulated", "human"], default="config")
    p.add_argument("--service-url", default=None)
    p.add_argument("--poll-interval", type=float, default=2.0)
    p.add_argument("--oracle-timeout", type=float, default=None)
    p.add_argument("--parallel", type=int, default=1, help="seed workers to run in parallel")
    p.add_argument("--seeds", default=None, help="comma list overriding config seeds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train-full", help="train the full-data upper bound per seed")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train_full)

    p = sub.add_parser("baseline-rounds", help="rounds until the baseline reaches the bound")
    p.add_argument("--run", required=True, help="baseline run directory")
    p.add_argument("--full-f2", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=compare_mod.DEFAULT_EPSILON)
    p.set_defaults(func=cmd_baseline_rounds)

    p = sub.add_parser("compare", help="compare an AL run against a baseline run")
    p.add_argument("--al", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--full-f2", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=compare_mod.DEFAULT_EPSILON)
    p.add_argument("--alpha", type=float, default=compare_mod.DEFAULT_ALPHA)
    p.add_argument("--label-seconds", type=float, default=31.0)
    p.add_argument("--workday-hours", type=float, default=8.0)
    p.add_argument("--n-models", type=int, default=18)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="per-round mean/std summary and optional SVG plot")
    p.add_argument("--run", nargs="+", required=True)
    p.add_argument("--out", default=None, help="CSV path ('-' for stdout)")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the labeling/defect HTTP service")
    p.add_argument("--store", required=True, help="service state directory")
    p.add_argument("--data", default=None, help="dataset directory for image serving")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
