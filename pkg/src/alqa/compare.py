"""Learning-curve comparison: touchpoints, savings, tests, economics.

The workflow mirrors how the curves are meant to be read: find where each
strategy's seed-mean curve first reaches the full-data band, convert the
labeled-count difference into annotator time, and check significance on
(seed x shared round) F2 pairs. Normality of the pair differences gates
the choice between the paired t-test and the Wilcoxon signed-rank test.
"""

from __future__ import annotations

import json
from pathlib import Path

from alqa.economics import (
    DEFAULT_LABEL_SECONDS,
    DEFAULT_N_MODELS,
    DEFAULT_WORKDAY_HOURS,
    economics,
    savings,
)
from alqa.errors import ContractError, DegenerateSampleError
from alqa.orchestrator import LearningCurve, RoundResult, read_curve_rows, seed_mean_curve, touchpoint
from alqa.stats import paired_t, shapiro_wilk, wilcoxon_signed_rank

DEFAULT_EPSILON = 0.005
DEFAULT_ALPHA = 0.05


def load_curves(run_dir: Path) -> list[LearningCurve]:
    """Read per-seed curve CSVs (or a merged curves.csv) from a run directory."""
    run_dir = Path(run_dir)
    paths = sorted(run_dir.glob("curve_seed*.csv")) or [run_dir / "curves.csv"]
    rows = []
    for path in paths:
        if path.exists():
            rows.extend(read_curve_rows(path))
    if not rows:
        raise ContractError(f"no curve data under {run_dir}")
    by_seed: dict[tuple[str, int], list[dict]] = {}
    for row in rows:
        by_seed.setdefault((row["strategy"], row["seed"]), []).append(row)
    curves = []
    for (strategy, seed), seed_rows in sorted(by_seed.items()):
        seed_rows.sort(key=lambda r: r["round"])
        curves.append(
            LearningCurve(
                strategy=strategy,
                seed=seed,
                checkpoints=[
                    RoundResult(r["round"], r["labeled_count"], r["f2"], r["precision"], r["recall"])
                    for r in seed_rows
                ],
            )
        )
    return curves


def _truncate(curves: list[LearningCurve], rounds: set[int]) -> list[LearningCurve]:
    return [
        LearningCurve(
            strategy=c.strategy,
            seed=c.seed,
            checkpoints=[p for p in c.checkpoints if p.round in rounds],
            drained=c.drained,
        )
        for c in curves
    ]


def compare_curves(
    al_curves: list[LearningCurve],
    baseline_curves: list[LearningCurve],
    full_data_f2: float,
    epsilon: float = DEFAULT_EPSILON,
    alpha: float = DEFAULT_ALPHA,
    avg_label_seconds: float = DEFAULT_LABEL_SECONDS,
    workday_hours: float = DEFAULT_WORKDAY_HOURS,
    n_models: int = DEFAULT_N_MODELS,
) -> dict:
    """Full comparison report as a JSON-serializable dict."""
    al_rounds = {p.round for c in al_curves for p in c.checkpoints}
    base_rounds = {p.round for c in baseline_curves for p in c.checkpoints}
    common_rounds = al_rounds & base_rounds
    if not common_rounds:
        raise ContractError("runs share no checkpoint rounds")
    al = _truncate(al_curves, common_rounds)
    base = _truncate(baseline_curves, common_rounds)

    al_mean = seed_mean_curve(al)
    base_mean = seed_mean_curve(base)
    target = full_data_f2 - epsilon
    al_touch = touchpoint([(c, f) for _, c, f, _ in al_mean], target)
    base_touch = touchpoint([(c, f) for _, c, f, _ in base_mean], target)
    saved = savings(al_touch.labeled_count, base_touch.labeled_count)

    al_seeds = {c.seed: c for c in al}
    base_seeds = {c.seed: c for c in base}
    shared_seeds = sorted(al_seeds.keys() & base_seeds.keys())
    if not shared_seeds:
        raise ContractError("runs share no seeds to pair on")
    a, b = [], []
    for seed in shared_seeds:
        for pa, pb in zip(al_seeds[seed].checkpoints, base_seeds[seed].checkpoints):
            a.append(pa.f2)
            b.append(pb.f2)
    mean_diff = sum(a) / len(a) - sum(b) / len(b)

    tests: dict[str, dict | None] = {"shapiro_wilk": None, "paired_t": None,
                                     "wilcoxon_signed_rank": None}
    selected = None
    diffs_degenerate = False
    try:
        d = [x - y for x, y in zip(a, b)]
        sh = shapiro_wilk(d, alpha=alpha)
        tests["shapiro_wilk"] = sh.to_dict()
        normal = not sh.reject_null
    except DegenerateSampleError:
        diffs_degenerate = True
        normal = False
    if not diffs_degenerate:
        try:
            tests["paired_t"] = paired_t(a, b, alpha=alpha).to_dict()
        except DegenerateSampleError:
            pass
        try:
            tests["wilcoxon_signed_rank"] = wilcoxon_signed_rank(a, b, alpha=alpha).to_dict()
        except DegenerateSampleError:
            pass
        if normal and tests["paired_t"] is not None:
            selected = "paired_t"
        elif tests["wilcoxon_signed_rank"] is not None:
            selected = "wilcoxon_signed_rank"

    econ = economics(
        max(saved.images_saved, 0),
        avg_label_seconds=avg_label_seconds,
        workday_hours=workday_hours,
        n_models=n_models,
    )

    return {
        "full_data_f2": full_data_f2,
        "epsilon": epsilon,
        "target_f2": target,
        "rounds_compared": sorted(common_rounds),
        "seeds_compared": shared_seeds,
        "al_touchpoint": {"labeled_count": al_touch.labeled_count, "f2": al_touch.f2,
                          "reached": al_touch.reached},
        "baseline_touchpoint": {"labeled_count": base_touch.labeled_count, "f2": base_touch.f2,
                                "reached": base_touch.reached},
        "savings": saved.to_dict(),
        "mean_f2_difference": mean_diff,
        "paired_samples": len(a),
        "tests": tests,
        "selected_test": selected,
        "differences_degenerate": diffs_degenerate,
        "economics": econ.to_dict(),
        "al_mean_curve": [
            {"round": r, "labeled_count": c, "f2_mean": m, "f2_std": s} for r, c, m, s in al_mean
        ],
        "baseline_mean_curve": [
            {"round": r, "labeled_count": c, "f2_mean": m, "f2_std": s}
            for r, c, m, s in base_mean
        ],
    }


def compare_runs(al_dir: Path, baseline_dir: Path, full_data_f2: float, **kwargs) -> dict:
    report = compare_curves(load_curves(al_dir), load_curves(baseline_dir), full_data_f2, **kwargs)
    report["al_run"] = str(al_dir)
    report["baseline_run"] = str(baseline_dir)
    return report


def write_report(report: dict, path: Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
