"""Target-matching benchmark: GA-only versus surrogate-assisted evaluation cost.

Both modes chase the same fixed target shape under identical budgets; the
quantity of interest is how many real evaluations each run needs before its
best match fraction reaches the threshold. Runs are independent seeded
campaigns, so they parallelize across processes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .evolver import MODE_GA, MODE_SURROGATE, Campaign, CampaignConfig
from .fitness import TargetMatchOracle
from .genome import Genome
from .stats import StatsSummary, WelchResult, summarize, welch_t_test

# Benchmark shape used throughout: ten monotone base alleles, z-uniform.
REFERENCE_TARGET_ALLELES = (2, 2, 3, 4, 5, 8, 13, 20, 34, 40)

# Published evaluation counts for this benchmark (mean, sd, n per mode).
# New runs are judged against these via the acceptance window below, and the
# summaries double as a fixture for Welch's t-test.
REFERENCE_SUMMARIES = {
    MODE_GA: StatsSummary(mean=3735.0, sd=3922.0, n=20),
    MODE_SURROGATE: StatsSummary(mean=770.0, sd=215.0, n=20),
}

SURROGATE_MEAN_WINDOW = (400.0, 1500.0)
GA_MIN_MEAN_RATIO = 2.0
SIGNIFICANCE_LEVEL = 0.05

DEFAULT_THRESHOLD = 0.99
DEFAULT_BUDGET = 10_000

_MODE_CODES = {MODE_GA: 0, MODE_SURROGATE: 1}


@dataclass(frozen=True)
class RunResult:
    run: int
    mode: str
    seed: int
    evaluations_to_threshold: int
    best_fitness: float
    reached: bool


@dataclass(frozen=True)
class ExperimentReport:
    threshold: float
    budget: int
    base_seed: int
    runs: tuple[RunResult, ...]
    summaries: dict[str, StatsSummary]
    welch: WelchResult
    criteria: dict[str, bool]

    @property
    def success(self) -> bool:
        return all(self.criteria.values())

    def to_payload(self) -> dict:
        return {
            "threshold": self.threshold,
            "budget": self.budget,
            "baseSeed": self.base_seed,
            "targetGenome": list(REFERENCE_TARGET_ALLELES),
            "runs": [
                {
                    "run": r.run,
                    "mode": r.mode,
                    "seed": r.seed,
                    "evaluationsToThreshold": r.evaluations_to_threshold,
                    "bestFitness": r.best_fitness,
                    "reached": r.reached,
                }
                for r in self.runs
            ],
            "summaries": {
                mode: {"mean": s.mean, "sd": s.sd, "n": s.n}
                for mode, s in self.summaries.items()
            },
            "welch": {
                "t": self.welch.t,
                "df": self.welch.df,
                "pTwoTailed": self.welch.p_two_tailed,
            },
            "reference": {
                mode: {"mean": s.mean, "sd": s.sd, "n": s.n}
                for mode, s in REFERENCE_SUMMARIES.items()
            },
            "criteria": self.criteria,
            "success": self.success,
        }


def run_seed(base_seed: int, mode: str, run_index: int) -> int:
    """Derive one campaign seed; distinct (mode, run) pairs never collide."""
    sequence = np.random.SeedSequence([base_seed, _MODE_CODES[mode], run_index])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def evaluations_to_threshold(campaign: Campaign, threshold: float) -> int:
    """First 1-based archive index whose fitness reaches the threshold.

    The engine only checks its stop condition between steps, so the archive
    can overshoot; the metric is the exact crossing point. Runs that never
    reach the threshold count as the full budget.
    """
    for index, (_, fitness) in enumerate(campaign.archive, start=1):
        if fitness >= threshold:
            return index
    return campaign.config.evaluation_budget


def run_single(
    mode: str,
    run_index: int,
    base_seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    budget: int = DEFAULT_BUDGET,
    target_alleles: tuple[int, ...] = REFERENCE_TARGET_ALLELES,
) -> RunResult:
    seed = run_seed(base_seed, mode, run_index)
    target = Genome(target_alleles)
    config = CampaignConfig(
        evaluation_budget=budget,
        seed=seed,
        mode=mode,
        stop_threshold=threshold,
        target_genome=target,
    )
    campaign = Campaign(config, TargetMatchOracle(target))
    campaign.run()
    crossing = evaluations_to_threshold(campaign, threshold)
    best = campaign.best_real
    return RunResult(
        run=run_index,
        mode=mode,
        seed=seed,
        evaluations_to_threshold=crossing,
        best_fitness=float(best),
        reached=bool(best >= threshold),
    )


def _run_single_star(args: tuple) -> RunResult:
    return run_single(*args)


def run_experiment(
    runs_per_mode: int = 20,
    base_seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    budget: int = DEFAULT_BUDGET,
    jobs: Optional[int] = None,
    progress: Optional[Callable[[RunResult], None]] = None,
) -> ExperimentReport:
    if runs_per_mode < 2:
        raise ValueError("runs_per_mode must be >= 2 for the summary statistics")
    tasks = [
        (mode, index, base_seed, threshold, budget)
        for mode in (MODE_GA, MODE_SURROGATE)
        for index in range(runs_per_mode)
    ]
    workers = jobs if jobs is not None else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        results = []
        for task in tasks:
            result = _run_single_star(task)
            if progress is not None:
                progress(result)
            results.append(result)
    else:
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_run_single_star, tasks):
                if progress is not None:
                    progress(result)
                results.append(result)
    results.sort(key=lambda r: (r.mode, r.run))

    by_mode = {
        mode: [r for r in results if r.mode == mode]
        for mode in (MODE_GA, MODE_SURROGATE)
    }
    summaries = {
        mode: summarize([r.evaluations_to_threshold for r in mode_runs])
        for mode, mode_runs in by_mode.items()
    }
    welch = welch_t_test(summaries[MODE_GA], summaries[MODE_SURROGATE])
    surrogate_mean = summaries[MODE_SURROGATE].mean
    ga_mean = summaries[MODE_GA].mean
    criteria = {
        "allSurrogateRunsReached": all(r.reached for r in by_mode[MODE_SURROGATE]),
        "surrogateMeanInWindow": bool(
            SURROGATE_MEAN_WINDOW[0] <= surrogate_mean <= SURROGATE_MEAN_WINDOW[1]
        ),
        "gaMeanAtLeastDouble": bool(ga_mean >= GA_MIN_MEAN_RATIO * surrogate_mean),
        "differenceSignificant": bool(
            math.isfinite(welch.t) and welch.p_two_tailed <= SIGNIFICANCE_LEVEL
        ),
    }
    return ExperimentReport(
        threshold=threshold,
        budget=budget,
        base_seed=base_seed,
        runs=tuple(results),
        summaries=summaries,
        welch=welch,
        criteria=criteria,
    )


def write_report(report: ExperimentReport, out_dir: Path | str) -> tuple[Path, Path]:
    """Write report.json and runs.csv; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    csv_path = out / "runs.csv"
    json_path.write_text(json.dumps(report.to_payload(), indent=2) + "\n")
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run", "mode", "seed", "evaluationsToThreshold", "bestFitness", "reached"])
        for r in report.runs:
            writer.writerow(
                [r.run, r.mode, r.seed, r.evaluations_to_threshold, f"{r.best_fitness:.6f}", r.reached]
            )
    return json_path, csv_path
