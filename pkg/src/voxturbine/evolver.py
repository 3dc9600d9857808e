"""Steady-state evolutionary campaign engine.

One campaign owns a population of 20 individuals, an append-only archive of
every real fitness evaluation, a seeded random stream, and optionally an MLP
surrogate. Two reproduction regimes share the same tournament machinery:

* ``ga`` mode: every offspring is evaluated on the real oracle (20 real
  evaluations per generation of 20 reproduction events).
* ``surrogate`` mode: offspring receive predicted fitness; per generation only
  the fittest unevaluated member and one uniformly random other unevaluated
  member are measured for real (2 real evaluations per generation), then the
  model is retrained on the full archive and remaining predictions refreshed.

The surrogate is trained on rank-calibrated targets rather than raw fitness:
each archived score is replaced by its mid-rank position in the archive's
empirical distribution, squeezed into (0, 1). Near convergence the archive is
dense with nearly identical scores, and raw targets would all sit in the flat
tail of the output sigmoid; rank calibration spreads exactly those scores
across the sigmoid's responsive range, which is what lets the model keep
ordering candidate mutants late in a campaign. Raw model outputs are mapped
back through the archive's inverse quantile curve, so predicted fitness is
always expressed in real units and stays comparable with measured members
inside one tournament. Both maps are monotone: selection order is unchanged.

All stochastic choices draw from the campaign's single generator in a fixed
order, so a (seed, config, pure oracle) triple replays to bit-identical event
streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .fitness import FitnessOracle
from .genome import Genome, MutationConfig, genome_hash, mutate, random_genome, scale_for_model
from .surrogate import MLPSurrogate

MODE_GA = "ga"
MODE_SURROGATE = "surrogate"

PROVENANCE_REAL = "real"
PROVENANCE_PREDICTED = "predicted"

# fitness_scale resolution when the config leaves it unset, by oracle kind:
# recorded in campaign payloads as the nominal full-scale of the oracle's
# units (match fraction tops out at 1; rpm-like scores need headroom). Rank
# calibration makes training unit-free, so the scale is provenance only.
DEFAULT_FITNESS_SCALES = {"target": 1.0, "proxy": 10000.0, "manual": 2000.0}

# Rank-calibrated targets are squeezed into [RANK_SQUEEZE, 1 - RANK_SQUEEZE]
# so no target asks the logistic output for an unbounded pre-activation.
RANK_SQUEEZE = 0.02

EventSink = Callable[[str, dict], None]


def rank_calibration(y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Training targets and inverse map for an archive of fitness values.

    Returns ``(targets, knots, values)``: per-sample targets equal to each
    value's squeezed mid-rank, plus the strictly increasing knot/value arrays
    for reading sigmoid outputs back into fitness units via interpolation.
    Ties share one mid-rank, so equal scores always get equal targets.
    """
    values, counts = np.unique(y, return_counts=True)
    cumulative = np.cumsum(counts)
    mid_rank = (cumulative - 0.5 * counts) / len(y)
    knots = RANK_SQUEEZE + (1.0 - 2.0 * RANK_SQUEEZE) * mid_rank
    targets = knots[np.searchsorted(values, y)]
    return targets, knots, values


@dataclass(frozen=True)
class Individual:
    genome: Genome
    fitness: float
    provenance: str  # PROVENANCE_REAL | PROVENANCE_PREDICTED

    @property
    def evaluated(self) -> bool:
        return self.provenance == PROVENANCE_REAL


@dataclass(frozen=True)
class CampaignConfig:
    evaluation_budget: int
    seed: int = 0
    population_size: int = 20
    mutation: MutationConfig = field(default_factory=MutationConfig)
    z_mode: bool = False
    mode: str = MODE_GA
    warmup_generations: int = 0
    fitness_scale: Optional[float] = None
    stop_threshold: Optional[float] = None
    target_genome: Optional[Genome] = None

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if self.evaluation_budget < self.population_size:
            raise ValueError("evaluation_budget must cover the initial population")
        if self.mode not in (MODE_GA, MODE_SURROGATE):
            raise ValueError(f"mode must be '{MODE_GA}' or '{MODE_SURROGATE}', got {self.mode!r}")
        if self.warmup_generations < 0:
            raise ValueError("warmup_generations must be >= 0")
        if self.fitness_scale is not None and self.fitness_scale <= 0:
            raise ValueError("fitness_scale must be positive when set")
        if self.stop_threshold is not None and self.stop_threshold <= 0:
            raise ValueError("stop_threshold must be positive when set")
        if self.target_genome is not None and self.target_genome.z_mode != self.z_mode:
            raise ValueError("target genome z-mode must match campaign z-mode")

    def to_payload(self) -> dict:
        return {
            "populationSize": self.population_size,
            "mutationRate": self.mutation.rate,
            "maxMutationStep": self.mutation.max_step,
            "zMode": self.z_mode,
            "mode": self.mode,
            "warmupGenerations": self.warmup_generations,
            "evaluationBudget": self.evaluation_budget,
            "seed": self.seed,
            "fitnessScale": self.fitness_scale,
            "stopThreshold": self.stop_threshold,
            "targetGenome": genome_payload(self.target_genome) if self.target_genome else None,
        }


def genome_payload(genome: Genome) -> dict:
    return {"base": list(genome.base), "z": list(genome.z) if genome.z_mode else None}


def genome_from_payload(payload) -> Genome:
    if isinstance(payload, dict):
        return Genome(tuple(payload["base"]), tuple(payload["z"]) if payload.get("z") else None)
    return Genome(tuple(payload))


def config_from_payload(payload: dict) -> CampaignConfig:
    """Build a config from the JSON wire shape used by the CLI and service."""
    known = {
        "populationSize", "mutationRate", "maxMutationStep", "zMode", "mode",
        "warmupGenerations", "evaluationBudget", "seed", "fitnessScale",
        "stopThreshold", "targetGenome",
    }
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "evaluationBudget" not in payload:
        raise ValueError("config requires evaluationBudget")
    target = payload.get("targetGenome")
    return CampaignConfig(
        evaluation_budget=int(payload["evaluationBudget"]),
        seed=int(payload.get("seed", 0)),
        population_size=int(payload.get("populationSize", 20)),
        mutation=MutationConfig(
            rate=float(payload.get("mutationRate", 0.25)),
            max_step=int(payload.get("maxMutationStep", 10)),
        ),
        z_mode=bool(payload.get("zMode", False)),
        mode=str(payload.get("mode", MODE_GA)),
        warmup_generations=int(payload.get("warmupGenerations", 0)),
        fitness_scale=None if payload.get("fitnessScale") is None else float(payload["fitnessScale"]),
        stop_threshold=None if payload.get("stopThreshold") is None else float(payload["stopThreshold"]),
        target_genome=genome_from_payload(target) if target is not None else None,
    )


class Campaign:
    """A single evolutionary campaign bound to one oracle.

    The engine is synchronous and single-threaded: callers either drive it
    step by step (``initialize`` / ``ga_step`` / ``surrogate_generation``) or
    hand over control to ``run``. Event emission, archive appends, and history
    are all serialized in that one control flow.
    """

    def __init__(
        self,
        config: CampaignConfig,
        oracle: FitnessOracle,
        event_sink: Optional[EventSink] = None,
    ) -> None:
        self.config = config
        self.oracle = oracle
        self.rng = np.random.default_rng(config.seed)
        self._sink = event_sink
        self.population: list[Individual] = []
        self.archive: list[tuple[Genome, float]] = []
        self._archive_inputs: list[np.ndarray] = []
        self.model: Optional[MLPSurrogate] = None
        self.generation = 0
        self.reproductions = 0
        self.initialized = False
        self.finished = False
        self.finish_reason: Optional[str] = None
        self._prediction_map: Optional[tuple[np.ndarray, np.ndarray]] = None
        scale = config.fitness_scale
        if scale is None:
            scale = DEFAULT_FITNESS_SCALES.get(oracle.kind, 2000.0)
        self.fitness_scale = float(scale)
        if config.stop_threshold is not None:
            self.stop_threshold: Optional[float] = config.stop_threshold
        else:
            # Match fractions cannot exceed 1.0, so a perfect match always stops.
            self.stop_threshold = 1.0 if oracle.kind == "target" else None

    # -- accessors ---------------------------------------------------------

    @property
    def evaluations(self) -> int:
        return len(self.archive)

    @property
    def best_real(self) -> Optional[float]:
        if not self.archive:
            return None
        return max(f for _, f in self.archive)

    def history_series(self) -> list[tuple[int, float]]:
        """Best real fitness against cumulative evaluations.

        The initial population collapses to a single point at
        x = population_size; every later real evaluation contributes one
        point. The fitness column is non-decreasing by construction.
        """
        size = self.config.population_size
        if len(self.archive) < size:
            return []
        best = -np.inf
        series: list[tuple[int, float]] = []
        for index, (_, fitness) in enumerate(self.archive, start=1):
            best = max(best, fitness)
            if index >= size:
                series.append((index, best))
        return series

    def per_evaluation_series(self) -> list[tuple[int, float]]:
        """Best-so-far after every single real evaluation, x = 1..n."""
        best = -np.inf
        series = []
        for index, (_, fitness) in enumerate(self.archive, start=1):
            best = max(best, fitness)
            series.append((index, best))
        return series

    # -- internals ---------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> None:
        if self._sink is not None:
            self._sink(kind, payload)

    def _evaluate(self, genomes: list[Genome]) -> list[float]:
        values = self.oracle.evaluate_many(genomes)
        for genome, fitness in zip(genomes, values):
            self.archive.append((genome, float(fitness)))
            self._archive_inputs.append(scale_for_model(genome))
            self._emit(
                "individual_evaluated",
                {
                    "index": len(self.archive) - 1,
                    "genome": genome_payload(genome),
                    "genomeHash": genome_hash(genome),
                    "fitness": float(fitness),
                },
            )
        return [float(v) for v in values]

    def _archive_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.vstack(self._archive_inputs)
        y = np.array([f for _, f in self.archive])
        return X, y

    def _retrain(self, initial: bool = False) -> None:
        X, y = self._archive_arrays()
        targets, knots, values = rank_calibration(y)
        self._prediction_map = (knots, values)
        if initial:
            self.model.fit(X, targets)
        else:
            self.model.partial_fit(X, targets)
        self._emit("model_retrained", {"loss": self.model.loss(X, targets)})

    def _read_predictions(self, raw: np.ndarray) -> np.ndarray:
        """Interpolate sigmoid outputs back into fitness units.

        The knots are the squeezed mid-ranks of every achieved fitness value,
        so this is the archive's inverse quantile curve; outputs beyond the
        extreme knots clamp to the worst and best achieved values.
        """
        knots, values = self._prediction_map
        return np.interp(raw, knots, values)

    def _draw_pair(self) -> tuple[int, int]:
        i, j = self.rng.choice(len(self.population), size=2, replace=False)
        return int(i), int(j)

    def _make_offspring(self) -> Genome:
        i, j = self._draw_pair()
        first, second = self.population[i], self.population[j]
        parent = first if first.fitness >= second.fitness else second
        return mutate(parent.genome, self.config.mutation, self.rng)

    def _replace_into_population(self, child: Individual) -> None:
        a, b = self._draw_pair()
        # Lower fitness loses; on a tie the second-drawn member is replaced.
        first, second = self.population[a], self.population[b]
        loser = b if second.fitness <= first.fitness else a
        self.population[loser] = child

    def _advance_generation(self) -> None:
        self.generation += 1
        self._emit(
            "generation_advanced",
            {"generation": self.generation, "evaluations": self.evaluations},
        )

    # -- campaign steps ----------------------------------------------------

    def initialize(self) -> None:
        """Evaluate a fresh random population; train the model in surrogate mode."""
        if self.initialized:
            raise RuntimeError("campaign already initialized")
        self._emit(
            "campaign_created",
            {"config": self.config.to_payload(), "oracle": self.oracle.kind},
        )
        genomes = [
            random_genome(self.rng, self.config.z_mode)
            for _ in range(self.config.population_size)
        ]
        values = self._evaluate(genomes)
        self.population = [
            Individual(g, f, PROVENANCE_REAL) for g, f in zip(genomes, values)
        ]
        if self.config.mode == MODE_SURROGATE:
            # Scale 1.0: the model learns rank-calibrated targets, and
            # _read_predictions restores real fitness units afterwards.
            self.model = MLPSurrogate(
                input_size=15 if self.config.z_mode else 10,
                random_state=self.rng,
            )
            self._retrain(initial=True)
        self.initialized = True

    def ga_step(self) -> None:
        """One steady-state reproduction event with a real evaluation."""
        if not self.initialized:
            raise RuntimeError("campaign not initialized")
        child_genome = self._make_offspring()
        fitness = self._evaluate([child_genome])[0]
        self._replace_into_population(Individual(child_genome, fitness, PROVENANCE_REAL))
        self.reproductions += 1
        if self.reproductions % self.config.population_size == 0:
            self._advance_generation()

    def surrogate_generation(self) -> None:
        """One surrogate generation: 20 predicted reproductions, 2 real checks."""
        if self.model is None:
            raise RuntimeError("surrogate generation requires a trained model")
        for _ in range(self.config.population_size):
            child_genome = self._make_offspring()
            raw = self.model.predict_one(scale_for_model(child_genome))
            predicted = float(self._read_predictions(np.asarray([raw]))[0])
            self._replace_into_population(
                Individual(child_genome, predicted, PROVENANCE_PREDICTED)
            )

        unevaluated = [k for k, member in enumerate(self.population) if not member.evaluated]
        remaining_budget = self.config.evaluation_budget - self.evaluations
        chosen: list[int] = []
        if unevaluated and remaining_budget > 0:
            # max() keeps the first (lowest index) member on predicted-fitness ties.
            fittest = max(unevaluated, key=lambda k: self.population[k].fitness)
            chosen.append(fittest)
            others = [k for k in unevaluated if k != fittest]
            if others and remaining_budget > 1:
                chosen.append(others[int(self.rng.integers(len(others)))])
        if chosen:
            values = self._evaluate([self.population[k].genome for k in chosen])
            for k, fitness in zip(chosen, values):
                self.population[k] = Individual(
                    self.population[k].genome, fitness, PROVENANCE_REAL
                )
            self._retrain()
            self._repredict()
        self.reproductions += self.config.population_size
        self._advance_generation()

    def _repredict(self) -> None:
        indices = [k for k, member in enumerate(self.population) if not member.evaluated]
        if not indices:
            return
        X = np.vstack([scale_for_model(self.population[k].genome) for k in indices])
        predictions = self._read_predictions(self.model.predict(X))
        for k, value in zip(indices, predictions):
            self.population[k] = replace(self.population[k], fitness=float(value))

    def _stop_reason(self) -> Optional[str]:
        if self.evaluations >= self.config.evaluation_budget:
            return "budget"
        if self.stop_threshold is not None:
            best = self.best_real
            if best is not None and best >= self.stop_threshold:
                return "threshold"
        return None

    def run(self) -> "Campaign":
        """Drive the campaign to its budget or threshold and emit the finish event."""
        if self.finished:
            return self
        if not self.initialized:
            self.initialize()
        warmup_events = self.config.warmup_generations * self.config.population_size
        while True:
            reason = self._stop_reason()
            if reason is not None:
                break
            if self.config.mode == MODE_SURROGATE and self.reproductions >= warmup_events:
                self.surrogate_generation()
            else:
                self.ga_step()
        self.finished = True
        self.finish_reason = reason
        self._emit(
            "campaign_finished",
            {
                "reason": reason,
                "evaluations": self.evaluations,
                "bestFitness": self.best_real,
            },
        )
        return self


def run_campaign(
    config: CampaignConfig,
    oracle: FitnessOracle,
    event_sink: Optional[EventSink] = None,
) -> Campaign:
    """Create, run, and return a campaign (convenience wrapper)."""
    campaign = Campaign(config, oracle, event_sink)
    return campaign.run()
