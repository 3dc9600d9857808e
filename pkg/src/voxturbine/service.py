"""HTTP campaign service.

One directory per campaign (``config.json`` plus an append-only
``events.jsonl``) is the entire persistent state. On startup every campaign
directory is replayed: the engine re-executes from its seed while previously
persisted engine events are suppressed instead of re-appended, and recorded
measurement resolutions are fed back to the oracle by request id. A campaign
therefore resumes exactly where the log left off, whether it crashed mid
generation or finished long ago.

Write-ahead rule: a measurement submission is acknowledged only after its
``measurement_resolved`` record is fsynced to the log.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, model_validator

from .events import ENGINE_EVENT_KINDS, EventLog, read_events
from .evolver import Campaign, CampaignConfig, config_from_payload, genome_payload
from .fitness import (
    CampaignAborted,
    ManualMeasurementOracle,
    MeasurementConflict,
    MeasurementRequest,
    make_oracle,
)
from .genome import Genome, genome_hash
from .mesh import laplacian_smooth, stl_filename, voxels_to_mesh, write_stl_binary
from .morphology import GRID_SIZE, build_phenotype

logger = logging.getLogger("voxturbine.service")

DEFAULT_SMOOTH_STEPS = 50
CONFIG_FILENAME = "config.json"
EVENTS_FILENAME = "events.jsonl"


class CreateCampaignRequest(BaseModel):
    """Flat JSON body for POST /campaigns (camelCase keys)."""

    model_config = {"populate_by_name": True, "extra": "forbid"}

    oracle: Literal["target", "proxy", "manual"]
    evaluation_budget: int = Field(alias="evaluationBudget")
    seed: int = 0
    population_size: int = Field(20, alias="populationSize")
    mutation_rate: float = Field(0.25, alias="mutationRate")
    max_mutation_step: int = Field(10, alias="maxMutationStep")
    z_mode: bool = Field(False, alias="zMode")
    mode: Literal["ga", "surrogate"] = "surrogate"
    warmup_generations: int = Field(0, alias="warmupGenerations")
    fitness_scale: Optional[float] = Field(None, alias="fitnessScale")
    stop_threshold: Optional[float] = Field(None, alias="stopThreshold")
    target_genome: Optional[list[int] | dict] = Field(None, alias="targetGenome")

    @model_validator(mode="after")
    def _check(self) -> "CreateCampaignRequest":
        if self.oracle == "target" and self.target_genome is None:
            raise ValueError("target campaigns require targetGenome")
        self.to_config()  # surface CampaignConfig validation as 422 field errors
        return self

    def to_config(self) -> CampaignConfig:
        payload = {
            "populationSize": self.population_size,
            "mutationRate": self.mutation_rate,
            "maxMutationStep": self.max_mutation_step,
            "zMode": self.z_mode,
            "mode": self.mode,
            "warmupGenerations": self.warmup_generations,
            "evaluationBudget": self.evaluation_budget,
            "seed": self.seed,
            "fitnessScale": self.fitness_scale,
            "stopThreshold": self.stop_threshold,
            "targetGenome": self.target_genome,
        }
        return config_from_payload(payload)


class SubmitMeasurementRequest(BaseModel):
    model_config = {"populate_by_name": True}

    request_id: str = Field(alias="requestId")
    rpm: float


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class CampaignRuntime:
    """One campaign: engine thread, oracle, event log, and derived read state."""

    def __init__(
        self,
        campaign_id: str,
        directory: Path,
        oracle_kind: str,
        config: CampaignConfig,
        created_at: str,
        persisted_events: Optional[list[dict]] = None,
    ) -> None:
        self.id = campaign_id
        self.directory = directory
        self.oracle_kind = oracle_kind
        self.config = config
        self.created_at = created_at
        persisted = persisted_events or []

        self._lock = threading.Lock()  # derived read state + log appends
        self._submit_lock = threading.Lock()  # serializes measurement writes
        self._pending_signal = threading.Condition(self._lock)
        self._best_per_eval: list[float] = []
        self._generation = 0
        self._population: tuple[dict, ...] = ()
        self._finish_payload: Optional[dict] = None
        self._engine_error: Optional[str] = None
        self._genomes: dict[str, Genome] = {}
        self._stl_cache: dict[tuple[str, int], bytes] = {}

        # Replay bookkeeping: the first N engine-event emissions after a
        # restart duplicate persisted records and must not be re-appended;
        # evaluation_requested records are deduplicated by request id since
        # replayed campaigns re-issue identical ids.
        self._suppress_engine_events = sum(
            1 for e in persisted if e.get("kind") in ENGINE_EVENT_KINDS
        )
        self._recorded_request_ids = {
            e["payload"]["requestId"]
            for e in persisted
            if e.get("kind") == "evaluation_requested"
        }
        resolutions = {
            e["payload"]["requestId"]: float(e["payload"]["rpm"])
            for e in persisted
            if e.get("kind") == "measurement_resolved"
        }

        self.log = EventLog(directory / EVENTS_FILENAME, timestamps=True, durable=True)
        if oracle_kind == "manual":
            self.oracle = ManualMeasurementOracle(on_requests=self._on_requests)
            if resolutions:
                self.oracle.preload_resolutions(resolutions)
        else:
            self.oracle = make_oracle(oracle_kind, target=config.target_genome)
        if config.target_genome is not None:
            self._genomes[genome_hash(config.target_genome)] = config.target_genome

        self.engine = Campaign(config, self.oracle, event_sink=self._engine_event)
        self.thread = threading.Thread(
            target=self._run_engine, name=f"campaign-{campaign_id}", daemon=True
        )

    # -- engine thread -------------------------------------------------------

    def start(self) -> None:
        self.thread.start()

    def _run_engine(self) -> None:
        try:
            self.engine.run()
        except CampaignAborted:
            pass
        except Exception:  # pragma: no cover - defensive; surfaced via logs
            logger.exception("campaign %s engine failed", self.id)
            with self._lock:
                self._engine_error = "engine failure; see service logs"

    def _engine_event(self, kind: str, payload: dict) -> None:
        with self._lock:
            if self._suppress_engine_events > 0:
                self._suppress_engine_events -= 1
            else:
                self.log.append(kind, payload)
            self._apply_engine_event(kind, payload)

    def _apply_engine_event(self, kind: str, payload: dict) -> None:
        # caller holds self._lock
        if kind == "individual_evaluated":
            self._best_per_eval.append(
                max(payload["fitness"], self._best_per_eval[-1])
                if self._best_per_eval
                else payload["fitness"]
            )
            genome = _genome_from_wire(payload["genome"])
            self._genomes[payload["genomeHash"]] = genome
        elif kind == "generation_advanced":
            self._generation = payload["generation"]
        elif kind == "campaign_finished":
            self._finish_payload = payload
        self._population = tuple(
            {
                "genome": genome_payload(member.genome),
                "genomeHash": genome_hash(member.genome),
                "fitness": member.fitness,
                "provenance": member.provenance,
            }
            for member in self.engine.population
        )
        for member in self.engine.population:
            self._genomes.setdefault(genome_hash(member.genome), member.genome)

    def _on_requests(self, requests: list[MeasurementRequest]) -> None:
        with self._lock:
            for request in requests:
                self._genomes[request.genome_hash] = request.genome
                if request.request_id not in self._recorded_request_ids:
                    self.log.append(
                        "evaluation_requested",
                        {
                            "requestId": request.request_id,
                            "genomeHash": request.genome_hash,
                            "genome": genome_payload(request.genome),
                        },
                    )
            self._pending_signal.notify_all()

    # -- reads ----------------------------------------------------------------

    def status(self) -> str:
        with self._lock:
            if self._finish_payload is not None:
                return "finished"
        if self.oracle_kind == "manual" and self.oracle.pending():
            return "awaiting-measurement"
        return "running"

    def record(self) -> dict:
        with self._lock:
            evaluations = len(self._best_per_eval)
            best = self._best_per_eval[-1] if self._best_per_eval else None
            generation = self._generation
        return {
            "id": self.id,
            "createdAt": self.created_at,
            "status": self.status(),
            "oracle": self.oracle_kind,
            "config": self.config.to_payload(),
            "generation": generation,
            "evaluations": evaluations,
            "bestFitness": best,
        }

    def history(self) -> dict:
        size = self.config.population_size
        with self._lock:
            best = list(self._best_per_eval)
            generation = self._generation
        series = [
            {"evaluations": index, "bestFitness": value}
            for index, value in enumerate(best, start=1)
            if index >= size
        ]
        return {
            "series": series,
            "archiveSize": len(best),
            "generation": generation,
            "mode": self.config.mode,
            "status": self.status(),
            "bestFitness": best[-1] if best else None,
        }

    def population(self) -> dict:
        with self._lock:
            members = list(self._population)
            generation = self._generation
        return {"generation": generation, "members": members}

    def pending_payload(self) -> list[dict]:
        if self.oracle_kind != "manual":
            return []
        return [
            {
                "requestId": request.request_id,
                "genomeHash": request.genome_hash,
                "genome": genome_payload(request.genome),
                "stlUrl": f"/campaigns/{self.id}/designs/{request.genome_hash}/stl",
            }
            for request in self.oracle.pending()
        ]

    def wait_for_pending(self, timeout: float = 10.0) -> None:
        """Block until the oracle has queued requests (create-time courtesy)."""
        if self.oracle_kind != "manual":
            return
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.oracle.pending() or not self.thread.is_alive():
                return
            time.sleep(0.01)

    def lookup_genome(self, design_hash: str) -> Genome:
        with self._lock:
            genome = self._genomes.get(design_hash)
        if genome is None:
            raise HTTPException(status_code=404, detail="unknown design hash")
        return genome

    def stl_bytes(self, design_hash: str, smooth_steps: int) -> bytes:
        genome = self.lookup_genome(design_hash)
        key = (design_hash, smooth_steps)
        with self._lock:
            cached = self._stl_cache.get(key)
        if cached is not None:
            return cached
        mesh = voxels_to_mesh(build_phenotype(genome))
        if smooth_steps:
            mesh = laplacian_smooth(mesh, smooth_steps)
        data = write_stl_binary(mesh)
        with self._lock:
            self._stl_cache[key] = data
        return data

    def slice_payload(self, design_hash: str) -> dict:
        genome = self.lookup_genome(design_hash)
        layer = build_phenotype(genome).layer(0)
        cells = [[int(x), int(y)] for x, y in zip(*layer.nonzero())]
        return {"genomeHash": design_hash, "gridSize": GRID_SIZE, "cells": cells}

    # -- mutations --------------------------------------------------------

    def submit_measurement(self, request_id: str, rpm: float) -> dict:
        if self.oracle_kind != "manual":
            raise HTTPException(status_code=404, detail="campaign takes no measurements")
        if rpm < 0:
            raise HTTPException(status_code=422, detail="rpm must be >= 0")
        with self._submit_lock:
            try:
                current = self.oracle.get(request_id)
            except KeyError:
                raise HTTPException(status_code=404, detail="unknown request id")
            if current.status == "resolved":
                raise HTTPException(status_code=409, detail="measurement already resolved")
            # Durable before acknowledged: the resolution record hits disk
            # first, so a crash after this line replays to the same outcome.
            with self._lock:
                self.log.append(
                    "measurement_resolved",
                    {"requestId": request_id, "rpm": float(rpm)},
                )
            try:
                resolved = self.oracle.resolve(request_id, rpm)
            except (KeyError, MeasurementConflict):  # pragma: no cover - guarded above
                raise HTTPException(status_code=409, detail="measurement already resolved")
        return {
            "requestId": resolved.request_id,
            "rpm": resolved.rpm,
            "status": resolved.status,
        }

    def close(self) -> None:
        if isinstance(self.oracle, ManualMeasurementOracle):
            self.oracle.abort()
        self.thread.join(timeout=5.0)
        self.log.close()


def _genome_from_wire(payload: dict) -> Genome:
    z = payload.get("z")
    return Genome(tuple(payload["base"]), tuple(z) if z else None)


class CampaignManager:
    """Owns every campaign runtime under one data directory."""

    def __init__(self, data_dir: Path | str) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._campaigns: dict[str, CampaignRuntime] = {}
        self._lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for directory in sorted(self.data_dir.iterdir()):
            config_path = directory / CONFIG_FILENAME
            if not directory.is_dir() or not config_path.exists():
                continue
            try:
                meta = json.loads(config_path.read_text())
                events = read_events(directory / EVENTS_FILENAME)
                runtime = CampaignRuntime(
                    campaign_id=meta["id"],
                    directory=directory,
                    oracle_kind=meta["oracle"],
                    config=config_from_payload(meta["config"]),
                    created_at=meta["createdAt"],
                    persisted_events=events,
                )
            except Exception:
                logger.exception("skipping unreadable campaign dir %s", directory)
                continue
            self._campaigns[runtime.id] = runtime
            runtime.start()

    def create(self, request: CreateCampaignRequest) -> CampaignRuntime:
        campaign_id = uuid.uuid4().hex
        directory = self.data_dir / campaign_id
        directory.mkdir(parents=True)
        config = request.to_config()
        created_at = _utc_now_iso()
        meta = {
            "id": campaign_id,
            "createdAt": created_at,
            "oracle": request.oracle,
            "config": config.to_payload(),
        }
        (directory / CONFIG_FILENAME).write_text(json.dumps(meta, indent=2) + "\n")
        runtime = CampaignRuntime(
            campaign_id=campaign_id,
            directory=directory,
            oracle_kind=request.oracle,
            config=config,
            created_at=created_at,
        )
        with self._lock:
            self._campaigns[campaign_id] = runtime
        runtime.start()
        runtime.wait_for_pending()
        return runtime

    def get(self, campaign_id: str) -> CampaignRuntime:
        with self._lock:
            runtime = self._campaigns.get(campaign_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail="unknown campaign")
        return runtime

    def list_records(self) -> list[dict]:
        with self._lock:
            runtimes = sorted(self._campaigns.values(), key=lambda r: r.created_at)
        return [runtime.record() for runtime in runtimes]

    def close(self) -> None:
        with self._lock:
            runtimes = list(self._campaigns.values())
        for runtime in runtimes:
            runtime.close()


def create_app(data_dir: Path | str) -> FastAPI:
    manager = CampaignManager(data_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.close()

    app = FastAPI(title="voxturbine campaign service", lifespan=lifespan)
    app.state.manager = manager
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/campaigns", status_code=201)
    def create_campaign(request: CreateCampaignRequest) -> dict:
        return manager.create(request).record()

    @app.get("/campaigns")
    def list_campaigns() -> list[dict]:
        return manager.list_records()

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str) -> dict:
        return manager.get(campaign_id).record()

    @app.get("/campaigns/{campaign_id}/pending")
    def get_pending(campaign_id: str) -> list[dict]:
        return manager.get(campaign_id).pending_payload()

    @app.post("/campaigns/{campaign_id}/measurements")
    def submit_measurement(campaign_id: str, body: SubmitMeasurementRequest) -> dict:
        return manager.get(campaign_id).submit_measurement(body.request_id, body.rpm)

    @app.get("/campaigns/{campaign_id}/designs/{design_hash}/stl")
    def get_stl(campaign_id: str, design_hash: str, smooth: int = DEFAULT_SMOOTH_STEPS) -> Response:
        if smooth < 0:
            raise HTTPException(status_code=422, detail="smooth must be >= 0")
        data = manager.get(campaign_id).stl_bytes(design_hash, smooth)
        filename = stl_filename(design_hash, smooth)
        return Response(
            content=data,
            media_type="model/stl",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.get("/campaigns/{campaign_id}/designs/{design_hash}/slice")
    def get_slice(campaign_id: str, design_hash: str) -> dict:
        return manager.get(campaign_id).slice_payload(design_hash)

    @app.get("/campaigns/{campaign_id}/history")
    def get_history(campaign_id: str) -> dict:
        return manager.get(campaign_id).history()

    @app.get("/campaigns/{campaign_id}/population")
    def get_population(campaign_id: str) -> dict:
        return manager.get(campaign_id).population()

    return app
