"""Command-line entry points.

``voxturbine reproduce-target`` runs the GA-only vs surrogate benchmark and
exits 0 only when every acceptance criterion holds. ``run`` drives a single
campaign from a JSON config against a computed oracle and leaves behind an
event log plus a best-so-far CSV. ``export-stl`` turns one genome into a
printable mesh. ``serve`` hosts the HTTP service.

Exit codes: 0 success, 1 benchmark criteria unmet, 2 usage/config/I-O errors.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import experiment
from .events import EventLog
from .evolver import Campaign, config_from_payload
from .fitness import make_oracle
from .genome import (
    BASE_ALLELE_COUNT,
    Genome,
    Z_ALLELE_COUNT,
    genome_hash,
)
from .mesh import laplacian_smooth, stl_filename, voxels_to_mesh, write_stl
from .morphology import build_phenotype


@click.group()
def main() -> None:
    """Evolve voxel-encoded rotor prototypes and export them for printing."""


@main.command("reproduce-target")
@click.option("--runs", default=20, show_default=True, help="Runs per mode.")
@click.option("--seed", default=0, show_default=True, help="Base seed for run derivation.")
@click.option("--threshold", default=experiment.DEFAULT_THRESHOLD, show_default=True)
@click.option("--budget", default=experiment.DEFAULT_BUDGET, show_default=True)
@click.option("--jobs", default=None, type=int, help="Worker processes (default: CPU count).")
@click.option(
    "--out",
    default="report",
    show_default=True,
    type=click.Path(file_okay=False, path_type=Path),
)
def reproduce_target(
    runs: int, seed: int, threshold: float, budget: int, jobs: int | None, out: Path
) -> None:
    """Benchmark GA-only vs surrogate-assisted evaluations to a target match."""

    def progress(result: experiment.RunResult) -> None:
        click.echo(
            f"  {result.mode:<9} run {result.run:>2}: "
            f"{result.evaluations_to_threshold:>5} evaluations, "
            f"best {result.best_fitness:.4f}"
        )

    try:
        report = experiment.run_experiment(
            runs_per_mode=runs,
            base_seed=seed,
            threshold=threshold,
            budget=budget,
            jobs=jobs,
            progress=progress,
        )
    except ValueError as error:
        raise click.UsageError(str(error))
    try:
        json_path, csv_path = experiment.write_report(report, out)
    except OSError as error:
        click.echo(f"cannot write report: {error}", err=True)
        raise SystemExit(2)
    for mode, summary in report.summaries.items():
        click.echo(f"{mode}: M={summary.mean:.1f} SD={summary.sd:.1f} n={summary.n}")
    click.echo(
        f"welch: t={report.welch.t:.3f} df={report.welch.df:.2f} "
        f"p={report.welch.p_two_tailed:.4g}"
    )
    for name, passed in report.criteria.items():
        click.echo(f"{'PASS' if passed else 'FAIL'} {name}")
    click.echo(f"report: {json_path}")
    click.echo(f"runs:   {csv_path}")
    raise SystemExit(0 if report.success else 1)


@main.command("run")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option(
    "--oracle",
    "oracle_kind",
    type=click.Choice(["target", "proxy"]),
    default="proxy",
    show_default=True,
)
@click.option(
    "--out",
    default="campaign-out",
    show_default=True,
    type=click.Path(file_okay=False, path_type=Path),
)
def run_command(config_path: Path, oracle_kind: str, out: Path) -> None:
    """Run one campaign from a JSON config; write event log and history CSV."""
    try:
        payload = json.loads(config_path.read_text())
        config = config_from_payload(payload)
        oracle = make_oracle(oracle_kind, target=config.target_genome)
    except (json.JSONDecodeError, ValueError, TypeError, KeyError) as error:
        raise click.UsageError(f"invalid config: {error}")
    out.mkdir(parents=True, exist_ok=True)
    # No timestamps: the same seed and config rewrite this file byte for byte.
    with EventLog(out / "events.jsonl", timestamps=False, durable=False) as log:
        campaign = Campaign(config, oracle, event_sink=lambda k, p: log.append(k, p))
        campaign.run()
    with open(out / "history.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["evaluations", "bestFitness"])
        for evaluations, best in campaign.per_evaluation_series():
            writer.writerow([evaluations, f"{best:.10g}"])
    click.echo(
        f"finished: reason={campaign.finish_reason} "
        f"evaluations={campaign.evaluations} best={campaign.best_real:.6g}"
    )
    click.echo(f"events:  {out / 'events.jsonl'}")
    click.echo(f"history: {out / 'history.csv'}")


def _parse_alleles(text: str, count: int, label: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.replace(",", " ").split())
    except ValueError:
        raise click.BadParameter(f"{label} must be integers, got {text!r}")
    if len(values) != count:
        raise click.BadParameter(f"{label} needs exactly {count} values, got {len(values)}")
    return values


@main.command("export-stl")
@click.argument("alleles")
@click.option("--z-alleles", default=None, help="Five comma-separated z offsets.")
@click.option("--smooth", default=0, show_default=True, help="Laplacian smoothing steps.")
@click.option("--ascii", "ascii_format", is_flag=True, help="Write ASCII STL instead of binary.")
@click.option("--out", default=None, type=click.Path(dir_okay=False, path_type=Path))
def export_stl(
    alleles: str, z_alleles: str | None, smooth: int, ascii_format: bool, out: Path | None
) -> None:
    """Export one genome (ten comma-separated alleles) as an STL mesh."""
    base = _parse_alleles(alleles, BASE_ALLELE_COUNT, "alleles")
    z = _parse_alleles(z_alleles, Z_ALLELE_COUNT, "z-alleles") if z_alleles else None
    if smooth < 0:
        raise click.BadParameter("smooth must be >= 0")
    try:
        genome = Genome(base, z)
    except ValueError as error:
        raise click.BadParameter(str(error))
    mesh = voxels_to_mesh(build_phenotype(genome))
    if smooth:
        mesh = laplacian_smooth(mesh, smooth)
    path = out if out is not None else Path(stl_filename(genome_hash(genome), smooth))
    try:
        path.write_bytes(write_stl(mesh, binary=not ascii_format))
    except OSError as error:
        click.echo(f"cannot write {path}: {error}", err=True)
        raise SystemExit(2)
    click.echo(f"wrote {path}")
    click.echo(f"triangles: {mesh.triangle_count}")
    click.echo(f"volume: {mesh.signed_volume():.6f} mm^3")


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--data-dir",
    default=None,
    type=click.Path(file_okay=False, path_type=Path),
    envvar="VOXTURBINE_DATA_DIR",
    help="Campaign storage directory [env: VOXTURBINE_DATA_DIR].",
)
def serve(port: int, host: str, data_dir: Path | None) -> None:
    """Host the campaign HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir if data_dir is not None else Path("campaign-data"))
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except OSError as error:
        click.echo(f"cannot bind {host}:{port}: {error}", err=True)
        raise SystemExit(2)


if __name__ == "__main__":
    main()
