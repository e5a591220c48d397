"""Command line interface: thin compositions of the library pipelines."""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import errors
from .engine import query_with_mesh, signature_from_mesh_bytes
from .evaluate import (evaluate_all, metric1, metric1_csv, metric1_table,
                       metric2, metric2_csv, metric2_table)
from .index import PartRecord, Repository, load_repository, save_repository
from .mesh_io import MaterialClass, MeshFormat, ToleranceClass, load_mesh, load_part_meta
from .simulate import (build_simulated_repository, config_from_json,
                       config_to_json, default_config, ground_truth_from_csv,
                       ground_truth_to_csv)
from .sph import DEFAULT_FREQ, DEFAULT_SHELLS, dump_signature, signature
from .voxelize import voxelize_surface

EXIT_PARSE_ERROR = 2
EXIT_OTHER_ERROR = 3

_ERROR_CODES = {
    errors.MalformedFile: ("malformed-file", EXIT_PARSE_ERROR),
    errors.EmptyMesh: ("empty-mesh", EXIT_PARSE_ERROR),
    errors.SchemaError: ("schema-error", EXIT_PARSE_ERROR),
    errors.CorruptIndex: ("corrupt-index", EXIT_PARSE_ERROR),
    errors.DegenerateGeometry: ("degenerate-geometry", EXIT_OTHER_ERROR),
    errors.DimensionMismatch: ("dimension-mismatch", EXIT_OTHER_ERROR),
    errors.TooFewRecords: ("too-few-records", EXIT_OTHER_ERROR),
    errors.UnknownPart: ("unknown-part", EXIT_OTHER_ERROR),
    errors.UnservableProcess: ("unservable-process", EXIT_OTHER_ERROR),
    errors.InvalidParams: ("invalid-params", EXIT_OTHER_ERROR),
    errors.DegenerateData: ("degenerate-data", EXIT_OTHER_ERROR),
}


def _fail(exc: Exception):
    for cls, (code, exit_code) in _ERROR_CODES.items():
        if isinstance(exc, cls):
            click.echo(f"fabsearch: ERROR {code}: {exc}", err=True)
            sys.exit(exit_code)
    click.echo(f"fabsearch: ERROR internal: {exc}", err=True)
    sys.exit(EXIT_OTHER_ERROR)


@click.group()
def main():
    """3D-model-driven search for manufacturing service providers."""


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, path_type=Path))
@click.argument("out_path", type=click.Path(path_type=Path))
@click.option("--R", "resolution", default=32, show_default=True)
@click.option("--shells", default=DEFAULT_SHELLS, show_default=True)
@click.option("--freq", default=DEFAULT_FREQ, show_default=True)
def sign(mesh_path: Path, out_path: Path, resolution, shells, freq):
    """Compute a mesh's shape signature and write it as an FSIG file."""
    try:
        t0 = time.perf_counter()
        sig = signature_from_mesh_bytes(mesh_path.read_bytes(), MeshFormat.AUTO,
                                        resolution, shells, freq)
        elapsed = time.perf_counter() - t0
        out_path.write_bytes(dump_signature(sig))
    except Exception as exc:
        _fail(exc)
    click.echo(f"{sig.n_shells}x{sig.n_freq} signature written in {elapsed:.3f}s")


@main.command("index-build")
@click.argument("parts_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("out_path", type=click.Path(path_type=Path))
@click.option("--R", "resolution", default=32, show_default=True)
@click.option("--shells", default=DEFAULT_SHELLS, show_default=True)
@click.option("--freq", default=DEFAULT_FREQ, show_default=True)
def index_build(parts_dir: Path, out_path: Path, resolution, shells, freq):
    """Index every mesh+sidecar pair (NAME.stl/NAME.off + NAME.json) in a directory."""
    repo = Repository()
    try:
        mesh_paths = sorted(p for p in parts_dir.iterdir()
                            if p.suffix.lower() in (".stl", ".off"))
        for mesh_path in mesh_paths:
            sidecar = mesh_path.with_suffix(".json")
            if not sidecar.exists():
                raise errors.SchemaError(f"missing sidecar {sidecar.name}")
            meta = load_part_meta(sidecar.read_bytes())
            mesh = load_mesh(mesh_path.read_bytes())
            grid = voxelize_surface(mesh, resolution)
            sig = signature(grid, shells, freq)
            repo.add(PartRecord(meta, sig))
        out_path.write_bytes(save_repository(repo))
    except Exception as exc:
        _fail(exc)
    click.echo(f"indexed {len(repo)} parts -> {out_path}")


@main.command()
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--mesh", "mesh_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--material", type=click.Choice(["METAL", "NONMETAL"], case_sensitive=False),
              required=True)
@click.option("--tolerance", type=click.Choice(["STANDARD", "MEDIUM", "HIGH"],
                                               case_sensitive=False), required=True)
@click.option("--k", default=10, show_default=True)
@click.option("--max-results", default=None, type=int)
@click.option("--json", "as_json", is_flag=True, help="Print the structured response.")
def query(index_path: Path, mesh_path: Path, material, tolerance, k, max_results, as_json):
    """Query an index with a mesh plus material/tolerance requirements."""
    try:
        repo = load_repository(index_path.read_bytes())
        response = query_with_mesh(
            repo, mesh_path.read_bytes(),
            MaterialClass(material.capitalize()),
            ToleranceClass(tolerance.capitalize()),
            k=k, max_results=max_results)
    except Exception as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps(response, indent=2))
        return
    click.echo(f"status: {response['status']}")
    click.echo(f"{'manufacturer':<14} {'posterior':>10} {'matches':>8} "
               f"{'best dist':>10} {'tol ok':>7}")
    for e in response["ranking"]:
        click.echo(f"{e['manufacturer_id']:<14} {e['posterior']:>10.4f} "
                   f"{e['matched_count']:>8} {e['best_distance']:>10.4f} "
                   f"{str(e['tolerance_satisfied']):>7}")
    click.echo(f"\nneighborhood ({len(response['neighborhood'])} parts):")
    for n in response["neighborhood"]:
        click.echo(f"  {n['part_id']}  d={n['distance']:.4f}  "
                   f"tol={n['tolerance_class']}  mfg={n['manufacturer_id']}  "
                   f"[{n['direction']}]")


@main.command()
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Simulation config JSON; defaults to the desk-scale config.")
@click.option("--seed", default=None, type=int, help="Override the config's RNG seed.")
def simulate(out_dir: Path, config_path, seed):
    """Build a simulated repository: index file, ground truth CSV, config used."""
    try:
        config = (config_from_json(config_path.read_text())
                  if config_path else default_config())
        if seed is not None:
            config.rng_seed = seed
        repo, truth, _specialties = build_simulated_repository(config)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "index.fidx").write_bytes(save_repository(repo))
        (out_dir / "ground_truth.csv").write_text(ground_truth_to_csv(truth))
        (out_dir / "config.json").write_text(config_to_json(config))
    except Exception as exc:
        _fail(exc)
    click.echo(f"simulated {len(repo)} parts -> {out_dir}")


@main.command()
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--ground-truth", "truth_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--k", default=10, show_default=True)
@click.option("--csv", "as_csv", is_flag=True)
def evaluate(index_path: Path, truth_path: Path, k, as_csv):
    """Leave-one-out evaluation printing Metric 1 and Metric 2 tables."""
    try:
        repo = load_repository(index_path.read_bytes())
        truth = ground_truth_from_csv(truth_path.read_text())
        # specialties observed in the ground truth define each manufacturer's expertise
        specialties: dict = {}
        for row in truth:
            specialties.setdefault(row.manufacturer_id, [])
            if row.process not in specialties[row.manufacturer_id]:
                specialties[row.manufacturer_id].append(row.process)
        verdicts = evaluate_all(repo, truth, specialties, k)
        m1, m2 = metric1(verdicts), metric2(verdicts)
    except Exception as exc:
        _fail(exc)
    if as_csv:
        click.echo(metric1_csv(m1), nl=False)
        click.echo(metric2_csv(m2), nl=False)
    else:
        click.echo("Metric 1: correct manufacturer type assignment")
        click.echo(metric1_table(m1))
        click.echo("\nMetric 2: original vs new manufacturer assignment")
        click.echo(metric2_table(m2))


@main.command()
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
def serve(index_path: Path, bind):
    """Serve the HTTP JSON API over a read-only index snapshot."""
    import uvicorn

    from .service import create_app

    try:
        repo = load_repository(index_path.read_bytes())
    except Exception as exc:
        _fail(exc)
    host, _, port = bind.partition(":")
    app = create_app(repo)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
