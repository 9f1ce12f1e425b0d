"""Command-line surface: classify, analyze, attack, tune-ensemble, report-validate.

Configuration comes from defaults, then an optional JSON config file, then
flags, in increasing precedence. Exit codes: 0 success, 1 when any per-item
failure occurred under ``--strict`` (always for report-validate), 2 for
configuration and usage errors.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import ensemble as ensemble_mod
from .attacks import evaluate_robustness, write_robustness_csv
from .backends import create_backends
from .config import RunConfig, load_config
from .dataset import DatasetEntry, ingest_cifake
from .errors import BackendUnavailable, VeritasError
from .explainer import analyze, load_descriptor_library
from .images import load_image
from .reports import validate_report_dict, write_report, write_text_atomic

__all__ = ["cli", "main"]


def _resolve_config(config_path, **flag_overrides) -> RunConfig:
    try:
        cfg = load_config(config_path)
        return cfg.with_overrides(**flag_overrides)
    except (VeritasError, ValueError) as exc:
        raise click.UsageError(str(exc))


def _make_backends(cfg: RunConfig):
    try:
        return create_backends(cfg.backend_selector(), seed=cfg.seed, model_dir=cfg.model_dir)
    except (BackendUnavailable, ValueError) as exc:
        raise click.UsageError(str(exc))


def _gather_inputs(image, dataset, limit) -> list[tuple[str, Path, str | None]]:
    """(image_id, path, label-or-None) triples for the requested inputs."""
    if (image is None) == (dataset is None):
        raise click.UsageError("pass exactly one of --image or --dataset")
    if image is not None:
        path = Path(image)
        if not path.is_file():
            raise click.UsageError(f"no such image file: {path}")
        return [(path.stem, path, None)]
    try:
        index = ingest_cifake(dataset)
    except VeritasError as exc:
        raise click.UsageError(str(exc))
    entries = index.entries if limit is None else index.entries[: limit]
    items = []
    seen: dict[str, int] = {}
    for entry in entries:
        image_id = _entry_id(entry)
        # same stem under one split/label (e.g. a.png vs a.jpg) must not
        # collide on report filenames
        count = seen.get(image_id, 0)
        seen[image_id] = count + 1
        if count:
            image_id = f"{image_id}_{count + 1}"
        items.append((image_id, entry.path, entry.label))
    return items


def _entry_id(entry: DatasetEntry) -> str:
    return f"{entry.split}_{entry.label}_{entry.path.stem}"


@click.group()
def cli():
    """Forensic analysis of small images: detection, explanation, attacks."""


@cli.command()
@click.option("--image", type=click.Path(), default=None, help="Analyze a single image file.")
@click.option("--dataset", type=click.Path(), default=None, help="CIFAKE-layout dataset root.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Output CSV path.")
@click.option("--backends", type=click.Choice(["mock", "real"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--limit", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--strict", is_flag=True, help="Exit 1 if any item fails.")
def classify(image, dataset, out_path, backends, config_path, limit, seed, strict):
    """Write per-image real/fake verdicts as CSV."""
    cfg = _resolve_config(config_path, backends=backends, seed=seed)
    bundle = _make_backends(cfg)
    inputs = _gather_inputs(image, dataset, limit)
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["image_id", "path", "label", "prediction", "fake_probability"])
    failures = 0
    for image_id, path, label in inputs:
        try:
            output = bundle.classifier.classify(load_image(path))
            writer.writerow(
                [image_id, str(path), label or "", output.prediction, repr(output.fake_probability)]
            )
        except (VeritasError, OSError) as exc:
            failures += 1
            click.echo(f"[classify] {image_id}: {exc}", err=True)
    write_text_atomic(buffer.getvalue(), out_path)
    click.echo(f"wrote {len(inputs) - failures} verdicts to {out_path} ({failures} failures)")
    if failures and strict:
        sys.exit(1)


@cli.command("analyze")
@click.option("--image", type=click.Path(), default=None, help="Analyze a single image file.")
@click.option("--dataset", type=click.Path(), default=None, help="CIFAKE-layout dataset root.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Report output directory.")
@click.option("--backends", type=click.Choice(["mock", "real"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--limit", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--patch-size", type=int, default=None)
@click.option("--sr-factor", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--overlay", is_flag=True, help="Also write heatmap overlay PNGs into --out.")
@click.option("--strict", is_flag=True, help="Exit 1 if any item fails.")
def analyze_cmd(
    image, dataset, out_dir, backends, config_path, limit, seed, threshold, patch_size,
    sr_factor, workers, overlay, strict,
):
    """Run the full pipeline and write one report JSON per image."""
    cfg = _resolve_config(
        config_path,
        backends=backends,
        seed=seed,
        threshold=threshold,
        patch_size=patch_size,
        sr_factor=sr_factor,
        workers=workers,
        overlay_dir=str(out_dir) if overlay else None,
    )
    try:
        library = (
            load_descriptor_library(cfg.descriptor_library) if cfg.descriptor_library else None
        )
    except VeritasError as exc:
        raise click.UsageError(str(exc))
    _make_backends(cfg)  # fail fast on unavailable backends before fan-out
    inputs = _gather_inputs(image, dataset, limit)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    local = threading.local()

    def bundle_for_worker():
        if not hasattr(local, "bundle"):
            local.bundle = _make_backends(cfg)
        return local.bundle

    def run_one(item):
        image_id, path, _label = item
        img = load_image(path)
        report = analyze(img, bundle_for_worker(), cfg, image_id=image_id, library=library)
        write_report(report, out / f"{image_id}.report.json")
        return image_id, report

    results = {}
    failures = {}
    if cfg.workers == 1:
        for item in inputs:
            try:
                image_id, report = run_one(item)
                results[image_id] = report
            except (VeritasError, OSError) as exc:
                failures[item[0]] = str(exc)
                click.echo(f"[analyze] {item[0]}: {exc}", err=True)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(run_one, item): item for item in inputs}
            for future, item in futures.items():
                try:
                    image_id, report = future.result()
                    results[image_id] = report
                except (VeritasError, OSError) as exc:
                    failures[item[0]] = str(exc)
                    click.echo(f"[analyze] {item[0]}: {exc}", err=True)

    index = {
        "reports": [
            {
                "image_id": image_id,
                "file": f"{image_id}.report.json",
                "verdict": report.verdict,
                "fake_probability": report.fake_probability,
                "artifact_flagged": report.artifact_flagged,
            }
            for image_id, report in sorted(results.items())
        ],
        "failures": [
            {"image_id": image_id, "error": error} for image_id, error in sorted(failures.items())
        ],
    }
    write_text_atomic(json.dumps(index, indent=2, sort_keys=True) + "\n", out / "index.json")
    click.echo(f"wrote {len(results)} reports to {out} ({len(failures)} failures)")
    if failures and strict:
        sys.exit(1)


@cli.command()
@click.option("--dataset", type=click.Path(), required=True, help="CIFAKE-layout dataset root.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Output CSV path.")
@click.option(
    "--attack", "attack_name",
    type=click.Choice(["fgsm", "pgd", "wavelet", "auto"]), default="fgsm", show_default=True,
)
@click.option("--epsilon", "epsilons", default="0.03", show_default=True,
              help="Comma-separated epsilon budgets.")
@click.option("--iterations", type=int, default=None)
@click.option("--backends", type=click.Choice(["mock", "real"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--limit", type=int, default=None)
@click.option("--seed", type=int, default=None)
def attack(dataset, out_path, attack_name, epsilons, iterations, backends, config_path, limit, seed):
    """Evaluate classifier accuracy under adversarial attack."""
    cfg = _resolve_config(config_path, backends=backends, seed=seed, iterations=iterations)
    try:
        eps_values = [float(v) for v in epsilons.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"--epsilon must be comma-separated numbers, got {epsilons!r}")
    if not eps_values:
        raise click.UsageError("--epsilon must name at least one budget")
    bundle = _make_backends(cfg)
    try:
        index = ingest_cifake(dataset)
        entries = index.entries if limit is None else index.entries[: limit]
        samples = [(load_image(e.path), e.label) for e in entries]
    except (VeritasError, OSError) as exc:
        raise click.UsageError(str(exc))

    if attack_name == "auto":
        from .attacks import autoattack

        attack_fn = autoattack
    else:
        attack_fn = attack_name
    try:
        rows = evaluate_robustness(
            bundle.classifier, samples, attack_fn, cfg.attack_config(), epsilons=eps_values
        )
    except VeritasError as exc:
        raise click.ClickException(f"[attack] {exc}")
    write_robustness_csv(rows, out_path)
    click.echo(f"wrote {len(rows)} rows to {out_path}")


@cli.command("tune-ensemble")
@click.option("--members", "members_path", type=click.Path(), required=True,
              help="Member probability CSV: sample_id,label,member_1..member_n.")
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True, help="Best-weights JSON path.")
def tune_ensemble(members_path, trials, seed, out_path):
    """Search ensemble weights on a validation table."""
    try:
        table = ensemble_mod.load_member_table(members_path)
        weights, best_score = ensemble_mod.search_weights(
            table.probs, table.labels, trials=trials, seed=seed
        )
    except (VeritasError, ValueError, OSError) as exc:
        raise click.UsageError(f"[tune-ensemble] {exc}")
    payload = {
        "member_names": list(table.member_names),
        "weights": list(weights.weights),
        "best_score": best_score,
        "trials": trials,
        "seed": seed,
        "n_samples": len(table.sample_ids),
    }
    write_text_atomic(json.dumps(payload, indent=2, sort_keys=True) + "\n", out_path)
    click.echo(f"best validation accuracy {best_score:.4f}; wrote {out_path}")


@cli.command("report-validate")
@click.argument("paths", nargs=-1, required=True, type=click.Path())
def report_validate(paths):
    """Validate report JSON files (or directories of them) against the schema."""
    import jsonschema

    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(path.glob("*.report.json")))
        elif path.is_file():
            files.append(path)
        else:
            raise click.UsageError(f"no such file or directory: {path}")
    if not files:
        raise click.UsageError("no report files found")
    invalid = 0
    for path in files:
        try:
            validate_report_dict(json.loads(path.read_text()))
            click.echo(f"ok      {path}")
        except json.JSONDecodeError as exc:
            invalid += 1
            click.echo(f"invalid {path}: not JSON ({exc})", err=True)
        except jsonschema.ValidationError as exc:
            invalid += 1
            click.echo(f"invalid {path}: {exc.message}", err=True)
    if invalid:
        sys.exit(1)


def main():
    cli(prog_name="veritas")


if __name__ == "__main__":
    main()
