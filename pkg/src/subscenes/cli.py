"""Command-line front end: generate, build, analyze, score, correlate.

Exit codes: 0 success, 1 data error (bad corpus, mismatched model, too
little data), 2 usage error (bad flags, missing files, invalid spec).
All CSV output uses 9-significant-digit floats and sorted rows so
identical inputs produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import statistics
import sys
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import click

from . import __version__
from .catalog import PATTERN_NAMES, UNKNOWN_KEY, catalog_hash, signature
from .config import AnalysisConfig, ConfigError, load_config
from .corpus import (
    SchemaViolationError,
    load_snapshots,
    scene_from_json_line,
    scene_to_json,
)
from .builder import BuildError, build_scene_with_report
from .dsl import DslError, PatternQuery, parse
from .generator import GeneratorSpec, InvalidSpecError, write_corpus
from .metrics import (
    AnalysisModel,
    ComplexityConfig,
    CoverageIndex,
    EmptyCorpusError,
    MetricsError,
    calibrate,
    competence,
    complexity,
    coverage,
    load_model,
    normalize,
    raw_components,
    save_model,
)


class InsufficientOverlapError(Exception):
    pass


def _fmt(value: float) -> str:
    return format(value, ".9g")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(
    out_dir: Path,
    command: str,
    inputs: dict[str, Path],
    config_digest: str,
    catalog_digest: str,
    outputs: Sequence[str],
) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_hash": config_digest,
        "catalog_hash": catalog_digest,
        "inputs": {
            name: {"name": Path(path).name, "sha256": _sha256_file(Path(path))}
            for name, path in sorted(inputs.items())
        },
        "outputs": sorted(outputs),
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_analysis_config(config_path: Optional[str]) -> AnalysisConfig:
    try:
        return load_config(Path(config_path) if config_path else None)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


# --- per-scene statistics, optionally across a worker pool --------------------

_worker_state: dict = {}


def _worker_init(patterns: list[PatternQuery], complexity_config: ComplexityConfig) -> None:
    _worker_state["patterns"] = patterns
    _worker_state["complexity"] = complexity_config


def _worker_scene_stats(item: tuple[int, str]):
    line_no, line = item
    graph = scene_from_json_line(line, line_no)
    sig = signature(graph, _worker_state["patterns"])
    raws = raw_components(graph, _worker_state["complexity"])
    return graph.scene_id, sig.key, raws


def _scene_stats(
    corpus_path: Path,
    patterns: list[PatternQuery],
    complexity_config: ComplexityConfig,
    jobs: int,
) -> Iterator[tuple[str, str, tuple[float, float, float]]]:
    """(scene_id, signature key, raw complexity triple) per corpus line."""
    with open(corpus_path, "r", encoding="utf-8") as handle:
        items = [(no, line) for no, line in enumerate(handle, start=1) if line.strip()]
    if jobs <= 1 or len(items) < 2:
        _worker_init(patterns, complexity_config)
        for item in items:
            yield _worker_scene_stats(item)
        return
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_worker_init, initargs=(patterns, complexity_config)
    ) as pool:
        yield from pool.map(_worker_scene_stats, items, chunksize=64)


def _default_jobs() -> int:
    return os.cpu_count() or 1


# --- CLI ----------------------------------------------------------------------


@click.group()
@click.version_option(version=__version__)
def cli() -> None:
    """Scene-graph sub-scene coverage, complexity, and competence analytics."""


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=None, help="worker processes (default: all cores)")
def generate(spec_path: str, out_dir: str, jobs: Optional[int]) -> None:
    """Generate a synthetic corpus plus its ground-truth manifest."""
    try:
        spec_data = json.loads(Path(spec_path).read_text(encoding="utf-8"))
        spec = GeneratorSpec.from_dict(spec_data)
    except (json.JSONDecodeError, InvalidSpecError) as exc:
        raise click.UsageError(f"invalid generator spec: {exc}") from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.ndjson"
    manifest_path = out / "manifest.json"
    try:
        manifest = write_corpus(
            spec, corpus_path, manifest_path, jobs=jobs if jobs else _default_jobs()
        )
    except BuildError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    config = AnalysisConfig()
    _write_run_manifest(
        out,
        "generate",
        {"spec": Path(spec_path)},
        config.digest(),
        catalog_hash(config.patterns()),
        ["corpus.ndjson", "manifest.json"],
    )
    click.echo(f"wrote {len(manifest['scenes'])} scenes to {corpus_path}")


@cli.command()
@click.argument("snapshots", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def build(snapshots: str, config_path: Optional[str], out_dir: str) -> None:
    """Build scene graphs from WorldSnapshot JSON and write a corpus."""
    config = _load_analysis_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.ndjson"
    reports = []
    count = 0
    try:
        with open(corpus_path, "w", encoding="utf-8") as handle:
            for snapshot in load_snapshots(snapshots):
                graph, report = build_scene_with_report(snapshot, config.build)
                handle.write(scene_to_json(graph) + "\n")
                count += 1
                if report.dropped_actors or report.dropped_crosswalks:
                    reports.append(
                        {
                            "scene_id": graph.scene_id,
                            "dropped_actors": [list(item) for item in report.dropped_actors],
                            "dropped_crosswalks": report.dropped_crosswalks,
                        }
                    )
    except (SchemaViolationError, BuildError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    (out / "build_report.json").write_text(
        json.dumps({"scenes": count, "placement": reports}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(
        out,
        "build",
        {"snapshots": Path(snapshots)},
        config.digest(),
        catalog_hash(config.patterns()),
        ["corpus.ndjson", "build_report.json"],
    )
    click.echo(f"built {count} scenes to {corpus_path}")


def _element_counts(signature_keys: Iterable[str]) -> dict[str, int]:
    counts = {name: 0 for name in PATTERN_NAMES}
    counts[UNKNOWN_KEY] = 0
    for key in signature_keys:
        if key == UNKNOWN_KEY:
            counts[UNKNOWN_KEY] += 1
            continue
        for name in key.split("+"):
            counts[name] += 1
    return counts


@cli.command()
@click.argument("train_corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", "n_override", type=int, default=None, help="fixed n, overriding the policy")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=None)
def analyze(
    train_corpus: str,
    config_path: Optional[str],
    n_override: Optional[int],
    out_dir: str,
    jobs: Optional[int],
) -> None:
    """Index sub-scene signatures and calibrate complexity on a corpus."""
    config = _load_analysis_config(config_path)
    try:
        patterns = config.patterns()
    except DslError as exc:
        click.echo(f"error: catalog does not validate: {exc}", err=True)
        sys.exit(1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    keys: list[str] = []
    raws: list[tuple[float, float, float]] = []
    try:
        for scene_id, key, raw in _scene_stats(
            Path(train_corpus), patterns, config.complexity,
            jobs if jobs is not None else _default_jobs(),
        ):
            keys.append(key)
            raws.append(raw)
    except SchemaViolationError as exc:
        click.echo(f"error: {train_corpus}: {exc}", err=True)
        sys.exit(1)

    fixed_n = n_override if n_override is not None else config.fixed_n
    try:
        index = CoverageIndex.from_signature_keys(
            keys,
            n_policy=config.n_policy if fixed_n is None else "fixed",
            fixed_n=fixed_n,
        )
        calibration = calibrate(raws, config.complexity)
    except (EmptyCorpusError, MetricsError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    model = AnalysisModel(
        index=index, calibration=calibration, catalog_hash=catalog_hash(patterns)
    )
    save_model(model, out / "model.json")

    element_counts = _element_counts(keys)
    with open(out / "counts.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["scope", "key", "count"])
        for name in list(PATTERN_NAMES) + [UNKNOWN_KEY]:
            writer.writerow(["element", name, element_counts[name]])
        for key in sorted(index.counts):
            writer.writerow(["composite", key, index.counts[key]])

    composite_keys = sorted(k for k in index.counts if k != UNKNOWN_KEY)
    with open(out / "coverage_vs_n.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["n", "signature", "coverage"])
        for n in config.n_grid:
            trial = index.with_n(n)
            values = [coverage(trial, key) for key in composite_keys]
            if values:
                writer.writerow([n, "__mean__", _fmt(sum(values) / len(values))])
            for key in sorted(index.counts):
                writer.writerow([n, key, _fmt(coverage(trial, key))])

    _write_run_manifest(
        out,
        "analyze",
        {"train_corpus": Path(train_corpus)},
        config.digest(),
        model.catalog_hash,
        ["model.json", "counts.csv", "coverage_vs_n.csv"],
    )
    click.echo(
        f"analyzed {len(keys)} scenes: {len(index.counts)} signatures, n={index.n}"
    )


def _quantile_summary(values: Sequence[float]) -> dict:
    ordered = sorted(values)
    q1, q2, q3 = statistics.quantiles(ordered, n=4, method="inclusive") if len(ordered) > 1 else (
        ordered[0], ordered[0], ordered[0],
    )
    return {
        "min": float(ordered[0]),
        "p25": float(q1),
        "p50": float(q2),
        "p75": float(q3),
        "max": float(ordered[-1]),
        "mean": float(sum(ordered) / len(ordered)),
    }


@cli.command()
@click.argument("eval_corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=None)
def score(
    eval_corpus: str,
    model_path: str,
    config_path: Optional[str],
    out_dir: str,
    jobs: Optional[int],
) -> None:
    """Score scenes against a trained model: coverage, complexity, competence."""
    config = _load_analysis_config(config_path)
    patterns = config.patterns()
    try:
        model = load_model(Path(model_path))
    except MetricsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    active_hash = catalog_hash(patterns)
    if model.catalog_hash != active_hash:
        click.echo(
            "error: catalog mismatch: the model was built with a different pattern catalog "
            f"({model.catalog_hash[:12]} != {active_hash[:12]})",
            err=True,
        )
        sys.exit(1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows: list[tuple] = []
    try:
        for scene_id, key, raw in _scene_stats(
            Path(eval_corpus), patterns, model.calibration.config,
            jobs if jobs is not None else _default_jobs(),
        ):
            c1, c2, c3 = (normalize(raw[i], i, model.calibration) for i in range(3))
            cplx = complexity(c1, c2, c3)
            cov = coverage(model.index, key)
            rows.append((scene_id, key, cov, c1, c2, c3, cplx, competence(cov, cplx)))
    except SchemaViolationError as exc:
        click.echo(f"error: {eval_corpus}: {exc}", err=True)
        sys.exit(1)
    if not rows:
        click.echo("error: eval corpus is empty", err=True)
        sys.exit(1)
    rows.sort(key=lambda r: r[0])

    with open(out / "report.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["scene_id", "signature", "coverage", "c1", "c2", "c3", "complexity", "competence"]
        )
        for row in rows:
            writer.writerow([row[0], row[1]] + [_fmt(v) for v in row[2:]])

    summary = {
        "scenes": len(rows),
        "unknown_scenes": sum(1 for row in rows if row[1] == UNKNOWN_KEY),
        "metrics": {
            name: _quantile_summary([row[i] for row in rows])
            for i, name in (
                (2, "coverage"), (3, "c1"), (4, "c2"), (5, "c3"),
                (6, "complexity"), (7, "competence"),
            )
        },
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_run_manifest(
        out,
        "score",
        {"eval_corpus": Path(eval_corpus), "model": Path(model_path)},
        config.digest(),
        model.catalog_hash,
        ["report.csv", "summary.json"],
    )
    click.echo(f"scored {len(rows)} scenes to {out / 'report.csv'}")


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Sample correlation and two-sided p-value (t distribution, n-2 dof)."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    sxx = sum((x - mean_x) ** 2 for x in xs)
    syy = sum((y - mean_y) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise InsufficientOverlapError("a joined column is constant; correlation undefined")
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    from scipy import stats

    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, p


@cli.command()
@click.argument("report_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("metric_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--metric-column", default="metric", show_default=True)
@click.option("--report-column", default="competence", show_default=True)
def correlate(
    report_csv: str, metric_csv: str, metric_column: str, report_column: str
) -> None:
    """Pearson correlation between competence and an external per-scene metric."""

    def read_column(path: str, column: str) -> dict[str, float]:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise click.UsageError(f"{path}: missing column {column!r}")
            if "scene_id" not in reader.fieldnames:
                raise click.UsageError(f"{path}: missing column 'scene_id'")
            return {row["scene_id"]: float(row[column]) for row in reader}

    left = read_column(report_csv, report_column)
    right = read_column(metric_csv, metric_column)
    joined = sorted(set(left) & set(right))
    if len(joined) < 3:
        click.echo(
            f"error: insufficient overlap: only {len(joined)} scene ids in common", err=True
        )
        sys.exit(1)
    try:
        r, p = pearson([left[k] for k in joined], [right[k] for k in joined])
    except InsufficientOverlapError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"r": float(_fmt(r)), "p_value": float(_fmt(p)), "rows": len(joined)}))


@cli.group()
def patterns() -> None:
    """Pattern catalog utilities."""


@patterns.command("check")
@click.argument("files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def patterns_check(files: tuple[str, ...], config_path: Optional[str]) -> None:
    """Parse and validate pattern files (default: the active catalog)."""
    failures = 0
    if files:
        for path in files:
            try:
                query = parse(Path(path).read_text(encoding="utf-8"))
            except DslError as exc:
                click.echo(f"FAIL {path}: {exc}")
                failures += 1
                continue
            click.echo(f"OK {query.name} ({path})")
    else:
        config = _load_analysis_config(config_path)
        try:
            for query in config.patterns():
                click.echo(f"OK {query.name}")
        except DslError as exc:
            click.echo(f"FAIL {exc}")
            failures += 1
    if failures:
        click.echo(f"{failures} pattern(s) failed validation", err=True)
        sys.exit(1)


def main() -> None:
    cli(prog_name="subscenes")


if __name__ == "__main__":
    main()
