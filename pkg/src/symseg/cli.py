"""Command-line harness: dataset generation, segmentation runs, report
aggregation, and seed/scenario grids.

Commands
--------
generate   simulate a labeled stream and write CSV (+ JSON sidecar)
run        segment one stream (simulated or external CSV) and emit a trace
report     aggregate summary JSON files produced by ``run``
grid       run a scenario x SNR x seed grid in parallel worker processes

All randomness is seed-controlled; identical invocations produce identical
artifacts.  Numeric defaults follow the benchmark configuration and can be
overridden per flag or through a flat ``key=value`` config file (explicit
flags beat the file, the file beats built-in defaults).
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .classifier import CONCENTRATION_MODES, CRP_MODES, ClassifierConfig
from .pipeline import SCENARIOS, generate_scenario, run_pipeline, run_scenario, scenario_regimes
from .scoring import class_transition_counts


def parse_snr(text: str) -> float:
    """Parse an SNR flag value: 'inf' or a positive real."""
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise click.BadParameter(f"SNR must be 'inf' or a positive real, got {text!r}")
    if value <= 0:
        raise click.BadParameter("SNR must be positive")
    return value


def load_config_file(path: str) -> dict:
    """Read a flat key=value config file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.ClickException(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_CONFIG_FIELD_TYPES = {
    "epsilon": float,
    "kappa": float,
    "delta": int,
    "nu": float,
    "depth": int,
    "alphabet_size": int,
    "rng_seed": int,
    "concentration_mode": str,
    "crp_mode": str,
    "argmax_assign": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "score_margin": float,
    "maturity_allowance": float,
}


def build_classifier_config(ctx: click.Context, params: dict) -> ClassifierConfig:
    """Merge defaults, config file, and explicit flags into a ClassifierConfig."""
    values = {}
    config_path = params.get("config")
    if config_path:
        file_values = load_config_file(config_path)
        for key, text in file_values.items():
            if key in _CONFIG_FIELD_TYPES:
                values[key] = _CONFIG_FIELD_TYPES[key](text)
            # Unknown keys are left for the caller (e.g. scenario/snr in files).
    flag_to_field = {
        "epsilon": "epsilon",
        "kappa": "kappa",
        "delta": "delta",
        "nu": "nu",
        "depth": "depth",
        "alphabet": "alphabet_size",
        "crp": "crp_mode",
        "seed": "rng_seed",
        "concentration": "concentration_mode",
        "argmax": "argmax_assign",
    }
    for flag, fieldname in flag_to_field.items():
        if flag not in params:
            continue
        source = ctx.get_parameter_source(flag)
        if source is not None and source.name != "DEFAULT":
            values[fieldname] = params[flag]
        elif fieldname not in values:
            values[fieldname] = params[flag]
    try:
        return ClassifierConfig(**values)
    except ValueError as exc:
        raise click.ClickException(str(exc))


def write_stream_csv(stream, out_path: Path, scenario: str) -> None:
    """CSV with header t,x,epoch,label plus a .json sidecar of the config."""
    regimes = stream.config.get("regimes", [])
    dt_map = stream.config.get("dt", {})
    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "epoch", "label"])
        t = 0.0
        for e in range(stream.epochs):
            label = int(stream.labels[e])
            dt = float(dt_map.get(regimes[label], 0.0)) if regimes else 0.0
            block = stream.samples[e * stream.epoch_length : (e + 1) * stream.epoch_length]
            for x in block:
                writer.writerow([f"{t:.6f}", repr(float(x)), e, label])
                t += dt
    sidecar = dict(stream.config)
    sidecar["scenario"] = scenario
    out_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_stream_csv(path: Path):
    """Load a t,x,epoch,label CSV; label column may be absent or empty."""
    samples, epochs, labels = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["t", "x", "epoch"]:
            raise click.ClickException(f"{path}: expected header t,x,epoch[,label]")
        has_label = len(header) > 3 and header[3].strip().lower() == "label"
        for row_num, row in enumerate(reader, start=2):
            try:
                samples.append(float(row[1]))
                epochs.append(int(row[2]))
                if has_label and len(row) > 3 and row[3] != "":
                    labels.append(int(row[3]))
            except (ValueError, IndexError):
                raise click.ClickException(f"{path}: malformed row {row_num}: {row!r}")
    samples = np.array(samples)
    epochs = np.array(epochs, dtype=np.int64)
    counts = np.bincount(epochs)
    if counts.size == 0 or not np.all(counts == counts[0]):
        raise click.ClickException(f"{path}: epochs must be equal-length and contiguous")
    epoch_length = int(counts[0])
    per_epoch_labels = None
    if labels and len(labels) == len(samples):
        lab = np.array(labels, dtype=np.int64).reshape(-1, epoch_length)
        per_epoch_labels = lab[:, 0]
    return samples, epoch_length, per_epoch_labels


def _result_summary(result, scenario, snr, seed, revised):
    report = result.report
    summary = {
        "scenario": scenario,
        "snr": None if math.isinf(snr) else snr,
        "seed": seed,
        "crp_mode": result.config.crp_mode,
        "revision": revised,
        "classes_pre_revision": result.pre_revision_classes,
        "classes": result.registry.n_classes,
        "wall_time_s": round(result.wall_time_s, 4),
        "config": dataclasses.asdict(result.config),
    }
    if report is not None:
        summary["epoch_error_pct"] = report.epoch_error_pct
        summary["confusion"] = report.confusion.tolist()
        summary["class_to_regime"] = {str(k): v for k, v in report.class_to_regime.items()}
    return summary


def write_trace(result, trace_path: Path) -> None:
    """One JSON line per classified epoch."""
    with trace_path.open("w") as fh:
        for rec in result.records:
            fh.write(
                json.dumps(
                    {
                        "epoch": rec.epoch_id,
                        "scores": [float(s) for s in rec.class_scores],
                        "gamma": rec.gamma,
                        "b": rec.b_used,
                        "posterior": [float(p) for p in rec.posterior],
                        "chosen": rec.chosen,
                        "new_class": rec.new_class_created,
                    }
                )
                + "\n"
            )


@click.group()
def main():
    """Streaming segmentation of non-stationary time series."""


@main.command()
@click.option("--scenario", type=click.Choice(SCENARIOS), default="duffing2", show_default=True)
@click.option("--snr", default="inf", show_default=True, help="'inf' or a positive linear ratio")
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=400, show_default=True)
@click.option("--epoch-length", default=1000, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, writable=True))
def generate(scenario, snr, seed, epochs, epoch_length, out_path):
    """Simulate a labeled stream and write it as CSV + JSON sidecar."""
    snr_value = parse_snr(snr)
    stream = generate_scenario(scenario, snr=snr_value, seed=seed, epochs=epochs, epoch_length=epoch_length)
    write_stream_csv(stream, Path(out_path), scenario)
    click.echo(f"wrote {stream.epochs * stream.epoch_length} samples to {out_path}")


@main.command()
@click.option("--scenario", type=click.Choice(SCENARIOS + ("external-csv",)), default="duffing2", show_default=True)
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), help="input CSV for --scenario external-csv")
@click.option("--snr", default="inf", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=400, show_default=True)
@click.option("--epoch-length", default=1000, show_default=True)
@click.option("--epsilon", default=ClassifierConfig.epsilon, show_default=True)
@click.option("--kappa", default=ClassifierConfig.kappa, show_default=True)
@click.option("--delta", default=ClassifierConfig.delta, show_default=True)
@click.option("--nu", default=ClassifierConfig.nu, show_default=True)
@click.option("--depth", default=ClassifierConfig.depth, show_default=True)
@click.option("--alphabet", default=ClassifierConfig.alphabet_size, show_default=True)
@click.option("--crp", type=click.Choice(CRP_MODES), default=ClassifierConfig.crp_mode, show_default=True)
@click.option("--concentration", type=click.Choice(CONCENTRATION_MODES), default=ClassifierConfig.concentration_mode, show_default=True)
@click.option("--argmax", is_flag=True, default=False, help="argmax assignment instead of sampling")
@click.option("--revise/--no-revise", "revise_flag", default=False, show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="flat key=value config file")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, writable=True), help="summary JSON path (default stdout only)")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False, writable=True), help="per-epoch JSONL trace path")
@click.pass_context
def run(ctx, scenario, in_path, snr, seed, epochs, epoch_length, epsilon, kappa, delta,
        nu, depth, alphabet, crp, concentration, argmax, revise_flag, config, out_path, trace_path):
    """Segment one stream and print a summary JSON to stdout."""
    snr_value = parse_snr(snr)
    cfg = build_classifier_config(ctx, ctx.params)
    if scenario == "external-csv":
        if not in_path:
            raise click.ClickException("--scenario external-csv requires --in")
        samples, epoch_len, labels = read_stream_csv(Path(in_path))
        result = run_pipeline(samples, epoch_len, cfg, labels=labels, revise_classes=revise_flag)
    else:
        result = run_scenario(
            scenario, snr=snr_value, seed=seed, config=cfg,
            revise_classes=revise_flag, epochs=epochs, epoch_length=epoch_length,
        )
    summary = _result_summary(result, scenario, snr_value, seed, revise_flag)
    summary["class_transitions"] = class_transition_counts(result.assignments).tolist()
    text = json.dumps(summary, indent=2)
    click.echo(text)
    if out_path:
        Path(out_path).write_text(text + "\n")
    if trace_path:
        write_trace(result, Path(trace_path))


@main.command()
@click.argument("summaries", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def report(summaries):
    """Aggregate summary JSON files into a mean +/- std table."""
    groups: dict[tuple, list[dict]] = {}
    for path in summaries:
        data = json.loads(Path(path).read_text())
        key = (data.get("scenario"), data.get("snr"), data.get("crp_mode"), data.get("revision"))
        groups.setdefault(key, []).append(data)
    click.echo("scenario,snr,crp,revision,runs,error_mean_pct,error_std_pct,classes_mean,time_mean_s")
    for key in sorted(groups, key=str):
        rows = groups[key]
        errs = [r["epoch_error_pct"] for r in rows if "epoch_error_pct" in r]
        classes = [r["classes"] for r in rows]
        times = [r["wall_time_s"] for r in rows]
        scenario, snr, crp, revision = key
        click.echo(
            f"{scenario},{'inf' if snr is None else snr},{crp},{revision},{len(rows)},"
            f"{np.mean(errs):.2f},{np.std(errs):.2f},{np.mean(classes):.2f},{np.mean(times):.2f}"
            if errs
            else f"{scenario},{'inf' if snr is None else snr},{crp},{revision},{len(rows)},,,{np.mean(classes):.2f},{np.mean(times):.2f}"
        )


def _grid_cell(args):
    scenario, snr, seed, crp_mode, revise_flag = args
    cfg = ClassifierConfig(rng_seed=seed, crp_mode=crp_mode)
    result = run_scenario(scenario, snr=snr, seed=seed, config=cfg, revise_classes=revise_flag)
    return _result_summary(result, scenario, snr, seed, revise_flag)


@main.command()
@click.option("--scenario", "scenarios", type=click.Choice(SCENARIOS), multiple=True, default=("duffing2",), show_default=True)
@click.option("--snr", "snrs", multiple=True, default=("inf",), show_default=True)
@click.option("--seeds", default=10, show_default=True, help="seeds 0..N-1 per cell")
@click.option("--crp", "crps", type=click.Choice(CRP_MODES), multiple=True, default=("adaptive", "classical"), show_default=True)
@click.option("--revise/--no-revise", "revise_flag", default=False, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def grid(scenarios, snrs, seeds, crps, revise_flag, workers, out_dir):
    """Run a scenario x SNR x CRP x seed grid in parallel and aggregate."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [
        (scenario, parse_snr(snr), seed, crp_mode, revise_flag)
        for scenario in scenarios
        for snr in snrs
        for crp_mode in crps
        for seed in range(seeds)
    ]
    results = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for summary in pool.map(_grid_cell, cells):
            results.append(summary)
            tag = (
                f"{summary['scenario']}_snr{summary['snr'] if summary['snr'] is not None else 'inf'}"
                f"_{summary['crp_mode']}_rev{int(summary['revision'])}_seed{summary['seed']}"
            )
            (out / f"{tag}.json").write_text(json.dumps(summary, indent=2) + "\n")
            err = summary.get("epoch_error_pct")
            click.echo(f"{tag}: error={err:.2f}% classes={summary['classes']}")
    (out / "grid.json").write_text(json.dumps(results, indent=2) + "\n")
    click.echo(f"wrote {len(results)} summaries to {out}")


if __name__ == "__main__":
    sys.exit(main())
