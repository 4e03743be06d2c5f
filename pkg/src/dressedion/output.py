"""Deterministic run artifacts: CSV, JSON, SVG plots, checksum manifest.

CSV and JSON bytes depend only on the result values (shortest-roundtrip
float formatting, fixed column order), so identical config+seed gives
identical files at any worker count.  SVG is a derived convenience and is
only guaranteed to be well formed.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .config import RunConfig, serialize_config
from .experiments import ExperimentResult

CSV_BASE_COLUMNS = ("x", "mean", "stderr", "counts")


def _fmt(value) -> str:
    # repr of a float is its shortest round-trip decimal: stable bytes
    return repr(float(value))


def csv_bytes(result: ExperimentResult) -> bytes:
    """Canonical CSV: x, mean, stderr, counts, then extra series by name."""
    series = {k: np.asarray(v) for k, v in result.series.items()}
    counts = series.pop("counts", None)
    extras = sorted(series)
    lines = [",".join(CSV_BASE_COLUMNS + tuple(extras))]
    for i in range(len(result.x)):
        row = [_fmt(result.x[i]), _fmt(result.y[i]),
               _fmt(result.y_stderr[i]),
               "" if counts is None else str(int(counts[i]))]
        row.extend(_fmt(series[k][i]) for k in extras)
        lines.append(",".join(row))
    return ("\n".join(lines) + "\n").encode("ascii")


def _config_echo(config: RunConfig) -> dict:
    # output location and parallelism cannot change any computed value,
    # so the echo omits them and identical physics gives identical bytes
    doc = serialize_config(config)
    for key in ("out", "workers"):
        doc.pop(key, None)
    return doc


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def json_bytes(result: ExperimentResult, config: RunConfig | None = None) -> bytes:
    """Full result document: curve, series, fit block, meta, config echo."""
    fit = None
    if result.fit is not None:
        fit = {"model": result.fit.model,
               "params": _json_safe(dict(result.fit.params)),
               "sigma": _json_safe(dict(result.fit.sigma)),
               "residual_norm": result.fit.residual_norm,
               "converged": result.fit.converged,
               "n_points": result.fit.n_points,
               "flags": list(result.fit.flags)}
    doc = {"name": result.name,
           "x_label": result.x_label,
           "x": _json_safe(result.x),
           "mean": _json_safe(result.y),
           "stderr": _json_safe(result.y_stderr),
           "series": _json_safe(dict(result.series)),
           "fit": fit,
           "meta": _json_safe(result.meta)}
    if config is not None:
        doc["config"] = _json_safe(_config_echo(config))
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("ascii")


def write_svg(path, result: ExperimentResult) -> None:
    """Line plot of the main curve with any extra series overlaid."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # salt the generated element ids so reruns give identical bytes
    matplotlib.rcParams["svg.hashsalt"] = "dressedion"
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if np.any(np.asarray(result.y_stderr) > 0):
        ax.errorbar(result.x, result.y, yerr=result.y_stderr, fmt="o-",
                    ms=3, lw=1, capsize=2, label="mean")
    else:
        ax.plot(result.x, result.y, "o-", ms=3, lw=1, label="mean")
    for name in sorted(result.series):
        if name in ("counts",) or name.endswith("_stderr"):
            continue
        values = np.asarray(result.series[name])
        if values.shape != np.shape(result.x) or name == "fidelity":
            continue
        ax.plot(result.x, values, lw=1, alpha=0.7, label=name)
    if result.fit is not None and result.fit.converged:
        dense = np.linspace(float(np.min(result.x)), float(np.max(result.x)),
                            400)
        ax.plot(dense, result.fit.evaluate(dense), "k--", lw=0.8, label="fit")
    ax.set_xlabel(result.x_label)
    ax.set_ylabel("population")
    ax.set_title(result.name)
    if len(ax.get_legend_handles_labels()[0]) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_artifacts(out_dir, result: ExperimentResult,
                    config: RunConfig) -> dict:
    """Write the requested formats plus the manifest; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = config.experiment
    written = {}
    if "csv" in config.formats:
        path = out / f"{stem}.csv"
        path.write_bytes(csv_bytes(result))
        written[path.name] = path
    if "json" in config.formats:
        path = out / f"{stem}.json"
        path.write_bytes(json_bytes(result, config))
        written[path.name] = path
    if "svg" in config.formats:
        path = out / f"{stem}.svg"
        write_svg(path, result)
        written[path.name] = path
    manifest = out / "manifest.json"
    manifest.write_bytes(manifest_bytes(config, written))
    written[manifest.name] = manifest
    return written


def manifest_bytes(config: RunConfig, artifacts: dict) -> bytes:
    """Config echo, seed, and sha256 of every artifact; no timestamps."""
    entries = {}
    for name in sorted(artifacts):
        data = Path(artifacts[name]).read_bytes()
        entries[name] = {"sha256": hashlib.sha256(data).hexdigest(),
                         "bytes": len(data)}
    doc = {"experiment": config.experiment,
           "seed": config.seed,
           "config": _json_safe(_config_echo(config)),
           "artifacts": entries}
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("ascii")
