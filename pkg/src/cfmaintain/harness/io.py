"""CSV/TSV writers and plot-ready validity series."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .config import format_config

PROVENANCE = ("stream", "model", "method", "repeat", "seed")
METRICS = ("validity", "knn", "kde", "l2", "active", "retired")

SCHEMAS: Dict[str, Sequence[str]] = {
    "checkpoints.csv": PROVENANCE + ("checkpoint", "t") + METRICS,
    "final.csv": PROVENANCE + METRICS,
    "runtime.csv": PROVENANCE + ("schedule", "seconds"),
    "timing.csv": PROVENANCE + ("checkpoint", "seconds"),
    "ablation.csv": ("lambda_u", "p_validity", "p_knn", "p_l2",
                     "vp_validity", "vp_knn", "vp_l2"),
}


def format_value(value) -> str:
    """Floats at 6 significant digits; absent (None / non-finite) values are empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}" if math.isfinite(value) else ""
    return str(value)


def parse_value(text: str):
    if text == "":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def write_csv(path, rows: Iterable[dict], columns: Sequence[str], delimiter: str = ",") -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    return path


def read_csv(path, delimiter: str = ",") -> List[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: parse_value(v) for k, v in row.items()}
                for row in csv.DictReader(fh, delimiter=delimiter)]


def write_artifacts(art, out_dir) -> Dict[str, Path]:
    """Write every non-empty table plus the seed log, config snapshot and diagnostics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    tables = {"checkpoints.csv": art.checkpoints, "final.csv": art.final,
              "runtime.csv": art.runtime, "timing.csv": art.timing,
              "ablation.csv": art.ablation}
    for name, rows in tables.items():
        if rows:
            written[name] = write_csv(out / name, rows, SCHEMAS[name])
    if art.seeds:
        written["seeds.csv"] = write_csv(out / "seeds.csv", art.seeds,
                                         ("stream", "model", "repeat", "seed"))
    if art.configs:
        snapshot = out / "config.snapshot"
        snapshot.write_text("\n".join(format_config(c) for c in art.configs))
        written["config.snapshot"] = snapshot
    if art.diagnostics:
        diag = out / "diagnostics.log"
        diag.write_text("".join(f"{line}\n" for line in art.diagnostics))
        written["diagnostics.log"] = diag
    return written


def validity_series(checkpoint_rows: Sequence[dict]) -> Dict[tuple, List[dict]]:
    """Per ``(stream, model, method)``: mean and std of validity at each checkpoint.

    The std is the population std over repeats (0 for a single repeat);
    repeats with an absent validity are skipped.
    """
    groups: Dict[tuple, Dict[int, List[dict]]] = {}
    for r in checkpoint_rows:
        key = (r["stream"], r["model"], r["method"])
        groups.setdefault(key, {}).setdefault(int(r["checkpoint"]), []).append(r)
    series = {}
    for key, by_cp in groups.items():
        points = []
        for cp in sorted(by_cp):
            vals = [r["validity"] for r in by_cp[cp] if r["validity"] is not None]
            points.append({"checkpoint": cp, "t": by_cp[cp][0]["t"],
                           "mean": float(np.mean(vals)) if vals else None,
                           "std": float(np.std(vals)) if vals else None,
                           "n": len(vals)})
        series[key] = points
    return series


def emit_plot_series(checkpoint_rows: Sequence[dict], out_dir,
                     svg: bool = False) -> List[Path]:
    """Write one TSV of ``checkpoint, t, mean, std, n`` per (stream, model, method)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = validity_series(checkpoint_rows)
    paths = []
    for (stream, model, method), points in series.items():
        paths.append(write_csv(out / f"validity_{stream}_{model}_{method}.tsv", points,
                               ("checkpoint", "t", "mean", "std", "n"), delimiter="\t"))
    if svg:
        combos = sorted({(s, m) for s, m, _ in series})
        for stream, model in combos:
            paths.append(_render_svg({k[2]: v for k, v in series.items()
                                      if k[:2] == (stream, model)},
                                     out / f"validity_{stream}_{model}.svg",
                                     f"{stream} / {model}"))
    return paths


def _render_svg(by_method: Dict[str, List[dict]], path: Path, title: str) -> Optional[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for method, points in sorted(by_method.items()):
        pts = [p for p in points if p["mean"] is not None]
        t = np.array([p["t"] for p in pts])
        mean = np.array([p["mean"] for p in pts])
        std = np.array([p["std"] for p in pts])
        ax.plot(t, mean, marker="o", ms=3, label=method)
        ax.fill_between(t, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("streamed samples")
    ax.set_ylabel("validity (active CFEs)")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
