"""ATR-versus-delay figures from ``compare`` CSV files."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SERIES = (
    ("vlf", "VLF bound", "-"),
    ("approx", "approximation", "--"),
    ("nofb", "no feedback", ":"),
)


class PlotError(ValueError):
    pass


def read_compare_csv(path) -> tuple[str, list[dict]]:
    """Rows of a compare CSV with numeric fields parsed; empty cells become ``None``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        unit = "bits" if "atr_vlf_bits" in fields else "nats" if "atr_vlf_nats" in fields else None
        if unit is None:
            raise PlotError(f"{path}: not a compare CSV (no atr_vlf column)")
        rows = []
        for raw in reader:
            row = {"L": int(raw["L"]), "d": int(raw["d"]), "feasible": raw["feasible"] == "1"}
            for key in ("vlf", "approx", "nofb"):
                cell = raw[f"atr_{key}_{unit}"]
                row[key] = float(cell) if cell != "" else None
            rows.append(row)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return unit, rows


def render_svg(unit: str, rows: list[dict]) -> bytes:
    ylabel = "ATR [b/s/Hz]" if unit == "bits" else "ATR [nats/symbol]"
    with plt.rc_context({"svg.hashsalt": "vlfatr", "svg.fonttype": "path", "font.family": "DejaVu Sans"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for i, d in enumerate(sorted({r["d"] for r in rows})):
            sub = sorted((r for r in rows if r["d"] == d), key=lambda r: r["L"])
            for key, label, style in SERIES:
                pts = [(r["L"], r[key]) for r in sub if r[key] is not None]
                if not pts:
                    continue
                xs, ys = zip(*pts)
                ax.plot(xs, ys, style, color=f"C{i % 10}", label=f"{label}, d={d}")
        ax.set_xscale("log")
        ax.set_xlabel("delay constraint L [symbols]")
        ax.set_ylabel(ylabel)
        ax.set_ylim(bottom=0.0)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def plot_csv(csv_path, svg_path) -> Path:
    unit, rows = read_compare_csv(csv_path)
    out = Path(svg_path)
    out.write_bytes(render_svg(unit, rows))
    return out
