"""Static log-log SVG plots of CSV series with reference slopes."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed hash salt keeps SVG element ids stable between runs
matplotlib.rcParams["svg.hashsalt"] = "heatlab"


class PlotError(ValueError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    x: str = "t"
    y: str = "scaled_remainder"
    group: Optional[str] = None
    slopes: Tuple[float, ...] = ()
    logx: bool = True
    logy: bool = True
    title: str = ""


def read_series(path: str | Path, spec: PlotSpec) -> Dict[str, Tuple[List[float], List[float]]]:
    """Columns x and y per group value; parse errors name the line."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty file") from None
        for col in (spec.x, spec.y) + ((spec.group,) if spec.group else ()):
            if col not in header:
                raise PlotError(f"{path}: missing column {col!r} (have {', '.join(header)})")
        ix, iy = header.index(spec.x), header.index(spec.y)
        ig = header.index(spec.group) if spec.group else None
        out: Dict[str, Tuple[List[float], List[float]]] = {}
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise PlotError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                xv, yv = float(row[ix]), float(row[iy])
            except ValueError:
                raise PlotError(f"{path}:{line}: non-numeric value in {spec.x!r} or {spec.y!r}") from None
            key = row[ig] if ig is not None else spec.y
            xs, ys = out.setdefault(key, ([], []))
            xs.append(xv)
            ys.append(yv)
    return out


def plot_series(path: str | Path, out: str | Path, spec: PlotSpec) -> Path:
    data = read_series(path, spec)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    anchor = None
    for key in sorted(data):
        xs, ys = data[key]
        pts = [(a, b) for a, b in zip(xs, ys) if (a > 0 or not spec.logx) and (b > 0 or not spec.logy)]
        if not pts:
            continue
        px, py = zip(*pts)
        label = f"{spec.group}={key}" if spec.group else key
        ax.plot(px, py, marker=".", lw=1.2, label=label)
        if anchor is None:
            anchor = (px, py)
    if anchor is not None:
        px, py = anchor
        x0, x1 = px[len(px) // 2], px[-1]
        y0 = py[len(py) // 2]
        for k in spec.slopes:
            # reference line through the middle of the first series
            ax.plot([x0, x1], [y0, y0 * (x1 / x0) ** k], ls="--", color="gray", lw=0.9)
            ax.annotate(f"slope {k:g}", (x1, y0 * (x1 / x0) ** k), fontsize=8, color="gray")
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel(spec.x)
    ax.set_ylabel(spec.y)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
