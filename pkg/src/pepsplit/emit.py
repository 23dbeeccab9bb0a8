"""CSV and SVG output of rate curves."""

from __future__ import annotations

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Sequence

from .harness import RateCurve

CSV_HEADER = "method,engine,tau,sigma,rate"


def _num(x) -> str:
    return "" if x is None else f"{x:.12g}"


def curves_to_csv(curves: Sequence[RateCurve]) -> str:
    rows = []
    for c in curves:
        for s in c.samples:
            rows.append((c.method, c.series, s.tau, s.sigma, s.rate))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = [CSV_HEADER] + [",".join((m, e, _num(t), _num(sg), _num(r))) for m, e, t, sg, r in rows]
    return "\n".join(lines) + "\n"


def _group(curves: Sequence[RateCurve]) -> Dict[str, List[RateCurve]]:
    groups: Dict[str, List[RateCurve]] = OrderedDict()
    for c in curves:
        groups.setdefault(c.problem_label, []).append(c)
    return groups


def _stem(name: str, label: str) -> str:
    return f"{name}_{label}" if label else name


def write_svg(curves: Sequence[RateCurve], path: Path, axis: str = "log", title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "pepsplit"
    fig, ax = plt.subplots(figsize=(6, 4))
    markers = {"pep": "o", "quad_oracle": "s"}
    for c in sorted(curves, key=lambda c: (c.method, c.series)):
        pts = [(s.tau, s.rate) for s in c.samples if s.rate is not None]
        if not pts:
            continue
        t, r = zip(*pts)
        style = dict(marker=markers[c.engine], linestyle="none", markersize=3) if c.engine in markers \
            else dict(linestyle="-")
        ax.plot(t, r, label=f"{c.method} {c.series}", **style)
    if axis == "log":
        ax.set_xscale("log")
    ax.set_xlabel("step size tau")
    ax.set_ylabel("contraction factor")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit(curves: Sequence[RateCurve], out_dir, name: str, formats=("csv",), axis: str = "log") -> List[Path]:
    """One file per problem section and format; returns the written paths."""
    if not curves:
        raise ValueError("nothing to emit")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, group in _group(curves).items():
        stem = _stem(name, label)
        if "csv" in formats:
            path = out_dir / f"{stem}.csv"
            with open(path, "w", newline="\n") as fh:
                fh.write(curves_to_csv(group))
            written.append(path)
        if "svg" in formats:
            path = out_dir / f"{stem}.svg"
            write_svg(group, path, axis, title=stem)
            written.append(path)
    return written
