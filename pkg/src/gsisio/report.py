"""Run outputs: delimited trace files, envelope plots, figure rendering.

The CSV schema has one row per step k = 1 .. horizon and columns

    k,
    x_i, x_i_upper, x_i_lower        for each state i,
    d_j, d_j_upper, d_j_lower        for each unknown input j
                                     (true value and estimate of d_{k-1}),
    width_x, width_d, delta_x, delta_d, err_x, err_d

with every number rendered through %.12g, comma separated, LF line
endings. The SVG emitter writes self-contained SVG 1.1 documents with
one polyline vertex per plotted step.
"""

from __future__ import annotations

import numpy as np

from .simulate import RunTrace

__all__ = [
    "csv_header",
    "emit_csv",
    "emit_svg_plots",
    "render_figures",
]


def _fmt(value: float) -> str:
    return f"{float(value):.12g}"


def csv_header(n: int, p: int) -> str:
    cols = ["k"]
    for i in range(1, n + 1):
        cols += [f"x{i}", f"x{i}_upper", f"x{i}_lower"]
    for j in range(1, p + 1):
        cols += [f"d{j}", f"d{j}_upper", f"d{j}_lower"]
    cols += ["width_x", "width_d", "delta_x", "delta_d", "err_x", "err_d"]
    return ",".join(cols)


def emit_csv(trace: RunTrace, path: str) -> None:
    truth = trace.truth
    n = truth.x.shape[1]
    p = truth.d.shape[1]
    lines = [csv_header(n, p)]
    for k in range(1, trace.horizon + 1):
        row = [_fmt(k)]
        for i in range(n):
            row += [
                _fmt(truth.x[k, i]),
                _fmt(trace.x_upper[k, i]),
                _fmt(trace.x_lower[k, i]),
            ]
        for j in range(p):
            row += [
                _fmt(truth.d[k - 1, j]),
                _fmt(trace.d_upper[k, j]),
                _fmt(trace.d_lower[k, j]),
            ]
        row += [
            _fmt(trace.width_x[k]),
            _fmt(trace.width_d[k]),
            _fmt(trace.delta_x[k]),
            _fmt(trace.delta_d[k]),
            _fmt(trace.err_x[k]),
            _fmt(trace.err_d[k]),
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_WIDTH = 640
_HEIGHT = 400
_MARGIN_L = 54
_MARGIN_R = 12
_MARGIN_T = 14
_MARGIN_B = 32

_PALETTE = {
    "truth": "#1f4e79",
    "upper": "#c0392b",
    "lower": "#27ae60",
    "err_x": "#1f4e79",
    "width_x": "#c0392b",
    "delta_x": "#8e44ad",
    "err_d": "#16a085",
    "width_d": "#d35400",
    "delta_d": "#7f8c8d",
}


class _Chart:
    """Linear-scale line chart with a fixed frame."""

    def __init__(self, series: dict[str, tuple[np.ndarray, np.ndarray]]):
        self.series = series
        xs = np.concatenate([s[0] for s in series.values()])
        ys = np.concatenate([s[1] for s in series.values()])
        ys = ys[np.isfinite(ys)]
        if ys.size == 0:
            ys = np.array([0.0, 1.0])
        self.x_min = float(np.min(xs))
        self.x_max = float(np.max(xs)) or 1.0
        y_lo, y_hi = float(np.min(ys)), float(np.max(ys))
        pad = 0.05 * (y_hi - y_lo or 1.0)
        self.y_min = y_lo - pad
        self.y_max = y_hi + pad

    def sx(self, x: float) -> float:
        span = self.x_max - self.x_min or 1.0
        return _MARGIN_L + (x - self.x_min) / span * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def sy(self, y: float) -> float:
        span = self.y_max - self.y_min or 1.0
        return _HEIGHT - _MARGIN_B - (y - self.y_min) / span * (
            _HEIGHT - _MARGIN_T - _MARGIN_B
        )

    def render(self, title: str) -> str:
        parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{_WIDTH}" height="{_HEIGHT}" '
            f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_MARGIN_L}" y="{_MARGIN_T}" font-size="12" '
            f'font-family="sans-serif">{title}</text>',
        ]
        x0, y0 = self.sx(self.x_min), self.sy(self.y_min)
        x1, y1 = self.sx(self.x_max), self.sy(self.y_max)
        parts.append(
            f'<path d="M {x0:.2f} {y1:.2f} L {x0:.2f} {y0:.2f} '
            f'L {x1:.2f} {y0:.2f}" stroke="#333333" fill="none"/>'
        )
        parts.append(
            f'<text x="{x0:.2f}" y="{_HEIGHT - 10}" font-size="10" '
            f'font-family="sans-serif">{self.x_min:g}</text>'
        )
        parts.append(
            f'<text x="{x1 - 24:.2f}" y="{_HEIGHT - 10}" font-size="10" '
            f'font-family="sans-serif">{self.x_max:g}</text>'
        )
        parts.append(
            f'<text x="4" y="{y0:.2f}" font-size="10" '
            f'font-family="sans-serif">{self.y_min:.3g}</text>'
        )
        parts.append(
            f'<text x="4" y="{y1 + 10:.2f}" font-size="10" '
            f'font-family="sans-serif">{self.y_max:.3g}</text>'
        )
        legend_y = _MARGIN_T + 14
        for name, (xs, ys) in self.series.items():
            keep = np.isfinite(ys)
            pts = " ".join(
                f"{self.sx(float(x)):.2f},{self.sy(float(y)):.2f}"
                for x, y in zip(xs[keep], ys[keep])
            )
            color = _PALETTE.get(name, "#555555")
            parts.append(
                f'<polyline id="{name}" points="{pts}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
            parts.append(
                f'<text x="{_WIDTH - 110}" y="{legend_y}" font-size="10" '
                f'font-family="sans-serif" fill="{color}">{name}</text>'
            )
            legend_y += 12
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def emit_svg_plots(trace: RunTrace, prefix: str) -> list[str]:
    """Write envelope and width charts, returning the file paths."""
    truth = trace.truth
    horizon = trace.horizon
    n = truth.x.shape[1]
    p = truth.d.shape[1]
    ks = np.arange(horizon + 1, dtype=float)
    ks1 = np.arange(1, horizon + 1, dtype=float)
    paths = []

    for i in range(n):
        chart = _Chart(
            {
                "upper": (ks, trace.x_upper[:, i]),
                "lower": (ks, trace.x_lower[:, i]),
                "truth": (ks, truth.x[:, i]),
            }
        )
        path = f"{prefix}state{i + 1}.svg"
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(chart.render(f"state x{i + 1}: truth and framers"))
        paths.append(path)

    for j in range(p):
        chart = _Chart(
            {
                "upper": (ks1, trace.d_upper[1:, j]),
                "lower": (ks1, trace.d_lower[1:, j]),
                "truth": (ks1, truth.d[:horizon, j]),
            }
        )
        path = f"{prefix}input{j + 1}.svg"
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(chart.render(f"delayed input d{j + 1}: truth and framers"))
        paths.append(path)

    chart = _Chart(
        {
            "err_x": (ks, trace.err_x),
            "width_x": (ks, trace.width_x),
            "delta_x": (ks, trace.delta_x),
            "err_d": (ks1, trace.err_d[1:]),
            "width_d": (ks1, trace.width_d[1:]),
            "delta_d": (ks1, trace.delta_d[1:]),
        }
    )
    path = f"{prefix}widths.svg"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(chart.render("framer widths, errors and delta bounds"))
    paths.append(path)
    return paths


def render_figures(trace: RunTrace, prefix: str) -> list[str]:
    """Render matplotlib companions to the SVG charts as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    truth = trace.truth
    horizon = trace.horizon
    n = truth.x.shape[1]
    p = truth.d.shape[1]
    ks = np.arange(horizon + 1)
    paths = []

    fig, axes = plt.subplots(n + p, 1, figsize=(8, 2.6 * (n + p)), sharex=True)
    axes = np.atleast_1d(axes)
    for i in range(n):
        ax = axes[i]
        ax.fill_between(
            ks, trace.x_lower[:, i], trace.x_upper[:, i],
            color="#9ecae1", alpha=0.6, label="framer envelope",
        )
        ax.plot(ks, truth.x[:, i], color="#08306b", lw=1.2, label="truth")
        ax.set_ylabel(f"x{i + 1}")
        if i == 0:
            ax.legend(loc="upper right", fontsize=8)
    for j in range(p):
        ax = axes[n + j]
        ax.fill_between(
            ks[1:], trace.d_lower[1:, j], trace.d_upper[1:, j],
            color="#fdd0a2", alpha=0.6, label="framer envelope",
        )
        ax.plot(ks[1:], truth.d[:horizon, j], color="#7f2704", lw=1.2, label="truth")
        ax.set_ylabel(f"d{j + 1}")
    axes[-1].set_xlabel("step k")
    fig.tight_layout()
    path = f"{prefix}state_envelopes.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(ks, trace.delta_x, "--", color="#8e44ad", label="delta_x")
    ax1.plot(ks, trace.width_x, color="#c0392b", label="width_x")
    ax1.plot(ks, trace.err_x, color="#1f4e79", label="err_x")
    ax1.set_ylabel("state")
    ax1.legend(fontsize=8)
    ax2.plot(ks[1:], trace.delta_d[1:], "--", color="#7f8c8d", label="delta_d")
    ax2.plot(ks[1:], trace.width_d[1:], color="#d35400", label="width_d")
    ax2.plot(ks[1:], trace.err_d[1:], color="#16a085", label="err_d")
    ax2.set_ylabel("input")
    ax2.set_xlabel("step k")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    path = f"{prefix}width_bounds.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths
