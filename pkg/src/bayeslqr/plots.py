"""Minimal SVG line charts for sweep results (no plotting dependency)."""
import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 70, "right": 150, "top": 40, "bottom": 55}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _fmt(v):
    return f"{v:.3g}"


def line_chart(series, title, xlabel, ylabel, log_x=False):
    """SVG text for ``series = {label: [(x, y), ...]}``.

    Points with a non-finite ``y`` break the line. With ``log_x``, points
    with ``x <= 0`` are dropped; this is how a lambda = 0 reference is kept
    off a logarithmic axis.
    """
    def tx(x):
        return math.log10(x) if log_x else x

    pts = {k: [(tx(x), y) for x, y in v if not (log_x and x <= 0)] for k, v in series.items()}
    xs = [x for v in pts.values() for x, _ in v]
    ys = [y for v in pts.values() for _, y in v if math.isfinite(y)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        label = _fmt(10 ** t) if log_x else _fmt(t)
        out.append(f'<line x1="{px(t):.1f}" y1="{MARGIN["top"] + ph}" x2="{px(t):.1f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{label}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(t):.1f}" x2="{MARGIN["left"]}" '
                   f'y2="{py(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(t) + 4:.1f}" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for k, (label, v) in enumerate(pts.items()):
        color = PALETTE[k % len(PALETTE)]
        segment = []
        segments = [segment]
        for x, y in v:
            if math.isfinite(y):
                segment.append(f"{px(x):.1f},{py(y):.1f}")
            elif segment:
                segment = []
                segments.append(segment)
        for seg in segments:
            if len(seg) > 1:
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                           f'points="{" ".join(seg)}"/>')
            for p in seg:
                cx, cy = p.split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 14 + 18 * k
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sweep_charts(result):
    """``{"stability_rate": svg, "median_gap": svg}`` for a sweep result."""
    log_x = result.axis_name == "lambda"
    xlabel = "lambda" if log_x else "T"
    charts = {}
    for key, ylabel in (("stability_rate", "stability rate"),
                        ("median_gap", "median optimality gap")):
        series = {m: list(zip(result.axis, result.column(m, key))) for m in result.methods}
        charts[key] = line_chart(series, f"{ylabel} vs {xlabel}", xlabel, ylabel, log_x=log_x)
    return charts


def write_sweep_charts(result, stem):
    """Write ``<stem>_stability_rate.svg`` and ``<stem>_median_gap.svg``;
    returns the paths.
    """
    paths = []
    for key, svg in sweep_charts(result).items():
        path = f"{stem}_{key}.svg"
        with open(path, "w") as fh:
            fh.write(svg)
        paths.append(path)
    return paths
