"""Minimal SVG emitters for the report bundle.

Each renderer is a pure function of the machine-readable analysis payload
(the parsed JSON written next to the chart), so charts regenerate
byte-identically from those files alone.
"""

from __future__ import annotations

CELL = 34
MARGIN = 70


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def histogram_svg(distributions: dict) -> str:
    """Per-category score histograms, one panel row per level."""
    levels = sorted(distributions)
    categories = sorted(next(iter(distributions.values()))) if distributions else []
    panel_w, panel_h, gap = 150, 90, 16
    width = MARGIN + len(categories) * (panel_w + gap)
    height = MARGIN + len(levels) * (panel_h + 2 * gap)
    body = []
    for row, level in enumerate(levels):
        y0 = 30 + row * (panel_h + 2 * gap)
        body.append(f'<text x="8" y="{y0 + panel_h / 2}" transform="rotate(-90 8 {y0 + panel_h / 2})" '
                    f'text-anchor="middle">{level}</text>')
        for col, category in enumerate(categories):
            panel = distributions[level][category]
            x0 = MARGIN + col * (panel_w + gap)
            if row == 0:
                body.append(f'<text x="{x0 + panel_w / 2}" y="18" text-anchor="middle">{category}</text>')
            body.append(f'<rect x="{x0}" y="{y0}" width="{panel_w}" height="{panel_h}" '
                        f'fill="none" stroke="#999"/>')
            values = {float(k): v for k, v in panel["values"].items()}
            top = max(values.values(), default=1)
            lo, hi = 0.0, 6.0
            for value in sorted(values):
                count = values[value]
                bar_h = panel_h * count / top
                bx = x0 + (value - lo) / (hi - lo) * (panel_w - 4)
                body.append(f'<rect x="{_fmt(bx)}" y="{_fmt(y0 + panel_h - bar_h)}" width="3" '
                            f'height="{_fmt(bar_h)}" fill="#4878a8"/>')
            mean = panel["mean"]
            if mean is not None:
                mx = x0 + (mean - lo) / (hi - lo) * (panel_w - 4)
                body.append(f'<line x1="{_fmt(mx)}" y1="{y0}" x2="{_fmt(mx)}" y2="{y0 + panel_h}" '
                            f'stroke="#c0392b"/>')
                body.append(f'<text x="{x0 + panel_w / 2}" y="{y0 + panel_h + 13}" '
                            f'text-anchor="middle">mean {_fmt(round(mean, 2))}</text>')
    return _svg(width, height, body)


def _heat_color(r: float) -> str:
    # blue (negative) through white to red (positive)
    t = max(-1.0, min(1.0, r))
    if t >= 0:
        other = round(255 * (1 - t))
        return f"rgb(255,{other},{other})"
    other = round(255 * (1 + t))
    return f"rgb({other},{other},255)"


def heatmap_svg(matrix_payload: dict) -> str:
    """Correlation heatmap with cell labels; undefined cells are hatched grey."""
    categories = matrix_payload["categories"]
    matrix = matrix_payload["matrix"]
    n = len(categories)
    width = MARGIN + n * CELL + 20
    height = MARGIN + n * CELL + 20
    body = []
    for i, name in enumerate(categories):
        cx = MARGIN + i * CELL + CELL / 2
        body.append(f'<text x="{cx}" y="{MARGIN - 8}" text-anchor="middle">{name[:4]}</text>')
        cy = MARGIN + i * CELL + CELL / 2 + 4
        body.append(f'<text x="{MARGIN - 8}" y="{cy}" text-anchor="end">{name}</text>')
    for i in range(n):
        for j in range(n):
            x = MARGIN + j * CELL
            y = MARGIN + i * CELL
            r = matrix[i][j]
            if r is None:
                body.append(f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                            f'fill="#ddd" stroke="#fff"/>')
                label = "n/a"
            else:
                body.append(f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                            f'fill="{_heat_color(r)}" stroke="#fff"/>')
                label = f"{r:.2f}"
            body.append(f'<text x="{x + CELL / 2}" y="{y + CELL / 2 + 4}" '
                        f'text-anchor="middle" font-size="9">{label}</text>')
    return _svg(width, height, body)


def scatter_svg(scatter_payload: dict) -> str:
    """Predicted vs true scores for one held-out split."""
    truth = scatter_payload["true"]
    predicted = scatter_payload["predicted"]
    size = 320
    lo = min(min(truth), min(predicted), 0.0)
    hi = max(max(truth), max(predicted), 6.0)
    span = hi - lo or 1.0

    def sx(v): return MARGIN + (v - lo) / span * size
    def sy(v): return MARGIN + size - (v - lo) / span * size

    body = [
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{size}" height="{size}" fill="none" stroke="#999"/>',
        f'<line x1="{_fmt(sx(lo))}" y1="{_fmt(sy(lo))}" x2="{_fmt(sx(hi))}" y2="{_fmt(sy(hi))}" '
        f'stroke="#bbb" stroke-dasharray="4 3"/>',
        f'<text x="{MARGIN + size / 2}" y="{MARGIN + size + 30}" text-anchor="middle">true score</text>',
        f'<text x="20" y="{MARGIN + size / 2}" transform="rotate(-90 20 {MARGIN + size / 2})" '
        f'text-anchor="middle">predicted</text>',
    ]
    for t, p in zip(truth, predicted):
        body.append(f'<circle cx="{_fmt(sx(t))}" cy="{_fmt(sy(p))}" r="2.5" '
                    f'fill="#4878a8" fill-opacity="0.6"/>')
    r = scatter_payload.get("r")
    if r is not None:
        body.append(f'<text x="{MARGIN + 6}" y="{MARGIN + 14}">r = {r:.3f}</text>')
    return _svg(MARGIN + size + 40, MARGIN + size + 40, body)
