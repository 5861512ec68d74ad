"""Tiny deterministic SVG writers for the aggregate figures.

No graphics dependencies and no embedded timestamps: identical data gives
byte-identical files.
"""

from __future__ import annotations

WIDTH = 720
HEIGHT = 420
MARGIN = 60
PALETTE = ("#4878a8", "#e8803c", "#57a05a", "#b85450", "#8966a8", "#767676")


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_esc(title)}</text>',
    ]


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def _axis_box() -> str:
    return (f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#333333"/>')


def _scale(values, lo_pad: float = 0.0):
    lo = min(values)
    hi = max(values)
    if hi == lo:
        hi = lo + 1.0
    lo = min(lo, lo_pad)
    span = hi - lo

    def to_y(v):
        return HEIGHT - MARGIN - (v - lo) / span * (HEIGHT - 2 * MARGIN)

    return to_y, lo, hi


def line_chart(labels: list[str], values: list[float], title: str) -> str:
    parts = _header(title)
    parts.append(_axis_box())
    to_y, lo, hi = _scale(values, lo_pad=0.0)
    n = max(len(values) - 1, 1)
    xs = [MARGIN + i / n * (WIDTH - 2 * MARGIN) for i in range(len(values))]
    points = " ".join(f"{x:.1f},{to_y(v):.1f}" for x, v in zip(xs, values))
    parts.append(f'<polyline points="{points}" fill="none" '
                 f'stroke="{PALETTE[0]}" stroke-width="2"/>')
    for x, label in zip(xs, labels):
        parts.append(f'<text x="{x:.1f}" y="{HEIGHT - MARGIN + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="10">{_esc(label)}</text>')
    parts.append(f'<text x="{MARGIN - 8}" y="{to_y(hi) + 4:.1f}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="10">{hi:.0f}</text>')
    parts.append(f'<text x="{MARGIN - 8}" y="{to_y(lo) + 4:.1f}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="10">{lo:.0f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heat_grid(matrix: list[list[float]], row_labels: list[str],
              col_labels: list[str], title: str,
              fmt: str = "{:.0f}") -> str:
    parts = _header(title)
    rows = len(row_labels)
    cols = len(col_labels)
    flat = [v for row in matrix for v in row]
    lo, hi = min(flat), max(flat)
    span = (hi - lo) or 1.0
    cell_w = (WIDTH - 2 * MARGIN) / cols
    cell_h = (HEIGHT - 2 * MARGIN) / rows
    for i in range(rows):
        for j in range(cols):
            v = matrix[i][j]
            t = (v - lo) / span
            # white to steel blue
            r = int(255 - t * (255 - 72))
            g = int(255 - t * (255 - 120))
            b = int(255 - t * (255 - 168))
            x = MARGIN + j * cell_w
            y = MARGIN + i * cell_h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" '
                         f'height="{cell_h:.1f}" fill="#{r:02x}{g:02x}{b:02x}" '
                         f'stroke="#dddddd"/>')
            text_fill = "#000000" if t < 0.6 else "#ffffff"
            parts.append(f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 + 4:.1f}" '
                         f'text-anchor="middle" font-family="sans-serif" '
                         f'font-size="11" fill="{text_fill}">'
                         f'{_esc(fmt.format(v))}</text>')
    for i, label in enumerate(row_labels):
        parts.append(f'<text x="{MARGIN - 6}" y="{MARGIN + (i + 0.5) * cell_h + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{_esc(label)}</text>')
    for j, label in enumerate(col_labels):
        parts.append(f'<text x="{MARGIN + (j + 0.5) * cell_w:.1f}" '
                     f'y="{MARGIN - 8}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def box_summary(groups: list[dict], title: str) -> str:
    """Five-number boxes; each group dict has label, min, q1, median, q3,
    max, and series (color index)."""
    parts = _header(title)
    parts.append(_axis_box())
    values = [g[k] for g in groups for k in ("min", "max")]
    to_y, _, _ = _scale(values)
    n = len(groups)
    slot = (WIDTH - 2 * MARGIN) / max(n, 1)
    for i, g in enumerate(groups):
        cx = MARGIN + (i + 0.5) * slot
        color = PALETTE[g.get("series", 0) % len(PALETTE)]
        half = min(18.0, slot * 0.3)
        parts.append(f'<line x1="{cx:.1f}" y1="{to_y(g["min"]):.1f}" '
                     f'x2="{cx:.1f}" y2="{to_y(g["max"]):.1f}" '
                     f'stroke="{color}"/>')
        parts.append(f'<rect x="{cx - half:.1f}" y="{to_y(g["q3"]):.1f}" '
                     f'width="{2 * half:.1f}" '
                     f'height="{to_y(g["q1"]) - to_y(g["q3"]):.1f}" '
                     f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
        parts.append(f'<line x1="{cx - half:.1f}" y1="{to_y(g["median"]):.1f}" '
                     f'x2="{cx + half:.1f}" y2="{to_y(g["median"]):.1f}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{cx:.1f}" y="{HEIGHT - MARGIN + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="9">{_esc(g["label"])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def stacked_bars(categories: list[str], series: dict[str, list[float]],
                 title: str) -> str:
    """One bar per category, stacked segments per series entry."""
    parts = _header(title)
    parts.append(_axis_box())
    totals = [sum(series[name][i] for name in series)
              for i in range(len(categories))]
    to_y, _, _ = _scale([0.0] + totals)
    slot = (WIDTH - 2 * MARGIN) / max(len(categories), 1)
    for i, category in enumerate(categories):
        x = MARGIN + (i + 0.25) * slot
        width = slot * 0.5
        base = 0.0
        for s, name in enumerate(series):
            v = series[name][i]
            y_top = to_y(base + v)
            height = to_y(base) - y_top
            parts.append(f'<rect x="{x:.1f}" y="{y_top:.1f}" '
                         f'width="{width:.1f}" height="{height:.1f}" '
                         f'fill="{PALETTE[s % len(PALETTE)]}"/>')
            base += v
        parts.append(f'<text x="{x + width / 2:.1f}" y="{HEIGHT - MARGIN + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{_esc(category)}</text>')
    for s, name in enumerate(series):
        parts.append(f'<rect x="{WIDTH - MARGIN - 130}" y="{MARGIN + 18 * s}" '
                     f'width="12" height="12" fill="{PALETTE[s % len(PALETTE)]}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN - 112}" y="{MARGIN + 18 * s + 10}" '
                     f'font-family="sans-serif" font-size="11">{_esc(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
