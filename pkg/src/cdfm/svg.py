"""Dependency-free SVG renderings of heatmaps and loading scatters."""
import numpy as np

_PALETTE = ["#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _diverging(v):
    """Blue for -1, white for 0, red for +1."""
    v = float(np.clip(v, -1.0, 1.0))
    if v >= 0:
        g = int(round(255 * (1 - v)))
        return f"#ff{g:02x}{g:02x}"
    g = int(round(255 * (1 + v)))
    return f"#{g:02x}{g:02x}ff"


def heatmap_svg(matrix, boundaries=(), cell=4):
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    n, m = M.shape
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{m * cell}" height="{n * cell}">']
    for i in range(n):
        for j in range(m):
            parts.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                         f'fill="{_diverging(M[i, j])}"/>')
    for b in boundaries:
        parts.append(f'<line x1="0" y1="{b * cell}" x2="{m * cell}" y2="{b * cell}" stroke="black"/>')
        parts.append(f'<line x1="{b * cell}" y1="0" x2="{b * cell}" y2="{n * cell}" stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(points, labels=None, size=400):
    """First two coordinates of ``points`` on the square [-1, 1]^2 with the unit circle."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] == 1:
        x = np.column_stack([x[:, 0], np.zeros(x.shape[0])])
    labels = np.zeros(x.shape[0], dtype=int) if labels is None else np.asarray(labels, dtype=int)
    half = size / 2.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
             f'<circle cx="{half}" cy="{half}" r="{half * 0.9}" fill="none" stroke="gray"/>']
    for (a, b), k in zip(x[:, :2], labels):
        cx, cy = half + 0.9 * half * a, half - 0.9 * half * b
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2" fill="{_PALETTE[k % len(_PALETTE)]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
