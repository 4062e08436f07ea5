"""Minimal SVG plotting: polyline curves and contour loops.

Purely presentational.  Every curve and every contour loop becomes exactly one
<path> element; the frame and ticks use <rect>/<line>/<text>, so counting
<path> elements counts the drawn data objects.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["write_svg", "contour_loops"]

_WIDTH, _HEIGHT, _MARGIN = 640, 480, 50


def _interp(a: float, b: float, va: float, vb: float, level: float) -> float:
    t = (level - va) / (vb - va)
    return a + t * (b - a)


def contour_loops(
    x: np.ndarray, y: np.ndarray, Z: np.ndarray, level: float
) -> list[tuple[list[tuple[float, float]], bool]]:
    """Marching-squares contours of Z (indexed [i, j] over x[i], y[j]).

    Returns (points, closed) chains; saddle cells are disambiguated with the
    cell-center mean.  Crossing points are computed once per grid edge, so
    chains join exactly.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    Z = np.asarray(Z, float)
    nx, ny = Z.shape
    if nx != x.size or ny != y.size:
        raise ValueError("grid shape mismatch")
    above = Z > level

    points: dict[tuple, tuple[float, float]] = {}

    def edge_point(kind: str, i: int, j: int) -> tuple:
        key = (kind, i, j)
        if key not in points:
            if kind == "x":  # edge (i,j)-(i+1,j)
                px = _interp(x[i], x[i + 1], Z[i, j], Z[i + 1, j], level)
                points[key] = (px, y[j])
            else:  # edge (i,j)-(i,j+1)
                py = _interp(y[j], y[j + 1], Z[i, j], Z[i, j + 1], level)
                points[key] = (x[i], py)
        return key

    segments: list[tuple[tuple, tuple]] = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = above[i, j]
            b = above[i + 1, j]
            c = above[i + 1, j + 1]
            d = above[i, j + 1]
            case = a + 2 * b + 4 * c + 8 * d
            if case in (0, 15):
                continue
            S = ("x", i, j)
            N = ("x", i, j + 1)
            W = ("y", i, j)
            E = ("y", i + 1, j)
            pair_sets = {
                1: [(W, S)],
                2: [(S, E)],
                3: [(W, E)],
                4: [(E, N)],
                6: [(S, N)],
                7: [(W, N)],
                8: [(N, W)],
                9: [(S, N)],
                11: [(E, N)],
                12: [(E, W)],
                13: [(S, E)],
                14: [(W, S)],
            }
            if case == 5:
                center = 0.25 * (Z[i, j] + Z[i + 1, j] + Z[i + 1, j + 1] + Z[i, j + 1])
                pairs = [(S, E), (N, W)] if center > level else [(W, S), (E, N)]
            elif case == 10:
                center = 0.25 * (Z[i, j] + Z[i + 1, j] + Z[i + 1, j + 1] + Z[i, j + 1])
                pairs = [(W, S), (E, N)] if center > level else [(S, E), (N, W)]
            else:
                pairs = pair_sets[case]
            for e1, e2 in pairs:
                segments.append(
                    (edge_point(*e1), edge_point(*e2))
                )

    # Chain segments into loops/arcs via shared edge keys.
    adjacency: dict[tuple, list[int]] = {}
    for idx, (e1, e2) in enumerate(segments):
        adjacency.setdefault(e1, []).append(idx)
        adjacency.setdefault(e2, []).append(idx)
    used = [False] * len(segments)
    chains: list[tuple[list[tuple[float, float]], bool]] = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        chain = list(segments[start])
        # extend forward from chain[-1], then backward from chain[0]
        for endpoint, append in ((chain[-1], True), (chain[0], False)):
            current = endpoint
            while True:
                nxt = None
                for idx in adjacency.get(current, ()):
                    if not used[idx]:
                        nxt = idx
                        break
                if nxt is None:
                    break
                used[nxt] = True
                e1, e2 = segments[nxt]
                current = e2 if e1 == current else e1
                if append:
                    chain.append(current)
                else:
                    chain.insert(0, current)
                if current == (chain[-1] if not append else chain[0]):
                    break
            if chain[0] == chain[-1]:
                break
        closed = chain[0] == chain[-1]
        if closed:
            chain = chain[:-1]
        chains.append(([points[key] for key in chain], closed))
    return chains


def _bounds(xs: list[np.ndarray], ys: list[np.ndarray]):
    x_all = np.concatenate([np.asarray(v, float).ravel() for v in xs])
    y_all = np.concatenate([np.asarray(v, float).ravel() for v in ys])
    x0, x1 = float(x_all.min()), float(x_all.max())
    y0, y1 = float(y_all.min()), float(y_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    return x0, x1, y0, y1


class _Mapper:
    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def pt(self, x, y):
        px = _MARGIN + (x - self.x0) / (self.x1 - self.x0) * (_WIDTH - 2 * _MARGIN)
        py = _HEIGHT - _MARGIN - (y - self.y0) / (self.y1 - self.y0) * (
            _HEIGHT - 2 * _MARGIN
        )
        return px, py


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _path_element(points, mapper, color, closed=False, dashed=False):
    coords = " L ".join(
        f"{px:.2f} {py:.2f}" for px, py in (mapper.pt(x, y) for x, y in points)
    )
    dash = ' stroke-dasharray="6 4"' if dashed else ""
    tail = " Z" if closed else ""
    return (
        f'<path d="M {coords}{tail}" fill="none" stroke="{color}" '
        f'stroke-width="1.5"{dash}/>'
    )


def _frame(mapper):
    x0, y0 = mapper.pt(mapper.x0, mapper.y0)
    x1, y1 = mapper.pt(mapper.x1, mapper.y1)
    parts = [
        f'<rect x="{min(x0, x1):.2f}" y="{min(y0, y1):.2f}" '
        f'width="{abs(x1 - x0):.2f}" height="{abs(y0 - y1):.2f}" '
        'fill="none" stroke="#333" stroke-width="1"/>'
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = mapper.x0 + frac * (mapper.x1 - mapper.x0)
        yv = mapper.y0 + frac * (mapper.y1 - mapper.y0)
        px, _ = mapper.pt(xv, mapper.y0)
        _, py = mapper.pt(mapper.x0, yv)
        parts.append(
            f'<text x="{px:.2f}" y="{_HEIGHT - _MARGIN + 18:.2f}" '
            f'font-size="11" text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{_MARGIN - 6:.2f}" y="{py + 4:.2f}" '
            f'font-size="11" text-anchor="end">{yv:.3g}</text>'
        )
    return parts


def write_svg(
    path,
    curves=None,
    contour=None,
    levels=None,
    labels=None,
    title: str | None = None,
) -> None:
    """Write curves or contour loops as a standalone SVG file.

    curves: sequence of (x, y) arrays, each drawn as one <path>.
    contour: (x_axis, y_axis, Z) grid, drawn as one <path> per loop of each
    level in `levels`.

    Exactly one of `curves` and `contour` must be given and non-empty.
    """
    if (curves is None) == (contour is None):
        raise ValueError("pass exactly one of curves= or contour=")
    body = []
    if curves is not None:
        curves = [
            (np.asarray(cx, float).ravel(), np.asarray(cy, float).ravel())
            for cx, cy in curves
        ]
        if not curves:
            raise ValueError("no curves to draw")
        for cx, cy in curves:
            if cx.size != cy.size or cx.size < 2:
                raise ValueError("each curve needs matching x/y of length >= 2")
        mapper = _Mapper(*_bounds([c[0] for c in curves], [c[1] for c in curves]))
        body.extend(_frame(mapper))
        for idx, (cx, cy) in enumerate(curves):
            color = _PALETTE[idx % len(_PALETTE)]
            body.append(
                _path_element(zip(cx, cy), mapper, color, dashed=idx % 2 == 1)
            )
            if labels and idx < len(labels):
                px, py = mapper.pt(cx[-1], cy[-1])
                body.append(
                    f'<text x="{px + 4:.2f}" y="{py:.2f}" font-size="11" '
                    f'fill="{color}">{labels[idx]}</text>'
                )
    else:
        gx, gy, Z = contour
        if levels is None or len(levels) == 0:
            raise ValueError("contour mode needs levels")
        gx = np.asarray(gx, float)
        gy = np.asarray(gy, float)
        mapper = _Mapper(float(gx.min()), float(gx.max()), float(gy.min()), float(gy.max()))
        body.extend(_frame(mapper))
        drew = False
        for idx, level in enumerate(levels):
            color = _PALETTE[idx % len(_PALETTE)]
            for pts, closed in contour_loops(gx, gy, Z, float(level)):
                if len(pts) < 2:
                    continue
                body.append(_path_element(pts, mapper, color, closed=closed))
                drew = True
        if not drew:
            raise ValueError("no contour lines at the requested levels")
    if title:
        body.append(
            f'<text x="{_WIDTH / 2:.2f}" y="20" font-size="13" '
            f'text-anchor="middle">{title}</text>'
        )
    doc = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )
    Path(path).write_text(doc)
