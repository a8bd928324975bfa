"""Level-set extraction (marching squares) and line integrals along level sets.

Cells are the quadrilaterals between neighbouring rings and spokes of a polar
grid, periodic in theta. On disk grids the hole around the axis is covered by
a fan of triangles joined to a centre node whose value is the mean of the
innermost ring. Crossings are placed by linear interpolation along cell
edges; saddle cells are resolved with the cell-centre average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContourError, PreconditionError
from .grid import PolarGrid, ScalarField

__all__ = ["Contour", "trace_level", "line_integral_level"]


@dataclass(frozen=True)
class Contour:
    """A polyline on a level set.

    ``node_a``, ``node_b`` and ``t`` record where each vertex sits: on the
    edge between flat node indices ``node_a`` and ``node_b`` at fraction ``t``.
    The index ``n_r * n_theta`` stands for the axis centre node.
    """

    points: np.ndarray
    node_a: np.ndarray
    node_b: np.ndarray
    t: np.ndarray
    closed: bool
    level: float

    def __len__(self):
        return self.points.shape[0]

    def sample(self, values):
        """Linearly interpolate nodal ``values`` (grid-shaped) onto the vertices."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 2:
            v = np.append(v.ravel(), v[0].mean())
        return (1 - self.t) * v[self.node_a] + self.t * v[self.node_b]

    def segment_lengths(self):
        p = self.points
        q = np.roll(p, -1, axis=0) if self.closed else p[1:]
        d = q - (p if self.closed else p[:-1])
        return np.hypot(d[:, 0], d[:, 1])

    def length(self):
        return float(self.segment_lengths().sum())

    def signed_area(self):
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cell_segments(grid, f, level):
    """Crossing segments as pairs of cell edges, each edge a pair of node ids."""
    n_r, n_t = grid.shape
    idx = np.arange(n_r * n_t).reshape(n_r, n_t)
    above = f >= level

    # quadrilateral cells: corners c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1)
    c0 = idx[:-1, :]
    c1 = idx[1:, :]
    c2 = np.roll(idx[1:, :], -1, axis=1)
    c3 = np.roll(idx[:-1, :], -1, axis=1)
    flat_above = above.ravel()
    bits = flat_above.astype(np.int8)
    code = bits[c0] | (bits[c1] << 1) | (bits[c2] << 2) | (bits[c3] << 3)
    active = np.nonzero((code != 0) & (code != 15))
    fv = f.ravel()
    segments = []
    for i, j in zip(*active):
        corners = (c0[i, j], c1[i, j], c2[i, j], c3[i, j])
        cls = [flat_above[c] for c in corners]
        edges = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
        crossed = [k for k in range(4) if cls[k] != cls[(k + 1) % 4]]
        if len(crossed) == 2:
            segments.append((edges[crossed[0]], edges[crossed[1]]))
        else:
            centre = np.mean([fv[c] for c in corners]) >= level
            if centre == cls[0]:
                pairs = ((0, 1), (2, 3))
            else:
                pairs = ((3, 0), (1, 2))
            for a, b in pairs:
                segments.append((edges[a], edges[b]))

    if grid.has_axis:
        centre_id = n_r * n_t
        centre_above = fv[: n_t].mean() >= level
        for j in range(n_t):
            tri = (centre_id, idx[0, j], idx[0, (j + 1) % n_t])
            cls = (centre_above, flat_above[tri[1]], flat_above[tri[2]])
            if cls[0] == cls[1] == cls[2]:
                continue
            edges = [(tri[k], tri[(k + 1) % 3]) for k in range(3)]
            crossed = [edges[k] for k in range(3) if cls[k] != cls[(k + 1) % 3]]
            segments.append((crossed[0], crossed[1]))
    return segments


def _node_xy(grid):
    x, y = grid.cartesian()
    return np.append(x.ravel(), 0.0), np.append(y.ravel(), 0.0)


def trace_level(s, level):
    """All connected components of ``{s = level}`` as :class:`Contour` objects.

    Closed components are oriented counter-clockwise.
    """
    if not isinstance(s, ScalarField) or not isinstance(s.grid, PolarGrid):
        raise PreconditionError("trace_level needs a ScalarField on a PolarGrid")
    grid = s.grid
    f = s.values
    level = float(level)
    segments = _cell_segments(grid, f, level)
    if not segments:
        return []
    fv = np.append(f.ravel(), f[0].mean())
    xs, ys = _node_xy(grid)

    def key(edge):
        return (min(edge), max(edge))

    adjacency = {}
    for e1, e2 in segments:
        k1, k2 = key(e1), key(e2)
        adjacency.setdefault(k1, []).append(k2)
        adjacency.setdefault(k2, []).append(k1)

    seen = set()
    contours = []
    # start open chains at their endpoints so they are walked in one piece
    starts = [k for k, nb in adjacency.items() if len(nb) == 1] + list(adjacency)
    for start in starts:
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in adjacency[cur] if n != prev and n not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        closed = len(chain) > 2 and all(len(adjacency[k]) == 2 for k in chain)
        a = np.array([k[0] for k in chain])
        b = np.array([k[1] for k in chain])
        va, vb = fv[a], fv[b]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(vb != va, (level - va) / (vb - va), 0.0)
        t = np.clip(t, 0.0, 1.0)
        pts = np.column_stack([(1 - t) * xs[a] + t * xs[b], (1 - t) * ys[a] + t * ys[b]])
        c = Contour(pts, a, b, t, closed, level)
        if closed and c.signed_area() < 0:
            c = Contour(pts[::-1].copy(), a[::-1].copy(), b[::-1].copy(), t[::-1].copy(), True, level)
        contours.append(c)
    return contours


def line_integral_level(s, level, weight=None):
    """Integral of ``weight`` in arc length along the level set ``{s = level}``.

    ``weight`` may be ``None`` (arc length), a ScalarField on the same grid
    (interpolated along cell edges) or a callable ``weight(x, y)``.
    Requires the level set to be a single closed curve.
    """
    contours = trace_level(s, level)
    if not contours:
        raise ContourError(f"level set {{s = {level:g}}} is empty on this grid")
    if len(contours) > 1:
        raise ContourError(f"level set {{s = {level:g}}} has {len(contours)} components (not a Jordan curve)")
    c = contours[0]
    if not c.closed:
        raise ContourError(f"level set {{s = {level:g}}} is not closed inside the grid")
    if weight is None:
        w = np.ones(len(c))
    elif isinstance(weight, ScalarField):
        if not weight.grid.same_as(s.grid):
            raise PreconditionError("weight field lives on a different grid")
        w = c.sample(weight.values)
    else:
        w = np.asarray(weight(c.points[:, 0], c.points[:, 1]), dtype=float) * np.ones(len(c))
    seg = c.segment_lengths()
    return float(np.dot(seg, 0.5 * (w + np.roll(w, -1))))
