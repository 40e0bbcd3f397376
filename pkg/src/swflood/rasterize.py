"""Rasterization of classified features onto a grid and DSM extrusion.

Line segments are traversed with a supercover walk (every cell the segment
touches, no diagonal gaps) carrying a z value interpolated at the midpoint
of the segment's crossing of each cell.  Polygons contribute their boundary
plus an even-odd scanline fill of cells whose centers lie inside; interior
cells take the maximum vertex z.  Extrusion raises the terrain model by the
cellwise maximum of all contributed feature heights.
"""

from __future__ import annotations

import logging
import math

from .features import ClassifiedFeature, FeatureKind, close_lines, select_classes
from .raster import RasterGrid

logger = logging.getLogger(__name__)

CellValue = tuple[tuple[int, int], float]


def _cell_at(grid: RasterGrid, x: float, y: float):
    col = math.floor((x - grid.xll) / grid.cellsize)
    row_s = math.floor((y - grid.yll) / grid.cellsize)
    if 0 <= col < grid.ncols and 0 <= row_s < grid.nrows:
        return grid.nrows - 1 - row_s, col
    return None


def _gridline_crossings(
    p0: float, p1: float, origin: float, cellsize: float, ncells: int
) -> list[float]:
    """Parameters t in (0, 1) where p0 + t*(p1-p0) crosses gridlines origin + k*cellsize.

    Only the grid's own lines (k in [0, ncells]) matter: crossings beyond the
    grid cannot separate cells that are kept.
    """
    if p0 == p1:
        return []
    lo, hi = min(p0, p1), max(p0, p1)
    k0 = max(0, math.ceil((lo - origin) / cellsize))
    k1 = min(ncells, math.floor((hi - origin) / cellsize))
    ts = []
    for k in range(k0, k1 + 1):
        t = (origin + k * cellsize - p0) / (p1 - p0)
        if 0.0 < t < 1.0:
            ts.append(t)
    return ts


def _supercover_segment(grid: RasterGrid, v0, v1) -> list[CellValue]:
    """Supercover cells of one segment with z sampled at each crossing midpoint.

    The segment is split at every gridline crossing; each sub-interval lies in
    a single cell found from its midpoint.  Diagonal jumps (exact corner
    crossings) are bridged by adding both corner-adjacent cells so each
    segment yields a 4-connected chain.
    """
    x0, y0, z0 = v0
    x1, y1, z1 = v1
    if x0 == x1 and y0 == y1:
        cell = _cell_at(grid, x0, y0)
        return [(cell, z0)] if cell is not None else []

    ts = sorted(
        set(_gridline_crossings(x0, x1, grid.xll, grid.cellsize, grid.ncols))
        | set(_gridline_crossings(y0, y1, grid.yll, grid.cellsize, grid.nrows))
        | {0.0, 1.0}
    )

    out = []
    prev_cell = None
    for ta, tb in zip(ts[:-1], ts[1:]):
        tm = 0.5 * (ta + tb)
        cell = _cell_at(grid, x0 + tm * (x1 - x0), y0 + tm * (y1 - y0))
        zm = z0 + tm * (z1 - z0)
        if cell is not None:
            if (
                prev_cell is not None
                and cell[0] != prev_cell[0]
                and cell[1] != prev_cell[1]
            ):
                # Corner crossing: include both cells sharing the corner.
                zc = z0 + ta * (z1 - z0)
                for bridge in ((prev_cell[0], cell[1]), (cell[0], prev_cell[1])):
                    if 0 <= bridge[0] < grid.nrows and 0 <= bridge[1] < grid.ncols:
                        out.append((bridge, zc))
            out.append((cell, zm))
        prev_cell = cell
    return out


def _scanline_fill(grid: RasterGrid, vertices) -> list[tuple[int, int]]:
    """Cells whose centers are inside the ring by the even-odd rule."""
    xs = vertices[:, 0]
    ys = vertices[:, 1]
    # Bounding rows with one row of slack; rows without crossings fill nothing.
    row_lo = max(0, grid.nrows - 2 - math.floor((ys.max() - grid.yll) / grid.cellsize))
    row_hi = min(grid.nrows - 1, grid.nrows - math.floor((ys.min() - grid.yll) / grid.cellsize))

    cells = []
    for row in range(row_lo, row_hi + 1):
        yc = grid.yll + (grid.nrows - 1 - row + 0.5) * grid.cellsize
        crossings = []
        for (px, py), (qx, qy) in zip(
            zip(xs[:-1], ys[:-1]), zip(xs[1:], ys[1:])
        ):
            # Half-open in y so a vertex on the scanline is counted once.
            if (py <= yc < qy) or (qy <= yc < py):
                crossings.append(px + (yc - py) / (qy - py) * (qx - px))
        crossings.sort()
        for xa, xb in zip(crossings[0::2], crossings[1::2]):
            # Centers in [xa, xb): col center = xll + (col + 0.5) * cellsize.
            c0 = math.ceil((xa - grid.xll) / grid.cellsize - 0.5)
            c1 = math.ceil((xb - grid.xll) / grid.cellsize - 0.5) - 1
            for col in range(max(c0, 0), min(c1, grid.ncols - 1) + 1):
                cells.append((row, col))
    return cells


def rasterize_feature(feature: ClassifiedFeature, template: RasterGrid) -> list[CellValue]:
    """Map a feature to ((row, col), z) contributions on the template grid.

    Cells outside the grid are dropped.  A cell may appear several times with
    different z; extrusion resolves overlaps by maximum.
    """
    verts = feature.vertices
    if feature.kind is FeatureKind.POINT:
        cell = _cell_at(template, verts[0, 0], verts[0, 1])
        return [(cell, verts[0, 2])] if cell is not None else []

    out = []
    for i in range(len(verts) - 1):
        out.extend(_supercover_segment(template, verts[i], verts[i + 1]))
    if feature.kind is FeatureKind.POLYGON:
        z_fill = float(verts[:, 2].max())
        out.extend((cell, z_fill) for cell in _scanline_fill(template, verts))
    return out


def extrude(dtm: RasterGrid, cells: list[CellValue]) -> RasterGrid:
    """Raise the terrain by feature heights: DSM = cellwise max(DTM, feature z).

    Contributions on nodata terrain cells are skipped with a warning.  The
    result is independent of contribution order and never lower than the DTM.
    """
    dsm = dtm.copy()
    skipped = 0
    for (row, col), z in cells:
        if dsm.values[row, col] == dsm.nodata:
            skipped += 1
            continue
        if z > dsm.values[row, col]:
            dsm.values[row, col] = z
    if skipped:
        logger.warning("skipped %d feature cell(s) on nodata terrain", skipped)
    return dsm


def build_dsm(
    dtm: RasterGrid,
    features: list[ClassifiedFeature],
    class_ids: set[int],
    close_tolerance: float = 0.1,
) -> RasterGrid:
    """Select classes, close nearly-closed lines, rasterize and extrude."""
    if not class_ids:
        raise ValueError("class selection is empty")
    selected = close_lines(select_classes(features, class_ids), close_tolerance)
    cells: list[CellValue] = []
    for feature in selected:
        cells.extend(rasterize_feature(feature, dtm))
    logger.info(
        "rasterized %d feature(s) into %d cell contribution(s)", len(selected), len(cells)
    )
    return extrude(dtm, cells)
