"""Reading and writing of single-band rasters in the plain-text ASCII grid format.

The format is a six-line header (ncols, nrows, xllcorner, yllcorner, cellsize,
NODATA_value) followed by ``nrows`` lines of ``ncols`` whitespace-separated
values, row 0 being the northernmost row.  Header keys are case-insensitive
and must appear in the order above; ``xllcenter``/``yllcenter`` are accepted
and converted to the corner convention.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

DEFAULT_NODATA = -9999.0

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class RasterParseError(ValueError):
    """Malformed ASCII grid input."""


@dataclass(eq=False)
class RasterGrid:
    """A georeferenced cell grid with a nodata sentinel.

    ``values`` is a row-major (nrows, ncols) float array; row 0 is the
    northernmost row.  Every value is either finite or exactly equal to
    ``nodata``.
    """

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float = DEFAULT_NODATA
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.nrows}x{self.ncols}")
        if not self.cellsize > 0:
            raise ValueError(f"cellsize must be positive, got {self.cellsize}")
        if self.values is None:
            self.values = np.full((self.nrows, self.ncols), self.nodata, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.nrows, self.ncols):
            raise ValueError(
                f"values shape {self.values.shape} does not match {self.nrows}x{self.ncols}"
            )
        bad = ~np.isfinite(self.values) & (self.values != self.nodata)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(f"non-finite value at row {r}, col {c} is not the nodata sentinel")

    @property
    def nodata_mask(self) -> np.ndarray:
        return self.values == self.nodata

    def cell_of(self, x: float, y: float):
        """Return (row, col) of the cell containing (x, y), or None if outside.

        Cells are half-open: a point on the shared edge of two cells belongs
        to the cell with the larger coordinate.
        """
        col = int(np.floor((x - self.xll) / self.cellsize))
        row_s = int(np.floor((y - self.yll) / self.cellsize))  # counted from the south
        if 0 <= col < self.ncols and 0 <= row_s < self.nrows:
            return self.nrows - 1 - row_s, col
        return None

    def copy(self) -> "RasterGrid":
        return RasterGrid(
            self.ncols, self.nrows, self.xll, self.yll, self.cellsize,
            self.nodata, self.values.copy(),
        )


def read_ascii_grid(source) -> RasterGrid:
    """Parse an ASCII grid from a string or an open text stream."""
    if isinstance(source, str):
        source = io.StringIO(source)

    header = {}
    for expect in _HEADER_KEYS:
        line = source.readline()
        if not line:
            raise RasterParseError(f"unexpected end of header, expected '{expect}' line")
        parts = line.split()
        if len(parts) != 2:
            raise RasterParseError(f"malformed header line {line.strip()!r}")
        key = parts[0].lower()
        accepted = {expect}
        if expect == "xllcorner":
            accepted.add("xllcenter")
        elif expect == "yllcorner":
            accepted.add("yllcenter")
        if key not in accepted:
            raise RasterParseError(f"expected header key '{expect}', got {parts[0]!r}")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise RasterParseError(f"non-numeric header value in line {line.strip()!r}") from None

    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if ncols != header["ncols"] or nrows != header["nrows"]:
        raise RasterParseError("ncols/nrows must be integers")
    cellsize = header["cellsize"]
    if not cellsize > 0:
        raise RasterParseError(f"cellsize must be positive, got {cellsize}")

    # Center-registered origins shift by half a cell to the corner convention.
    if "xllcenter" in header:
        xll = header["xllcenter"] - cellsize / 2.0
    else:
        xll = header["xllcorner"]
    if "yllcenter" in header:
        yll = header["yllcenter"] - cellsize / 2.0
    else:
        yll = header["yllcorner"]
    nodata = header["nodata_value"]

    values = np.empty((nrows, ncols), dtype=np.float64)
    row = 0
    for line in source:
        tokens = line.split()
        if not tokens:
            continue
        if row >= nrows:
            raise RasterParseError(f"too many data rows, expected {nrows}")
        if len(tokens) != ncols:
            raise RasterParseError(
                f"data row {row} has {len(tokens)} values, expected {ncols}"
            )
        for col, tok in enumerate(tokens):
            try:
                values[row, col] = float(tok)
            except ValueError:
                raise RasterParseError(
                    f"non-numeric value {tok!r} at row {row}, col {col}"
                ) from None
        row += 1
    if row != nrows:
        raise RasterParseError(f"got {row} data rows, expected {nrows}")

    try:
        return RasterGrid(ncols, nrows, xll, yll, cellsize, nodata, values)
    except ValueError as exc:
        raise RasterParseError(str(exc)) from None


def write_ascii_grid(grid: RasterGrid, precision: int = 6) -> str:
    """Serialize a grid; round-trips through read_ascii_grid at the printed precision.

    ``precision`` applies to data values (17 reproduces float64 exactly).
    Georeference fields and the nodata sentinel are always written at full
    precision, and nodata cells are printed verbatim as the sentinel so they
    compare equal on re-read.
    """
    nodata_str = f"{grid.nodata:.17g}"
    out = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {grid.xll:.17g}",
        f"yllcorner {grid.yll:.17g}",
        f"cellsize {grid.cellsize:.17g}",
        f"NODATA_value {nodata_str}",
    ]
    for row in grid.values:
        out.append(
            " ".join(nodata_str if v == grid.nodata else f"{v:.{precision}g}" for v in row)
        )
    return "\n".join(out) + "\n"


def load_raster(path) -> RasterGrid:
    with open(path, "r", encoding="utf-8") as fh:
        return read_ascii_grid(fh)


def save_raster(path, grid: RasterGrid, precision: int = 6) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_ascii_grid(grid, precision))
