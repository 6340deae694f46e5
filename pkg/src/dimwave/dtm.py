"""ESRI ASCII grid reader and bilinear height interpolation.

The header must provide exactly the keys ncols, nrows, xllcorner,
yllcorner, cellsize and (optionally) NODATA_value; data values are
cell-center registered with the first data row at the top (north).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DtmParseError, GeometryError

_REQUIRED_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")
_OPTIONAL_KEYS = ("nodata_value",)


@dataclass
class Raster:
    """Regular height grid; heights[i, j] is row i from the top, column j."""

    xll: float
    yll: float
    cellsize: float
    heights: np.ndarray
    nodata: float | None = None
    extent_policy: str = "clamp"   # "clamp" | "error"
    nodata_fill: float | None = None

    @property
    def ncols(self) -> int:
        return self.heights.shape[1]

    @property
    def nrows(self) -> int:
        return self.heights.shape[0]

    def sample_xy(self, i: int, j: int):
        """Cell-center coordinates of sample (i, j)."""
        x = self.xll + (j + 0.5) * self.cellsize
        y = self.yll + (self.nrows - 1 - i + 0.5) * self.cellsize
        return x, y

    def bilinear(self, x, y):
        """Bilinear height at (x, y); exact on bilinear functions.

        Out-of-extent queries clamp to the edge samples or raise,
        depending on `extent_policy`.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # Fractional sample indices (column from west, row from north).
        fj = (x - self.xll) / self.cellsize - 0.5
        fi = (self.yll + self.nrows * self.cellsize - y) / self.cellsize - 0.5
        if self.extent_policy == "error":
            bad = (fj < 0) | (fj > self.ncols - 1) | (fi < 0) | (fi > self.nrows - 1)
            if np.any(bad):
                raise GeometryError("raster query outside extent")
        fj = np.clip(fj, 0.0, self.ncols - 1.0)
        fi = np.clip(fi, 0.0, self.nrows - 1.0)
        j0 = np.minimum(fj.astype(int), self.ncols - 2) if self.ncols > 1 else np.zeros_like(fj, int)
        i0 = np.minimum(fi.astype(int), self.nrows - 2) if self.nrows > 1 else np.zeros_like(fi, int)
        tj = fj - j0
        ti = fi - i0
        j1 = np.minimum(j0 + 1, self.ncols - 1)
        i1 = np.minimum(i0 + 1, self.nrows - 1)
        c00 = self.heights[i0, j0]
        c01 = self.heights[i0, j1]
        c10 = self.heights[i1, j0]
        c11 = self.heights[i1, j1]
        if self.nodata is not None:
            used = np.stack([c00, c01, c10, c11])
            hit = np.isclose(used, self.nodata)
            if hit.any():
                if self.nodata_fill is None:
                    raise GeometryError("NODATA sample inside queried extent")
                used = np.where(hit, self.nodata_fill, used)
                c00, c01, c10, c11 = used
        return ((1 - ti) * ((1 - tj) * c00 + tj * c01)
                + ti * ((1 - tj) * c10 + tj * c11))


def dtm_load(path, *, extent_policy: str = "clamp",
             nodata_fill: float | None = None) -> Raster:
    """Parse an ESRI ASCII grid file into a Raster.

    Raises DtmParseError with a line diagnostic for malformed headers or
    data blocks.
    """
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().splitlines()

    header: dict[str, float] = {}
    i = 0
    for i, line in enumerate(lines):
        parts = line.split()
        if not parts:
            continue
        key = parts[0].lower()
        if key not in _REQUIRED_KEYS + _OPTIONAL_KEYS:
            break
        if len(parts) != 2:
            raise DtmParseError(f"header key '{parts[0]}' needs exactly one value",
                                line=i + 1)
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise DtmParseError(f"header value for '{parts[0]}' is not numeric: "
                                f"'{parts[1]}'", line=i + 1) from None
    for key in _REQUIRED_KEYS:
        if key not in header:
            raise DtmParseError(f"missing required header key '{key}'", line=i + 1)

    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if ncols < 1 or nrows < 1:
        raise DtmParseError("ncols/nrows must be >= 1", line=1)
    if header["cellsize"] <= 0:
        raise DtmParseError("cellsize must be positive", line=1)

    values = []
    for j, line in enumerate(lines[i:], start=i):
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise DtmParseError(f"bad data token '{tok}'", line=j + 1) from None
    if len(values) != ncols * nrows:
        raise DtmParseError(
            f"expected {ncols * nrows} data values, found {len(values)}",
            line=len(lines))

    heights = np.array(values).reshape(nrows, ncols)
    return Raster(xll=header["xllcorner"], yll=header["yllcorner"],
                  cellsize=header["cellsize"], heights=heights,
                  nodata=header.get("nodata_value"),
                  extent_policy=extent_policy, nodata_fill=nodata_fill)


def bilinear(raster: Raster, x, y):
    """Module-level convenience wrapper for Raster.bilinear."""
    return raster.bilinear(x, y)
