"""Sampled data series and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import BadGrid

__all__ = ["Series", "sample_series", "fmt", "read_series_csv", "write_series_csv"]


def fmt(x: float) -> str:
    """Round-trippable fixed formatting used by every file this package writes."""
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y).reshape(-1)
        if not np.iscomplexobj(y):
            y = y.astype(float)
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ ({x.size} vs {y.size})")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("x must be strictly increasing")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


def sample_series(f, start: float, stop: float, points: int, label: str = "") -> Series:
    """Evaluate ``f`` on ``points`` uniformly spaced abscissae in ``[start, stop]``."""
    if int(points) != points or points < 2:
        raise BadGrid(f"need at least 2 points, got {points!r}")
    if not stop > start:
        raise BadGrid(f"need stop > start, got [{start!r}, {stop!r}]")
    x = np.linspace(start, stop, int(points))
    y = np.array([f(xi) for xi in x])
    return Series(x, y, label)


def write_series_csv(series: Series, fh, x_name: str = "x", y_name: str = "y") -> None:
    """Write ``x,y`` (real data) or ``x,re_y,im_y`` (complex data) with LF endings."""
    writer = csv.writer(fh, lineterminator="\n")
    cplx = np.iscomplexobj(series.y)
    if cplx:
        writer.writerow([x_name, f"re_{y_name}", f"im_{y_name}"])
        for xi, yi in zip(series.x, series.y):
            writer.writerow([fmt(xi), fmt(yi.real), fmt(yi.imag)])
    else:
        writer.writerow([x_name, y_name])
        for xi, yi in zip(series.x, series.y):
            writer.writerow([fmt(xi), fmt(yi)])


def read_series_csv(source, label: str = "") -> Series:
    """Read a two- or three-column CSV with a header row.

    ``source`` is a path or an open text handle.  Three columns are read as
    ``x, re(y), im(y)``.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError("CSV needs a header row and at least one data row")
    header, body = rows[0], rows[1:]
    if len(header) not in (2, 3):
        raise ValueError(f"expected 2 or 3 columns, got {len(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"non-numeric CSV entry: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError("ragged CSV rows")
    y = data[:, 1] if data.shape[1] == 2 else data[:, 1] + 1j * data[:, 2]
    return Series(data[:, 0], y, label or header[1])
