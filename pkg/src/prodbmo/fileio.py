"""Plain file formats for grid functions and operator matrices.

``PBMO1``: a header line ``PBMO1 N k_1..k_N alpha_1..alpha_N`` followed either
by one decimal value per line (text) or by little-endian float64 values
(binary). Values are in row-major order of the standard cell numbering.
Spectra use the same format with the pyramid coefficient layout.

``PBMOMAT``: a header line ``PBMOMAT rows cols`` followed by the row-major
entries, one decimal value per line.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Grid, as_fraction
from .haar import GridFunction

MAGIC = "PBMO1"
MAT_MAGIC = "PBMOMAT"


def _header(grid: Grid) -> str:
    return " ".join([MAGIC, str(grid.N), *map(str, grid.levels), *map(str, grid.alpha)])


def _parse_header(line: str) -> Grid:
    parts = line.split()
    if not parts or parts[0] != MAGIC:
        raise ValueError("not a PBMO1 file")
    N = int(parts[1])
    if len(parts) != 2 + 2 * N:
        raise ValueError(f"PBMO1 header needs {2 + 2 * N} fields, found {len(parts)}")
    levels = tuple(int(x) for x in parts[2:2 + N])
    alpha = tuple(as_fraction(x) for x in parts[2 + N:])
    return Grid(levels, alpha)


def dumps_values(grid: Grid, values: np.ndarray, binary: bool = False) -> bytes:
    head = (_header(grid) + "\n").encode("ascii")
    flat = np.asarray(values, dtype=float).ravel()
    if binary:
        return head + flat.astype("<f8").tobytes()
    return head + "".join(f"{float(v)!r}\n" for v in flat).encode("ascii")


def loads_values(data: bytes) -> tuple[Grid, np.ndarray]:
    """Parse either PBMO1 variant; the binary one is recognised by its byte count."""
    head, sep, rest = data.partition(b"\n")
    if not sep:
        raise ValueError("missing PBMO1 header line")
    grid = _parse_header(head.decode("ascii"))
    n = grid.ncells
    try:
        lines = rest.decode("ascii").split()
        if len(lines) != n:
            raise ValueError
        vals = np.array([float(x) for x in lines])
    except (UnicodeDecodeError, ValueError):
        if len(rest) != 8 * n:
            raise ValueError(f"PBMO1 body holds neither {n} text values nor {8 * n} bytes")
        vals = np.frombuffer(rest, dtype="<f8").astype(float)
    return grid, vals.reshape(grid.shape)


def save_function(f: GridFunction, path, binary: bool = False) -> None:
    Path(path).write_bytes(dumps_values(f.grid, f.values, binary))


def load_function(path) -> GridFunction:
    grid, vals = loads_values(Path(path).read_bytes())
    return GridFunction(grid, vals)


def dumps_matrix(entries: np.ndarray) -> str:
    A = np.asarray(entries, dtype=float)
    if A.ndim != 2:
        raise ValueError("a matrix must be two-dimensional")
    return f"{MAT_MAGIC} {A.shape[0]} {A.shape[1]}\n" + "".join(f"{float(v)!r}\n" for v in A.ravel())


def loads_matrix(text: str) -> np.ndarray:
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) != 3 or parts[0] != MAT_MAGIC:
        raise ValueError("not a PBMOMAT file")
    r, c = int(parts[1]), int(parts[2])
    vals = [float(x) for x in body.split()]
    if len(vals) != r * c:
        raise ValueError(f"PBMOMAT body has {len(vals)} entries, expected {r * c}")
    return np.array(vals).reshape(r, c)


def save_matrix(entries: np.ndarray, path) -> None:
    Path(path).write_text(dumps_matrix(entries))


def load_matrix(path) -> np.ndarray:
    return loads_matrix(Path(path).read_text())
