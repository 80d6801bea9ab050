from __future__ import annotations

import numpy as np

from crosslab.exceptions import ConfigurationError
from crosslab.terrain.tiles import HeightFieldTile
from crosslab.terrain.world import HeightFieldWorld
from crosslab.utils import dump_artifact


def render_heightfield(heights: np.ndarray, cell_size: float, origin=(0.0, 0.0)) -> str:
    '''
    Text form of a height grid

    First line ``rows cols cell_size origin_x origin_y``, then one line per
    row of space separated heights.  Floats are written with ``repr`` so a
    parse gives back the identical grid.
    '''
    rows, cols = heights.shape
    lines = [f"{rows} {cols} {float(cell_size)!r} {float(origin[0])!r} {float(origin[1])!r}"]
    for row in heights:
        lines.append(' '.join(repr(float(v)) for v in row))
    return '\n'.join(lines) + '\n'


def parse_heightfield(text: str) -> HeightFieldWorld:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ConfigurationError("heightfield file is empty")
    header = lines[0].split()
    if len(header) != 5:
        raise ConfigurationError("heightfield header must be 'rows cols cell_size origin_x origin_y'")
    try:
        rows, cols = int(header[0]), int(header[1])
        cell_size, ox, oy = (float(v) for v in header[2:])
        body = np.array([[float(v) for v in line.split()] for line in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ConfigurationError(f"malformed heightfield: {exc}") from exc
    if body.shape != (rows, cols):
        raise ConfigurationError(f"heightfield body is {body.shape}, header says ({rows}, {cols})")
    return HeightFieldWorld.from_array(body, cell_size, (ox, oy))


def write_heightfield(target: HeightFieldWorld | HeightFieldTile, path: str, filename: str) -> str:
    if isinstance(target, HeightFieldTile):
        text = render_heightfield(target.heights, target.cell_size)
    else:
        text = render_heightfield(target.heights, target.cell_size, target.origin)
    return dump_artifact(text, path, filename)


def read_heightfield(fn: str) -> HeightFieldWorld:
    try:
        with open(fn) as f:
            return parse_heightfield(f.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read heightfield {fn}: {exc}") from exc
