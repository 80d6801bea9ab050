from .tiles import Category, HeightFieldTile, generate_tile, difficulty  # noqa
from .world import (  # noqa
    HeightFieldWorld,
    TerrainSample,
    TileEdge,
    Pose,
    build_world,
    height_at,
    sample_height_grid,
    scan_heights,
    at_tile_edge,
)
from .heightfield_io import write_heightfield, read_heightfield, render_heightfield, parse_heightfield  # noqa
from .curriculum import TerrainCurriculum  # noqa
