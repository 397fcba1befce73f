from rsii.core.volume.grid import (
    LABEL_BACKGROUND,
    LABEL_CODES,
    LABEL_LUMEN,
    LABEL_WALL,
    LabelMap,
    VoxelGrid,
)
from rsii.core.volume.metaimage import load_volume, save_volume
from rsii.core.volume.sampling import (
    sample_index,
    sample_index_gradient,
    sample_points,
    sample_trilinear,
)

__all__ = [
    "LABEL_BACKGROUND",
    "LABEL_CODES",
    "LABEL_LUMEN",
    "LABEL_WALL",
    "LabelMap",
    "VoxelGrid",
    "load_volume",
    "save_volume",
    "sample_index",
    "sample_index_gradient",
    "sample_points",
    "sample_trilinear",
]
