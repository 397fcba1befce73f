"""
MetaImage (.mhd + .raw) reader and writer for 3D scalar volumes.

Only the subset needed here is supported: 3 dimensions, uncompressed raw stored next
to the header, ``MET_FLOAT`` images and ``MET_UCHAR`` label maps.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from rsii.core.errors import VolumeFormatError
from rsii.core.volume.grid import LabelMap, VoxelGrid

logger = logging.getLogger(__name__)

_ELEMENT_TYPES = {
    "MET_FLOAT": np.dtype("float32"),
    "MET_UCHAR": np.dtype("uint8"),
}

# Keys that are understood or harmless; everything else triggers a warning.
_KNOWN_KEYS = {
    "ObjectType",
    "NDims",
    "BinaryData",
    "BinaryDataByteOrderMSB",
    "ElementByteOrderMSB",
    "CompressedData",
    "DimSize",
    "ElementSpacing",
    "Offset",
    "Origin",
    "Position",
    "ElementType",
    "ElementDataFile",
    "ElementNumberOfChannels",
}


def _parse_header(path: Path) -> dict[str, str]:
    raw = path.read_bytes()
    header: dict[str, str] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        if b"=" not in line:
            raise VolumeFormatError(f"{path}:{lineno}: expected 'Key = Value'")
        key_b, value_b = line.split(b"=", 1)
        try:
            key = key_b.decode("ascii").strip()
        except UnicodeDecodeError as exc:
            raise VolumeFormatError(f"{path}:{lineno}: non-ASCII header key") from exc
        try:
            value = value_b.decode("ascii").strip()
        except UnicodeDecodeError as exc:
            raise VolumeFormatError(f"{path}:{lineno}: non-ASCII value for {key}") from exc
        if not key:
            raise VolumeFormatError(f"{path}:{lineno}: empty header key")
        header[key] = value
        if key == "ElementDataFile":
            break
    return header


def _floats(header: dict[str, str], key: str, path: Path, default: str | None = None) -> tuple:
    text = header.get(key, default)
    if text is None:
        raise VolumeFormatError(f"{path}: missing required key {key}")
    try:
        vals = tuple(float(v) for v in text.split())
    except ValueError as exc:
        raise VolumeFormatError(f"{path}: {key} must be numeric, got {text!r}") from exc
    if len(vals) != 3:
        raise VolumeFormatError(f"{path}: {key} must have 3 values, got {text!r}")
    return vals


def load_volume(path: str | Path, expect_labels: bool = False) -> VoxelGrid | LabelMap:
    """
    Read a MetaImage header and its adjacent raw file.

    :param path: Path to the ``.mhd`` header.
    :param expect_labels: Validate the payload as a label map and return a ``LabelMap``.
    :return: ``VoxelGrid`` (or ``LabelMap``) with dims/spacing/origin taken from the header.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"MetaImage header not found: {path}")

    header = _parse_header(path)
    for key in header:
        if key not in _KNOWN_KEYS:
            logger.warning(f"{path.name}: ignoring unknown MetaImage key {key!r}")

    ndims = header.get("NDims", "3")
    if ndims.strip() != "3":
        raise VolumeFormatError(f"{path}: only NDims = 3 is supported, got {ndims}")
    if header.get("CompressedData", "False").lower() == "true":
        raise VolumeFormatError(f"{path}: compressed raw data is not supported")
    channels = header.get("ElementNumberOfChannels", "1").strip()
    if channels != "1":
        raise VolumeFormatError(f"{path}: only scalar volumes are supported")

    try:
        dims = tuple(int(v) for v in header["DimSize"].split())
    except KeyError as exc:
        raise VolumeFormatError(f"{path}: missing required key DimSize") from exc
    except ValueError as exc:
        raise VolumeFormatError(f"{path}: DimSize must be integers") from exc
    if len(dims) != 3:
        raise VolumeFormatError(f"{path}: DimSize must have 3 values")

    spacing = _floats(header, "ElementSpacing", path, default="1 1 1")
    offset_key = next((k for k in ("Offset", "Origin", "Position") if k in header), "Offset")
    origin = _floats(header, offset_key, path, default="0 0 0")

    etype = header.get("ElementType")
    if etype not in _ELEMENT_TYPES:
        raise VolumeFormatError(f"{path}: unsupported ElementType {etype!r}")
    msb_key = "BinaryDataByteOrderMSB"
    if msb_key not in header:
        msb_key = "ElementByteOrderMSB"
    big_endian = header.get(msb_key, "False").lower() == "true"
    dtype = _ELEMENT_TYPES[etype].newbyteorder(">" if big_endian else "<")

    data_file = header.get("ElementDataFile")
    if not data_file:
        raise VolumeFormatError(f"{path}: missing required key ElementDataFile")
    if data_file.upper() == "LOCAL":
        raise VolumeFormatError(f"{path}: inline (LOCAL) data is not supported")
    raw_path = path.parent / data_file
    if not raw_path.is_file():
        raise FileNotFoundError(f"MetaImage raw file not found: {raw_path}")

    payload = raw_path.read_bytes()
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(payload) != expected:
        raise VolumeFormatError(
            f"{raw_path}: expected {expected} bytes for {dims} {etype}, got {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=dtype)
    data = flat.reshape(dims, order="F")

    logger.debug(f"loaded {path.name}: dims={dims} spacing={spacing} origin={origin} {etype}")
    grid = VoxelGrid(data=data.astype(np.float32), spacing=spacing, origin=origin)
    if expect_labels:
        return LabelMap(grid)
    return grid


def save_volume(grid: VoxelGrid | LabelMap, path: str | Path) -> Path:
    """
    Write ``grid`` as ``<stem>.mhd`` + ``<stem>.raw`` (little-endian, x-fastest).

    Label maps are stored as ``MET_UCHAR``, everything else as ``MET_FLOAT``.

    :return: Path to the written header.
    """
    path = Path(path)
    if path.suffix.lower() != ".mhd":
        path = path.with_suffix(".mhd")
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")

    if isinstance(grid, LabelMap):
        etype = "MET_UCHAR"
        payload = grid.codes.astype("<u1")
        base = grid.grid
    else:
        etype = "MET_FLOAT"
        payload = grid.data.astype("<f4")
        base = grid

    raw_path = path.with_suffix(".raw")
    lines = [
        "ObjectType = Image",
        "NDims = 3",
        "BinaryData = True",
        "BinaryDataByteOrderMSB = False",
        "CompressedData = False",
        "DimSize = " + " ".join(str(n) for n in base.dims),
        "ElementSpacing = " + " ".join(repr(float(s)) for s in base.spacing),
        "Offset = " + " ".join(repr(float(o)) for o in base.origin),
        f"ElementType = {etype}",
        f"ElementDataFile = {raw_path.name}",
    ]
    raw_path.write_bytes(payload.tobytes(order="F"))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    logger.debug(f"saved {path.name}: dims={base.dims} {etype}")
    return path
