import logging
import os
import struct
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

GRID_MAGIC = b"GRF1"
_HEADER = struct.Struct("<III")
_VALUE_DTYPE = np.dtype("<f8")


@dataclass
class GridImage:
    width: int
    height: int
    channels: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(self.channels, self.height, self.width)

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'GridImage':
        array = np.asarray(array, dtype=float)
        if array.ndim == 2:
            array = array[None]
        if array.ndim != 3:
            raise ValueError(f"Grid images are 2D or (channels, h, w), got shape {array.shape}")
        channels, height, width = array.shape
        return cls(width=width, height=height, channels=channels, data=array)

    def as_array(self) -> np.ndarray:
        """2D image for single-channel grids, otherwise (channels, h, w)."""
        return self.data[0].copy() if self.channels == 1 else self.data.copy()


def write_grid(path: str, image) -> None:
    grid = image if isinstance(image, GridImage) else GridImage.from_array(image)
    if not np.all(np.isfinite(grid.data)):
        raise ValueError(f"Refusing to write non-finite values to {path}")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(GRID_MAGIC)
        f.write(_HEADER.pack(grid.width, grid.height, grid.channels))
        f.write(grid.data.astype(_VALUE_DTYPE).tobytes(order="C"))
    logger.debug(f"Wrote {grid.channels}x{grid.height}x{grid.width} grid to {path}")


def read_grid(path: str) -> GridImage:
    with open(path, "rb") as f:
        payload = f.read()
    if payload[:4] != GRID_MAGIC:
        raise ValueError(f"{path}: bad magic {payload[:4]!r}, expected {GRID_MAGIC!r}")
    if len(payload) < 4 + _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    width, height, channels = _HEADER.unpack_from(payload, 4)
    expected = width * height * channels
    body = payload[4 + _HEADER.size:]
    if len(body) != expected * _VALUE_DTYPE.itemsize:
        raise ValueError(f"{path}: expected {expected} values, found {len(body) // _VALUE_DTYPE.itemsize}")
    data = np.frombuffer(body, dtype=_VALUE_DTYPE).astype(float)
    return GridImage(width=width, height=height, channels=channels, data=data)


def read_pgm(path: str) -> GridImage:
    """8-bit binary (P5) or ASCII (P2) PGM, scaled to [0, 1]."""
    with open(path, "rb") as f:
        payload = f.read()
    tokens = []
    pos = 0
    # magic, width, height, maxval; comments run to end of line
    while len(tokens) < 4:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(payload):
            raise ValueError(f"{path}: truncated PGM header")
        if payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        tokens.append(payload[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported, maxval={maxval}")
    count = width * height
    if magic == b"P5":
        raw = payload[pos + 1:pos + 1 + count]
        if len(raw) != count:
            raise ValueError(f"{path}: truncated PGM payload")
        values = np.frombuffer(raw, dtype=np.uint8).astype(float)
    elif magic == b"P2":
        values = np.array(payload[pos:].split(), dtype=float)
        if values.size != count:
            raise ValueError(f"{path}: expected {count} PGM samples, found {values.size}")
    else:
        raise ValueError(f"{path}: unsupported PGM magic {magic!r}")
    return GridImage(width=width, height=height, channels=1, data=values / 255.0)


def read_image(path: str) -> np.ndarray:
    if path.lower().endswith(".pgm"):
        return read_pgm(path).as_array()
    return read_grid(path).as_array()
