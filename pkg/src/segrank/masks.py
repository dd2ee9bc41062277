"""Label masks: loading, instance decomposition and boundary extraction.

A label mask is a 2-D grid of non-negative instance ids where 0 is
background. Instances are defined by label value only; two disconnected
blobs sharing an id are one instance.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ._backend import kernels
from .errors import InputError, MaskDecodeError, MaskFormatError

__all__ = [
    "LabelMask",
    "InstanceView",
    "CaseRecord",
    "load_mask",
    "read_mask",
    "dump_mask",
    "instances",
    "binarize",
    "boundary",
    "boundary_map",
    "split_components",
    "as_label_array",
    "MASK_SUFFIXES",
]

MAX_LABEL = 0xFFFF
MASK_SUFFIXES = (".png", ".tif", ".tiff", ".bmp", ".pgm", ".txt")

_GRID_FORMATS = {"plain-grid-text", "grid", "txt"}
_IMAGE_FORMATS = {"grayscale-image", "image", "png"}
# modes whose pixels are a single integer channel
_SINGLE_CHANNEL_MODES = {"1", "L", "P", "I", "I;16", "I;16L", "I;16B", "I;16N"}


@dataclass(frozen=True, eq=False)
class LabelMask:
    """Immutable 2-D grid of instance labels (0 = background)."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise MaskFormatError(f"label mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise MaskFormatError("label mask must have width > 0 and height > 0")
        if arr.dtype.kind not in "biu":
            raise MaskFormatError(f"label mask must hold integers, got {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > MAX_LABEL):
            raise MaskFormatError("instance ids must lie in [0, 65535]")
        arr = np.array(arr, dtype=np.uint16)
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def foreground(self) -> np.ndarray:
        return self.labels != 0

    def label_ids(self) -> list[int]:
        ids = np.unique(self.labels)
        return [int(i) for i in ids if i != 0]

    def __eq__(self, other):
        if not isinstance(other, LabelMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.labels, other.labels))

    __hash__ = None

    def __repr__(self):
        return f"LabelMask({self.height}x{self.width}, labels={self.label_ids()})"


@dataclass(frozen=True, eq=False)
class InstanceView:
    """Pixels of one instance inside its parent mask."""

    label: int
    rows: np.ndarray
    cols: np.ndarray
    shape: tuple[int, int]

    @property
    def pixels(self) -> frozenset[tuple[int, int]]:
        return frozenset(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def area(self) -> int:
        return int(self.rows.size)

    def to_mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out

    def __repr__(self):
        return f"InstanceView(label={self.label}, area={self.area})"


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    stage: int
    surgery_type: str = ""
    team: str = ""
    instrument_count: int = 0

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise InputError(f"stage must be 1, 2 or 3, got {self.stage}")
        if self.instrument_count < 0:
            raise InputError("instrument_count must be non-negative")


MaskLike = Union[LabelMask, np.ndarray]


def as_label_array(mask: MaskLike) -> np.ndarray:
    if isinstance(mask, LabelMask):
        return mask.labels
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise MaskFormatError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr


def _parse_grid(data: bytes) -> np.ndarray:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MaskDecodeError("grid text is not ASCII") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MaskDecodeError("empty grid stream")
    try:
        header = [int(tok) for tok in lines[0].split()]
        if len(header) != 2:
            raise ValueError
        height, width = header
        rows = [[int(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise MaskDecodeError("grid text must contain integers only") from exc
    if height <= 0 or width <= 0:
        raise MaskDecodeError(f"invalid grid size {height}x{width}")
    if len(rows) != height or any(len(r) != width for r in rows):
        raise MaskDecodeError(f"grid body does not match header {height} {width}")
    arr = np.array(rows, dtype=np.int64)
    if arr.min() < 0 or arr.max() > MAX_LABEL:
        raise MaskFormatError("instance ids must lie in [0, 65535]")
    return arr


def _decode_image(data: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MaskDecodeError(f"cannot decode image: {exc}") from exc
    if img.mode not in _SINGLE_CHANNEL_MODES:
        raise MaskFormatError(f"mask image must be single-channel, got mode {img.mode!r}")
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise MaskFormatError(f"mask image must be 2-D, got shape {arr.shape}")
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if arr.size and (int(arr.min()) < 0 or int(arr.max()) > MAX_LABEL):
        raise MaskFormatError("instance ids must fit in 16 bits")
    return arr


def _sniff_format(data: bytes) -> str:
    head = data[:64].lstrip()
    if head[:1].isdigit():
        return "plain-grid-text"
    return "grayscale-image"


def load_mask(source: bytes | BinaryIO, format: str = "auto") -> LabelMask:
    """Decode a mask from bytes or a binary stream.

    ``format`` is ``"grayscale-image"``, ``"plain-grid-text"`` or ``"auto"``.
    Pixel values are taken verbatim as instance ids.
    """
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    data = bytes(data)
    if format == "auto":
        format = _sniff_format(data)
    if format in _GRID_FORMATS:
        return LabelMask(_parse_grid(data))
    if format in _IMAGE_FORMATS:
        return LabelMask(_decode_image(data))
    raise ValueError(f"unknown mask format {format!r}")


def read_mask(path: str | Path) -> LabelMask:
    path = Path(path)
    fmt = "plain-grid-text" if path.suffix.lower() == ".txt" else "grayscale-image"
    return load_mask(path.read_bytes(), fmt)


def dump_mask(mask: MaskLike, format: str = "grayscale-image") -> bytes:
    """Encode ``mask`` so that :func:`load_mask` returns an identical grid."""
    arr = as_label_array(mask)
    if format in _GRID_FORMATS:
        h, w = arr.shape
        body = "\n".join(" ".join(str(int(x)) for x in row) for row in arr)
        return f"{h} {w}\n{body}\n".encode("ascii")
    if format in _IMAGE_FORMATS:
        if arr.size and int(arr.max()) > 255:
            img = Image.fromarray(arr.astype(np.uint16))
        else:
            img = Image.fromarray(arr.astype(np.uint8), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unknown mask format {format!r}")


def instances(mask: MaskLike) -> list[InstanceView]:
    """One view per distinct nonzero label, ascending by label."""
    arr = as_label_array(mask)
    flat = arr.ravel()
    idx = np.flatnonzero(flat)
    if idx.size == 0:
        return []
    vals = flat[idx]
    order = np.argsort(vals, kind="stable")
    idx, vals = idx[order], vals[order]
    labels, starts = np.unique(vals, return_index=True)
    bounds = list(starts[1:]) + [idx.size]
    width = arr.shape[1]
    views = []
    for label, lo, hi in zip(labels.tolist(), starts.tolist(), bounds):
        chunk = idx[lo:hi]
        views.append(InstanceView(int(label), chunk // width, chunk % width, arr.shape))
    return views


def binarize(mask: MaskLike) -> LabelMask:
    return LabelMask((as_label_array(mask) != 0).astype(np.uint16))


def boundary_map(foreground: np.ndarray) -> np.ndarray:
    """Boolean map of foreground pixels 4-adjacent to background or the frame edge."""
    return kernels.boundary(np.asarray(foreground, dtype=bool))


def boundary(item: InstanceView | MaskLike) -> frozenset[tuple[int, int]]:
    """Boundary pixel set of an instance view or of a mask's foreground."""
    if isinstance(item, InstanceView):
        fg = item.to_mask()
    else:
        fg = as_label_array(item) != 0
    rows, cols = np.nonzero(boundary_map(fg))
    return frozenset(zip(rows.tolist(), cols.tolist()))


def split_components(mask: MaskLike) -> LabelMask:
    """Relabel every 4-connected component of every instance as its own instance.

    This is a reporting option only; evaluation never calls it implicitly.
    """
    from scipy import ndimage

    arr = as_label_array(mask)
    out = np.zeros(arr.shape, dtype=np.int64)
    next_id = 1
    for view in instances(arr):
        comp, n = ndimage.label(view.to_mask())
        if next_id + n - 1 > MAX_LABEL:
            raise MaskFormatError("too many components for 16-bit ids")
        out[comp > 0] = comp[comp > 0] + (next_id - 1)
        next_id += n
    return LabelMask(out)
