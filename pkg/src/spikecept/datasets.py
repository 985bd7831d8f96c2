"""IDX (MNIST) reading and writing, plus the bundled desk-scale digit set."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import IDXFormatError

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


@dataclass
class Dataset:
    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) uint8
    split: str = "train"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if len(self.images) != len(self.labels):
            raise IDXFormatError(f"{len(self.images)} images but {len(self.labels)} labels")
        if self.labels.size and self.labels.max() > 9:
            raise IDXFormatError(f"label {int(self.labels.max())} outside 0..9")

    def __len__(self):
        return len(self.labels)

    def head(self, n: int | None) -> "Dataset":
        return self if n is None else Dataset(self.images[:n], self.labels[:n], self.split)

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.split == other.split
                and np.array_equal(self.images, other.images) and np.array_equal(self.labels, other.labels))


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as e:
            raise IDXFormatError(f"{path}: corrupt gzip stream ({e})") from None
    return raw


def parse_idx(buf: bytes, expect_magic: int, name: str = "<bytes>") -> np.ndarray:
    """Decode one IDX byte stream of unsigned bytes; errors carry byte offsets."""
    if len(buf) < 4:
        raise IDXFormatError(f"{name}: truncated header at byte 0 (need 4 bytes, have {len(buf)})")
    (magic,) = struct.unpack(">I", buf[:4])
    if magic != expect_magic:
        raise IDXFormatError(f"{name}: bad magic {magic} at byte 0, expected {expect_magic}")
    ndim = magic & 0xFF
    head = 4 + 4 * ndim
    if len(buf) < head:
        raise IDXFormatError(f"{name}: truncated dimension header at byte {len(buf)} (need {head} bytes)")
    dims = struct.unpack(f">{ndim}I", buf[4:head])
    need = head + int(np.prod(dims, dtype=np.int64))
    if len(buf) < need:
        raise IDXFormatError(f"{name}: truncated data at byte {len(buf)}, expected {need} bytes for dims {dims}")
    if len(buf) > need:
        raise IDXFormatError(f"{name}: {len(buf) - need} trailing bytes after byte {need}")
    return np.frombuffer(buf, dtype=np.uint8, offset=head).reshape(dims)


def load_mnist_idx(images_path, labels_path, split: str = "train") -> Dataset:
    """Read an image/label IDX pair (plain or gzipped)."""
    images = parse_idx(_read_bytes(images_path), IMAGE_MAGIC, str(images_path))
    labels = parse_idx(_read_bytes(labels_path), LABEL_MAGIC, str(labels_path))
    if images.ndim != 3 or images.shape[1:] != (28, 28):
        raise IDXFormatError(f"{images_path}: image dims {images.shape[1:]} at byte 8, expected (28, 28)")
    if len(images) != len(labels):
        raise IDXFormatError(f"{images_path}: {len(images)} images but {labels_path} has {len(labels)} labels (byte 4)")
    return Dataset(images.copy(), labels.copy(), split)


def to_idx(array: np.ndarray, magic: int) -> bytes:
    a = np.ascontiguousarray(array, dtype=np.uint8)
    return struct.pack(f">I{a.ndim}I", magic, *a.shape) + a.tobytes()


def write_mnist_idx(ds: Dataset, images_path, labels_path, compress: bool | None = None) -> None:
    for path, arr, magic in ((images_path, ds.images, IMAGE_MAGIC), (labels_path, ds.labels, LABEL_MAGIC)):
        buf = to_idx(arr, magic)
        gz = str(path).endswith(".gz") if compress is None else compress
        Path(path).write_bytes(gzip.compress(buf, mtime=0) if gz else buf)


def _find(directory: Path, stem: str) -> Path:
    for name in (stem + ".gz", stem, stem.replace("-idx", ".idx")):
        if (directory / name).exists():
            return directory / name
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def load_split(split: str = "train", data_dir=None) -> Dataset:
    """Load ``train`` or ``test`` from ``data_dir``, or the bundled digits if none is given.

    The bundled set holds 4,000 training and 1,000 class-balanced test
    digits in standard IDX layout.
    """
    if split not in FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    img, lab = FILES[split]
    if data_dir is None:
        base = resources.files("spikecept") / "data"
        with resources.as_file(base) as d:
            return load_mnist_idx(_find(Path(d), img), _find(Path(d), lab), split)
    d = Path(data_dir)
    return load_mnist_idx(_find(d, img), _find(d, lab), split)
