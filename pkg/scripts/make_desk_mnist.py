"""Build the bundled desk-scale MNIST subset as gzipped IDX files.

Source: the 5,000-image MNIST sample shipped inside the ``mlxtend`` wheel
(500 digits per class, drawn from the official training set).  The images
are shuffled with a fixed seed and split into 4,000 train / 1,000 test
(100 test digits per class).  Usage::

    pip download --no-deps mlxtend -d /tmp/mlx
    python scripts/make_desk_mnist.py /tmp/mlx/mlxtend-*.whl src/spikecept/data/
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def write_idx(path, array, magic):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in array.shape)
    # mtime=0 keeps the output byte-reproducible
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(header + array.astype(np.uint8).tobytes())


def main(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        blob = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(blob), delimiter=",", dtype=np.uint8)
    images = table[:, :-1].reshape(-1, 28, 28)
    labels = table[:, -1]

    rng = np.random.default_rng(20200101)
    test_idx = np.concatenate(
        [rng.permutation(np.flatnonzero(labels == c))[:100] for c in range(10)]
    )
    train_idx = np.setdiff1d(np.arange(len(labels)), test_idx)
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train-images-idx3-ubyte.gz", images[train_idx], 2051)
    write_idx(out / "train-labels-idx1-ubyte.gz", labels[train_idx], 2049)
    write_idx(out / "t10k-images-idx3-ubyte.gz", images[test_idx], 2051)
    write_idx(out / "t10k-labels-idx1-ubyte.gz", labels[test_idx], 2049)
    print(f"train={len(train_idx)} test={len(test_idx)} -> {out}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
