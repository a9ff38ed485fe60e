#!/usr/bin/env python3
"""Build gzip IDX files from the 5,000-image MNIST subset shipped in mlxtend.

The subset (500 images per digit, stored sorted by label) is shuffled with a
fixed seed and split into a training part and a test part, then written in the
standard MNIST file layout so the C++ loader can read it like the full corpus.

    pip download --no-deps mlxtend -d /tmp/wheels
    python tools/make_mnist_subset.py /tmp/wheels/mlxtend-*.whl data/mnist5k
"""
import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load_subset(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read(CSV_MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    return table[:, :-1].astype(np.uint8), table[:, -1].astype(np.uint8)


def write_images(path, images):
    header = struct.pack(">IIII", 0x00000803, len(images), 28, 28)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + images.tobytes())


def write_labels(path, labels):
    header = struct.pack(">II", 0x00000801, len(labels))
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + labels.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel")
    ap.add_argument("outdir")
    ap.add_argument("--n-test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    images, labels = load_subset(args.wheel)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]
    n_train = len(labels) - args.n_test

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte.gz", images[:n_train])
    write_labels(out / "train-labels-idx1-ubyte.gz", labels[:n_train])
    write_images(out / "t10k-images-idx3-ubyte.gz", images[n_train:])
    write_labels(out / "t10k-labels-idx1-ubyte.gz", labels[n_train:])
    print(f"wrote {n_train} training and {args.n_test} test images to {out}")


if __name__ == "__main__":
    main()
