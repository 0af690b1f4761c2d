#!/usr/bin/env python3
"""Convert the digits bundled with the `mnist` npm package into IDX files.

The npm package ships ~1000 MNIST digits per class as JSON arrays of
pixel intensities in [0, 1]. This writes train/test IDX pairs with the
canonical file names. Even-indexed samples of each class go to the
train split, odd-indexed ones to the test split, so the two pools are
disjoint.

usage: mnist_from_npm.py <extracted-package-dir> <out-dir>
"""
import json
import os
import struct
import sys


def write_idx(out_dir, prefix, images, labels):
    with open(os.path.join(out_dir, f"{prefix}-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(os.path.join(out_dir, f"{prefix}-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    pkg, out_dir = sys.argv[1], sys.argv[2]
    os.makedirs(out_dir, exist_ok=True)
    splits = {"train": ([], []), "t10k": ([], [])}
    for digit in range(10):
        with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
            data = json.load(f)["data"]
        count = len(data) // 784
        for k in range(count):
            px = data[k * 784:(k + 1) * 784]
            img = [max(0, min(255, round(v * 255))) for v in px]
            images, labels = splits["train" if k % 2 == 0 else "t10k"]
            images.append(img)
            labels.append(digit)
    for prefix, (images, labels) in splits.items():
        write_idx(out_dir, prefix, images, labels)
        print(f"{prefix}: {len(images)} images")


if __name__ == "__main__":
    main()
