#!/usr/bin/env python3
"""Regenerate the bundled test images from scikit-image's public-domain samples.

cameraman512.pgm : skimage.data.camera(), 512x512, 8-bit
cameraman256.pgm : 2x2 box-averaged (round half up) to 256x256
"""
import hashlib
import pathlib
import sys

import numpy as np
from skimage import data

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"

EXPECTED = {
    "cameraman512.pgm": "4b96b14e4109a9658060595334308437b37f9e50b041b8470325062df7bbb6e0",
    "cameraman256.pgm": "7eee089b4014f83d4b9888103f9cd30308a9a4a2d6099b140d270e00b6fba764",
}


def write_pgm(path, img):
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    cam = data.camera().astype(np.float64)
    small = cam.reshape(256, 2, 256, 2).mean(axis=(1, 3))
    small = np.floor(small + 0.5)
    write_pgm(OUT / "cameraman512.pgm", cam)
    write_pgm(OUT / "cameraman256.pgm", small)
    ok = True
    for name, want in EXPECTED.items():
        digest = hashlib.sha256((OUT / name).read_bytes()).hexdigest()
        status = "OK" if digest == want else "MISMATCH"
        ok &= digest == want
        print(f"{digest}  {name}  {status}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
