#!/usr/bin/env python3
"""Convert user-supplied benchmark images to 8-bit binary PGM and pin them.

Lena and Barbara are not redistributable with this repository; the usual
source is the USC-SIPI image database (misc volume). Run

    scripts/prepare_images.py bench/images lena.tiff barbara.png

to write bench/images/lena.pgm and bench/images/barbara.pgm as 8-bit
grayscale. The first run records SHA-256 digests in bench/images/SHA256SUMS;
later runs compare against it and exit 1 on any mismatch, so a table is
always regenerated from the same pixels.
"""
import hashlib
import pathlib
import sys

from PIL import Image


def main(argv):
    if len(argv) < 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    out = pathlib.Path(argv[1])
    out.mkdir(parents=True, exist_ok=True)
    sums_path = out / "SHA256SUMS"
    known = {}
    if sums_path.exists():
        for line in sums_path.read_text().splitlines():
            digest, name = line.split(maxsplit=1)
            known[name] = digest

    ok = True
    for src in map(pathlib.Path, argv[2:]):
        img = Image.open(src).convert("L")
        dst = out / (src.stem.lower() + ".pgm")
        img.save(dst, format="PPM")
        digest = hashlib.sha256(dst.read_bytes()).hexdigest()
        want = known.setdefault(dst.name, digest)
        status = "OK" if want == digest else "MISMATCH"
        ok &= status == "OK"
        print(f"{status} {dst} {img.size[0]}x{img.size[1]} {digest}")

    sums_path.write_text("".join(f"{d}  {n}\n" for n, d in sorted(known.items())))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
