#!/usr/bin/env python3
"""Regenerate the small PNG fixtures under tests/data.

Clean images are downscaled crops of public-domain / CC0 sample photos that
ship with scikit-image (astronaut, coffee, chelsea, rocket). Depth maps are
smooth synthetic fields (far at the top of the frame, near at the bottom),
stored as 16-bit single-channel PNG.
"""
import os

import numpy as np
from PIL import Image
from skimage import data

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "data")


def square_crop(img, size):
    h, w = img.shape[:2]
    s = min(h, w)
    y0, x0 = (h - s) // 2, (w - s) // 2
    sq = Image.fromarray(img[y0:y0 + s, x0:x0 + s])
    return np.asarray(sq.resize((size, size), Image.LANCZOS))


def depth_field(size, seed):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    base = 1.0 - yy
    bumps = sum(
        rng.uniform(0.05, 0.15) * np.exp(-((xx - rng.uniform()) ** 2 + (yy - rng.uniform()) ** 2) / 0.05)
        for _ in range(3))
    d = np.clip(0.15 + 0.85 * base + bumps, 0.0, 1.0)
    return (d * 65535).round().astype(np.uint16)


def main():
    sources = {
        "astronaut": data.astronaut(),
        "coffee": data.coffee(),
        "chelsea": data.chelsea(),
        "rocket": data.rocket(),
    }
    clean = os.path.join(OUT, "clean")
    depth = os.path.join(OUT, "depth")
    os.makedirs(clean, exist_ok=True)
    os.makedirs(depth, exist_ok=True)
    for i, (name, img) in enumerate(sorted(sources.items())):
        Image.fromarray(square_crop(img, 64)).save(os.path.join(clean, name + ".png"))
        Image.fromarray(depth_field(64, i), mode="I;16").save(os.path.join(depth, name + ".png"))

    # Larger fixture for the no-reference metric (needs >= 96 px blocks).
    Image.fromarray(square_crop(data.chelsea(), 192)).save(os.path.join(OUT, "natural_192.png"))
    # Sizes that are not block multiples exercise the border crop.
    Image.fromarray(data.coffee()[100:300, 150:400]).save(os.path.join(OUT, "natural_250x200.png"))


if __name__ == "__main__":
    main()
