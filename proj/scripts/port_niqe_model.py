#!/usr/bin/env python3
"""Convert the published NIQE pristine-model coefficients into data/niqe_model.txt.

Input is the ``niqe_pris_params.npz`` file distributed with the MATLAB-faithful
Python port of NIQE (basicsr/metrics/niqe_pris_params.npz), which carries the
official ``mu_prisparam`` / ``cov_prisparam`` from the LIVE release plus the
7x7 Gaussian window used for local normalization.

usage: port_niqe_model.py niqe_pris_params.npz data/niqe_model.txt
"""
import sys

import numpy as np


def fmt(row):
    return " ".join(repr(float(v)) for v in row)


def main(src, dst):
    d = np.load(src)
    mu = d["mu_pris_param"].reshape(-1)
    cov = d["cov_pris_param"]
    win = d["gaussian_window"]
    with open(dst, "w") as f:
        f.write("# NIQE pristine natural-scene model\n")
        f.write("# mu: mean of the 36 NSS features; cov: 36x36 covariance;\n")
        f.write("# window: local mean/variance weighting kernel.\n")
        f.write("niqe-model 1\n")
        f.write("block 96 96\n")
        f.write("mu %d\n%s\n" % (mu.size, fmt(mu)))
        f.write("cov %d %d\n" % cov.shape)
        for row in cov:
            f.write(fmt(row) + "\n")
        f.write("window %d %d\n" % win.shape)
        for row in win:
            f.write(fmt(row) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
