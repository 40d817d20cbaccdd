#!/usr/bin/env python3
"""Regenerates data/tw1_table.txt, the Tracy-Widom (beta = 1) CDF grid.

F1(s) = det(I - K) on L^2(s, inf) with K(x, y) = Ai((x + y) / 2) / 2,
evaluated by Gauss-Legendre Nystrom discretisation of the Fredholm
determinant (Bornemann, Math. Comp. 79, 2010).

Usage: python3 scripts/gen_tw1_table.py > data/tw1_table.txt
"""
import sys

import numpy as np
from scipy.special import airy

LO, HI, STEP = -10.0, 16.0, 0.01
NODES = 220


def f1(s, m=NODES):
    # Ai((x+y)/2) is below 1e-40 once (x+y)/2 > 40, so truncating at s + L is exact in double.
    upper = max(s, 0.0) + 60.0
    t, w = np.polynomial.legendre.leggauss(m)
    x = s + (t + 1.0) * (upper - s) / 2.0
    w = w * (upper - s) / 2.0
    sw = np.sqrt(w)
    kernel = 0.5 * airy(0.5 * (x[:, None] + x[None, :]))[0]
    mat = np.eye(m) - sw[:, None] * kernel * sw[None, :]
    sign, logdet = np.linalg.slogdet(mat)
    return sign * np.exp(logdet)


def main():
    grid = np.round(np.arange(LO, HI + STEP / 2, STEP), 10)
    values = np.array([f1(s) for s in grid])
    values = np.clip(values, 0.0, 1.0)
    values = np.maximum.accumulate(values)
    out = sys.stdout
    out.write("# Tracy-Widom F1 CDF, Fredholm determinant, Gauss-Legendre m=%d\n" % NODES)
    out.write("# columns: x F1(x)\n")
    for s, v in zip(grid, values):
        out.write("%.2f %.17e\n" % (s, v))


if __name__ == "__main__":
    main()
