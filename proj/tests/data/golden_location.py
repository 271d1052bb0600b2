"""Independent evaluation of the golden location report from dumped posterior draws.

Usage: python3 golden_location.py golden_location.csv draws.csv
"""
import sys

import numpy as np

BETA = 0.5
A = np.array([[2.0, 0.5], [0.5, 1.0]])

x = np.loadtxt(sys.argv[1], delimiter=",", skiprows=1)
theta = np.loadtxt(sys.argv[2], delimiter=",", skiprows=1)

diff = x[:, None, :] - theta[None, :, :]          # n x M x d
nu = np.einsum("ikd,de,ike->ik", diff, A, diff)
s = -0.5 * BETA * np.sum(diff ** 2, axis=2)

cov = np.mean(nu * s, axis=1) - nu.mean(axis=1) * s.mean(axis=1)
v = cov.mean()
tg = nu.mean()
mean = theta.mean(axis=0)
tp = np.mean([(xi - mean) @ A @ (xi - mean) for xi in x])
w = np.array([1.0, 0.5])
weighted = (w @ nu.mean(axis=1)) / len(x) - (w @ cov) / len(x)

for name, value in [("correction_v", v), ("pcic_gibbs", tg - v), ("pcic_plugin", tp - v),
                    ("pcic_weighted", weighted)]:
    print(f"{name} {value:.17g}")
