"""The lognormal is indeterminate: distinct densities share all its moments.

Multiplying the lognormal density by 1 + theta*sin(2 pi log x) leaves every
moment unchanged, because E[x^m sin(2 pi log x)] = 0 for each integer m. The same
function sin(2 pi log x) is orthogonal to every polynomial, so polynomials are
not dense in L^2 of the lognormal.
"""
import math

import numpy as np

from momentdet import LogNormal1D, moment_matched_family, poly_projection_error
from momentdet.quad import LogFn, integrate, l1_distance


def moment(spec, m):
    return integrate(LogFn(lambda X: (np.ones(len(X)), m * np.log(X[:, 0]))), spec, 1e-12).value


print(" m      theta=0        theta=1       theta=-0.5")
for m in range(0, 9, 2):
    row = [moment(moment_matched_family(t), m) for t in (0.0, 1.0, -0.5)]
    print(f"{m:2d}  " + "  ".join(f"{v:13.6e}" for v in row))

d = l1_distance(moment_matched_family(1.0), moment_matched_family(-1.0))
print(f"L1 distance between theta=1 and theta=-1: {d:.4f}")

res = poly_projection_error(lambda x: np.sin(2 * math.pi * np.log(x)), LogNormal1D(0, 1), 10)
print(f"|f| = {res.norm:.8f}  (1/sqrt 2 = {1 / math.sqrt(2):.8f})")
print("largest coefficient against orthonormal polynomials:", f"{np.max(np.abs(res.coefficients)):.1e}")
print("relative projection error by degree:", " ".join(f"{e / res.norm:.4f}" for e in res.errors[::2]))
