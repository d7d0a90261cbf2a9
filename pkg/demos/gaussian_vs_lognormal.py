"""Two measures on the line, one determinate and one not, seen through their moments.

The normal law has moments (2m-1)!!, which grow slowly enough for the Carleman
series to diverge. The lognormal law has s(2m) = exp(2 m^2); the series
converges and the Carleman test says nothing.
"""
import math

from momentdet import LogNormal1D, directional_moments, extended_carleman_check, standard_normal

for name, spec in (("normal", standard_normal(1)), ("lognormal", LogNormal1D(0, 1))):
    tab = directional_moments(spec, M=12)
    print(f"{name}: log s(2m) for m = 1..6:",
          " ".join(f"{tab.s[0][2 * m].log:.3f}" for m in range(1, 7)))

    v = extended_carleman_check(spec, M=30)
    series = v.evidence[0].data["series"]
    print(f"  Carleman terms s(2m)^(-1/2m), m = 1..5:",
          " ".join(f"{math.exp(t):.4f}" for t in series.log_terms[:5]))
    print(f"  partial sum at M=30: {series.partial_sums[-1]:.6f}, decay exponent {series.beta:.3f}"
          f" -> {series.outcome}")
    print(f"  verdict: {v.outcome}" + (" (polynomials dense in L^2)" if v.density else ""))

print(f"lognormal limit of the series: 1/(e-1) = {1 / (math.e - 1):.6f}")
