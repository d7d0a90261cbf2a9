"""Quasi-analytic weights and the integral criteria built from them.

A weight w is quasi-analytic when sum_m |x^m w|_inf^(-1/m) diverges. If 1/w is
integrable against mu, mu is determinate. The repeated-logarithm families sit
right at the boundary: raising the last nonzero exponent above 1 breaks the
property, and the weight then has a finite log-negativity integral.
"""
from momentdet import (
    Cone, CriterionSpec, ExpDecay, Exponential1D, LogNormal1D, RepeatedLog, classify_quasianalytic,
    integral_criterion, log_negativity_integral, standard_normal, strengthen_to_determinate,
)

weights = {
    "exp(-|t|)": ExpDecay(1.0),
    "one log": RepeatedLog((2.0,), (1.0, 0.0)),
    "two logs": RepeatedLog((2.0, 3.0), (1.0, 1.0, 0.0)),
    "log exponent 2": RepeatedLog((1.0, 1.0), (1.0, 2.0)),
}
for name, w in weights.items():
    v = classify_quasianalytic(w)
    print(f"{name:15s} {v.outcome:20s} log-negativity integral {log_negativity_integral(w).outcome}")

v = integral_criterion(standard_normal(1), CriterionSpec("radial_rho", rho=((1.0, "s"),)))
print("normal, rho(s) = s:", v.outcome)

half = Cone.standard(1)
v = integral_criterion(Exponential1D(1.0), CriterionSpec("stieltjes_radial", weight=ExpDecay(1.0), cone=half))
print("exponential on the half-line:", v.outcome, "->",
      strengthen_to_determinate(v, Exponential1D(1.0), half).outcome)

v = integral_criterion(LogNormal1D(0, 1), CriterionSpec("repeated_log", a=(1.0, 1.0), p=(1.0, 1.0, 0.0)))
print("lognormal, repeated log weight:", v.outcome)
