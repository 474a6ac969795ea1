"""Small-gradient limit of the precision-dissipation trade-off.

Close to equilibrium the ratio var * sigma / I^2 for any boxcar reduces to
2 plus a nonnegative correction proportional to the squared temperature
gradient (a Jensen gap of the boxcar moments of f(1-f)).  At equal
temperatures the classical bound 2 is exact; with a temperature gradient
it is strictly loose.
"""

from turbox import (
    BoxcarSet,
    BoxcarTransmission,
    LinearResponseFrame,
    linear_tur_bound,
    summary,
    theta_moments,
)

B = BoxcarSet(((-1.0, 2.0),))

# ----------------------------
# Equal temperatures: the ratio is exactly 2
# ----------------------------
frame0 = LinearResponseFrame(beta=1.0, mu=0.0, d_beta=0.0, d_beta_mu=1e-2)
r0 = linear_tur_bound(frame0, B)
print(f"d_beta = 0:   ratio = {r0.ratio}")

# ----------------------------
# Temperature gradient: strictly above 2
# ----------------------------
frame = LinearResponseFrame(beta=1.0, mu=0.0, d_beta=1e-2, d_beta_mu=1e-2)
r = linear_tur_bound(frame, B)
t0, t1, t2 = theta_moments(frame, B)
print(f"d_beta = 1e-2: ratio = {r.ratio:.6f}  "
      f"(Jensen gap t0*t2 - t1^2 = {t0 * t2 - t1 * t1:.6f})")

# ----------------------------
# Cross-check against the full nonlinear functionals
# ----------------------------
s = summary(BoxcarTransmission(B), frame.to_reservoirs())
nonlinear = s.var_I * s.sigma / (s.I * s.I)
print(f"full quadrature ratio:  {nonlinear:.6f}")
print(f"relative difference:    {abs(nonlinear - r.ratio) / nonlinear:.2e}")
