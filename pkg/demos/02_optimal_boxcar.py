"""The minimal-variance transmission at fixed currents is a boxcar union.

Forward direction: pick Lagrange multipliers (lam, eta) and solve for the
support {g <= (lam*eps + eta) * delta_f}.  Inverse direction: prescribe
the currents (I, J) and recover the multipliers, the boxcar, and the
minimal variance -- the generalized precision bound at that operating
point.  Any other transmission with the same currents is noisier.
"""

from turbox import (
    Multipliers,
    ReservoirPair,
    boxcar_integrals,
    currents,
    dqd_transmission,
    solve_boxcar,
    solve_multipliers,
    variance,
)

res = ReservoirPair.from_temperatures(1.0, 0.2, -1.0, 0.5)

# ----------------------------
# Forward: multipliers -> boxcar -> currents
# ----------------------------
m = Multipliers(lam=-8.0, eta=11.2)
B = solve_boxcar(res, m)
I, J, V = boxcar_integrals(res, B)
print(f"multipliers {m}")
print(f"  boxcar    : {B.intervals}")
print(f"  I, J, var : {I:.8f}, {J:.8f}, {V:.8f}")

# ----------------------------
# Inverse: currents -> multipliers (round trip)
# ----------------------------
sol = solve_multipliers(res, I, J)
print("\ninverse solve at the same currents:")
print(f"  lam, eta  : {sol.multipliers.lam:.6f}, {sol.multipliers.eta:.6f}")
print(f"  boxcar    : {sol.boxcar.intervals}")
print(f"  residuals : {sol.residual_norm:.3e}")

# ----------------------------
# Dominance: a physical model is noisier at its own operating point
# ----------------------------
T = dqd_transmission(Gamma=0.2, Omega=0.3, omega=1.2)
I_m, J_m = currents(T, res)
V_m = variance(T, res)
sol_m = solve_multipliers(res, I_m, J_m)
print("\ndouble dot at its own (I, J):")
print(f"  model variance   : {V_m:.8f}")
print(f"  minimal variance : {sol_m.var_opt:.8f}")
print(f"  optimal support  : {sol_m.boxcar.intervals}")
