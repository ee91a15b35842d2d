"""Equilibria and their linearized stability.

Three steady states can exist: the origin, the predator-free state (K, 0, 0)
and, exactly when R > 1, a coexistence point solved from the prey and
predator balances with the delay entering through tau(y*).  Each is
classified by freezing the delay, forming the characteristic
quasi-polynomial, and locating its rightmost root.
"""
from preydelay import (ModelParams, ModelSpec, beddington_deangelis,
                       boundary_equilibria, classify_equilibrium,
                       linearize_at, quasi_polynomial, reproduction_number,
                       rightmost_abscissa, saturating_delay,
                       solve_coexistence)

model = ModelSpec(
    ModelParams(r=1.0, K=5.0, n=1.0, dj=0.55, d=0.45),
    saturating_delay(0.5, 1.0, 1.0),
    beddington_deangelis(b=1.0, k1=0.0, k2=10.0),
)

print(f"reproduction number R = {reproduction_number(model):.4f}")

equilibria = boundary_equilibria(model)
coex = solve_coexistence(model)
if coex is not None:
    equilibria.append(coex)

for eq in equilibria:
    verdict = classify_equilibrium(model, eq)
    co = verdict.coeffs
    print(f"\n{eq.kind}: (x, y, yj) = ({eq.x_star:.5g}, {eq.y_star:.5g}, "
          f"{eq.yj_star:.5g}), residual = {eq.residual:.1e}")
    print(f"  linearization: A = {co.A:.4f}, B = {co.B:.4f}, C = {co.C:.4f}, "
          f"D = {co.D:.4f}, eta = {co.eta:.4f}")
    print(f"  verdict: {verdict.verdict}  ({verdict.reason})")
    if verdict.rightmost is not None:
        print(f"  rightmost spectral abscissa: {verdict.rightmost:.6f}")

# the raw root finder is available directly: all characteristic roots of the
# coexistence quasi-polynomial inside the default search box
qp = quasi_polynomial(model, linearize_at(model, coex))
abscissa, roots = rightmost_abscissa(qp)
print(f"\ncoexistence characteristic roots (upper half plane):")
for z in roots:
    print(f"  {z.real:+.6f} {z.imag:+.6f}i")
