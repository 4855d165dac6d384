"""Non-strict Archimedean copulas: the integral test and what it leaves out.

For each family we locate the parameter where the test integral reaches 1,
then compare the integral with the numerically estimated rho_1. Non-strict
generators put mass -phi(0)/phi'(0) on the curve phi(u) + phi(v) = phi(0),
and that singular part keeps rho_1 well above the integral's square root.

Run: python3 demos/archimedean_threshold.py
"""

import math

from copulamix import Grid, assemble_operator, rho1_estimate
from copulamix.archimedean import (boundary_mass, example2_generator, example2_integral,
                                   example3_generator, example3_integral, make_archimedean,
                                   theorem4_critical_parameter, theorem4_integral)

grid = Grid.midpoint(512)

root2 = theorem4_critical_parameter("example2", (0.01, 0.9), grid=grid)
root3 = theorem4_critical_parameter("example3", (1.01, 2.0), grid=grid)
print(f"example2 root {root2:.4f}; closed form at 0.348 = {example2_integral(0.348):.4f}")
print(f"example3 root {root3:.4f}; closed form at root = {example3_integral(root3):.5f}")

print("\nfamily    theta  integral  sqrt     rho_1    curve mass")
for name, make, thetas in (("example2", example2_generator, (0.1, 0.3)),
                           ("example3", example3_generator, (1.1, 1.2, 1.3))):
    for theta in thetas:
        gen = make(theta)
        value = theorem4_integral(gen, grid)
        rho = rho1_estimate(assemble_operator(make_archimedean(gen), grid))
        print(f"{name}  {theta:5.2f}  {value:8.5f}  {math.sqrt(value):.4f}  {rho:.4f}   "
              f"{boundary_mass(gen):.4f}")
