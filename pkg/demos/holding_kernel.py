"""A chain that holds with probability a|x|: beta-mixing without a spectral gap at a = 1.

The kernel on [-1, 1] stays put with probability a|x| and otherwise redraws
from k(1 - a|t|). Mapped to [0, 1] it is a copula with an identity atom of
weight a|2u - 1|. We print beta_n next to the sandwich bounds and compare
the direct kernel sampler with the generic copula sampler.

Run: python3 demos/holding_kernel.py
"""

from copulamix import Grid, dmr_sandwich, make_mh_copula, mixing_report, sample_chain, sample_mh_kernel
from copulamix.simulate import ks_increments, stay_fraction, to_unit

grid = Grid.midpoint(512)
for a in (0.5, 1.0):
    model = make_mh_copula(a)
    rep = mixing_report(model, grid, nmax=8, rho_steps=1)
    print(f"{model.label}: rho_1 = {rep.rho1:.4f}")
    print(" n   lower a^(n+1)/(n+1)  E p^n = a^n/(n+1)  beta_n    upper")
    for n, beta in enumerate(rep.beta_n, start=1):
        s = dmr_sandwich(a, n)
        print(f"{n:2d}   {s.lower:.5f}              {s.expectation:.5f}            "
              f"{beta:.5f}   {s.upper:.5f}")

    kernel = to_unit(sample_mh_kernel(a, 50_000, seed=3))
    chain = sample_chain(model, 50_000, seed=4)
    ks = ks_increments(kernel, chain)
    print(f"stay fraction kernel {stay_fraction(kernel):.4f}, copula {stay_fraction(chain):.4f}; "
          f"KS on increments p = {ks.pvalue:.3f}\n")
