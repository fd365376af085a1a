"""Split a product of a molecule and a rough series into four paraproduct pieces.

Prints the L2 size of each piece, checks that the pieces add back up to the
product, and shows how the ratio against the source norms behaves as the
grid is refined.
"""
from renormprod import campanato, maximal, paraproducts, wavelets
from renormprod.experiments import FourierSeries, Molecule, trial_rng
from renormprod.grid import Grid

p = 0.5
alpha = 1 / p - 1
rng = trial_rng(1, 0)
mol = Molecule.draw(rng, 8, order=2)
series = FourierSeries.draw(rng, 8, alpha=alpha)
filt = wavelets.build_filter(6)

ratios = []
print(f"{'J':>3} {'residual':>10} {'pi1':>9} {'pi2':>9} {'pi3':>9} {'pi4':>9} {'hPhi(pi2)/(hp*Lip)':>20}")
for J in (8, 10, 12):
    grid = Grid(1, J, 8)
    f, g = mol.sample(grid), series.sample(grid)
    res = paraproducts.renormalize(f, g, filt)
    resid = paraproducts.relative_residual(f, g, res)
    sizes = [c.lp(2) for c in res.components]
    ratio = maximal.hardy_quasinorm(res.pi2, "hPhi", p) / (
        maximal.hardy_quasinorm(f, "hp", p) * campanato.lipschitz_norm(g, alpha))
    ratios.append(ratio)
    print(f"{J:>3} {resid:10.1e} " + " ".join(f"{s:9.3e}" for s in sizes) + f" {ratio:20.5f}")

print(f"\nspread of the last column across J: {max(ratios) / min(ratios):.4f}")
