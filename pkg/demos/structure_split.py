"""Cut a spiky function into an h^1 part and an h^p part built from atoms.

The grand maximal function decides where each Calderon-Zygmund piece goes;
the script prints how many atoms land on each side and checks every one.
"""
import numpy as np

from renormprod import atoms, maximal
from renormprod.grid import Grid

p = 0.5
grid = Grid(1, 9, 8)
f = grid.sample(lambda x: 6 * np.exp(-((x - 2.0) / 0.05) ** 2) - 2 * np.exp(-((x - 5.5) / 0.4) ** 2))

split = atoms.structure_split(f, p)
reports = list(atoms.atom_reports(split, p, d=1))
bad = sum(not r.overall for _, r in reports)

print(f"reconstruction error    {(split.f0 + split.f1 - f).sup():.2e}")
print(f"atoms in the h^1 part   {len(split.atoms0)}")
print(f"atoms in the h^p part   {len(split.atoms1)}")
print(f"atoms failing a check   {bad}")
print(f"||f||_hPhi              {maximal.hardy_quasinorm(f, 'hPhi', p):.4f}")
print(f"||f0||_h1               {maximal.hardy_quasinorm(split.f0, 'hp', 1.0):.4f}")
print(f"||f1||_hp               {maximal.hardy_quasinorm(split.f1, 'hp', p):.4f}")
print(f"level constant          {split.constant:.4f}")
