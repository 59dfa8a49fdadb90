"""Punch a tiny hole in the bidisk and watch the dihedral symmetry collapse.

The map (z1^2 + z2^2, z1^2 z2^2) has eight global local inverses on the
bidisk.  Removing the closed ball of radius 1/100 at (1/2, i/2) leaves a
domain that none of them except the identity maps to itself.

Run with ``python3 demos/deformation.py``.
"""

from vna import domain as dm
from vna.classify import ClassifyConfig, deformation_experiment
from vna.poly import parse_polymap

F = parse_polymap(["z1^2+z2^2", "z1^2*z2^2"])
hole = dm.ClosedBall((0.5, 0.5j), 0.01)
out = deformation_experiment(F, dm.Polydisk(2), [hole], ClassifyConfig(seed=42, bergman=None))

before, after = out["before"], out["after"]
print(f"before: dim {before.dim_vna}, group {before.group['descriptor']}")
print(f"after:  dim {after.dim_vna}, trivial {after.trivial}")
print("\nwhy each symmetry fails on the punctured domain:")
for c in after.classes:
    if c.is_identity_class:
        continue
    w = c.witness
    print(f"  {c.describe():18s} sends {w.point.round(3)} to {w.partner.round(3)}, "
          f"{w.exit_distance:.3f} deep in the hole")
