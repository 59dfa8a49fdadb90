"""The Zhukovski map on an annulus and its one nontrivial reducing operator.

f(z) = (z + 1/z) / 2 is two-to-one on r < |z| < 1/r.  The second local
inverse is z -> 1/z, and the operator it induces sends z^n to -z^(-n-2).

Run with ``python3 demos/annulus.py``.
"""

import numpy as np

from vna import domain as dm
from vna.bergman import BergmanModel, commutant_dimension, commutator_residual, mult_matrix
from vna.classify import ClassifyConfig, BergmanConfig, classify_vna
from vna.poly import parse_polymap

F = parse_polymap(["0.5*z+0.5*z^-1"])
ann = dm.Annulus(0.5)
rep = classify_vna(F, ann, ClassifyConfig(seed=0, bergman=BergmanConfig(max_degree=8)))
print("classes:", ", ".join(c.describe() for c in rep.classes))
print("dim V*:", rep.dim_vna, "| group:", rep.group["descriptor"])

model = BergmanModel(ann, 12)
S = np.zeros((model.size, model.size))
for j, (n,) in enumerate(model.index_set):
    i = model.position.get((-n - 2,))
    if i is not None:
        S[i, j] = -1
A = mult_matrix(model, F.components[0])
print(f"[S, M_f] residual on the exact band: {commutator_residual(model, S, A, 1):.1e}")
for N in (6, 8, 10, 12):
    m = BergmanModel(ann, N)
    print(f"commutant dimension at N={N}: {commutant_dimension(m, [mult_matrix(m, F.components[0])]).dim}")
