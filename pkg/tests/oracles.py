"""Independent reference computations shared by the test modules."""

import numpy as np
from scipy.stats import qmc

from vna import domain as dm


def mc_norm_sq(d, alphas, n_log2=20, seed=0):
    """Quasi Monte-Carlo squared norms of z**alpha: integrate over a bounding box.

    Only the indicator of ``d`` (via its signed distance) is used, never a
    closed form for the norm.
    """
    dim = d.dim
    R = 1 / d.r if isinstance(d, dm.Annulus) else 1.0  # bound on each |z_k|
    pts = qmc.Sobol(2 * dim, scramble=True, seed=seed).random_base2(n_log2)
    X = (2 * pts - 1) * R
    Z = X[:, :dim] + 1j * X[:, dim:]
    inside = dm.signed_distance(d, Z) > 0
    Z = Z[inside]
    vol_box = (2 * R) ** (2 * dim)
    n = len(pts)
    mod2 = np.abs(Z) ** 2
    out = []
    for a in alphas:
        f = np.prod(mod2 ** np.asarray(a, dtype=float), axis=1)
        out.append(vol_box * f.sum() / n)
    return np.array(out)
