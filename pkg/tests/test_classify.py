import itertools
import json
import math

import numpy as np
import pytest

from vna import domain as dm
from vna.classify import (
    BergmanConfig, ClassifyConfig, ImageHasNoInterior, classify_vna, commutation_check,
    deformation_experiment, monomial_pair_classification,
)
from vna.monodromy import Admissibility
from vna.poly import parse_polymap


def test_monomial_pair_grid_counts():
    for k, l, k2, l2 in itertools.product(range(5), repeat=4):
        D = k * l2 - k2 * l
        if D == 0:
            with pytest.raises(ImageHasNoInterior):
                monomial_pair_classification(k, l, k2, l2)
            continue
        out = monomial_pair_classification(k, l, k2, l2)
        # the root-of-unity automorphisms form a group of order |D|
        assert out["dim"] == abs(D)
        assert out["trivial"] == (abs(D) == 1)


def test_monomial_pair_automorphisms_fix_the_map():
    out = monomial_pair_classification(1, 2, 2, 1)
    F = parse_polymap(["z1*z2^2", "z1^2*z2"])
    z = np.array([0.3 + 0.2j, -0.1 + 0.5j])
    q = abs(out["D"])
    for a, b in out["automorphisms"]:
        w = z * np.exp(2j * np.pi * np.array([a, b]) / q)
        assert np.allclose(F(w), F(z))


@pytest.mark.parametrize("texts, d, dim", [
    (["z1*z2^2", "z1^2*z2"], dm.Polydisk(2), 3),
    (["z^3"], dm.Polydisk(1), 3),
    (["z1", "z2"], dm.Ball(2), 1),
])
def test_small_classifications(texts, d, dim):
    cfg = ClassifyConfig(seed=1, bergman=BergmanConfig(max_degree=10))
    rep = classify_vna(parse_polymap(texts), d, cfg)
    assert rep.dim_vna == dim
    assert rep.admissible_count == dim
    assert rep.trivial == (dim == 1)
    assert rep.abelian["verdict"] == "Yes"
    assert all(e["dim"] == dim for e in rep.commutant_dims_by_N)
    json.dumps(rep.to_json())


def test_image_without_interior():
    with pytest.raises(ImageHasNoInterior):
        classify_vna(parse_polymap(["(z1+z2)^2", "(z1+z2)^3"]), dm.Polydisk(2), ClassifyConfig(bergman=None))


def test_non_square_map_uses_the_commutant():
    cfg = ClassifyConfig(seed=0, bergman=BergmanConfig(max_degree=8, count=3))
    rep = classify_vna(parse_polymap(["z1*z2"]), dm.Ball(2), cfg)
    assert rep.dim_vna == "Unbounded"
    assert rep.fiber_count is None


def test_commutation_check_finds_dihedral_pairs():
    rep = classify_vna(parse_polymap(["z1^2+z2^2", "z1^2*z2^2"]), dm.Polydisk(2), ClassifyConfig(seed=2, bergman=None))
    chk = commutation_check(dm.Polydisk(2), rep.classes, np.random.default_rng(0))
    assert chk["verdict"] == "No"
    a, b = chk["witness"][:2]
    fa, fb = rep.classes[a].forms[0], rep.classes[b].forms[0]
    z = np.array([0.2 + 0.1j, -0.3 + 0.4j])
    assert not np.allclose(fa(fb(z)), fb(fa(z)))
    # D4 has a center of order 2, so 12 of the 28 pairs of distinct elements fail to commute
    assert len(chk["noncommuting_pairs"]) == 12


def test_deformation_on_the_disk():
    # z^2 on the disk minus a small ball: -z moves the hole, so only the identity survives
    F = parse_polymap(["z^2"])
    ball = dm.ClosedBall((0.5,), 0.01)
    cfg = ClassifyConfig(seed=0, bergman=BergmanConfig(max_degree=8))
    out = deformation_experiment(F, dm.Polydisk(1), [ball], cfg)
    before, after = out["before"], out["after"]
    assert before.dim_vna == 2 and after.dim_vna == 1
    assert after.trivial and out["monotone"]
    assert out["collapsed_classes"] == ["{-z}"]
    flipped = [c for c in after.classes if not c.is_identity_class]
    assert flipped[0].admissibility is Admissibility.NOT_ADMISSIBLE
    w = flipped[0].witness
    assert math.isclose(dm.signed_distance(dm.Difference(dm.Polydisk(1), (ball,)), w.partner), -0.01, abs_tol=1e-9)


def test_deformation_keeps_symmetric_holes():
    # removing balls at +-1/2 is compatible with -z
    F = parse_polymap(["z^2"])
    balls = [dm.ClosedBall((0.5,), 0.01), dm.ClosedBall((-0.5,), 0.01)]
    out = deformation_experiment(F, dm.Polydisk(1), balls, ClassifyConfig(seed=0, bergman=None))
    assert out["after"].admissible_count == 2
    assert out["collapsed_classes"] == []


def test_report_is_seed_stable_in_substance():
    F = parse_polymap(["z1*z2^2", "z1+z2^2"])
    reps = [classify_vna(F, dm.Polydisk(2), ClassifyConfig(seed=s, bergman=None)) for s in (0, 5)]
    for rep in reps:
        assert sorted(c.size for c in rep.classes) == [1, 1, 2]
        assert rep.admissible_count == 3
