import itertools

import numpy as np
import pytest

from vna import domain as dm
from vna.fiber import solve_fiber
from vna.monodromy import (
    Admissibility, AdmissibilityConfig, MonodromyConfig, compute_monodromy, decide_admissibility,
    detect_deck_group, track_path,
)
from vna.poly import parse_polymap

NONABEL = parse_polymap(["z1^2+z2^2", "z1^2*z2^2"])
DIM3 = parse_polymap(["z1*z2^2", "z1+z2^2"])
TWELVE = parse_polymap(["z1^2*z2^4", "z1^2+z2^4"])


def test_track_path_lands_in_the_target_fiber():
    a, b = np.array([0.3 + 0.1j, -0.2 + 0.4j]), np.array([0.5 - 0.2j, 0.1 + 0.3j])
    start = solve_fiber(NONABEL, NONABEL(a)).points
    end = track_path(NONABEL, [a, b], start)
    assert np.abs(NONABEL(end) - NONABEL(b)).max() < 1e-10
    # distinct labels stay distinct and the endpoint fiber is covered
    target = solve_fiber(NONABEL, NONABEL(b)).points
    hits = {int(np.argmin(np.linalg.norm(target - w, axis=1))) for w in end}
    assert len(hits) == len(target)


def test_track_path_round_trip():
    path = [np.array([0.3 + 0.1j, -0.2 + 0.4j]), np.array([0.6j, 0.5]), np.array([-0.4, 0.2 - 0.3j])]
    start = solve_fiber(TWELVE, TWELVE(path[0])).points
    there = track_path(TWELVE, path, start)
    back = track_path(TWELVE, path[::-1], there)
    assert np.abs(back - start).max() < 1e-9


def test_single_start_point_follows_the_identity_branch():
    a, b = np.array([0.3 + 0.1j, -0.2 + 0.4j]), np.array([0.5 - 0.2j, 0.1 + 0.3j])
    assert np.allclose(track_path(NONABEL, [a, b], a), b, atol=1e-10)


def test_power_map_inverses_are_global():
    F = parse_polymap(["z^4"])
    act = compute_monodromy(F, dm.Polydisk(1), MonodromyConfig(seed=1))
    assert act.m == 4
    # loops live in the domain: their images wind a multiple of 4 times
    # around the branch value, so every local inverse z -> i^k z is global
    assert act.permutations == [(0, 1, 2, 3)]
    assert sorted(len(o) for o in act.orbits) == [1, 1, 1, 1]


@pytest.mark.parametrize("seed", [0, 7])
def test_orbit_partition_is_seed_independent(seed):
    act = compute_monodromy(DIM3, dm.Polydisk(2), MonodromyConfig(seed=seed))
    assert act.m == 4
    assert sorted(len(o) for o in act.orbits) == [1, 1, 2]
    assert np.allclose(act.fiber[0], act.base_point)


def test_nonabel_classes_and_deck_group():
    d = dm.Polydisk(2)
    act = compute_monodromy(NONABEL, d, MonodromyConfig(seed=3))
    classes = decide_admissibility(NONABEL, d, act, AdmissibilityConfig(seed=3))
    assert len(classes) == 8
    assert all(c.size == 1 and c.admissible for c in classes)
    g = detect_deck_group(NONABEL, d, classes, act)
    assert g.order == 8 and not g.abelian and g.name() == "D4"
    # independent oracle: every element maps the fiber of a random point to itself
    z = np.array([0.2 + 0.3j, -0.4 + 0.1j])
    for f in g.elements:
        assert np.allclose(NONABEL(f(z)), NONABEL(z))
    # table against pointwise composition
    for a, b in itertools.product(range(8), repeat=2):
        assert np.allclose(g.elements[a](g.elements[b](z)), g.elements[g.table[a][b]](z))


def test_twelve_on_ball_witnesses():
    d = dm.Ball(2)
    act = compute_monodromy(TWELVE, d, MonodromyConfig(seed=3))
    classes = decide_admissibility(TWELVE, d, act, AdmissibilityConfig(seed=3))
    adm = [c for c in classes if c.admissible]
    assert sum(c.size for c in classes) == 16
    assert len(adm) == 8
    for c in classes:
        if c.admissibility is Admissibility.NOT_ADMISSIBLE:
            w = c.witness
            assert dm.signed_distance(d, w.point) > 0
            assert dm.signed_distance(d, w.partner) < 0
            assert np.allclose(TWELVE(w.point), TWELVE(w.partner), atol=1e-9)
    g = detect_deck_group(TWELVE, d, classes, act)
    assert g.abelian and not g.cyclic and g.name() == "Z2×Z4"


def test_every_class_has_an_inverse_class():
    d = dm.Polydisk(2)
    act = compute_monodromy(TWELVE, d, MonodromyConfig(seed=42))
    classes = decide_admissibility(TWELVE, d, act, AdmissibilityConfig(seed=42))
    for c in classes:
        inv = classes[c.inverse_index]
        assert classes[inv.inverse_index].index == c.index
        assert inv.admissibility is c.admissibility
