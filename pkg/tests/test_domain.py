import numpy as np
import pytest

from vna import domain as dm

DOMAINS = [
    dm.Polydisk(2),
    dm.Ball(2),
    dm.Ball(3),
    dm.Annulus(0.5),
    dm.Difference(dm.Polydisk(2), (dm.ClosedBall((0.5, 0.5j), 0.01),)),
]


@pytest.mark.parametrize("d", DOMAINS, ids=repr)
def test_interior_samples_are_inside(d):
    rng = np.random.default_rng(0)
    Z = dm.sample_interior(d, 200, 1e-3, rng)
    assert Z.shape == (200, d.dim)
    assert np.all(dm.signed_distance(d, Z) > 1e-3)
    assert all(r is dm.Region.INSIDE for r in dm.classify_point(d, Z, 1e-3))


@pytest.mark.parametrize("d", DOMAINS[:4], ids=repr)
def test_boundary_samples_are_on_the_boundary(d):
    Z = dm.sample_boundary(d, 100, np.random.default_rng(1))
    assert np.abs(dm.signed_distance(d, Z)).max() < 1e-12


def test_signed_distance_values():
    assert dm.signed_distance(dm.Polydisk(2), np.array([0.5, 0.9j])) == pytest.approx(0.1)
    assert dm.signed_distance(dm.Ball(2), np.array([0.6, 0.0])) == pytest.approx(0.4)
    ann = dm.Annulus(0.5)
    assert dm.signed_distance(ann, np.array([1.0])) == pytest.approx(0.5)
    assert dm.signed_distance(ann, np.array([0.25])) < 0
    hole = DOMAINS[-1]
    assert dm.signed_distance(hole, np.array([0.5, 0.5j])) == pytest.approx(-0.01)


def test_classify_point_bands():
    d = dm.Polydisk(1)
    assert dm.classify_point(d, np.array([0.5]), 1e-6) is dm.Region.INSIDE
    assert dm.classify_point(d, np.array([1.0]), 1e-6) is dm.Region.BOUNDARY_BAND
    assert dm.classify_point(d, np.array([1.1]), 1e-6) is dm.Region.OUTSIDE
    with pytest.raises(ValueError):
        dm.classify_point(d, np.array([0.5]), -1.0)


def test_infeasible_margin():
    with pytest.raises(dm.InfeasibleMarginError):
        dm.sample_interior(dm.Polydisk(1), 1, 2.0, np.random.default_rng(0))


def test_annulus_segments_stay_inside():
    ann = dm.Annulus(0.5)
    a, b = np.array([1.5]), np.array([-1.5 + 0.1j])
    ts = np.linspace(0, 1, 101)
    pts = np.array([dm.segment_point(ann, a, b, t) for t in ts])
    assert np.all(dm.signed_distance(ann, pts) > 0)
    assert dm.segment_clear(ann, a, b, 1e-3)
    # velocity is the derivative of the segment point
    h = 1e-6
    v = dm.segment_velocity(ann, a, b, 0.3)
    fd = (dm.segment_point(ann, a, b, 0.3 + h) - dm.segment_point(ann, a, b, 0.3 - h)) / (2 * h)
    assert np.allclose(v, fd, atol=1e-6)


def test_segment_through_removed_ball_is_not_clear():
    hole = DOMAINS[-1]
    assert not dm.segment_clear(hole, np.array([0.3, 0.5j]), np.array([0.7, 0.5j]), 0.0)


@pytest.mark.parametrize("d", DOMAINS, ids=repr)
def test_json_round_trip(d):
    assert dm.domain_from_json(dm.domain_to_json(d)) == d


def test_parse_complex():
    assert dm.parse_complex("0.5i") == 0.5j
    assert dm.parse_complex("-i") == -1j
    assert dm.parse_complex([1, 2]) == 1 + 2j
    assert dm.parse_complex("1-2i") == 1 - 2j


def test_difference_validation():
    with pytest.raises(ValueError):
        dm.Difference(dm.Polydisk(2), (dm.ClosedBall((0.995, 0), 0.01),))
    with pytest.raises(ValueError):
        dm.Difference(dm.Polydisk(2), (dm.ClosedBall((0, 0), 0.1), dm.ClosedBall((0.15, 0), 0.1)))
