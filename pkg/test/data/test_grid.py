import itertools

import numpy as np
import pytest

from semiflex.data import (
    Classification,
    Domain,
    DomainKind,
    PointClass,
    boundary_ratio,
    build_grid,
    neighbor_offsets,
    neighbors,
)
from semiflex.errors import EmptyInterior, OutOfDomain


@pytest.mark.parametrize("d,count", [(1, 4), (2, 12), (3, 24)])
def test_neighbor_offsets(d, count):
    offsets = neighbor_offsets(d)
    assert offsets.shape == (count, d)
    assert (np.abs(offsets).sum(axis=1) <= 2).all()
    assert len({tuple(eta) for eta in offsets}) == count
    assert [tuple(eta) for eta in offsets] == sorted(tuple(eta) for eta in offsets)


def test_box_d1():
    g = build_grid(Domain(DomainKind.BOX, 1), 8)
    assert g.n == 5
    assert [tuple(x) for x in g.unknowns] == [(k,) for k in range(2, 7)]
    assert g.counts() == {"R*": 1, "B*": 4, "B": 4}
    assert g.point_class((4,)) == PointClass.INTERIOR
    assert g.point_class((3,)) == PointClass.NEAR_BOUNDARY
    assert g.point_class((1,)) == PointClass.BOUNDARY
    assert g.point_class((9,)) == PointClass.OUTSIDE
    assert g.point_class((100,)) == PointClass.OUTSIDE


def test_box_d1_smallest():
    g = build_grid(Domain(DomainKind.BOX, 1), 5)
    assert [tuple(x) for x in g.unknowns] == [(2,), (3,)]
    assert g.counts()["R*"] == 0

    with pytest.raises(EmptyInterior):
        build_grid(Domain(DomainKind.BOX, 1), 3)


def test_chain():
    g = build_grid(Domain(DomainKind.BOX, 1), 4, Classification.CHAIN)
    assert [tuple(x) for x in g.unknowns] == [(1,), (2,), (3,)]
    boundary = np.argwhere(g.boundary_mask).ravel() + g.origin[0]
    assert list(boundary) == [0, 4, 5]

    with pytest.raises(ValueError):
        build_grid(Domain(DomainKind.BOX, 2), 4, Classification.CHAIN)


def test_box_d2():
    g = build_grid(Domain(DomainKind.BOX, 2), 8)
    assert g.n == 25
    assert g.counts() == {"R*": 1, "B*": 24, "B": 56}
    assert g.point_class((4, 4)) == PointClass.INTERIOR
    assert g.unknown_index((2, 2)) == 0
    assert g.unknown_index((6, 6)) == 24
    assert g.unknown_index((1, 4)) == -1


@pytest.mark.parametrize(
    "N,counts",
    [
        (4, {"R*": 1, "B*": 12, "B": 36}),
        (8, {"R*": 53, "B*": 60, "B": 84}),
    ],
)
def test_disc(N, counts):
    g = build_grid(Domain(DomainKind.DISC, 2), N)
    assert g.counts() == counts
    points = g.points()
    assert ((points**2).sum(axis=1) <= N * N).all()
    # symmetric under reflection
    assert np.array_equal(g.classes, g.classes[::-1, :])
    assert np.array_equal(g.classes, g.classes.T)


def test_disc_dimension():
    with pytest.raises(ValueError):
        Domain(DomainKind.DISC, 1)


def test_classification_consistency():
    g = build_grid(Domain(DomainKind.BOX, 2), 12)
    offsets = neighbor_offsets(2)
    for x in g.unknowns:
        assert all(g.point_class(y) != PointClass.OUTSIDE for y in neighbors(g, x))
    for x in np.argwhere(g.deep_mask) + g.origin:
        assert all(g.point_class(x + eta) >= PointClass.NEAR_BOUNDARY for eta in offsets)
    assert g.interior_mask.sum() == g.n
    assert (g.domain_mask == (g.interior_mask | g.boundary_mask)).all()


def test_neighbors():
    g = build_grid(Domain(DomainKind.BOX, 1), 8)
    assert neighbors(g, (4,)) == [(2,), (3,), (5,), (6,)]
    with pytest.raises(OutOfDomain):
        neighbors(g, (20,))


def test_grid_table():
    g = build_grid(Domain(DomainKind.BOX, 1), 8)
    table = g.to_table()
    assert table.columns == ["x_1", "class"]
    assert len(table) == 9
    assert table.df["x_1"].iloc[-1] == 1.0
    assert list(table.df["class"]) == ["B", "B", "B*", "B*", "R*", "B*", "B*", "B", "B"]
    assert table.metadata["count_R*"] == 1


def test_boundary_ratio():
    for N in [16, 32, 64]:
        g = build_grid(Domain(DomainKind.BOX, 2), N)
        # two layers of B* along four sides
        assert boundary_ratio(g) == pytest.approx((8 * N - 40) / N)


@pytest.mark.parametrize("d,N", [(2, 9), (2, 12), (3, 8)])
def test_box_symmetry(d, N):
    classes = build_grid(Domain(DomainKind.BOX, d), N).classes
    for axis in range(d):
        assert np.array_equal(classes, np.flip(classes, axis=axis))
    for perm in itertools.permutations(range(d)):
        assert np.array_equal(classes, np.transpose(classes, perm))


@pytest.mark.parametrize(
    "kind,d,N", [(DomainKind.BOX, 1, 8), (DomainKind.BOX, 2, 8), (DomainKind.DISC, 2, 7)]
)
def test_refinement_deepens(kind, d, N):
    coarse = build_grid(Domain(kind, d), N)
    fine = build_grid(Domain(kind, d), 2 * N)
    # same physical point, twice the lattice coordinates
    assert all(fine.point_class(2 * p) == PointClass.INTERIOR for p in coarse.unknowns)
    for cls in (PointClass.BOUNDARY, PointClass.NEAR_BOUNDARY, PointClass.INTERIOR):
        points = np.argwhere(coarse.classes == cls) + coarse.origin
        assert all(fine.point_class(2 * p) >= cls for p in points)
