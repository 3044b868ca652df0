import numpy as np
import pytest

from oracles import dense_sup
from polyscat.errors import InadmissiblePotential, InputError, SupportOutsideGrid
from polyscat.geometry import CellPartition, NestedFamily, pixel_lattice, square
from polyscat.grid import Grid
from polyscat.media import (
    AdmissiblePotential,
    PiecewiseConstantPotential,
    ball_potential,
    builtin_potential,
    contrast_product,
    potential_from_dict,
    rasterize,
    sup_norm,
    support_indicator,
)


def test_unit_square_aligned_raster():
    grid = Grid(2, 2.0, 16)  # h = 0.25, square faces on cell faces
    Vs = rasterize(builtin_potential("square", 1.0), grid)
    inside = np.all(np.abs(grid.points) < 0.5, axis=-1)
    assert inside.sum() == 16
    assert np.all(Vs[inside] == 1) and np.all(Vs[~inside] == 0)


def test_zero_potential_raster():
    V = builtin_potential("square", 0.0)
    assert not np.any(rasterize(V, Grid(2, 1.0, 32)))


@pytest.mark.parametrize("N", [32, 64])
def test_ball_volume(N):
    a = 0.6
    grid = Grid(3, 1.0, N)
    vol = grid.cell_volume * rasterize(ball_potential(np.zeros(3), a, 1.0), grid).real.sum()
    exact = 4 / 3 * np.pi * a**3
    assert abs(vol - exact) / exact < 2 * grid.h


def test_disc_area_converges():
    errs = []
    for N in (32, 64, 128):
        g = Grid(2, 1.0, N)
        area = g.cell_volume * rasterize(builtin_potential("disc", 1.0, radius=0.7), g).real.sum()
        errs.append(abs(area - np.pi * 0.49))
    assert errs[2] < errs[0]


def test_values_recovered_away_from_boundaries():
    cells = pixel_lattice((2, 2), 0.5)
    V = PiecewiseConstantPotential(CellPartition(tuple(cells), 0.05), [1, 2j, -1, 0.5])
    g = Grid(2, 1.0, 40)
    Vs = rasterize(V, g)
    pts = g.points.reshape(-1, 2)
    for cell, val in zip(cells, V.values):
        far = cell.facet_distance(pts) < -g.h
        assert np.all(Vs.reshape(-1)[far] == val)


def test_rasterization_l1_first_order():
    V = builtin_potential("disc", 1.0, radius=0.55)
    diffs = []
    for N in (32, 64, 128):
        g, g2 = Grid(2, 1.0, N), Grid(2, 1.0, 2 * N)
        a = rasterize(V, g)
        up = np.repeat(np.repeat(a, 2, axis=0), 2, axis=1)
        diffs.append(g2.cell_volume * np.abs(up - rasterize(V, g2)).sum())
    hs = 2.0 / np.array([32, 64, 128])
    # O(h): diff / h stays bounded and the fitted order is about 1
    assert np.all(np.array(diffs) / hs < 2 * diffs[0] / hs[0])
    assert np.polyfit(np.log(hs), np.log(diffs), 1)[0] > 0.8


def test_support_outside_grid():
    with pytest.raises(SupportOutsideGrid):
        rasterize(builtin_potential("square", 1.0, side=2.0), Grid(2, 1.0, 32))


def test_sup_norm_values():
    cells = pixel_lattice((1, 3), 0.5)
    V = PiecewiseConstantPotential(CellPartition(tuple(cells), 0.05), [1, -2j, 0])
    assert sup_norm(V) == 2.0
    assert contrast_product(V, 3.0) == pytest.approx(18.0)


def test_sup_norm_zero():
    assert sup_norm(builtin_potential("square", 0.0)) == 0.0


def test_sup_norm_admissible_dense_oracle():
    phi = lambda x: 2 + np.linalg.norm(x, axis=-1) ** 0.5
    P = square(center=(0.5, 0.5))
    V = AdmissiblePotential(P, phi, 0.5)
    assert abs(sup_norm(V) - dense_sup(phi, [0, 0], [1, 1])) < 1e-3


def test_admissible_rejects_vertex_zero():
    with pytest.raises(InadmissiblePotential):
        AdmissiblePotential(square(center=(0.5, 0.5)), lambda x: np.linalg.norm(x, axis=-1), 0.5)


def test_admissible_alpha_3d():
    from polyscat.geometry import cube

    with pytest.raises(InadmissiblePotential):
        AdmissiblePotential(cube(), lambda x: np.ones(len(x)), 0.2)
    AdmissiblePotential(cube(), lambda x: np.ones(len(x)), 0.3)


def test_nested_value_rules():
    fam = NestedFamily((square(side=1.5), square(side=0.5)), 0.1)
    with pytest.raises(InputError):
        PiecewiseConstantPotential(fam, [0.0, 1.0])
    with pytest.raises(InputError):
        PiecewiseConstantPotential(fam, [1.0, 1.0])
    V = PiecewiseConstantPotential(fam, [1.0, 3.0])
    g = Grid(2, 1.0, 32)
    Vs = rasterize(V, g)
    assert Vs[16, 16] == 3.0 and Vs[2, 16] == 0.0 and Vs[5, 16] == 1.0
    chi = support_indicator(V, g)
    assert chi.sum() * g.cell_volume == pytest.approx(2.25)


def test_empty_cell_must_be_zero():
    with pytest.raises(InputError):
        PiecewiseConstantPotential(CellPartition((square(), None), 0.1), [1.0, 2.0])


def test_complex_values_accepted():
    V = builtin_potential("square", 0.3 - 0.2j)
    assert rasterize(V, Grid(2, 1.0, 16))[8, 8] == 0.3 - 0.2j


def test_potential_from_dict_values_and_ordering():
    doc = {
        "dimension": 2,
        "cells": [{"shape": "box", "lo": [-1, -0.5], "hi": [0, 0.5]}, {"shape": "box", "lo": [0, -0.5], "hi": [1, 0.5]}],
        "ordering": [1, 0],
        "d0": 0.1,
        "values": [[1.0, 0.0], [0.0, 2.0]],
    }
    V = potential_from_dict(doc)
    assert V.structure.cells[0].centroid[0] > 0 and V.values[0] == 2j


def test_builtin_names():
    for name in ("disc", "ball", "square", "cube", "L-shape"):
        assert builtin_potential(name, 1.0).dimension in (2, 3)
    with pytest.raises(InputError):
        builtin_potential("torus")
