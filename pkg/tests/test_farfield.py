import numpy as np
import pytest

from polyscat.errors import DirectionMismatch, InputError
from polyscat.farfield import (
    FarFieldPattern,
    far_field,
    far_field_distance,
    read_pattern_csv,
    relative_l2,
    sphere_directions,
    write_pattern_csv,
)
from polyscat.forward import IncidentWave, solve_total_field
from polyscat.grid import Grid
from polyscat.media import ball_potential, builtin_potential
from polyscat.reference import born_ball_far_field, disc_far_field


def _pattern(vals, n=2):
    d = sphere_directions(n, len(vals))
    return FarFieldPattern(d, np.asarray(vals, complex), 1.0, np.eye(n)[0])


def test_directions_are_unit():
    for n, m in ((2, 16), (3, 100)):
        d = sphere_directions(n, m)
        assert d.shape == (m, n) and np.allclose(np.linalg.norm(d, axis=1), 1)
    t = np.arctan2(*sphere_directions(2, 8)[:, ::-1].T) % (2 * np.pi)
    assert np.allclose(np.diff(t), 2 * np.pi / 8)


def test_zero_potential_zero_pattern():
    g = Grid(2, 1.0, 32)
    sol = solve_total_field(builtin_potential("square", 0.0), IncidentWave(np.array([1.0, 0.0]), 1.0), g)
    A = far_field(None, sol, directions=16)
    assert not np.any(A.values)


def test_distance_identities():
    A = _pattern(np.exp(1j * np.arange(12)))
    assert far_field_distance(A, A) == 0.0
    B = _pattern(2 * A.values)
    assert far_field_distance(A, B) == pytest.approx(1 / 3, rel=1e-14)


def test_distance_direction_mismatch():
    with pytest.raises(DirectionMismatch):
        far_field_distance(_pattern(np.ones(8)), _pattern(np.ones(9)))
    A = _pattern(np.ones(8))
    with pytest.raises(DirectionMismatch):
        far_field_distance(A, FarFieldPattern(A.directions, A.values, 2.0, A.incident))


def test_pattern_validation():
    with pytest.raises(InputError):
        FarFieldPattern(np.ones((3, 2)), np.ones(3), 1.0, [1, 0])


def test_equal_weight_norm():
    A = _pattern(np.ones(32))
    assert A.norm() == pytest.approx(np.sqrt(2 * np.pi))


def test_born_ball_small_grid():
    # coarse version of the 3D acceptance check: Born regime, 48^3
    k, a = 2.0, 0.5
    V0 = 0.05 / k**2
    g = Grid(3, 0.75, 48)
    inc = IncidentWave(np.array([0.0, 0.0, 1.0]), k)
    sol = solve_total_field(ball_potential(np.zeros(3), a, V0), inc, g, tol=1e-10)
    A = far_field(None, sol, directions=64)
    ref = born_ball_far_field(A.directions, inc.d, k, a, V0)
    assert relative_l2(A, ref) < 0.02


def test_disc_pattern_coarse():
    k, a, V = 1.0, 1.0, 0.5
    g = Grid(2, 1.5, 64)
    sol = solve_total_field(builtin_potential("disc", V, radius=a), IncidentWave(np.array([1.0, 0.0]), k), g, tol=1e-10)
    A = far_field(None, sol, directions=64)
    theta = np.arctan2(A.directions[:, 1], A.directions[:, 0])
    assert relative_l2(A, disc_far_field(theta, k, a, V)) < 0.03


def test_direction_refinement_stability():
    g = Grid(2, 1.5, 64)
    sol = solve_total_field(builtin_potential("disc", 0.5, radius=1.0), IncidentWave(np.array([1.0, 0.0]), 1.0), g, tol=1e-10)
    n1, n2 = far_field(None, sol, directions=64).norm(), far_field(None, sol, directions=128).norm()
    assert abs(n1 - n2) / n2 <= 1e-3


def test_translation_covariance():
    k = 2.0
    g = Grid(2, 1.0, 64)
    t = np.array([4, -2]) * g.h
    inc = IncidentWave(np.array([0.6, 0.8]), k)
    s0 = solve_total_field(builtin_potential("square", 0.3, side=0.6), inc, g, tol=1e-12)
    s1 = solve_total_field(builtin_potential("square", 0.3, side=0.6, center=tuple(t)), inc, g, tol=1e-12)
    A0 = far_field(None, s0, directions=32)
    A1 = far_field(None, s1, directions=32)
    phase = np.exp(1j * k * (inc.d[None, :] - A0.directions) @ t)
    assert np.max(np.abs(A1.values - phase * A0.values)) <= 1e-6 * np.max(np.abs(A0.values))


def test_translation_covariance_vs_born_ball():
    k, a, V0 = 1.5, 0.4, 0.01
    c = np.array([0.1, -0.05, 0.0])
    ref0 = born_ball_far_field(sphere_directions(3, 8), np.array([1.0, 0, 0]), k, a, V0)
    ref1 = born_ball_far_field(sphere_directions(3, 8), np.array([1.0, 0, 0]), k, a, V0, center=c)
    assert np.allclose(np.abs(ref0), np.abs(ref1))


def test_pattern_csv_roundtrip(tmp_path):
    for n in (2, 3):
        A = FarFieldPattern(sphere_directions(n, 20), np.exp(1j * np.arange(20)) * np.arange(20), 1.5, np.eye(n)[0])
        p = write_pattern_csv(A, tmp_path / f"A{n}.csv", "abc")
        B, header = read_pattern_csv(p)
        assert header["geometry"] == "abc" and header["k"] == 1.5
        assert np.allclose(B.directions, A.directions, atol=1e-14)
        assert np.array_equal(B.values, A.values)
