"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from cones import random_cone, random_cone_2d, random_rho
from polyscat import forward
from polyscat.conelab import certify_nonvanishing, choose_rho, fan_transform, laplace_split_sweep
from polyscat.farfield import far_field, relative_l2, sphere_directions
from polyscat.forward import IncidentWave, solve_total_field
from polyscat.geometry import Cone
from polyscat.grid import Grid
from polyscat.identities import GridInterpolant, corner_limit, nodal_check, quarter_disc_study, scattered_norm_ratio
from polyscat.inverse import born_bound, distinguishability_campaign, pixel_spec, random_values, reconstruction_run, write_ledger
from polyscat.media import ball_potential, builtin_potential
from polyscat.reference import born_ball_far_field, disc_far_field, quadrature_cone_transform

SEED = 7
SQUARE_CONE = Cone(np.zeros(3), [[1, 1, 1], [-1, 1, 1], [-1, -1, 1], [1, -1, 1]])


@pytest.fixture(autouse=True)
def single_thread():
    old = forward.FFT_WORKERS
    forward.FFT_WORKERS = 1
    yield
    forward.FFT_WORKERS = old


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _disc_solution(d):
    grid = Grid(2, 1.5, 128)
    return solve_total_field(builtin_potential("disc", 0.5, radius=1.0), IncidentWave(np.asarray(d, float), 1.0), grid, tol=1e-10)


def test_01_disc_benchmark():
    t0 = time.perf_counter()
    sol = _disc_solution([1.0, 0.0])
    A = far_field(None, sol, directions=64)
    wall = time.perf_counter() - t0
    theta = np.arctan2(A.directions[:, 1], A.directions[:, 0])
    err = relative_l2(A, disc_far_field(theta, 1.0, 1.0, 0.5))
    report(1, "disc far field vs Bessel series", err <= 1e-2 and wall <= 60, f"rel L2 {err:.3e} (<= 1e-2), {wall:.1f} s (<= 60)")


def test_02_born_ball_3d():
    k, a = 2.0, 0.5
    V0 = 0.05 / k**2
    t0 = time.perf_counter()
    inc = IncidentWave(np.array([0.0, 0.0, 1.0]), k)
    sol = solve_total_field(ball_potential(np.zeros(3), a, V0), inc, Grid(3, 0.75, 64), tol=1e-10)
    A = far_field(None, sol, directions=64)
    wall = time.perf_counter() - t0
    err = relative_l2(A, born_ball_far_field(A.directions, inc.d, k, a, V0))
    report(2, "3D ball vs Born integral", err <= 1e-2 and wall <= 300, f"rel L2 {err:.3e} (<= 1e-2), {wall:.1f} s (<= 300)")


def test_03_reciprocity():
    rng = np.random.default_rng(SEED)
    inc_angles = rng.uniform(0, 2 * np.pi, 4)
    obs_angles = rng.uniform(0, 2 * np.pi, 4)
    unit = lambda t: np.array([np.cos(t), np.sin(t)])
    fwd = {i: _disc_solution(unit(t)) for i, t in enumerate(inc_angles)}
    back = {j: _disc_solution(-unit(t)) for j, t in enumerate(obs_angles)}
    worst, scale = 0.0, 0.0
    for i, ti in enumerate(inc_angles):
        for j, tj in enumerate(obs_angles):
            a = far_field(None, fwd[i], directions=unit(tj)[None]).values[0]
            b = far_field(None, back[j], directions=-unit(ti)[None]).values[0]
            worst = max(worst, abs(a - b))
            scale = max(scale, abs(a))
    rel = worst / scale
    report(3, "reciprocity over 16 direction pairs", rel <= 1e-3, f"max rel deviation {rel:.3e} (<= 1e-3)")


def test_04_scattered_norm_scaling():
    k = 2.0
    grid = Grid(2, 1.0, 128)
    inc = IncidentWave(np.array([1.0, 0.0]), k)
    ratios = []
    for contrast in (0.1, 0.05):
        V = builtin_potential("disc", contrast / k**2, radius=0.6)
        ratios.append(scattered_norm_ratio(solve_total_field(V, inc, grid, tol=1e-10), V))
    change = abs(ratios[1] - ratios[0]) / ratios[0]
    report(4, "scattered H2 norm ratio under halving", change <= 0.2, f"ratios {ratios[0]:.4f} -> {ratios[1]:.4f}, change {change:.2%} (<= 20%)")


def test_05_nodal_bound():
    spec = pixel_spec(seed=SEED)
    rng = np.random.default_rng(SEED)
    mins = []
    for _ in range(10):
        v = random_values(rng, spec.n_cells, born_bound(spec, 0.05))
        assert spec.incident.k**2 * np.abs(v).max() <= 0.05 + 1e-12
        mins.append(nodal_check(spec.solve(v)).min_abs_u)
    report(5, "min |u| for 10 small-contrast pixel potentials", min(mins) >= 0.5, f"min {min(mins):.4f} (>= 0.5)")


def test_06_cone_transforms():
    rng = np.random.default_rng(SEED)
    quad_err = root_err = hom_err = 0.0
    for i in range(100):
        for cone, rho in ((c := random_cone(rng), choose_rho(c, 0.1).rho), (c2 := random_cone_2d(rng), random_rho(c2, rng))):
            T = fan_transform(cone, rho)
            ref, tail = quadrature_cone_transform(cone.generators, rho)
            quad_err = max(quad_err, abs(T - ref) / abs(ref))
            for r in range(1, len(cone.generators)):
                root_err = max(root_err, abs(fan_transform(cone, rho, root=r) - T) / abs(T))
            s = rng.uniform(0.1, 10)
            n = cone.dimension
            hom_err = max(hom_err, abs(fan_transform(cone, s * rho) - s**-n * T) / abs(s**-n * T))
    ok = quad_err <= 1e-8 and root_err <= 1e-12 and hom_err <= 1e-12
    report(6, "cone transforms on 100 random 2D and 100 random 3D cones", ok,
           f"quadrature {quad_err:.2e} (<= 1e-8), fan root {root_err:.2e} (<= 1e-12), homogeneity {hom_err:.2e} (<= 1e-12)")


def test_07_laplace_split():
    eps = [0.2, 0.1, 0.05, 0.025]
    recs = laplace_split_sweep(SQUARE_CONE, eps)
    c1 = [abs(r["C1_part"]) for r in recs]
    cp = [abs(r["Cprime_part"]) for r in recs]
    growth = min(b / a for a, b in zip(c1, c1[1:]))
    spread = (max(cp) - min(cp)) / max(cp)
    cert = max(certify_nonvanishing(SQUARE_CONE, [1, 2, 4, 8, 16, 32, 64, 128], rho=choose_rho(SQUARE_CONE, e)).spread for e in eps)
    ok = growth >= 1.8 and spread <= 0.1 and cert <= 1e-10
    report(7, "Laplace split on the square-based cone", ok,
           f"C1 growth per halving {growth:.3f} (>= 1.8), C' variation {spread:.2%} (<= 10%), s^n|T| spread {cert:.1e} (<= 1e-10)")


def test_08_orthogonality_convergence():
    study = quarter_disc_study(hs=(1 / 32, 1 / 64, 1 / 128))
    res = ", ".join(f"{r:.2e}" for r in study.residuals)
    ok = study.order >= 1 and study.residuals[-1] < study.residuals[0]
    report(8, "orthogonality residual on the quarter disc", ok, f"residuals {res}, observed order {study.order:.2f} (>= 1)")


def test_09_corner_limit():
    k, V, Vp, side = 1.0, 1.0, 0.5, 1.0
    grid = Grid.from_step(2, 1.0, 1 / 64)
    solp = solve_total_field(builtin_potential("square", Vp, side=side), IncidentWave(np.array([1.0, 0.0]), k), grid, tol=1e-11)
    xc = np.array([-side / 2, -side / 2])
    up = GridInterpolant(grid, solp.u)
    dq = k**2 * (V - Vp)
    lim = corner_limit(Cone(xc, np.eye(2)), 0.5, dq, up, s_list=(16, 32, 64, 128))
    ref = dq * up(xc[None])[0]
    err = abs(lim.limit - ref) / abs(ref)
    report(9, "corner limit with Richardson extrapolation", err <= 0.05, f"limit {lim.limit:.6f} vs {ref:.6f}, rel {err:.2e} (<= 5%)")


def _campaign():
    return distinguishability_campaign(pixel_spec(seed=SEED), n_pairs=50, contrast=0.05, floor=1e-6)


def _reconstruction():
    t0 = time.perf_counter()
    rec = reconstruction_run(pixel_spec(seed=SEED), contrast=0.05, maxit=50)
    return rec, time.perf_counter() - t0


@pytest.fixture(scope="module")
def campaign():
    return _campaign()


@pytest.fixture(scope="module")
def reconstruction():
    return _reconstruction()


def test_10_distinguishability_campaign(campaign):
    gaps = [r["gap"] for r in campaign]
    flagged = [r["pair"] for r in campaign if r["counterexample_candidate"]]
    ok = len(campaign) == 50 and not flagged and min(gaps) >= 1e-6
    report(10, "distinguishability over 50 seeded pairs", ok, f"min gap {min(gaps):.3e} (>= 1e-6), counterexample candidates {flagged}")


def test_11_reconstruction(reconstruction):
    rec, wall = reconstruction
    ok = rec["max_relative_error"] <= 1e-3 and rec["iterations"] <= 50 and wall <= 600
    report(11, "single-pattern reconstruction of 9 values", ok,
           f"max rel error {rec['max_relative_error']:.2e} (<= 1e-3), {rec['iterations']} iterations (<= 50), {wall:.1f} s (<= 600)")


def test_12_determinism(campaign, reconstruction, tmp_path):
    first = [write_ledger(campaign, tmp_path / "c1.jsonl"), write_ledger([reconstruction[0]], tmp_path / "r1.jsonl")]
    second = [write_ledger(_campaign(), tmp_path / "c2.jsonl"), write_ledger([_reconstruction()[0]], tmp_path / "r2.jsonl")]
    same = [a.read_bytes() == b.read_bytes() for a, b in zip(first, second)]
    report(12, "rerun ledgers byte-identical", all(same), f"campaign {same[0]}, reconstruction {same[1]}")
