import numpy as np
import pytest

from ma_chanest.channel import (ChannelScene, PathResponseTensor, Region, cfr,
                                matricize_prt)
from ma_chanest.pilots import PilotGrid, build_plan, synthesize_pilots
from ma_chanest.prt_ls import (WARN_UNDERDETERMINED, EstimatedMpcs, build_dmat,
                               build_psi, ls_estimate_x, mpcs_from_json,
                               mpcs_to_json, reconstruct_cfr,
                               reconstruct_cfr_grid, somp_pipeline)
from ma_chanest.scene import SceneConfig, sample_scene, snap_scene_to_grids
from ma_chanest.somp import AngleGrid, DelayGrid

K = 256
TS = 12.5e-9


def make_setup(seed, num_tx=4, num_rx=3, num_joint=10):
    rng = np.random.default_rng(seed)
    scene = sample_scene(SceneConfig(), rng)
    plan = build_plan(Region(3.0), Region(3.0), num_tx, num_rx, num_joint,
                      "random", rng)
    grid = PilotGrid(K, 16)
    obs = synthesize_pilots(scene, plan, grid, 1.0, 0.0, rng)
    return scene, plan, grid, obs


def test_psi_single_pair_unit_modulus():
    plan = build_plan(Region(3.0), Region(3.0), 4, 4, 3, "random",
                      np.random.default_rng(0))
    psi = build_psi([(0.3, -0.2)], [(0.1, 0.9)], plan)
    assert psi.shape == (11, 1)
    assert np.allclose(np.abs(psi), 1.0)


def test_psi_step1_reference_rows():
    # during step 1 the rx antenna is parked, so its FRV factor is one
    plan = build_plan(Region(3.0), Region(3.0), 4, 4, 3, "random",
                      np.random.default_rng(1))
    tx_ang = [(0.3, -0.2), (0.5, 0.5)]
    rx_ang = [(0.1, 0.9)]
    psi = build_psi(tx_ang, rx_ang, plan)
    from ma_chanest.channel import frv_matrix
    g = frv_matrix(plan.tx_positions, tx_ang)
    assert np.allclose(psi[:4], g)


def test_factorization_identity_noiseless():
    # stacked pilots factor exactly through psi, the matricized tensor, and D
    for seed in range(5):
        scene, plan, grid, obs = make_setup(seed)
        psi = build_psi(scene.tx_virtual_angles, scene.rx_virtual_angles, plan)
        dmat = build_dmat(scene.prt.delays, grid.pilot_indices, K, TS)
        x = matricize_prt(scene.prt)
        v = obs.stacked().T
        err = np.linalg.norm(v - psi @ x @ dmat) / np.linalg.norm(v)
        assert err < 1e-12


def test_ls_recovers_true_x():
    scene, plan, grid, obs = make_setup(10, num_tx=16, num_rx=16, num_joint=60)
    psi = build_psi(scene.tx_virtual_angles, scene.rx_virtual_angles, plan)
    dmat = build_dmat(scene.prt.delays, grid.pilot_indices, K, TS)
    x_hat, flags = ls_estimate_x(obs.stacked().T, psi, dmat)
    x = matricize_prt(scene.prt)
    assert np.linalg.norm(x_hat - x) / np.linalg.norm(x) < 1e-8
    assert flags == []


def test_ls_stationarity():
    rng = np.random.default_rng(11)
    for _ in range(10):
        psi = rng.standard_normal((30, 6)) + 1j * rng.standard_normal((30, 6))
        dmat = rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12))
        v = rng.standard_normal((30, 12)) + 1j * rng.standard_normal((30, 12))
        x_hat, _ = ls_estimate_x(v, psi, dmat)
        r = v - psi @ x_hat @ dmat
        stat = psi.conj().T @ r @ dmat.conj().T
        assert np.linalg.norm(stat) < 1e-8 * np.linalg.norm(v)


def test_ls_zero_observations_zero_solution():
    rng = np.random.default_rng(12)
    psi = rng.standard_normal((10, 3)) + 0j
    dmat = rng.standard_normal((2, 8)) + 0j
    x_hat, _ = ls_estimate_x(np.zeros((10, 8), complex), psi, dmat)
    assert np.allclose(x_hat, 0)


def test_ls_underdetermined_flagged():
    rng = np.random.default_rng(13)
    psi = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
    dmat = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    v = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
    x_hat, flags = ls_estimate_x(v, psi, dmat)
    assert WARN_UNDERDETERMINED in flags


def test_ls_rejects_empty():
    with pytest.raises(ValueError):
        ls_estimate_x(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)))


def ground_truth_estimate(scene, plan, grid, obs):
    psi = build_psi(scene.tx_virtual_angles, scene.rx_virtual_angles, plan)
    dmat = build_dmat(scene.prt.delays, grid.pilot_indices, K, TS)
    x_hat, flags = ls_estimate_x(obs.stacked().T, psi, dmat)
    return EstimatedMpcs(scene.tx_virtual_angles, scene.rx_virtual_angles,
                         scene.prt.delays, x_hat, flags)


def test_reconstruct_matches_cfr_oracle():
    scene, plan, grid, obs = make_setup(14, num_tx=16, num_rx=16, num_joint=60)
    est = ground_truth_estimate(scene, plan, grid, obs)
    rng = np.random.default_rng(15)
    for _ in range(30):
        t = rng.uniform(-1.5, 1.5, 2)
        r = rng.uniform(-1.5, 1.5, 2)
        k = int(rng.integers(0, K))
        assert reconstruct_cfr(est, t, r, k, K, TS) == pytest.approx(
            cfr(scene, t, r, k), rel=1e-8)


def test_reconstruct_grid_matches_scalar():
    scene, plan, grid, obs = make_setup(16, num_tx=16, num_rx=16, num_joint=60)
    est = ground_truth_estimate(scene, plan, grid, obs)
    tx_pts = np.random.default_rng(17).uniform(-1.5, 1.5, (4, 2))
    rx_pts = np.random.default_rng(18).uniform(-1.5, 1.5, (3, 2))
    ks = [0, 7, 200]
    block = reconstruct_cfr_grid(est, tx_pts, rx_pts, ks, K, TS)
    assert block.shape == (3, 3, 4)
    for j, k in enumerate(ks):
        for n in range(3):
            for m in range(4):
                assert block[j, n, m] == pytest.approx(
                    reconstruct_cfr(est, tx_pts[m], rx_pts[n], k, K, TS), rel=1e-10)


def test_single_path_gain_at_reference():
    gamma = 1.7 - 0.4j
    est = EstimatedMpcs(np.array([[0.0, 0.0]]), np.array([[0.0, 0.0]]),
                        np.array([0.0]), np.array([[gamma]]))
    assert reconstruct_cfr(est, [0, 0], [0, 0], 0, K, TS) == pytest.approx(gamma)


def test_pipeline_on_grid_noiseless_superset_free_fit():
    # the pipeline's own pilot fit must be accurate even off the true support
    rng = np.random.default_rng(19)
    scene = sample_scene(SceneConfig(), rng)
    angle_grid = AngleGrid(100)
    delay_grid = DelayGrid(100, 0.15e-6)
    scene = snap_scene_to_grids(scene, angle_grid.atoms, delay_grid.atoms)
    plan = build_plan(Region(3.0), Region(3.0), 64, 64, 200, "upa", rng)
    grid = PilotGrid(K, 16)
    obs = synthesize_pilots(scene, plan, grid, 1.0, 0.0, rng)
    est = somp_pipeline(obs, plan, angle_grid, delay_grid, TS, 0.02, 10)
    psi = build_psi(est.tx_angles, est.rx_angles, plan)
    dmat = build_dmat(est.delays, grid.pilot_indices, K, TS)
    v = obs.stacked().T
    fit = np.linalg.norm(v - psi @ est.x_hat @ dmat) / np.linalg.norm(v)
    assert fit < 0.1
    assert est.num_tx_paths <= 10 and est.num_rx_paths <= 10 and est.num_delays <= 10


def test_pipeline_scales_out_tx_power():
    rng = np.random.default_rng(20)
    scene = sample_scene(SceneConfig(), rng)
    plan = build_plan(Region(3.0), Region(3.0), 64, 64, 200, "upa", rng)
    grid = PilotGrid(K, 16)
    angle_grid = AngleGrid(100)
    delay_grid = DelayGrid(100, 0.15e-6)
    obs1 = synthesize_pilots(scene, plan, grid, 1.0, 0.0, rng)
    obs4 = synthesize_pilots(scene, plan, grid, 4.0, 0.0, rng)
    est1 = somp_pipeline(obs1, plan, angle_grid, delay_grid, TS, 0.02, 10)
    est4 = somp_pipeline(obs4, plan, angle_grid, delay_grid, TS, 0.02, 10)
    assert np.allclose(est1.x_hat, est4.x_hat, atol=1e-8)


def test_mpcs_json_roundtrip():
    rng = np.random.default_rng(21)
    est = EstimatedMpcs(rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1, (3, 2)),
                        np.sort(rng.uniform(0, 1e-7, 4)),
                        rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4)),
                        ["rank_deficient"])
    back = mpcs_from_json(mpcs_to_json(est))
    assert np.allclose(back.tx_angles, est.tx_angles)
    assert np.allclose(back.x_hat, est.x_hat)
    assert back.warn_flags == est.warn_flags
