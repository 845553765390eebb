import numpy as np
import pytest

from ma_chanest.channel import (ChannelScene, PathResponseTensor, Position,
                                Region, VirtualAngle, as_angles, cfr,
                                cfr_block, devectorize_x, drv, drv_matrix,
                                frv, frv_matrix, matricize_prt,
                                virtual_from_physical)


def random_scene(rng, num_rx=3, num_tx=4, num_delays=5, K=64, ts=12.5e-9):
    gains = rng.standard_normal((num_rx, num_tx, num_delays)) \
        + 1j * rng.standard_normal((num_rx, num_tx, num_delays))
    delays = np.sort(rng.uniform(1e-9, 0.14e-6, num_delays))
    return ChannelScene(
        prt=PathResponseTensor(gains, delays),
        tx_virtual_angles=rng.uniform(-1, 1, (num_tx, 2)),
        rx_virtual_angles=rng.uniform(-1, 1, (num_rx, 2)),
        wavelength=0.0107, sample_period=ts, num_subcarriers=K,
        cp_length=16, tau_max=0.15e-6)


def brute_force_cfr(scene, t, r, k):
    """Triple loop over tensor entries, straight from the model definition."""
    total = 0.0 + 0.0j
    ts = scene.sample_period
    for lr in range(scene.prt.num_rx_paths):
        fr = np.exp(1j * 2 * np.pi * (t_dot(r, scene.rx_virtual_angles[lr])))
        for lt in range(scene.prt.num_tx_paths):
            gt = np.exp(1j * 2 * np.pi * (t_dot(t, scene.tx_virtual_angles[lt])))
            for ld in range(scene.prt.num_delays):
                dk = np.exp(-1j * 2 * np.pi * k * scene.prt.delays[ld]
                            / (scene.num_subcarriers * ts))
                total += np.conj(fr) * scene.prt.gains[lr, lt, ld] * gt * dk
    return total


def t_dot(pos, angle):
    return pos[0] * angle[0] + pos[1] * angle[1]


def test_frv_at_origin_is_all_ones():
    angles = [(0.3, -0.5), (0.9, 0.1)]
    assert np.allclose(frv(Position(0, 0), angles), 1.0)


def test_frv_single_path_phase():
    v = frv(Position(0.25, 0.5), [(1.0, 0.0)])
    assert np.allclose(v, np.exp(1j * np.pi / 2))


def test_frv_unit_modulus():
    rng = np.random.default_rng(0)
    mat = frv_matrix(rng.uniform(-2, 2, (20, 2)), rng.uniform(-1, 1, (7, 2)))
    assert np.allclose(np.abs(mat), 1.0)


def test_drv_at_k0_is_ones():
    assert np.allclose(drv(0, [1e-9, 5e-8], 256, 12.5e-9), 1.0)


def test_drv_known_phase():
    ts = 12.5e-9
    v = drv(1, [ts], 256, ts)
    assert np.allclose(v, np.exp(-2j * np.pi / 256))


def test_drv_rejects_bad_subcarrier():
    with pytest.raises(ValueError):
        drv(256, [1e-9], 256, 12.5e-9)


def test_cfr_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        scene = random_scene(rng)
        t = rng.uniform(-1.5, 1.5, 2)
        r = rng.uniform(-1.5, 1.5, 2)
        k = int(rng.integers(0, scene.num_subcarriers))
        assert cfr(scene, t, r, k) == pytest.approx(brute_force_cfr(scene, t, r, k),
                                                    rel=1e-11)


def test_cfr_block_matches_scalar():
    rng = np.random.default_rng(2)
    scene = random_scene(rng)
    tx = rng.uniform(-1, 1, (5, 2))
    rx = rng.uniform(-1, 1, (5, 2))
    ks = [0, 3, 17]
    block = cfr_block(scene, tx, rx, ks)
    for m in range(5):
        for j, k in enumerate(ks):
            assert block[m, j] == pytest.approx(cfr(scene, tx[m], rx[m], k), rel=1e-11)


def test_matricize_column_major_layout():
    rng = np.random.default_rng(3)
    gains = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    prt = PathResponseTensor(gains, np.array([1e-9, 2e-9, 3e-9, 4e-9]))
    x = matricize_prt(prt)
    for lr in range(2):
        for lt in range(3):
            for ld in range(4):
                assert x[lt * 2 + lr, ld] == gains[lr, lt, ld]


def test_matricize_devectorize_roundtrip():
    rng = np.random.default_rng(4)
    gains = rng.standard_normal((3, 5, 2)) + 1j * rng.standard_normal((3, 5, 2))
    prt = PathResponseTensor(gains, np.array([1e-9, 9e-9]))
    back = devectorize_x(matricize_prt(prt), 5, 3, prt.delays)
    assert np.allclose(back.gains, gains)


def test_kronecker_identity_matches_tensor_form():
    # h(t, r, k) = (g^T kron f^H) X d(k) with X the matricized tensor
    rng = np.random.default_rng(5)
    for _ in range(50):
        scene = random_scene(rng)
        t = rng.uniform(-1.5, 1.5, 2)
        r = rng.uniform(-1.5, 1.5, 2)
        k = int(rng.integers(0, scene.num_subcarriers))
        g = frv(t, scene.tx_virtual_angles)
        f = frv(r, scene.rx_virtual_angles)
        d = drv(k, scene.prt.delays, scene.num_subcarriers, scene.sample_period)
        x = matricize_prt(scene.prt)
        kron_val = np.kron(g, f.conj()) @ x @ d
        assert kron_val == pytest.approx(cfr(scene, t, r, k), rel=1e-12)


def test_virtual_from_physical_in_unit_disk():
    rng = np.random.default_rng(6)
    theta = rng.uniform(-np.pi / 2, np.pi / 2, 200)
    phi = rng.uniform(-np.pi / 2, np.pi / 2, 200)
    v = virtual_from_physical(theta, phi)
    assert np.all(np.sum(v ** 2, axis=-1) <= 1.0 + 1e-12)


def test_virtual_angle_validation():
    with pytest.raises(ValueError):
        VirtualAngle(1.2, 0.0)


def test_as_angles_clamps_to_square():
    arr = as_angles(np.array([[1.4, -2.0], [0.2, 0.3]]))
    assert arr.max() <= 1.0 and arr.min() >= -1.0
    assert np.allclose(arr[1], [0.2, 0.3])


def test_delays_must_increase():
    with pytest.raises(ValueError):
        PathResponseTensor(np.zeros((1, 1, 2), complex), np.array([2e-9, 1e-9]))


def test_scene_requires_cp_covering_tau_max():
    with pytest.raises(ValueError):
        ChannelScene(
            prt=PathResponseTensor(np.ones((1, 1, 1), complex), np.array([0.14e-6])),
            tx_virtual_angles=[(0.0, 0.0)], rx_virtual_angles=[(0.0, 0.0)],
            wavelength=0.0107, sample_period=12.5e-9, num_subcarriers=256,
            cp_length=8, tau_max=0.15e-6)


def test_region_contains():
    reg = Region(3.0)
    assert reg.contains(np.array([[1.5, -1.5]]))
    assert not reg.contains(np.array([[1.6, 0.0]]))


def test_drv_matrix_matches_drv():
    delays = np.array([1e-9, 7e-8])
    ks = [0, 5, 100]
    mat = drv_matrix(ks, delays, 256, 12.5e-9)
    for j, k in enumerate(ks):
        assert np.allclose(mat[:, j], drv(k, delays, 256, 12.5e-9))
