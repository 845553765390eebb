"""Evaluation metrics: grid NMSE and achievable rate with position selection.

Both metrics discretize each movement region into a D x D grid of cell
centers.  The NMSE compares the true and reconstructed CFR over every
(tx cell, rx cell, subcarrier) triple; the rate metric picks the best
position pair on the grid according to the provided CSI and evaluates the
resulting rate on the true channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelScene, Region, drv_matrix, frv_matrix
from .prt_ls import EstimatedMpcs


@dataclass(frozen=True)
class GridSpec:
    """D x D cell-center evaluation grid per region."""

    points_per_side: int = 16

    def __post_init__(self):
        if self.points_per_side < 2:
            raise ValueError("need at least a 2 x 2 grid")

    def points(self, region: Region) -> np.ndarray:
        """Cell centers as a (D^2, 2) array, x varying fastest."""
        d = self.points_per_side
        s = region.normalized_size
        coords = -s / 2.0 + s / d * (np.arange(d) + 0.5)
        xx, yy = np.meshgrid(coords, coords, indexing="xy")
        return np.column_stack([xx.ravel(), yy.ravel()])


def _scene_slices(scene: ChannelScene, subcarriers) -> np.ndarray:
    """Tensor slices S_k = Sigma x3 d(k)^T for each subcarrier, (L_r, L_t, n_k)."""
    d = drv_matrix(subcarriers, scene.prt.delays, scene.num_subcarriers,
                   scene.sample_period)
    return np.einsum("rtd,dk->rtk", scene.prt.gains, d)


def _est_slices(est: EstimatedMpcs, subcarriers, num_subcarriers, sample_period) -> np.ndarray:
    d = drv_matrix(subcarriers, est.delays, num_subcarriers, sample_period)
    return (est.x_hat @ d).reshape(est.num_rx_paths, est.num_tx_paths,
                                   d.shape[1], order="F")


def nmse(scene: ChannelScene, est: EstimatedMpcs, grid: GridSpec,
         tx_region: Region, rx_region: Region) -> float:
    """Sum_k ||H_k - H_hat_k||_F^2 / sum_k ||H_k||_F^2 over the D^2 x D^2 grid.

    The error tensor factors as A M_k B^T with A, B position-steering
    matrices shared across subcarriers, so each Frobenius norm reduces to a
    small trace tr(M^H (A^H A) M (B^T conj B)) and the D^2 x D^2 x K tensor
    is never materialized.
    """
    tx_pts = grid.points(tx_region)
    rx_pts = grid.points(rx_region)
    ks = np.arange(scene.num_subcarriers)

    f_true = frv_matrix(rx_pts, scene.rx_virtual_angles)
    g_true = frv_matrix(tx_pts, scene.tx_virtual_angles)
    f_est = frv_matrix(rx_pts, est.rx_angles)
    g_est = frv_matrix(tx_pts, est.tx_angles)

    s_true = _scene_slices(scene, ks)
    s_est = _est_slices(est, ks, scene.num_subcarriers, scene.sample_period)

    lr_t, lt_t = s_true.shape[0], s_true.shape[1]
    lr_e, lt_e = s_est.shape[0], s_est.shape[1]
    m = np.zeros((lr_t + lr_e, lt_t + lt_e, len(ks)), dtype=complex)
    m[:lr_t, :lt_t] = s_true
    m[lr_t:, lt_t:] = -s_est

    a = np.hstack([f_true.conj(), f_est.conj()])
    b = np.hstack([g_true, g_est])
    ga = a.conj().T @ a
    gb = b.T @ b.conj()
    num = float(np.einsum("ijk,il,lmk,mj->", m.conj(), ga, m, gb).real)

    ga_t = f_true.T @ f_true.conj()
    gb_t = g_true.T @ g_true.conj()
    den = float(np.einsum("ijk,il,lmk,mj->", s_true.conj(), ga_t, s_true, gb_t).real)
    if den == 0:
        raise ValueError("true channel is identically zero on the grid")
    return num / den


def _rate_matrix(f: np.ndarray, slices: np.ndarray, g: np.ndarray,
                 snr_scale: float, num_subcarriers: int, cp_length: int) -> np.ndarray:
    """Rate for every (rx cell, tx cell) pair, shape (N_r, N_t)."""
    fc = f.conj()
    gt = g.T
    total = np.zeros((f.shape[0], g.shape[0]))
    for k in range(slices.shape[2]):
        h = fc @ slices[:, :, k] @ gt
        total += np.log2(1.0 + snr_scale * (h.real ** 2 + h.imag ** 2))
    return total / (num_subcarriers + cp_length)


def achievable_rate(scene: ChannelScene, csi, grid: GridSpec, tx_region: Region,
                    rx_region: Region, tx_power: float, noise_variance: float):
    """Max-rate position selection on the CSI, rate realized on the true channel.

    csi may be an EstimatedMpcs or the scene itself (perfect CSI).  Returns
    (rate, tx_position, rx_position); rate is bits/s/Hz including the
    cyclic-prefix penalty K/(K + K_CP).  Grid argmax ties break toward the
    lowest flat index.
    """
    tx_pts = grid.points(tx_region)
    rx_pts = grid.points(rx_region)
    ks = np.arange(scene.num_subcarriers)
    snr_scale = tx_power / noise_variance

    f_true = frv_matrix(rx_pts, scene.rx_virtual_angles)
    g_true = frv_matrix(tx_pts, scene.tx_virtual_angles)
    s_true = _scene_slices(scene, ks)
    true_rates = _rate_matrix(f_true, s_true, g_true, snr_scale,
                              scene.num_subcarriers, scene.cp_length)

    if isinstance(csi, ChannelScene):
        sel_rates = true_rates
    else:
        f_est = frv_matrix(rx_pts, csi.rx_angles)
        g_est = frv_matrix(tx_pts, csi.tx_angles)
        s_est = _est_slices(csi, ks, scene.num_subcarriers, scene.sample_period)
        sel_rates = _rate_matrix(f_est, s_est, g_est, snr_scale,
                                 scene.num_subcarriers, scene.cp_length)

    flat = int(np.argmax(sel_rates))
    ri, ti = np.unravel_index(flat, sel_rates.shape)
    return float(true_rates[ri, ti]), tx_pts[ti].copy(), rx_pts[ri].copy()


def fpa_rate(scene: ChannelScene, grid: GridSpec, tx_region: Region,
             rx_region: Region, tx_power: float, noise_variance: float) -> float:
    """Rate with both antennas fixed at the grid point nearest the origin."""
    tx_pts = grid.points(tx_region)
    rx_pts = grid.points(rx_region)
    ti = int(np.argmin(np.sum(tx_pts ** 2, axis=1)))
    ri = int(np.argmin(np.sum(rx_pts ** 2, axis=1)))
    ks = np.arange(scene.num_subcarriers)
    snr_scale = tx_power / noise_variance

    f = frv_matrix(rx_pts[ri:ri + 1], scene.rx_virtual_angles)
    g = frv_matrix(tx_pts[ti:ti + 1], scene.tx_virtual_angles)
    s = _scene_slices(scene, ks)
    h = np.einsum("nr,rtk,mt->k", f.conj(), s, g)
    total = np.sum(np.log2(1.0 + snr_scale * np.abs(h) ** 2))
    return float(total / (scene.num_subcarriers + scene.cp_length))
