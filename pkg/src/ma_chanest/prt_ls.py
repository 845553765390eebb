"""Least-squares path-response-tensor estimation and CFR reconstruction.

Given estimated departure angles, arrival angles, and delays, the stacked
pilot observations factor as V_d^T = Psi * X * D, with Psi built from the
measurement positions and the angle estimates, D from the pilot subcarriers
and the delay estimates, and X the matricized path-response tensor.  X is
recovered by a two-sided pseudoinverse solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import as_angles, as_positions, drv_matrix, frv_matrix
from .pilots import MeasurementPlan, PilotGrid, PilotObservation
from .somp import AngleGrid, DelayGrid, estimate_angles_delays

PINV_RCOND = 1e-10

WARN_RANK_DEFICIENT = "rank_deficient"
WARN_UNDERDETERMINED = "underdetermined"


@dataclass
class EstimatedMpcs:
    """Estimated multipath parameters plus the matricized gain matrix."""

    tx_angles: np.ndarray
    rx_angles: np.ndarray
    delays: np.ndarray
    x_hat: np.ndarray
    warn_flags: list = field(default_factory=list)

    def __post_init__(self):
        self.tx_angles = as_angles(self.tx_angles)
        self.rx_angles = as_angles(self.rx_angles)
        self.delays = np.asarray(self.delays, dtype=float)
        self.x_hat = np.asarray(self.x_hat, dtype=complex)
        lt, lr, ld = len(self.tx_angles), len(self.rx_angles), self.delays.size
        if self.x_hat.shape != (lt * lr, ld):
            raise ValueError("x_hat must be (L_t*L_r, L_d)")

    @property
    def num_tx_paths(self) -> int:
        return len(self.tx_angles)

    @property
    def num_rx_paths(self) -> int:
        return len(self.rx_angles)

    @property
    def num_delays(self) -> int:
        return self.delays.size


def build_psi(tx_angles, rx_angles, plan: MeasurementPlan) -> np.ndarray:
    """Measurement operator, shape (M_a, L_t*L_r).

    Row a is kron(g(t_a)^T, f(r_a)^H) with t_a, r_a the positions of the
    a-th measurement; the parked antenna sits at the origin where its
    field-response vector is all ones.  Column l_t*L_r + l_r pairs the
    l_t-th departure angle with the l_r-th arrival angle.
    """
    tx_angles = as_angles(tx_angles)
    rx_angles = as_angles(rx_angles)
    g = frv_matrix(plan.all_tx_positions(), tx_angles)
    f = frv_matrix(plan.all_rx_positions(), rx_angles)
    lr = len(rx_angles)
    lt = len(tx_angles)
    return np.einsum("at,ar->atr", g, f.conj()).reshape(-1, lt * lr)


def build_dmat(delays, pilot_indices, num_subcarriers: int, sample_period: float) -> np.ndarray:
    """Delay operator, shape (L_d, M_d): column m is the DRV at pilot k_m."""
    return drv_matrix(pilot_indices, delays, num_subcarriers, sample_period)


def ls_estimate_x(v_d_T: np.ndarray, psi: np.ndarray, dmat: np.ndarray):
    """Solve min_X ||V_d^T - Psi X D||_F via X = pinv(Psi) V_d^T pinv(D).

    Returns (x_hat, warn_flags).  Rank deficiency of either operator falls
    back to the minimum-norm solution and is reported as a flag, not an
    exception.
    """
    v = np.asarray(v_d_T, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    dmat = np.asarray(dmat, dtype=complex)
    if v.size == 0 or psi.size == 0 or dmat.size == 0:
        raise ValueError("inputs must be non-empty")
    if psi.shape[0] != v.shape[0] or dmat.shape[1] != v.shape[1]:
        raise ValueError("inconsistent shapes")
    flags = []
    if psi.shape[1] > psi.shape[0]:
        flags.append(WARN_UNDERDETERMINED)
    left, res0, rank_l, _ = np.linalg.lstsq(psi, v, rcond=PINV_RCOND)
    x_hat = left @ np.linalg.pinv(dmat, rcond=PINV_RCOND)
    rank_d = np.linalg.matrix_rank(dmat, tol=None)
    if rank_l < psi.shape[1] or rank_d < min(dmat.shape):
        flags.append(WARN_RANK_DEFICIENT)
    return x_hat, flags


def reconstruct_cfr(est: EstimatedMpcs, t, r, k: int, num_subcarriers: int,
                    sample_period: float) -> complex:
    """Estimated CFR at a position pair: (g^T kron f^H) X d(k)."""
    g = frv_matrix(t, est.tx_angles)[0]
    f = frv_matrix(r, est.rx_angles)[0]
    d = drv_matrix([k], est.delays, num_subcarriers, sample_period)[:, 0]
    s = (est.x_hat @ d).reshape(est.num_rx_paths, est.num_tx_paths, order="F")
    return complex(f.conj() @ s @ g)


def reconstruct_cfr_grid(est: EstimatedMpcs, tx_positions, rx_positions, subcarriers,
                         num_subcarriers: int, sample_period: float) -> np.ndarray:
    """Estimated CFRs for all Tx/Rx position combinations.

    Returns an array of shape (n_k, N_r, N_t): slice k is the matrix
    conj(F) S_k G^T with S_k the tensor slice at subcarrier k.
    """
    g = frv_matrix(as_positions(tx_positions), est.tx_angles)
    f = frv_matrix(as_positions(rx_positions), est.rx_angles)
    d = drv_matrix(subcarriers, est.delays, num_subcarriers, sample_period)
    lr, lt = est.num_rx_paths, est.num_tx_paths
    s = (est.x_hat @ d).reshape(lr, lt, d.shape[1], order="F")
    return np.einsum("nr,rtk,mt->knm", f.conj(), s, g)


def somp_pipeline(obs: PilotObservation, plan: MeasurementPlan, angle_grid: AngleGrid,
                  delay_grid: DelayGrid, sample_period: float, eps0: float,
                  i_max: int) -> EstimatedMpcs:
    """Grid-based estimation: SOMP support recovery, then the two-sided LS.

    The pilot amplitude sqrt(tx_power) is divided out of the observations so
    x_hat estimates the matricized tensor itself.
    """
    mpc = estimate_angles_delays(obs, plan, angle_grid, delay_grid,
                                 sample_period, eps0, i_max)
    if len(mpc.tx_angles) == 0 or len(mpc.rx_angles) == 0 or mpc.delays.size == 0:
        raise ValueError("support recovery returned an empty parameter set")
    grid = obs.pilot_grid
    psi = build_psi(mpc.tx_angles, mpc.rx_angles, plan)
    dmat = build_dmat(mpc.delays, grid.pilot_indices, grid.num_subcarriers, sample_period)
    v_d_T = obs.stacked().T / np.sqrt(obs.tx_power)
    x_hat, flags = ls_estimate_x(v_d_T, psi, dmat)
    for res in (mpc.tx_result, mpc.rx_result, mpc.delay_result):
        if res is not None and res.rank_deficient and WARN_RANK_DEFICIENT not in flags:
            flags.append(WARN_RANK_DEFICIENT)
    return EstimatedMpcs(mpc.tx_angles, mpc.rx_angles, mpc.delays, x_hat, flags)


def mpcs_to_json(est: EstimatedMpcs) -> str:
    return json.dumps({
        "tx_angles": est.tx_angles.tolist(),
        "rx_angles": est.rx_angles.tolist(),
        "delays": est.delays.tolist(),
        "x_hat": [[float(z.real), float(z.imag)] for z in est.x_hat.ravel()],
        "x_hat_shape": list(est.x_hat.shape),
        "warn_flags": list(est.warn_flags),
    })


def mpcs_from_json(text: str) -> EstimatedMpcs:
    d = json.loads(text)
    x = np.array([complex(re, im) for re, im in d["x_hat"]]).reshape(d["x_hat_shape"])
    return EstimatedMpcs(
        tx_angles=np.asarray(d["tx_angles"], dtype=float),
        rx_angles=np.asarray(d["rx_angles"], dtype=float),
        delays=np.asarray(d["delays"], dtype=float),
        x_hat=x,
        warn_flags=list(d["warn_flags"]),
    )
