"""Alternating projected-gradient refinement of angle and delay estimates.

The grid-based estimates are polished by minimizing the normalized pilot-fit
residual g(a, b) = ||V - Psi(a) Psi(a)^+ V D(b)^+ D(b)||_F^2 / ||V||_F^2
over the angle vector a and the delay vector b, with numerical gradients,
separate step sizes for the two blocks, backtracking line search under an
Armijo-Goldstein condition, and clamping to the feasible box.

Delays are handled internally in microseconds.  With delays in seconds the
gradient components are ~1e8 times larger than the angle components and the
joint sufficient-decrease test never lets the angle block move; the default
step sizes below assume the microsecond scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pilots import MeasurementPlan, PilotGrid
from .prt_ls import PINV_RCOND, EstimatedMpcs, build_dmat, build_psi, ls_estimate_x

DELAY_UNIT = 1e-6


@dataclass
class RefineConfig:
    """Line-search and iteration-budget knobs.

    step_d0 and step_min apply to delays expressed in microseconds.
    """

    step_a0: float = 0.06
    step_d0: float = 1.5e-3
    step_min: float = 1e-15
    max_outer: int = 40
    armijo_xi: float = 0.6
    shrink_kappa: float = 0.5
    fd_step: float = 1e-6

    def __post_init__(self):
        if not 0 < self.shrink_kappa < 1:
            raise ValueError("shrink factor must be in (0, 1)")
        if self.armijo_xi <= 0 or self.step_min <= 0:
            raise ValueError("armijo_xi and step_min must be positive")


@dataclass
class RefineProblem:
    """Fixed data of one refinement run (pilot fit target and geometry)."""

    v_d_T: np.ndarray
    plan: MeasurementPlan
    pilot_indices: np.ndarray
    num_subcarriers: int
    sample_period: float
    tau_max: float
    num_tx_paths: int
    num_rx_paths: int

    def __post_init__(self):
        self.v_d_T = np.asarray(self.v_d_T, dtype=complex)
        if np.linalg.norm(self.v_d_T) == 0:
            raise ValueError("observations are identically zero")


def pack_params(est: EstimatedMpcs) -> tuple[np.ndarray, np.ndarray]:
    """Flatten estimates into (a, b): a = [az_t, el_t, az_r, el_r], b in us."""
    a = np.concatenate([est.tx_angles[:, 0], est.tx_angles[:, 1],
                        est.rx_angles[:, 0], est.rx_angles[:, 1]])
    return a, est.delays / DELAY_UNIT


def unpack_params(a: np.ndarray, b: np.ndarray, num_tx: int, num_rx: int):
    """Inverse of pack_params; returns ((L_t,2), (L_r,2), delays in seconds)."""
    tx = np.column_stack([a[:num_tx], a[num_tx:2 * num_tx]])
    rx = np.column_stack([a[2 * num_tx:2 * num_tx + num_rx], a[2 * num_tx + num_rx:]])
    return tx, rx, b * DELAY_UNIT


def project_angles(a: np.ndarray) -> np.ndarray:
    return np.clip(a, -1.0, 1.0)


def project_delays(b: np.ndarray, tau_max_us: float) -> np.ndarray:
    return np.clip(b, 0.0, tau_max_us)


def _psi_of(prob: RefineProblem, a: np.ndarray) -> np.ndarray:
    tx, rx, _ = unpack_params(a, np.empty(0), prob.num_tx_paths, prob.num_rx_paths)
    return build_psi(tx, rx, prob.plan)


def _dmat_of(prob: RefineProblem, b: np.ndarray) -> np.ndarray:
    return build_dmat(b * DELAY_UNIT, prob.pilot_indices,
                      prob.num_subcarriers, prob.sample_period)


def _col_project(psi: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of the columns of v onto the column space of psi."""
    q, _, _, _ = np.linalg.lstsq(psi, v, rcond=PINV_RCOND)
    return psi @ q


def _row_project(v: np.ndarray, dmat: np.ndarray) -> np.ndarray:
    """Orthogonal projection of the rows of v onto the row space of dmat."""
    return v @ (np.linalg.pinv(dmat, rcond=PINV_RCOND) @ dmat)


def objective(prob: RefineProblem, a: np.ndarray, b: np.ndarray) -> float:
    """Normalized squared fit residual; lies in [0, 1]."""
    fitted = _col_project(_psi_of(prob, a), _row_project(prob.v_d_T, _dmat_of(prob, b)))
    r = prob.v_d_T - fitted
    return float(np.linalg.norm(r) ** 2 / np.linalg.norm(prob.v_d_T) ** 2)


def numerical_gradient(prob: RefineProblem, a: np.ndarray, b: np.ndarray,
                       cfg: RefineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient of the objective in (a, b).

    Perturbations are not projected, so the gradient is that of the
    unconstrained objective.  The row projection V D^+ D is constant under
    angle perturbations and the column projection under delay perturbations,
    so each is computed once per call.
    """
    tau_max_us = prob.tau_max / DELAY_UNIT
    vn2 = float(np.linalg.norm(prob.v_d_T) ** 2)

    def angle_obj(avec, vq):
        r = prob.v_d_T - _col_project(_psi_of(prob, avec), vq)
        return float(np.linalg.norm(r) ** 2 / vn2)

    def delay_obj(bvec, pv):
        r = prob.v_d_T - _row_project(pv, _dmat_of(prob, bvec))
        return float(np.linalg.norm(r) ** 2 / vn2)

    vq = _row_project(prob.v_d_T, _dmat_of(prob, b))
    grad_a = np.empty_like(a)
    h = cfg.fd_step
    for i in range(a.size):
        ap, am = a.copy(), a.copy()
        ap[i] += h
        am[i] -= h
        grad_a[i] = (angle_obj(ap, vq) - angle_obj(am, vq)) / (2.0 * h)

    pv = _col_project(_psi_of(prob, a), prob.v_d_T)
    grad_b = np.empty_like(b)
    hd = cfg.fd_step * tau_max_us
    for j in range(b.size):
        bp, bm = b.copy(), b.copy()
        bp[j] += hd
        bm[j] -= hd
        grad_b[j] = (delay_obj(bp, pv) - delay_obj(bm, pv)) / (2.0 * hd)

    return grad_a, grad_b


def refine(init: EstimatedMpcs, prob: RefineProblem, cfg: RefineConfig):
    """Run the alternating refinement from a grid-based initialization.

    Returns (refined EstimatedMpcs, trace).  Each outer iteration computes
    the gradients once, then backtracks from (step_a0, step_d0), shrinking
    both steps by shrink_kappa until the sufficient-decrease condition
    g(new) <= g(old) - xi*step_a*||grad_a||^2 - xi*step_d*||grad_b||^2
    holds; if both steps fall below step_min the step is rejected and the
    previous point kept.  The trace rows are
    (iteration, objective, step_a, step_d, accepted); row 0 is the
    initial point.
    """
    tau_max_us = prob.tau_max / DELAY_UNIT
    a, b = pack_params(init)
    a = project_angles(a)
    b = project_delays(b, tau_max_us)
    g_cur = objective(prob, a, b)
    trace = [(0, g_cur, cfg.step_a0, cfg.step_d0, True)]

    for it in range(1, cfg.max_outer + 1):
        grad_a, grad_b = numerical_gradient(prob, a, b, cfg)
        ga2 = float(grad_a @ grad_a)
        gb2 = float(grad_b @ grad_b)
        step_a, step_d = cfg.step_a0, cfg.step_d0
        accepted = False
        while step_a >= cfg.step_min or step_d >= cfg.step_min:
            a_new = project_angles(a - step_a * grad_a)
            b_new = project_delays(b - step_d * grad_b, tau_max_us)
            g_new = objective(prob, a_new, b_new)
            if g_new <= g_cur - cfg.armijo_xi * (step_a * ga2 + step_d * gb2):
                a, b, g_cur = a_new, b_new, g_new
                accepted = True
                break
            step_a *= cfg.shrink_kappa
            step_d *= cfg.shrink_kappa
        trace.append((it, g_cur, step_a, step_d, accepted))

    tx, rx, delays = unpack_params(a, b, prob.num_tx_paths, prob.num_rx_paths)
    psi = build_psi(tx, rx, prob.plan)
    dmat = build_dmat(delays, prob.pilot_indices, prob.num_subcarriers, prob.sample_period)
    x_hat, flags = ls_estimate_x(prob.v_d_T, psi, dmat)
    merged = list(init.warn_flags)
    for fl in flags:
        if fl not in merged:
            merged.append(fl)
    return EstimatedMpcs(tx, rx, delays, x_hat, merged), trace
