"""Discretized angle/delay dictionaries and simultaneous OMP.

Virtual departure and arrival angles are quantized on a G x G grid over
[-1, 1]^2, delays on a G_d-point grid over (0, tau_max).  Support recovery
runs simultaneous orthogonal matching pursuit over multiple measurement
vectors, selecting at each step the atom with the largest summed correlation
against all residual columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import as_positions
from .pilots import MeasurementPlan, PilotGrid, PilotObservation


@dataclass(frozen=True)
class AngleGrid:
    """G^2 uniform grid points over [-1, 1]^2; 1-d atoms are -1 + (2g-1)/G."""

    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be positive")

    @property
    def atoms(self) -> np.ndarray:
        g = np.arange(1, self.resolution + 1)
        return -1.0 + (2.0 * g - 1.0) / self.resolution


@dataclass(frozen=True)
class DelayGrid:
    """G_d uniform delay atoms tau_max/(2 G_d) + tau_max/G_d * (g-1)."""

    resolution: int
    tau_max: float

    def __post_init__(self):
        if self.resolution < 1 or self.tau_max <= 0:
            raise ValueError("need a positive resolution and tau_max")

    @property
    def atoms(self) -> np.ndarray:
        g = np.arange(self.resolution)
        return self.tau_max / (2.0 * self.resolution) + self.tau_max / self.resolution * g


@dataclass
class SompResult:
    """Support, normalized-residual history, and final LS coefficients."""

    support: list
    residual_history: list
    coefficients: np.ndarray
    rank_deficient: bool = False


def build_angle_dictionary(grid: AngleGrid, positions, conjugate: bool = False) -> np.ndarray:
    """Dictionary of discretized field-response vectors, shape (M, G^2).

    Row m is the Kronecker product of the elevation steering vector with the
    azimuth steering vector at position m, so the azimuth grid index varies
    fastest along the columns: column g pairs azimuth atom g mod G with
    elevation atom g // G (0-based).  With conjugate=True the whole matrix is
    conjugated, which is the measurement matrix for arrival angles.
    """
    pts = as_positions(positions)
    atoms = grid.atoms
    ex = np.exp(2j * np.pi * np.outer(pts[:, 0], atoms))
    ey = np.exp(2j * np.pi * np.outer(pts[:, 1], atoms))
    mat = np.einsum("mg,mh->mgh", ey, ex).reshape(pts.shape[0], atoms.size ** 2)
    return mat.conj() if conjugate else mat


def build_delay_dictionary(grid: DelayGrid, pilot_indices, num_subcarriers: int,
                           sample_period: float) -> np.ndarray:
    """Dictionary of discretized delay-response vectors, shape (M_d, G_d)."""
    ks = np.asarray(pilot_indices, dtype=float)
    if np.any(ks < 0) or np.any(ks > num_subcarriers - 1):
        raise ValueError("pilot indices out of range")
    return np.exp(-2j * np.pi * np.outer(ks, grid.atoms) / (num_subcarriers * sample_period))


def decode_angle_index(g: int, resolution: int) -> tuple[float, float]:
    """Map a 0-based flat dictionary column index to its (azimuth_v, elevation_v).

    The azimuth index varies fastest: g_x = g mod G, g_y = g // G.
    """
    if not 0 <= g < resolution ** 2:
        raise ValueError("flat grid index out of range")
    atoms = AngleGrid(resolution).atoms
    return float(atoms[g % resolution]), float(atoms[g // resolution])


def somp(measurement: np.ndarray, observations: np.ndarray, tx_power: float,
         eps0: float, i_max: int) -> SompResult:
    """Simultaneous OMP with a residual-decrement stopping rule.

    At each iteration the unselected column with the largest summed absolute
    correlation against the residual columns is tentatively added; a joint LS
    over the extended support (with the sqrt(tx_power) pilot amplitude
    divided out of the coefficients) gives the new normalized residual
    eps = ||R||_F / ||observations||_F.  The extension is kept only when the
    decrement over the previous eps exceeds eps0; otherwise the pre-extension
    support is returned.  Ties in the correlation argmax break toward the
    lowest column index.
    """
    a = np.asarray(measurement, dtype=complex)
    v = np.asarray(observations, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if a.ndim != 2 or v.shape[0] != a.shape[0]:
        raise ValueError("measurement and observations need matching row counts")
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    amp = np.sqrt(tx_power)
    v_norm = np.linalg.norm(v)
    if v_norm == 0:
        return SompResult([], [1.0], np.zeros((0, v.shape[1]), dtype=complex))

    support: list[int] = []
    history = [1.0]
    coeffs = np.zeros((0, v.shape[1]), dtype=complex)
    residual = v.copy()
    rank_deficient = False

    for _ in range(i_max):
        scores = np.sum(np.abs(a.conj().T @ residual), axis=1)
        if support:
            scores[support] = -np.inf
        pick = int(np.argmax(scores))
        trial = support + [pick]
        sub = amp * a[:, trial]
        q, _, rank, _ = np.linalg.lstsq(sub, v, rcond=1e-10)
        new_residual = v - sub @ q
        eps = float(np.linalg.norm(new_residual) / v_norm)
        if history[-1] - eps > eps0:
            support = trial
            coeffs = q
            residual = new_residual
            history.append(eps)
            if rank < len(trial):
                rank_deficient = True
        else:
            break

    return SompResult(support, history, coeffs, rank_deficient)


@dataclass
class MpcEstimate:
    """Grid-atom estimates of the multipath component parameters."""

    tx_angles: np.ndarray
    rx_angles: np.ndarray
    delays: np.ndarray
    tx_result: SompResult = field(repr=False, default=None)
    rx_result: SompResult = field(repr=False, default=None)
    delay_result: SompResult = field(repr=False, default=None)


def estimate_angles_delays(obs: PilotObservation, plan: MeasurementPlan,
                           angle_grid: AngleGrid, delay_grid: DelayGrid,
                           sample_period: float, eps0: float, i_max: int) -> MpcEstimate:
    """Recover departure angles, arrival angles, and delays on their grids.

    Departure angles come from the transmit-sweep observations against the
    dictionary built at the step-1 positions; arrival angles from the
    receive-sweep observations against the conjugated dictionary at the
    step-2 positions; delays from the full stacked observation matrix (all
    three steps) against the delay dictionary.
    """
    grid = obs.pilot_grid
    tx_dict = build_angle_dictionary(angle_grid, plan.tx_positions)
    rx_dict = build_angle_dictionary(angle_grid, plan.rx_positions, conjugate=True)
    delay_dict = build_delay_dictionary(delay_grid, grid.pilot_indices,
                                        grid.num_subcarriers, sample_period)

    tx_res = somp(tx_dict, obs.v_tx, obs.tx_power, eps0, i_max)
    rx_res = somp(rx_dict, obs.v_rx, obs.tx_power, eps0, i_max)
    del_res = somp(delay_dict, obs.stacked(), obs.tx_power, eps0, i_max)

    g = angle_grid.resolution
    tx_angles = np.array([decode_angle_index(i, g) for i in tx_res.support], dtype=float)
    rx_angles = np.array([decode_angle_index(i, g) for i in rx_res.support], dtype=float)
    order = np.argsort(del_res.support)
    delays = delay_grid.atoms[np.asarray(del_res.support, dtype=int)[order]] \
        if del_res.support else np.empty(0)
    tx_angles = tx_angles.reshape(-1, 2)
    rx_angles = rx_angles.reshape(-1, 2)
    return MpcEstimate(tx_angles, rx_angles, np.sort(delays),
                       tx_res, rx_res, del_res)
