"""Field-response channel model for planar movable antennas.

A wideband channel between a movable transmit antenna and a movable receive
antenna is parameterized by virtual departure/arrival angles, path delays,
and a three-way path-response tensor of complex gains.  Positions are
expressed in wavelength units, which removes the carrier wavelength from
every phase formula: a transmit antenna at ``(x, y)`` sees a per-path phase
``2*pi*(x*azimuth_v + y*elevation_v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class Position:
    """Antenna position in wavelength units, relative to the region center."""

    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Region:
    """Square movement region of size S-lambda x S-lambda centered at the origin."""

    normalized_size: float

    def __post_init__(self):
        if self.normalized_size <= 0:
            raise ValueError("region size must be positive")

    def contains(self, positions, atol: float = 1e-9) -> bool:
        pts = as_positions(positions)
        half = self.normalized_size / 2.0
        return bool(np.all(np.abs(pts) <= half + atol))


@dataclass(frozen=True)
class VirtualAngle:
    """Virtual angle pair (cos(theta)*sin(phi), sin(theta)), each in [-1, 1]."""

    azimuth_v: float
    elevation_v: float

    def __post_init__(self):
        if not (-1.0 <= self.azimuth_v <= 1.0 and -1.0 <= self.elevation_v <= 1.0):
            raise ValueError("virtual angle components must lie in [-1, 1]")


def as_positions(positions) -> np.ndarray:
    """Normalize a position argument to an (M, 2) float array."""
    if isinstance(positions, Position):
        return positions.as_array()[None, :]
    arr = np.atleast_2d(np.asarray(
        [p.as_array() if isinstance(p, Position) else p for p in np.atleast_1d(positions)]
        if not isinstance(positions, np.ndarray) else positions, dtype=float))
    if arr.shape[-1] != 2:
        raise ValueError("positions must have two coordinates")
    return arr


def as_angles(angles) -> np.ndarray:
    """Normalize an angle argument to an (L, 2) array, clamped to [-1, 1]^2.

    Accepts an (L, 2) array, a sequence of (azimuth_v, elevation_v) pairs, or
    a sequence of VirtualAngle.  User-supplied values are clamped to the
    square because the estimator's dictionary spans the full square, not only
    the physical unit disk.
    """
    if isinstance(angles, np.ndarray):
        arr = np.atleast_2d(np.asarray(angles, dtype=float))
    else:
        rows = []
        for a in angles:
            if isinstance(a, VirtualAngle):
                rows.append((a.azimuth_v, a.elevation_v))
            else:
                rows.append(tuple(a))
        arr = np.asarray(rows, dtype=float)
        arr = np.atleast_2d(arr)
    if arr.size == 0 or arr.shape[-1] != 2:
        raise ValueError("angles must be a non-empty list of (azimuth_v, elevation_v) pairs")
    return np.clip(arr, -1.0, 1.0)


def virtual_from_physical(theta, phi) -> np.ndarray:
    """Map physical elevation/azimuth angles (radians) to virtual angle pairs.

    azimuth_v = cos(theta) * sin(phi), elevation_v = sin(theta).  The result
    always lies in the closed unit disk.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta)], axis=-1)


@dataclass
class PathResponseTensor:
    """Complex path gains indexed (rx path, tx path, delay), plus the delays.

    ``gains[l_r, l_t, l_d]`` is the complex gain of the path with the l_r-th
    arrival angle, l_t-th departure angle, and l_d-th delay; a zero entry
    means no such path exists.
    """

    gains: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=complex)
        self.delays = np.asarray(self.delays, dtype=float)
        if self.gains.ndim != 3:
            raise ValueError("gains must be a 3-axis array (L_r, L_t, L_d)")
        if self.delays.shape != (self.gains.shape[2],):
            raise ValueError("delay count must match the third gains axis")
        if np.any(self.delays < 0):
            raise ValueError("delays must be nonnegative")
        if np.any(np.diff(self.delays) <= 0):
            raise ValueError("delays must be strictly increasing")

    @property
    def num_rx_paths(self) -> int:
        return self.gains.shape[0]

    @property
    def num_tx_paths(self) -> int:
        return self.gains.shape[1]

    @property
    def num_delays(self) -> int:
        return self.gains.shape[2]


@dataclass
class ChannelScene:
    """Ground-truth multipath scene plus the OFDM system constants."""

    prt: PathResponseTensor
    tx_virtual_angles: np.ndarray
    rx_virtual_angles: np.ndarray
    wavelength: float
    sample_period: float
    num_subcarriers: int
    cp_length: int
    tau_max: float

    def __post_init__(self):
        self.tx_virtual_angles = as_angles(self.tx_virtual_angles)
        self.rx_virtual_angles = as_angles(self.rx_virtual_angles)
        if len(self.tx_virtual_angles) != self.prt.num_tx_paths:
            raise ValueError("tx angle count must equal the tensor's tx-path axis")
        if len(self.rx_virtual_angles) != self.prt.num_rx_paths:
            raise ValueError("rx angle count must equal the tensor's rx-path axis")
        if np.any(self.prt.delays >= self.tau_max):
            raise ValueError("all delays must be below tau_max")
        if self.cp_length * self.sample_period <= self.tau_max:
            raise ValueError("cyclic prefix must cover tau_max")


def frv(pos, angles) -> np.ndarray:
    """Field-response vector at a position, one unit-modulus entry per path.

    Entry l is exp(j*2*pi*(x*azimuth_v_l + y*elevation_v_l)) with the
    position in wavelength units.
    """
    xy = as_positions(pos)
    if xy.shape[0] != 1:
        raise ValueError("frv expects a single position; use frv_matrix for batches")
    return frv_matrix(xy, angles)[0]


def frv_matrix(positions, angles) -> np.ndarray:
    """Stack of field-response vectors, shape (M, L)."""
    pts = as_positions(positions)
    ang = as_angles(angles)
    phase = 2.0 * np.pi * (pts @ ang.T)
    return np.exp(1j * phase)


def drv(k: int, delays, num_subcarriers: int, sample_period: float) -> np.ndarray:
    """Delay-response vector at subcarrier k: exp(-j*2*pi*k*tau/(K*T_s))."""
    if not 0 <= k <= num_subcarriers - 1:
        raise ValueError("subcarrier index out of range")
    delays = np.asarray(delays, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be nonnegative")
    return np.exp(-2j * np.pi * k * delays / (num_subcarriers * sample_period))


def drv_matrix(subcarriers, delays, num_subcarriers: int, sample_period: float) -> np.ndarray:
    """Delay-response vectors for several subcarriers, shape (L_d, len(ks))."""
    ks = np.asarray(subcarriers, dtype=float)
    delays = np.asarray(delays, dtype=float)
    return np.exp(-2j * np.pi * np.outer(delays, ks) / (num_subcarriers * sample_period))


def cfr(scene: ChannelScene, t, r, k: int) -> complex:
    """Channel frequency response h(t, r, k) = f(r)^H (Sigma x3 d(k)^T) g(t)."""
    g = frv(t, scene.tx_virtual_angles)
    f = frv(r, scene.rx_virtual_angles)
    d = drv(k, scene.prt.delays, scene.num_subcarriers, scene.sample_period)
    return complex(np.einsum("r,rtd,t,d->", f.conj(), scene.prt.gains, g, d))


def cfr_block(scene: ChannelScene, tx_positions, rx_positions, subcarriers) -> np.ndarray:
    """CFRs for paired Tx/Rx positions over several subcarriers, shape (M, n_k).

    Row m pairs tx_positions[m] with rx_positions[m]; positions broadcast
    against each other when one side is a single point.
    """
    tx = as_positions(tx_positions)
    rx = as_positions(rx_positions)
    if tx.shape[0] == 1 and rx.shape[0] > 1:
        tx = np.broadcast_to(tx, rx.shape)
    if rx.shape[0] == 1 and tx.shape[0] > 1:
        rx = np.broadcast_to(rx, tx.shape)
    g = frv_matrix(tx, scene.tx_virtual_angles)
    f = frv_matrix(rx, scene.rx_virtual_angles)
    d = drv_matrix(subcarriers, scene.prt.delays, scene.num_subcarriers, scene.sample_period)
    return np.einsum("mr,rtd,mt,dk->mk", f.conj(), scene.prt.gains, g, d)


def matricize_prt(prt: PathResponseTensor) -> np.ndarray:
    """Matricize the path-response tensor to shape (L_t*L_r, L_d).

    Column l_d is vec of the l_d-th frontal slice (column-major), i.e. the
    L_t lateral slices stacked vertically; row l_t*L_r + l_r holds
    gains[l_r, l_t, l_d].
    """
    lr, lt, ld = prt.gains.shape
    return prt.gains.reshape(lr * lt, ld, order="F")


def devectorize_x(x: np.ndarray, num_tx: int, num_rx: int, delays) -> PathResponseTensor:
    """Inverse of matricize_prt: reshape (L_t*L_r, L_d) back to a tensor."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != num_tx * num_rx:
        raise ValueError("row count must equal num_tx * num_rx")
    gains = x.reshape(num_rx, num_tx, x.shape[1], order="F")
    return PathResponseTensor(gains=gains, delays=np.asarray(delays, dtype=float))
