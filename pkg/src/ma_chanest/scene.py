"""Random multipath scene generation.

Scenes follow a geometric model with L point scatterers, so the path-response
tensor is diagonal: path l has its own departure angle, arrival angle, and
delay, and the gains sit on the (l, l, l) diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelScene, PathResponseTensor, virtual_from_physical

DEFAULT_WAVELENGTH = 299_792_458.0 / 28e9
DEFAULT_SAMPLE_PERIOD = 12.5e-9
DEFAULT_NUM_SUBCARRIERS = 256
DEFAULT_CP_LENGTH = 16
DEFAULT_TAU_MAX = 0.15e-6


@dataclass
class SceneConfig:
    """Parameters of the random scene distribution."""

    num_paths: int = 6
    tau_max: float = DEFAULT_TAU_MAX
    gain_variance: float | None = None
    wavelength: float = DEFAULT_WAVELENGTH
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    num_subcarriers: int = DEFAULT_NUM_SUBCARRIERS
    cp_length: int = DEFAULT_CP_LENGTH

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("need at least one path")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")
        if self.cp_length * self.sample_period <= self.tau_max:
            raise ValueError("cyclic prefix must cover tau_max")


def _sample_virtual_angles(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n virtual angle pairs from the cos(theta)/(2*pi) density.

    Under that density sin(theta) is uniform on [-1, 1]; azimuth phi is
    uniform on [-pi/2, pi/2].
    """
    sin_theta = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
    theta = np.arcsin(sin_theta)
    return virtual_from_physical(theta, phi)


def sample_scene(config: SceneConfig, rng) -> ChannelScene:
    """Draw one random scene.

    Draw order is fixed (delays, then tx angles, then rx angles, then gains)
    so results are reproducible for a given seed.  Delays closer together
    than sample_period/1000 are resampled to keep them distinct, then sorted.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = config.num_paths

    delays = np.sort(rng.uniform(0.0, config.tau_max, size=n))
    min_gap = config.sample_period / 1000.0
    for _ in range(1000):
        gaps = np.diff(delays)
        bad = np.where(gaps < min_gap)[0]
        if bad.size == 0:
            break
        delays[bad + 1] = rng.uniform(0.0, config.tau_max, size=bad.size)
        delays = np.sort(delays)
    else:
        raise RuntimeError("could not draw distinct delays")

    tx_angles = _sample_virtual_angles(rng, n)
    rx_angles = _sample_virtual_angles(rng, n)

    var = config.gain_variance if config.gain_variance is not None else 1.0 / n
    scale = np.sqrt(var / 2.0)
    gains_diag = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    gains = np.zeros((n, n, n), dtype=complex)
    gains[np.arange(n), np.arange(n), np.arange(n)] = gains_diag

    return ChannelScene(
        prt=PathResponseTensor(gains=gains, delays=delays),
        tx_virtual_angles=tx_angles,
        rx_virtual_angles=rx_angles,
        wavelength=config.wavelength,
        sample_period=config.sample_period,
        num_subcarriers=config.num_subcarriers,
        cp_length=config.cp_length,
        tau_max=config.tau_max,
    )


def snap_scene_to_grids(scene: ChannelScene, angle_atoms: np.ndarray,
                        delay_atoms: np.ndarray) -> ChannelScene:
    """Move every angle and delay of a scene onto the nearest grid atom.

    Each delay is assigned to a distinct atom (greedy nearest, earlier delays
    first) so the snapped delays stay strictly increasing.  Useful for
    constructing scenes that a grid-based estimator can recover exactly.
    """
    angle_atoms = np.asarray(angle_atoms, dtype=float)
    delay_atoms = np.asarray(delay_atoms, dtype=float)

    def snap_angles(angles):
        idx = np.argmin(np.abs(angles[..., None] - angle_atoms), axis=-1)
        return angle_atoms[idx]

    used = np.zeros(delay_atoms.size, dtype=bool)
    new_delays = np.empty_like(scene.prt.delays)
    for i, tau in enumerate(scene.prt.delays):
        order = np.argsort(np.abs(delay_atoms - tau))
        for j in order:
            if not used[j]:
                used[j] = True
                new_delays[i] = delay_atoms[j]
                break
    order = np.argsort(new_delays)

    return ChannelScene(
        prt=PathResponseTensor(
            gains=scene.prt.gains[:, :, order][..., :],
            delays=new_delays[order],
        ),
        tx_virtual_angles=snap_angles(scene.tx_virtual_angles),
        rx_virtual_angles=snap_angles(scene.rx_virtual_angles),
        wavelength=scene.wavelength,
        sample_period=scene.sample_period,
        num_subcarriers=scene.num_subcarriers,
        cp_length=scene.cp_length,
        tau_max=scene.tau_max,
    )
