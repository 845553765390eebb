"""Pilot placement, antenna measurement trajectories, and received pilots.

Estimation uses a three-step measurement protocol: first the transmit
antenna sweeps M_t positions while the receive antenna parks at the region
center, then the receive antenna sweeps M_r positions with the transmitter
parked, and finally both move jointly through M_c random position pairs.
All pilot symbols equal one and are sent on equally spaced subcarriers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelScene, Region, as_positions, cfr_block


@dataclass(frozen=True)
class PilotGrid:
    """Equally spaced pilot subcarriers: indices 0, spacing, 2*spacing, ..."""

    num_subcarriers: int
    spacing: int

    def __post_init__(self):
        if self.spacing < 1 or self.num_subcarriers % self.spacing != 0:
            raise ValueError("spacing must divide the subcarrier count")

    @property
    def num_pilots(self) -> int:
        return self.num_subcarriers // self.spacing

    @property
    def pilot_indices(self) -> np.ndarray:
        return np.arange(self.num_pilots) * self.spacing


def gen_positions(region: Region, count: int, layout: str, rng=None) -> np.ndarray:
    """Generate measurement positions inside a square region.

    layout 'upa': count must be a perfect square; a cell-centered uniform
    grid with spacing S/sqrt(count).  layout 'edge': count must be divisible
    by 4; points spaced 4S/count along the region border, counterclockwise
    from the bottom-left corner.  layout 'random': uniform in the region.
    """
    s = region.normalized_size
    if layout == "upa":
        side = round(np.sqrt(count))
        if side * side != count:
            raise ValueError("upa layout needs a perfect-square count")
        step = s / side
        coords = -s / 2.0 + step * (np.arange(side) + 0.5)
        xx, yy = np.meshgrid(coords, coords, indexing="xy")
        return np.column_stack([xx.ravel(), yy.ravel()])
    if layout == "edge":
        if count % 4 != 0:
            raise ValueError("edge layout needs a count divisible by 4")
        step = 4.0 * s / count
        n_side = count // 4
        t = step * np.arange(n_side)
        half = s / 2.0
        bottom = np.column_stack([-half + t, np.full(n_side, -half)])
        right = np.column_stack([np.full(n_side, half), -half + t])
        top = np.column_stack([half - t, np.full(n_side, half)])
        left = np.column_stack([np.full(n_side, -half), half - t])
        return np.vstack([bottom, right, top, left])
    if layout == "random":
        if rng is None:
            raise ValueError("random layout needs an rng")
        return rng.uniform(-s / 2.0, s / 2.0, size=(count, 2))
    raise ValueError(f"unknown layout {layout!r}")


@dataclass
class MeasurementPlan:
    """Positions visited in the three measurement steps."""

    tx_positions: np.ndarray
    rx_positions: np.ndarray
    joint_tx_positions: np.ndarray
    joint_rx_positions: np.ndarray
    tx_region: Region = field(default_factory=lambda: Region(3.0))
    rx_region: Region = field(default_factory=lambda: Region(3.0))

    def __post_init__(self):
        self.tx_positions = as_positions(self.tx_positions)
        self.rx_positions = as_positions(self.rx_positions)
        self.joint_tx_positions = as_positions(self.joint_tx_positions)
        self.joint_rx_positions = as_positions(self.joint_rx_positions)
        if self.joint_tx_positions.shape != self.joint_rx_positions.shape:
            raise ValueError("joint steps need equally many tx and rx positions")
        for pts, reg in [(self.tx_positions, self.tx_region),
                         (self.joint_tx_positions, self.tx_region),
                         (self.rx_positions, self.rx_region),
                         (self.joint_rx_positions, self.rx_region)]:
            if len(pts) and not reg.contains(pts):
                raise ValueError("measurement positions must stay inside the region")

    @property
    def num_tx(self) -> int:
        return len(self.tx_positions)

    @property
    def num_rx(self) -> int:
        return len(self.rx_positions)

    @property
    def num_joint(self) -> int:
        return len(self.joint_tx_positions)

    @property
    def num_total(self) -> int:
        return self.num_tx + self.num_rx + self.num_joint

    def all_tx_positions(self) -> np.ndarray:
        """Tx position for every measurement, in protocol order (M_a, 2)."""
        origin = np.zeros((self.num_rx, 2))
        return np.vstack([self.tx_positions, origin, self.joint_tx_positions])

    def all_rx_positions(self) -> np.ndarray:
        origin = np.zeros((self.num_tx, 2))
        return np.vstack([origin, self.rx_positions, self.joint_rx_positions])


def build_plan(tx_region: Region, rx_region: Region, num_tx: int, num_rx: int,
               num_joint: int, layout: str, rng) -> MeasurementPlan:
    """Build a three-step plan; joint-step positions are always random."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    tx = gen_positions(tx_region, num_tx, layout, rng)
    rx = gen_positions(rx_region, num_rx, layout, rng)
    jtx = gen_positions(tx_region, num_joint, "random", rng)
    jrx = gen_positions(rx_region, num_joint, "random", rng)
    return MeasurementPlan(tx, rx, jtx, jrx, tx_region, rx_region)


@dataclass
class PilotObservation:
    """Noisy pilot-subcarrier channel observations from the three steps.

    Each V matrix has one row per measurement position and one column per
    pilot subcarrier.
    """

    v_tx: np.ndarray
    v_rx: np.ndarray
    v_joint: np.ndarray
    pilot_grid: PilotGrid
    tx_power: float
    noise_variance: float

    def stacked(self) -> np.ndarray:
        """All observations as an (M_d, M_a) matrix, columns in protocol order."""
        return np.hstack([self.v_tx.T, self.v_rx.T, self.v_joint.T])


def synthesize_pilots(scene: ChannelScene, plan: MeasurementPlan, grid: PilotGrid,
                      tx_power: float, noise_variance: float, rng) -> PilotObservation:
    """Simulate the received pilots: sqrt(p_t) * h + circular complex noise.

    The channel values are evaluated directly from the scene tensor, not from
    any dictionary factorization.  Noise is drawn step by step (tx sweep,
    rx sweep, joint) so the stream order is reproducible.
    """
    if grid.num_subcarriers != scene.num_subcarriers:
        raise ValueError("pilot grid and scene disagree on the subcarrier count")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ks = grid.pilot_indices
    amp = np.sqrt(tx_power)
    sig = np.sqrt(noise_variance / 2.0)
    origin = np.zeros((1, 2))

    def noisy(h):
        w = sig * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
        return amp * h + w

    v_tx = noisy(cfr_block(scene, plan.tx_positions, origin, ks))
    v_rx = noisy(cfr_block(scene, origin, plan.rx_positions, ks))
    v_joint = noisy(cfr_block(scene, plan.joint_tx_positions, plan.joint_rx_positions, ks))
    return PilotObservation(v_tx, v_rx, v_joint, grid, tx_power, noise_variance)


def _complex_to_json(a: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()]


def _complex_from_json(data, shape):
    arr = np.array([complex(re, im) for re, im in data])
    return arr.reshape(shape)


def observation_to_json(obs: PilotObservation) -> str:
    """Serialize an observation (complex numbers as [real, imag] pairs)."""
    return json.dumps({
        "num_subcarriers": obs.pilot_grid.num_subcarriers,
        "pilot_spacing": obs.pilot_grid.spacing,
        "tx_power": obs.tx_power,
        "noise_variance": obs.noise_variance,
        "v_tx_shape": list(obs.v_tx.shape),
        "v_rx_shape": list(obs.v_rx.shape),
        "v_joint_shape": list(obs.v_joint.shape),
        "v_tx": _complex_to_json(obs.v_tx),
        "v_rx": _complex_to_json(obs.v_rx),
        "v_joint": _complex_to_json(obs.v_joint),
    })


def observation_from_json(text: str) -> PilotObservation:
    d = json.loads(text)
    grid = PilotGrid(d["num_subcarriers"], d["pilot_spacing"])
    return PilotObservation(
        v_tx=_complex_from_json(d["v_tx"], d["v_tx_shape"]),
        v_rx=_complex_from_json(d["v_rx"], d["v_rx_shape"]),
        v_joint=_complex_from_json(d["v_joint"], d["v_joint_shape"]),
        pilot_grid=grid,
        tx_power=d["tx_power"],
        noise_variance=d["noise_variance"],
    )


def plan_to_json(plan: MeasurementPlan) -> str:
    return json.dumps({
        "tx_region": plan.tx_region.normalized_size,
        "rx_region": plan.rx_region.normalized_size,
        "tx_positions": plan.tx_positions.tolist(),
        "rx_positions": plan.rx_positions.tolist(),
        "joint_tx_positions": plan.joint_tx_positions.tolist(),
        "joint_rx_positions": plan.joint_rx_positions.tolist(),
    })


def plan_from_json(text: str) -> MeasurementPlan:
    d = json.loads(text)
    return MeasurementPlan(
        tx_positions=np.asarray(d["tx_positions"], dtype=float),
        rx_positions=np.asarray(d["rx_positions"], dtype=float),
        joint_tx_positions=np.asarray(d["joint_tx_positions"], dtype=float),
        joint_rx_positions=np.asarray(d["joint_rx_positions"], dtype=float),
        tx_region=Region(d["tx_region"]),
        rx_region=Region(d["rx_region"]),
    )
